use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};

/// Norm used on the predictive covariance in the chart-exit test.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovarianceNorm {
    #[default]
    Frobenius,
    Operator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GprConfig {
    /// Initial diagonal noise `σ²`; multiplied by 10 while the factorization fails.
    pub noise: f64,
    /// Largest noise tried before reporting a conditioning error.
    pub max_noise: f64,
    pub prior_variance: f64,
    /// Subtract the target mean before fitting and add it back on prediction.
    pub center_targets: bool,
}

impl Default for GprConfig {
    fn default() -> Self {
        Self {
            noise: 1e-10,
            max_noise: 1e-4,
            prior_variance: 1.0,
            center_targets: false,
        }
    }
}

/// Serialized form of a [`GprModel`]; the factorization is rebuilt on load.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct GprParts {
    inputs: Matrix,
    alpha: Matrix,
    mean: Vector,
    length_scale: f64,
    noise: f64,
    prior_variance: f64,
}

/// Gaussian-process regression with the squared-exponential kernel
/// `s² exp(−‖x − x'‖² / 2ν²)` and independent outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "GprParts", into = "GprParts")]
pub struct GprModel {
    /// Training inputs, one per row.
    inputs: Matrix,
    /// Coefficients, one column per output.
    alpha: Matrix,
    /// Constant prior mean of each output.
    mean: Vector,
    length_scale: f64,
    /// Noise actually used, after any jitter escalation.
    noise: f64,
    prior_variance: f64,
    /// Lower Cholesky factor of `K + σ²I`.
    factor: Matrix,
}

impl From<GprModel> for GprParts {
    fn from(m: GprModel) -> Self {
        Self {
            inputs: m.inputs,
            alpha: m.alpha,
            mean: m.mean,
            length_scale: m.length_scale,
            noise: m.noise,
            prior_variance: m.prior_variance,
        }
    }
}

impl TryFrom<GprParts> for GprModel {
    type Error = Error;

    fn try_from(p: GprParts) -> Result<Self> {
        if p.alpha.nrows() != p.inputs.nrows() || p.mean.len() != p.alpha.ncols() {
            return Err(Error::Format("inconsistent GPR dimensions".into()));
        }
        let gram = kernel_matrix(&p.inputs, p.length_scale, p.prior_variance);
        let factor = factorize(&gram, p.noise).ok_or(Error::Conditioning { jitter: p.noise })?;
        Ok(Self {
            inputs: p.inputs,
            alpha: p.alpha,
            mean: p.mean,
            length_scale: p.length_scale,
            noise: p.noise,
            prior_variance: p.prior_variance,
            factor,
        })
    }
}

fn sq_dist_rows(a: &Matrix, i: usize, b: &Matrix, j: usize) -> f64 {
    (0..a.ncols()).map(|c| (a[(i, c)] - b[(j, c)]).powi(2)).sum()
}

fn kernel_matrix(x: &Matrix, nu: f64, s2: f64) -> Matrix {
    let k = x.nrows();
    let scale = -0.5 / (nu * nu);
    let mut out = Matrix::zeros(k, k);
    for i in 0..k {
        out[(i, i)] = s2;
        for j in 0..i {
            let v = s2 * (scale * sq_dist_rows(x, i, x, j)).exp();
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

fn factorize(gram: &Matrix, noise: f64) -> Option<Matrix> {
    let n = gram.nrows();
    let shifted = gram + Matrix::identity(n, n) * noise;
    shifted.cholesky().map(|c| c.unpack())
}

/// Fit `targets` (one row per input row) with length scale `nu`.
pub fn gpr_fit(inputs: &Matrix, targets: &Matrix, nu: f64, config: &GprConfig) -> Result<GprModel> {
    if inputs.nrows() == 0 || inputs.nrows() != targets.nrows() {
        return Err(Error::Dimension(format!(
            "GPR needs matching non-empty inputs and targets, got {} and {} rows",
            inputs.nrows(),
            targets.nrows()
        )));
    }
    if !(nu > 0.0) || !(config.prior_variance > 0.0) || !(config.noise >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "GPR needs nu > 0, prior variance > 0 and noise ≥ 0 (nu = {nu})"
        )));
    }
    let e = targets.ncols();
    let mean = if config.center_targets {
        Vector::from_fn(e, |c, _| targets.column(c).mean())
    } else {
        Vector::zeros(e)
    };
    let centered = Matrix::from_fn(targets.nrows(), e, |i, c| targets[(i, c)] - mean[c]);
    let gram = kernel_matrix(inputs, nu, config.prior_variance);
    let mut noise = config.noise.max(f64::MIN_POSITIVE);
    let factor = loop {
        if let Some(f) = factorize(&gram, noise) {
            break f;
        }
        noise *= 10.0;
        if noise > config.max_noise {
            return Err(Error::Conditioning { jitter: noise / 10.0 });
        }
    };
    let mut alpha = centered;
    // (K + σ²I) α = y via L Lᵀ
    factor.solve_lower_triangular_mut(&mut alpha);
    factor.tr_solve_lower_triangular_mut(&mut alpha);
    Ok(GprModel {
        inputs: inputs.clone(),
        alpha,
        mean,
        length_scale: nu,
        noise,
        prior_variance: config.prior_variance,
        factor,
    })
}

impl GprModel {
    pub fn input_dim(&self) -> usize {
        self.inputs.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.nrows() == 0
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    pub fn noise(&self) -> f64 {
        self.noise
    }

    pub fn prior_variance(&self) -> f64 {
        self.prior_variance
    }

    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    pub fn alpha(&self) -> &Matrix {
        &self.alpha
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    /// Multiply all coefficients by `s`.
    pub fn scale_coefficients(&mut self, s: f64) {
        self.alpha *= s;
    }

    fn check_input(&self, x: &Vector) {
        assert_eq!(x.len(), self.input_dim(), "GPR query has wrong dimension");
    }

    /// Kernel weights `k(x, xₗ)` for every training point.
    fn weights(&self, x: &Vector) -> impl Iterator<Item = (usize, f64)> + '_ {
        let scale = -0.5 / (self.length_scale * self.length_scale);
        let x = x.clone();
        (0..self.len()).map(move |l| {
            let d2: f64 = (0..x.len()).map(|c| (x[c] - self.inputs[(l, c)]).powi(2)).sum();
            (l, self.prior_variance * (scale * d2).exp())
        })
    }

    /// `Σₗ αₗ k(x, xₗ)` per output, plus the prior mean.
    pub fn predict(&self, x: &Vector) -> Vector {
        self.check_input(x);
        let mut out = self.mean.clone();
        for (l, w) in self.weights(x) {
            for c in 0..self.output_dim() {
                out[c] += self.alpha[(l, c)] * w;
            }
        }
        out
    }

    /// `−(1/ν²) Σₗ αₗ k(x, xₗ)(x − xₗ)ᵀ`, one row per output.
    pub fn jacobian(&self, x: &Vector) -> Matrix {
        self.check_input(x);
        let (d, e) = (self.input_dim(), self.output_dim());
        let inv = 1.0 / (self.length_scale * self.length_scale);
        let mut out = Matrix::zeros(e, d);
        for (l, w) in self.weights(x) {
            for c in 0..e {
                let a = -inv * self.alpha[(l, c)] * w;
                for j in 0..d {
                    out[(c, j)] += a * (x[j] - self.inputs[(l, j)]);
                }
            }
        }
        out
    }

    /// `(1/ν⁴) Σₗ αₗ k(x, xₗ)((x − xₗ)(x − xₗ)ᵀ − ν²I)`, one `d × d` matrix per output.
    pub fn hessian(&self, x: &Vector) -> Vec<Matrix> {
        self.check_input(x);
        let (d, e) = (self.input_dim(), self.output_dim());
        let nu2 = self.length_scale * self.length_scale;
        let inv = 1.0 / (nu2 * nu2);
        let mut out = vec![Matrix::zeros(d, d); e];
        let mut diff = Vector::zeros(d);
        for (l, w) in self.weights(x) {
            for j in 0..d {
                diff[j] = x[j] - self.inputs[(l, j)];
            }
            for (c, h) in out.iter_mut().enumerate() {
                let a = inv * self.alpha[(l, c)] * w;
                for i in 0..d {
                    for j in 0..d {
                        let delta = if i == j { nu2 } else { 0.0 };
                        h[(i, j)] += a * (diff[i] * diff[j] - delta);
                    }
                }
            }
        }
        out
    }

    /// Predictive variance `s² − kᵀ(K + σ²I)⁻¹k`, shared by all outputs.
    pub fn variance(&self, x: &Vector) -> f64 {
        self.check_input(x);
        let mut k = Vector::zeros(self.len());
        for (l, w) in self.weights(x) {
            k[l] = w;
        }
        let Some(v) = self.factor.solve_lower_triangular(&k) else {
            return self.prior_variance;
        };
        (self.prior_variance - v.norm_squared()).max(0.0)
    }

    /// Predictive covariance `variance · I` over the outputs.
    pub fn covariance(&self, x: &Vector) -> Matrix {
        let e = self.output_dim();
        Matrix::identity(e, e) * self.variance(x)
    }

    /// Norm of [`GprModel::covariance`] without forming the matrix.
    pub fn covariance_norm(&self, x: &Vector, norm: CovarianceNorm) -> f64 {
        let v = self.variance(x);
        match norm {
            CovarianceNorm::Frobenius => v * (self.output_dim() as f64).sqrt(),
            CovarianceNorm::Operator => v,
        }
    }
}
