//! Neighborhood samplers: Metropolis chains constrained to the manifold,
//! exponential-map ball sampling, and the biased SDE used for umbrella sampling.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::field::AmbientField;
use crate::geometry::{Matrix, Vector};
use crate::manifolds::Manifold;

/// Samples from a neighborhood of `center` on the manifold.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vector>,
    /// Field values at the points, same order.
    pub field_values: Option<Vec<Vector>>,
    pub center: Vector,
    pub radius: f64,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn ambient_dim(&self) -> usize {
        self.center.len()
    }

    /// Points as rows of a `K × n` matrix.
    pub fn matrix(&self) -> Matrix {
        let n = self.ambient_dim();
        Matrix::from_fn(self.points.len(), n, |i, j| self.points[i][j])
    }

    /// Evaluate `field` at every point and keep the values.
    pub fn with_field(mut self, field: &dyn AmbientField) -> Result<Self> {
        let values = self.points.iter().map(|x| field.value(x)).collect::<Result<Vec<_>>>()?;
        self.field_values = Some(values);
        Ok(self)
    }

    /// CSV with columns `x_1..x_n` and, when present, `X_1..X_n`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let n = self.ambient_dim();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (1..=n).map(|i| format!("x_{i}")).collect();
        if self.field_values.is_some() {
            header.extend((1..=n).map(|i| format!("X_{i}")));
        }
        w.write_record(&header)?;
        for (i, x) in self.points.iter().enumerate() {
            let mut row: Vec<String> = x.iter().map(|v| format!("{v:e}")).collect();
            if let Some(fv) = &self.field_values {
                row.extend(fv[i].iter().map(|v| format!("{v:e}")));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a cloud written by [`PointCloud::write_csv`]. The first point is
    /// taken as the center and the radius is the largest extrinsic distance to it.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        let n = header.iter().filter(|h| h.starts_with("x_")).count();
        let has_field = header.iter().any(|h| h.starts_with("X_"));
        if n == 0 || (has_field && header.len() != 2 * n) || (!has_field && header.len() != n) {
            return Err(Error::Format(format!("unexpected point cloud header {header:?}")));
        }
        let mut points = Vec::new();
        let mut field = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Format(format!("{s:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if vals.len() != header.len() {
                return Err(Error::Format("ragged point cloud row".into()));
            }
            points.push(Vector::from_row_slice(&vals[..n]));
            if has_field {
                field.push(Vector::from_row_slice(&vals[n..]));
            }
        }
        let center = points
            .first()
            .cloned()
            .ok_or_else(|| Error::Format("empty point cloud".into()))?;
        let radius = points.iter().map(|p| (p - &center).norm()).fold(0.0, f64::max);
        Ok(Self {
            points,
            field_values: has_field.then_some(field),
            center,
            radius,
        })
    }
}

fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

#[derive(Clone, Debug, PartialEq)]
pub struct MetropolisConfig {
    /// Proposal standard deviation as a fraction of the radius.
    pub proposal_scale: f64,
    /// Proposals between retained samples.
    pub thinning: usize,
    /// Proposals in the window over which the acceptance rate is checked.
    pub burn_in_window: usize,
    pub min_acceptance: f64,
}

impl Default for MetropolisConfig {
    fn default() -> Self {
        Self {
            proposal_scale: 0.25,
            thinning: 10,
            burn_in_window: 100,
            min_acceptance: 0.01,
        }
    }
}

/// Metropolis chain for the uniform measure on `{x ∈ M : d(x, center) ≤ r}`.
///
/// Proposals are ambient Gaussian steps projected back onto the manifold. The
/// first sample is the center itself.
pub fn metropolis_sample(
    manifold: &dyn Manifold,
    center: &Vector,
    r: f64,
    k: usize,
    seed: u64,
    config: &MetropolisConfig,
) -> Result<PointCloud> {
    if !(r > 0.0) || k == 0 || config.thinning == 0 {
        return Err(Error::InvalidParameter(format!(
            "metropolis needs r > 0, K ≥ 1 and thinning ≥ 1 (r = {r}, K = {k})"
        )));
    }
    let n = center.len();
    let scale = config.proposal_scale * r;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut current = center.clone();
    let mut points = Vec::with_capacity(k);
    points.push(current.clone());
    let (mut proposed, mut accepted) = (0usize, 0usize);
    while points.len() < k {
        for _ in 0..config.thinning {
            let candidate = &current + gaussian_vector(&mut rng, n) * scale;
            proposed += 1;
            if let Some(y) = manifold.project(&candidate) {
                if manifold.distance(&y, center) <= r {
                    current = y;
                    accepted += 1;
                }
            }
            if proposed == config.burn_in_window {
                let rate = accepted as f64 / proposed as f64;
                if rate < config.min_acceptance {
                    return Err(Error::SamplerStuck {
                        rate,
                        window: config.burn_in_window,
                    });
                }
            }
        }
        points.push(current.clone());
    }
    Ok(PointCloud {
        points,
        field_values: None,
        center: center.clone(),
        radius: r,
    })
}

/// `exp_center(W)` with `W` uniform in the tangent ball of radius `r`.
pub fn exp_map_sample(manifold: &dyn Manifold, center: &Vector, r: f64, k: usize, seed: u64) -> Result<PointCloud> {
    if !(r > 0.0) || k == 0 {
        return Err(Error::InvalidParameter(format!(
            "exp-map sampling needs r > 0 and K ≥ 1 (r = {r})"
        )));
    }
    let basis = manifold.tangent_basis(center)?;
    let m = basis.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(k);
    for _ in 0..k {
        let mut dir = gaussian_vector(&mut rng, m);
        while dir.norm() == 0.0 {
            dir = gaussian_vector(&mut rng, m);
        }
        let u: f64 = rng.random();
        let w = &basis * (dir.normalize() * (r * u.powf(1.0 / m as f64)));
        points.push(manifold.exp_map(center, &w)?);
    }
    Ok(PointCloud {
        points,
        field_values: None,
        center: center.clone(),
        radius: r,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdeConfig {
    /// Strength `ζ` of the harmonic bias towards the target chart point.
    pub zeta: f64,
    /// Inverse temperature `β`.
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    /// Leading fraction of steps excluded from the averages.
    pub burn_in_fraction: f64,
    /// Integration is abandoned once `‖w‖` exceeds this.
    pub divergence_bound: f64,
}

impl Default for SdeConfig {
    fn default() -> Self {
        Self {
            zeta: 100.0,
            beta: 1.0,
            dt: 1e-4,
            steps: 10_000,
            burn_in_fraction: 0.2,
            divergence_bound: 1e6,
        }
    }
}

/// Time averages of the biased dynamics.
#[derive(Clone, Debug, PartialEq)]
pub struct SdeAverages {
    pub mean_point: Vector,
    pub mean_field: Vector,
}

/// Euler–Maruyama for `dw = (X(w) − ζ Dφ(w)ᵀ(φ(w) − γ)) dt + sqrt(2/β) dB`,
/// started at `ψ(γ)`.
pub fn biased_sde_sample(
    field: &dyn AmbientField,
    chart: &dyn Chart,
    gamma_target: &Vector,
    config: &SdeConfig,
    seed: u64,
) -> Result<SdeAverages> {
    let SdeConfig {
        zeta,
        beta,
        dt,
        steps,
        burn_in_fraction,
        divergence_bound,
    } = *config;
    if !(zeta >= 0.0 && beta > 0.0 && dt > 0.0) || steps == 0 || !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(Error::InvalidParameter(format!(
            "biased SDE needs zeta ≥ 0, beta > 0, dt > 0, steps ≥ 1 and burn-in in [0, 1) (got {config:?})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = chart.param(gamma_target)?;
    let n = w.len();
    let noise = (2.0 * dt / beta).sqrt();
    let skip = (steps as f64 * burn_in_fraction).floor() as usize;
    let mut sum_w = Vector::zeros(n);
    let mut sum_x = Vector::zeros(n);
    for step in 0..steps {
        let x = field.value(&w)?;
        if step >= skip {
            sum_w += &w;
            sum_x += &x;
        }
        let bias = chart.coords_jacobian(&w)?.tr_mul(&(chart.coords(&w)? - gamma_target));
        w += (x - bias * zeta) * dt + gaussian_vector(&mut rng, n) * noise;
        if !(w.norm() <= divergence_bound) {
            return Err(Error::Unstable { step });
        }
    }
    let count = (steps - skip) as f64;
    Ok(SdeAverages {
        mean_point: sum_w / count,
        mean_field: sum_x / count,
    })
}
