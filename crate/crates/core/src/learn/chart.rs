use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::diffusion::{diffusion_maps, median_bandwidth};
use super::gpr::{gpr_fit, CovarianceNorm, GprConfig, GprModel};
use crate::chart::{Chart, ChartProvider};
use crate::error::{Error, Result};
use crate::geometry::{Christoffel, Matrix, MetricData, Vector};
use crate::manifolds::Manifold;
use crate::sampling::{metropolis_sample, MetropolisConfig, PointCloud};

/// Version tag written into chart snapshots.
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedChartConfig {
    /// Chart dimension.
    pub m: usize,
    /// Chart-exit threshold on the covariance norm of `φ`.
    pub eta: f64,
    pub norm: CovarianceNorm,
    pub gpr: GprConfig,
    /// Length scale of `φ`; the diffusion bandwidth when unset.
    pub phi_length_scale: Option<f64>,
    /// Length scale of `ψ`; the median distance between embedded points when unset.
    pub psi_length_scale: Option<f64>,
}

impl Default for LearnedChartConfig {
    fn default() -> Self {
        Self {
            m: 2,
            eta: 1e-2,
            norm: CovarianceNorm::Frobenius,
            gpr: GprConfig::default(),
            phi_length_scale: None,
            psi_length_scale: None,
        }
    }
}

/// A chart learned from a point cloud: `φ` maps ambient points to diffusion
/// coordinates and `ψ` maps them back.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LearnedChart {
    pub id: usize,
    pub center: Vector,
    pub radius: f64,
    pub bandwidth: f64,
    pub eigenvalues: Vec<f64>,
    pub spectrum: Vec<f64>,
    pub eta: f64,
    pub norm: CovarianceNorm,
    pub phi: GprModel,
    pub psi: GprModel,
}

/// Fit `φ` and `ψ` on `cloud` with diffusion-map coordinates of dimension `config.m`.
pub fn build_learned_chart(cloud: &PointCloud, id: usize, config: &LearnedChartConfig) -> Result<LearnedChart> {
    let m = config.m;
    if m == 0 || cloud.len() <= 2 * m + 2 {
        return Err(Error::InvalidParameter(format!(
            "learned chart of dimension {m} needs more than {} points, got {}",
            2 * m + 2,
            cloud.len()
        )));
    }
    if !(config.eta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must be positive, got {}",
            config.eta
        )));
    }
    let ambient = cloud.matrix();
    let eps = median_bandwidth(&ambient)?;
    let embedding = diffusion_maps(&ambient, eps, m)?;
    let coords = embedding.coordinates;
    let phi = gpr_fit(&ambient, &coords, config.phi_length_scale.unwrap_or(eps), &config.gpr)?;
    let psi_scale = match config.psi_length_scale {
        Some(s) => s,
        None => median_bandwidth(&coords)?,
    };
    let psi_cfg = GprConfig {
        center_targets: true,
        ..config.gpr.clone()
    };
    let psi = gpr_fit(&coords, &ambient, psi_scale, &psi_cfg)?;
    Ok(LearnedChart {
        id,
        center: cloud.center.clone(),
        radius: cloud.radius,
        bandwidth: eps,
        eigenvalues: embedding.eigenvalues,
        spectrum: embedding.spectrum,
        eta: config.eta,
        norm: config.norm,
        phi,
        psi,
    })
}

#[derive(Serialize, Deserialize)]
struct Snapshot<'a> {
    version: u32,
    chart: std::borrow::Cow<'a, LearnedChart>,
}

impl LearnedChart {
    /// `‖Σ_φ(x)‖` at an ambient point.
    pub fn covariance_norm(&self, x: &Vector) -> f64 {
        self.phi.covariance_norm(x, self.norm)
    }

    /// Whether the ambient point `x` passes the covariance test.
    pub fn is_valid_at(&self, x: &Vector) -> bool {
        self.covariance_norm(x) <= self.eta
    }

    /// `Γᵏᵢⱼ = g^{kl} ⟨∂ₗψ, ∂ᵢ∂ⱼψ⟩` from the closed-form derivatives of `ψ`.
    pub fn christoffel(&self, p: &Vector, jac: &Matrix, g_inv: &Matrix) -> Christoffel {
        let m = p.len();
        let hess = self.psi.hessian(p);
        let mut gamma = Christoffel::zeros(m);
        for i in 0..m {
            for j in i..m {
                // ⟨∂ₗψ, ∂ᵢ∂ⱼψ⟩ for every l
                let mut proj = Vector::zeros(m);
                for (a, h) in hess.iter().enumerate() {
                    for l in 0..m {
                        proj[l] += jac[(a, l)] * h[(i, j)];
                    }
                }
                let raised = g_inv * proj;
                for k in 0..m {
                    gamma.set_symmetric(k, i, j, raised[k]);
                }
            }
        }
        gamma
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&Snapshot {
            version: SNAPSHOT_VERSION,
            chart: std::borrow::Cow::Borrowed(self),
        })?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(s)?;
        match value.get("version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(SNAPSHOT_VERSION) => {}
            other => return Err(Error::Format(format!("unsupported chart snapshot version {other:?}"))),
        }
        let snap: Snapshot<'static> = serde_json::from_value(value)?;
        Ok(snap.chart.into_owned())
    }
}

impl Chart for LearnedChart {
    fn id(&self) -> usize {
        self.id
    }

    fn dim(&self) -> usize {
        self.phi.output_dim()
    }

    fn ambient_dim(&self) -> usize {
        self.phi.input_dim()
    }

    fn coords(&self, x: &Vector) -> Result<Vector> {
        Ok(self.phi.predict(x))
    }

    fn coords_jacobian(&self, x: &Vector) -> Result<Matrix> {
        Ok(self.phi.jacobian(x))
    }

    fn param(&self, p: &Vector) -> Result<Vector> {
        Ok(self.psi.predict(p))
    }

    fn param_jacobian(&self, p: &Vector) -> Result<Matrix> {
        Ok(self.psi.jacobian(p))
    }

    fn contains(&self, p: &Vector) -> bool {
        self.is_valid_at(&self.psi.predict(p))
    }

    fn metric_tensor(&self, p: &Vector) -> Result<Matrix> {
        let jac = self.psi.jacobian(p);
        Ok(jac.tr_mul(&jac))
    }

    fn metric(&self, p: &Vector) -> Result<MetricData> {
        let jac = self.psi.jacobian(p);
        let g = jac.tr_mul(&jac);
        let g_inv = g
            .clone()
            .cholesky()
            .ok_or(Error::SingularMetric { sigma_min: 0.0 })?
            .inverse();
        let gamma = self.christoffel(p, &jac, &g_inv);
        Ok(MetricData { g, g_inv, gamma })
    }
}

/// Settings of [`LearnedAtlas`].
#[derive(Clone, Debug, PartialEq)]
pub struct LearnedAtlasConfig {
    /// Sampling radius `r`.
    pub radius: f64,
    /// Samples per chart `K`.
    pub samples: usize,
    pub seed: u64,
    pub sampler: MetropolisConfig,
    pub chart: LearnedChartConfig,
}

impl Default for LearnedAtlasConfig {
    fn default() -> Self {
        Self {
            radius: 0.3,
            samples: 500,
            seed: 0,
            sampler: MetropolisConfig::default(),
            chart: LearnedChartConfig::default(),
        }
    }
}

/// Builds a fresh learned chart around every point it is asked about.
pub struct LearnedAtlas {
    manifold: Arc<dyn Manifold>,
    config: LearnedAtlasConfig,
    charts: Vec<Arc<LearnedChart>>,
}

impl LearnedAtlas {
    pub fn new(manifold: Arc<dyn Manifold>, config: LearnedAtlasConfig) -> Result<Self> {
        let m = config.chart.m;
        if config.samples < 2 * m + 1 {
            return Err(Error::InvalidParameter(format!(
                "K = {} samples per chart is below 2m + 1 = {}",
                config.samples,
                2 * m + 1
            )));
        }
        Ok(Self {
            manifold,
            config,
            charts: Vec::new(),
        })
    }

    /// Charts built so far, in order.
    pub fn charts(&self) -> &[Arc<LearnedChart>] {
        &self.charts
    }
}

impl ChartProvider for LearnedAtlas {
    fn chart_for(&mut self, x: &Vector) -> Result<Arc<dyn Chart>> {
        let center = self
            .manifold
            .project(x)
            .ok_or_else(|| Error::Domain(format!("cannot project {:?} onto the manifold", x.as_slice())))?;
        let id = self.charts.len();
        let cfg = &self.config;
        let cloud = metropolis_sample(
            self.manifold.as_ref(),
            &center,
            cfg.radius,
            cfg.samples,
            cfg.seed.wrapping_add(id as u64),
            &cfg.sampler,
        )?;
        let chart = Arc::new(build_learned_chart(&cloud, id, &cfg.chart)?);
        self.charts.push(chart.clone());
        Ok(chart)
    }
}
