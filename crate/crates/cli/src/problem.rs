//! Assembly of manifold, potential, charts and tracer settings from a config.

use std::sync::Arc;

use isocline::chart::{Chart, ChartProvider};
use isocline::field::{central_jacobian, FieldMode, GradientField, Potential, PushforwardMode};
use isocline::geometry::{Matrix, Vector, FD_STEP};
use isocline::learn::{LearnedAtlas, LearnedAtlasConfig, LearnedChartConfig};
use isocline::manifolds::{
    AnalyticAtlas, Manifold, PlanarMullerBrown, Plane, PlaneChart, Pseudosphere, PseudosphereChart,
    PseudosphereMullerBrown, Sphere, SphereMullerBrown, StereographicChart, XyzPotential,
};
use isocline::tracer::{InitialDirection, TracerConfig};

use crate::config::{Direction, ManifoldName, Mode, PotentialName, RunConfig, Start};
use crate::Failure;

/// Distance from the manifold tolerated for an ambient start point.
const START_TOL: f64 = 1e-8;

pub struct Problem {
    pub manifold: Arc<dyn Manifold>,
    pub atlas: AnalyticAtlas,
    pub potential: Arc<dyn Potential>,
    pub field: GradientField,
}

impl Problem {
    pub fn new(manifold: ManifoldName, potential: PotentialName, plane_extent: Option<f64>) -> Result<Self, Failure> {
        let (m, atlas): (Arc<dyn Manifold>, AnalyticAtlas) = match manifold {
            ManifoldName::Sphere => (Arc::new(Sphere), AnalyticAtlas::Sphere),
            ManifoldName::Pseudosphere => (Arc::new(Pseudosphere), AnalyticAtlas::Pseudosphere),
            ManifoldName::Plane => (
                Arc::new(Plane),
                AnalyticAtlas::Plane {
                    extent: plane_extent.unwrap_or(PlaneChart::default().extent),
                },
            ),
        };
        let p: Arc<dyn Potential> = match (manifold, potential) {
            (ManifoldName::Sphere, PotentialName::Mb) => Arc::new(SphereMullerBrown),
            (ManifoldName::Sphere, PotentialName::Xyz) => Arc::new(XyzPotential),
            (ManifoldName::Pseudosphere, PotentialName::Mb) => Arc::new(PseudosphereMullerBrown),
            (ManifoldName::Plane, PotentialName::Mb) => Arc::new(PlanarMullerBrown),
            (mf, pt) => {
                return Err(Failure::Config(format!(
                    "potential {pt:?} is not defined on manifold {mf:?}"
                )))
            }
        };
        Ok(Self {
            field: GradientField::new(p.clone(), m.clone()),
            manifold: m,
            atlas,
            potential: p,
        })
    }

    pub fn from_config(config: &RunConfig) -> Result<Self, Failure> {
        Self::new(config.manifold, config.potential, config.plane_extent)
    }

    /// The chart in which chart-coordinate inputs and outputs are expressed.
    pub fn primary_chart(&self) -> Arc<dyn Chart> {
        match self.atlas {
            AnalyticAtlas::Sphere => Arc::new(StereographicChart::new(1.0)),
            AnalyticAtlas::Pseudosphere => Arc::new(PseudosphereChart),
            AnalyticAtlas::Plane { extent } => Arc::new(PlaneChart { extent }),
        }
    }

    pub fn start_ambient(&self, start: &Start) -> Result<Vector, Failure> {
        let x = match start {
            Start::Chart(p) => {
                let chart = self.primary_chart();
                if p.len() != chart.dim() {
                    return Err(Failure::Config(format!(
                        "chart start needs {} coordinates",
                        chart.dim()
                    )));
                }
                chart
                    .param(&Vector::from_column_slice(p))
                    .map_err(|e| Failure::Config(format!("chart start outside the chart: {e}")))?
            }
            Start::Ambient(x) => {
                if x.len() != self.manifold.ambient_dim() {
                    return Err(Failure::Config(format!(
                        "ambient start needs {} coordinates",
                        self.manifold.ambient_dim()
                    )));
                }
                Vector::from_column_slice(x)
            }
        };
        match self.manifold.project(&x) {
            Some(y) if (&y - &x).norm() <= START_TOL => Ok(x),
            _ => Err(Failure::Config(format!(
                "start {:?} is not on the {}",
                x.as_slice(),
                self.manifold.name()
            ))),
        }
    }

    pub fn provider(&self, config: &RunConfig, seed: u64) -> Result<Box<dyn ChartProvider>, Failure> {
        match config.mode {
            Mode::Analytic => Ok(Box::new(self.atlas)),
            Mode::Learned => {
                let s = config.learned()?;
                let atlas = LearnedAtlas::new(
                    self.manifold.clone(),
                    LearnedAtlasConfig {
                        radius: s.radius,
                        samples: s.samples,
                        seed,
                        chart: LearnedChartConfig {
                            m: s.m,
                            eta: s.eta,
                            ..LearnedChartConfig::default()
                        },
                        ..LearnedAtlasConfig::default()
                    },
                )
                .map_err(|e| Failure::Config(e.to_string()))?;
                Ok(Box::new(atlas))
            }
        }
    }

    /// Gradient of `E ∘ ψ` in the coordinates of `chart`.
    pub fn chart_gradient(&self, chart: &dyn Chart, p: &Vector) -> isocline::Result<Vector> {
        let x = chart.param(p)?;
        Ok(chart.param_jacobian(p)?.tr_mul(&self.potential.gradient(&x)?))
    }

    /// Hessian of `E ∘ ψ` by central differences of the chart gradient.
    pub fn chart_hessian(&self, chart: &dyn Chart, p: &Vector) -> isocline::Result<Matrix> {
        let h = central_jacobian(|q| self.chart_gradient(chart, q), p, FD_STEP)?;
        Ok((&h + h.transpose()) * 0.5)
    }
}

pub fn tracer_config(config: &RunConfig, direction: Direction) -> TracerConfig {
    TracerConfig {
        tau: config.tau,
        rho: config.rho,
        max_steps: config.max_steps,
        correction_coeff: config.correction_coeff,
        initial_direction: match direction {
            Direction::Field => InitialDirection::Field,
            Direction::Reversed => InitialDirection::ReversedField,
        },
        approach_control: config.approach_control,
        energy_ceiling: config.energy_ceiling,
        descent_tau: config.descent_tau,
        field_mode: match config.mode {
            Mode::Analytic => FieldMode::Gradient,
            Mode::Learned => FieldMode::Pushforward(PushforwardMode::Jacobian),
        },
    }
}
