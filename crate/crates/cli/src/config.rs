//! JSON run configuration.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Analytic,
    Learned,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ManifoldName {
    Sphere,
    Pseudosphere,
    Plane,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PotentialName {
    Mb,
    Xyz,
}

/// Start point, either ambient or in the manifold's primary chart.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    Ambient(Vec<f64>),
    Chart(Vec<f64>),
}

/// Which way the first step goes relative to the field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Field,
    Reversed,
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Mode,
    pub manifold: ManifoldName,
    pub potential: PotentialName,
    pub start: Option<Start>,
    pub tau: f64,
    pub rho: f64,
    pub max_steps: usize,
    #[serde(default = "one")]
    pub correction_coeff: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub direction: Direction,
    #[serde(default = "yes")]
    pub approach_control: bool,
    pub energy_ceiling: Option<f64>,
    pub descent_tau: Option<f64>,
    pub eta: Option<f64>,
    #[serde(alias = "K")]
    pub samples: Option<usize>,
    #[serde(alias = "r")]
    pub radius: Option<f64>,
    pub m: Option<usize>,
    pub plane_extent: Option<f64>,
    pub output: Option<PathBuf>,
}

/// Settings only a learned run needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnedSettings {
    pub eta: f64,
    pub samples: usize,
    pub radius: f64,
    pub m: usize,
}

impl RunConfig {
    pub fn from_str(text: &str) -> Result<Self, Failure> {
        let config: RunConfig =
            serde_json::from_str(text).map_err(|e| Failure::Config(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_str(&text).map_err(|f| match f {
            Failure::Config(msg) => Failure::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> Result<(), Failure> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Failure::Config(format!("field `{name}` must be positive, got {v}")))
            }
        };
        positive("tau", self.tau)?;
        positive("rho", self.rho)?;
        if let Some(v) = self.descent_tau {
            positive("descent_tau", v)?;
        }
        if let Some(v) = self.plane_extent {
            positive("plane_extent", v)?;
        }
        if let Some(v) = self.eta {
            positive("eta", v)?;
        }
        if let Some(v) = self.radius {
            positive("radius", v)?;
        }
        if !self.correction_coeff.is_finite() {
            return Err(Failure::Config("field `correction_coeff` must be finite".into()));
        }
        if self.mode == Mode::Learned {
            self.learned()?;
        }
        Ok(())
    }

    /// Learned-mode settings; every one of them must be present.
    pub fn learned(&self) -> Result<LearnedSettings, Failure> {
        let need = |name: &str| Failure::Config(format!("learned mode requires field `{name}`"));
        let settings = LearnedSettings {
            eta: self.eta.ok_or_else(|| need("eta"))?,
            samples: self.samples.ok_or_else(|| need("samples"))?,
            radius: self.radius.ok_or_else(|| need("radius"))?,
            m: self.m.ok_or_else(|| need("m"))?,
        };
        if settings.m == 0 || settings.samples < 2 * settings.m + 1 {
            return Err(Failure::Config(format!(
                "field `samples` must be at least 2m + 1 = {}",
                2 * settings.m + 1
            )));
        }
        Ok(settings)
    }
}
