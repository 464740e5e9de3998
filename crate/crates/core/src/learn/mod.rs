//! Charts learned from point clouds: diffusion-map coordinates interpolated
//! by Gaussian-process regression in both directions.

mod chart;
mod diffusion;
mod gpr;

pub use chart::{
    build_learned_chart, LearnedAtlas, LearnedAtlasConfig, LearnedChart, LearnedChartConfig, SNAPSHOT_VERSION,
};
pub use diffusion::{diffusion_maps, median_bandwidth, DiffusionEmbedding};
pub use gpr::{gpr_fit, CovarianceNorm, GprConfig, GprModel};
