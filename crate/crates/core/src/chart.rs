//! Charts shared by the closed-form atlases and the learned point-cloud charts.

use std::sync::Arc;

use crate::error::Result;
use crate::geometry::{christoffel_from_metric, pullback_metric, Matrix, MetricData, Vector, FD_STEP};

/// A coordinate patch: coordinates `φ: U → ℝᵐ` and parameterization `ψ = φ⁻¹`.
pub trait Chart: Send + Sync {
    fn id(&self) -> usize;

    fn dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    /// `φ(x)`.
    fn coords(&self, x: &Vector) -> Result<Vector>;

    /// `Dφ(x)`, an `m×n` matrix.
    fn coords_jacobian(&self, x: &Vector) -> Result<Matrix>;

    /// `ψ(p)`.
    fn param(&self, p: &Vector) -> Result<Vector>;

    /// `Dψ(p)`, an `n×m` matrix.
    fn param_jacobian(&self, p: &Vector) -> Result<Matrix>;

    /// Whether `p` is still a trustworthy chart point.
    fn contains(&self, p: &Vector) -> bool;

    fn metric_tensor(&self, p: &Vector) -> Result<Matrix> {
        pullback_metric(&self.param_jacobian(p)?)
    }

    fn metric(&self, p: &Vector) -> Result<MetricData> {
        finite_difference_metric(self, p, FD_STEP)
    }
}

/// Pullback metric plus central-difference Christoffel symbols.
pub fn finite_difference_metric<C: Chart + ?Sized>(chart: &C, p: &Vector, h: f64) -> Result<MetricData> {
    let g = chart.metric_tensor(p)?;
    let gamma = christoffel_from_metric(|q| chart.metric_tensor(q), p, h)?;
    MetricData::new(g, gamma)
}

/// Supplies a chart around an ambient point; the tracer asks for a new one
/// whenever the current chart stops containing the curve.
pub trait ChartProvider {
    fn chart_for(&mut self, x: &Vector) -> Result<Arc<dyn Chart>>;
}
