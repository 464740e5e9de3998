//! Vector fields on the manifold and their evaluation in chart coordinates.

use std::sync::Arc;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector, FD_STEP};
use crate::manifolds::Manifold;

/// A scalar energy on ambient space whose restriction to the manifold is the potential.
pub trait Potential: Send + Sync {
    fn energy(&self, x: &Vector) -> Result<f64>;

    /// Euclidean gradient of the ambient extension.
    fn gradient(&self, x: &Vector) -> Result<Vector>;
}

/// A tangent vector field given at ambient points.
pub trait AmbientField: Send + Sync {
    fn value(&self, x: &Vector) -> Result<Vector>;

    /// Present when the field is `−grad E` for some potential `E`.
    fn potential(&self) -> Option<&dyn Potential> {
        None
    }
}

/// `X = −grad E`, the Riemannian steepest-descent field of a potential.
#[derive(Clone)]
pub struct GradientField {
    pub potential: Arc<dyn Potential>,
    pub manifold: Arc<dyn Manifold>,
}

impl GradientField {
    pub fn new(potential: Arc<dyn Potential>, manifold: Arc<dyn Manifold>) -> Self {
        Self { potential, manifold }
    }
}

impl AmbientField for GradientField {
    fn value(&self, x: &Vector) -> Result<Vector> {
        let grad = self.potential.gradient(x)?;
        Ok(-(self.manifold.tangent_projection(x) * grad))
    }

    fn potential(&self) -> Option<&dyn Potential> {
        Some(self.potential.as_ref())
    }
}

/// `X = −g⁻¹ ∇E` for an energy gradient already expressed in chart coordinates.
pub fn riemannian_gradient(grad_e: &Vector, g_inv: &Matrix) -> Vector {
    -(g_inv * grad_e)
}

/// `X = −g⁻¹ ∇E` with `∇E` taken by central differences of a chart-coordinate energy.
pub fn riemannian_gradient_field<F>(energy: F, p: &Vector, g_inv: &Matrix, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<f64>,
{
    let grad = central_gradient(&energy, p, h)?;
    Ok(riemannian_gradient(&grad, g_inv))
}

pub fn central_gradient<F>(f: &F, p: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> Result<f64>,
{
    let mut out = Vector::zeros(p.len());
    for i in 0..p.len() {
        let mut fwd = p.clone();
        let mut bwd = p.clone();
        fwd[i] += h;
        bwd[i] -= h;
        out[i] = (f(&fwd)? - f(&bwd)?) / (2.0 * h);
    }
    Ok(out)
}

/// Central-difference Jacobian of a vector function (rows: outputs).
pub fn central_jacobian<F>(f: F, p: &Vector, h: f64) -> Result<Matrix>
where
    F: Fn(&Vector) -> Result<Vector>,
{
    let mut cols = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let mut fwd = p.clone();
        let mut bwd = p.clone();
        fwd[i] += h;
        bwd[i] -= h;
        cols.push((f(&fwd)? - f(&bwd)?) / (2.0 * h));
    }
    Ok(Matrix::from_columns(&cols))
}

/// How the pushforward `φ⋆X` is formed from the ambient field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PushforwardMode {
    /// `Dφ(x) X(x)`.
    Jacobian,
    /// `(φ(x + Δt X(x)) − φ(x)) / Δt`.
    FiniteDifference { dt: f64 },
}

/// `φ⋆X` at an ambient point.
pub fn pushforward_field(chart: &dyn Chart, x: &Vector, field: &Vector, mode: PushforwardMode) -> Result<Vector> {
    match mode {
        PushforwardMode::Jacobian => Ok(chart.coords_jacobian(x)? * field),
        PushforwardMode::FiniteDifference { dt } => {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "pushforward dt must be positive, got {dt}"
                )));
            }
            let moved = x + field * dt;
            Ok((chart.coords(&moved)? - chart.coords(x)?) / dt)
        }
    }
}

/// How a field is expressed in chart coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FieldMode {
    /// `−g⁻¹ Dψᵀ ∇E(ψ(p))`; requires a potential-backed field.
    Gradient,
    /// `φ⋆X` evaluated at `ψ(p)`.
    Pushforward(PushforwardMode),
}

/// A field read through one chart.
pub struct ChartField<'a> {
    pub chart: &'a dyn Chart,
    pub field: &'a dyn AmbientField,
    pub mode: FieldMode,
}

impl<'a> ChartField<'a> {
    pub fn new(chart: &'a dyn Chart, field: &'a dyn AmbientField, mode: FieldMode) -> Self {
        Self { chart, field, mode }
    }

    pub fn value(&self, p: &Vector) -> Result<Vector> {
        match self.mode {
            FieldMode::Gradient => {
                let potential = self
                    .field
                    .potential()
                    .ok_or(Error::Unsupported("gradient evaluation of a field without potential"))?;
                let x = self.chart.param(p)?;
                let jac = self.chart.param_jacobian(p)?;
                let g = self.chart.metric_tensor(p)?;
                let grad = jac.tr_mul(&potential.gradient(&x)?);
                let chol = g.cholesky().ok_or(Error::SingularMetric { sigma_min: 0.0 })?;
                Ok(-chol.solve(&grad))
            }
            FieldMode::Pushforward(mode) => {
                let x = self.chart.param(p)?;
                let xv = self.field.value(&x)?;
                pushforward_field(self.chart, &x, &xv, mode)
            }
        }
    }

    pub fn jacobian(&self, p: &Vector) -> Result<Matrix> {
        central_jacobian(|q| self.value(q), p, FD_STEP)
    }

    /// Potential energy at a chart point, if the field has one.
    pub fn energy(&self, p: &Vector) -> Option<Result<f64>> {
        let potential = self.field.potential()?;
        Some(self.chart.param(p).and_then(|x| potential.energy(&x)))
    }
}
