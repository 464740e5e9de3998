//! Closed-form test manifolds, their atlases and the potentials placed on them.

mod potentials;
mod pseudosphere;
mod stereographic;

use std::sync::Arc;

use crate::chart::{Chart, ChartProvider};
use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};

pub use potentials::{
    muller_brown_on_sphere, muller_brown_planar, xyz_line_field, MullerBrown, PlanarMullerBrown,
    PseudosphereMullerBrown, SphereMullerBrown, XyzPotential, MB_A, MB_B, MB_C, MB_LOWER, MB_X0, MB_Y0,
    PSEUDOSPHERE_KAPPA, SPHERE_KAPPA,
};
pub use pseudosphere::{pseudosphere_height, pseudosphere_param, PseudosphereChart};
pub use stereographic::{chart_transition, stereo_coords, stereo_param, StereographicChart};

/// An embedded manifold known in closed form.
pub trait Manifold: Send + Sync {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn ambient_dim(&self) -> usize;

    /// Nearest-point style projection of an ambient point onto the manifold;
    /// `None` when the point cannot be projected.
    fn project(&self, y: &Vector) -> Option<Vector>;

    /// Orthogonal projector onto the tangent space at `x`.
    fn tangent_projection(&self, x: &Vector) -> Matrix;

    /// Geodesic distance when known in closed form, extrinsic distance otherwise.
    fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        (a - b).norm()
    }

    /// Orthonormal basis of the tangent space at `x` (columns).
    fn tangent_basis(&self, _x: &Vector) -> Result<Matrix> {
        Err(Error::Unsupported("closed-form tangent basis"))
    }

    fn exp_map(&self, _x: &Vector, _w: &Vector) -> Result<Vector> {
        Err(Error::Unsupported("exponential map"))
    }
}

/// The unit sphere `S²` in `ℝ³`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sphere;

impl Manifold for Sphere {
    fn name(&self) -> &'static str {
        "sphere"
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn project(&self, y: &Vector) -> Option<Vector> {
        let n = y.norm();
        (n > 0.0 && n.is_finite()).then(|| y / n)
    }

    fn tangent_projection(&self, x: &Vector) -> Matrix {
        let n2 = x.norm_squared();
        Matrix::identity(3, 3) - x * x.transpose() / n2
    }

    fn distance(&self, a: &Vector, b: &Vector) -> f64 {
        let a = a.normalize();
        let b = b.normalize();
        // atan2 form keeps precision for nearby points
        a.cross(&b).norm().atan2(a.dot(&b))
    }

    fn tangent_basis(&self, x: &Vector) -> Result<Matrix> {
        let x = x.normalize();
        let axis = (0..3).min_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs())).unwrap_or(0);
        let mut a = Vector::zeros(3);
        a[axis] = 1.0;
        let e1 = (&a - &x * a.dot(&x)).normalize();
        let e2 = x.cross(&e1);
        Ok(Matrix::from_columns(&[e1, e2]))
    }

    fn exp_map(&self, x: &Vector, w: &Vector) -> Result<Vector> {
        let len = w.norm();
        if len == 0.0 {
            return Ok(x.clone());
        }
        Ok(x * len.cos() + w * (len.sin() / len))
    }
}

/// Upper half of the pseudosphere, the graph `x³ = arcsech ρ − sqrt(1 − ρ²)` over `0 < ρ < 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pseudosphere;

impl Manifold for Pseudosphere {
    fn name(&self) -> &'static str {
        "pseudosphere"
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn project(&self, y: &Vector) -> Option<Vector> {
        let rho = y[0].hypot(y[1]);
        if !(rho > 0.0 && rho <= 1.0) {
            return None;
        }
        Some(Vector::from_row_slice(&[y[0], y[1], pseudosphere_height(rho)]))
    }

    fn tangent_projection(&self, x: &Vector) -> Matrix {
        let rho = x[0].hypot(x[1]);
        // surface F = x³ − h(ρ) = 0 with h'(ρ) = −sqrt(1 − ρ²)/ρ
        let dh = -(1.0 - rho * rho).max(0.0).sqrt() / rho;
        let normal = Vector::from_row_slice(&[-dh * x[0] / rho, -dh * x[1] / rho, 1.0]);
        Matrix::identity(3, 3) - &normal * normal.transpose() / normal.norm_squared()
    }
}

/// The Euclidean plane as a trivially embedded manifold.
#[derive(Clone, Copy, Debug, Default)]
pub struct Plane;

impl Manifold for Plane {
    fn name(&self) -> &'static str {
        "plane"
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn project(&self, y: &Vector) -> Option<Vector> {
        Some(y.clone())
    }

    fn tangent_projection(&self, _x: &Vector) -> Matrix {
        Matrix::identity(2, 2)
    }

    fn tangent_basis(&self, _x: &Vector) -> Result<Matrix> {
        Ok(Matrix::identity(2, 2))
    }

    fn exp_map(&self, x: &Vector, w: &Vector) -> Result<Vector> {
        Ok(x + w)
    }
}

/// Identity chart of the plane, restricted to a square window.
#[derive(Clone, Debug)]
pub struct PlaneChart {
    pub extent: f64,
}

impl Default for PlaneChart {
    fn default() -> Self {
        Self { extent: 10.0 }
    }
}

impl Chart for PlaneChart {
    fn id(&self) -> usize {
        0
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        2
    }

    fn coords(&self, x: &Vector) -> Result<Vector> {
        Ok(x.clone())
    }

    fn coords_jacobian(&self, _x: &Vector) -> Result<Matrix> {
        Ok(Matrix::identity(2, 2))
    }

    fn param(&self, p: &Vector) -> Result<Vector> {
        Ok(p.clone())
    }

    fn param_jacobian(&self, _p: &Vector) -> Result<Matrix> {
        Ok(Matrix::identity(2, 2))
    }

    fn contains(&self, p: &Vector) -> bool {
        p.iter().all(|v| v.abs() <= self.extent)
    }

    fn metric_tensor(&self, _p: &Vector) -> Result<Matrix> {
        Ok(Matrix::identity(2, 2))
    }

    fn metric(&self, _p: &Vector) -> Result<crate::geometry::MetricData> {
        Ok(crate::geometry::MetricData::flat(2))
    }
}

/// Closed-form atlases of the three test manifolds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticAtlas {
    /// Two stereographic charts; the one whose origin is nearer is chosen.
    Sphere,
    /// The single angular graph chart.
    Pseudosphere,
    /// The identity chart on `[−extent, extent]²`.
    Plane { extent: f64 },
}

impl AnalyticAtlas {
    pub fn chart_at(&self, x: &Vector) -> Result<Arc<dyn Chart>> {
        match *self {
            AnalyticAtlas::Sphere => {
                let pole = if x[2] <= 0.0 { 1.0 } else { -1.0 };
                Ok(Arc::new(StereographicChart::new(pole)))
            }
            AnalyticAtlas::Pseudosphere => {
                let chart = PseudosphereChart;
                let p = chart.coords(x)?;
                if !chart.contains(&p) {
                    return Err(Error::ChartExit(format!("pseudosphere chart does not contain {p:?}")));
                }
                Ok(Arc::new(chart))
            }
            AnalyticAtlas::Plane { extent } => {
                let chart = PlaneChart { extent };
                if !chart.contains(x) {
                    return Err(Error::ChartExit(format!(
                        "point leaves the plane window [-{extent}, {extent}]^2"
                    )));
                }
                Ok(Arc::new(chart))
            }
        }
    }
}

impl ChartProvider for AnalyticAtlas {
    fn chart_for(&mut self, x: &Vector) -> Result<Arc<dyn Chart>> {
        self.chart_at(x)
    }
}
