use std::f64::consts::FRAC_PI_2;

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::geometry::{Christoffel, Matrix, MetricData, Vector};

/// Height of the upper pseudosphere sheet over radius `ρ`: `arcsech ρ − sqrt(1 − ρ²)`.
pub fn pseudosphere_height(rho: f64) -> f64 {
    let s = (1.0 - rho * rho).max(0.0).sqrt();
    ((1.0 + s) / rho).ln() - s
}

/// Point of the pseudosphere at chart coordinates `(radius, angle)`.
pub fn pseudosphere_param(p: &Vector) -> Result<Vector> {
    let (r, a) = (p[0], p[1]);
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("pseudosphere radius {r} outside (0, 1]")));
    }
    Ok(Vector::from_row_slice(&[
        r * a.cos(),
        r * a.sin(),
        pseudosphere_height(r),
    ]))
}

/// Graph chart `(ρ, arctan(x²/x¹))` of the half `x¹ > 0` of the upper sheet.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PseudosphereChart;

impl Chart for PseudosphereChart {
    fn id(&self) -> usize {
        0
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn coords(&self, x: &Vector) -> Result<Vector> {
        if !(x[0] > 0.0) {
            return Err(Error::Domain(format!(
                "arctan(x2/x1) branch requires x1 > 0, got {}",
                x[0]
            )));
        }
        Ok(Vector::from_row_slice(&[x[0].hypot(x[1]), (x[1] / x[0]).atan()]))
    }

    fn coords_jacobian(&self, x: &Vector) -> Result<Matrix> {
        let rho2 = x[0] * x[0] + x[1] * x[1];
        let rho = rho2.sqrt();
        if !(x[0] > 0.0) {
            return Err(Error::Domain("arctan branch requires x1 > 0".into()));
        }
        Ok(Matrix::from_row_slice(
            2,
            3,
            &[x[0] / rho, x[1] / rho, 0.0, -x[1] / rho2, x[0] / rho2, 0.0],
        ))
    }

    fn param(&self, p: &Vector) -> Result<Vector> {
        pseudosphere_param(p)
    }

    fn param_jacobian(&self, p: &Vector) -> Result<Matrix> {
        let (r, a) = (p[0], p[1]);
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::Domain(format!("pseudosphere radius {r} outside (0, 1]")));
        }
        let dh = -(1.0 - r * r).max(0.0).sqrt() / r;
        Ok(Matrix::from_row_slice(
            3,
            2,
            &[a.cos(), -r * a.sin(), a.sin(), r * a.cos(), dh, 0.0],
        ))
    }

    fn contains(&self, p: &Vector) -> bool {
        p[0] > 0.0 && p[0] < 1.0 && p[1].abs() < FRAC_PI_2
    }

    fn metric_tensor(&self, p: &Vector) -> Result<Matrix> {
        let r = p[0];
        if !(r > 0.0) {
            return Err(Error::Domain(format!("pseudosphere radius {r} outside (0, 1]")));
        }
        Ok(Matrix::from_diagonal(&Vector::from_row_slice(&[1.0 / (r * r), r * r])))
    }

    fn metric(&self, p: &Vector) -> Result<MetricData> {
        let r = p[0];
        let g = self.metric_tensor(p)?;
        let g_inv = Matrix::from_diagonal(&Vector::from_row_slice(&[r * r, 1.0 / (r * r)]));
        let mut gamma = Christoffel::zeros(2);
        gamma.set_symmetric(0, 0, 0, -1.0 / r);
        gamma.set_symmetric(0, 1, 1, -r * r * r);
        gamma.set_symmetric(1, 0, 1, 1.0 / r);
        Ok(MetricData { g, g_inv, gamma })
    }
}
