use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::geometry::{Christoffel, Matrix, MetricData, Vector};

/// Stereographic coordinates of a point of `S²` projected from the pole `(0, 0, pole)`.
pub fn stereo_coords(x: &Vector, pole: f64) -> Result<Vector> {
    let denom = 1.0 - pole * x[2];
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("point {x:?} is the projection pole {pole}")));
    }
    Ok(Vector::from_row_slice(&[x[0] / denom, x[1] / denom]))
}

/// Inverse of [`stereo_coords`]: `(2p¹, 2p², ±(ν − 1)) / (ν + 1)`.
pub fn stereo_param(p: &Vector, pole: f64) -> Vector {
    let nu = p[0] * p[0] + p[1] * p[1];
    Vector::from_row_slice(&[2.0 * p[0], 2.0 * p[1], pole * (nu - 1.0)]) / (nu + 1.0)
}

/// Transition between the two stereographic charts, `p ↦ p / ν` (an involution).
pub fn chart_transition(p: &Vector) -> Result<Vector> {
    let nu = p.norm_squared();
    if nu == 0.0 {
        return Err(Error::Domain("chart origin maps to the other chart's pole".into()));
    }
    Ok(p / nu)
}

/// One of the two stereographic charts of the unit sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StereographicChart {
    pole: f64,
    /// Chart points with `ν ≥ nu_max` are handed to the other chart.
    pub nu_max: f64,
}

impl StereographicChart {
    pub fn new(pole: f64) -> Self {
        assert!(pole == 1.0 || pole == -1.0, "pole must be +1 or -1");
        Self { pole, nu_max: 4.0 }
    }

    pub fn pole(&self) -> f64 {
        self.pole
    }

    /// Closed-form Levi-Civita symbols of the conformal metric `4/(1+ν)² δ`.
    pub fn christoffel(p: &Vector) -> Christoffel {
        let nu = p.norm_squared();
        // g = e^{2f} δ with ∂ᵢf = −2pⁱ/(1+ν)
        let df = [-2.0 * p[0] / (1.0 + nu), -2.0 * p[1] / (1.0 + nu)];
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        let mut gamma = Christoffel::zeros(2);
        for k in 0..2 {
            for i in 0..2 {
                for j in i..2 {
                    let v = delta(k, i) * df[j] + delta(k, j) * df[i] - delta(i, j) * df[k];
                    gamma.set_symmetric(k, i, j, v);
                }
            }
        }
        gamma
    }
}

impl Chart for StereographicChart {
    fn id(&self) -> usize {
        if self.pole > 0.0 {
            0
        } else {
            1
        }
    }

    fn dim(&self) -> usize {
        2
    }

    fn ambient_dim(&self) -> usize {
        3
    }

    fn coords(&self, x: &Vector) -> Result<Vector> {
        stereo_coords(x, self.pole)
    }

    fn coords_jacobian(&self, x: &Vector) -> Result<Matrix> {
        let d = 1.0 - self.pole * x[2];
        if !(d > 0.0) {
            return Err(Error::Domain(format!("point {x:?} is the projection pole")));
        }
        let s = self.pole;
        Ok(Matrix::from_row_slice(
            2,
            3,
            &[1.0 / d, 0.0, s * x[0] / (d * d), 0.0, 1.0 / d, s * x[1] / (d * d)],
        ))
    }

    fn param(&self, p: &Vector) -> Result<Vector> {
        Ok(stereo_param(p, self.pole))
    }

    fn param_jacobian(&self, p: &Vector) -> Result<Matrix> {
        let (a, b) = (p[0], p[1]);
        let nu = a * a + b * b;
        let w = (nu + 1.0) * (nu + 1.0);
        let s = self.pole;
        Ok(Matrix::from_row_slice(
            3,
            2,
            &[
                2.0 * (nu + 1.0 - 2.0 * a * a) / w,
                -4.0 * a * b / w,
                -4.0 * a * b / w,
                2.0 * (nu + 1.0 - 2.0 * b * b) / w,
                s * 4.0 * a / w,
                s * 4.0 * b / w,
            ],
        ))
    }

    fn contains(&self, p: &Vector) -> bool {
        p.norm_squared() < self.nu_max
    }

    fn metric_tensor(&self, p: &Vector) -> Result<Matrix> {
        let nu = p.norm_squared();
        Ok(Matrix::identity(2, 2) * (4.0 / ((1.0 + nu) * (1.0 + nu))))
    }

    fn metric(&self, p: &Vector) -> Result<MetricData> {
        let nu = p.norm_squared();
        let conf = 4.0 / ((1.0 + nu) * (1.0 + nu));
        Ok(MetricData {
            g: Matrix::identity(2, 2) * conf,
            g_inv: Matrix::identity(2, 2) / conf,
            gamma: Self::christoffel(p),
        })
    }
}
