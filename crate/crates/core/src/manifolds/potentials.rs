use crate::error::{Error, Result};
use crate::field::Potential;
use crate::geometry::Vector;

/// Müller-Brown prefactors `Aᵢ`.
pub const MB_A: [f64; 4] = [-200.0, -100.0, -170.0, 15.0];
/// Quadratic-form coefficients `aᵢ` (x¹x¹), `bᵢ` (x¹x²), `cᵢ` (x²x²).
pub const MB_LOWER: [f64; 4] = [-1.0, -1.0, -6.5, 0.7];
pub const MB_B: [f64; 4] = [0.0, 0.0, 11.0, 0.6];
pub const MB_C: [f64; 4] = [-10.0, -10.0, -6.5, 0.7];
/// Gaussian centers.
pub const MB_X0: [f64; 4] = [1.0, 0.0, -0.5, -1.0];
pub const MB_Y0: [f64; 4] = [0.0, 0.5, 1.5, 1.0];

/// Exponents are clamped to this magnitude; only reached far outside the
/// window where the landscape is studied.
const EXPONENT_CLAMP: f64 = 500.0;

/// Planar Müller-Brown energy and gradient at `x ∈ ℝ²`.
pub fn muller_brown_planar(x: &Vector) -> (f64, Vector) {
    let (u, v) = MullerBrown::energy_gradient(x[0], x[1]);
    (u, Vector::from_row_slice(&v))
}

/// The four-Gaussian Müller-Brown surface.
pub struct MullerBrown;

impl MullerBrown {
    pub fn energy_gradient(x: f64, y: f64) -> (f64, [f64; 2]) {
        let mut energy = 0.0;
        let mut grad = [0.0; 2];
        for i in 0..4 {
            let dx = x - MB_X0[i];
            let dy = y - MB_Y0[i];
            let q = MB_LOWER[i] * dx * dx + MB_B[i] * dx * dy + MB_C[i] * dy * dy;
            let e = MB_A[i] * q.clamp(-EXPONENT_CLAMP, EXPONENT_CLAMP).exp();
            energy += e;
            grad[0] += e * (2.0 * MB_LOWER[i] * dx + MB_B[i] * dy);
            grad[1] += e * (MB_B[i] * dx + 2.0 * MB_C[i] * dy);
        }
        (energy, grad)
    }
}

/// Affine map `κ` from angular coordinates to the Müller-Brown plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kappa {
    pub scale: [f64; 2],
    pub offset: [f64; 2],
    /// When set, the first output uses the second input and vice versa.
    pub swap: bool,
}

impl Kappa {
    pub fn apply(&self, k: [f64; 2]) -> [f64; 2] {
        let (a, b) = if self.swap { (k[1], k[0]) } else { (k[0], k[1]) };
        [self.scale[0] * a + self.offset[0], self.scale[1] * b + self.offset[1]]
    }

    pub fn invert(&self, u: [f64; 2]) -> [f64; 2] {
        let a = (u[0] - self.offset[0]) / self.scale[0];
        let b = (u[1] - self.offset[1]) / self.scale[1];
        if self.swap {
            [b, a]
        } else {
            [a, b]
        }
    }

    /// `dE/dk` from `dU/du`.
    fn pull_gradient(&self, du: [f64; 2]) -> [f64; 2] {
        let da = self.scale[0] * du[0];
        let db = self.scale[1] * du[1];
        if self.swap {
            [db, da]
        } else {
            [da, db]
        }
    }
}

pub const SPHERE_KAPPA: Kappa = Kappa {
    scale: [1.973521294, 1.750704373],
    offset: [-1.85, 0.875],
    swap: false,
};

pub const PSEUDOSPHERE_KAPPA: Kappa = Kappa {
    scale: [0.9867606472, 4.406507321],
    offset: [-1.85, -1.715856588],
    swap: true,
};

/// Müller-Brown potential on the plane.
#[derive(Clone, Copy, Debug, Default)]
pub struct PlanarMullerBrown;

impl Potential for PlanarMullerBrown {
    fn energy(&self, x: &Vector) -> Result<f64> {
        Ok(MullerBrown::energy_gradient(x[0], x[1]).0)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(Vector::from_row_slice(&MullerBrown::energy_gradient(x[0], x[1]).1))
    }
}

/// Longitude/latitude-style angles `(arctan(x²/x¹), arctan(x³/ρ))`, principal branch.
fn sphere_angles(x: &Vector) -> Result<[f64; 2]> {
    if x[0] == 0.0 || !x[0].is_finite() {
        return Err(Error::Domain(format!("arctan(x2/x1) undefined at x1 = {}", x[0])));
    }
    let rho = x[0].hypot(x[1]);
    Ok([(x[1] / x[0]).atan(), (x[2] / rho).atan()])
}

/// Müller-Brown energy carried to the sphere through the angular map and `κ`.
pub fn muller_brown_on_sphere(x: &Vector) -> Result<f64> {
    SphereMullerBrown.energy(x)
}

/// Müller-Brown potential on `S²`.
#[derive(Clone, Copy, Debug, Default)]
pub struct SphereMullerBrown;

impl SphereMullerBrown {
    /// Point of `S²` (with `x¹ > 0`) whose angles map to the planar point `u` under `κ`.
    pub fn from_planar(u: [f64; 2]) -> Vector {
        let [k1, k2] = SPHERE_KAPPA.invert(u);
        Vector::from_row_slice(&[k2.cos() * k1.cos(), k2.cos() * k1.sin(), k2.sin()])
    }

    pub fn to_planar(x: &Vector) -> Result<[f64; 2]> {
        Ok(SPHERE_KAPPA.apply(sphere_angles(x)?))
    }
}

impl Potential for SphereMullerBrown {
    fn energy(&self, x: &Vector) -> Result<f64> {
        let [u, v] = Self::to_planar(x)?;
        Ok(MullerBrown::energy_gradient(u, v).0)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        let [u, v] = Self::to_planar(x)?;
        let (_, du) = MullerBrown::energy_gradient(u, v);
        let [e1, e2] = SPHERE_KAPPA.pull_gradient(du);
        let (x1, x2, x3) = (x[0], x[1], x[2]);
        let rho2 = x1 * x1 + x2 * x2;
        let rho = rho2.sqrt();
        let r2 = rho2 + x3 * x3;
        let dk1 = [-x2 / rho2, x1 / rho2, 0.0];
        let dk2 = [-x3 * x1 / (rho * r2), -x3 * x2 / (rho * r2), rho / r2];
        Ok(Vector::from_fn(3, |i, _| e1 * dk1[i] + e2 * dk2[i]))
    }
}

/// Müller-Brown potential on the pseudosphere, through `(ρ, arctan(x²/x¹))` and `κ`.
#[derive(Clone, Copy, Debug, Default)]
pub struct PseudosphereMullerBrown;

impl PseudosphereMullerBrown {
    pub fn to_planar(x: &Vector) -> Result<[f64; 2]> {
        if !(x[0] > 0.0) {
            return Err(Error::Domain(format!(
                "arctan(x2/x1) branch requires x1 > 0, got {}",
                x[0]
            )));
        }
        Ok(PSEUDOSPHERE_KAPPA.apply([x[0].hypot(x[1]), (x[1] / x[0]).atan()]))
    }

    /// Chart point `(radius, angle)` mapping to the planar point `u`.
    pub fn chart_from_planar(u: [f64; 2]) -> Vector {
        let k = PSEUDOSPHERE_KAPPA.invert(u);
        Vector::from_row_slice(&k)
    }
}

impl Potential for PseudosphereMullerBrown {
    fn energy(&self, x: &Vector) -> Result<f64> {
        let [u, v] = Self::to_planar(x)?;
        Ok(MullerBrown::energy_gradient(u, v).0)
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        let [u, v] = Self::to_planar(x)?;
        let (_, du) = MullerBrown::energy_gradient(u, v);
        let [e_rho, e_ang] = PSEUDOSPHERE_KAPPA.pull_gradient(du);
        let (x1, x2) = (x[0], x[1]);
        let rho2 = x1 * x1 + x2 * x2;
        let rho = rho2.sqrt();
        Ok(Vector::from_row_slice(&[
            e_rho * x1 / rho - e_ang * x2 / rho2,
            e_rho * x2 / rho + e_ang * x1 / rho2,
            0.0,
        ]))
    }
}

/// `E(x) = x¹x²x³`.
#[derive(Clone, Copy, Debug, Default)]
pub struct XyzPotential;

impl Potential for XyzPotential {
    fn energy(&self, x: &Vector) -> Result<f64> {
        Ok(x[0] * x[1] * x[2])
    }

    fn gradient(&self, x: &Vector) -> Result<Vector> {
        Ok(Vector::from_row_slice(&[x[1] * x[2], x[0] * x[2], x[0] * x[1]]))
    }
}

/// `(coefficient, power of p¹, power of p²)` for the first line-field component.
const L1_TERMS: [(f64, usize, usize); 21] = [
    (1.0, 11, 0),
    (5.0, 9, 2),
    (10.0, 7, 4),
    (10.0, 5, 6),
    (5.0, 3, 8),
    (1.0, 1, 10),
    (-5.0, 9, 0),
    (28.0, 7, 2),
    (50.0, 5, 4),
    (-4.0, 3, 6),
    (-21.0, 1, 8),
    (-6.0, 7, 0),
    (-130.0, 5, 2),
    (-130.0, 3, 4),
    (-6.0, 1, 6),
    (6.0, 5, 0),
    (124.0, 3, 2),
    (6.0, 1, 4),
    (5.0, 3, 0),
    (-11.0, 1, 2),
    (-1.0, 1, 0),
];

/// Nested Horner evaluation of `Σ c aⁱ bʲ`.
fn horner_2d(terms: &[(f64, usize, usize)], a: f64, b: f64) -> f64 {
    let mut coeffs = [[0.0_f64; 12]; 12];
    for &(c, i, j) in terms {
        coeffs[i][j] += c;
    }
    coeffs.iter().rev().fold(0.0, |acc, row| {
        let inner = row.iter().rev().fold(0.0, |s, &c| s * b + c);
        acc * a + inner
    })
}

/// Closed-form line field `(L¹, L²)` of `E = x¹x²x³` in the stereographic chart from the north pole.
///
/// `L²` is `L¹` with `p¹` and `p²` exchanged.
pub fn xyz_line_field(p: &Vector) -> Vector {
    let (a, b) = (p[0], p[1]);
    Vector::from_row_slice(&[horner_2d(&L1_TERMS, a, b), horner_2d(&L1_TERMS, b, a)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::central_gradient;
    use approx::assert_relative_eq;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn table_spot_values() {
        assert_eq!(MB_A[2], -170.0);
        assert_eq!(MB_B[2], 11.0);
        assert_eq!(MB_X0[3], -1.0);
        assert_eq!(MB_Y0[1], 0.5);
    }

    #[test]
    fn kappa_at_origin() {
        assert_eq!(SPHERE_KAPPA.apply([0.0, 0.0]), [-1.85, 0.875]);
        assert_eq!(PSEUDOSPHERE_KAPPA.apply([0.0, 0.0]), [-1.85, -1.715856588]);
        assert_eq!(PSEUDOSPHERE_KAPPA.apply([1.0, 0.0]), [-1.85, 4.406507321 - 1.715856588]);
        let k = [0.3, -0.2];
        let back = SPHERE_KAPPA.invert(SPHERE_KAPPA.apply(k));
        assert_relative_eq!(back[0], k[0], epsilon = 1e-15);
        assert_relative_eq!(back[1], k[1], epsilon = 1e-15);
    }

    #[test]
    fn clamped_far_field_stays_finite() {
        let (e, g) = muller_brown_planar(&v(&[200.0, -300.0]));
        assert!(e.is_finite() && g.iter().all(|c| c.is_finite()));
    }

    #[test]
    fn sphere_gradient_matches_finite_differences() {
        let pot = SphereMullerBrown;
        let x = SphereMullerBrown::from_planar([-0.3, 0.9]);
        let fd = central_gradient(&|y: &Vector| pot.energy(y), &x, 1e-7).unwrap();
        assert_relative_eq!(pot.gradient(&x).unwrap(), fd, max_relative = 1e-6, epsilon = 1e-6);
        // degree-zero homogeneity: the gradient is tangent
        assert!(pot.gradient(&x).unwrap().dot(&x).abs() < 1e-9);
    }

    #[test]
    fn pseudosphere_gradient_matches_finite_differences() {
        let pot = PseudosphereMullerBrown;
        let x = v(&[0.4, 0.3, 0.8]);
        let fd = central_gradient(&|y: &Vector| pot.energy(y), &x, 1e-7).unwrap();
        assert_relative_eq!(pot.gradient(&x).unwrap(), fd, max_relative = 1e-6, epsilon = 1e-6);
    }

    #[test]
    fn sphere_potential_domain() {
        assert!(matches!(
            muller_brown_on_sphere(&v(&[0.0, 0.6, 0.8])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn line_field_origin_and_parity() {
        assert_eq!(xyz_line_field(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        let p = v(&[0.37, -0.81]);
        assert_relative_eq!(xyz_line_field(&(-&p)), -xyz_line_field(&p), epsilon = 1e-14);
        // lowest-order terms: L ≈ −p near the origin
        let small = v(&[1e-4, 2e-4]);
        assert_relative_eq!(xyz_line_field(&small), -&small, max_relative = 1e-6);
    }
}
