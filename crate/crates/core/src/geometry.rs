//! Differential-geometric kernels evaluated at a single chart point.
//!
//! Everything here is a pure function of its arguments: metric pullback,
//! Levi-Civita Christoffel symbols, the covariant-derivative matrix `A(W)` of
//! a vector field, and extraction of the one-dimensional kernel of `A(Y)`
//! that defines the isocline line field.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Default central-difference step for metric derivatives.
pub const FD_STEP: f64 = 1e-5;

/// `sigma_(m-1) / sigma_max` below this ratio means the kernel of `A(Y)` is
/// not one-dimensional.
pub const RANK_GAP: f64 = 1e-8;

/// `sqrt(g(X, X))` at or below this value is treated as an exact zero of the field.
pub const EQUILIBRIUM_TOL: f64 = 1e-150;

/// Christoffel symbols `Γᵏᵢⱼ` of an `m`-dimensional chart.
#[derive(Clone, Debug, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn offset(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    /// `Γᵏᵢⱼ`.
    #[inline]
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[self.offset(k, i, j)]
    }

    /// Sets `Γᵏᵢⱼ` and its mirror `Γᵏⱼᵢ`.
    pub fn set_symmetric(&mut self, k: usize, i: usize, j: usize, value: f64) {
        let a = self.offset(k, i, j);
        let b = self.offset(k, j, i);
        self.data[a] = value;
        self.data[b] = value;
    }

    /// `Σᵢⱼ Γᵏᵢⱼ uⁱ vʲ` for every `k`.
    pub fn contract(&self, u: &Vector, v: &Vector) -> Vector {
        let m = self.dim;
        Vector::from_fn(m, |k, _| {
            let mut acc = 0.0;
            for i in 0..m {
                for j in 0..m {
                    acc += self.get(k, i, j) * u[i] * v[j];
                }
            }
            acc
        })
    }

    /// The `m×m` matrix `Γᵏᵢⱼ wʲ`, row `k`, column `i`.
    pub fn apply(&self, w: &Vector) -> Matrix {
        let m = self.dim;
        Matrix::from_fn(m, m, |k, i| (0..m).map(|j| self.get(k, i, j) * w[j]).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}

/// Metric tensor, its inverse and the Levi-Civita symbols at one chart point.
#[derive(Clone, Debug)]
pub struct MetricData {
    pub g: Matrix,
    pub g_inv: Matrix,
    pub gamma: Christoffel,
}

impl MetricData {
    pub fn new(g: Matrix, gamma: Christoffel) -> Result<Self> {
        let g_inv = invert_metric(&g)?;
        Ok(Self { g, g_inv, gamma })
    }

    /// Euclidean metric with vanishing connection.
    pub fn flat(dim: usize) -> Self {
        Self {
            g: Matrix::identity(dim, dim),
            g_inv: Matrix::identity(dim, dim),
            gamma: Christoffel::zeros(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn inner(&self, u: &Vector, v: &Vector) -> f64 {
        (u.transpose() * &self.g * v)[(0, 0)]
    }

    pub fn norm(&self, v: &Vector) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }
}

fn invert_metric(g: &Matrix) -> Result<Matrix> {
    let singular = || Error::SingularMetric {
        sigma_min: g.clone().singular_values().min(),
    };
    let chol = g.clone().cholesky().ok_or_else(singular)?;
    Ok(chol.inverse())
}

/// First fundamental form `DψᵀDψ` of a parameterization with Jacobian `jac_psi` (n×m).
pub fn pullback_metric(jac_psi: &Matrix) -> Result<Matrix> {
    let (n, m) = jac_psi.shape();
    if n < m {
        return Err(Error::Dimension(format!(
            "parameterization Jacobian is {n}x{m}; need at least as many rows as columns"
        )));
    }
    let sv = jac_psi.clone().singular_values();
    let sigma_max = sv.max();
    let sigma_min = sv.min();
    let tol = f64::EPSILON * n as f64 * sigma_max;
    if !(sigma_min > tol) {
        return Err(Error::SingularMetric { sigma_min });
    }
    Ok(jac_psi.tr_mul(jac_psi))
}

/// Levi-Civita symbols of a metric field by central differences of width `h`.
pub fn christoffel_from_metric<F>(metric_field: F, p: &Vector, h: f64) -> Result<Christoffel>
where
    F: Fn(&Vector) -> Result<Matrix>,
{
    if !(h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let m = p.len();
    let g = metric_field(p)?;
    let g_inv = invert_metric(&g)?;

    // dg[l] = ∂g/∂φˡ
    let mut dg = Vec::with_capacity(m);
    for l in 0..m {
        let mut fwd = p.clone();
        let mut bwd = p.clone();
        fwd[l] += h;
        bwd[l] -= h;
        dg.push((metric_field(&fwd)? - metric_field(&bwd)?) / (2.0 * h));
    }

    let mut gamma = Christoffel::zeros(m);
    for k in 0..m {
        for i in 0..m {
            for j in i..m {
                let mut acc = 0.0;
                for l in 0..m {
                    acc += g_inv[(k, l)] * (dg[j][(l, i)] + dg[i][(l, j)] - dg[l][(i, j)]);
                }
                gamma.set_symmetric(k, i, j, 0.5 * acc);
            }
        }
    }
    Ok(gamma)
}

/// Coordinate matrix of `∇W`: `a[k][i] = ∂Wᵏ/∂φⁱ + Σⱼ Γᵏᵢⱼ Wʲ`.
#[derive(Clone, Debug, PartialEq)]
pub struct CovariantMatrix(pub Matrix);

impl CovariantMatrix {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

pub fn covariant_matrix(jac_w: &Matrix, gamma: &Christoffel, w: &Vector) -> CovariantMatrix {
    CovariantMatrix(jac_w + gamma.apply(w))
}

/// `Y = X / sqrt(g(X, X))`.
pub fn normalize_field(x: &Vector, g: &Matrix) -> Result<Vector> {
    let norm_sq = (x.transpose() * g * x)[(0, 0)];
    if !(norm_sq > EQUILIBRIUM_TOL * EQUILIBRIUM_TOL) {
        return Err(Error::AtEquilibrium { norm_sq });
    }
    Ok(x / norm_sq.sqrt())
}

/// The normalized field `Y` and `A(Y)` computed from `X` and its chart Jacobian.
///
/// Uses `A(Y) = (I − Y Yᵀ g) A(X) / sqrt(g(X, X))`, which follows from metric
/// compatibility of the Levi-Civita connection and needs no derivatives of `g`.
pub fn normalized_covariant_matrix(
    x: &Vector,
    jac_x: &Matrix,
    metric: &MetricData,
) -> Result<(Vector, CovariantMatrix)> {
    let y = normalize_field(x, &metric.g)?;
    let s = metric.norm(x);
    let a_x = covariant_matrix(jac_x, &metric.gamma, x).into_inner();
    let m = x.len();
    let projector = Matrix::identity(m, m) - &y * (y.transpose() * &metric.g);
    Ok((y, CovariantMatrix(projector * a_x / s)))
}

/// Unit right singular vector for the smallest singular value of `A(Y)`.
#[derive(Clone, Debug)]
pub struct LineDirection {
    pub direction: Vector,
    /// `sigma_min / sigma_max`.
    pub residual: f64,
    /// Singular values in non-increasing order.
    pub singular_values: Vec<f64>,
}

pub fn line_field_direction(a: &Matrix) -> Result<LineDirection> {
    let m = a.nrows();
    if m < 2 || a.ncols() != m {
        return Err(Error::Dimension(format!(
            "line field needs a square matrix with m >= 2, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    let svd = a.clone().svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

    let sigma_max = singular_values[0];
    let gap = if sigma_max > 0.0 {
        singular_values[m - 2] / sigma_max
    } else {
        0.0
    };
    if !(gap >= RANK_GAP) {
        return Err(Error::AmbiguousKernel { ratio: gap });
    }
    let smallest = order[m - 1];
    let direction = v_t.row(smallest).transpose();
    Ok(LineDirection {
        direction,
        residual: singular_values[m - 1] / sigma_max,
        singular_values,
    })
}

/// Transpose of the cofactor matrix; defined for singular input.
pub fn adjugate(mat: &Matrix) -> Matrix {
    let m = mat.nrows();
    assert_eq!(m, mat.ncols(), "adjugate needs a square matrix");
    if m == 1 {
        return Matrix::from_element(1, 1, 1.0);
    }
    Matrix::from_fn(m, m, |i, j| {
        // adj[i][j] = (−1)^{i+j} det(M with row j and column i removed)
        let minor = mat.clone().remove_row(j).remove_column(i);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * minor.determinant()
    })
}

/// Angle between two lines (sign-insensitive), in radians.
pub fn line_angle(u: &Vector, v: &Vector) -> f64 {
    let nu = u.norm();
    let nv = v.norm();
    if nu == 0.0 || nv == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    let u = u / nu;
    let v = v / nv;
    let cos = u.dot(&v);
    let sin = (&u - &v * cos).norm();
    sin.atan2(cos.abs())
}
