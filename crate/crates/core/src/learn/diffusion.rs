use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Matrix, Vector};

/// Off-diagonal kernel mass below which a point counts as isolated.
const CONNECTIVITY_TOL: f64 = 1e-12;

/// Median of the pairwise Euclidean distances between rows, zeros excluded.
pub fn median_bandwidth(points: &Matrix) -> Result<f64> {
    let k = points.nrows();
    let mut dists = Vec::with_capacity(k * k.saturating_sub(1) / 2);
    for i in 0..k {
        for j in 0..i {
            let d = (points.row(i) - points.row(j)).norm();
            if d > 0.0 {
                dists.push(d);
            }
        }
    }
    if dists.is_empty() {
        return Err(Error::DegenerateCloud);
    }
    dists.sort_by(f64::total_cmp);
    let n = dists.len();
    Ok(if n % 2 == 1 {
        dists[n / 2]
    } else {
        0.5 * (dists[n / 2 - 1] + dists[n / 2])
    })
}

/// Diffusion-map coordinates of a point cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiffusionEmbedding {
    pub bandwidth: f64,
    /// Leading non-trivial eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// `K × m`; column `i` is eigenvector `i` scaled by its eigenvalue.
    pub coordinates: Matrix,
    /// Eigenvalue spectrum including the trivial one, for choosing `m`.
    pub spectrum: Vec<f64>,
    /// The trivial eigenvector, normalized to mean one under the stationary weights.
    pub trivial: Vector,
}

/// Number of spectrum entries kept for diagnostics.
const SPECTRUM_LEN: usize = 10;

/// Diffusion maps with kernel `exp(−d²/2ε²)` and density normalization `α = 1`.
pub fn diffusion_maps(points: &Matrix, eps: f64, m: usize) -> Result<DiffusionEmbedding> {
    let k = points.nrows();
    if k < m + 2 {
        return Err(Error::InvalidParameter(format!(
            "diffusion maps need K > m + 1, got K = {k}, m = {m}"
        )));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bandwidth must be positive, got {eps}"
        )));
    }
    let scale = -0.5 / (eps * eps);
    let mut kernel = Matrix::identity(k, k);
    for i in 0..k {
        for j in 0..i {
            let d2 = (points.row(i) - points.row(j)).norm_squared();
            let v = (scale * d2).exp();
            kernel[(i, j)] = v;
            kernel[(j, i)] = v;
        }
    }
    for i in 0..k {
        if kernel.row(i).sum() - 1.0 < CONNECTIVITY_TOL {
            return Err(Error::Disconnected { index: i });
        }
    }
    // α = 1: k̃(x, y) = k(x, y) / (q(x) q(y))
    let q: Vector = kernel.column_sum();
    for i in 0..k {
        for j in 0..k {
            kernel[(i, j)] /= q[i] * q[j];
        }
    }
    let d: Vector = kernel.column_sum();
    let inv_sqrt_d = d.map(|v| 1.0 / v.sqrt());
    let mut sym = kernel;
    for i in 0..k {
        for j in 0..k {
            sym[(i, j)] *= inv_sqrt_d[i] * inv_sqrt_d[j];
        }
    }
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let total: f64 = d.sum();
    // right eigenvectors of D⁻¹K̃, scaled to unit norm under the weights d / Σd
    let right = |idx: usize| -> Vector {
        let mut psi = eig.eigenvectors.column(idx).component_mul(&inv_sqrt_d);
        let norm2: f64 = psi.iter().zip(d.iter()).map(|(p, w)| p * p * w).sum::<f64>() / total;
        psi /= norm2.sqrt();
        let lead = psi
            .iter()
            .copied()
            .max_by(|a, b| a.abs().total_cmp(&b.abs()))
            .unwrap_or(1.0);
        if lead < 0.0 {
            psi = -psi;
        }
        psi
    };

    let trivial = right(order[0]);
    let eigenvalues: Vec<f64> = order[1..=m].iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut coordinates = Matrix::zeros(k, m);
    for (c, &idx) in order[1..=m].iter().enumerate() {
        coordinates.set_column(c, &(right(idx) * eig.eigenvalues[idx]));
    }
    let spectrum = order.iter().take(SPECTRUM_LEN).map(|&i| eig.eigenvalues[i]).collect();
    Ok(DiffusionEmbedding {
        bandwidth: eps,
        eigenvalues,
        coordinates,
        spectrum,
        trivial,
    })
}
