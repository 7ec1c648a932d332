use nalgebra::SVD;

use super::{Mat, Vector};
use crate::error::{dims, Error, Result};

/// Relative singular-value threshold used for every full-rank check.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values of `m`, sorted descending.
fn sorted_singular_values(m: &Mat) -> Vec<f64> {
    let mut sv: Vec<f64> = m.singular_values().iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

/// `sigma_min / sigma_max` over the `min(rows, cols)` singular values; 0 for a zero matrix.
pub fn rank_ratio(m: &Mat) -> f64 {
    let sv = sorted_singular_values(m);
    match (sv.first(), sv.last()) {
        (Some(&max), Some(&min)) if max > 0.0 => min / max,
        _ => 0.0,
    }
}

fn check_finite(m: &Mat, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::DomainError(format!("{what} has non-finite entries")))
    }
}

/// Left inverse of a full column rank matrix, `M^L = V S^-1 U^T` from a thin SVD.
pub fn left_inverse(m: &Mat) -> Result<Mat> {
    check_finite(m, "left_inverse input")?;
    let (rows, cols) = m.shape();
    if rows < cols || cols == 0 {
        return Err(Error::RankDeficient { ratio: 0.0 });
    }
    let svd = SVD::new(m.clone(), true, true);
    let sv = &svd.singular_values;
    let max = sv.max();
    let min = sv.min();
    if !(max > 0.0) || min <= RANK_TOL * max {
        return Err(Error::RankDeficient {
            ratio: if max > 0.0 { min / max } else { 0.0 },
        });
    }
    let u = svd.u.as_ref().expect("u requested");
    let v_t = svd.v_t.as_ref().expect("v_t requested");
    let s_inv = Mat::from_diagonal(&sv.map(|s| 1.0 / s));
    Ok(v_t.transpose() * s_inv * u.transpose())
}

/// Orthonormal basis of the null space of a wide, full row rank matrix.
///
/// The input is zero-padded to square so that the SVD returns the complete
/// right singular basis; the trailing `n - m` right singular vectors span the kernel.
pub fn kernel_basis(ml: &Mat) -> Result<Mat> {
    check_finite(ml, "kernel_basis input")?;
    let (m, n) = ml.shape();
    if m >= n {
        return Err(Error::EmptyKernel);
    }
    let mut padded = Mat::zeros(n, n);
    padded.view_mut((0, 0), (m, n)).copy_from(ml);
    let svd = SVD::new(padded, false, true);
    let v_t = svd.v_t.as_ref().expect("v_t requested");

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let max = svd.singular_values[order[0]];
    let row_rank_min = svd.singular_values[order[m - 1]];
    if !(max > 0.0) || row_rank_min <= RANK_TOL * max {
        return Err(Error::RankDeficient {
            ratio: if max > 0.0 { row_rank_min / max } else { 0.0 },
        });
    }

    let mut basis = Mat::zeros(n, n - m);
    for (col, &idx) in order[m..].iter().enumerate() {
        basis.set_column(col, &v_t.row(idx).transpose());
    }
    Ok(basis)
}

/// Lower Cholesky factor, or `NotPositiveDefinite` tagged with `name`.
pub fn cholesky_factor(m: &Mat, name: &'static str) -> Result<Mat> {
    if !m.is_square() {
        return Err(dims(format!("{name} must be square, got {:?}", m.shape())));
    }
    nalgebra::Cholesky::new(m.clone())
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite(name))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn is_symmetric(m: &Mat, tol: f64) -> bool {
    m.is_square() && (m - m.transpose()).amax() <= tol
}

/// `v^T W v` summed in row-major order with plain loops.
///
/// The summation order depends only on the index layout, so zero-padded
/// operands produce the same floating-point result as the unpadded ones.
pub fn quad_form(v: &Vector, w: &Mat) -> f64 {
    debug_assert_eq!(w.shape(), (v.len(), v.len()));
    let mut acc = 0.0;
    for i in 0..v.len() {
        let mut row = 0.0;
        for j in 0..v.len() {
            row += w[(i, j)] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}
