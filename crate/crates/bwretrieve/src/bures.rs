//! Squared Bures-Wasserstein distance between PSD matrices, its rank-one
//! closed form, and the measurement barycenter objective it induces.
//!
//! d_BW^2(S0, S1) = tr S0 + tr S1 - 2 tr((S0^{1/2} S1 S0^{1/2})^{1/2}).
//!
//! For rank-one inputs x x^T and y y^T this collapses to
//! ||x||^2 + ||y||^2 - 2 |x^T y|, which is what makes the barycenter
//! objective evaluable at experiment sizes. The dense route goes through two
//! full symmetric eigendecompositions and is meant for verification
//! dimensions (d up to a few hundred), not for inner loops.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::objective::{amplitude_loss, ObjectiveContext};
use crate::sensing::{Measurements, SensingEnsemble};

/// A validated symmetric positive semidefinite matrix with its
/// eigendecomposition cached from validation.
#[derive(Debug, Clone)]
pub struct PsdMatrix {
    matrix: Array2<f64>,
    eigvals: Array1<f64>,
    eigvecs: Array2<f64>,
}

impl PsdMatrix {
    /// Requires symmetry within 1e-12 (relative to the largest entry) and a
    /// minimum eigenvalue no lower than -1e-10.
    pub fn new(matrix: Array2<f64>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch(format!(
                "PSD matrix must be square, got {}x{}",
                d,
                matrix.ncols()
            )));
        }
        let scale = matrix.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        for i in 0..d {
            for j in (i + 1)..d {
                if (matrix[[i, j]] - matrix[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        let (eigvals, eigvecs) = linalg::sym_eigen(&matrix)?;
        if eigvals[0] < -1e-10 {
            return Err(Error::InvalidInput(format!(
                "matrix is not positive semidefinite: min eigenvalue {}",
                eigvals[0]
            )));
        }
        Ok(PsdMatrix { matrix, eigvals, eigvecs })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Array2<f64> {
        &self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.matrix.diag().sum()
    }

    /// Symmetric square root. Eigenvalues below 1e-13 of the largest are
    /// treated as exact zeros; otherwise eigensolve noise of order eps*scale
    /// would inflate to sqrt(eps*scale) on the null space.
    fn sqrt_psd(&self) -> Array2<f64> {
        let floor = 1e-13 * self.eigvals[self.eigvals.len() - 1].max(0.0);
        let roots = self.eigvals.mapv(|v| if v <= floor { 0.0 } else { v.sqrt() });
        let scaled = &self.eigvecs * &roots.view().insert_axis(ndarray::Axis(0));
        scaled.dot(&self.eigvecs.t())
    }
}

/// Squared Bures-Wasserstein distance via eigendecomposition. The result is
/// clamped at zero; a clamp larger than 1e-8 in magnitude is logged since it
/// signals an inaccurate eigensolve rather than ordinary rounding.
pub fn bw_distance_sq(s0: &PsdMatrix, s1: &PsdMatrix) -> Result<f64> {
    if s0.dim() != s1.dim() {
        return Err(Error::DimensionMismatch(format!(
            "operands have dimensions {} and {}",
            s0.dim(),
            s1.dim()
        )));
    }
    let r0 = s0.sqrt_psd();
    let inner = r0.dot(s1.matrix()).dot(&r0);
    let inner = (&inner + &inner.t()) * 0.5;
    let (vals, _) = linalg::sym_eigen(&inner)?;
    // Same null-space floor as in sqrt_psd.
    let floor = 1e-13 * vals[vals.len() - 1].max(0.0);
    let tr_sqrt: f64 = vals.iter().map(|&v| if v <= floor { 0.0 } else { v.sqrt() }).sum();
    let raw = s0.trace() + s1.trace() - 2.0 * tr_sqrt;
    if raw < 0.0 {
        if raw < -1e-8 {
            log::warn!("clamping negative squared distance {raw:.3e} to zero");
        }
        return Ok(0.0);
    }
    Ok(raw)
}

/// Closed form for rank-one operands:
/// d_BW^2(x x^T, y y^T) = ||x||^2 + ||y||^2 - 2 |x^T y|.
pub fn rank_one_bw_sq(x: &Array1<f64>, y: &Array1<f64>) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "operands have lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok((x.dot(x) + y.dot(y) - 2.0 * x.dot(y).abs()).max(0.0))
}

/// Barycenter objective over the whitened measurement lifts:
/// (1/2n) sum_i d_BW^2(u u^T, y_i a~_i a~_i^T), evaluated through the
/// rank-one closed form with y_i a~_i a~_i^T = (sqrt(y_i) a~_i)(sqrt(y_i) a~_i)^T.
///
/// On whitened data this differs from the square-root amplitude loss
/// (1/2n) sum_i (|a~_i^T u| - sqrt(y_i))^2 by a constant in u.
pub fn barycenter_objective(
    u: &Array1<f64>,
    ensemble: &SensingEnsemble,
    y: &Measurements,
) -> Result<f64> {
    let (w, _) = ensemble.whitened_pair()?;
    if y.len() != ensemble.n() {
        return Err(Error::DimensionMismatch(format!(
            "{} measurements for {} sensing vectors",
            y.len(),
            ensemble.n()
        )));
    }
    if u.len() != ensemble.d() {
        return Err(Error::DimensionMismatch(format!(
            "point has length {}, ensemble dimension is {}",
            u.len(),
            ensemble.d()
        )));
    }
    let mut acc = 0.0;
    for i in 0..ensemble.n() {
        let lifted = w.row(i).to_owned() * y.values()[i].sqrt();
        acc += rank_one_bw_sq(u, &lifted)?;
    }
    Ok(acc / (2.0 * ensemble.n() as f64))
}

/// Square-root amplitude loss (1/2n) sum_i (|v_i^T u| - sqrt(y_i))^2, the
/// u-dependent part of [`barycenter_objective`].
pub fn sqrt_amplitude_loss(
    u: &Array1<f64>,
    ensemble: &SensingEnsemble,
    y: &Measurements,
) -> Result<f64> {
    let (w, _) = ensemble.whitened_pair()?;
    let sqrt_y = Measurements::new(y.values().mapv(f64::sqrt), None)?;
    let ctx = ObjectiveContext::new(w, &sqrt_y, 0.0)?;
    Ok(amplitude_loss(&ctx, u))
}
