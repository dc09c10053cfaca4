//! Small dense kernels: Cholesky, triangular solves, symmetric eigensolver.
//!
//! Everything here targets the verification scale of this crate (dimensions in
//! the hundreds). The eigensolver is a cyclic Jacobi sweep: slower than LAPACK
//! but dependency-free, deterministic, and very robust on symmetric input.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};

/// Lower-triangular Cholesky factor of a symmetric positive definite matrix.
///
/// Fails with the index of the first non-positive pivot, which for covariance
/// input pinpoints the direction in which the ensemble is degenerate.
pub fn cholesky(a: &Array2<f64>) -> Result<Array2<f64>> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "cholesky needs a square matrix, got {}x{}",
            d,
            a.ncols()
        )));
    }
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut diag = a[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if diag <= 0.0 || !diag.is_finite() {
            return Err(Error::DegenerateEnsemble { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn forward_substitution(l: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let d = check_triangular_system(l, b)?;
    let mut x = Array1::<f64>::zeros(d);
    for i in 0..d {
        let mut s = b[i];
        for j in 0..i {
            s -= l[[i, j]] * x[j];
        }
        let diag = l[[i, i]];
        if diag == 0.0 {
            return Err(Error::SingularFactor { index: i });
        }
        x[i] = s / diag;
    }
    Ok(x)
}

/// Solves `L^T x = b` for lower-triangular `L` (back substitution).
pub fn transposed_substitution(l: &Array2<f64>, b: &Array1<f64>) -> Result<Array1<f64>> {
    let d = check_triangular_system(l, b)?;
    let mut x = Array1::<f64>::zeros(d);
    for i in (0..d).rev() {
        let mut s = b[i];
        for j in (i + 1)..d {
            // L^T[i, j] = L[j, i]
            s -= l[[j, i]] * x[j];
        }
        let diag = l[[i, i]];
        if diag == 0.0 {
            return Err(Error::SingularFactor { index: i });
        }
        x[i] = s / diag;
    }
    Ok(x)
}

fn check_triangular_system(l: &Array2<f64>, b: &Array1<f64>) -> Result<usize> {
    let d = l.nrows();
    if l.ncols() != d || b.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "triangular solve: factor {}x{}, rhs {}",
            d,
            l.ncols(),
            b.len()
        )));
    }
    Ok(d)
}

/// Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Input symmetry is the caller's responsibility;
/// only the lower/upper agreement up to rounding matters.
pub fn sym_eigen(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let d = a.nrows();
    if a.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "sym_eigen needs a square matrix, got {}x{}",
            d,
            a.ncols()
        )));
    }
    let mut m = a.clone();
    let mut q = Array2::<f64>::eye(d);
    if d > 1 {
        let scale = m.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        let tol = 1e-15 * scale;
        for _sweep in 0..60 {
            let mut off = 0.0;
            for p in 0..d {
                for r in (p + 1)..d {
                    off += m[[p, r]] * m[[p, r]];
                }
            }
            if off.sqrt() <= tol {
                break;
            }
            for p in 0..(d - 1) {
                for r in (p + 1)..d {
                    let apr = m[[p, r]];
                    if apr.abs() <= f64::MIN_POSITIVE {
                        continue;
                    }
                    // Rotation angle that annihilates m[p, r].
                    let theta = (m[[r, r]] - m[[p, p]]) / (2.0 * apr);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + (theta * theta + 1.0).sqrt())
                    } else {
                        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
                    };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..d {
                        let mkp = m[[k, p]];
                        let mkr = m[[k, r]];
                        m[[k, p]] = c * mkp - s * mkr;
                        m[[k, r]] = s * mkp + c * mkr;
                    }
                    for k in 0..d {
                        let mpk = m[[p, k]];
                        let mrk = m[[r, k]];
                        m[[p, k]] = c * mpk - s * mrk;
                        m[[r, k]] = s * mpk + c * mrk;
                    }
                    for k in 0..d {
                        let qkp = q[[k, p]];
                        let qkr = q[[k, r]];
                        q[[k, p]] = c * qkp - s * qkr;
                        q[[k, r]] = s * qkp + c * qkr;
                    }
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| m[[i, i]].total_cmp(&m[[j, j]]));
    let values = Array1::from_iter(order.iter().map(|&i| m[[i, i]]));
    let mut vectors = Array2::<f64>::zeros((d, d));
    for (dst, &src) in order.iter().enumerate() {
        vectors.column_mut(dst).assign(&q.column(src));
    }
    Ok((values, vectors))
}

/// Spectral norm of a symmetric matrix (largest |eigenvalue|).
pub fn sym_spectral_norm(a: &Array2<f64>) -> Result<f64> {
    let (values, _) = sym_eigen(a)?;
    Ok(values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())))
}
