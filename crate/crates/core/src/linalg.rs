//! Small dense linear algebra on top of `nalgebra`.

use alloc::format;
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand_core::RngCore;

use crate::dist::standard_normal;
use crate::{Error, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Diagonal jitter added once before a conditional factorisation is
/// declared singular.
pub const JITTER: f64 = 1e-10;

/// Cholesky factor of a matrix that must be positive definite with every
/// pivot above `1e-10` relative to the largest diagonal entry.
pub fn cholesky_strict(m: &Mat) -> Result<Cholesky<f64, Dyn>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite);
    }
    let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b));
    if scale <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let chol = Cholesky::new(m.clone()).ok_or(Error::NotPositiveDefinite)?;
    let min_pivot = chol.l_dirty().diagonal().iter().fold(f64::INFINITY, |a, &b| a.min(b * b));
    if min_pivot <= 1e-10 * scale {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(chol)
}

/// Cholesky factor for a sampler conditional: one retry with [`JITTER`] on
/// the diagonal, then `NumericalBreakdown`.
pub fn cholesky_jittered(m: Mat, block: &'static str) -> Result<Cholesky<f64, Dyn>> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalBreakdown {
            block,
            detail: format!("non-finite entries in {}x{} matrix", m.nrows(), m.ncols()),
        });
    }
    let n = m.nrows();
    match Cholesky::new(m.clone()) {
        Some(c) => Ok(c),
        None => {
            let jittered = m + Mat::identity(n, n) * JITTER;
            Cholesky::new(jittered).ok_or_else(|| Error::NumericalBreakdown {
                block,
                detail: format!("{n}x{n} conditional precision not positive definite"),
            })
        }
    }
}

/// Draws from `N(P^{-1} b, P^{-1})` given the precision `P` and the
/// canonical mean vector `b`. Returns the draw and the mean.
pub fn draw_from_precision<R: RngCore + ?Sized>(
    precision: Mat,
    canonical: &Vector,
    scale: f64,
    rng: &mut R,
    block: &'static str,
) -> Result<(Vector, Vector)> {
    let chol = cholesky_jittered(precision, block)?;
    let mean = chol.solve(canonical);
    let z = Vector::from_fn(mean.len(), |_, _| standard_normal(rng) * scale);
    let dev = chol
        .l()
        .tr_solve_lower_triangular(&z)
        .ok_or_else(|| Error::NumericalBreakdown {
            block,
            detail: "triangular solve failed".into(),
        })?;
    Ok((&mean + dev, mean))
}

/// Inverse of a symmetric positive-definite matrix, symmetrised.
pub fn spd_inverse(m: &Mat) -> Result<Mat> {
    let chol = cholesky_strict(m)?;
    let mut inv = chol.inverse();
    symmetrize(&mut inv);
    Ok(inv)
}

pub fn symmetrize(m: &mut Mat) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// True when the matrix is symmetric and admits a strict Cholesky factor.
pub fn is_spd(m: &Mat) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let tol = 1e-9 * (1.0 + m[(i, j)].abs());
            if (m[(i, j)] - m[(j, i)]).abs() > tol {
                return false;
            }
        }
    }
    cholesky_strict(m).is_ok()
}

/// `x' M x` for a symmetric `M`.
pub fn quad_form(m: &Mat, x: &[f64]) -> f64 {
    let n = x.len();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += x[i] * m[(i, j)] * x[j];
        }
    }
    acc
}
