//! Thin wrappers over faer's dense factorizations.

use std::hash::{DefaultHasher, Hasher};

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub fn frobenius_norm(m: MatRef<'_, Complex64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

/// Stable hash of the matrix bits, used to identify inputs in error reports.
pub fn fingerprint(m: MatRef<'_, Complex64>) -> u64 {
    let mut h = DefaultHasher::new();
    h.write_usize(m.nrows());
    h.write_usize(m.ncols());
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            h.write_u64(m[(i, j)].re.to_bits());
            h.write_u64(m[(i, j)].im.to_bits());
        }
    }
    h.finish()
}

pub fn check_finite(m: MatRef<'_, Complex64>) -> Result<()> {
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn is_hermitian(m: MatRef<'_, Complex64>) -> bool {
    m.nrows() == m.ncols() && (0..m.nrows()).all(|i| (0..=i).all(|j| m[(i, j)] == m[(j, i)].conj()))
}

/// Eigenvalues and right eigenvectors (columns) of a complex matrix.
///
/// Exactly hermitian input goes through the self-adjoint solver, which
/// returns an orthonormal basis even inside degenerate subspaces.
pub fn eig(m: MatRef<'_, Complex64>) -> Result<(Vec<Complex64>, Mat<Complex64>)> {
    check_finite(m)?;
    if is_hermitian(m) {
        let e = m
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| Error::NoConvergence {
                rows: m.nrows(),
                fingerprint: fingerprint(m),
            })?;
        let s = e.S().column_vector();
        let values = (0..m.nrows())
            .map(|i| Complex64::new(s[i].re, 0.0))
            .collect();
        return Ok((values, e.U().to_owned()));
    }
    let e = m.eigen().map_err(|_| Error::NoConvergence {
        rows: m.nrows(),
        fingerprint: fingerprint(m),
    })?;
    let s = e.S().column_vector();
    let values = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, e.U().to_owned()))
}

pub fn eigenvalues(m: MatRef<'_, Complex64>) -> Result<Vec<Complex64>> {
    check_finite(m)?;
    m.eigenvalues().map_err(|_| Error::NoConvergence {
        rows: m.nrows(),
        fingerprint: fingerprint(m),
    })
}

/// Unitary polar factor `U V^dagger` of `m = U S V^dagger`, together with the
/// smallest singular value.
pub fn polar_unitary(m: MatRef<'_, Complex64>) -> Result<(Mat<Complex64>, f64)> {
    check_finite(m)?;
    let svd = m.svd().map_err(|_| Error::NoConvergence {
        rows: m.nrows(),
        fingerprint: fingerprint(m),
    })?;
    let s = svd.S().column_vector();
    let smallest = (0..s.nrows())
        .map(|i| s[i].re)
        .fold(f64::INFINITY, f64::min);
    let q = svd.U() * svd.V().adjoint();
    Ok((q, smallest))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    /// `ln |det|`
    pub log_abs: f64,
    /// `arg det` in `(-pi, pi]`
    pub phase: f64,
    /// Smallest `|u_ii|` relative to the largest.
    pub min_pivot_ratio: f64,
}

/// Log-magnitude and phase of the determinant from a partially pivoted LU.
pub fn log_det(m: MatRef<'_, Complex64>) -> Result<LogDet> {
    check_finite(m)?;
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::InvalidArgument(format!(
            "determinant of a {}x{} matrix",
            n,
            m.ncols()
        )));
    }
    let lu = m.partial_piv_lu();
    let u = lu.U();
    let mut log_abs = 0.0;
    let mut phase = 0.0;
    let mut min_pivot = f64::INFINITY;
    let mut max_pivot: f64 = 0.0;
    for i in 0..n {
        let d = u[(i, i)];
        let r = d.norm();
        min_pivot = min_pivot.min(r);
        max_pivot = max_pivot.max(r);
        log_abs += r.ln();
        phase += d.arg();
    }
    let (fwd, _) = lu.P().arrays();
    if permutation_is_odd(fwd) {
        phase += std::f64::consts::PI;
    }
    let phase = Complex64::cis(phase).arg();
    let min_pivot_ratio = if max_pivot > 0.0 {
        min_pivot / max_pivot
    } else {
        0.0
    };
    Ok(LogDet {
        log_abs,
        phase,
        min_pivot_ratio,
    })
}

fn permutation_is_odd(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0usize;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        transpositions += len - 1;
    }
    transpositions % 2 == 1
}
