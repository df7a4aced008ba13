//! Spectral stability analysis of the time-stepping operator.
//!
//! Eliminating the coefficients from one main step leaves a two-level
//! recurrence in the collocation values,
//!
//! ```text
//! (I - dt^2 L) u^{n+1} = 2 u^n - u^{n-1} + forcing,   L = H E^{-1},
//! ```
//!
//! where `H[(l,i)] = h_i(x_l)` and `E` is the representation matrix. The
//! homogeneous part advances `(u^{n+1}, u^n)` by the block companion matrix
//! `B = [[2 K^{-1}, -K^{-1}], [I, 0]]` with `K = I - dt^2 L`, so the scheme
//! is stable exactly when the spectral radius of `B` stays at or below one.

use num_complex::Complex64;

use crate::error::Error;
use crate::haar::HaarBasis;
use crate::numerics::{eigenvalues, lu_factor, DenseMatrix};
use crate::solver::representation_matrix;

/// Allowed overshoot of the spectral radius above one. Eigenvalues of the
/// companion matrix are defective at dt = 0, where the radius is exactly
/// one but finite arithmetic perturbs it at about this scale.
pub const DEFAULT_STABILITY_TOL: f64 = 1e-8;

/// `K = I - dt^2 H E^{-1}` on the collocation grid at resolution `j`.
fn transfer_matrix(basis: &HaarBasis, dt: f64) -> Result<DenseMatrix, Error> {
    let size = basis.size();
    let e = representation_matrix(basis);
    let e_inv = lu_factor(&e)
        .map_err(|err| match err {
            Error::Singular { pivot, .. } => Error::Singular {
                context: format!("representation system (J = {})", basis.level()),
                pivot,
            },
            other => other,
        })?
        .inverse();
    let h_cols = DenseMatrix::from_fn(size, size, |l, i| basis.h()[(i, l)]);
    let l_mat = h_cols.matmul(&e_inv);
    let dt2 = dt * dt;
    Ok(DenseMatrix::from_fn(size, size, |r, c| {
        let diag = if r == c { 1.0 } else { 0.0 };
        diag - dt2 * l_mat[(r, c)]
    }))
}

/// The block companion matrix advancing `(u^{n+1}, u^n)`; twice the basis
/// size on each side.
pub fn amplification_matrix(level: u32, dt: f64) -> Result<DenseMatrix, Error> {
    if !(dt >= 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("time step must be nonnegative and finite, got {dt}"),
        });
    }
    let basis = HaarBasis::build(level)?;
    let size = basis.size();
    let k = transfer_matrix(&basis, dt)?;
    let k_inv = lu_factor(&k)
        .map_err(|err| match err {
            Error::Singular { pivot, .. } => Error::Singular {
                context: format!("transfer system (J = {level}, dt = {dt})"),
                pivot,
            },
            other => other,
        })?
        .inverse();
    let mut b = DenseMatrix::zeros(2 * size, 2 * size);
    for r in 0..size {
        for c in 0..size {
            b[(r, c)] = 2.0 * k_inv[(r, c)];
            b[(r, size + c)] = -k_inv[(r, c)];
        }
        b[(size + r, r)] = 1.0;
    }
    Ok(b)
}

/// The spectrum of the companion matrix and the stability verdict.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    pub level: u32,
    pub dt: f64,
    /// Sorted by decreasing modulus; ties by real part, then imaginary.
    pub eigenvalues: Vec<Complex64>,
    pub spectral_radius: f64,
    /// Whether the radius is at most `1 + tolerance`.
    pub stable: bool,
    pub tolerance: f64,
}

/// Computes the companion spectrum at resolution `level` and step `dt` and
/// judges it against `1 + tolerance`.
pub fn stability_report(level: u32, dt: f64, tolerance: f64) -> Result<SpectrumReport, Error> {
    if !(tolerance >= 0.0) || !tolerance.is_finite() {
        return Err(Error::InvalidParameter {
            message: format!("tolerance must be nonnegative and finite, got {tolerance}"),
        });
    }
    let b = amplification_matrix(level, dt)?;
    let mut eigs = eigenvalues(&b)?;
    eigs.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
    let spectral_radius = eigs.first().map(|e| e.norm()).unwrap_or(0.0);
    Ok(SpectrumReport {
        level,
        dt,
        eigenvalues: eigs,
        spectral_radius,
        stable: spectral_radius <= 1.0 + tolerance,
        tolerance,
    })
}
