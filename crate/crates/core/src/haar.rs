//! Haar wavelet family on [0,1), its repeated integrals, and the
//! collocation tables the solver is assembled from.
//!
//! Member `i = 1` is the scaling function (1 on [0,1)). Member
//! `i = m + k + 1` with `m = 2^j` and `k = 0..m-1` is +1 on
//! `[k/m, (k+0.5)/m)`, -1 on `[(k+0.5)/m, (k+1)/m)` and 0 elsewhere.
//! A truncation at level J keeps `2M = 2^(J+1)` members.
//!
//! `integral_p(beta, i, x)` is the beta-fold integral of member `i` from 0
//! to `x`, a closed-form piecewise polynomial; `c1`/`c2` are its values
//! integrated over the whole interval. The collocation points are the
//! midpoints `x_l = (2l - 1) / (4M)`, `l = 1..2M`.

use crate::error::Error;
use crate::numerics::DenseMatrix;

/// Largest supported truncation level; `2M = 2^(J+1)` stays dense-friendly.
pub const MAX_LEVEL: u32 = 9;

/// Identity of one basis member.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFunction {
    /// The constant scaling function, member 1.
    Scaling,
    /// Wavelet at dilation level `j` (width `1/2^j`) and shift `k`.
    Wavelet { j: u32, k: usize },
}

/// Serial index of the wavelet at level `j`, shift `k`: `2^j + k + 1`.
pub fn basis_index(j: u32, k: usize) -> Result<usize, Error> {
    let m = 1usize << j;
    if k >= m {
        return Err(Error::InvalidParameter {
            message: format!("wavelet shift {k} out of range for level {j} (max {})", m - 1),
        });
    }
    Ok(m + k + 1)
}

/// Recovers the member identity from a serial index `i >= 1`.
pub fn basis_function(i: usize) -> Result<BasisFunction, Error> {
    if i == 0 {
        return Err(Error::InvalidParameter {
            message: "basis indices start at 1".into(),
        });
    }
    if i == 1 {
        return Ok(BasisFunction::Scaling);
    }
    let j = (usize::BITS - 1 - (i - 1).leading_zeros()) as u32;
    let k = i - (1 << j) - 1;
    Ok(BasisFunction::Wavelet { j, k })
}

/// Pointwise value of member `i`. Supports are half-open, so every member
/// (including the scaling function) is 0 at `x = 1`.
pub fn haar_eval(i: usize, x: f64) -> f64 {
    match basis_function(i).expect("valid basis index") {
        BasisFunction::Scaling => {
            if (0.0..1.0).contains(&x) {
                1.0
            } else {
                0.0
            }
        }
        BasisFunction::Wavelet { j, k } => {
            let m = (1usize << j) as f64;
            let left = k as f64 / m;
            let mid = (2 * k + 1) as f64 / (2.0 * m);
            let right = (k + 1) as f64 / m;
            if x >= left && x < mid {
                1.0
            } else if x >= mid && x < right {
                -1.0
            } else {
                0.0
            }
        }
    }
}

fn factorial(beta: u32) -> f64 {
    (1..=beta).map(|v| v as f64).product()
}

/// The beta-fold repeated integral of member `i`, evaluated at `x`.
/// Requires `beta >= 1`; the solver uses beta 1 and 2.
pub fn integral_p(beta: u32, i: usize, x: f64) -> f64 {
    assert!(beta >= 1, "integral order must be at least 1");
    let power = beta as i32;
    let fact = factorial(beta);
    match basis_function(i).expect("valid basis index") {
        BasisFunction::Scaling => {
            if x <= 0.0 {
                0.0
            } else {
                x.powi(power) / fact
            }
        }
        BasisFunction::Wavelet { j, k } => {
            let m = (1usize << j) as f64;
            let left = k as f64 / m;
            let mid = (2 * k + 1) as f64 / (2.0 * m);
            let right = (k + 1) as f64 / m;
            if x < left {
                0.0
            } else if x < mid {
                (x - left).powi(power) / fact
            } else if x < right {
                ((x - left).powi(power) - 2.0 * (x - mid).powi(power)) / fact
            } else {
                ((x - left).powi(power) - 2.0 * (x - mid).powi(power)
                    + (x - right).powi(power))
                    / fact
            }
        }
    }
}

/// Integral of `integral_p(beta, i, .)` over [0,1], in closed form.
/// Only beta 1 and 2 occur in the scheme.
pub fn c_coefficient(beta: u32, i: usize) -> f64 {
    match basis_function(i).expect("valid basis index") {
        BasisFunction::Scaling => match beta {
            1 => 0.5,
            2 => 1.0 / 6.0,
            _ => panic!("unsupported integral order {beta}"),
        },
        BasisFunction::Wavelet { j, k } => {
            let m = (1u64 << j) as f64;
            let k = k as f64;
            match beta {
                1 => 1.0 / (4.0 * m * m),
                2 => (2.0 * m - 2.0 * k - 1.0) / (8.0 * m * m * m),
                _ => panic!("unsupported integral order {beta}"),
            }
        }
    }
}

/// Precomputed basis tables for one truncation level.
///
/// The matrices are laid out with the member index as the row and the
/// collocation point as the column: `h[(i-1, l-1)] = h_i(x_l)`.
#[derive(Debug, Clone)]
pub struct HaarBasis {
    j_max: u32,
    size: usize,
    collocation: Vec<f64>,
    grid: Vec<f64>,
    h: DenseMatrix,
    p1: DenseMatrix,
    p2: DenseMatrix,
    c1: Vec<f64>,
    c2: Vec<f64>,
}

impl HaarBasis {
    /// Builds all tables for truncation level `j_max <= MAX_LEVEL`.
    pub fn build(j_max: u32) -> Result<HaarBasis, Error> {
        if j_max > MAX_LEVEL {
            return Err(Error::BasisTooLarge {
                j: j_max,
                max: MAX_LEVEL,
            });
        }
        let size = 1usize << (j_max + 1);
        let collocation: Vec<f64> = (1..=size)
            .map(|l| (2 * l - 1) as f64 / (2 * size) as f64)
            .collect();
        let grid: Vec<f64> = (0..=size).map(|l| l as f64 / size as f64).collect();
        let mut h = DenseMatrix::zeros(size, size);
        let mut p1 = DenseMatrix::zeros(size, size);
        let mut p2 = DenseMatrix::zeros(size, size);
        for i in 1..=size {
            for l in 1..=size {
                let x = collocation[l - 1];
                h[(i - 1, l - 1)] = haar_eval(i, x);
                p1[(i - 1, l - 1)] = integral_p(1, i, x);
                p2[(i - 1, l - 1)] = integral_p(2, i, x);
            }
        }
        let c1 = (1..=size).map(|i| c_coefficient(1, i)).collect();
        let c2 = (1..=size).map(|i| c_coefficient(2, i)).collect();
        Ok(HaarBasis {
            j_max,
            size,
            collocation,
            grid,
            h,
            p1,
            p2,
            c1,
            c2,
        })
    }

    /// Truncation level J.
    pub fn level(&self) -> u32 {
        self.j_max
    }

    /// Number of basis members, `2M = 2^(J+1)`.
    pub fn size(&self) -> usize {
        self.size
    }

    /// Collocation points `x_l`, `l = 1..2M`.
    pub fn collocation_points(&self) -> &[f64] {
        &self.collocation
    }

    /// Grid points `y_l = l/(2M)`, `l = 0..2M`.
    pub fn grid_points(&self) -> &[f64] {
        &self.grid
    }

    /// `h[(i-1, l-1)] = h_i(x_l)`.
    pub fn h(&self) -> &DenseMatrix {
        &self.h
    }

    /// `p1[(i-1, l-1)] = integral_p(1, i, x_l)`.
    pub fn p1(&self) -> &DenseMatrix {
        &self.p1
    }

    /// `p2[(i-1, l-1)] = integral_p(2, i, x_l)`.
    pub fn p2(&self) -> &DenseMatrix {
        &self.p2
    }

    /// Whole-interval integrals of the first repeated integral.
    pub fn c1(&self) -> &[f64] {
        &self.c1
    }

    /// Whole-interval integrals of the second repeated integral.
    pub fn c2(&self) -> &[f64] {
        &self.c2
    }
}

/// Composite Simpson rule over `[a, b]` sampling each panel's endpoints
/// just inside that panel. A jump on a panel boundary (the half-open
/// support convention puts one there) then contributes its one-sided
/// limits to the two neighboring panels, keeping panel-aligned piecewise
/// integrands exact; for Lipschitz integrands the shifted samples perturb
/// the result far below the quadrature error.
fn simpson_inward<E>(
    u: &mut impl FnMut(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    n: usize,
) -> Result<f64, E> {
    debug_assert!(n >= 2 && n % 2 == 0);
    let h = (b - a) / n as f64;
    let nudge = h * 1e-6;
    let mut sum = 0.0;
    for p in 0..n / 2 {
        let x0 = a + (2 * p) as f64 * h;
        sum += u(x0 + nudge)? + 4.0 * u(x0 + h)? + u(x0 + 2.0 * h - nudge)?;
    }
    Ok(sum * h / 3.0)
}

fn even_at_least_two(n: usize) -> usize {
    let n = n.max(2);
    n + (n % 2)
}

/// Projection coefficients of `u` onto the truncated family: the scaling
/// coefficient is the plain integral of `u`, and each wavelet coefficient
/// is `2^j` times the integral of `u` against that wavelet. Quadrature is
/// Simpson with about `quad_n` subintervals across [0,1], aligned to each
/// wavelet's breakpoints.
pub fn try_forward_coefficients<E>(
    mut u: impl FnMut(f64) -> Result<f64, E>,
    j_max: u32,
    quad_n: usize,
) -> Result<Vec<f64>, E> {
    let size = 1usize << (j_max + 1);
    let mut coeffs = Vec::with_capacity(size);
    coeffs.push(simpson_inward(&mut u, 0.0, 1.0, even_at_least_two(quad_n))?);
    for i in 2..=size {
        let BasisFunction::Wavelet { j, k } = basis_function(i).unwrap() else {
            unreachable!();
        };
        let m = (1usize << j) as f64;
        let left = k as f64 / m;
        let mid = (2 * k + 1) as f64 / (2.0 * m);
        let right = (k + 1) as f64 / m;
        let n_half = even_at_least_two((quad_n as f64 * (mid - left)).round() as usize);
        let plus = simpson_inward(&mut u, left, mid, n_half)?;
        let minus = simpson_inward(&mut u, mid, right, n_half)?;
        coeffs.push(m * (plus - minus));
    }
    Ok(coeffs)
}

/// Infallible convenience form of [`try_forward_coefficients`].
pub fn forward_coefficients(
    mut u: impl FnMut(f64) -> f64,
    j_max: u32,
    quad_n: usize,
) -> Vec<f64> {
    let result: Result<_, std::convert::Infallible> =
        try_forward_coefficients(|x| Ok(u(x)), j_max, quad_n);
    match result {
        Ok(v) => v,
    }
}
