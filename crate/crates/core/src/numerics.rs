//! Dense linear algebra: row-major matrices, LU factorization with partial
//! pivoting, and the full (complex) eigenvalue spectrum of real square
//! matrices via Householder reduction and the implicitly shifted double QR
//! iteration.
//!
//! Everything here is dense and sized for the solver's envelope (a few
//! thousand rows at most); no sparsity or blocking is attempted.

use num_complex::Complex64;

use crate::error::Error;

/// Relative pivot threshold below which a factorization counts as singular.
const SINGULAR_TOL: f64 = 1e-13;

/// Row-major dense matrix of `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> DenseMatrix {
        DenseMatrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Builds from a closure over (row, col).
    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// One contiguous row.
    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "dimension mismatch");
        (0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == 0.0 {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] += a * other[(k, c)];
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let (a, b) = (a.min(b), a.max(b));
        let (head, tail) = self.data.split_at_mut(b * self.cols);
        head[a * self.cols..(a + 1) * self.cols]
            .swap_with_slice(&mut tail[..self.cols]);
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;

    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        debug_assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

/// Compact LU factorization `P A = L U` with partial pivoting.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    /// L strictly below the diagonal (unit diagonal implied), U on and above.
    lu: DenseMatrix,
    /// Row swapped with row `k` at elimination step `k`.
    swaps: Vec<usize>,
    /// Number of actual row exchanges (for the determinant sign).
    exchanges: usize,
}

/// Factors a square matrix. A pivot smaller than `1e-13` times the largest
/// entry of the input is reported as singular, with the failing pivot index.
pub fn lu_factor(a: &DenseMatrix) -> Result<LuFactorization, Error> {
    assert!(a.is_square(), "LU factorization needs a square matrix");
    let n = a.rows();
    let scale = a.max_abs();
    let mut lu = a.clone();
    let mut swaps = Vec::with_capacity(n);
    let mut exchanges = 0;
    for k in 0..n {
        let mut pivot_row = k;
        let mut pivot_mag = lu[(k, k)].abs();
        for r in k + 1..n {
            let mag = lu[(r, k)].abs();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag < SINGULAR_TOL * scale || pivot_mag == 0.0 {
            return Err(Error::Singular {
                context: "LU factorization".into(),
                pivot: k,
            });
        }
        if pivot_row != k {
            lu.swap_rows(k, pivot_row);
            exchanges += 1;
        }
        swaps.push(pivot_row);
        let pivot = lu[(k, k)];
        for r in k + 1..n {
            let factor = lu[(r, k)] / pivot;
            lu[(r, k)] = factor;
            if factor == 0.0 {
                continue;
            }
            for c in k + 1..n {
                lu[(r, c)] -= factor * lu[(k, c)];
            }
        }
    }
    Ok(LuFactorization {
        lu,
        swaps,
        exchanges,
    })
}

impl LuFactorization {
    pub fn size(&self) -> usize {
        self.lu.rows()
    }

    /// Solves `A x = b` for the factored `A`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.size();
        assert_eq!(b.len(), n, "dimension mismatch");
        let mut x = b.to_vec();
        for (k, &p) in self.swaps.iter().enumerate() {
            x.swap(k, p);
        }
        for k in 0..n {
            let xk = x[k];
            if xk == 0.0 {
                continue;
            }
            for r in k + 1..n {
                x[r] -= self.lu[(r, k)] * xk;
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..n {
                s -= self.lu[(k, c)] * x[c];
            }
            x[k] = s / self.lu[(k, k)];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DenseMatrix) -> DenseMatrix {
        let n = self.size();
        assert_eq!(b.rows(), n, "dimension mismatch");
        let mut out = DenseMatrix::zeros(n, b.cols());
        let mut col = vec![0.0; n];
        for c in 0..b.cols() {
            for r in 0..n {
                col[r] = b[(r, c)];
            }
            let x = self.solve(&col);
            for r in 0..n {
                out[(r, c)] = x[r];
            }
        }
        out
    }

    /// The inverse of the factored matrix.
    pub fn inverse(&self) -> DenseMatrix {
        self.solve_matrix(&DenseMatrix::identity(self.size()))
    }

    /// Determinant of the factored matrix.
    pub fn determinant(&self) -> f64 {
        let sign = if self.exchanges % 2 == 0 { 1.0 } else { -1.0 };
        (0..self.size()).fold(sign, |d, k| d * self.lu[(k, k)])
    }
}

/// Full eigenvalue spectrum (with multiplicity) of a real square matrix.
///
/// The matrix is reduced to upper Hessenberg form by Householder
/// similarity transforms, then driven to quasi-triangular form by the
/// implicitly shifted double QR iteration; 1x1 blocks yield real
/// eigenvalues and 2x2 blocks conjugate or real pairs. Failure to deflate
/// within the sweep budget is an error, never a truncated spectrum.
pub fn eigenvalues(a: &DenseMatrix) -> Result<Vec<Complex64>, Error> {
    assert!(a.is_square(), "eigenvalues need a square matrix");
    let n = a.rows();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut h = a.clone();
    hessenberg_reduce(&mut h);
    hqr_eigenvalues(&mut h)
}

/// In-place Householder reduction to upper Hessenberg form. Entries below
/// the first subdiagonal are left as the (unused) reflector data.
fn hessenberg_reduce(h: &mut DenseMatrix) {
    let n = h.rows();
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[(i, m - 1)].abs();
        }
        if scale == 0.0 {
            continue;
        }
        let mut sum = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[(i, m - 1)] / scale;
            sum += ort[i] * ort[i];
        }
        let mut g = sum.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        let denom = sum - ort[m] * g;
        ort[m] -= g;
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[(i, j)];
            }
            f /= denom;
            for i in m..=high {
                h[(i, j)] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[(i, j)];
            }
            f /= denom;
            for j in m..=high {
                h[(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[(m, m - 1)] = scale * g;
    }
    // The reflector data below the subdiagonal is dead; zero it so the
    // QR stage sees a clean Hessenberg matrix.
    for r in 2..n {
        for c in 0..r - 1 {
            h[(r, c)] = 0.0;
        }
    }
}

/// Per-block sweep budget before giving up on deflation.
const MAX_SWEEPS: usize = 64;

/// Eigenvalues of an upper Hessenberg matrix, destructively.
fn hqr_eigenvalues(h: &mut DenseMatrix) -> Result<Vec<Complex64>, Error> {
    let nn = h.rows();
    let eps = f64::EPSILON;
    let mut roots = vec![Complex64::new(0.0, 0.0); nn];
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[(i, j)].abs();
        }
    }
    let mut en = nn as isize - 1;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut total_iter = 0usize;
    while en >= 0 {
        let n = en as usize;
        // Look for a negligible subdiagonal element.
        let mut l = n;
        while l > 0 {
            let mut s = h[(l - 1, l - 1)].abs() + h[(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == n {
            // One root found.
            roots[n] = Complex64::new(h[(n, n)] + exshift, 0.0);
            en -= 1;
            iter = 0;
            continue;
        }
        if l == n - 1 {
            // Two roots found: solve the trailing 2x2 block.
            let w = h[(n, n - 1)] * h[(n - 1, n)];
            let p = (h[(n - 1, n - 1)] - h[(n, n)]) / 2.0;
            let q = p * p + w;
            let x = h[(n, n)] + exshift;
            let s = h[(n - 1, n - 1)].abs()
                + h[(n, n)].abs()
                + h[(n, n - 1)].abs()
                + h[(n - 1, n)].abs();
            if q.abs() <= 16.0 * eps * s * s {
                // Discriminant below roundoff: indistinguishable from a
                // defective double root, so report it as one instead of
                // splitting it by a spurious sqrt(eps).
                let root = Complex64::new(x + p, 0.0);
                roots[n - 1] = root;
                roots[n] = root;
            } else if q >= 0.0 {
                let mut z = q.sqrt();
                z = if p >= 0.0 { p + z } else { p - z };
                roots[n - 1] = Complex64::new(x + z, 0.0);
                roots[n] = if z != 0.0 {
                    Complex64::new(x - w / z, 0.0)
                } else {
                    roots[n - 1]
                };
            } else {
                let z = (-q).sqrt();
                roots[n - 1] = Complex64::new(x + p, z);
                roots[n] = Complex64::new(x + p, -z);
            }
            en -= 2;
            iter = 0;
            continue;
        }
        // No deflation yet: form a shift and run one double QR sweep.
        let mut x = h[(n, n)];
        let mut y = h[(n - 1, n - 1)];
        let mut w = h[(n, n - 1)] * h[(n - 1, n)];
        if iter == 10 || iter == 20 {
            // Exceptional shift to break symmetry-induced stalls. It must
            // come off every not-yet-deflated diagonal entry, not just the
            // active block: exshift is added back to every future root.
            exshift += x;
            for i in 0..=n {
                h[(i, i)] -= x;
            }
            let s = h[(n, n - 1)].abs() + h[(n - 1, n - 2)].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        iter += 1;
        total_iter += 1;
        if iter > MAX_SWEEPS {
            return Err(Error::EigenNoConvergence {
                iterations: total_iter,
            });
        }
        // Find two consecutive small subdiagonals.
        let mut m = n - 2;
        let (mut p, mut q, mut r);
        loop {
            let z = h[(m, m)];
            let rr = x - z;
            let ss = y - z;
            p = (rr * ss - w) / h[(m + 1, m)] + h[(m, m + 1)];
            q = h[(m + 1, m + 1)] - z - rr - ss;
            r = h[(m + 2, m + 1)];
            let s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            if h[(m, m - 1)].abs() * (q.abs() + r.abs())
                < eps
                    * (p.abs()
                        * (h[(m - 1, m - 1)].abs() + z.abs() + h[(m + 1, m + 1)].abs()))
            {
                break;
            }
            m -= 1;
        }
        for i in m + 2..=n {
            h[(i, i - 2)] = 0.0;
            if i > m + 2 {
                h[(i, i - 3)] = 0.0;
            }
        }
        // Double QR sweep over rows m..n.
        for k in m..n {
            let notlast = k != n - 1;
            if k != m {
                p = h[(k, k - 1)];
                q = h[(k + 1, k - 1)];
                r = if notlast { h[(k + 2, k - 1)] } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x == 0.0 {
                    continue;
                }
                p /= x;
                q /= x;
                r /= x;
            }
            let mut s = (p * p + q * q + r * r).sqrt();
            if p < 0.0 {
                s = -s;
            }
            if s == 0.0 {
                continue;
            }
            if k != m {
                h[(k, k - 1)] = -s * x;
            } else if l != m {
                h[(k, k - 1)] = -h[(k, k - 1)];
            }
            p += s;
            x = p / s;
            y = q / s;
            let z = r / s;
            q /= p;
            r /= p;
            // Row modification.
            for j in k..=n {
                let mut f = h[(k, j)] + q * h[(k + 1, j)];
                if notlast {
                    f += r * h[(k + 2, j)];
                }
                h[(k, j)] -= f * x;
                h[(k + 1, j)] -= f * y;
                if notlast {
                    h[(k + 2, j)] -= f * z;
                }
            }
            // Column modification.
            for i in l..=n.min(k + 3) {
                let mut f = x * h[(i, k)] + y * h[(i, k + 1)];
                if notlast {
                    f += z * h[(i, k + 2)];
                }
                h[(i, k)] -= f;
                h[(i, k + 1)] -= f * q;
                if notlast {
                    h[(i, k + 2)] -= f * r;
                }
            }
        }
    }
    Ok(roots)
}
