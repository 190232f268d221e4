//! Complex generalized Schur (QZ) decomposition.
//!
//! Hessenberg-triangular reduction followed by single-shift implicit QZ
//! sweeps with a Wilkinson-type shift taken from the trailing 2x2 pencil.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

/// `Q^H A Z = T`, `Q^H B Z = S` with `Q`, `Z` unitary and `T`, `S` upper
/// triangular.
#[derive(Debug, Clone)]
pub struct GeneralizedSchur {
    pub q: DMatrix<C>,
    pub z: DMatrix<C>,
    pub t: DMatrix<C>,
    pub s: DMatrix<C>,
}

impl GeneralizedSchur {
    /// Generalized eigenvalues `T_ii / S_ii`.
    pub fn eigenvalues(&self) -> Vec<C> {
        (0..self.t.nrows())
            .map(|i| self.t[(i, i)] / self.s[(i, i)])
            .collect()
    }
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G (a, b)^T = (r, 0)^T`.
#[derive(Debug, Clone, Copy)]
struct Givens {
    c: f64,
    s: C,
}

impl Givens {
    fn new(a: C, b: C) -> Self {
        let (na, nb) = (a.norm(), b.norm());
        if nb == 0.0 {
            return Self { c: 1.0, s: C::new(0.0, 0.0) };
        }
        if na == 0.0 {
            return Self { c: 0.0, s: b.conj() / nb };
        }
        let r = na.hypot(nb);
        Self {
            c: na / r,
            s: (a / na) * b.conj() / r,
        }
    }

    /// rows (i, j) <- G rows (i, j), columns `cols`
    fn apply_left(&self, m: &mut DMatrix<C>, i: usize, j: usize, cols: std::ops::Range<usize>) {
        for col in cols {
            let (x, y) = (m[(i, col)], m[(j, col)]);
            m[(i, col)] = x * self.c + self.s * y;
            m[(j, col)] = -self.s.conj() * x + y * self.c;
        }
    }

    /// columns (i, j) <- columns (i, j) G^H, rows `rows`
    fn apply_right_adjoint(&self, m: &mut DMatrix<C>, i: usize, j: usize, rows: std::ops::Range<usize>) {
        for row in rows {
            let (x, y) = (m[(row, i)], m[(row, j)]);
            m[(row, i)] = x * self.c + y * self.s.conj();
            m[(row, j)] = -x * self.s + y * self.c;
        }
    }

    /// columns (i, j) <- columns (i, j) G^T, rows `rows`
    fn apply_right_transpose(&self, m: &mut DMatrix<C>, i: usize, j: usize, rows: std::ops::Range<usize>) {
        for row in rows {
            let (x, y) = (m[(row, i)], m[(row, j)]);
            m[(row, i)] = x * self.c + y * self.s;
            m[(row, j)] = -x * self.s.conj() + y * self.c;
        }
    }
}

/// Zero `B[row, col_lo]` (with `col_hi = col_lo + 1`) by a rotation of
/// columns `(col_lo, col_hi)` applied to `A`, `B` (rows `0..rows_end`) and `Z`.
fn right_zero(
    a: &mut DMatrix<C>,
    b: &mut DMatrix<C>,
    z: &mut DMatrix<C>,
    row: usize,
    col_lo: usize,
    rows_a: usize,
) {
    let col_hi = col_lo + 1;
    // (b_hi, b_lo) G^T = (r, 0) in column order (hi, lo)
    let g = Givens::new(b[(row, col_hi)], b[(row, col_lo)]);
    g.apply_right_transpose(a, col_hi, col_lo, 0..rows_a);
    g.apply_right_transpose(b, col_hi, col_lo, 0..row + 1);
    b[(row, col_lo)] = C::new(0.0, 0.0);
    let n = z.nrows();
    g.apply_right_transpose(z, col_hi, col_lo, 0..n);
}

fn left_rotate(
    g: Givens,
    a: &mut DMatrix<C>,
    b: &mut DMatrix<C>,
    q: &mut DMatrix<C>,
    i: usize,
    j: usize,
    col_start: usize,
) {
    let n = a.ncols();
    g.apply_left(a, i, j, col_start..n);
    g.apply_left(b, i, j, col_start.min(i)..n);
    let nq = q.nrows();
    g.apply_right_adjoint(q, i, j, 0..nq);
}

fn householder_qr(b: &DMatrix<C>) -> (DMatrix<C>, DMatrix<C>) {
    let qr = b.clone().qr();
    (qr.q(), qr.r())
}

/// Eigenvalue of the 2x2 pencil `(A, B)` (B upper triangular) closest to
/// `A[1,1] / B[1,1]`.
fn wilkinson_shift(a: [[C; 2]; 2], b: [[C; 2]; 2]) -> C {
    // M = A B^{-1}
    let (b00, b01, b11) = (b[0][0], b[0][1], b[1][1]);
    let inv = [[C::new(1.0, 0.0) / b00, -b01 / (b00 * b11)], [C::new(0.0, 0.0), C::new(1.0, 0.0) / b11]];
    let m00 = a[0][0] * inv[0][0];
    let m01 = a[0][0] * inv[0][1] + a[0][1] * inv[1][1];
    let m10 = a[1][0] * inv[0][0];
    let m11 = a[1][0] * inv[0][1] + a[1][1] * inv[1][1];
    let tr = m00 + m11;
    let det = m00 * m11 - m01 * m10;
    let disc = (tr * tr * 0.25 - det).sqrt();
    let (l1, l2) = (tr * 0.5 + disc, tr * 0.5 - disc);
    let target = a[1][1] / b11;
    if (l1 - target).norm() <= (l2 - target).norm() {
        l1
    } else {
        l2
    }
}

/// Generalized Schur decomposition of the square pencil `(A, B)`.
pub fn qz(a_in: &DMatrix<C>, b_in: &DMatrix<C>) -> Result<GeneralizedSchur> {
    let n = a_in.nrows();
    assert!(a_in.is_square() && b_in.shape() == a_in.shape());
    if n == 0 {
        return Ok(GeneralizedSchur {
            q: DMatrix::zeros(0, 0),
            z: DMatrix::zeros(0, 0),
            t: DMatrix::zeros(0, 0),
            s: DMatrix::zeros(0, 0),
        });
    }
    let (mut q, r) = householder_qr(b_in);
    let mut b = r;
    let mut a = q.adjoint() * a_in;
    let mut z = DMatrix::<C>::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            b[(i, j)] = C::new(0.0, 0.0);
        }
    }

    // Hessenberg-triangular reduction
    for j in 0..n.saturating_sub(2) {
        for i in (j + 2..n).rev() {
            let g = Givens::new(a[(i - 1, j)], a[(i, j)]);
            left_rotate(g, &mut a, &mut b, &mut q, i - 1, i, j);
            a[(i, j)] = C::new(0.0, 0.0);
            right_zero(&mut a, &mut b, &mut z, i, i - 1, n);
        }
    }

    let norm_a = a.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    let norm_b = b.iter().fold(0.0f64, |m, v| m.max(v.norm()));
    if norm_b == 0.0 {
        return Err(Error::Internal("QZ: B is zero".into()));
    }
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut iter = 0usize;
    let max_iter = 60 * n.max(1);
    let mut since_deflation = 0usize;
    while hi > 0 {
        // find the active block [lo, hi]
        let mut lo = hi;
        while lo > 0 {
            let sub = a[(lo, lo - 1)].norm();
            let scale = a[(lo, lo)].norm() + a[(lo - 1, lo - 1)].norm();
            if sub <= eps * scale.max(eps * norm_a) {
                a[(lo, lo - 1)] = C::new(0.0, 0.0);
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        iter += 1;
        since_deflation += 1;
        if iter > max_iter {
            let sub: f64 = (1..n).map(|k| a[(k, k - 1)].norm()).fold(0.0, f64::max);
            return Err(Error::Internal(format!(
                "QZ iteration did not converge after {max_iter} sweeps (max subdiagonal {sub:.3e})"
            )));
        }
        for k in lo..=hi {
            if b[(k, k)].norm() <= eps * norm_b {
                return Err(Error::Internal(format!(
                    "QZ: singular B pencil (|S_{k}{k}| = {:.3e})",
                    b[(k, k)].norm()
                )));
            }
        }
        let mut shift = wilkinson_shift(
            [[a[(hi - 1, hi - 1)], a[(hi - 1, hi)]], [a[(hi, hi - 1)], a[(hi, hi)]]],
            [[b[(hi - 1, hi - 1)], b[(hi - 1, hi)]], [C::new(0.0, 0.0), b[(hi, hi)]]],
        );
        if since_deflation % 11 == 10 {
            // exceptional shift
            shift = a[(hi, hi)] / b[(hi, hi)] + C::new(0.75 * a[(hi, hi - 1)].norm(), 0.25 * norm_a / norm_b * eps.sqrt());
        }
        // first rotation from (A - shift B) e_lo
        let x = a[(lo, lo)] - shift * b[(lo, lo)];
        let y = a[(lo + 1, lo)];
        let g = Givens::new(x, y);
        left_rotate(g, &mut a, &mut b, &mut q, lo, lo + 1, lo);
        right_zero(&mut a, &mut b, &mut z, lo + 1, lo, (lo + 3).min(hi + 1).max(lo + 2));
        for k in lo + 1..hi {
            let g = Givens::new(a[(k, k - 1)], a[(k + 1, k - 1)]);
            left_rotate(g, &mut a, &mut b, &mut q, k, k + 1, k - 1);
            a[(k + 1, k - 1)] = C::new(0.0, 0.0);
            right_zero(&mut a, &mut b, &mut z, k + 1, k, (k + 3).min(hi + 1));
        }
    }
    for i in 0..n {
        for j in 0..i {
            a[(i, j)] = C::new(0.0, 0.0);
            b[(i, j)] = C::new(0.0, 0.0);
        }
    }
    Ok(GeneralizedSchur { q, z, t: a, s: b })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lower_max(m: &DMatrix<C>) -> f64 {
        let mut r = 0.0f64;
        for i in 0..m.nrows() {
            for j in 0..i {
                r = r.max(m[(i, j)].norm());
            }
        }
        r
    }

    fn check(a: &DMatrix<C>, b: &DMatrix<C>) -> GeneralizedSchur {
        let f = qz(a, b).unwrap();
        let n = a.nrows();
        let id = DMatrix::<C>::identity(n, n);
        assert!((f.q.adjoint() * &f.q - &id).norm() < 1e-12);
        assert!((f.z.adjoint() * &f.z - &id).norm() < 1e-12);
        let ra = (f.q.adjoint() * a * &f.z - &f.t).norm() / a.norm();
        let rb = (f.q.adjoint() * b * &f.z - &f.s).norm() / b.norm();
        assert!(ra < 1e-12 && rb < 1e-12, "ra {ra} rb {rb}");
        assert_eq!(lower_max(&f.t), 0.0);
        assert_eq!(lower_max(&f.s), 0.0);
        f
    }

    #[test]
    fn random_pencils() {
        for n in [1usize, 2, 3, 5, 12, 30] {
            let a = DMatrix::<C>::from_fn(n, n, |i, j| {
                C::new(((i * 13 + j * 7) % 11) as f64 - 5.0, ((i * 3 + j * 5) % 7) as f64 - 3.0)
            });
            let b = DMatrix::<C>::from_fn(n, n, |i, j| {
                let d = if i == j { 10.0 } else { 0.0 };
                C::new(d + ((i * 5 + j * 11) % 9) as f64 * 0.1, 0.0)
            });
            check(&a, &b);
        }
    }

    #[test]
    fn identical_pencil_gives_unit_eigenvalues() {
        let n = 6;
        let a = DMatrix::<C>::from_fn(n, n, |i, j| {
            C::new(1.0 / (1.0 + i as f64 + j as f64) + if i == j { 1.0 } else { 0.0 }, 0.0)
        });
        let f = check(&a, &a);
        for ev in f.eigenvalues() {
            assert!((ev - C::new(1.0, 0.0)).norm() < 1e-10);
        }
    }
}
