use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

/// Square matrix with equal lower/upper half-bandwidth `k`, row-major band
/// storage.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMatrix<T> {
    n: usize,
    k: usize,
    data: Vec<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> BandMatrix<T> {
    pub fn zeros(n: usize, k: usize) -> Self {
        let k = k.min(n.saturating_sub(1));
        Self {
            n,
            k,
            data: vec![T::zero(); n * (2 * k + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn half_bandwidth(&self) -> usize {
        self.k
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        if i.abs_diff(j) > self.k {
            None
        } else {
            Some(i * (2 * self.k + 1) + (j + self.k - i))
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.offset(i, j).map_or(T::zero(), |o| self.data[o])
    }

    /// Adds `v` to entry `(i, j)`; panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside band {}", self.k));
        self.data[o] += v;
    }

    fn row_range(&self, i: usize) -> std::ops::Range<usize> {
        i.saturating_sub(self.k)..(i + self.k + 1).min(self.n)
    }

    pub fn matvec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        (0..self.n)
            .map(|i| {
                self.row_range(i)
                    .fold(T::zero(), |acc, j| acc + self.data[self.offset(i, j).unwrap()] * x[j])
            })
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn transpose_residual(&self) -> f64 {
        let mut r = 0.0f64;
        for i in 0..self.n {
            for j in self.row_range(i) {
                r = r.max((self.get(i, j) - self.get(j, i)).modulus());
            }
        }
        r
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.modulus()))
    }

    /// LU factorization without pivoting. Valid for matrices whose Hermitian
    /// (or, after a unimodular rotation, real) part is definite.
    pub fn factor(&self) -> Result<BandLu<T>> {
        let mut lu = self.clone();
        let n = self.n;
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        for i in 0..n {
            let piv = lu.data[lu.offset(i, i).unwrap()];
            if !(piv.modulus() > 1e-300 * scale) || !piv.modulus().is_finite() {
                return Err(Error::Internal(format!("zero pivot at row {i} in banded LU")));
            }
            let end = (i + lu.k + 1).min(n);
            for r in i + 1..end {
                let o = lu.offset(r, i).unwrap();
                let l = lu.data[o] / piv;
                lu.data[o] = l;
                if l == T::zero() {
                    continue;
                }
                for c in i + 1..end {
                    let u = lu.data[lu.offset(i, c).unwrap()];
                    let orc = lu.offset(r, c).unwrap();
                    lu.data[orc] -= l * u;
                }
            }
        }
        Ok(BandLu { lu })
    }
}

impl BandMatrix<f64> {
    /// `a * self + b * other` with a possibly complex result type.
    pub fn combine<T: ComplexField<RealField = f64> + Copy>(
        &self,
        a: T,
        other: &BandMatrix<f64>,
        b: T,
    ) -> BandMatrix<T> {
        assert_eq!(self.n, other.n);
        let k = self.k.max(other.k);
        let mut out = BandMatrix::<T>::zeros(self.n, k);
        for i in 0..self.n {
            for j in out.row_range(i) {
                let v = a * T::from_real(self.get(i, j)) + b * T::from_real(other.get(i, j));
                let o = out.offset(i, j).unwrap();
                out.data[o] = v;
            }
        }
        out
    }

    /// `x^T A y` for real vectors.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_complex(&self) -> BandMatrix<num_complex::Complex64> {
        BandMatrix {
            n: self.n,
            k: self.k,
            data: self.data.iter().map(|&v| num_complex::Complex64::new(v, 0.0)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BandLu<T> {
    lu: BandMatrix<T>,
}

impl<T: ComplexField<RealField = f64> + Copy> BandLu<T> {
    pub fn solve_in_place(&self, b: &mut [T]) {
        let lu = &self.lu;
        let n = lu.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut acc = b[i];
            for j in i.saturating_sub(lu.k)..i {
                acc -= lu.data[lu.offset(i, j).unwrap()] * b[j];
            }
            b[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            for j in i + 1..(i + lu.k + 1).min(n) {
                acc -= lu.data[lu.offset(i, j).unwrap()] * b[j];
            }
            b[i] = acc / lu.data[lu.offset(i, i).unwrap()];
        }
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn tridiag(n: usize) -> BandMatrix<f64> {
        let mut a = BandMatrix::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 4.0);
            if i + 1 < n {
                a.add(i, i + 1, -1.0);
                a.add(i + 1, i, -1.0);
            }
        }
        a
    }

    #[test]
    fn solve_matches_dense() {
        let a = tridiag(7);
        let b: Vec<f64> = (0..7).map(|i| (i as f64).sin()).collect();
        let x = a.factor().unwrap().solve(&b);
        let ax = a.matvec(&x);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-14);
        }
        assert_eq!(a.transpose_residual(), 0.0);
    }

    #[test]
    fn complex_combination() {
        let a = tridiag(5);
        let mut m = BandMatrix::zeros(5, 0);
        for i in 0..5 {
            m.add(i, i, 1.0);
        }
        let z = a.combine(Complex64::new(0.0, 1.0), &m, Complex64::new(1.0, 0.0));
        let b: Vec<Complex64> = (0..5).map(|i| Complex64::new(i as f64, 1.0)).collect();
        let x = z.factor().unwrap().solve(&b);
        let r = z.matvec(&x);
        for (u, v) in r.iter().zip(&b) {
            assert!((u - v).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_pivot_is_reported() {
        let a = BandMatrix::<f64>::zeros(3, 1);
        assert!(a.factor().is_err());
    }
}
