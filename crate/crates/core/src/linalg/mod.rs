//! Dense and banded linear algebra helpers not covered by `nalgebra`.

mod banded;
mod qz;

pub use banded::{BandLu, BandMatrix};
pub use qz::{qz, GeneralizedSchur};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex Schur form `M = U T U^H` of a square complex matrix.
pub fn complex_schur(m: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = m.nrows();
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 100 * n.max(1))
        .ok_or_else(|| Error::Internal("complex Schur decomposition did not converge".into()))?;
    let (u, mut t) = schur.unpack();
    for i in 0..n {
        for j in 0..i {
            t[(i, j)] = Complex64::new(0.0, 0.0);
        }
    }
    Ok((u, t))
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Largest modulus of the strictly lower triangular part.
pub fn strict_lower_max(m: &DMatrix<Complex64>) -> f64 {
    let mut r = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..i.min(m.ncols()) {
            r = r.max(m[(i, j)].norm());
        }
    }
    r
}
