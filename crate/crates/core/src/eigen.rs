//! Dense symmetric and Hermitian eigensolvers (faer's self-adjoint
//! decomposition).
//!
//! Every decomposition is checked before it is returned: the eigenpair
//! residual and the orthonormality defect must both sit within a small multiple
//! of machine precision times the matrix scale.

use faer::{Mat, Side};
use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};

/// Scalar types with a dense self-adjoint eigensolver.
///
/// Eigenvalues come back ascending; eigenvectors are the columns of the
/// returned matrix.
pub trait EigenScalar: Sized {
    fn sym_eigen(m: DMatrix<Self>) -> Result<(DVector<Self>, DMatrix<Self>)>;
    fn herm_eigen(m: DMatrix<Complex<Self>>) -> Result<(DVector<Self>, DMatrix<Complex<Self>>)>;
}

const CHECK_FACTOR: f64 = 1e3;

fn check_square(rows: usize, cols: usize) -> Result<()> {
    if rows != cols {
        return Err(Error::Contract(format!("eigensolver needs a square matrix, got {rows}x{cols}")));
    }
    Ok(())
}

fn verify<S>(a: &DMatrix<S>, values: &DVector<S::RealField>, vectors: &DMatrix<S>, eps: f64) -> Result<()>
where
    S: ComplexField<RealField: Copy + Into<f64>> + Copy,
{
    let n = a.nrows();
    if n == 0 {
        return Ok(());
    }
    let scale = a.iter().fold(1.0f64, |m, z| m.max(z.modulus().into()));
    let mut lambda_v = vectors.clone();
    for (k, &e) in values.iter().enumerate() {
        lambda_v.column_mut(k).iter_mut().for_each(|z| *z = z.scale(e));
    }
    let residual = (a * vectors - lambda_v).iter().fold(0.0f64, |m, z| m.max(z.modulus().into()));
    let gram = vectors.adjoint() * vectors - DMatrix::identity(n, n);
    let orth = gram.iter().fold(0.0f64, |m, z| m.max(z.modulus().into()));
    let tol = CHECK_FACTOR * eps * n as f64;
    if residual > tol * scale || orth > tol {
        return Err(Error::Eigensolver(format!(
            "decomposition failed verification: residual {residual:e}, orthonormality defect {orth:e}"
        )));
    }
    Ok(())
}

macro_rules! impl_eigen {
    ($t:ty) => {
        impl EigenScalar for $t {
            fn sym_eigen(m: DMatrix<$t>) -> Result<(DVector<$t>, DMatrix<$t>)> {
                check_square(m.nrows(), m.ncols())?;
                let n = m.nrows();
                if n == 0 {
                    return Ok((DVector::zeros(0), m));
                }
                let a = Mat::<$t>::from_fn(n, n, |i, j| m[(i, j)]);
                let eig = a
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
                let (u, s) = (eig.U(), eig.S().column_vector());
                let values = DVector::from_fn(n, |k, _| s[k]);
                let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
                verify(&m, &values, &vectors, <$t>::EPSILON as f64)?;
                Ok((values, vectors))
            }

            fn herm_eigen(m: DMatrix<Complex<$t>>) -> Result<(DVector<$t>, DMatrix<Complex<$t>>)> {
                check_square(m.nrows(), m.ncols())?;
                let n = m.nrows();
                if n == 0 {
                    return Ok((DVector::zeros(0), m));
                }
                let a = Mat::<Complex<$t>>::from_fn(n, n, |i, j| m[(i, j)]);
                let eig = a
                    .self_adjoint_eigen(Side::Lower)
                    .map_err(|e| Error::Eigensolver(format!("{e:?}")))?;
                let (u, s) = (eig.U(), eig.S().column_vector());
                let values = DVector::from_fn(n, |k, _| s[k].re);
                let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
                verify(&m, &values, &vectors, <$t>::EPSILON as f64)?;
                Ok((values, vectors))
            }
        }
    };
}

impl_eigen!(f64);
impl_eigen!(f32);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tridiagonal_spectrum() {
        let m = DMatrix::<f64>::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (w, v) = f64::sym_eigen(m.clone()).unwrap();
        let s = 2.0f64.sqrt();
        for (got, want) in w.iter().zip([2.0 - s, 2.0, 2.0 + s]) {
            assert!((got - want).abs() < 1e-14);
        }
        let rec = &v * DMatrix::from_diagonal(&w) * v.transpose();
        assert!((rec - m).amax() < 1e-14);
    }

    #[test]
    fn hermitian_two_level() {
        let i = Complex::new(0.0f64, 1.0);
        let zero = Complex::new(0.0f64, 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[zero, -i, i, zero]);
        let (w, v) = f64::herm_eigen(m.clone()).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
        let rec = &v * DMatrix::from_diagonal(&w.map(|x| Complex::new(x, 0.0))) * v.adjoint();
        assert!((rec - m).iter().all(|z| z.norm() < 1e-15));
    }

    #[test]
    fn single_precision() {
        let m = DMatrix::<f32>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        let (w, _) = f32::sym_eigen(m).unwrap();
        assert!((w[0] + 1.0).abs() < 1e-6 && (w[1] - 3.0).abs() < 1e-6);
    }

    #[test]
    fn empty_and_rectangular() {
        assert!(f64::sym_eigen(DMatrix::zeros(0, 0)).unwrap().0.is_empty());
        assert!(matches!(f64::sym_eigen(DMatrix::zeros(2, 3)), Err(Error::Contract(_))));
    }
}
