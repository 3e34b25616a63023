use nalgebra::{Cholesky, DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Interleaves real and imaginary parts: `[re z0, im z0, re z1, ...]`.
pub fn lift(z: &DVector<Complex64>) -> DVector<f64> {
    DVector::from_fn(2 * z.len(), |i, _| if i % 2 == 0 { z[i / 2].re } else { z[i / 2].im })
}

pub fn unlift(x: &DVector<f64>) -> DVector<Complex64> {
    DVector::from_fn(x.len() / 2, |i, _| Complex64::new(x[2 * i], x[2 * i + 1]))
}

/// The complex-linear map `v -> c^T v` written over lifted coordinates:
/// `Re(c^T v) = re . x` and `Im(c^T v) = im . x`.
#[derive(Debug, Clone)]
pub struct ComplexLinearForm {
    pub re: DVector<f64>,
    pub im: DVector<f64>,
}

impl ComplexLinearForm {
    pub fn new(c: &DVector<Complex64>) -> Self {
        let n = c.len();
        let mut re = DVector::zeros(2 * n);
        let mut im = DVector::zeros(2 * n);
        for (m, cm) in c.iter().enumerate() {
            re[2 * m] = cm.re;
            re[2 * m + 1] = -cm.im;
            im[2 * m] = cm.im;
            im[2 * m + 1] = cm.re;
        }
        Self { re, im }
    }

    pub fn apply(&self, x: &DVector<f64>) -> Complex64 {
        Complex64::new(self.re.dot(x), self.im.dot(x))
    }

    /// Real symmetric matrix `Q` with `x^T Q x = |c^T v|^2`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.re * self.re.transpose() + &self.im * self.im.transpose()
    }

    /// Real vector `r` with `r . x = Re{conj(y) c^T v}`.
    pub fn real_part_against(&self, y: Complex64) -> DVector<f64> {
        &self.re * y.re + &self.im * y.im
    }
}

/// Real symmetric `Q` with `x^T Q x = v^H A v` for Hermitian `A` and
/// `x = lift(v)`.
pub fn hermitian_to_real(a: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut q = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = a[(i, j)];
            q[(2 * i, 2 * j)] = z.re;
            q[(2 * i, 2 * j + 1)] = -z.im;
            q[(2 * i + 1, 2 * j)] = z.im;
            q[(2 * i + 1, 2 * j + 1)] = z.re;
        }
    }
    q
}

/// Solves `A x = b` for Hermitian positive definite `A` via Cholesky.
pub fn hermitian_rank1_solve(a: &DMatrix<Complex64>, b: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::Dimension(format!(
            "system is {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let scale = a.norm().max(f64::MIN_POSITIVE);
    if (a - a.adjoint()).norm() > 1e-12 * scale {
        return Err(Error::NotPositiveDefinite);
    }
    // complex square roots never fail, so the pivots have to be checked
    let chol = Cholesky::new(a.clone()).ok_or(Error::NotPositiveDefinite)?;
    if chol.l_dirty().diagonal().iter().any(|d| !(d.re > 0.0) || d.im.abs() > 1e-12 * d.re) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(chol.solve(b))
}
