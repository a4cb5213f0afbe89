//! Dense complex linear algebra shared by every module.
//!
//! Real-valued problems are carried as complex data with zero imaginary parts.

use nalgebra::{ComplexField, DMatrix, DVector};

pub use nalgebra::Complex;

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Relative singular-value tolerance used to declare linear dependence.
pub const RANK_TOL: f64 = 1e-10;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real_vector(values: &[f64]) -> CVector {
    CVector::from_iterator(values.len(), values.iter().map(|&v| c64(v, 0.0)))
}

/// Builds a matrix from real row-major data.
pub fn real_matrix(rows: usize, cols: usize, row_major: &[f64]) -> CMatrix {
    assert_eq!(row_major.len(), rows * cols);
    CMatrix::from_fn(rows, cols, |i, j| c64(row_major[i * cols + j], 0.0))
}

pub fn is_finite(v: &C64) -> bool {
    v.re.is_finite() && v.im.is_finite()
}

pub fn ensure_finite<'a>(
    entries: impl IntoIterator<Item = &'a C64>,
    what: &str,
) -> Result<()> {
    if entries.into_iter().all(is_finite) {
        Ok(())
    } else {
        Err(invalid(format!("{what} contains non-finite entries")))
    }
}

pub fn is_real<'a>(entries: impl IntoIterator<Item = &'a C64>) -> bool {
    entries.into_iter().all(|z| z.im == 0.0)
}

pub fn column_norms(h: &CMatrix) -> Vec<f64> {
    h.column_iter().map(|c| c.norm()).collect()
}

/// Scales every nonzero column to unit norm; zero columns are left untouched.
pub fn normalize_columns(h: &CMatrix) -> CMatrix {
    let mut out = h.clone();
    for mut col in out.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col.unscale_mut(n);
        }
    }
    out
}

pub fn select_columns(h: &CMatrix, cols: &[usize]) -> CMatrix {
    h.select_columns(cols.iter())
}

pub fn select_rows(h: &CMatrix, rows: &[usize]) -> CMatrix {
    h.select_rows(rows.iter())
}

pub fn select_entries(v: &CVector, rows: &[usize]) -> CVector {
    CVector::from_iterator(rows.len(), rows.iter().map(|&i| v[i]))
}

/// Dense vector of dimension `n` with `values` placed at `support`.
pub fn scatter(n: usize, support: &[usize], values: &[C64]) -> CVector {
    let mut out = CVector::zeros(n);
    for (&i, &v) in support.iter().zip(values) {
        out[i] = v;
    }
    out
}

pub fn check_dims(h: &CMatrix, y: &CVector) -> Result<()> {
    if h.nrows() != y.len() {
        return Err(invalid(format!(
            "matrix has {} rows but observation has length {}",
            h.nrows(),
            y.len()
        )));
    }
    if h.ncols() == 0 || h.nrows() == 0 {
        return Err(invalid("matrix must have at least one row and column"));
    }
    Ok(())
}

/// Least-squares solution of a full-column-rank system via Householder QR.
pub fn lstsq(a: &CMatrix, b: &CVector) -> Result<CVector> {
    let (m, n) = a.shape();
    if m != b.len() {
        return Err(invalid(format!("lstsq: {m} rows vs rhs length {}", b.len())));
    }
    if n == 0 {
        return Ok(CVector::zeros(0));
    }
    if m < n {
        return Err(Error::SingularSystem(format!(
            "lstsq: {m}x{n} system has more unknowns than equations"
        )));
    }
    let qr = a.clone().qr();
    let r = qr.r();
    let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if diag_max == 0.0 || (0..n).any(|i| r[(i, i)].abs() <= RANK_TOL * diag_max) {
        return Err(Error::SingularSystem("lstsq: rank-deficient columns".into()));
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let rhs = qtb.rows(0, n).into_owned();
    r.solve_upper_triangular(&rhs)
        .ok_or_else(|| Error::SingularSystem("lstsq: triangular solve failed".into()))
}

/// Solves `a x = b` for Hermitian positive-definite `a`.
pub fn solve_hpd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let chol = a
        .clone()
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("matrix is not positive definite".into()))?;
    Ok(chol.solve(b))
}

pub fn is_positive_definite(a: &CMatrix) -> bool {
    a.is_square() && a.clone().cholesky().is_some()
}

/// Largest squared singular value, from the eigenvalues of the smaller Gram matrix.
pub fn spectral_norm_sq<T: ComplexField<RealField = f64>>(h: &DMatrix<T>) -> f64 {
    let gram = if h.nrows() <= h.ncols() {
        h * h.adjoint()
    } else {
        h.adjoint() * h
    };
    gram.symmetric_eigenvalues().iter().cloned().fold(0.0, f64::max)
}

/// Unitary DFT, `F[k, t] = exp(-2πi k t / n) / sqrt(n)`.
pub fn unitary_dft(n: usize) -> CMatrix {
    dft_matrix(n).unscale(n as f64).scale((n as f64).sqrt())
}

/// Unnormalized DFT, `F[k, t] = exp(-2πi k t / n)`.
pub fn dft_matrix(n: usize) -> CMatrix {
    CMatrix::from_fn(n, n, |k, t| twiddle(-(((k * t) % n.max(1)) as f64) / n as f64))
}

/// `exp(2πi x)`.
#[inline]
pub fn twiddle(x: f64) -> C64 {
    let (s, c) = (2.0 * std::f64::consts::PI * x).sin_cos();
    c64(c, s)
}

pub fn to_real_matrix(h: &CMatrix) -> DMatrix<f64> {
    h.map(|z| z.re)
}

pub fn to_real_vector(v: &CVector) -> DVector<f64> {
    v.map(|z| z.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lstsq_tall_example() {
        let h = real_matrix(2, 1, &[1.0, 1.0]);
        let y = real_vector(&[0.0, 2.0]);
        let s = lstsq(&h, &y).unwrap();
        assert!((s[0] - ONE).norm() < 1e-14);
    }

    #[test]
    fn lstsq_rejects_rank_deficient() {
        let h = real_matrix(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let y = real_vector(&[1.0, 1.0, 1.0]);
        assert!(matches!(lstsq(&h, &y), Err(Error::SingularSystem(_))));
    }

    #[test]
    fn unitary_dft_is_unitary() {
        let f = unitary_dft(8);
        let g = f.adjoint() * &f;
        assert!((g - CMatrix::identity(8, 8)).norm() < 1e-12);
    }

    #[test]
    fn spectral_norm_of_diagonal() {
        let h = real_matrix(2, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        assert!((spectral_norm_sq(&h) - 9.0).abs() < 1e-12);
    }
}
