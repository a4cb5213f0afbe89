use super::RecoveryResult;
use crate::error::{invalid, Error, Result};
use crate::linalg::{check_dims, lstsq, scatter, select_columns, solve_hpd, CMatrix, CVector, RANK_TOL};

/// Least-squares solution `(HᴴH)⁻¹Hᴴy` of an overdetermined system.
pub fn ls_solve(h: &CMatrix, y: &CVector) -> Result<CVector> {
    check_dims(h, y)?;
    if h.nrows() < h.ncols() {
        return Err(invalid(format!(
            "ls_solve needs m >= n, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    lstsq(h, y)
}

/// Minimum-norm solution `Hᴴ(HHᴴ)⁻¹y` of an underdetermined system.
pub fn min_norm_solve(h: &CMatrix, y: &CVector) -> Result<CVector> {
    check_dims(h, y)?;
    let (m, n) = h.shape();
    if m > n {
        return Err(invalid(format!("min_norm_solve needs m <= n, got {m}x{n}")));
    }
    // Hᴴ = QR  ⇒  s = Q R⁻ᴴ y
    let qr = h.adjoint().qr();
    let r = qr.r();
    let diag_max = (0..m).map(|i| r[(i, i)].norm()).fold(0.0, f64::max);
    if diag_max == 0.0 || (0..m).any(|i| r[(i, i)].norm() <= RANK_TOL * diag_max) {
        return Err(Error::SingularSystem("min_norm_solve: rows are linearly dependent".into()));
    }
    let z = r
        .adjoint()
        .solve_lower_triangular(y)
        .ok_or_else(|| Error::SingularSystem("min_norm_solve: triangular solve failed".into()))?;
    Ok(qr.q() * z)
}

/// LMMSE estimate `Rs Hᴴ (H Rs Hᴴ + Rv)⁻¹ y`.
pub fn lmmse_solve(h: &CMatrix, y: &CVector, rs: &CMatrix, rv: &CMatrix) -> Result<CVector> {
    check_dims(h, y)?;
    let (m, n) = h.shape();
    if rs.shape() != (n, n) || rv.shape() != (m, m) {
        return Err(invalid("covariance dimensions do not match the sensing matrix"));
    }
    if !crate::linalg::is_positive_definite(rs) {
        return Err(invalid("signal covariance is not positive definite"));
    }
    if !crate::linalg::is_positive_definite(rv) {
        return Err(invalid("noise covariance is not positive definite"));
    }
    let g = h * rs * h.adjoint() + rv;
    let z = solve_hpd(&g, &CMatrix::from_column_slice(m, 1, y.as_slice()))?;
    Ok(rs * h.adjoint() * z.column(0))
}

/// LMMSE with `Rs = σs² I` and `Rv = σv² I`.
pub fn lmmse_isotropic(h: &CMatrix, y: &CVector, signal_var: f64, noise_var: f64) -> Result<CVector> {
    check_dims(h, y)?;
    if !(signal_var > 0.0) || !(noise_var > 0.0) {
        return Err(invalid("lmmse variances must be positive"));
    }
    let m = h.nrows();
    let mut g = (h * h.adjoint()).scale(signal_var);
    for i in 0..m {
        g[(i, i)] += noise_var;
    }
    let z = solve_hpd(&g, &CMatrix::from_column_slice(m, 1, y.as_slice()))?;
    Ok(h.ad_mul(&z.column(0).into_owned()).scale(signal_var))
}

/// `lmmse_isotropic` with the eigendecomposition of `HHᴴ` cached, for many
/// observations through the same matrix at varying noise levels.
#[derive(Debug, Clone)]
pub struct IsotropicLmmse {
    h: CMatrix,
    eigvecs: CMatrix,
    eigvals: Vec<f64>,
}

impl IsotropicLmmse {
    pub fn new(h: &CMatrix) -> Self {
        let eig = (h * h.adjoint()).symmetric_eigen();
        Self {
            h: h.clone(),
            eigvecs: eig.eigenvectors,
            eigvals: eig.eigenvalues.iter().map(|v| v.max(0.0)).collect(),
        }
    }

    pub fn estimate(&self, y: &CVector, signal_var: f64, noise_var: f64) -> Result<CVector> {
        check_dims(&self.h, y)?;
        if !(signal_var > 0.0) || !(noise_var > 0.0) {
            return Err(invalid("lmmse variances must be positive"));
        }
        let mut z = self.eigvecs.ad_mul(y);
        for (zi, &l) in z.iter_mut().zip(&self.eigvals) {
            *zi /= signal_var * l + noise_var;
        }
        Ok(self.h.ad_mul(&(&self.eigvecs * z)).scale(signal_var))
    }
}

/// Information form `(Hᴴ Rv⁻¹ H + Rs⁻¹)⁻¹ Hᴴ Rv⁻¹ y`, algebraically equal to
/// [`lmmse_solve`].
pub fn lmmse_information_form(h: &CMatrix, y: &CVector, rs: &CMatrix, rv: &CMatrix) -> Result<CVector> {
    check_dims(h, y)?;
    let rv_inv = rv
        .clone()
        .try_inverse()
        .ok_or_else(|| invalid("noise covariance is singular"))?;
    let rs_inv = rs
        .clone()
        .try_inverse()
        .ok_or_else(|| invalid("signal covariance is singular"))?;
    let a = h.adjoint() * &rv_inv * h + rs_inv;
    let b = h.adjoint() * &rv_inv * y;
    let x = solve_hpd(&a, &CMatrix::from_column_slice(b.len(), 1, b.as_slice()))?;
    Ok(x.column(0).into_owned())
}

/// Least squares restricted to a known support, zero elsewhere.
pub fn oracle_ls(h: &CMatrix, y: &CVector, support: &[usize]) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    let n = h.ncols();
    let mut support = support.to_vec();
    support.sort_unstable();
    support.dedup();
    if support.iter().any(|&i| i >= n) {
        return Err(invalid("support index out of range"));
    }
    if support.len() > h.nrows() {
        return Err(invalid(format!(
            "support size {} exceeds the number of measurements {}",
            support.len(),
            h.nrows()
        )));
    }
    let coef = lstsq(&select_columns(h, &support), y)?;
    let estimate = scatter(n, &support, coef.as_slice());
    let mut out = RecoveryResult::new(estimate, support);
    out.residual_trace = vec![(y - h * &out.estimate).norm()];
    out.iterations = 1;
    Ok(out)
}
