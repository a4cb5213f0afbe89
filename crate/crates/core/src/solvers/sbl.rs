//! Sparse Bayesian learning by evidence maximization.
//!
//! Prior `s_i ~ CN(0, γ_i)` (or real Gaussian when `H` and `y` are real),
//! noise `v ~ CN(0, σ²I)`. The E-step forms the Gaussian posterior of `s`;
//! the M-step updates `γ` and, unless fixed, `σ²`.

use nalgebra::{Cholesky, ComplexField, DMatrix, DVector, Dyn};

use super::{extract_support, oracle_ls, RecoveryResult, SblRule, SolverConfig};
use crate::error::{invalid, Error, Result};
use crate::linalg::{
    c64, check_dims, ensure_finite, is_real, scatter, to_real_matrix, to_real_vector, CMatrix, CVector, C64,
};

trait Scalar: ComplexField<RealField = f64> + Copy {
    fn to_c64(self) -> C64 {
        c64(self.real(), self.imaginary())
    }
}

impl Scalar for f64 {}
impl Scalar for C64 {}

struct Posterior<T> {
    /// Mean on the active set.
    mean: DVector<T>,
    /// Diagonal of the posterior covariance on the active set.
    var: Vec<f64>,
    log_evidence: f64,
}

fn cholesky_with_retry<T: Scalar>(mut a: DMatrix<T>) -> Result<Cholesky<T, Dyn>> {
    if let Some(c) = a.clone().cholesky() {
        return Ok(c);
    }
    let d = a.nrows().max(1);
    let scale = (0..a.nrows()).map(|i| a[(i, i)].real().abs()).sum::<f64>() / d as f64;
    let jitter = 1e-10 * scale.max(f64::MIN_POSITIVE);
    for i in 0..a.nrows() {
        a[(i, i)] += T::from_real(jitter);
    }
    a.cholesky()
        .ok_or_else(|| Error::SingularSystem("sbl covariance is not positive definite".into()))
}

fn log_det<T: Scalar>(c: &Cholesky<T, Dyn>) -> f64 {
    let l = c.l_dirty();
    2.0 * (0..l.nrows()).map(|i| l[(i, i)].real().ln()).sum::<f64>()
}

fn evidence_from(m: usize, log_det: f64, quad: f64, complex: bool) -> f64 {
    if complex {
        -(m as f64) * std::f64::consts::PI.ln() - log_det - quad
    } else {
        -0.5 * (m as f64 * (2.0 * std::f64::consts::PI).ln() + log_det + quad)
    }
}

/// Posterior via the `m × m` observation covariance `Σ_y = σ²I + HΓHᴴ`.
fn posterior_obs<T: Scalar>(h_a: &DMatrix<T>, gamma: &[f64], noise: f64, y: &DVector<T>, complex: bool) -> Result<Posterior<T>> {
    let m = h_a.nrows();
    let mut hg = h_a.clone();
    for (j, mut col) in hg.column_iter_mut().enumerate() {
        col *= T::from_real(gamma[j]);
    }
    let mut sy = &hg * h_a.adjoint();
    for i in 0..m {
        sy[(i, i)] += T::from_real(noise);
    }
    let chol = cholesky_with_retry(sy)?;
    let alpha = chol.solve(y);
    // h_jᴴ Σ_y⁻¹ h_j = ‖L⁻¹ h_j‖²
    let w = chol
        .l_dirty()
        .solve_lower_triangular(h_a)
        .ok_or_else(|| Error::SingularSystem("sbl triangular solve failed".into()))?;
    let mean = hg.ad_mul(&alpha);
    let var = (0..h_a.ncols())
        .map(|j| {
            let q = w.column(j).norm_squared();
            (gamma[j] - gamma[j] * gamma[j] * q).max(0.0)
        })
        .collect();
    let quad = y.dotc(&alpha).real();
    Ok(Posterior {
        mean,
        var,
        log_evidence: evidence_from(m, log_det(&chol), quad, complex),
    })
}

/// Posterior via the `a × a` precision `HᴴH/σ² + Γ⁻¹` on the active set.
fn posterior_active<T: Scalar>(
    gram_a: &DMatrix<T>,
    hty_a: &DVector<T>,
    y_norm_sq: f64,
    m: usize,
    gamma: &[f64],
    noise: f64,
    complex: bool,
) -> Result<Posterior<T>> {
    let a = gamma.len();
    let mut prec = gram_a.unscale(noise);
    for j in 0..a {
        prec[(j, j)] += T::from_real(1.0 / gamma[j]);
    }
    let chol = cholesky_with_retry(prec)?;
    let cov = chol.inverse();
    let mean = (&cov * hty_a).unscale(noise);
    let var = (0..a).map(|j| cov[(j, j)].real().max(0.0)).collect();
    let log_det_y = m as f64 * noise.ln() + gamma.iter().map(|g| g.ln()).sum::<f64>() + log_det(&chol);
    let quad = (y_norm_sq - hty_a.dotc(&mean).real()) / noise;
    Ok(Posterior {
        mean,
        var,
        log_evidence: evidence_from(m, log_det_y, quad, complex),
    })
}

struct Fit {
    estimate: CVector,
    evidence: Vec<f64>,
    residual: Vec<f64>,
    iterations: usize,
    converged: bool,
}

fn run<T: Scalar>(h: &DMatrix<T>, y: &DVector<T>, cfg: &SolverConfig, complex: bool) -> Result<Fit> {
    let (m, n) = h.shape();
    let y_norm_sq = y.norm_squared();
    let fixed_noise = cfg.noise_variance;
    let mut noise = fixed_noise.unwrap_or(0.1 * y_norm_sq / m as f64);
    let noise_floor = 1e-10 * y_norm_sq / m as f64;
    let g0 = y_norm_sq / h.norm_squared().max(f64::MIN_POSITIVE);

    let mut active: Vec<usize> = (0..n).filter(|&j| h.column(j).norm() > 0.0).collect();
    let mut gamma = vec![g0; active.len()];
    let mut gram: Option<DMatrix<T>> = None;
    let mut hty: Option<DVector<T>> = None;
    let mut evidence = Vec::new();
    let mut residual = vec![y_norm_sq.sqrt()];
    let mut converged = false;
    let mut iterations = 0;
    let post: Option<Posterior<T>>;

    loop {
        if active.is_empty() {
            post = None;
            converged = true;
            break;
        }
        let h_a = h.select_columns(&active);
        let p = if active.len() < m {
            let g = gram.get_or_insert_with(|| h.ad_mul(h));
            let b = hty.get_or_insert_with(|| h.ad_mul(y));
            let g_a = g.select_rows(&active).select_columns(&active);
            let b_a = b.select_rows(&active);
            posterior_active(&g_a, &b_a, y_norm_sq, m, &gamma, noise, complex)?
        } else {
            posterior_obs(&h_a, &gamma, noise, y, complex)?
        };
        let r = y - &h_a * &p.mean;
        let r_sq = r.norm_squared();
        evidence.push(p.log_evidence);
        residual.push(r_sq.sqrt());
        if converged || iterations >= cfg.max_iterations {
            post = Some(p);
            break;
        }
        iterations += 1;

        // M-step
        let mut next = vec![0.0; gamma.len()];
        let mut dof = 0.0;
        for j in 0..gamma.len() {
            let mu_sq = p.mean[j].modulus_squared();
            let ratio = 1.0 - p.var[j] / gamma[j];
            dof += ratio;
            next[j] = match cfg.sbl_rule {
                SblRule::Em => mu_sq + p.var[j],
                SblRule::FixedPoint => mu_sq / ratio.max(1e-12),
            };
        }
        if fixed_noise.is_none() {
            noise = match cfg.sbl_rule {
                SblRule::Em => (r_sq + noise * dof) / m as f64,
                SblRule::FixedPoint => r_sq / (m as f64 - dof).max(1e-3 * m as f64),
            }
            .max(noise_floor);
        }
        let peak = next.iter().cloned().fold(0.0, f64::max);
        let change = next
            .iter()
            .zip(&gamma)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        converged = change <= cfg.tolerance * peak;
        let keep: Vec<usize> = (0..next.len())
            .filter(|&j| next[j] > 0.0 && next[j] >= cfg.sbl_prune_threshold * peak)
            .collect();
        active = keep.iter().map(|&j| active[j]).collect();
        gamma = keep.iter().map(|&j| next[j]).collect();
    }

    let estimate = match post {
        Some(p) => {
            let vals: Vec<C64> = p.mean.iter().map(|v| v.to_c64()).collect();
            scatter(n, &active, &vals)
        }
        None => CVector::zeros(n),
    };
    Ok(Fit {
        estimate,
        evidence,
        residual,
        iterations,
        converged,
    })
}

/// Sparse Bayesian learning with EM (or fixed-point) hyperparameter updates.
///
/// The estimate is the posterior mean on the indices whose variance
/// survives pruning (`γ_i ≥ sbl_prune_threshold · max γ`). The objective
/// trace holds the log evidence before each update.
pub fn sbl_em(h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    cfg.validate()?;
    ensure_finite(h.iter(), "sensing matrix")?;
    ensure_finite(y.iter(), "observation")?;
    if !(cfg.sbl_prune_threshold > 0.0) {
        return Err(invalid("sbl_prune_threshold must be positive"));
    }
    let n = h.ncols();
    if y.norm() == 0.0 {
        let mut out = RecoveryResult::new(CVector::zeros(n), Vec::new());
        out.residual_trace = vec![0.0];
        return Ok(out);
    }
    let fit = if is_real(h.iter()) && is_real(y.iter()) {
        run(&to_real_matrix(h), &to_real_vector(y), cfg, false)?
    } else {
        run(h, y, cfg, true)?
    };
    let mut out = RecoveryResult {
        support: extract_support(&fit.estimate, cfg.support_tol),
        estimate: fit.estimate,
        residual_trace: fit.residual,
        iterations: fit.iterations,
        converged: fit.converged,
        diverged: false,
        objective_trace: fit.evidence,
    };
    if cfg.debias && !out.support.is_empty() && out.support.len() <= h.nrows() {
        if let Ok(ls) = oracle_ls(h, y, &out.support) {
            out.support = extract_support(&ls.estimate, cfg.support_tol);
            out.estimate = ls.estimate;
        }
    }
    Ok(out)
}

/// Log marginal likelihood `log p(y | γ, σ²)` under the complex Gaussian
/// model, or the real one when `complex` is false.
pub fn sbl_log_evidence(h: &CMatrix, y: &CVector, gamma: &[f64], noise_variance: f64, complex: bool) -> Result<f64> {
    check_dims(h, y)?;
    if gamma.len() != h.ncols() || gamma.iter().any(|g| !(*g >= 0.0)) {
        return Err(invalid("gamma must hold n nonnegative values"));
    }
    if !(noise_variance > 0.0) {
        return Err(invalid("noise variance must be positive"));
    }
    let m = h.nrows();
    let mut sy = h * DMatrix::from_diagonal(&DVector::from_iterator(gamma.len(), gamma.iter().map(|&g| c64(g, 0.0)))) * h.adjoint();
    for i in 0..m {
        sy[(i, i)] += c64(noise_variance, 0.0);
    }
    let chol = sy
        .cholesky()
        .ok_or_else(|| Error::SingularSystem("observation covariance is not positive definite".into()))?;
    let quad = y.dotc(&chol.solve(y)).re;
    Ok(evidence_from(m, log_det(&chol), quad, complex))
}
