//! ℓ1-regularized least squares, `½‖y − Hs‖² + λ Σ w_i |s_i|`, solved by
//! FISTA with a monotone restart.

use super::{extract_support, oracle_ls, RecoveryResult, SolverConfig};
use crate::error::{invalid, Result};
use crate::linalg::{check_dims, ensure_finite, spectral_norm_sq, CMatrix, CVector, C64, ZERO};

/// BPDN cost `½‖y − Hs‖² + λ‖s‖₁`.
pub fn bpdn_objective(h: &CMatrix, y: &CVector, s: &CVector, lambda: f64) -> f64 {
    0.5 * (y - h * s).norm_squared() + lambda * s.iter().map(|z| z.norm()).sum::<f64>()
}

/// Largest violation of the optimality conditions of the BPDN problem:
/// `h_iᴴ r = λ s_i/|s_i|` on the support and `|h_iᴴ r| ≤ λ` elsewhere.
pub fn kkt_violation(h: &CMatrix, y: &CVector, s: &CVector, lambda: f64) -> f64 {
    let g = h.ad_mul(&(y - h * s));
    violation(&g, s, lambda, None)
}

fn violation(g: &CVector, s: &CVector, lambda: f64, weights: Option<&[f64]>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..s.len() {
        let t = lambda * weights.map_or(1.0, |w| w[i]);
        let v = if s[i] != ZERO {
            (g[i] - s[i].scale(t / s[i].norm())).norm()
        } else {
            (g[i].norm() - t).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

fn soft_threshold(z: C64, t: f64) -> C64 {
    let a = z.norm();
    if a <= t {
        ZERO
    } else {
        z.scale((a - t) / a)
    }
}

fn weighted_l1(s: &CVector, weights: Option<&[f64]>) -> f64 {
    s.iter()
        .enumerate()
        .map(|(i, z)| z.norm() * weights.map_or(1.0, |w| w[i]))
        .sum()
}

/// Weighted BPDN from an optional warm start. Returns the raw iterate; no
/// support extraction or debiasing is applied.
pub fn weighted_bpdn(
    h: &CMatrix,
    y: &CVector,
    lambda: f64,
    weights: Option<&[f64]>,
    warm_start: Option<&CVector>,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    cfg.validate()?;
    ensure_finite(h.iter(), "sensing matrix")?;
    ensure_finite(y.iter(), "observation")?;
    let n = h.ncols();
    if !(lambda > 0.0) {
        return Err(invalid("bpdn requires lambda > 0"));
    }
    if let Some(w) = weights {
        if w.len() != n || w.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(invalid("weights must be n finite nonnegative values"));
        }
    }
    let objective = |s: &CVector, r: &CVector| 0.5 * r.norm_squared() + lambda * weighted_l1(s, weights);
    let thresholds: Vec<f64> = (0..n).map(|i| lambda * weights.map_or(1.0, |w| w[i])).collect();

    let mut x = match warm_start {
        Some(w) if w.len() == n => w.clone(),
        Some(_) => return Err(invalid("warm start has wrong length")),
        None => CVector::zeros(n),
    };
    let mut rx = y - h * &x;
    let mut fx = objective(&x, &rx);
    let mut trace = vec![rx.norm()];
    let mut obj_trace = vec![fx];

    let aty = h.ad_mul(y);
    let scale = aty.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lip = spectral_norm_sq(h) * (1.0 + 1e-12);
    if lip == 0.0 || scale == 0.0 {
        let mut out = RecoveryResult::new(x, Vec::new());
        out.residual_trace = trace;
        out.objective_trace = obj_trace;
        return Ok(out);
    }
    let kkt_tol = cfg.tolerance * scale;
    let prox_step = |point: &CVector, grad: &CVector| -> CVector {
        let mut u = point + grad.unscale(lip);
        for (i, z) in u.iter_mut().enumerate() {
            *z = soft_threshold(*z, thresholds[i] / lip);
        }
        u
    };

    let mut z = x.clone();
    let mut rz = rx.clone();
    let mut t = 1.0f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=cfg.max_iterations {
        iterations = it;
        let mut u = prox_step(&z, &h.ad_mul(&rz));
        let mut ru = y - h * &u;
        let mut fu = objective(&u, &ru);
        if fu > fx {
            // momentum overshot: restart with a plain proximal step from x
            u = prox_step(&x, &h.ad_mul(&rx));
            ru = y - h * &u;
            fu = objective(&u, &ru);
            t = 1.0;
            z = u.clone();
            rz = ru.clone();
        } else {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            z = &u + (&u - &x).scale(beta);
            rz = &ru + (&ru - &rx).scale(beta);
            t = t_next;
        }
        x = u;
        rx = ru;
        fx = fu.min(fx);
        trace.push(rx.norm());
        obj_trace.push(fx);
        if it % 10 == 0 || it == cfg.max_iterations {
            let g = h.ad_mul(&rx);
            if violation(&g, &x, lambda, weights) <= kkt_tol {
                converged = true;
                break;
            }
        }
    }
    let support = extract_support(&x, cfg.support_tol);
    Ok(RecoveryResult {
        estimate: x,
        support,
        residual_trace: trace,
        iterations,
        converged,
        diverged: false,
        objective_trace: obj_trace,
    })
}

fn finish(h: &CMatrix, y: &CVector, mut out: RecoveryResult, cfg: &SolverConfig) -> RecoveryResult {
    out.support = extract_support(&out.estimate, cfg.support_tol);
    if cfg.debias && !out.support.is_empty() && out.support.len() <= h.nrows() {
        if let Ok(fit) = oracle_ls(h, y, &out.support) {
            out.support = extract_support(&fit.estimate, cfg.support_tol);
            out.estimate = fit.estimate;
            out.residual_trace.push((y - h * &out.estimate).norm());
        }
    }
    out
}

/// Basis pursuit denoising with weight `cfg.lambda`.
///
/// The support is `{i : |ŝ_i| > support_tol · ‖ŝ‖∞}`; with `cfg.debias`
/// the estimate is re-fit by least squares on that support and thresholded
/// again.
pub fn bpdn_prox(h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
    let out = weighted_bpdn(h, y, cfg.lambda, None, None, cfg)?;
    Ok(finish(h, y, out, cfg))
}

/// Iteratively reweighted BPDN: after each round the weights become
/// `1/(|ŝ_i| + ε)` and the next round is warm-started from `ŝ`.
pub fn reweighted_l1(h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
    if cfg.reweight_rounds == 0 {
        return Err(invalid("reweight_rounds must be at least 1"));
    }
    if !(cfg.reweight_epsilon > 0.0) {
        return Err(invalid("reweight_epsilon must be positive"));
    }
    let mut out = weighted_bpdn(h, y, cfg.lambda, None, None, cfg)?;
    let mut trace = out.residual_trace.clone();
    let mut total = out.iterations;
    for _ in 1..cfg.reweight_rounds {
        let w: Vec<f64> = out
            .estimate
            .iter()
            .map(|z| 1.0 / (z.norm() + cfg.reweight_epsilon))
            .collect();
        let warm = out.estimate.clone();
        out = weighted_bpdn(h, y, cfg.lambda, Some(&w), Some(&warm), cfg)?;
        trace.extend_from_slice(&out.residual_trace[1..]);
        total += out.iterations;
    }
    out.residual_trace = trace;
    out.iterations = total;
    Ok(finish(h, y, out, cfg))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, real_vector, scatter, unitary_dft};
    use crate::model::{make_gaussian_matrix, measure, nmse, synthesize_sparse_vector, NoiseSpec, ValueLaw};
    use crate::rng::RngStream;

    #[test]
    fn soft_threshold_complex() {
        let z = soft_threshold(c64(3.0, 4.0), 1.0);
        assert!((z - c64(2.4, 3.2)).norm() < 1e-14);
        assert_eq!(soft_threshold(c64(0.3, 0.4), 0.5), ZERO);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let mut rng = RngStream::new(71, 0).rng();
        let h = make_gaussian_matrix(10, 20, 0.1, &mut rng).unwrap();
        let y = make_gaussian_matrix(10, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let lam = h.ad_mul(&y).iter().map(|z| z.norm()).fold(0.0, f64::max);
        let r = bpdn_prox(&h, &y, &SolverConfig::with_lambda(lam * 1.0001)).unwrap();
        assert!(r.support.is_empty());
        assert_eq!(r.estimate.norm(), 0.0);
    }

    #[test]
    fn orthonormal_closed_form() {
        let h = unitary_dft(8);
        let s = scatter(8, &[1, 4], &[c64(2.0, 0.0), c64(0.0, -0.3)]);
        let y = &h * &s;
        let lam = 0.5;
        let r = bpdn_prox(&h, &y, &SolverConfig::with_lambda(lam)).unwrap();
        let expect = CVector::from_iterator(8, h.ad_mul(&y).iter().map(|z| soft_threshold(*z, lam)));
        assert!((r.estimate - expect).norm() < 1e-10);
        assert_eq!(r.support, vec![1]);
    }

    #[test]
    fn monotone_objective_and_kkt() {
        let mut rng = RngStream::new(72, 0).rng();
        for _ in 0..5 {
            let h = make_gaussian_matrix(30, 80, 1.0 / 30.0, &mut rng).unwrap();
            let s = synthesize_sparse_vector(80, 5, &ValueLaw::UnitGaussian, &mut rng).unwrap();
            let y = measure(&h, &s.to_dense(), &NoiseSpec::real(1e-3), &mut rng).unwrap();
            let cfg = SolverConfig {
                max_iterations: 5000,
                tolerance: 1e-9,
                ..SolverConfig::with_lambda(0.02)
            };
            let r = bpdn_prox(&h, &y, &cfg).unwrap();
            assert!(r.converged);
            assert!(r.objective_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
            assert!(kkt_violation(&h, &y, &r.estimate, 0.02) <= 1e-6);
        }
    }

    #[test]
    fn debias_recovers_noiseless_plant() {
        let mut rng = RngStream::new(73, 0).rng();
        let h = make_gaussian_matrix(40, 100, 1.0 / 40.0, &mut rng).unwrap();
        let s = synthesize_sparse_vector(100, 4, &ValueLaw::UnitGaussian, &mut rng).unwrap();
        let y = &h * s.to_dense();
        let cfg = SolverConfig {
            debias: true,
            max_iterations: 20000,
            tolerance: 1e-10,
            ..SolverConfig::with_lambda(1e-3)
        };
        let r = bpdn_prox(&h, &y, &cfg).unwrap();
        assert_eq!(r.support, s.support());
        assert!(nmse(&r.estimate, &s.to_dense()).unwrap() < 1e-12);
    }

    #[test]
    fn reweighting_reduces_shrinkage() {
        let mut rng = RngStream::new(74, 0).rng();
        let h = make_gaussian_matrix(40, 100, 1.0 / 40.0, &mut rng).unwrap();
        let s = synthesize_sparse_vector(100, 4, &ValueLaw::UnitGaussian, &mut rng).unwrap().to_dense();
        let y = &h * &s;
        let cfg = SolverConfig::with_lambda(0.05);
        let plain = bpdn_prox(&h, &y, &cfg).unwrap();
        let rw = reweighted_l1(&h, &y, &cfg).unwrap();
        assert!(nmse(&rw.estimate, &s).unwrap() < nmse(&plain.estimate, &s).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        let h = unitary_dft(4);
        let y = real_vector(&[1.0, 0.0, 0.0, 0.0]);
        assert!(bpdn_prox(&h, &y, &SolverConfig::default()).is_err());
        let bad = real_vector(&[f64::NAN, 0.0, 0.0, 0.0]);
        assert!(bpdn_prox(&h, &bad, &SolverConfig::with_lambda(0.1)).is_err());
    }
}
