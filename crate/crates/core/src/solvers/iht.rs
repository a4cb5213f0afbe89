use super::{IhtStep, RecoveryResult, SolverConfig};
use crate::error::{invalid, Result};
use crate::linalg::{check_dims, spectral_norm_sq, CMatrix, CVector, ZERO};

/// Keeps the `k` largest-magnitude entries (lowest index on ties).
pub(crate) fn keep_largest(v: &CVector, k: usize) -> CVector {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].norm().total_cmp(&v[a].norm()).then(a.cmp(&b)));
    let mut out = CVector::zeros(v.len());
    for &i in idx.iter().take(k) {
        out[i] = v[i];
    }
    out
}

/// Iterative hard thresholding `ŝ ← T_k(ŝ + μ Hᴴ(y − Hŝ))` from `ŝ = 0`.
///
/// `μ = 1` by default; [`IhtStep::Scaled`] uses `μ = 1/‖H‖₂²`. Stops on the
/// iteration cap, on `‖r‖ ≤ residual_tol`, when the iterate stalls, or when
/// the residual grows tenfold over ten iterations (flagged as diverged).
pub fn iht(h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    cfg.validate()?;
    let k = cfg
        .sparsity_k
        .ok_or_else(|| invalid("iht requires sparsity_k"))?;
    let step = match cfg.iht_step {
        IhtStep::Unit => 1.0,
        IhtStep::Scaled => {
            let l = spectral_norm_sq(h);
            if l > 0.0 {
                1.0 / l
            } else {
                1.0
            }
        }
    };
    let n = h.ncols();
    let mut s = CVector::zeros(n);
    let mut resid = y.clone();
    let mut trace = vec![resid.norm()];
    let mut converged = false;
    let mut diverged = false;
    let mut iterations = 0;

    for it in 1..=cfg.max_iterations {
        iterations = it;
        let grad = h.ad_mul(&resid);
        let next = keep_largest(&(&s + grad.scale(step)), k);
        resid = y - h * &next;
        let rn = resid.norm();
        trace.push(rn);
        let change = (&next - &s).norm();
        s = next;
        if !rn.is_finite() || (it >= 10 && rn > 10.0 * trace[it - 10]) {
            diverged = true;
            break;
        }
        if rn <= cfg.residual_tol || change <= cfg.tolerance * s.norm() {
            converged = true;
            break;
        }
    }
    let support: Vec<usize> = (0..n).filter(|&i| s[i] != ZERO).collect();
    Ok(RecoveryResult {
        estimate: s,
        support,
        residual_trace: trace,
        iterations,
        converged,
        diverged,
        objective_trace: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, real_vector, scatter, unitary_dft};
    use crate::model::{make_gaussian_matrix, nmse, synthesize_sparse_vector, ValueLaw};
    use crate::rng::RngStream;

    #[test]
    fn keep_largest_ties() {
        let v = real_vector(&[1.0, -3.0, 3.0, 0.5]);
        assert_eq!(keep_largest(&v, 1), real_vector(&[0.0, -3.0, 0.0, 0.0]));
        assert_eq!(keep_largest(&v, 2), real_vector(&[0.0, -3.0, 3.0, 0.0]));
    }

    #[test]
    fn unitary_one_step() {
        let h = unitary_dft(16);
        let s = scatter(16, &[1, 6, 10], &[c64(1.0, 1.0), c64(-0.5, 0.0), c64(2.0, 0.0)]);
        let y = &h * &s;
        let cfg = SolverConfig {
            max_iterations: 1,
            ..SolverConfig::with_k(3)
        };
        let r = iht(&h, &y, &cfg).unwrap();
        assert!((r.estimate - &s).norm() < 1e-12);
        assert_eq!(r.support, vec![1, 6, 10]);
    }

    #[test]
    fn fixed_point_is_stationary() {
        let mut rng = RngStream::new(61, 0).rng();
        let h = make_gaussian_matrix(20, 40, 1.0 / 20.0, &mut rng).unwrap();
        let s = synthesize_sparse_vector(40, 3, &ValueLaw::UnitGaussian, &mut rng).unwrap().to_dense();
        let y = &h * &s;
        let next = keep_largest(&(&s + h.ad_mul(&(&y - &h * &s))), 3);
        assert!((next - s).norm() < 1e-12);
    }

    #[test]
    fn gaussian_noiseless_convergence() {
        let mut rng = RngStream::new(62, 0).rng();
        let trials = 50;
        let mut ok = 0;
        for _ in 0..trials {
            let h = make_gaussian_matrix(100, 256, 1.0 / 100.0, &mut rng).unwrap();
            let s = synthesize_sparse_vector(256, 5, &ValueLaw::UnitGaussian, &mut rng).unwrap().to_dense();
            let y = &h * &s;
            let cfg = SolverConfig {
                max_iterations: 100,
                tolerance: 1e-12,
                ..SolverConfig::with_k(5)
            };
            let r = iht(&h, &y, &cfg).unwrap();
            if nmse(&r.estimate, &s).unwrap() < 1e-6 {
                ok += 1;
            }
        }
        assert!(ok as f64 >= 0.8 * trials as f64, "{ok}/{trials}");
    }

    #[test]
    fn divergence_is_flagged() {
        // a badly scaled matrix makes the unit step blow up
        let mut rng = RngStream::new(63, 0).rng();
        let h = make_gaussian_matrix(20, 40, 4.0, &mut rng).unwrap();
        let y = make_gaussian_matrix(20, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let r = iht(&h, &y, &SolverConfig::with_k(10)).unwrap();
        assert!(r.diverged);
        let scaled = SolverConfig {
            iht_step: IhtStep::Scaled,
            ..SolverConfig::with_k(10)
        };
        assert!(!iht(&h, &y, &scaled).unwrap().diverged);
        assert!(iht(&h, &y, &SolverConfig::default()).is_err());
    }
}
