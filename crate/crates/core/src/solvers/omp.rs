use super::greedy::pursue;
use super::{RecoveryResult, SolverConfig};
use crate::error::{invalid, Result};
use crate::linalg::{check_dims, ensure_finite, scatter, CMatrix, CVector};

/// Orthogonal matching pursuit.
///
/// Each iteration selects the column most correlated with the residual
/// (normalized by column norm, lowest index on ties), re-fits by least squares
/// on the selected set and updates the residual. Stops after `sparsity_k`
/// selections or once `‖r‖ ≤ residual_tol`; without a sparsity the iteration
/// cap is `min(m, n)`.
pub fn omp(h: &CMatrix, y: &CVector, cfg: &SolverConfig) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    cfg.validate()?;
    ensure_finite(h.iter(), "sensing matrix")?;
    ensure_finite(y.iter(), "observation")?;
    let (m, n) = h.shape();
    if cfg.sparsity_k.is_none() && cfg.residual_tol == 0.0 {
        return Err(invalid("omp needs sparsity_k or a positive residual_tol"));
    }
    let max_atoms = cfg.sparsity_k.unwrap_or(m.min(n)).min(n);

    let run = pursue(h, y, max_atoms, cfg.residual_tol);
    let coef = run.basis.coefficients(y, run.basis.len());
    let mut support = run.basis.columns().to_vec();
    let estimate = scatter(n, &support, &coef);
    support.sort_unstable();

    let hit_target = run.basis.len() >= max_atoms || run.residual.norm() <= cfg.residual_tol;
    Ok(RecoveryResult {
        estimate,
        support,
        iterations: run.basis.len(),
        residual_trace: run.trace,
        converged: hit_target || run.zero_correlation_stop,
        diverged: false,
        objective_trace: Vec::new(),
    })
}

#[cfg(test)]
/// Selection order of OMP (unsorted support), used for tie and equivalence checks.
pub(crate) fn omp_selection_order(h: &CMatrix, y: &CVector, k: usize) -> Vec<usize> {
    pursue(h, y, k, 0.0).basis.columns().to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, select_columns, unitary_dft};
    use crate::model::{make_gaussian_matrix, measure, synthesize_sparse_vector, NoiseSpec, ValueLaw};
    use crate::rng::RngStream;

    #[test]
    fn orthogonal_columns_recover_in_k_steps() {
        let h = unitary_dft(16);
        let s = scatter(16, &[2, 9, 13], &[c64(1.0, 0.5), c64(-2.0, 0.0), c64(0.3, 0.0)]);
        let y = &h * &s;
        let r = omp(&h, &y, &SolverConfig::with_k(3)).unwrap();
        assert_eq!(r.support, vec![2, 9, 13]);
        assert_eq!(r.iterations, 3);
        assert!((r.estimate - s).norm() < 1e-12);
        assert!(r.converged);
    }

    #[test]
    fn residual_trace_monotone_and_orthogonal() {
        let mut rng = RngStream::new(31, 0).rng();
        for _ in 0..20 {
            let h = make_gaussian_matrix(30, 60, 1.0 / 30.0, &mut rng).unwrap();
            let s = synthesize_sparse_vector(60, 6, &ValueLaw::UnitGaussian, &mut rng).unwrap();
            let y = measure(&h, &s.to_dense(), &NoiseSpec::real(1e-3), &mut rng).unwrap();
            let r = omp(&h, &y, &SolverConfig::with_k(10)).unwrap();
            assert!(r.residual_trace.windows(2).all(|w| w[1] < w[0]));
            let resid = &y - &h * &r.estimate;
            let proj = select_columns(&h, &r.support).ad_mul(&resid);
            assert!(proj.norm() <= 1e-8 * y.norm().max(1.0));
        }
    }

    #[test]
    fn zero_observation_stops_immediately() {
        let h = unitary_dft(4);
        let r = omp(&h, &CVector::zeros(4), &SolverConfig::with_k(2)).unwrap();
        assert!(r.support.is_empty());
        assert!(r.converged);
    }

    #[test]
    fn residual_stop_rule() {
        let h = unitary_dft(8);
        let s = scatter(8, &[1, 5], &[c64(3.0, 0.0), c64(0.1, 0.0)]);
        let y = &h * &s;
        let cfg = SolverConfig {
            residual_tol: 0.5,
            ..SolverConfig::default()
        };
        let r = omp(&h, &y, &cfg).unwrap();
        assert_eq!(r.support, vec![1]);
        assert!(omp(&h, &y, &SolverConfig::default()).is_err());
    }

    #[test]
    fn selection_has_no_repeats() {
        let mut rng = RngStream::new(32, 0).rng();
        let h = make_gaussian_matrix(10, 40, 1.0, &mut rng).unwrap();
        let y = make_gaussian_matrix(10, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
        let order = omp_selection_order(&h, &y, 10);
        let mut sorted = order.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), order.len());
    }
}
