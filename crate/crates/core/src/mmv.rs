//! Joint-sparse recovery from multiple measurement vectors.

use crate::error::{invalid, Result};
use crate::linalg::{check_dims, column_norms, scatter, CMatrix, CVector};
use crate::solvers::greedy::{argmax_excluding, correlations, OrthoBasis};
use crate::solvers::{Aggregator, SolverConfig};

/// Snapshots `y_t = H_t s_t + v_t` whose `s_t` share one support.
#[derive(Debug, Clone, PartialEq)]
pub enum MmvProblem {
    /// One sensing matrix for every snapshot.
    SharedMatrix { h: CMatrix, observations: Vec<CVector> },
    /// A separate sensing matrix per snapshot, all with `n` columns.
    DistinctMatrices { matrices: Vec<CMatrix>, observations: Vec<CVector> },
}

impl MmvProblem {
    pub fn shared(h: CMatrix, observations: Vec<CVector>) -> Result<Self> {
        if observations.is_empty() {
            return Err(invalid("at least one snapshot is required"));
        }
        for y in &observations {
            check_dims(&h, y)?;
        }
        Ok(Self::SharedMatrix { h, observations })
    }

    pub fn distinct(matrices: Vec<CMatrix>, observations: Vec<CVector>) -> Result<Self> {
        if observations.is_empty() || matrices.len() != observations.len() {
            return Err(invalid("need one matrix per snapshot and at least one snapshot"));
        }
        let n = matrices[0].ncols();
        for (h, y) in matrices.iter().zip(&observations) {
            if h.ncols() != n {
                return Err(invalid("all matrices must have the same column count"));
            }
            check_dims(h, y)?;
        }
        Ok(Self::DistinctMatrices { matrices, observations })
    }

    pub fn snapshot_count(&self) -> usize {
        self.observations().len()
    }

    pub fn observations(&self) -> &[CVector] {
        match self {
            Self::SharedMatrix { observations, .. } | Self::DistinctMatrices { observations, .. } => observations,
        }
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::SharedMatrix { h, .. } => h.ncols(),
            Self::DistinctMatrices { matrices, .. } => matrices[0].ncols(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MmvResult {
    /// Sorted common support.
    pub support: Vec<usize>,
    /// Columns in the order they were selected.
    pub selection_order: Vec<usize>,
    /// One estimate per snapshot, all supported on `support`.
    pub estimates: Vec<CVector>,
    /// Frobenius norm of the residual matrix after each iteration.
    pub residual_trace: Vec<f64>,
    pub iterations: usize,
}

/// Greedy joint pursuit where snapshot `t` is observed through
/// `matrices[owner[t]]`.
fn joint_pursuit(matrices: &[&CMatrix], owner: &[usize], ys: &[CVector], cfg: &SolverConfig) -> Result<MmvResult> {
    cfg.validate()?;
    let n = matrices[0].ncols();
    let m = matrices[0].nrows();
    if cfg.sparsity_k.is_none() && cfg.residual_tol == 0.0 {
        return Err(invalid("joint pursuit needs sparsity_k or a positive residual_tol"));
    }
    let max_atoms = cfg.sparsity_k.unwrap_or(m.min(n)).min(n);
    let norms: Vec<Vec<f64>> = matrices.iter().map(|h| column_norms(h)).collect();
    let mut excluded = vec![false; n];
    for j in 0..n {
        excluded[j] = norms.iter().all(|nv| nv[j] == 0.0);
    }
    let mut bases = vec![OrthoBasis::default(); matrices.len()];
    let mut residuals: Vec<CVector> = ys.to_vec();
    let frob = |rs: &[CVector]| rs.iter().map(|r| r.norm_squared()).sum::<f64>().sqrt();
    let mut trace = vec![frob(&residuals)];
    let zero_level = 1e-13 * trace[0];

    while bases[0].len() < max_atoms && frob(&residuals) > cfg.residual_tol {
        let per_snapshot: Vec<Vec<f64>> = residuals
            .iter()
            .zip(owner)
            .map(|(r, &o)| correlations(matrices[o], &norms[o], r))
            .collect();
        let scores: Vec<f64> = (0..n)
            .map(|j| match cfg.aggregator {
                Aggregator::Sum => per_snapshot.iter().map(|c| c[j]).sum(),
                Aggregator::L2 => per_snapshot.iter().map(|c| c[j] * c[j]).sum::<f64>().sqrt(),
            })
            .collect();
        let mut added = false;
        while let Some((j, s)) = argmax_excluding(&scores, &excluded) {
            if s <= zero_level {
                break;
            }
            excluded[j] = true;
            let mut trial = bases.clone();
            let ok = trial
                .iter_mut()
                .zip(matrices)
                .all(|(b, h)| b.try_push(j, &h.column(j).into_owned()).is_some());
            if ok {
                bases = trial;
                added = true;
                break;
            }
        }
        if !added {
            break;
        }
        for (r, &o) in residuals.iter_mut().zip(owner) {
            bases[o].deflate_last(r);
        }
        trace.push(frob(&residuals));
    }

    let order = bases[0].columns().to_vec();
    let estimates = ys
        .iter()
        .zip(owner)
        .map(|(y, &o)| scatter(n, &order, &bases[o].coefficients(y, order.len())))
        .collect();
    let mut support = order.clone();
    support.sort_unstable();
    Ok(MmvResult {
        support,
        iterations: order.len(),
        selection_order: order,
        estimates,
        residual_trace: trace,
    })
}

/// Simultaneous OMP for a shared sensing matrix.
///
/// Each iteration selects the column maximizing the aggregated normalized
/// correlation with all snapshot residuals, then re-fits every snapshot by
/// least squares on the common support.
pub fn somp(problem: &MmvProblem, cfg: &SolverConfig) -> Result<MmvResult> {
    match problem {
        MmvProblem::SharedMatrix { h, observations } => {
            joint_pursuit(&[h], &vec![0; observations.len()], observations, cfg)
        }
        MmvProblem::DistinctMatrices { .. } => Err(invalid("somp expects a shared-matrix problem")),
    }
}

/// Joint pursuit with a distinct sensing matrix per snapshot.
pub fn gsomp_distinct(problem: &MmvProblem, cfg: &SolverConfig) -> Result<MmvResult> {
    match problem {
        MmvProblem::DistinctMatrices { matrices, observations } => {
            let refs: Vec<&CMatrix> = matrices.iter().collect();
            let owner: Vec<usize> = (0..observations.len()).collect();
            joint_pursuit(&refs, &owner, observations, cfg)
        }
        MmvProblem::SharedMatrix { .. } => Err(invalid("gsomp_distinct expects distinct matrices")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_complex_gaussian_matrix, make_gaussian_matrix, synthesize_sparse_vector, ValueLaw};
    use crate::rng::RngStream;
    use crate::solvers::omp;
    use crate::solvers::omp::omp_selection_order;

    #[test]
    fn single_snapshot_matches_omp() {
        let mut rng = RngStream::new(111, 0).rng();
        for _ in 0..20 {
            let h = make_complex_gaussian_matrix(16, 40, 1.0 / 16.0, &mut rng).unwrap();
            let y = make_complex_gaussian_matrix(16, 1, 1.0, &mut rng).unwrap().column(0).into_owned();
            let cfg = SolverConfig::with_k(5);
            let p = MmvProblem::shared(h.clone(), vec![y.clone()]).unwrap();
            let r = somp(&p, &cfg).unwrap();
            assert_eq!(r.selection_order, omp_selection_order(&h, &y, 5));
            assert_eq!(r.estimates[0], omp(&h, &y, &cfg).unwrap().estimate);
            let d = MmvProblem::distinct(vec![h.clone()], vec![y.clone()]).unwrap();
            assert_eq!(gsomp_distinct(&d, &cfg).unwrap().selection_order, r.selection_order);
        }
    }

    #[test]
    fn repeated_snapshots_match_omp() {
        let mut rng = RngStream::new(112, 0).rng();
        let h = make_gaussian_matrix(20, 50, 1.0 / 20.0, &mut rng).unwrap();
        let s = synthesize_sparse_vector(50, 4, &ValueLaw::UnitGaussian, &mut rng).unwrap();
        let y = &h * s.to_dense();
        let p = MmvProblem::shared(h.clone(), vec![y.clone(); 3]).unwrap();
        let r = somp(&p, &SolverConfig::with_k(4)).unwrap();
        assert_eq!(r.selection_order, omp_selection_order(&h, &y, 4));
    }

    #[test]
    fn equal_distinct_matrices_match_somp() {
        let mut rng = RngStream::new(113, 0).rng();
        let h = make_gaussian_matrix(16, 64, 1.0 / 16.0, &mut rng).unwrap();
        let ys: Vec<CVector> = (0..4)
            .map(|_| make_gaussian_matrix(16, 1, 1.0, &mut rng).unwrap().column(0).into_owned())
            .collect();
        let cfg = SolverConfig::with_k(4);
        let a = somp(&MmvProblem::shared(h.clone(), ys.clone()).unwrap(), &cfg).unwrap();
        let b = gsomp_distinct(&MmvProblem::distinct(vec![h; 4], ys).unwrap(), &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_matrices_recover_common_support() {
        let mut rng = RngStream::new(114, 0).rng();
        let trials = 100;
        let mut ok = 0;
        for _ in 0..trials {
            let support = synthesize_sparse_vector(64, 4, &ValueLaw::UnitGaussian, &mut rng).unwrap();
            let mut mats = Vec::new();
            let mut ys = Vec::new();
            for _ in 0..8 {
                let h = make_gaussian_matrix(16, 64, 1.0 / 16.0, &mut rng).unwrap();
                let vals: Vec<_> = support.support().iter().map(|_| ValueLaw::UnitGaussian.draw(&mut rng)).collect();
                let s = crate::linalg::scatter(64, support.support(), &vals);
                ys.push(&h * s);
                mats.push(h);
            }
            let p = MmvProblem::distinct(mats, ys).unwrap();
            let r = gsomp_distinct(&p, &SolverConfig::with_k(4)).unwrap();
            if r.support == support.support() {
                ok += 1;
            }
            for e in &r.estimates {
                assert!(e.iter().enumerate().all(|(i, z)| z.norm() == 0.0 || r.support.contains(&i)));
            }
        }
        assert!(ok >= 95, "{ok}/{trials}");
    }

    #[test]
    fn wrong_scenario_rejected() {
        let h = CMatrix::identity(3, 3);
        let p = MmvProblem::shared(h.clone(), vec![CVector::zeros(3)]).unwrap();
        assert!(gsomp_distinct(&p, &SolverConfig::with_k(1)).is_err());
        assert!(MmvProblem::shared(h, vec![]).is_err());
    }
}
