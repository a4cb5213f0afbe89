use std::collections::HashSet;

use super::greedy::{correlations, OrthoBasis};
use super::{RecoveryResult, SolverConfig};
use crate::error::{invalid, Result};
use crate::linalg::{check_dims, column_norms, scatter, CMatrix, CVector, C64};
use crate::model::{slice_entry, Constellation};

#[derive(Clone)]
struct Candidate {
    basis: OrthoBasis,
    ls_residual: CVector,
    sorted: Vec<usize>,
    sliced: Vec<C64>,
    sliced_residual: f64,
}

impl Candidate {
    fn rank_key(&self) -> (f64, f64) {
        (self.sliced_residual, self.ls_residual.norm())
    }
}

/// Beam-search greedy pursuit with slicing.
///
/// Every level expands each surviving candidate by the `B` columns most
/// correlated with its least-squares residual. Each child is fit by least
/// squares, the coefficients are sliced to the constellation, and the `B`
/// children with the smallest sliced residual `‖y − H_S ŝ_S‖` survive. After
/// `k` levels the best survivor is returned with its sliced values. `B = 1`
/// is OMP followed by slicing.
pub fn sliced_parallel_greedy(
    h: &CMatrix,
    y: &CVector,
    constellation: &Constellation,
    cfg: &SolverConfig,
) -> Result<RecoveryResult> {
    check_dims(h, y)?;
    cfg.validate()?;
    let k = cfg
        .sparsity_k
        .ok_or_else(|| invalid("sliced greedy requires sparsity_k"))?;
    let width = cfg.candidate_width;
    let n = h.ncols();
    let norms = column_norms(h);

    let mut beam = vec![Candidate {
        basis: OrthoBasis::default(),
        ls_residual: y.clone(),
        sorted: Vec::new(),
        sliced: Vec::new(),
        sliced_residual: y.norm(),
    }];
    let mut trace = vec![y.norm()];

    for _ in 0..k.min(n) {
        let mut seen: HashSet<Vec<usize>> = HashSet::new();
        let mut children: Vec<Candidate> = Vec::new();
        for parent in &beam {
            let scores = correlations(h, &norms, &parent.ls_residual);
            let mut order: Vec<usize> = (0..n)
                .filter(|&j| norms[j] > 0.0 && !parent.basis.contains(j))
                .collect();
            order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
            let mut taken = 0;
            for j in order {
                if taken == width {
                    break;
                }
                let mut sorted = parent.sorted.clone();
                let pos = sorted.partition_point(|&v| v < j);
                sorted.insert(pos, j);
                if seen.contains(&sorted) {
                    continue;
                }
                let mut basis = parent.basis.clone();
                if basis.try_push(j, &h.column(j).into_owned()).is_none() {
                    continue;
                }
                taken += 1;
                seen.insert(sorted.clone());
                let mut ls_residual = parent.ls_residual.clone();
                basis.deflate_last(&mut ls_residual);
                let coef = basis.coefficients(y, basis.len());
                let sliced: Vec<C64> = coef.iter().map(|&c| slice_entry(c, constellation)).collect();
                let mut fit = y.clone();
                for (&col, &v) in basis.columns().iter().zip(&sliced) {
                    fit.axpy(-v, &h.column(col), C64::new(1.0, 0.0));
                }
                children.push(Candidate {
                    basis,
                    ls_residual,
                    sorted,
                    sliced,
                    sliced_residual: fit.norm(),
                });
            }
        }
        if children.is_empty() {
            break;
        }
        children.sort_by(|a, b| {
            let (ra, la) = a.rank_key();
            let (rb, lb) = b.rank_key();
            ra.total_cmp(&rb).then(la.total_cmp(&lb)).then(a.sorted.cmp(&b.sorted))
        });
        children.truncate(width);
        trace.push(children[0].sliced_residual);
        beam = children;
    }

    let best = &beam[0];
    let estimate = scatter(n, best.basis.columns(), &best.sliced);
    Ok(RecoveryResult {
        estimate,
        support: best.sorted.clone(),
        iterations: best.basis.len(),
        residual_trace: trace,
        converged: best.basis.len() == k.min(n),
        diverged: false,
        objective_trace: Vec::new(),
    })
}
