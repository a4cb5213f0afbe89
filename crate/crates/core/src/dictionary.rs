//! Dictionary learning by alternating sparse coding and least-squares
//! dictionary updates, plus fixed DFT dictionaries for comparison.

use std::fmt;

use rand::seq::index::sample;
use rand::Rng;
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::linalg::{c64, twiddle, CMatrix, CVector};
use crate::model::SparseVector;
use crate::solvers::greedy::pursue;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DictionaryKind {
    OrthogonalDft,
    OvercompleteDft,
    Learned,
}

impl fmt::Display for DictionaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DictionaryKind::OrthogonalDft => "orthogonal-dft",
            DictionaryKind::OvercompleteDft => "overcomplete-dft",
            DictionaryKind::Learned => "learned",
        })
    }
}

/// `n × M` matrix of unit-norm atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    atoms: CMatrix,
    kind: DictionaryKind,
}

impl Dictionary {
    /// Normalizes every column; zero columns are rejected.
    pub fn new(mut atoms: CMatrix, kind: DictionaryKind) -> Result<Self> {
        if atoms.ncols() == 0 || atoms.nrows() == 0 {
            return Err(invalid("dictionary needs at least one atom"));
        }
        for (j, mut col) in atoms.column_iter_mut().enumerate() {
            let nv = col.norm();
            if !(nv > 0.0 && nv.is_finite()) {
                return Err(invalid(format!("atom {j} is zero or not finite")));
            }
            col.unscale_mut(nv);
        }
        Ok(Self { atoms, kind })
    }

    pub fn atoms(&self) -> &CMatrix {
        &self.atoms
    }

    pub fn kind(&self) -> DictionaryKind {
        self.kind
    }

    pub fn signal_dim(&self) -> usize {
        self.atoms.nrows()
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.ncols()
    }
}

/// Atoms `exp(j2π t l / M) / √n` at `M` uniformly spaced normalized frequencies.
pub fn make_overcomplete_dft(n: usize, atoms: usize) -> Result<Dictionary> {
    if n == 0 || atoms < n {
        return Err(invalid(format!("need atoms >= n >= 1, got n = {n}, atoms = {atoms}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let d = CMatrix::from_fn(n, atoms, |t, l| twiddle((t * l % atoms) as f64 / atoms as f64) * scale);
    let kind = if atoms == n {
        DictionaryKind::OrthogonalDft
    } else {
        DictionaryKind::OvercompleteDft
    };
    Dictionary::new(d, kind)
}

/// The `n`-point unitary DFT basis.
pub fn make_orthogonal_dft(n: usize) -> Result<Dictionary> {
    make_overcomplete_dft(n, n)
}

/// Training signals stored as the columns of an `n × L` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    signals: CMatrix,
}

impl TrainingSet {
    pub fn new(signals: CMatrix) -> Result<Self> {
        if signals.ncols() == 0 || signals.nrows() == 0 {
            return Err(invalid("training set needs at least one nonempty signal"));
        }
        crate::linalg::ensure_finite(signals.iter(), "training signals")?;
        Ok(Self { signals })
    }

    pub fn from_signals(signals: &[CVector]) -> Result<Self> {
        if signals.is_empty() {
            return Err(invalid("training set needs at least one signal"));
        }
        let n = signals[0].len();
        if signals.iter().any(|s| s.len() != n) {
            return Err(invalid("training signals differ in length"));
        }
        Self::new(CMatrix::from_columns(signals))
    }

    pub fn signals(&self) -> &CMatrix {
        &self.signals
    }

    pub fn len(&self) -> usize {
        self.signals.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.signals.ncols() == 0
    }

    pub fn signal_dim(&self) -> usize {
        self.signals.nrows()
    }
}

fn code_dense(d: &CMatrix, x: &CVector, k: usize) -> CVector {
    let run = pursue(d, x, k, 0.0);
    let coef = run.basis.coefficients(x, run.basis.len());
    crate::linalg::scatter(d.ncols(), run.basis.columns(), &coef)
}

/// `k`-sparse code of `x` in `D` by OMP with least-squares coefficients.
pub fn sparse_code(d: &Dictionary, x: &CVector, k: usize) -> Result<SparseVector> {
    if x.len() != d.signal_dim() {
        return Err(invalid("signal length does not match the dictionary"));
    }
    if k > d.atom_count() {
        return Err(invalid(format!("k = {k} exceeds the atom count {}", d.atom_count())));
    }
    Ok(SparseVector::from_dense(&code_dense(d.atoms(), x, k), 0.0))
}

fn code_all(d: &CMatrix, x: &CMatrix, k: usize) -> CMatrix {
    let cols: Vec<CVector> = (0..x.ncols())
        .into_par_iter()
        .map(|i| code_dense(d, &x.column(i).into_owned(), k))
        .collect();
    CMatrix::from_columns(&cols)
}

fn residual_energies(d: &CMatrix, x: &CMatrix, s: &CMatrix) -> Vec<f64> {
    let r = x - d * s;
    r.column_iter().map(|c| c.norm_squared()).collect()
}

/// Mean squared coding residual `Σ ‖x_i − D s_i‖² / L` at sparsity `k`.
pub fn mismatch_error(d: &Dictionary, x: &TrainingSet, k: usize) -> Result<f64> {
    if x.signal_dim() != d.signal_dim() {
        return Err(invalid("signal length does not match the dictionary"));
    }
    if k > d.atom_count() {
        return Err(invalid(format!("k = {k} exceeds the atom count {}", d.atom_count())));
    }
    let s = code_all(d.atoms(), x.signals(), k);
    let e = residual_energies(d.atoms(), x.signals(), &s);
    Ok(e.iter().sum::<f64>() / x.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnReport {
    pub dictionary: Dictionary,
    /// `‖X − DS‖_F²` after initialization and after each round.
    pub fit_trace: Vec<f64>,
}

/// Learns `atoms` unit-norm atoms with per-signal sparsity `k`.
pub fn learn_dictionary<R: Rng + ?Sized>(
    x: &TrainingSet,
    atoms: usize,
    k: usize,
    rounds: usize,
    rng: &mut R,
) -> Result<Dictionary> {
    Ok(learn_dictionary_traced(x, atoms, k, rounds, rng)?.dictionary)
}

/// Alternates OMP coding of every signal with a least-squares (MOD)
/// dictionary update. The dictionary starts from randomly chosen training
/// signals. A signal keeps its previous code when re-coding would fit it
/// worse, so the fit error never increases. Atoms that no signal uses are
/// re-seeded from the worst-fit signal, and each round tries swapping one
/// redundant atom for a direction the dictionary misses (kept only when the
/// fit improves).
pub fn learn_dictionary_traced<R: Rng + ?Sized>(
    x: &TrainingSet,
    atoms: usize,
    k: usize,
    rounds: usize,
    rng: &mut R,
) -> Result<LearnReport> {
    if atoms == 0 || k == 0 || k > atoms {
        return Err(invalid(format!("need 1 <= k <= atoms, got k = {k}, atoms = {atoms}")));
    }
    let init = initial_atoms(x.signals(), atoms, rng);
    refine(x.signals(), init, k, rounds)
}

/// MOD rounds starting from `init` instead of sampled signals, for refining
/// a structured dictionary such as an overcomplete DFT. Every round re-codes
/// all signals by OMP, and refinement stops at the first round that does not
/// lower the fit error.
pub fn refine_dictionary(x: &TrainingSet, init: &Dictionary, k: usize, rounds: usize) -> Result<LearnReport> {
    if x.signal_dim() != init.signal_dim() {
        return Err(invalid("signal length does not match the dictionary"));
    }
    if k == 0 || k > init.atom_count() {
        return Err(invalid(format!("need 1 <= k <= {}, got {k}", init.atom_count())));
    }
    refine_recoded(x.signals(), init.atoms().clone(), k, rounds)
}

/// MOD rounds scored by fresh OMP codes; a round that does not lower the
/// freshly coded fit error is undone and ends the refinement.
fn refine_recoded(xs: &CMatrix, mut d: CMatrix, k: usize, rounds: usize) -> Result<LearnReport> {
    let mut s = code_all(&d, xs, k);
    let mut errs = residual_energies(&d, xs, &s);
    let mut trace = vec![errs.iter().sum::<f64>()];
    for _ in 0..rounds {
        let mut next = d.clone();
        let mut codes = s.clone();
        mod_update(&mut next, &mut codes, xs, &errs);
        let fresh = code_all(&next, xs, k);
        let fresh_errs = residual_energies(&next, xs, &fresh);
        let total: f64 = fresh_errs.iter().sum();
        if !(total < *trace.last().expect("trace starts nonempty")) {
            break;
        }
        d = next;
        s = fresh;
        errs = fresh_errs;
        trace.push(total);
    }
    Ok(LearnReport {
        dictionary: Dictionary::new(d, DictionaryKind::Learned)?,
        fit_trace: trace,
    })
}

fn initial_atoms<R: Rng + ?Sized>(xs: &CMatrix, atoms: usize, rng: &mut R) -> CMatrix {
    let (n, l) = xs.shape();
    let picks: Vec<usize> = if atoms <= l {
        sample(rng, l, atoms).into_vec()
    } else {
        (0..atoms).map(|_| rng.random_range(0..l)).collect()
    };
    let mut d = CMatrix::from_fn(n, atoms, |i, j| xs[(i, picks[j])]);
    for (j, mut col) in d.column_iter_mut().enumerate() {
        let nv = col.norm();
        // zero or repeated picks get a random direction
        if nv == 0.0 || (atoms > l && picks[..j].contains(&picks[j])) {
            for z in col.iter_mut() {
                *z = c64(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            }
            let nv = col.norm();
            col.unscale_mut(nv);
        } else {
            col.unscale_mut(nv);
        }
    }
    d
}

fn refine(xs: &CMatrix, mut d: CMatrix, k: usize, rounds: usize) -> Result<LearnReport> {
    let l = xs.ncols();
    let mut s = code_all(&d, xs, k);
    let mut errs = residual_energies(&d, xs, &s);
    let mut trace = vec![errs.iter().sum::<f64>()];

    for _ in 0..rounds {
        mod_update(&mut d, &mut s, xs, &errs);
        let fresh = code_all(&d, xs, k);
        let old_errs = residual_energies(&d, xs, &s);
        let new_errs = residual_energies(&d, xs, &fresh);
        for i in 0..l {
            if new_errs[i] <= old_errs[i] {
                s.set_column(i, &fresh.column(i));
                errs[i] = new_errs[i];
            } else {
                errs[i] = old_errs[i];
            }
        }
        try_replace_weak_atoms(&mut d, &mut s, &mut errs, xs, k);
        trace.push(errs.iter().sum::<f64>());
    }
    Ok(LearnReport {
        dictionary: Dictionary::new(d, DictionaryKind::Learned)?,
        fit_trace: trace,
    })
}

fn top_eigenvector(m: &CMatrix) -> Option<CVector> {
    let eig = m.clone().symmetric_eigen();
    let top = (0..eig.eigenvalues.len()).max_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))?;
    (eig.eigenvalues[top] > 0.0).then(|| eig.eigenvectors.column(top).into_owned())
}

/// Candidate atoms for directions the dictionary misses: the worst-fit
/// signal, the dominant direction of the worst-fit signals, and the dominant
/// direction of the residuals.
fn missing_directions(d: &CMatrix, s: &CMatrix, errs: &[f64], xs: &CMatrix) -> Vec<CVector> {
    let (l, atoms) = (xs.ncols(), d.ncols());
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| errs[b].total_cmp(&errs[a]).then(a.cmp(&b)));
    let mut out = Vec::new();
    let worst = xs.column(order[0]);
    if worst.norm() > 0.0 {
        out.push(worst.unscale(worst.norm()));
    }
    let group = l.div_ceil(atoms).clamp(1, l);
    let bad = xs.select_columns(&order[..group]);
    out.extend(top_eigenvector(&(&bad * bad.adjoint())));
    let resid = xs - d * s;
    out.extend(top_eigenvector(&(&resid * resid.adjoint())));
    out
}

/// Tries swapping a redundant or weak atom for a direction the dictionary
/// misses. A swap is kept only if re-coding lowers the total fit error.
fn try_replace_weak_atoms(d: &mut CMatrix, s: &mut CMatrix, errs: &mut Vec<f64>, xs: &CMatrix, k: usize) {
    let atoms = d.ncols();
    if atoms < 2 {
        return;
    }
    let usage: Vec<f64> = (0..atoms).map(|j| s.row(j).norm_squared()).collect();
    let gram = d.ad_mul(d);
    let mut pair = (0, 1, -1.0);
    for a in 0..atoms {
        for b in a + 1..atoms {
            let c = gram[(a, b)].norm();
            if c > pair.2 {
                pair = (a, b, c);
            }
        }
    }
    let redundant = if usage[pair.0] <= usage[pair.1] { pair.0 } else { pair.1 };
    let least_used = (0..atoms)
        .min_by(|&a, &b| usage[a].total_cmp(&usage[b]).then(a.cmp(&b)))
        .unwrap_or(0);
    let total: f64 = errs.iter().sum();
    for atom in missing_directions(d, s, errs, xs) {
        let closest = (0..atoms)
            .max_by(|&a, &b| {
                let ca = d.column(a).dotc(&atom).norm();
                let cb = d.column(b).dotc(&atom).norm();
                ca.total_cmp(&cb).then(b.cmp(&a))
            })
            .unwrap_or(0);
        let mut targets = vec![redundant, least_used, closest];
        targets.dedup();
        for j in targets {
            let mut cand = d.clone();
            cand.set_column(j, &atom);
            let mut codes = code_all(&cand, xs, k);
            let mut cand_errs = residual_energies(&cand, xs, &codes);
            // old codes that avoid atom j are still valid
            for i in 0..errs.len() {
                if s[(j, i)].norm() == 0.0 && errs[i] < cand_errs[i] {
                    codes.set_column(i, &s.column(i));
                    cand_errs[i] = errs[i];
                }
            }
            if cand_errs.iter().sum::<f64>() < total {
                *d = cand;
                *s = codes;
                *errs = cand_errs;
                return;
            }
        }
    }
}

/// Least-squares update of the used atoms for fixed codes, then atom
/// renormalization with the codes rescaled so `DS` is unchanged.
fn mod_update(d: &mut CMatrix, s: &mut CMatrix, xs: &CMatrix, errs: &[f64]) {
    let atoms = d.ncols();
    let used: Vec<usize> = (0..atoms).filter(|&j| s.row(j).iter().any(|z| z.norm() > 0.0)).collect();
    if !used.is_empty() {
        let s_u = s.select_rows(&used);
        let gram = &s_u * s_u.adjoint();
        let rhs = xs * s_u.adjoint();
        // D_u = X S_uᴴ (S_u S_uᴴ)⁻¹
        let d_u = match gram.clone().cholesky() {
            Some(c) => c.solve(&rhs.adjoint()).adjoint(),
            None => match s_u.adjoint().svd(true, true).pseudo_inverse(1e-12) {
                Ok(pinv) => (pinv * xs.adjoint()).adjoint(),
                Err(_) => d.select_columns(&used),
            },
        };
        for (c, &j) in used.iter().enumerate() {
            d.set_column(j, &d_u.column(c));
        }
    }
    let mut worst: Vec<usize> = (0..errs.len()).collect();
    worst.sort_by(|&a, &b| errs[b].total_cmp(&errs[a]).then(a.cmp(&b)));
    let mut next_seed = worst.into_iter().filter(|&i| xs.column(i).norm() > 0.0);
    for j in 0..atoms {
        let nv = d.column(j).norm();
        let dead = !used.contains(&j) || !(nv > 0.0 && nv.is_finite());
        if dead {
            s.row_mut(j).fill(c64(0.0, 0.0));
            if let Some(i) = next_seed.next() {
                let x = xs.column(i);
                d.set_column(j, &x.unscale(x.norm()));
                continue;
            }
            // all signals are zero: keep a valid unit atom
            d.column_mut(j).fill(c64(0.0, 0.0));
            let rows = d.nrows();
            d[(j % rows, j)] = c64(1.0, 0.0);
        } else {
            d.column_mut(j).unscale_mut(nv);
            s.row_mut(j).scale_mut(nv);
        }
    }
}
