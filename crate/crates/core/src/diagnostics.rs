//! Sensing-matrix quality measures and uniqueness certificates.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use itertools::Itertools;

use crate::error::{invalid, Error, Result};
use crate::linalg::{column_norms, normalize_columns, select_columns, CMatrix, RANK_TOL};
use crate::solvers::l0::{binomial, ENUMERATION_GUARD};

/// Largest normalized inner product between two distinct columns.
pub fn mutual_coherence(h: &CMatrix) -> Result<f64> {
    let n = h.ncols();
    if n < 2 {
        return Err(invalid("mutual coherence needs at least two columns"));
    }
    let norms = column_norms(h);
    if let Some(j) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::DegenerateMatrix(format!("column {j} is zero")));
    }
    let gram = h.ad_mul(h);
    let mut mu = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            mu = mu.max(gram[(i, j)].norm() / (norms[i] * norms[j]));
        }
    }
    Ok(mu.min(1.0))
}

/// Welch lower bound `√((n − m) / (m (n − 1)))` on the coherence of a
/// full-rank `m × n` matrix with `n ≥ m`.
pub fn welch_lower_bound(m: usize, n: usize) -> Result<f64> {
    if m == 0 || n < 2 {
        return Err(invalid("welch bound needs m >= 1 and n >= 2"));
    }
    if n <= m {
        return Ok(0.0);
    }
    Ok(((n - m) as f64 / (m as f64 * (n - 1) as f64)).sqrt())
}

/// Outcome of a brute-force spark search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spark {
    Value(usize),
    /// No dependent subset up to the budget (or the enumeration guard).
    ExceedsBudget,
}

impl fmt::Display for Spark {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Spark::Value(v) => write!(f, "{v}"),
            Spark::ExceedsBudget => f.write_str("exceeds-budget"),
        }
    }
}

fn is_dependent(h: &CMatrix, cols: &[usize], tol: f64) -> bool {
    let sub = select_columns(h, cols);
    if cols.len() > sub.nrows() {
        return true;
    }
    let sv = sub.singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    max == 0.0 || min <= tol * max
}

/// Smallest number of linearly dependent columns, with the default rank
/// tolerance.
pub fn spark_bruteforce(h: &CMatrix, budget: usize) -> Result<Spark> {
    spark_bruteforce_with_tol(h, budget, RANK_TOL)
}

/// Subsets of size 1, 2, …, `budget` are examined in turn; a subset is
/// dependent when its smallest singular value is at most `tol` times its
/// largest. Returns `n + 1` when no subset of any size is dependent.
pub fn spark_bruteforce_with_tol(h: &CMatrix, budget: usize, tol: f64) -> Result<Spark> {
    let (m, n) = h.shape();
    if n == 0 {
        return Err(invalid("spark of an empty matrix"));
    }
    if budget > n {
        return Err(invalid(format!("budget {budget} exceeds column count {n}")));
    }
    let mut examined: u128 = 0;
    for size in 1..=budget {
        if size > m {
            // any m + 1 columns of an m-row matrix are dependent
            return Ok(Spark::Value(size));
        }
        examined += binomial(n, size);
        if examined > ENUMERATION_GUARD {
            return Ok(Spark::ExceedsBudget);
        }
        if (0..n).combinations(size).any(|c| is_dependent(h, &c, tol)) {
            return Ok(Spark::Value(size));
        }
    }
    if budget == n {
        Ok(Spark::Value(n + 1))
    } else {
        Ok(Spark::ExceedsBudget)
    }
}

fn subset_delta(h: &CMatrix, cols: &[usize]) -> f64 {
    let sub = select_columns(h, cols);
    let eig = sub.ad_mul(&sub).symmetric_eigenvalues();
    let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
    (hi - 1.0).max(1.0 - lo).max(0.0)
}

/// Restricted isometry constant `δ_k` by enumeration of all `k`-subsets.
///
/// Columns are normalized first unless `normalize` is false.
pub fn rip_constant_bruteforce(h: &CMatrix, k: usize, normalize: bool) -> Result<f64> {
    let n = h.ncols();
    if k == 0 || k > n {
        return Err(invalid(format!("rip order {k} outside 1..={n}")));
    }
    let count = binomial(n, k);
    if count > ENUMERATION_GUARD {
        return Err(Error::BudgetExceeded(format!("{count} subsets of size {k}")));
    }
    let owned;
    let h = if normalize {
        owned = normalize_columns(h);
        &owned
    } else {
        h
    };
    Ok((0..n)
        .combinations(k)
        .map(|c| subset_delta(h, &c))
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniquenessCertificates {
    /// `spark(H) > 2k`; `None` when the spark search hit its budget.
    pub theorem1: Option<bool>,
    /// `k < ½ (1 + 1/μ(H))`.
    pub theorem2: bool,
}

pub fn uniqueness_certificates(h: &CMatrix, k: usize, spark_budget: usize) -> Result<UniquenessCertificates> {
    let mu = mutual_coherence(h)?;
    let theorem1 = match spark_bruteforce(h, spark_budget)? {
        Spark::Value(s) => Some(s > 2 * k),
        Spark::ExceedsBudget => None,
    };
    Ok(UniquenessCertificates {
        theorem1,
        theorem2: coherence_bound_holds(k, mu),
    })
}

fn coherence_bound_holds(k: usize, mu: f64) -> bool {
    mu == 0.0 || (k as f64) < 0.5 * (1.0 + 1.0 / mu)
}

/// Largest `k` certified by the coherence bound, capped at `n`.
fn coherence_unique_k(mu: f64, n: usize) -> usize {
    if mu == 0.0 {
        return n;
    }
    let t = 0.5 * (1.0 + 1.0 / mu);
    ((t.ceil() as usize).saturating_sub(1)).min(n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiagnoseOptions {
    pub spark_budget: usize,
    /// RIP constants are computed for `k = 1..=rip_max_k`.
    pub rip_max_k: usize,
    pub normalize_rip: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        Self {
            spark_budget: usize::MAX,
            rip_max_k: 3,
            normalize_rip: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticsReport {
    pub m: usize,
    pub n: usize,
    pub mu: f64,
    pub welch_bound: f64,
    pub spark: Spark,
    /// Orders whose enumeration exceeded the guard are omitted.
    pub rip_constants: BTreeMap<usize, f64>,
    /// Largest `k` with `2k < spark`, when the spark is known.
    pub unique_k_theorem1: Option<usize>,
    pub unique_k_theorem2: usize,
}

/// Computes every diagnostic the enumeration budgets allow.
pub fn diagnose(h: &CMatrix, opts: &DiagnoseOptions) -> Result<DiagnosticsReport> {
    let (m, n) = h.shape();
    let mu = mutual_coherence(h)?;
    let spark = spark_bruteforce(h, opts.spark_budget.min(n))?;
    let mut rip_constants = BTreeMap::new();
    for k in 1..=opts.rip_max_k.min(n) {
        match rip_constant_bruteforce(h, k, opts.normalize_rip) {
            Ok(d) => {
                rip_constants.insert(k, d);
            }
            Err(Error::BudgetExceeded(_)) => break,
            Err(e) => return Err(e),
        }
    }
    let unique_k_theorem1 = match spark {
        Spark::Value(s) => Some((s - 1) / 2),
        Spark::ExceedsBudget => None,
    };
    Ok(DiagnosticsReport {
        m,
        n,
        mu,
        welch_bound: welch_lower_bound(m, n)?,
        spark,
        rip_constants,
        unique_k_theorem1,
        unique_k_theorem2: coherence_unique_k(mu, n),
    })
}

impl DiagnosticsReport {
    /// One `key=value` pair per line.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "m={}", self.m);
        let _ = writeln!(out, "n={}", self.n);
        let _ = writeln!(out, "mu={:.12}", self.mu);
        let _ = writeln!(out, "welch_bound={:.12}", self.welch_bound);
        let _ = writeln!(out, "spark={}", self.spark);
        for (k, d) in &self.rip_constants {
            let _ = writeln!(out, "rip_delta_{k}={d:.12}");
        }
        match self.unique_k_theorem1 {
            Some(k) => {
                let _ = writeln!(out, "unique_k_theorem1={k}");
            }
            None => out.push_str("unique_k_theorem1=unknown\n"),
        }
        let _ = writeln!(out, "unique_k_theorem2={}", self.unique_k_theorem2);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{real_matrix, unitary_dft};
    use crate::model::make_gaussian_matrix;
    use crate::rng::RngStream;

    #[test]
    fn coherence_examples() {
        assert_eq!(mutual_coherence(&CMatrix::identity(4, 4)).unwrap(), 0.0);
        let s = 0.5f64.sqrt();
        let h = real_matrix(2, 3, &[1.0, 0.0, s, 0.0, 1.0, s]);
        assert!((mutual_coherence(&h).unwrap() - s).abs() < 1e-12);
        let dup = real_matrix(2, 3, &[1.0, 2.0, 2.0, 0.5, 1.0, 1.0]);
        assert!((mutual_coherence(&dup).unwrap() - 1.0).abs() < 1e-12);
        let zero = real_matrix(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(mutual_coherence(&zero), Err(Error::DegenerateMatrix(_))));
    }

    #[test]
    fn welch_examples() {
        assert_eq!(welch_lower_bound(8, 8).unwrap(), 0.0);
        let expect = (48.0f64 / (16.0 * 63.0)).sqrt();
        assert!((welch_lower_bound(16, 64).unwrap() - expect).abs() < 1e-12);
        assert!((welch_lower_bound(16, 64).unwrap() - 0.21822).abs() < 1e-5);
        assert!((welch_lower_bound(100, 10000).unwrap() - 0.1).abs() < 1e-3);
    }

    #[test]
    fn spark_examples() {
        assert_eq!(spark_bruteforce(&CMatrix::identity(5, 5), 5).unwrap(), Spark::Value(6));
        let dup = real_matrix(3, 4, &[1.0, 0.0, 1.0, 2.0, 0.0, 1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0]);
        assert_eq!(spark_bruteforce(&dup, 4).unwrap(), Spark::Value(2));
        let mut rng = RngStream::new(101, 0).rng();
        let h = make_gaussian_matrix(4, 8, 1.0, &mut rng).unwrap();
        assert_eq!(spark_bruteforce(&h, 8).unwrap(), Spark::Value(5));
        assert_eq!(spark_bruteforce(&h, 3).unwrap(), Spark::ExceedsBudget);
    }

    #[test]
    fn rip_examples() {
        let u = unitary_dft(6);
        for k in 1..=3 {
            assert!(rip_constant_bruteforce(&u, k, true).unwrap() < 1e-12);
        }
        let dup = real_matrix(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!((rip_constant_bruteforce(&dup, 2, true).unwrap() - 1.0).abs() < 1e-12);
        let mut rng = RngStream::new(102, 0).rng();
        let h = make_gaussian_matrix(6, 12, 1.0, &mut rng).unwrap();
        let d: Vec<f64> = (1..=3).map(|k| rip_constant_bruteforce(&h, k, true).unwrap()).collect();
        assert!(d[0] < 1e-12 && d[0] <= d[1] && d[1] <= d[2]);
    }

    #[test]
    fn certificates() {
        let mut rng = RngStream::new(103, 0).rng();
        let h = make_gaussian_matrix(4, 8, 1.0, &mut rng).unwrap();
        assert_eq!(uniqueness_certificates(&h, 2, 8).unwrap().theorem1, Some(true));
        assert_eq!(uniqueness_certificates(&h, 2, 2).unwrap().theorem1, None);
        let dup = real_matrix(2, 3, &[1.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(!uniqueness_certificates(&dup, 1, 3).unwrap().theorem2);
        assert!(coherence_bound_holds(2, 0.21822));
        assert!(!coherence_bound_holds(3, 0.21822));
        assert_eq!(coherence_unique_k(0.21822, 64), 2);
        assert_eq!(coherence_unique_k(0.5, 64), 1);
    }

    #[test]
    fn report_text() {
        let r = diagnose(&CMatrix::identity(3, 3), &DiagnoseOptions::default()).unwrap();
        let text = r.to_key_value();
        assert!(text.contains("spark=4\n"));
        assert!(text.contains("mu=0.000000000000\n"));
        assert!(text.contains("unique_k_theorem1=1\n"));
        assert!(text.contains("rip_delta_3="));
    }
}
