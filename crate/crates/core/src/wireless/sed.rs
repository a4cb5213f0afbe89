use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{check_dims, solve_hpd, CMatrix, CVector, C64};
use crate::model::{slice, symbol_errors, Constellation, NoiseSpec};
use crate::solvers::{SolverConfig, SparseSolver};

#[derive(Debug, Clone, PartialEq)]
pub struct SedOutcome {
    pub symbols: usize,
    pub errors_baseline: usize,
    pub errors_sed: usize,
    pub baseline: CVector,
    pub corrected: CVector,
}

impl SedOutcome {
    pub fn ser_baseline(&self) -> f64 {
        self.errors_baseline as f64 / self.symbols as f64
    }

    pub fn ser_sed(&self) -> f64 {
        self.errors_sed as f64 / self.symbols as f64
    }
}

/// Sliced linear MMSE detection.
pub fn lmmse_detect(
    h: &CMatrix,
    y: &CVector,
    constellation: &Constellation,
    noise_variance: f64,
) -> Result<CVector> {
    let n = h.ncols();
    let reg = noise_variance / constellation.average_energy();
    let gram = h.ad_mul(h) + CMatrix::identity(n, n) * C64::new(reg.max(1e-12), 0.0);
    let rhs = h.ad_mul(y);
    let est = solve_hpd(&gram, &CMatrix::from_column_slice(n, 1, rhs.as_slice()))?;
    Ok(slice(&est.column(0).into_owned(), constellation))
}

/// Re-slices `ŝ + ê` where `ê` is a sparse fit of the detection residual
/// `y − H ŝ = H e + v`.
pub fn correct_detection(
    h: &CMatrix,
    y: &CVector,
    detected: &CVector,
    constellation: &Constellation,
    solver: SparseSolver,
    solver_cfg: &SolverConfig,
) -> Result<CVector> {
    let residual = y - h * detected;
    let e = solver.solve(h, &residual, solver_cfg)?.estimate;
    Ok(slice(&(detected + e), constellation))
}

/// Sends `s_true` through `y = H s + v`, detects with sliced LMMSE, then
/// corrects the decision by sparse error recovery.
pub fn sparse_error_detection_pipeline<R: Rng + ?Sized>(
    h: &CMatrix,
    s_true: &CVector,
    constellation: &Constellation,
    noise_variance: f64,
    solver: SparseSolver,
    solver_cfg: &SolverConfig,
    rng: &mut R,
) -> Result<SedOutcome> {
    if h.ncols() != s_true.len() {
        return Err(invalid(format!(
            "matrix has {} columns, symbol vector {}",
            h.ncols(),
            s_true.len()
        )));
    }
    if h.nrows() < h.ncols() {
        return Err(invalid("error detection needs a square or tall channel"));
    }
    let y = h * s_true + NoiseSpec::complex(noise_variance).sample(h.nrows(), rng);
    check_dims(h, &y)?;
    let baseline = lmmse_detect(h, &y, constellation, noise_variance)?;
    let corrected = correct_detection(h, &y, &baseline, constellation, solver, solver_cfg)?;
    Ok(SedOutcome {
        symbols: s_true.len(),
        errors_baseline: symbol_errors(&baseline, s_true),
        errors_sed: symbol_errors(&corrected, s_true),
        baseline,
        corrected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_complex_gaussian_matrix, ValueLaw};
    use crate::rng::RngStream;

    fn qpsk_vector<R: Rng>(n: usize, rng: &mut R) -> CVector {
        let law = ValueLaw::Constellation(Constellation::qpsk());
        CVector::from_fn(n, |_, _| law.draw(rng))
    }

    #[test]
    fn noiseless_detection_is_untouched() {
        let mut rng = RngStream::new(55, 0).rng();
        let h = make_complex_gaussian_matrix(16, 16, 1.0, &mut rng).unwrap();
        let s = qpsk_vector(16, &mut rng);
        let out = sparse_error_detection_pipeline(
            &h,
            &s,
            &Constellation::qpsk(),
            0.0,
            SparseSolver::Omp,
            &SolverConfig {
                residual_tol: 1e-9,
                ..SolverConfig::default()
            },
            &mut rng,
        )
        .unwrap();
        assert_eq!(out.errors_baseline, 0);
        assert_eq!(out.corrected, out.baseline);
    }

    #[test]
    fn planted_flips_are_corrected() {
        let c = Constellation::qpsk();
        for t in 0..20 {
            let mut rng = RngStream::for_trial(56, 0, t).rng();
            let h = make_complex_gaussian_matrix(16, 16, 1.0, &mut rng).unwrap();
            let s = qpsk_vector(16, &mut rng);
            let mut wrong = s.clone();
            wrong[3] = -wrong[3];
            wrong[11] = C64::new(wrong[11].im, -wrong[11].re);
            let y = &h * &s;
            let fixed =
                correct_detection(&h, &y, &wrong, &c, SparseSolver::Omp, &SolverConfig::with_k(2))
                    .unwrap();
            assert_eq!(fixed, s);
        }
    }

    #[test]
    fn correction_does_not_hurt_on_average() {
        let c = Constellation::qpsk();
        let (mut base, mut sed) = (0, 0);
        for t in 0..400 {
            let mut rng = RngStream::for_trial(57, 0, t).rng();
            let h = make_complex_gaussian_matrix(16, 16, 1.0 / 16.0, &mut rng).unwrap();
            let s = qpsk_vector(16, &mut rng);
            let sigma2 = 10f64.powf(-1.2);
            let cfg = SolverConfig {
                residual_tol: (16.0 * sigma2).sqrt(),
                ..SolverConfig::default()
            };
            let out =
                sparse_error_detection_pipeline(&h, &s, &c, sigma2, SparseSolver::Omp, &cfg, &mut rng)
                    .unwrap();
            base += out.errors_baseline;
            sed += out.errors_sed;
        }
        assert!(sed <= base, "sed {sed} baseline {base}");
    }
}
