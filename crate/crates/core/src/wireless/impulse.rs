use rand::Rng;

use crate::error::{invalid, Result};
use crate::linalg::{dft_matrix, select_entries, select_rows, unitary_dft, CMatrix, CVector, C64};
use crate::model::{slice, symbol_errors, Constellation, NoiseSpec, ValueLaw};
use crate::solvers::{SolverConfig, SparseSolver};

/// OFDM link corrupted by a time-domain impulse burst.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseConfig {
    pub fft_size: usize,
    /// Subcarriers carrying data; the rest are left empty and observe the
    /// impulse only.
    pub data_positions: Vec<usize>,
    pub channel_taps: usize,
    /// Number of consecutive corrupted samples.
    pub impulse_span: usize,
    /// Burst sample power relative to the average received sample power.
    pub impulse_power_db: f64,
    pub snr_db: f64,
    pub constellation: Constellation,
}

impl ImpulseConfig {
    /// `q` data subcarriers spread evenly over an `n`-point symbol.
    pub fn evenly_spread(n: usize, q: usize) -> Vec<usize> {
        (0..q).map(|i| i * n / q.max(1)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.fft_size;
        if n == 0 {
            return Err(invalid("fft_size must be positive"));
        }
        let mut seen = vec![false; n];
        for &p in &self.data_positions {
            if p >= n || std::mem::replace(&mut seen[p], true) {
                return Err(invalid(format!("bad or repeated data subcarrier {p}")));
            }
        }
        if self.data_positions.is_empty() || self.data_positions.len() >= n {
            return Err(invalid(format!(
                "need 1..{n} data subcarriers, got {}",
                self.data_positions.len()
            )));
        }
        if self.channel_taps == 0 || self.channel_taps > n {
            return Err(invalid(format!("channel_taps must be in 1..={n}")));
        }
        if self.impulse_span > n {
            return Err(invalid(format!("impulse span {} exceeds {n}", self.impulse_span)));
        }
        if !self.impulse_power_db.is_finite() || !self.snr_db.is_finite() {
            return Err(invalid("power ratios must be finite"));
        }
        Ok(())
    }

    fn free_positions(&self) -> Vec<usize> {
        let mut used = vec![false; self.fft_size];
        for &p in &self.data_positions {
            used[p] = true;
        }
        (0..self.fft_size).filter(|&k| !used[k]).collect()
    }
}

/// `n × q` selection `Π` placing data symbols on their subcarriers.
pub fn selection_matrix(n: usize, positions: &[usize]) -> CMatrix {
    let mut pi = CMatrix::zeros(n, positions.len());
    for (j, &p) in positions.iter().enumerate() {
        pi[(p, j)] = C64::new(1.0, 0.0);
    }
    pi
}

/// Rows of the identity at the subcarriers not in `positions`.
pub fn projection_matrix(n: usize, positions: &[usize]) -> CMatrix {
    let free: Vec<usize> = (0..n).filter(|k| !positions.contains(k)).collect();
    select_rows(&CMatrix::identity(n, n), &free)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseOutcome {
    pub symbols: usize,
    pub errors_with: usize,
    pub errors_without: usize,
    /// The solver failed and the uncancelled decision was used for both.
    pub solver_failed: bool,
    pub impulse: CVector,
    pub impulse_estimate: CVector,
}

impl ImpulseOutcome {
    pub fn ser_with(&self) -> f64 {
        self.errors_with as f64 / self.symbols as f64
    }

    pub fn ser_without(&self) -> f64 {
        self.errors_without as f64 / self.symbols as f64
    }
}

fn circular_convolve(h: &[C64], x: &CVector) -> CVector {
    let n = x.len();
    CVector::from_fn(n, |t, _| {
        h.iter()
            .enumerate()
            .map(|(i, hi)| hi * x[(t + n - i % n) % n])
            .sum()
    })
}

/// One OFDM symbol through channel, impulse burst and noise, detected with and
/// without impulse cancellation.
///
/// The impulse is estimated from the empty subcarriers, `y″ = P F y = P F e + v`,
/// subtracted in the frequency domain and the data subcarriers are then
/// equalized by zero forcing and sliced.
pub fn impulse_cancel_pipeline<R: Rng + ?Sized>(
    cfg: &ImpulseConfig,
    solver: SparseSolver,
    solver_cfg: &SolverConfig,
    rng: &mut R,
) -> Result<ImpulseOutcome> {
    cfg.validate()?;
    let n = cfg.fft_size;
    let q = cfg.data_positions.len();
    let law = ValueLaw::Constellation(cfg.constellation.clone());
    let s = CVector::from_fn(q, |_, _| law.draw(rng));
    let f = unitary_dft(n);
    let x = f.ad_mul(&(selection_matrix(n, &cfg.data_positions) * &s));

    let taps = NoiseSpec::complex(1.0 / cfg.channel_taps as f64).sample(cfg.channel_taps, rng);
    let clean = circular_convolve(taps.as_slice(), &x);
    let power = clean.norm_squared() / n as f64;

    let mut impulse = CVector::zeros(n);
    if cfg.impulse_span > 0 {
        let start = rng.random_range(0..=n - cfg.impulse_span);
        let amp = NoiseSpec::complex(power * 10f64.powf(cfg.impulse_power_db / 10.0))
            .sample(cfg.impulse_span, rng);
        impulse.rows_mut(start, cfg.impulse_span).copy_from(&amp);
    }
    let noise = NoiseSpec::complex(power / 10f64.powf(cfg.snr_db / 10.0)).sample(n, rng);
    let y = &clean + &impulse + noise;

    let y_freq = &f * &y;
    let free = cfg.free_positions();
    let pf = select_rows(&f, &free);
    let y_free = select_entries(&y_freq, &free);

    let gains = dft_matrix(n).columns(0, cfg.channel_taps) * &taps;
    let detect = |yf: &CVector| {
        let eq = CVector::from_fn(q, |j, _| {
            let k = cfg.data_positions[j];
            yf[k] / gains[k]
        });
        slice(&eq, &cfg.constellation)
    };
    let uncancelled = detect(&y_freq);
    let errors_without = symbol_errors(&uncancelled, &s);

    let (errors_with, solver_failed, estimate) = match solver.solve(&pf, &y_free, solver_cfg) {
        Ok(r) => {
            let cleaned = &y_freq - &f * &r.estimate;
            (symbol_errors(&detect(&cleaned), &s), false, r.estimate)
        }
        Err(_) => (errors_without, true, CVector::zeros(n)),
    };
    Ok(ImpulseOutcome {
        symbols: q,
        errors_with,
        errors_without,
        solver_failed,
        impulse,
        impulse_estimate: estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;
    use crate::rng::RngStream;

    #[test]
    fn small_selection_and_projection() {
        let used = [0, 2];
        let pi = selection_matrix(4, &used);
        let p = projection_matrix(4, &used);
        let one = c64(1.0, 0.0);
        let zero = c64(0.0, 0.0);
        assert_eq!(
            pi,
            CMatrix::from_row_slice(4, 2, &[one, zero, zero, zero, zero, one, zero, zero])
        );
        assert_eq!(
            p,
            CMatrix::from_row_slice(2, 4, &[zero, one, zero, zero, zero, zero, zero, one])
        );
    }

    #[test]
    fn projection_annihilates_data() {
        let mut rng = RngStream::new(41, 0).rng();
        for (n, q) in [(4, 2), (16, 5), (64, 12)] {
            let pos = ImpulseConfig::evenly_spread(n, q);
            let lambda = CMatrix::from_diagonal(&NoiseSpec::complex(1.0).sample(n, &mut rng));
            let s = NoiseSpec::complex(1.0).sample(q, &mut rng);
            let out = projection_matrix(n, &pos) * lambda * selection_matrix(n, &pos) * s;
            assert_eq!(out.norm(), 0.0);
        }
    }

    #[test]
    fn circulant_channel_is_diagonal_in_frequency() {
        let mut rng = RngStream::new(42, 0).rng();
        let n = 16;
        let h = NoiseSpec::complex(1.0).sample(4, &mut rng);
        let x = NoiseSpec::complex(1.0).sample(n, &mut rng);
        let f = unitary_dft(n);
        let lhs = &f * circular_convolve(h.as_slice(), &x);
        let gains = dft_matrix(n).columns(0, 4) * &h;
        let rhs = (&f * &x).component_mul(&gains);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    fn config(impulse_span: usize, snr_db: f64) -> ImpulseConfig {
        ImpulseConfig {
            fft_size: 64,
            data_positions: ImpulseConfig::evenly_spread(64, 12),
            channel_taps: 4,
            impulse_span,
            impulse_power_db: 20.0,
            snr_db,
            constellation: Constellation::qpsk(),
        }
    }

    #[test]
    fn no_impulse_no_noise_changes_nothing() {
        let mut rng = RngStream::new(43, 0).rng();
        let cfg = config(0, 300.0);
        let out =
            impulse_cancel_pipeline(&cfg, SparseSolver::Omp, &SolverConfig::with_k(2), &mut rng)
                .unwrap();
        assert!(out.impulse_estimate.norm() < 1e-9);
        assert_eq!(out.errors_with, out.errors_without);
    }

    #[test]
    fn cancellation_helps() {
        let cfg = config(2, 20.0);
        let (mut with, mut without) = (0, 0);
        for t in 0..200 {
            let mut rng = RngStream::for_trial(44, 0, t).rng();
            let out =
                impulse_cancel_pipeline(&cfg, SparseSolver::Omp, &SolverConfig::with_k(2), &mut rng)
                    .unwrap();
            with += out.errors_with;
            without += out.errors_without;
        }
        assert!(with < without, "with {with} without {without}");
    }

    #[test]
    fn rejects_full_occupancy() {
        let cfg = ImpulseConfig {
            data_positions: (0..64).collect(),
            ..config(2, 10.0)
        };
        let mut rng = RngStream::new(45, 0).rng();
        assert!(impulse_cancel_pipeline(&cfg, SparseSolver::Omp, &SolverConfig::with_k(2), &mut rng)
            .is_err());
    }
}
