use rand::Rng;

use super::{MeasurementModel, Scenario};
use crate::error::{invalid, Result};
use crate::linalg::{lstsq, select_columns, CMatrix, CVector, C64};
use crate::model::{make_complex_gaussian_matrix, Constellation, NoiseSpec, ValueLaw};
use crate::solvers::{SolverConfig, SparseSolver};

/// Signature codebook for activity detection; column `i` is device `i`'s
/// length-`m` signature and `symbols[i]` its known pilot symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct AudCodebook {
    signatures: CMatrix,
    symbols: Vec<C64>,
}

impl AudCodebook {
    pub fn new(signatures: CMatrix, symbols: Vec<C64>) -> Result<Self> {
        if symbols.len() != signatures.ncols() {
            return Err(invalid(format!(
                "{} symbols for {} devices",
                symbols.len(),
                signatures.ncols()
            )));
        }
        if signatures.column_iter().any(|c| c.norm() == 0.0) {
            return Err(invalid("every signature must be nonzero"));
        }
        if symbols.iter().any(|p| p.norm() == 0.0) {
            return Err(invalid("pilot symbols must be nonzero"));
        }
        Ok(Self {
            signatures,
            symbols,
        })
    }

    /// Gaussian signatures with unit expected norm and QPSK pilot symbols.
    pub fn gaussian<R: Rng + ?Sized>(m: usize, devices: usize, rng: &mut R) -> Result<Self> {
        let q = make_complex_gaussian_matrix(m, devices, 1.0 / m as f64, rng)?;
        let law = ValueLaw::Constellation(Constellation::qpsk());
        let p = (0..devices).map(|_| law.draw(rng)).collect();
        Self::new(q, p)
    }

    pub fn signature_len(&self) -> usize {
        self.signatures.nrows()
    }

    pub fn devices(&self) -> usize {
        self.signatures.ncols()
    }

    pub fn signatures(&self) -> &CMatrix {
        &self.signatures
    }

    pub fn symbols(&self) -> &[C64] {
        &self.symbols
    }

    pub fn model(&self) -> Result<MeasurementModel> {
        MeasurementModel::new(self.signatures.clone(), Scenario::Aud)
    }

    /// `T = [p_i q_i]` over `devices`.
    fn weighted_columns(&self, devices: &[usize]) -> CMatrix {
        let mut t = select_columns(&self.signatures, devices);
        for (c, &i) in devices.iter().enumerate() {
            let p = self.symbols[i];
            for v in t.column_mut(c).iter_mut() {
                *v *= p;
            }
        }
        t
    }

    fn normalized_correlations(&self, y: &CVector) -> Vec<f64> {
        self.signatures
            .column_iter()
            .map(|q| q.dotc(y).norm() / q.norm())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AudOutcome {
    /// Sorted detected devices.
    pub detected: Vec<usize>,
    /// Channel estimate per device, zero outside `detected`.
    pub channel_est: CVector,
    /// Received signal, for residual checks.
    pub observation: CVector,
    /// The solver returned `≥ m` devices and the top `m − 1` correlations
    /// were used instead.
    pub fallback: bool,
}

/// One uplink slot: active devices transmit `h_i p_i q_i`, the receiver
/// detects the active set with `solver` and re-fits the channels by least
/// squares on the detected signatures.
pub fn aud_pipeline<R: Rng + ?Sized>(
    codebook: &AudCodebook,
    active: &[usize],
    channels: &[C64],
    noise_variance: f64,
    solver: SparseSolver,
    solver_cfg: &SolverConfig,
    rng: &mut R,
) -> Result<AudOutcome> {
    let m = codebook.signature_len();
    let n = codebook.devices();
    if active.len() != channels.len() {
        return Err(invalid("one channel gain per active device is required"));
    }
    if active.len() >= m {
        return Err(invalid(format!(
            "{} active devices need signatures longer than {m}",
            active.len()
        )));
    }
    if let Some(&bad) = active.iter().find(|&&i| i >= n) {
        return Err(invalid(format!("device {bad} out of range 0..{n}")));
    }
    let mut y = NoiseSpec::complex(noise_variance).sample(m, rng);
    for (&i, &h) in active.iter().zip(channels) {
        y += codebook.signatures.column(i) * (h * codebook.symbols[i]);
    }
    let r = solver.solve(&codebook.signatures, &y, solver_cfg)?;
    let mut detected = r.support;
    let fallback = detected.len() >= m;
    if fallback {
        detected = top_correlations(codebook, &y, m - 1);
    }
    let mut channel_est = CVector::zeros(n);
    if !detected.is_empty() {
        let t = codebook.weighted_columns(&detected);
        match lstsq(&t, &y) {
            Ok(h) => {
                for (&i, v) in detected.iter().zip(h.iter()) {
                    channel_est[i] = *v;
                }
            }
            Err(_) => {
                let h = t.svd(true, true).pseudo_inverse(1e-12).map_err(invalid)? * &y;
                for (&i, v) in detected.iter().zip(h.iter()) {
                    channel_est[i] = *v;
                }
            }
        }
    }
    Ok(AudOutcome {
        detected,
        channel_est,
        observation: y,
        fallback,
    })
}

fn top_correlations(codebook: &AudCodebook, y: &CVector, count: usize) -> Vec<usize> {
    let corr = codebook.normalized_correlations(y);
    let mut order: Vec<usize> = (0..corr.len()).collect();
    order.sort_by(|&a, &b| corr[b].total_cmp(&corr[a]).then(a.cmp(&b)));
    order.truncate(count);
    order.sort_unstable();
    order
}

/// Baseline detector: devices whose normalized correlation `|q_iᴴ y| / ‖q_i‖`
/// exceeds `threshold` times the largest one.
pub fn correlation_threshold_detect(codebook: &AudCodebook, y: &CVector, threshold: f64) -> Vec<usize> {
    let corr = codebook.normalized_correlations(y);
    let peak = corr.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return Vec::new();
    }
    corr.iter()
        .enumerate()
        .filter(|(_, &c)| c >= threshold * peak)
        .map(|(i, _)| i)
        .collect()
}
