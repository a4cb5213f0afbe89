use rand::Rng;
use rustfft::FftPlanner;

use super::{MeasurementModel, Scenario};
use crate::error::{invalid, Result};
use crate::linalg::{twiddle, CMatrix, C64};

/// Modulated wideband converter at frequency-bin resolution.
///
/// Branch `i` mixes the input with a periodic ±1 chip sequence whose period
/// spans the `2L+1` bins; its Fourier coefficients `c_{−L}..c_L` form row `i`
/// of the sensing matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MwcConfig {
    half_bins: usize,
    chips: Vec<Vec<f64>>,
    coefficients: CMatrix,
}

impl MwcConfig {
    pub fn new(half_bins: usize, chips: Vec<Vec<f64>>) -> Result<Self> {
        let period = 2 * half_bins + 1;
        if chips.is_empty() {
            return Err(invalid("at least one branch is required"));
        }
        for (i, c) in chips.iter().enumerate() {
            if c.len() != period {
                return Err(invalid(format!(
                    "branch {i} has {} chips, expected {period}",
                    c.len()
                )));
            }
            if c.iter().any(|v| !v.is_finite()) {
                return Err(invalid(format!("branch {i} has non-finite chips")));
            }
        }
        let mut coefficients = CMatrix::zeros(chips.len(), period);
        for (i, c) in chips.iter().enumerate() {
            for (j, v) in chip_coefficients_fft(c, half_bins).into_iter().enumerate() {
                coefficients[(i, j)] = v;
            }
        }
        Ok(Self {
            half_bins,
            chips,
            coefficients,
        })
    }

    /// `branches` i.i.d. ±1 sequences.
    pub fn random<R: Rng + ?Sized>(branches: usize, half_bins: usize, rng: &mut R) -> Result<Self> {
        let chips = (0..branches)
            .map(|_| {
                (0..2 * half_bins + 1)
                    .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
                    .collect()
            })
            .collect();
        Self::new(half_bins, chips)
    }

    pub fn branches(&self) -> usize {
        self.chips.len()
    }

    pub fn bins(&self) -> usize {
        2 * self.half_bins + 1
    }

    pub fn half_bins(&self) -> usize {
        self.half_bins
    }

    pub fn chips(&self) -> &[Vec<f64>] {
        &self.chips
    }

    /// Row `i`, column `k + L` holds `c_k` of branch `i`.
    pub fn coefficients(&self) -> &CMatrix {
        &self.coefficients
    }
}

/// `c_k = (1/P) Σ_t a_t e^{−2πi k t / P}` for `k = −L..=L`, summed directly.
pub fn chip_coefficients_direct(chips: &[f64], half_bins: usize) -> Vec<C64> {
    let p = chips.len() as f64;
    let l = half_bins as i64;
    (-l..=l)
        .map(|k| {
            chips
                .iter()
                .enumerate()
                .map(|(t, &a)| twiddle(-((k * t as i64) as f64) / p) * a)
                .sum::<C64>()
                / p
        })
        .collect()
}

/// Same coefficients from one FFT of the period.
pub fn chip_coefficients_fft(chips: &[f64], half_bins: usize) -> Vec<C64> {
    let p = chips.len();
    let mut buf: Vec<C64> = chips.iter().map(|&a| C64::new(a, 0.0)).collect();
    if p > 0 {
        FftPlanner::<f64>::new().plan_fft_forward(p).process(&mut buf);
    }
    let l = half_bins as i64;
    (-l..=l)
        .map(|k| buf[k.rem_euclid(p.max(1) as i64) as usize] / p as f64)
        .collect()
}

pub fn build_mwc_model(cfg: &MwcConfig) -> Result<MeasurementModel> {
    MeasurementModel::new(cfg.coefficients.clone(), Scenario::Mwc)
}
