//! Sensing-matrix builders and closed-loop pipelines for wireless scenarios.

use std::fmt;

use crate::error::Result;
use crate::linalg::{ensure_finite, CMatrix, CVector};

mod aud;
mod channel;
mod clustered;
mod impulse;
mod localization;
mod mmwave;
mod mwc;
mod sed;

pub use aud::{aud_pipeline, correlation_threshold_detect, AudCodebook, AudOutcome};
pub use channel::{build_angular_model, build_ofdm_pilot_model, build_toeplitz_pilot_model, OfdmConfig};
pub use clustered::ClusteredChannel;
pub use impulse::{
    impulse_cancel_pipeline, projection_matrix, selection_matrix, ImpulseConfig, ImpulseOutcome,
};
pub use localization::{build_localization_model, localize_targets, observe_rss, RssMap};
pub use mmwave::{build_mmwave_model, lmmse_top_k, steering_vector, MmWaveConfig};
pub use mwc::{build_mwc_model, chip_coefficients_direct, chip_coefficients_fft, MwcConfig};
pub use sed::{correct_detection, lmmse_detect, sparse_error_detection_pipeline, SedOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    ToeplitzPilot,
    OfdmPilot,
    Angular,
    ImpulseNoise,
    Mwc,
    Aud,
    Localization,
    MmWave,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::ToeplitzPilot => "toeplitz-pilot",
            Scenario::OfdmPilot => "ofdm-pilot",
            Scenario::Angular => "angular",
            Scenario::ImpulseNoise => "impulse-noise",
            Scenario::Mwc => "mwc",
            Scenario::Aud => "aud",
            Scenario::Localization => "localization",
            Scenario::MmWave => "mmwave",
        })
    }
}

/// Extra indexing information attached to a model.
#[derive(Debug, Clone, PartialEq)]
pub enum IndexMap {
    None,
    /// Subcarrier index of each observation row.
    Positions(Vec<usize>),
    /// Cell `j` sits at `(j % width, j / width)`.
    Grid { width: usize, height: usize },
    /// Column `i + rx_bins * j` is AoA bin `i`, AoD bin `j`.
    AngularBins { rx_bins: usize, tx_bins: usize },
}

/// A sensing matrix together with the scenario that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementModel {
    pub h: CMatrix,
    pub scenario: Scenario,
    /// Sparsifying basis; the physical vector is `D ŝ`.
    pub dictionary: Option<CMatrix>,
    pub index_map: IndexMap,
}

impl MeasurementModel {
    pub(crate) fn new(h: CMatrix, scenario: Scenario) -> Result<Self> {
        ensure_finite(h.iter(), "sensing matrix")?;
        Ok(Self {
            h,
            scenario,
            dictionary: None,
            index_map: IndexMap::None,
        })
    }

    pub(crate) fn with_dictionary(mut self, d: CMatrix) -> Self {
        self.dictionary = Some(d);
        self
    }

    pub(crate) fn with_index_map(mut self, map: IndexMap) -> Self {
        self.index_map = map;
        self
    }

    pub fn rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn cols(&self) -> usize {
        self.h.ncols()
    }

    /// Maps a sparse coefficient vector back to the physical domain.
    pub fn synthesize(&self, s: &CVector) -> CVector {
        match &self.dictionary {
            Some(d) => d * s,
            None => s.clone(),
        }
    }
}

/// Noise variance that puts `clean` at the given SNR per observation entry.
pub fn noise_variance_for_snr(clean: &CVector, snr_db: f64) -> f64 {
    let power = clean.norm_squared() / clean.len().max(1) as f64;
    power / 10f64.powf(snr_db / 10.0)
}
