//! Compressed sensing for wireless systems.
//!
//! Sparse solvers (OMP, IHT, BPDN, SBL, reweighted ℓ1, exhaustive ℓ0,
//! sliced greedy search, SOMP), sensing-matrix diagnostics, sparsity-order
//! estimation, dictionary learning and measurement models for channel
//! estimation, impulse-noise cancellation, spectrum sensing, activity
//! detection, localization and mmWave beam estimation. The [`experiment`]
//! module runs Monte-Carlo sweeps over all of these and writes CSV curves.

pub mod diagnostics;
pub mod dictionary;
pub mod error;
pub mod experiment;
pub mod linalg;
pub mod matrix_io;
pub mod mmv;
pub mod model;
pub mod rng;
pub mod solvers;
pub mod sparsity;
pub mod wireless;

pub use diagnostics::DiagnosticsReport;
pub use dictionary::{Dictionary, TrainingSet};
pub use error::{Error, Result};
pub use experiment::{CurvePoint, ExperimentConfig, Metric};
pub use linalg::{CMatrix, CVector, C64};
pub use mmv::{MmvProblem, MmvResult};
pub use model::{Constellation, ConstellationKind, NoiseSpec, SparseVector, ValueLaw};
pub use rng::RngStream;
pub use solvers::{RecoveryResult, SolverConfig, SparseSolver};
pub use sparsity::CvSplit;
pub use wireless::MeasurementModel;
