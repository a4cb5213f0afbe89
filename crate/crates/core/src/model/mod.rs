//! Problem generation: sensing matrices, sparse signals, noise, modulation
//! alphabets and error metrics.

mod constellation;
mod matrices;
mod metrics;
mod signal;

pub use constellation::{slice, slice_entry, Constellation, ConstellationKind};
pub use matrices::{
    make_bernoulli_matrix, make_complex_gaussian_matrix, make_gaussian_matrix,
    make_partial_dft_matrix, random_partial_dft_matrix,
};
pub use metrics::{nmse, nmse_db, support_metrics, symbol_errors, SupportMetrics};
pub use signal::{
    measure, synthesize_sparse_vector, NoiseKind, NoiseSpec, SparseVector, ValueLaw,
};
