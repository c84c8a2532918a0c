//! Orthogonal-wavelet wavebooks.
//!
//! A scaling filter `h` yields a band-pass filter `g`; the cascade algorithm
//! turns the pair into a sampled mother wavelet, and λ dilations of that
//! wavelet form the wavebook used by the tokenizer.

mod book;
pub mod filter;
mod io;
mod mother;

pub use book::{
    basis_length, build_wavebook, compute_scales, even_round, mother_digest, sample_basis, Wavebook,
};
pub use filter::{build_filter_pair, verify_unitary, FilterPair};
pub use io::{decode_wavebook, encode_wavebook, load_wavebook, save_wavebook, MAGIC, VERSION};
pub use mother::{
    cascade_mother, estimate_center_frequency, grid_step, zero_mean_ratio, MotherWavelet,
    CASCADE_TOL, ZERO_MEAN_TOL,
};

pub(crate) use io::ByteReader;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum WavebookError {
    #[error("scaling filter sums to {sum}, expected √2 within 1e-6")]
    Normalization { sum: f64 },
    #[error("cascade did not converge: relative change {change:e} exceeds 1e-3")]
    Convergence { change: f64 },
    #[error("amplitude sequence is identically zero")]
    Degenerate,
    #[error("wavelet is not zero-mean: |ΣA|/Σ|A| = {ratio:e}")]
    NotAdmissible { ratio: f64 },
    #[error("basis {} with scale {scale} rounds to length {length} (< 2)", index.map(|i| i.to_string()).unwrap_or_else(|| "?".into()))]
    Scale { index: Option<usize>, scale: f64, length: i64 },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("format error: unsupported version, expected {expected}, found {found}")]
    Version { expected: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Named scaling filters accepted by the command line.
pub fn named_filter(name: &str) -> Option<Vec<f64>> {
    match name {
        "haar" => Some(filter::haar()),
        "db2" => Some(filter::db2()),
        _ => None,
    }
}
