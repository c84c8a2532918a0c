//! Wavelet-quantized time series modelling.
//!
//! A fixed set of orthogonal-wavelet basis functions (the *wavebook*) projects
//! any univariate window of length `l` into a `λ × l` token grid. A compact
//! encoder-only transformer consumes the grid and a task head produces
//! forecasts, imputations, or class logits. Everything, including the
//! backward pass, is implemented here on plain `ndarray` matrices.

pub mod data;
pub mod model;
pub mod tokenizer;
pub mod training;
pub mod wavebook;

pub use model::{HeadKind, Model, ModelConfig, ModelParams, TokenizerKind};
pub use tokenizer::{tokenize, tokenize_fft, TokenGrid};
pub use wavebook::{FilterPair, MotherWavelet, Wavebook};
