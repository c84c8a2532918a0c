//! Encoder-only transformer over token grids, with exact analytic gradients.
//!
//! Tokens enter as the `λ × l` grid produced by the tokenizer. Internally the
//! grid is transposed to `l × λ` so that each row is one token.

mod checkpoint;
pub mod head;
pub mod layer;
mod params;

use ndarray::{Array1, Array2, ArrayView2};
use thiserror::Error;

use crate::tokenizer::{self, TokenizerError};
use crate::wavebook::Wavebook;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use params::{EncoderLayerParams, HeadKind, HeadParams, ModelConfig, ModelParams, TensorClass};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error(transparent)]
    Tokenizer(#[from] TokenizerError),
    #[error("cache does not belong to this forward pass: {0}")]
    CacheMismatch(String),
    #[error("model uses the wavebook tokenizer but no wavebook was supplied")]
    MissingWavebook,
    #[error("checkpoint format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { expected: u32, found: u32 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// How a raw window becomes a token grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenizerKind {
    Wave,
    WindowEmbed { width: usize },
}

impl ModelConfig {
    pub fn tokenizer(&self) -> TokenizerKind {
        match self.window_embed {
            Some(width) => TokenizerKind::WindowEmbed { width },
            None => TokenizerKind::Wave,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum CachedInput {
    Series(Vec<f64>),
    Tokens(Array2<f64>),
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    config: ModelConfig,
    input: CachedInput,
    layers: Vec<layer::LayerCache>,
    head: head::HeadCache,
}

impl ForwardCache {
    pub fn layer(&self, k: usize) -> &layer::LayerCache {
        &self.layers[k]
    }
}

/// Token grid for a raw window: the wavebook projection, or the learnable
/// sliding-window embedding when the model was configured with one.
pub fn tokens_for(
    params: &ModelParams,
    x: &[f64],
    book: Option<&Wavebook>,
) -> Result<Array2<f64>, ModelError> {
    match &params.embed {
        Some(w) => Ok(tokenizer::ablation_window_embed(x, w.view())?.values),
        None => {
            let book = book.ok_or(ModelError::MissingWavebook)?;
            Ok(tokenizer::tokenize_fft(x, book)?.values)
        }
    }
}

fn check_grid(params: &ModelParams, tokens: ArrayView2<f64>) -> Result<(), ModelError> {
    let cfg = &params.config;
    if tokens.dim() != (cfg.lambda, cfg.lookback) {
        return Err(ModelError::Shape(format!(
            "token grid is {:?}, model expects ({}, {})",
            tokens.dim(),
            cfg.lambda,
            cfg.lookback
        )));
    }
    Ok(())
}

fn run(
    params: &ModelParams,
    tokens: ArrayView2<f64>,
    input: CachedInput,
) -> Result<(Array1<f64>, ForwardCache), ModelError> {
    check_grid(params, tokens)?;
    let mut z = (&tokens + &params.pos_encoding).t().as_standard_layout().into_owned();
    let mut layers = Vec::with_capacity(params.layers.len());
    for lp in &params.layers {
        let (next, cache) = layer::layer_forward(z.view(), lp, params.config.n_heads);
        z = next;
        layers.push(cache);
    }
    let (out, head) = head::head_forward(z.view(), &params.head);
    Ok((out, ForwardCache { config: params.config.clone(), input, layers, head }))
}

/// Forward pass on a precomputed `λ × l` token grid.
pub fn forward_tokens(
    params: &ModelParams,
    tokens: ArrayView2<f64>,
) -> Result<(Array1<f64>, ForwardCache), ModelError> {
    run(params, tokens, CachedInput::Tokens(tokens.to_owned()))
}

/// Tokenize, add the positional encoding, run the encoder stack and the head.
pub fn model_forward(
    params: &ModelParams,
    x: &[f64],
    book: Option<&Wavebook>,
) -> Result<(Array1<f64>, ForwardCache), ModelError> {
    if x.len() != params.config.lookback {
        return Err(ModelError::Shape(format!(
            "window length {} differs from configured lookback {}",
            x.len(),
            params.config.lookback
        )));
    }
    let tokens = tokens_for(params, x, book)?;
    run(params, tokens.view(), CachedInput::Series(x.to_vec()))
}

/// Gradients of a scalar loss given `upstream = ∂loss/∂output`.
pub fn backward(
    params: &ModelParams,
    cache: &ForwardCache,
    upstream: &Array1<f64>,
) -> Result<ModelParams, ModelError> {
    let mut grads = params.zeros_like();
    backward_into(params, cache, upstream, &mut grads)?;
    Ok(grads)
}

/// Like [`backward`] but adds the gradients into `grads`.
pub fn backward_into(
    params: &ModelParams,
    cache: &ForwardCache,
    upstream: &Array1<f64>,
    grads: &mut ModelParams,
) -> Result<(), ModelError> {
    if cache.config != params.config {
        return Err(ModelError::CacheMismatch("model configuration differs".into()));
    }
    if !grads.same_shape(params) {
        return Err(ModelError::Shape("gradient buffer does not match the parameters".into()));
    }
    let expected = params.config.head.output_len(params.config.lookback);
    if upstream.len() != expected {
        return Err(ModelError::Shape(format!(
            "upstream gradient has length {}, output has {expected}",
            upstream.len()
        )));
    }
    let l = params.config.lookback;
    let mut dz = head::head_backward(upstream, &params.head, &cache.head, l, &mut grads.head);
    for ((lp, lc), lg) in params.layers.iter().zip(&cache.layers).zip(grads.layers.iter_mut()).rev()
    {
        dz = layer::layer_backward(dz.view(), lp, lc, lg);
    }
    let dgrid = dz.t();
    if let (Some(ge), CachedInput::Series(x)) = (grads.embed.as_mut(), &cache.input) {
        let w = ge.ncols();
        let half = (w - 1) / 2;
        for i in 0..ge.nrows() {
            for t in 0..w {
                let mut acc = 0.0;
                for j in 0..l {
                    let idx = j + t;
                    if idx >= half && idx - half < l {
                        acc += dgrid[[i, j]] * x[idx - half];
                    }
                }
                ge[[i, t]] += acc;
            }
        }
    }
    grads.pos_encoding += &dgrid;
    Ok(())
}

/// [`backward`] after checking that `cache` was produced from `x`.
pub fn model_backward(
    params: &ModelParams,
    x: &[f64],
    cache: &ForwardCache,
    upstream: &Array1<f64>,
) -> Result<ModelParams, ModelError> {
    match &cache.input {
        CachedInput::Series(s) if s.as_slice() == x => backward(params, cache, upstream),
        CachedInput::Series(_) => Err(ModelError::CacheMismatch("input window differs".into())),
        CachedInput::Tokens(_) => {
            Err(ModelError::CacheMismatch("cache was built from a token grid".into()))
        }
    }
}

/// Parameters bundled with the wavebook they tokenize with.
#[derive(Debug, Clone)]
pub struct Model {
    pub params: ModelParams,
    pub book: Option<Wavebook>,
}

impl Model {
    pub fn new(params: ModelParams, book: Option<Wavebook>) -> Result<Self, ModelError> {
        match (&params.embed, &book) {
            (None, None) => return Err(ModelError::MissingWavebook),
            (None, Some(b)) if b.lambda != params.config.lambda => {
                return Err(ModelError::Config(format!(
                    "wavebook size {} differs from model width {}",
                    b.lambda, params.config.lambda
                )))
            }
            _ => {}
        }
        Ok(Model { params, book })
    }

    pub fn tokens(&self, x: &[f64]) -> Result<Array2<f64>, ModelError> {
        tokens_for(&self.params, x, self.book.as_ref())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Array1<f64>, ModelError> {
        Ok(model_forward(&self.params, x, self.book.as_ref())?.0)
    }
}
