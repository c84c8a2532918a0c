use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};

use super::ModelError;

/// Output layer variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadKind {
    Forecast { horizon: usize },
    Impute,
    Classify { classes: usize },
}

impl HeadKind {
    pub fn name(&self) -> &'static str {
        match self {
            HeadKind::Forecast { .. } => "forecast",
            HeadKind::Impute => "impute",
            HeadKind::Classify { .. } => "classify",
        }
    }

    /// Shape of the head weight for a model of width `lambda` over `l` tokens.
    pub fn weight_shape(&self, lambda: usize, l: usize) -> (usize, usize) {
        match *self {
            HeadKind::Forecast { horizon } => (lambda * l, horizon),
            HeadKind::Impute => (lambda * l, l),
            HeadKind::Classify { classes } => (lambda, classes),
        }
    }

    pub fn output_len(&self, l: usize) -> usize {
        match *self {
            HeadKind::Forecast { horizon } => horizon,
            HeadKind::Impute => l,
            HeadKind::Classify { classes } => classes,
        }
    }
}

/// Architecture hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Token width, equal to the wavebook size λ.
    pub lambda: usize,
    /// Window length `l` (number of tokens).
    pub lookback: usize,
    pub layers: usize,
    pub d_k: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub head: HeadKind,
    /// Width of the sliding-window embedding when the wavebook is replaced by
    /// the learnable baseline tokenizer.
    pub window_embed: Option<usize>,
}

impl ModelConfig {
    pub fn new(lambda: usize, lookback: usize, head: HeadKind) -> Self {
        ModelConfig {
            lambda,
            lookback,
            layers: 2,
            d_k: lambda,
            n_heads: 4,
            d_ff: 4 * lambda,
            head,
            window_embed: None,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::Config(m));
        if self.lambda == 0 || self.lookback == 0 {
            return bad("lambda and lookback must be positive".into());
        }
        if self.layers == 0 {
            return bad("at least one encoder layer is required".into());
        }
        if self.n_heads == 0 || self.d_k == 0 {
            return bad("n_heads and d_k must be positive".into());
        }
        if self.d_k % self.n_heads != 0 || self.lambda % self.n_heads != 0 {
            return bad(format!(
                "lambda ({}) and d_k ({}) must both be divisible by n_heads ({})",
                self.lambda, self.d_k, self.n_heads
            ));
        }
        if self.d_ff < self.lambda {
            return bad(format!("d_ff ({}) must be at least lambda ({})", self.d_ff, self.lambda));
        }
        if let Some(w) = self.window_embed {
            if w % 2 == 0 {
                return bad(format!("window embedding width must be odd, got {w}"));
            }
        }
        match self.head {
            HeadKind::Forecast { horizon: 0 } => bad("forecast horizon must be positive".into()),
            HeadKind::Classify { classes: 0 } => bad("class count must be positive".into()),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderLayerParams {
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    pub ffn_in: Array2<f64>,
    pub ffn_in_bias: Array1<f64>,
    pub ffn_out: Array2<f64>,
    pub ffn_out_bias: Array1<f64>,
    pub norm1_gain: Array1<f64>,
    pub norm1_bias: Array1<f64>,
    pub norm2_gain: Array1<f64>,
    pub norm2_bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadParams {
    pub kind: HeadKind,
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Every trainable tensor of the model. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub layers: Vec<EncoderLayerParams>,
    /// Learnable positional encoding, `λ × l`.
    pub pos_encoding: Array2<f64>,
    pub head: HeadParams,
    /// Baseline tokenizer weights `λ × w`; present only with `window_embed`.
    pub embed: Option<Array2<f64>>,
}

fn glorot(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let a = (6.0 / (rows + cols) as f64).sqrt();
    let dist = Uniform::new_inclusive(-a, a);
    Array2::from_shape_fn((rows, cols), |_| dist.sample(rng))
}

impl EncoderLayerParams {
    fn init(cfg: &ModelConfig, rng: &mut impl Rng) -> Self {
        let (lam, dk, dff) = (cfg.lambda, cfg.d_k, cfg.d_ff);
        EncoderLayerParams {
            wq: glorot(lam, dk, rng),
            wk: glorot(lam, dk, rng),
            wv: glorot(lam, lam, rng),
            ffn_in: glorot(lam, dff, rng),
            ffn_in_bias: Array1::zeros(dff),
            ffn_out: glorot(dff, lam, rng),
            ffn_out_bias: Array1::zeros(lam),
            norm1_gain: Array1::ones(lam),
            norm1_bias: Array1::zeros(lam),
            norm2_gain: Array1::ones(lam),
            norm2_bias: Array1::zeros(lam),
        }
    }

    fn zeros(cfg: &ModelConfig) -> Self {
        let (lam, dk, dff) = (cfg.lambda, cfg.d_k, cfg.d_ff);
        EncoderLayerParams {
            wq: Array2::zeros((lam, dk)),
            wk: Array2::zeros((lam, dk)),
            wv: Array2::zeros((lam, lam)),
            ffn_in: Array2::zeros((lam, dff)),
            ffn_in_bias: Array1::zeros(dff),
            ffn_out: Array2::zeros((dff, lam)),
            ffn_out_bias: Array1::zeros(lam),
            norm1_gain: Array1::zeros(lam),
            norm1_bias: Array1::zeros(lam),
            norm2_gain: Array1::zeros(lam),
            norm2_bias: Array1::zeros(lam),
        }
    }
}

impl HeadParams {
    pub fn init(kind: HeadKind, lambda: usize, l: usize, rng: &mut impl Rng) -> Self {
        let (r, c) = kind.weight_shape(lambda, l);
        HeadParams { kind, weight: glorot(r, c, rng), bias: Array1::zeros(c) }
    }

    pub fn zeros(kind: HeadKind, lambda: usize, l: usize) -> Self {
        let (r, c) = kind.weight_shape(lambda, l);
        HeadParams { kind, weight: Array2::zeros((r, c)), bias: Array1::zeros(c) }
    }
}

/// Named tensor classes, in declaration (serialisation) order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorClass {
    Wq,
    Wk,
    Wv,
    FfnIn,
    FfnInBias,
    FfnOut,
    FfnOutBias,
    Norm1Gain,
    Norm1Bias,
    Norm2Gain,
    Norm2Bias,
    PosEncoding,
    HeadWeight,
    HeadBias,
    Embed,
}

impl ModelParams {
    /// Glorot-uniform matrices, zero biases, unit gains, `N(0, 0.02²)`
    /// positional encoding.
    pub fn init(config: ModelConfig, rng: &mut impl Rng) -> Result<Self, ModelError> {
        config.validate()?;
        let layers = (0..config.layers).map(|_| EncoderLayerParams::init(&config, rng)).collect();
        let normal = Normal::new(0.0, 0.02).expect("valid std");
        let pos_encoding =
            Array2::from_shape_fn((config.lambda, config.lookback), |_| normal.sample(rng));
        let head = HeadParams::init(config.head, config.lambda, config.lookback, rng);
        let embed = config.window_embed.map(|w| glorot(config.lambda, w, rng));
        Ok(ModelParams { config, layers, pos_encoding, head, embed })
    }

    /// Same structure, every entry zero.
    pub fn zeros_like(&self) -> Self {
        let cfg = &self.config;
        ModelParams {
            config: cfg.clone(),
            layers: (0..cfg.layers).map(|_| EncoderLayerParams::zeros(cfg)).collect(),
            pos_encoding: Array2::zeros(self.pos_encoding.dim()),
            head: HeadParams::zeros(self.head.kind, cfg.lambda, cfg.lookback),
            embed: self.embed.as_ref().map(|e| Array2::zeros(e.dim())),
        }
    }

    /// Replaces the output layer, e.g. when fine-tuning for another task.
    pub fn replace_head(&mut self, kind: HeadKind, rng: &mut impl Rng) {
        self.config.head = kind;
        self.head = HeadParams::init(kind, self.config.lambda, self.config.lookback, rng);
    }

    /// Flat views of every tensor in declaration order.
    pub fn tensors(&self) -> Vec<(TensorClass, &[f64])> {
        let mut out: Vec<(TensorClass, &[f64])> = Vec::new();
        for l in &self.layers {
            out.push((TensorClass::Wq, slice(&l.wq)));
            out.push((TensorClass::Wk, slice(&l.wk)));
            out.push((TensorClass::Wv, slice(&l.wv)));
            out.push((TensorClass::FfnIn, slice(&l.ffn_in)));
            out.push((TensorClass::FfnInBias, l.ffn_in_bias.as_slice().unwrap()));
            out.push((TensorClass::FfnOut, slice(&l.ffn_out)));
            out.push((TensorClass::FfnOutBias, l.ffn_out_bias.as_slice().unwrap()));
            out.push((TensorClass::Norm1Gain, l.norm1_gain.as_slice().unwrap()));
            out.push((TensorClass::Norm1Bias, l.norm1_bias.as_slice().unwrap()));
            out.push((TensorClass::Norm2Gain, l.norm2_gain.as_slice().unwrap()));
            out.push((TensorClass::Norm2Bias, l.norm2_bias.as_slice().unwrap()));
        }
        out.push((TensorClass::PosEncoding, slice(&self.pos_encoding)));
        out.push((TensorClass::HeadWeight, slice(&self.head.weight)));
        out.push((TensorClass::HeadBias, self.head.bias.as_slice().unwrap()));
        if let Some(e) = &self.embed {
            out.push((TensorClass::Embed, slice(e)));
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for l in &mut self.layers {
            out.push(l.wq.as_slice_mut().unwrap());
            out.push(l.wk.as_slice_mut().unwrap());
            out.push(l.wv.as_slice_mut().unwrap());
            out.push(l.ffn_in.as_slice_mut().unwrap());
            out.push(l.ffn_in_bias.as_slice_mut().unwrap());
            out.push(l.ffn_out.as_slice_mut().unwrap());
            out.push(l.ffn_out_bias.as_slice_mut().unwrap());
            out.push(l.norm1_gain.as_slice_mut().unwrap());
            out.push(l.norm1_bias.as_slice_mut().unwrap());
            out.push(l.norm2_gain.as_slice_mut().unwrap());
            out.push(l.norm2_bias.as_slice_mut().unwrap());
        }
        out.push(self.pos_encoding.as_slice_mut().unwrap());
        out.push(self.head.weight.as_slice_mut().unwrap());
        out.push(self.head.bias.as_slice_mut().unwrap());
        if let Some(e) = &mut self.embed {
            out.push(e.as_slice_mut().unwrap());
        }
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }

    /// `self += alpha · other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &ModelParams, alpha: f64) {
        let src: Vec<&[f64]> = other.tensors().into_iter().map(|(_, t)| t).collect();
        for (dst, src) in self.tensors_mut().into_iter().zip(src) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += alpha * s;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn same_shape(&self, other: &ModelParams) -> bool {
        let a = self.tensors();
        let b = other.tensors();
        a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x.0 == y.0 && x.1.len() == y.1.len())
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("parameters are kept in standard layout")
}
