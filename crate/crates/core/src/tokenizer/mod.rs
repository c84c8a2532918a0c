//! Convolve → Difference → Recode projection of a window onto a wavebook.
//!
//! Row `i` of the token grid is the centered, scale-normalised first
//! difference of the full linear convolution of the series with basis `A_i`.
//! Column `j` is the token for timestep `j`, so a window of length `l` always
//! yields `l` tokens regardless of λ or basis lengths.

mod fft;
mod window;

pub use fft::tokenize_fft;
pub use window::ablation_window_embed;

use ndarray::Array2;
use thiserror::Error;

use crate::wavebook::Wavebook;

#[derive(Debug, Error, PartialEq)]
pub enum TokenizerError {
    #[error("basis {row} has odd length {len}; recode needs an even kernel")]
    OddKernel { row: usize, len: usize },
    #[error("basis must have at least two taps, got {0}")]
    ShortKernel(usize),
    #[error("input series is empty")]
    EmptyInput,
    #[error("window width must be odd, got {0}")]
    EvenWindow(usize),
    #[error("scale must be positive, got {0}")]
    BadScale(f64),
}

/// `λ × l` token matrix; column `j` is `token_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenGrid {
    pub values: Array2<f64>,
    pub wavebook_id: String,
}

impl TokenGrid {
    pub fn lambda(&self) -> usize {
        self.values.nrows()
    }

    pub fn length(&self) -> usize {
        self.values.ncols()
    }

    pub fn token(&self, j: usize) -> Vec<f64> {
        self.values.column(j).to_vec()
    }
}

/// Full linear convolution with zero padding, length `l + n − 1`.
pub fn convolve(x: &[f64], a: &[f64]) -> Vec<f64> {
    if x.is_empty() || a.is_empty() {
        return Vec::new();
    }
    let l = x.len();
    let n = a.len();
    (0..l + n - 1)
        .map(|j| {
            let lo = j.saturating_sub(l - 1);
            let hi = j.min(n - 1);
            let mut acc = 0.0;
            for i in lo..=hi {
                acc += a[i] * x[j - i];
            }
            acc
        })
        .collect()
}

/// `d_j = −√s · (c_{j+1} − c_j)`, length `l + n − 2`.
pub fn difference(x: &[f64], a: &[f64], scale: f64) -> Result<Vec<f64>, TokenizerError> {
    check_inputs(x, a, scale)?;
    Ok(difference_of(&convolve(x, a), scale))
}

pub(crate) fn difference_of(c: &[f64], scale: f64) -> Vec<f64> {
    let k = -scale.sqrt();
    c.windows(2).map(|w| k * (w[1] - w[0])).collect()
}

/// `p_j = d_{j + n/2 − 1}`, length `l`.
pub fn recode(x: &[f64], a: &[f64], scale: f64) -> Result<Vec<f64>, TokenizerError> {
    check_inputs(x, a, scale)?;
    if a.len() % 2 != 0 {
        return Err(TokenizerError::OddKernel { row: 0, len: a.len() });
    }
    Ok(center(&difference_of(&convolve(x, a), scale), x.len(), a.len()))
}

pub(crate) fn center(d: &[f64], l: usize, n: usize) -> Vec<f64> {
    let off = n / 2 - 1;
    d[off..off + l].to_vec()
}

fn check_inputs(x: &[f64], a: &[f64], scale: f64) -> Result<(), TokenizerError> {
    if x.is_empty() {
        return Err(TokenizerError::EmptyInput);
    }
    if a.len() < 2 {
        return Err(TokenizerError::ShortKernel(a.len()));
    }
    if !(scale > 0.0) {
        return Err(TokenizerError::BadScale(scale));
    }
    Ok(())
}

pub(crate) fn check_book(book: &Wavebook) -> Result<(), TokenizerError> {
    for (i, b) in book.bases.iter().enumerate() {
        if b.len() < 2 {
            return Err(TokenizerError::ShortKernel(b.len()));
        }
        if b.len() % 2 != 0 {
            return Err(TokenizerError::OddKernel { row: i + 1, len: b.len() });
        }
    }
    Ok(())
}

/// Direct-summation tokenizer.
pub fn tokenize(x: &[f64], book: &Wavebook) -> Result<TokenGrid, TokenizerError> {
    if x.is_empty() {
        return Err(TokenizerError::EmptyInput);
    }
    check_book(book)?;
    let l = x.len();
    let mut values = Array2::zeros((book.lambda, l));
    for (i, (basis, &s)) in book.bases.iter().zip(&book.scales).enumerate() {
        let row = recode(x, basis, s).map_err(|e| match e {
            TokenizerError::OddKernel { len, .. } => TokenizerError::OddKernel { row: i + 1, len },
            other => other,
        })?;
        values.row_mut(i).iter_mut().zip(row).for_each(|(v, p)| *v = p);
    }
    Ok(TokenGrid { values, wavebook_id: book.id() })
}

pub const GRID_MAGIC: &[u8; 4] = b"WQTG";

/// Binary grid: magic `WQTG`, `u32 λ`, `u32 l`, row-major `f64`.
pub fn encode_grid(grid: &TokenGrid) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + 8 * grid.values.len());
    out.extend_from_slice(GRID_MAGIC);
    out.extend_from_slice(&(grid.lambda() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.length() as u32).to_le_bytes());
    for v in grid.values.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_grid(bytes: &[u8]) -> Result<Array2<f64>, crate::wavebook::WavebookError> {
    let mut r = crate::wavebook::ByteReader::new(bytes);
    if r.take(4, "magic")? != GRID_MAGIC {
        return Err(r.error(0, "bad magic, expected \"WQTG\"".into()));
    }
    let lambda = r.u32("lambda")? as usize;
    let l = r.u32("length")? as usize;
    let vals = r.f64_vec(lambda * l, "grid values")?;
    Ok(Array2::from_shape_vec((lambda, l), vals).expect("shape checked by reader"))
}
