use ndarray::{Array2, ArrayView2};

use super::{TokenGrid, TokenizerError};

pub const WINDOW_EMBED_ID: &str = "window-embed";

/// Sliding-window linear projection used as the tokenizer-free baseline:
/// `grid[i][j] = Σ_t W[i][t] · x[j + t − (w−1)/2]` with zero padding.
pub fn ablation_window_embed(
    x: &[f64],
    weights: ArrayView2<f64>,
) -> Result<TokenGrid, TokenizerError> {
    if x.is_empty() {
        return Err(TokenizerError::EmptyInput);
    }
    let (lambda, w) = weights.dim();
    if w % 2 == 0 {
        return Err(TokenizerError::EvenWindow(w));
    }
    let half = (w - 1) / 2;
    let l = x.len();
    let mut values = Array2::zeros((lambda, l));
    for i in 0..lambda {
        for j in 0..l {
            let mut acc = 0.0;
            for t in 0..w {
                let idx = j + t;
                if idx >= half && idx - half < l {
                    acc += weights[[i, t]] * x[idx - half];
                }
            }
            values[[i, j]] = acc;
        }
    }
    Ok(TokenGrid { values, wavebook_id: WINDOW_EMBED_ID.to_string() })
}
