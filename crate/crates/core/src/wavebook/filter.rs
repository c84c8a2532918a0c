//! Two-channel orthogonal filter pairs and the unitary (QMF) check.

use std::f64::consts::{PI, SQRT_2};

use rustfft::num_complex::Complex64;

use super::WavebookError;

/// Tolerance on `Σ h_n − √2` accepted by [`build_filter_pair`].
pub const NORMALIZATION_TOL: f64 = 1e-6;

/// Low-pass / band-pass filter pair.
///
/// Indexing convention: the taps keep their input order but are labelled
/// `h_n` for `n ∈ [1 − N, 0]`, so `h_0` sits at `support_offset = N − 1`
/// (the last stored entry). `g` holds `g_n` for
/// `n ∈ [1, N]` with `g[k] = g_{k+1} = (−1)^k · h_{−k}`, which is exactly
/// `g_n = (−1)^(n−1) · h_{1−n}` over every stored `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterPair {
    pub h: Vec<f64>,
    pub g: Vec<f64>,
    pub support_offset: usize,
}

impl FilterPair {
    /// Tap index `n` of `h[k]`.
    pub fn h_index(&self, k: usize) -> i64 {
        k as i64 - self.support_offset as i64
    }

    /// Tap index `n` of `g[k]`.
    pub fn g_index(&self, k: usize) -> i64 {
        k as i64 + 1
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    /// `H(ω) = Σ h_n e^{−inω} / √2`.
    pub fn low_response(&self, omega: f64) -> Complex64 {
        response(self.h.iter().enumerate().map(|(k, &c)| (self.h_index(k), c)), omega)
    }

    /// `G(ω) = Σ g_n e^{−inω} / √2`.
    pub fn high_response(&self, omega: f64) -> Complex64 {
        response(self.g.iter().enumerate().map(|(k, &c)| (self.g_index(k), c)), omega)
    }
}

fn response(taps: impl Iterator<Item = (i64, f64)>, omega: f64) -> Complex64 {
    let acc: Complex64 = taps
        .map(|(n, c)| Complex64::from_polar(c, -(n as f64) * omega))
        .sum();
    acc / SQRT_2
}

/// Haar scaling filter `(1/√2, 1/√2)`.
pub fn haar() -> Vec<f64> {
    vec![1.0 / SQRT_2, 1.0 / SQRT_2]
}

/// Daubechies-4 (db2) scaling filter.
pub fn db2() -> Vec<f64> {
    let s3 = 3f64.sqrt();
    let d = 4.0 * SQRT_2;
    vec![(1.0 + s3) / d, (3.0 + s3) / d, (3.0 - s3) / d, (1.0 - s3) / d]
}

/// Builds the band-pass filter for a scaling filter.
pub fn build_filter_pair(h: &[f64]) -> Result<FilterPair, WavebookError> {
    if h.is_empty() {
        return Err(WavebookError::Precondition("scaling filter is empty".into()));
    }
    if h.iter().any(|c| !c.is_finite()) {
        return Err(WavebookError::Precondition("scaling filter has non-finite taps".into()));
    }
    let sum: f64 = h.iter().sum();
    if (sum - SQRT_2).abs() > NORMALIZATION_TOL {
        return Err(WavebookError::Normalization { sum });
    }
    let n = h.len();
    let stored = h.to_vec();
    let support_offset = n - 1;
    // g[k] = (−1)^k h_{−k} = (−1)^k stored[support_offset − k]
    let g = (0..n)
        .map(|k| {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sign * stored[support_offset - k]
        })
        .collect();
    Ok(FilterPair { h: stored, g, support_offset })
}

/// Maximum deviation from the unitary-matrix conditions over a uniform grid
/// on `[0, 2π)`.
pub fn verify_unitary(fp: &FilterPair, grid_points: usize) -> Result<f64, WavebookError> {
    if grid_points < 64 {
        return Err(WavebookError::Precondition(format!(
            "grid_points must be at least 64, got {grid_points}"
        )));
    }
    let mut worst = 0.0f64;
    for k in 0..grid_points {
        let w = 2.0 * PI * k as f64 / grid_points as f64;
        let h0 = fp.low_response(w);
        let h1 = fp.low_response(w + PI);
        let g0 = fp.high_response(w);
        let g1 = fp.high_response(w + PI);
        let low = (h0.norm_sqr() + h1.norm_sqr() - 1.0).abs();
        let high = (g0.norm_sqr() + g1.norm_sqr() - 1.0).abs();
        let cross = (h0 * g0.conj() + h1 * g1.conj()).norm();
        worst = worst.max(low).max(high).max(cross);
    }
    Ok(worst)
}

/// Parses scaling-filter taps from text: whitespace, comma or newline
/// separated numbers, `#` starts a comment.
pub fn parse_filter_text(text: &str) -> Result<Vec<f64>, WavebookError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split(|c: char| c == ',' || c.is_whitespace()) {
            if tok.is_empty() {
                continue;
            }
            let v: f64 = tok.parse().map_err(|_| {
                WavebookError::Precondition(format!(
                    "line {}: cannot parse filter tap {tok:?}",
                    lineno + 1
                ))
            })?;
            out.push(v);
        }
    }
    Ok(out)
}
