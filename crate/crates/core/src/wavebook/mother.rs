//! Discretised mother wavelet built with the cascade algorithm.

use std::f64::consts::SQRT_2;

use rustfft::{num_complex::Complex64, FftPlanner};

use super::filter::FilterPair;
use super::WavebookError;

/// Largest relative L2 change allowed between the last two cascade iterates.
pub const CASCADE_TOL: f64 = 1e-3;

/// Tolerance on `|Σ A| / Σ |A|` for an admissible (zero-mean) wavelet.
pub const ZERO_MEAN_TOL: f64 = 1e-3;

/// Amplitude sequence `A` of length `2^m` sampled over a support of width `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct MotherWavelet {
    pub amplitudes: Vec<f64>,
    pub m: u32,
    pub step: f64,
    pub f_c: f64,
}

impl MotherWavelet {
    /// Wraps an existing amplitude sequence, checking the admissibility
    /// conditions and estimating its center frequency.
    pub fn from_amplitudes(amplitudes: Vec<f64>, m: u32) -> Result<Self, WavebookError> {
        if m < 4 {
            return Err(WavebookError::Precondition(format!("m must be at least 4, got {m}")));
        }
        if m >= 31 || amplitudes.len() != 1usize << m {
            return Err(WavebookError::Precondition(format!(
                "amplitude sequence has {} entries, expected 2^{m}",
                amplitudes.len()
            )));
        }
        if amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(WavebookError::Precondition("non-finite amplitude".into()));
        }
        let energy: f64 = amplitudes.iter().map(|a| a * a).sum();
        if energy <= 0.0 {
            return Err(WavebookError::Degenerate);
        }
        let ratio = zero_mean_ratio(&amplitudes);
        if ratio >= ZERO_MEAN_TOL {
            return Err(WavebookError::NotAdmissible { ratio });
        }
        let step = grid_step(m);
        let f_c = estimate_center_frequency(&amplitudes, step)?;
        Ok(MotherWavelet { amplitudes, m, step, f_c })
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.amplitudes.iter().map(|a| a * a).sum()
    }
}

/// `m / (2^m − 1)`.
pub fn grid_step(m: u32) -> f64 {
    m as f64 / ((1u64 << m) - 1) as f64
}

/// `|Σ a| / Σ |a|`.
pub fn zero_mean_ratio(a: &[f64]) -> f64 {
    let sum: f64 = a.iter().sum();
    let abs: f64 = a.iter().map(|x| x.abs()).sum();
    if abs == 0.0 {
        0.0
    } else {
        sum.abs() / abs
    }
}

/// Runs the cascade for `m` iterations, resamples onto `2^m` points and
/// normalises to unit energy.
pub fn cascade_mother(fp: &FilterPair, m: u32) -> Result<MotherWavelet, WavebookError> {
    if !(4..=20).contains(&m) {
        return Err(WavebookError::Precondition(format!("m must be in 4..=20, got {m}")));
    }
    if fp.len() < 2 {
        return Err(WavebookError::Precondition("filter needs at least two taps".into()));
    }
    let psi = wavelet_samples(fp, m);
    let prev = wavelet_samples(fp, m - 1);

    let common = prev.len();
    let mut diff = 0.0;
    let mut norm = 0.0;
    for k in 0..common {
        let d = psi[2 * k] - prev[k];
        diff += d * d;
        norm += prev[k] * prev[k];
    }
    let change = if norm > 0.0 { (diff / norm).sqrt() } else { f64::INFINITY };
    if !change.is_finite() || change > CASCADE_TOL {
        return Err(WavebookError::Convergence { change });
    }

    // Drop the closing sample at the right edge of the support: the wavelet
    // vanishes there and the remaining (N−1)·2^m samples tile [0, N−1).
    let n = 1usize << m;
    let mut amps = box_resample(&psi[..psi.len() - 1], n);
    let energy: f64 = amps.iter().map(|a| a * a).sum::<f64>();
    if !(energy > 0.0 && energy.is_finite()) {
        return Err(WavebookError::Degenerate);
    }
    let scale = energy.sqrt().recip();
    amps.iter_mut().for_each(|a| *a *= scale);

    let step = grid_step(m);
    let f_c = estimate_center_frequency(&amps, step)?;
    Ok(MotherWavelet { amplitudes: amps, m, step, f_c })
}

/// Cascade iterate after `levels` refinements: samples of the wavelet on a
/// grid of spacing `2^{-levels}` covering the closed support.
fn wavelet_samples(fp: &FilterPair, levels: u32) -> Vec<f64> {
    let mut phi = integer_samples(&fp.h);
    for j in 0..levels - 1 {
        phi = convolve_upsampled(&phi, &fp.h, 1usize << j);
    }
    convolve_upsampled(&phi, &fp.g, 1usize << (levels - 1))
}

/// `√2 · (x ∗ f↑r)` where `f↑r` inserts `r − 1` zeros between taps.
fn convolve_upsampled(x: &[f64], f: &[f64], r: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len() + (f.len() - 1) * r];
    for (t, &c) in f.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let c = c * SQRT_2;
        let off = t * r;
        for (i, &v) in x.iter().enumerate() {
            out[i + off] += c * v;
        }
    }
    out
}

/// Scaling-function values at the integers of its support: the eigenvector of
/// `M_{ij} = √2 h_{2i−j}` for eigenvalue 1 with `Σ φ = 1`. Falls back to a
/// unit impulse when that system is singular (Haar).
fn integer_samples(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    let mut a = vec![vec![0.0; n + 1]; n];
    for (i, row) in a.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().take(n).enumerate() {
            let k = 2 * i as i64 - j as i64;
            if (0..n as i64).contains(&k) {
                *cell = SQRT_2 * h[k as usize];
            }
            if i == j {
                *cell -= 1.0;
            }
        }
    }
    // Replace the last (redundant) equation with the normalisation.
    for cell in a[n - 1].iter_mut().take(n) {
        *cell = 1.0;
    }
    a[n - 1][n] = 1.0;

    let mut impulse = vec![0.0; n];
    impulse[0] = 1.0;
    match solve_dense(a) {
        Some(v) if v.iter().all(|x| x.is_finite()) => v,
        _ => impulse,
    }
}

/// Gaussian elimination with partial pivoting on an augmented `n × (n+1)` system.
fn solve_dense(mut a: Vec<Vec<f64>>) -> Option<Vec<f64>> {
    let n = a.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f != 0.0 {
                for k in col..=n {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (a[i][n] - s) / a[i][i];
    }
    Some(x)
}

/// Area-preserving resampling: the input is read as unit-width constant cells
/// over `[0, L)` and averaged over `n` equal output cells. Identity when
/// `L == n`.
pub(crate) fn box_resample(x: &[f64], n: usize) -> Vec<f64> {
    let len = x.len();
    if len == n {
        return x.to_vec();
    }
    let width = len as f64 / n as f64;
    (0..n)
        .map(|k| {
            let lo = k as f64 * width;
            let hi = if k + 1 == n { len as f64 } else { (k + 1) as f64 * width };
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(len);
            let mut acc = 0.0;
            for (i, &v) in x.iter().enumerate().take(last).skip(first) {
                let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                acc += v * overlap;
            }
            acc / (hi - lo)
        })
        .collect()
}

/// Dominant DFT frequency (cycles per unit time) of an amplitude sequence
/// sampled with spacing `step`. Ties go to the lowest bin.
pub fn estimate_center_frequency(amplitudes: &[f64], step: f64) -> Result<f64, WavebookError> {
    let n = amplitudes.len();
    if n < 2 || amplitudes.iter().all(|&a| a == 0.0) {
        return Err(WavebookError::Degenerate);
    }
    let mut buf: Vec<Complex64> = amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut best = 1;
    let mut best_mag = buf[1].norm();
    for (k, c) in buf.iter().enumerate().take(n / 2 + 1).skip(2) {
        let mag = c.norm();
        if mag > best_mag {
            best = k;
            best_mag = mag;
        }
    }
    Ok(best as f64 / (n as f64 * step))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavebook::filter::{build_filter_pair, db2, haar};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn haar_is_a_step() {
        let fp = build_filter_pair(&haar()).unwrap();
        let w = cascade_mother(&fp, 4).unwrap();
        assert_eq!(w.len(), 16);
        let c = w.amplitudes[0];
        assert!(c > 0.0);
        assert!(w.amplitudes[..8].iter().all(|&a| a == c));
        assert!(w.amplitudes[8..].iter().all(|&a| a == -c));
        assert_abs_diff_eq!(w.energy(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn db2_zero_mean_unit_energy() {
        let fp = build_filter_pair(&db2()).unwrap();
        let w = cascade_mother(&fp, 8).unwrap();
        assert_eq!(w.len(), 256);
        assert!(zero_mean_ratio(&w.amplitudes) < 1e-3);
        assert_abs_diff_eq!(w.energy().sqrt(), 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(w.step, 8.0 / 255.0, epsilon = 1e-15);
    }

    #[test]
    fn db2_integer_samples() {
        // φ(1) = (1+√3)/2, φ(2) = (1−√3)/2
        let fp = build_filter_pair(&db2()).unwrap();
        let phi = integer_samples(&fp.h);
        let s3 = 3f64.sqrt();
        assert_abs_diff_eq!(phi[1], (1.0 + s3) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phi[2], (1.0 - s3) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phi[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(phi[3], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn small_m_rejected() {
        let fp = build_filter_pair(&haar()).unwrap();
        assert!(matches!(cascade_mother(&fp, 2), Err(WavebookError::Precondition(_))));
    }

    #[test]
    fn divergent_filter_reports_convergence() {
        // Σh = √2 but far from orthogonal; the cascade does not settle.
        let h = [SQRT_2 * 1.5, -SQRT_2 * 0.5];
        let fp = build_filter_pair(&h).unwrap();
        assert!(matches!(cascade_mother(&fp, 6), Err(WavebookError::Convergence { .. })));
    }

    #[test]
    fn center_frequency_of_pure_tone() {
        let m = 6;
        let n = 64;
        let a: Vec<f64> = (0..n).map(|k| (2.0 * PI * 4.0 * k as f64 / n as f64).cos()).collect();
        let step = 6.0 / 63.0;
        let fc = estimate_center_frequency(&a, step).unwrap();
        let bin = 1.0 / (n as f64 * step);
        assert!((fc - 4.0 / m as f64).abs() <= bin);
    }

    /// Naive DFT oracle for the Haar step.
    #[test]
    fn haar_center_frequency_regression() {
        let fp = build_filter_pair(&haar()).unwrap();
        let w = cascade_mother(&fp, 6).unwrap();
        let n = w.len();
        let mags: Vec<f64> = (0..n)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, &a) in w.amplitudes.iter().enumerate() {
                    let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += a * ang.cos();
                    im += a * ang.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect();
        let mut best = 1;
        for k in 2..=n / 2 {
            if mags[k] > mags[best] + 1e-12 {
                best = k;
            }
        }
        assert_eq!(best, 1);
        assert_abs_diff_eq!(w.f_c, 63.0 / 384.0, epsilon = 1e-15);
        assert_abs_diff_eq!(w.f_c, best as f64 / (n as f64 * 6.0 / 63.0), epsilon = 1e-15);
    }

    #[test]
    fn zero_sequence_is_degenerate() {
        assert!(matches!(
            estimate_center_frequency(&[0.0; 16], 0.25),
            Err(WavebookError::Degenerate)
        ));
    }

    #[test]
    fn box_resample_preserves_area() {
        let x: Vec<f64> = (0..30).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = box_resample(&x, 16);
        let ax: f64 = x.iter().sum();
        let ay: f64 = y.iter().sum::<f64>() * 30.0 / 16.0;
        assert_abs_diff_eq!(ax, ay, epsilon = 1e-12);
        assert_eq!(box_resample(&x, 30), x);
    }

    #[test]
    fn from_amplitudes_checks() {
        assert!(MotherWavelet::from_amplitudes(vec![0.0; 16], 4).is_err());
        assert!(MotherWavelet::from_amplitudes(vec![1.0; 16], 4).is_err());
        assert!(MotherWavelet::from_amplitudes(vec![1.0; 8], 3).is_err());
        let a: Vec<f64> = (0..16).map(|i| if i < 8 { 0.25 } else { -0.25 }).collect();
        let w = MotherWavelet::from_amplitudes(a, 4).unwrap();
        assert!(w.f_c > 0.0);
    }
}
