use sha2::{Digest, Sha256};

use super::mother::MotherWavelet;
use super::WavebookError;

/// λ scaled copies of a mother wavelet.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavebook {
    pub lambda: usize,
    pub f_c: f64,
    pub scales: Vec<f64>,
    pub bases: Vec<Vec<f64>>,
    pub mother: MotherWavelet,
    pub mother_id: String,
}

impl Wavebook {
    pub fn m(&self) -> u32 {
        self.mother.m
    }

    pub fn basis_lengths(&self) -> Vec<usize> {
        self.bases.iter().map(Vec::len).collect()
    }

    /// Identifier combining the mother wavelet digest and the wavebook size.
    pub fn id(&self) -> String {
        format!("{}-l{}", self.mother_id, self.lambda)
    }
}

/// Content digest of an amplitude sequence (first 8 bytes of SHA-256, hex).
pub fn mother_digest(w: &MotherWavelet) -> String {
    let mut hasher = Sha256::new();
    hasher.update(w.m.to_le_bytes());
    for a in &w.amplitudes {
        hasher.update(a.to_le_bytes());
    }
    hasher.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `S_i = 2·f_c·λ / i` for `i = 1..=λ`.
pub fn compute_scales(f_c: f64, lambda: usize) -> Result<Vec<f64>, WavebookError> {
    if !(f_c > 0.0 && f_c.is_finite()) {
        return Err(WavebookError::Precondition(format!("f_c must be positive, got {f_c}")));
    }
    if lambda == 0 {
        return Err(WavebookError::Precondition("wavebook size must be at least 1".into()));
    }
    Ok((1..=lambda).map(|i| 2.0 * f_c * (lambda as f64 / i as f64)).collect())
}

/// `2·round(x/2)`.
pub fn even_round(x: f64) -> i64 {
    2 * (x / 2.0).round() as i64
}

/// Target basis length `even_round(m · s)`.
pub fn basis_length(m: u32, scale: f64) -> i64 {
    even_round(m as f64 * scale)
}

/// Samples the mother wavelet at `w_j = (2^m − 1)·j / n` for `j = 1..=n`,
/// reading fractional coordinates by linear interpolation.
pub fn sample_basis(w: &MotherWavelet, scale: f64) -> Result<Vec<f64>, WavebookError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(WavebookError::Precondition(format!("scale must be positive, got {scale}")));
    }
    let n = basis_length(w.m, scale);
    if n < 2 {
        return Err(WavebookError::Scale { index: None, scale, length: n });
    }
    Ok(sample_at_length(&w.amplitudes, n as usize))
}

pub(crate) fn sample_at_length(a: &[f64], n: usize) -> Vec<f64> {
    let last = a.len() - 1;
    (1..=n)
        .map(|j| {
            if j == n {
                return a[last];
            }
            let pos = (last * j) as f64 / n as f64;
            let lo = pos.floor() as usize;
            let frac = pos - lo as f64;
            if frac == 0.0 || lo >= last {
                a[lo.min(last)]
            } else {
                a[lo] + frac * (a[lo + 1] - a[lo])
            }
        })
        .collect()
}

pub fn build_wavebook(w: &MotherWavelet, lambda: usize) -> Result<Wavebook, WavebookError> {
    let scales = compute_scales(w.f_c, lambda)?;
    let bases = scales
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            sample_basis(w, s).map_err(|e| match e {
                WavebookError::Scale { scale, length, .. } => {
                    WavebookError::Scale { index: Some(i + 1), scale, length }
                }
                other => other,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Wavebook {
        lambda,
        f_c: w.f_c,
        scales,
        bases,
        mother: w.clone(),
        mother_id: mother_digest(w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavebook::{cascade_mother, filter};
    use approx::assert_abs_diff_eq;

    fn mother_with_fc(m: u32, f_c: f64) -> MotherWavelet {
        let n = 1usize << m;
        let amplitudes = (0..n).map(|k| if k < n / 2 { 1.0 } else { -1.0 }).collect();
        MotherWavelet { amplitudes, m, step: crate::wavebook::grid_step(m), f_c }
    }

    #[test]
    fn scales_examples() {
        let s = compute_scales(1.0, 4).unwrap();
        let expected = [8.0, 4.0, 8.0 / 3.0, 2.0];
        for (a, b) in s.iter().zip(expected) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-12);
        }
        assert_eq!(compute_scales(0.5, 1).unwrap(), vec![1.0]);
        let s = compute_scales(1.0, 100).unwrap();
        assert_eq!(s[0], 200.0);
        assert_eq!(s[99], 2.0);
    }

    #[test]
    fn scales_reject_bad_inputs() {
        assert!(compute_scales(0.0, 3).is_err());
        assert!(compute_scales(1.0, 0).is_err());
    }

    #[test]
    fn even_rounding() {
        assert_eq!(even_round(0.8), 0);
        assert_eq!(even_round(3.0), 4);
        assert_eq!(even_round(2.9), 2);
        assert_eq!(even_round(48.0), 48);
    }

    #[test]
    fn sample_full_length_hits_last_index() {
        let fp = filter::build_filter_pair(&filter::db2()).unwrap();
        let w = cascade_mother(&fp, 4).unwrap();
        let b = sample_basis(&w, 16.0 / 4.0).unwrap();
        assert_eq!(b.len(), 16);
        assert_eq!(b[15], w.amplitudes[15]);
        // every sample lies between its two neighbouring amplitudes
        for (j, v) in b.iter().enumerate() {
            let pos = 15.0 * (j + 1) as f64 / 16.0;
            let lo = w.amplitudes[pos.floor() as usize];
            let hi = w.amplitudes[(pos.ceil() as usize).min(15)];
            assert!(*v >= lo.min(hi) - 1e-15 && *v <= lo.max(hi) + 1e-15);
        }
    }

    #[test]
    fn sample_half_length_by_hand() {
        let a: Vec<f64> = (0..16).map(|i| (i * i) as f64).collect();
        let w = MotherWavelet { amplitudes: a.clone(), m: 4, step: 4.0 / 15.0, f_c: 1.0 };
        let b = sample_basis(&w, 2.0).unwrap();
        assert_eq!(b.len(), 8);
        for j in 1..=8 {
            let pos = 15.0 * j as f64 / 8.0;
            let lo = pos.floor() as usize;
            let f = pos - lo as f64;
            let expected = if lo == 15 { a[15] } else { a[lo] + f * (a[lo + 1] - a[lo]) };
            assert_abs_diff_eq!(b[j - 1], expected, epsilon = 1e-12);
        }
        assert_eq!(b[7], a[15]);
    }

    #[test]
    fn too_small_scale() {
        let w = mother_with_fc(4, 1.0);
        assert!(matches!(
            sample_basis(&w, 0.05),
            Err(WavebookError::Scale { length: 0, .. })
        ));
    }

    #[test]
    fn wavebook_lengths() {
        let w = mother_with_fc(6, 1.0);
        let book = build_wavebook(&w, 4).unwrap();
        assert_eq!(book.basis_lengths(), vec![48, 24, 16, 12]);
        let single = build_wavebook(&w, 1).unwrap();
        assert_eq!(single.basis_lengths(), vec![even_round(6.0 * 2.0) as usize]);
        assert!(build_wavebook(&w, 0).is_err());
    }

    #[test]
    fn scale_error_reports_index() {
        let w = mother_with_fc(4, 0.05);
        match build_wavebook(&w, 4) {
            Err(WavebookError::Scale { index: Some(i), .. }) => assert!(i >= 1),
            other => panic!("unexpected {other:?}"),
        }
    }
}
