use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ucr::{resample_linear, ClassDataset, UcrSeries};
use super::{DataError, DomainDataset, Target, WindowSample};

/// Train / validation / test collections.
#[derive(Debug, Clone, PartialEq)]
pub struct Splits<T> {
    pub train: Vec<T>,
    pub val: Vec<T>,
    pub test: Vec<T>,
}

impl<T> Default for Splits<T> {
    fn default() -> Self {
        Splits { train: Vec::new(), val: Vec::new(), test: Vec::new() }
    }
}

impl<T> Splits<T> {
    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> Splits<U> {
        Splits {
            train: self.train.into_iter().map(&mut f).collect(),
            val: self.val.into_iter().map(&mut f).collect(),
            test: self.test.into_iter().map(&mut f).collect(),
        }
    }

    pub fn lens(&self) -> (usize, usize, usize) {
        (self.train.len(), self.val.len(), self.test.len())
    }
}

/// Windows per channel in a split of `split_len` steps.
pub fn forecast_window_count(split_len: usize, l: usize, c: usize) -> usize {
    (split_len + 1).saturating_sub(l + c)
}

/// Number of hidden points per window: nearest integer to `ratio·l`, at
/// least one.
pub fn mask_count(l: usize, ratio: f64) -> usize {
    ((ratio * l as f64).round() as usize).clamp(1, l)
}

fn sliding(
    ds: &DomainDataset,
    span: usize,
    mut emit: impl FnMut(usize, usize, usize),
) -> Result<(), DataError> {
    for (name, range) in ds.split_ranges(span) {
        let len = range.len();
        if len < span {
            return Err(DataError::TooShort { split: name, len, need: span });
        }
        for start in range.start..=range.end - span {
            for ch in 0..ds.channels() {
                emit(split_index(name), start, ch);
            }
        }
    }
    Ok(())
}

fn split_index(name: &str) -> usize {
    match name {
        "train" => 0,
        "val" => 1,
        _ => 2,
    }
}

fn push<T>(s: &mut Splits<T>, idx: usize, v: T) {
    match idx {
        0 => s.train.push(v),
        1 => s.val.push(v),
        _ => s.test.push(v),
    }
}

/// Stride-1 windows inside each split, time-major then channel.
pub fn make_forecast_windows(
    ds: &DomainDataset,
    l: usize,
    c: usize,
) -> Result<Splits<WindowSample>, DataError> {
    if l == 0 || c == 0 {
        return Err(DataError::Precondition("lookback and horizon must be positive".into()));
    }
    let mut out = Splits::default();
    let col = |ch: usize, a: usize, b: usize| -> Vec<f64> {
        ds.values.slice(ndarray::s![a..b, ch]).to_vec()
    };
    for (name, range) in ds.split_ranges(l) {
        if range.len() < l + c {
            return Err(DataError::TooShort { split: name, len: range.len(), need: l + c });
        }
        for start in range.start..=range.end - l - c {
            for ch in 0..ds.channels() {
                let sample = WindowSample {
                    input: col(ch, start, start + l),
                    target: Target::Forecast(col(ch, start + l, start + l + c)),
                    domain: ds.name.clone(),
                    channel: ch,
                };
                push(&mut out, split_index(name), sample);
            }
        }
    }
    Ok(out)
}

/// Windows of length `l` with a seeded random mask of [`mask_count`] points.
/// Hidden inputs are zeroed; the original window is kept as the target.
pub fn make_imputation_windows(
    ds: &DomainDataset,
    l: usize,
    ratio: f64,
    seed: u64,
) -> Result<Splits<WindowSample>, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::Precondition(format!("mask ratio must be in (0, 1), got {ratio}")));
    }
    if l == 0 {
        return Err(DataError::Precondition("lookback must be positive".into()));
    }
    let k = mask_count(l, ratio);
    let mut rngs: Vec<ChaCha8Rng> =
        (0..3).map(|i| ChaCha8Rng::seed_from_u64(seed.wrapping_add(i))).collect();
    let mut out = Splits::default();
    let mut strict = ds.clone();
    strict.split_mode = super::SplitMode::Strict;
    sliding(&strict, l, |idx, start, ch| {
        let original = ds.values.slice(ndarray::s![start..start + l, ch]).to_vec();
        let mut mask = vec![false; l];
        for i in rand::seq::index::sample(&mut rngs[idx], l, k) {
            mask[i] = true;
        }
        let input = original.iter().zip(&mask).map(|(&v, &m)| if m { 0.0 } else { v }).collect();
        let sample = WindowSample {
            input,
            target: Target::Impute { mask, original },
            domain: ds.name.clone(),
            channel: ch,
        };
        push(&mut out, idx, sample);
    })?;
    Ok(out)
}

/// Classification samples, each series resampled to `l` points.
pub fn ucr_windows(ds: &ClassDataset, l: usize) -> Splits<WindowSample> {
    let conv = |s: &UcrSeries| WindowSample {
        input: resample_linear(&s.values, l),
        target: Target::Class(s.label),
        domain: ds.name.clone(),
        channel: 0,
    };
    Splits {
        train: ds.train.iter().map(conv).collect(),
        val: ds.val.iter().map(conv).collect(),
        test: ds.test.iter().map(conv).collect(),
    }
}
