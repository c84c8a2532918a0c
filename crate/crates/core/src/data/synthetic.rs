//! Seeded synthetic series used by tests and demos.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::DomainDataset;

/// One sinusoidal component `amplitude · sin(2π t / period + phase)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wave {
    pub period: f64,
    pub amplitude: f64,
    pub phase: f64,
}

impl Wave {
    pub fn new(period: f64, amplitude: f64) -> Self {
        Wave { period, amplitude, phase: 0.0 }
    }
}

/// Sum of `waves` plus i.i.d. Gaussian noise with standard deviation `noise`.
pub fn sum_of_waves(len: usize, waves: &[Wave], noise: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("finite noise level");
    (0..len)
        .map(|t| {
            let clean: f64 = waves
                .iter()
                .map(|w| {
                    w.amplitude * (2.0 * std::f64::consts::PI * t as f64 / w.period + w.phase).sin()
                })
                .sum();
            if noise > 0.0 {
                clean + normal.sample(&mut rng)
            } else {
                clean
            }
        })
        .collect()
}

/// Single-channel dataset with the default chronological split.
pub fn series_dataset(name: &str, values: Vec<f64>) -> DomainDataset {
    let n = values.len();
    DomainDataset::from_values(name, Array2::from_shape_vec((n, 1), values).expect("n × 1"))
        .expect("non-empty series")
}
