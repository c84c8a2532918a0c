use ndarray::{Array1, Axis};

use super::{DataError, DomainDataset};

/// Standard deviation substituted for constant channels.
pub const CONSTANT_STD: f64 = 1.0;

/// Per-channel z-score statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Norm {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
    /// Channels whose training split is constant.
    pub constant: Vec<bool>,
}

impl Norm {
    pub fn apply(&self, channel: usize, v: f64) -> f64 {
        (v - self.mean[channel]) / self.std[channel]
    }

    pub fn invert(&self, channel: usize, z: f64) -> f64 {
        z * self.std[channel] + self.mean[channel]
    }
}

/// Z-scores every channel with statistics from the training split only.
pub fn standardize(mut ds: DomainDataset) -> Result<DomainDataset, DataError> {
    if ds.norm.is_some() {
        return Err(DataError::Precondition(format!("{} is already standardized", ds.name)));
    }
    let train = ds.values.slice(ndarray::s![..ds.train_end, ..]);
    let mean = train.mean_axis(Axis(0)).ok_or_else(|| DataError::Empty("train split".into()))?;
    let mut std = train.std_axis(Axis(0), 0.0);
    let mut constant = vec![false; std.len()];
    for (s, c) in std.iter_mut().zip(constant.iter_mut()) {
        if !(*s > 1e-12) {
            *s = CONSTANT_STD;
            *c = true;
        }
    }
    for mut row in ds.values.rows_mut() {
        row -= &mean;
        row /= &std;
    }
    ds.norm = Some(Norm { mean, std, constant });
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn round_trip_and_constant_channel() {
        let values = Array2::from_shape_fn((20, 3), |(t, c)| match c {
            0 => t as f64 * 1.5 - 4.0,
            1 => 7.0,
            _ => (t as f64).sin() * 100.0,
        });
        let ds = DomainDataset::with_splits("x", values.clone(), 14, 16).unwrap();
        let z = standardize(ds).unwrap();
        let norm = z.norm.clone().unwrap();
        assert_eq!(norm.constant, vec![false, true, false]);
        assert!(z.values.column(1).iter().all(|&v| v == 0.0));
        for ((t, c), &v) in z.values.indexed_iter() {
            assert!((norm.invert(c, v) - values[[t, c]]).abs() < 1e-12);
        }
        let train = z.values.slice(ndarray::s![..14, 0]);
        assert!(train.mean().unwrap().abs() < 1e-12);
        assert!(standardize(z).is_err());
    }

    #[test]
    fn statistics_come_from_train_only() {
        let mut values = Array2::zeros((10, 1));
        for t in 0..10 {
            values[[t, 0]] = if t < 5 { (t % 2) as f64 } else { 1000.0 };
        }
        let ds = DomainDataset::with_splits("x", values, 5, 7).unwrap();
        let n = standardize(ds).unwrap().norm.unwrap();
        assert!((n.mean[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn standardized_input_is_near_identity() {
        let raw: Vec<f64> = (0..100).map(|t| ((t * 37 % 17) as f64 - 8.0) / 4.0).collect();
        let values = Array2::from_shape_vec((100, 1), raw).unwrap();
        let once = standardize(DomainDataset::with_splits("x", values, 100, 100).unwrap()).unwrap();
        let mut again = once.clone();
        again.norm = None;
        let twice = standardize(again).unwrap();
        for (a, b) in once.values.iter().zip(twice.values.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
