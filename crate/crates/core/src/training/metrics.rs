use serde::Serialize;

use super::TrainError;

/// Final evaluation numbers for one split.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Metrics {
    Regression { mse: f64, mae: f64, count: usize },
    Classification { accuracy: f64, precision: f64, recall: f64, f1: f64, count: usize },
}

impl Metrics {
    pub fn mse(&self) -> Option<f64> {
        match self {
            Metrics::Regression { mse, .. } => Some(*mse),
            _ => None,
        }
    }

    pub fn accuracy(&self) -> Option<f64> {
        match self {
            Metrics::Classification { accuracy, .. } => Some(*accuracy),
            _ => None,
        }
    }
}

/// MSE and MAE over paired values.
pub fn regression_metrics(pred: &[f64], target: &[f64]) -> Result<Metrics, TrainError> {
    if pred.is_empty() {
        return Err(TrainError::EmptySplit("no values to score".into()));
    }
    let n = pred.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(target) {
        se += (p - t) * (p - t);
        ae += (p - t).abs();
    }
    Ok(Metrics::Regression { mse: se / n, mae: ae / n, count: pred.len() })
}

/// Accuracy with macro-averaged precision, recall and F1. Classes never
/// predicted contribute a precision of 0.
pub fn classification_metrics(
    pred: &[usize],
    truth: &[usize],
    classes: usize,
) -> Result<Metrics, TrainError> {
    if pred.is_empty() {
        return Err(TrainError::EmptySplit("no predictions to score".into()));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let ratio = |a: usize, b: usize| if a + b == 0 { 0.0 } else { a as f64 / (a + b) as f64 };
    let present: Vec<usize> = (0..classes).filter(|&k| tp[k] + fneg[k] + fp[k] > 0).collect();
    let k = present.len().max(1) as f64;
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &c in &present {
        let p = ratio(tp[c], fp[c]);
        let r = ratio(tp[c], fneg[c]);
        p_sum += p;
        r_sum += r;
        f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let correct: usize = tp.iter().sum();
    Ok(Metrics::Classification {
        accuracy: correct as f64 / pred.len() as f64,
        precision: p_sum / k,
        recall: r_sum / k,
        f1: f_sum / k,
        count: pred.len(),
    })
}
