use ndarray::Array1;

use super::TrainError;

/// Mean squared error and its gradient w.r.t. `pred`.
pub fn mse(pred: &Array1<f64>, target: &[f64]) -> (f64, Array1<f64>) {
    let n = pred.len() as f64;
    let d: Array1<f64> = pred.iter().zip(target).map(|(p, t)| p - t).collect();
    (d.iter().map(|v| v * v).sum::<f64>() / n, d * (2.0 / n))
}

/// Squared error averaged over the positions where `mask` is true.
pub fn masked_loss(pred: &[f64], target: &[f64], mask: &[bool]) -> Result<f64, TrainError> {
    Ok(masked_mse(pred, target, mask)?.0)
}

pub fn masked_mse(
    pred: &[f64],
    target: &[f64],
    mask: &[bool],
) -> Result<(f64, Array1<f64>), TrainError> {
    if pred.len() != target.len() || pred.len() != mask.len() {
        return Err(TrainError::Shape(format!(
            "prediction {}, target {} and mask {} lengths differ",
            pred.len(),
            target.len(),
            mask.len()
        )));
    }
    let n = mask.iter().filter(|m| **m).count();
    if n == 0 {
        return Err(TrainError::EmptyMask);
    }
    let mut grad = Array1::zeros(pred.len());
    let mut loss = 0.0;
    for i in 0..pred.len() {
        if mask[i] {
            let d = pred[i] - target[i];
            loss += d * d;
            grad[i] = 2.0 * d / n as f64;
        }
    }
    Ok((loss / n as f64, grad))
}

/// Softmax cross-entropy of `logits` against class `label`.
pub fn cross_entropy(logits: &Array1<f64>, label: usize) -> (f64, Array1<f64>) {
    let max = logits.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let z: f64 = logits.iter().map(|v| (v - max).exp()).sum();
    let mut grad = logits.mapv(|v| (v - max).exp() / z);
    let loss = -(logits[label] - max - z.ln());
    grad[label] -= 1.0;
    (loss, grad)
}

/// Learnable log-variance weights, one per domain or task.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskWeights {
    pub log_var: Vec<f64>,
}

impl TaskWeights {
    pub fn new(n: usize) -> Self {
        TaskWeights { log_var: vec![0.0; n] }
    }

    /// Effective weights `exp(−s_i)`.
    pub fn alphas(&self) -> Vec<f64> {
        self.log_var.iter().map(|s| (-s).exp()).collect()
    }
}

/// `L = Σ exp(−s_i)·L_i + s_i`. Returns `(L, ∂L/∂L_i, ∂L/∂s_i)`.
pub fn multi_task_loss(
    losses: &[f64],
    w: &TaskWeights,
) -> Result<(f64, Vec<f64>, Vec<f64>), TrainError> {
    if losses.len() != w.log_var.len() {
        return Err(TrainError::Shape(format!(
            "{} losses for {} task weights",
            losses.len(),
            w.log_var.len()
        )));
    }
    let mut total = 0.0;
    let mut d_loss = Vec::with_capacity(losses.len());
    let mut d_s = Vec::with_capacity(losses.len());
    for (&l, &s) in losses.iter().zip(&w.log_var) {
        let a = (-s).exp();
        total += a * l + s;
        d_loss.push(a);
        d_s.push(1.0 - a * l);
    }
    Ok((total, d_loss, d_s))
}
