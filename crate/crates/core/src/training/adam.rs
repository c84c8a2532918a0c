use crate::model::ModelParams;

use super::TrainError;

/// Bias-corrected Adam moments for a [`ModelParams`].
#[derive(Debug, Clone)]
pub struct AdamState {
    pub step_count: u64,
    pub m: ModelParams,
    pub v: ModelParams,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        AdamState {
            step_count: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update of `p` given gradient `g`, for step number `t ≥ 1`.
#[allow(clippy::too_many_arguments)]
pub fn adam_update(
    p: &mut [f64],
    g: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    let c1 = 1.0 - beta1.powi(t as i32);
    let c2 = 1.0 - beta2.powi(t as i32);
    for i in 0..p.len() {
        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
        let mh = m[i] / c1;
        let vh = v[i] / c2;
        p[i] -= lr * mh / (vh.sqrt() + eps);
    }
}

pub fn adam_step(
    params: &mut ModelParams,
    grads: &ModelParams,
    state: &mut AdamState,
) -> Result<(), TrainError> {
    if !params.same_shape(grads) || !params.same_shape(&state.m) {
        return Err(TrainError::Shape("parameters, gradients and moments differ in shape".into()));
    }
    state.step_count += 1;
    let t = state.step_count;
    let gs: Vec<&[f64]> = grads.tensors().into_iter().map(|(_, x)| x).collect();
    let ms = state.m.tensors_mut();
    let vs = state.v.tensors_mut();
    for (((p, g), m), v) in params.tensors_mut().into_iter().zip(gs).zip(ms).zip(vs) {
        adam_update(p, g, m, v, t, state.lr, state.beta1, state.beta2, state.eps);
    }
    Ok(())
}
