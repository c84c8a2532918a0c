//! One pre-norm encoder layer on the row-major `l × λ` token matrix
//! (each row is a token).

use ndarray::{s, Array1, Array2, ArrayView2, Axis};

use super::params::EncoderLayerParams;

pub const LN_EPS: f64 = 1e-5;

const GELU_C: f64 = 0.797_884_560_802_865_4; // √(2/π)

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + 0.044715 * x * x * x)).tanh())
}

pub fn gelu_grad(x: f64) -> f64 {
    let u = GELU_C * (x + 0.044715 * x * x * x);
    let t = u.tanh();
    let du = GELU_C * (1.0 + 3.0 * 0.044715 * x * x);
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du
}

#[derive(Debug, Clone)]
pub struct NormCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
}

/// Row-wise layer normalisation.
pub fn layer_norm(
    x: ArrayView2<f64>,
    gain: &Array1<f64>,
    bias: &Array1<f64>,
) -> (Array2<f64>, NormCache) {
    let width = x.ncols() as f64;
    let mut xhat = x.to_owned();
    let mut inv_std = Array1::zeros(x.nrows());
    for (mut row, is) in xhat.rows_mut().into_iter().zip(inv_std.iter_mut()) {
        let mean = row.sum() / width;
        row.mapv_inplace(|v| v - mean);
        let var = row.iter().map(|v| v * v).sum::<f64>() / width;
        *is = 1.0 / (var + LN_EPS).sqrt();
        let k = *is;
        row.mapv_inplace(|v| v * k);
    }
    let out = &xhat * gain + bias;
    (out, NormCache { xhat, inv_std })
}

/// Returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(
    dout: ArrayView2<f64>,
    gain: &Array1<f64>,
    cache: &NormCache,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let dgain = (&dout * &cache.xhat).sum_axis(Axis(0));
    let dbias = dout.sum_axis(Axis(0));
    let dxhat = &dout * gain;
    let width = dout.ncols() as f64;
    let mut dx = Array2::zeros(dout.raw_dim());
    for r in 0..dout.nrows() {
        let dh = dxhat.row(r);
        let xh = cache.xhat.row(r);
        let mean_dh = dh.sum() / width;
        let mean_dhx = dh.dot(&xh) / width;
        let is = cache.inv_std[r];
        let mut out = dx.row_mut(r);
        for k in 0..dh.len() {
            out[k] = is * (dh[k] - mean_dh - xh[k] * mean_dhx);
        }
    }
    (dx, dgain, dbias)
}

/// Numerically stable in-place row softmax.
pub fn softmax_rows(s: &mut Array2<f64>) {
    for mut row in s.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    a: Array2<f64>,
    q: Array2<f64>,
    k: Array2<f64>,
    v: Array2<f64>,
    /// One `l × l` probability matrix per head.
    probs: Vec<Array2<f64>>,
}

impl AttentionCache {
    pub fn probs(&self) -> &[Array2<f64>] {
        &self.probs
    }
}

/// Multi-head scaled dot-product attention on the normalised tokens `a`.
/// `d_k` and `λ` are split into `n_heads` equal groups; head outputs are
/// concatenated back to width `λ`.
pub fn attention(
    a: Array2<f64>,
    p: &EncoderLayerParams,
    n_heads: usize,
) -> (Array2<f64>, AttentionCache) {
    let q = a.dot(&p.wq);
    let k = a.dot(&p.wk);
    let v = a.dot(&p.wv);
    let l = a.nrows();
    let dqk = q.ncols() / n_heads;
    let dv = v.ncols() / n_heads;
    let scale = 1.0 / (dqk as f64).sqrt();
    let mut out = Array2::zeros((l, v.ncols()));
    let mut probs = Vec::with_capacity(n_heads);
    for h in 0..n_heads {
        let qh = q.slice(s![.., h * dqk..(h + 1) * dqk]);
        let kh = k.slice(s![.., h * dqk..(h + 1) * dqk]);
        let vh = v.slice(s![.., h * dv..(h + 1) * dv]);
        let mut sc = qh.dot(&kh.t()) * scale;
        softmax_rows(&mut sc);
        out.slice_mut(s![.., h * dv..(h + 1) * dv]).assign(&sc.dot(&vh));
        probs.push(sc);
    }
    (out, AttentionCache { a, q, k, v, probs })
}

/// Accumulates parameter gradients into `g` and returns `d a`.
fn attention_backward(
    dout: ArrayView2<f64>,
    p: &EncoderLayerParams,
    c: &AttentionCache,
    g: &mut EncoderLayerParams,
) -> Array2<f64> {
    let n_heads = c.probs.len();
    let dqk = c.q.ncols() / n_heads;
    let dv = c.v.ncols() / n_heads;
    let scale = 1.0 / (dqk as f64).sqrt();
    let mut dq = Array2::zeros(c.q.raw_dim());
    let mut dk = Array2::zeros(c.k.raw_dim());
    let mut dvm = Array2::zeros(c.v.raw_dim());
    for (h, pr) in c.probs.iter().enumerate() {
        let qs = s![.., h * dqk..(h + 1) * dqk];
        let vs = s![.., h * dv..(h + 1) * dv];
        let doh = dout.slice(vs);
        let vh = c.v.slice(vs);
        let dp = doh.dot(&vh.t());
        dvm.slice_mut(vs).assign(&pr.t().dot(&doh));
        let mut ds = pr * &dp;
        for (mut row, prow) in ds.rows_mut().into_iter().zip(pr.rows()) {
            let inner = row.sum();
            for (d, &pv) in row.iter_mut().zip(prow.iter()) {
                *d -= pv * inner;
            }
        }
        ds *= scale;
        dq.slice_mut(qs).assign(&ds.dot(&c.k.slice(qs)));
        dk.slice_mut(qs).assign(&ds.t().dot(&c.q.slice(qs)));
    }
    let at = c.a.t();
    g.wq += &at.dot(&dq);
    g.wk += &at.dot(&dk);
    g.wv += &at.dot(&dvm);
    dq.dot(&p.wq.t()) + dk.dot(&p.wk.t()) + dvm.dot(&p.wv.t())
}

#[derive(Debug, Clone)]
pub struct LayerCache {
    norm1: NormCache,
    attn: AttentionCache,
    norm2: NormCache,
    b: Array2<f64>,
    pre_act: Array2<f64>,
    act: Array2<f64>,
}

impl LayerCache {
    pub fn attention(&self) -> &AttentionCache {
        &self.attn
    }
}

pub fn layer_forward(
    x: ArrayView2<f64>,
    p: &EncoderLayerParams,
    n_heads: usize,
) -> (Array2<f64>, LayerCache) {
    let (a, norm1) = layer_norm(x, &p.norm1_gain, &p.norm1_bias);
    let (o, attn) = attention(a, p, n_heads);
    let y = &x + &o;
    let (b, norm2) = layer_norm(y.view(), &p.norm2_gain, &p.norm2_bias);
    let pre_act = b.dot(&p.ffn_in) + &p.ffn_in_bias;
    let act = pre_act.mapv(gelu);
    let out = y + act.dot(&p.ffn_out) + &p.ffn_out_bias;
    (out, LayerCache { norm1, attn, norm2, b, pre_act, act })
}

/// Accumulates into `g` and returns the gradient w.r.t. the layer input.
pub fn layer_backward(
    dout: ArrayView2<f64>,
    p: &EncoderLayerParams,
    c: &LayerCache,
    g: &mut EncoderLayerParams,
) -> Array2<f64> {
    g.ffn_out += &c.act.t().dot(&dout);
    g.ffn_out_bias += &dout.sum_axis(Axis(0));
    let mut dh = dout.dot(&p.ffn_out.t());
    ndarray::Zip::from(&mut dh).and(&c.pre_act).for_each(|d, &z| *d *= gelu_grad(z));
    g.ffn_in += &c.b.t().dot(&dh);
    g.ffn_in_bias += &dh.sum_axis(Axis(0));
    let db = dh.dot(&p.ffn_in.t());
    let (dy_norm, dg2, db2) = layer_norm_backward(db.view(), &p.norm2_gain, &c.norm2);
    g.norm2_gain += &dg2;
    g.norm2_bias += &db2;
    let dy = &dout + &dy_norm;
    let da = attention_backward(dy.view(), p, &c.attn, g);
    let (dx_norm, dg1, db1) = layer_norm_backward(da.view(), &p.norm1_gain, &c.norm1);
    g.norm1_gain += &dg1;
    g.norm1_bias += &db1;
    dy + dx_norm
}
