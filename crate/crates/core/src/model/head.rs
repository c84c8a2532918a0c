use ndarray::{Array1, Array2, ArrayView2, Axis};

use super::params::{HeadKind, HeadParams};

#[derive(Debug, Clone)]
pub struct HeadCache {
    features: Array1<f64>,
}

/// Row-major flattening of the `λ × l` grid: index `i·l + j`. `z` is `l × λ`.
pub fn flatten(z: ArrayView2<f64>) -> Array1<f64> {
    z.t().iter().copied().collect()
}

pub fn head_forward(z: ArrayView2<f64>, p: &HeadParams) -> (Array1<f64>, HeadCache) {
    let features = match p.kind {
        HeadKind::Forecast { .. } | HeadKind::Impute => flatten(z),
        HeadKind::Classify { .. } => z.mean_axis(Axis(0)).expect("at least one token"),
    };
    let out = features.dot(&p.weight) + &p.bias;
    (out, HeadCache { features })
}

/// Accumulates into `g` and returns the gradient w.r.t. the `l × λ` input.
pub fn head_backward(
    dout: &Array1<f64>,
    p: &HeadParams,
    c: &HeadCache,
    l: usize,
    g: &mut HeadParams,
) -> Array2<f64> {
    let lambda = match p.kind {
        HeadKind::Classify { .. } => p.weight.nrows(),
        _ => p.weight.nrows() / l,
    };
    for (r, &f) in c.features.iter().enumerate() {
        if f != 0.0 {
            g.weight.row_mut(r).scaled_add(f, dout);
        }
    }
    g.bias += dout;
    let dfeat = p.weight.dot(dout);
    match p.kind {
        HeadKind::Classify { .. } => {
            let row = dfeat / l as f64;
            Array2::from_shape_fn((l, lambda), |(_, i)| row[i])
        }
        _ => {
            let grid = dfeat.into_shape((lambda, l)).expect("head weight rows equal λ·l");
            grid.t().as_standard_layout().into_owned()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_is_grid_row_major() {
        // z is l×λ with l = 2, λ = 3; grid[i][j] = z[j][i]
        let z = Array2::from_shape_vec((2, 3), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        assert_eq!(flatten(z.view()).to_vec(), vec![1.0, 4.0, 2.0, 5.0, 3.0, 6.0]);
    }

    #[test]
    fn zero_weights_output_bias() {
        let kind = HeadKind::Forecast { horizon: 3 };
        let p = HeadParams {
            kind,
            weight: Array2::zeros((8, 3)),
            bias: Array1::from_vec(vec![1.0, 2.0, 3.0]),
        };
        let z = Array2::from_elem((2, 4), 7.0);
        assert_eq!(head_forward(z.view(), &p).0.to_vec(), vec![1.0, 2.0, 3.0]);
    }
}
