use ndarray::Array2;
use rustfft::{num_complex::Complex64, FftPlanner};

use super::{center, check_book, difference_of, TokenGrid, TokenizerError};
use crate::wavebook::Wavebook;

/// Frequency-domain tokenizer. Same contract as [`super::tokenize`]; the
/// series spectrum is computed once and reused for every basis row.
pub fn tokenize_fft(x: &[f64], book: &Wavebook) -> Result<TokenGrid, TokenizerError> {
    if x.is_empty() {
        return Err(TokenizerError::EmptyInput);
    }
    check_book(book)?;
    let l = x.len();
    let n_max = book.bases.iter().map(Vec::len).max().unwrap_or(2);
    let size = (l + n_max - 1).next_power_of_two();

    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let mut spectrum = vec![Complex64::new(0.0, 0.0); size];
    for (s, &v) in spectrum.iter_mut().zip(x) {
        s.re = v;
    }
    forward.process(&mut spectrum);

    let mut values = Array2::zeros((book.lambda, l));
    let mut buf = vec![Complex64::new(0.0, 0.0); size];
    let norm = 1.0 / size as f64;
    for (i, (basis, &s)) in book.bases.iter().zip(&book.scales).enumerate() {
        let n = basis.len();
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (b, &a) in buf.iter_mut().zip(basis) {
            b.re = a;
        }
        forward.process(&mut buf);
        for (b, sx) in buf.iter_mut().zip(&spectrum) {
            *b *= sx;
        }
        inverse.process(&mut buf);
        let c: Vec<f64> = buf[..l + n - 1].iter().map(|z| z.re * norm).collect();
        let row = center(&difference_of(&c, s), l, n);
        values.row_mut(i).iter_mut().zip(row).for_each(|(v, p)| *v = p);
    }
    Ok(TokenGrid { values, wavebook_id: book.id() })
}
