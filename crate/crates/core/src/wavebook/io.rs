//! Little-endian `.wqbk` wavebook files.
//!
//! Layout: magic `WQBK`, `u32` version, `u32 m`, `u32 λ`, `f64 f_c`, then λ
//! records `(u32 n_i, n_i × f64)`, then `u32 2^m` and the mother amplitudes.

use std::fs;
use std::path::Path;

use super::book::{compute_scales, mother_digest, Wavebook};
use super::mother::{grid_step, MotherWavelet};
use super::WavebookError;

pub const MAGIC: &[u8; 4] = b"WQBK";
pub const VERSION: u32 = 1;

pub fn encode_wavebook(book: &Wavebook) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&book.m().to_le_bytes());
    out.extend_from_slice(&(book.lambda as u32).to_le_bytes());
    out.extend_from_slice(&book.f_c.to_le_bytes());
    for basis in &book.bases {
        out.extend_from_slice(&(basis.len() as u32).to_le_bytes());
        for v in basis {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&(book.mother.amplitudes.len() as u32).to_le_bytes());
    for v in &book.mother.amplitudes {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_wavebook(bytes: &[u8]) -> Result<Wavebook, WavebookError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(r.error(0, format!("bad magic {magic:?}, expected \"WQBK\"")));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(WavebookError::Version { expected: VERSION, found: version });
    }
    let m = r.u32("m")?;
    let lambda_at = r.offset;
    let lambda = r.u32("lambda")? as usize;
    let f_c = r.f64("f_c")?;
    if lambda == 0 {
        return Err(r.error(lambda_at, "wavebook size is zero".into()));
    }
    if !(4..=30).contains(&m) {
        return Err(r.error(8, format!("resolution exponent {m} out of range")));
    }
    let mut bases = Vec::with_capacity(lambda);
    for i in 0..lambda {
        let at = r.offset;
        let n = r.u32("basis length")? as usize;
        if n < 2 || n % 2 != 0 {
            return Err(r.error(at, format!("basis {} has invalid length {n}", i + 1)));
        }
        bases.push(r.f64_vec(n, "basis values")?);
    }
    let at = r.offset;
    let len = r.u32("mother length")? as usize;
    if len != 1usize << m {
        return Err(r.error(at, format!("mother length {len} does not equal 2^{m}")));
    }
    let amplitudes = r.f64_vec(len, "mother amplitudes")?;
    if r.offset != bytes.len() {
        return Err(r.error(r.offset, format!("{} trailing bytes", bytes.len() - r.offset)));
    }
    let mother = MotherWavelet { amplitudes, m, step: grid_step(m), f_c };
    let scales = compute_scales(f_c, lambda)
        .map_err(|e| WavebookError::Format { offset: 16, message: e.to_string() })?;
    let mother_id = mother_digest(&mother);
    Ok(Wavebook { lambda, f_c, scales, bases, mother, mother_id })
}

pub fn save_wavebook(book: &Wavebook, path: impl AsRef<Path>) -> Result<(), WavebookError> {
    fs::write(path, encode_wavebook(book))?;
    Ok(())
}

pub fn load_wavebook(path: impl AsRef<Path>) -> Result<Wavebook, WavebookError> {
    decode_wavebook(&fs::read(path)?)
}

/// Cursor over a byte slice that reports the offset of every failure.
pub(crate) struct ByteReader<'a> {
    bytes: &'a [u8],
    pub offset: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        ByteReader { bytes, offset: 0 }
    }

    pub fn error(&self, offset: usize, message: String) -> WavebookError {
        WavebookError::Format { offset, message }
    }

    pub fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], WavebookError> {
        let end = self.offset.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.offset..end];
                self.offset = end;
                Ok(s)
            }
            None => Err(self.error(
                self.offset,
                format!("truncated while reading {what}: need {n} bytes, {} left", self.bytes.len() - self.offset),
            )),
        }
    }

    pub fn u32(&mut self, what: &str) -> Result<u32, WavebookError> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64(&mut self, what: &str) -> Result<f64, WavebookError> {
        let b = self.take(8, what)?;
        Ok(f64::from_le_bytes(b.try_into().unwrap()))
    }

    pub fn f64_vec(&mut self, n: usize, what: &str) -> Result<Vec<f64>, WavebookError> {
        let b = self.take(n.checked_mul(8).unwrap_or(usize::MAX), what)?;
        Ok(b.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavebook::{build_filter_pair, build_wavebook, cascade_mother, filter};

    fn sample_book() -> Wavebook {
        let fp = build_filter_pair(&filter::db2()).unwrap();
        let w = cascade_mother(&fp, 6).unwrap();
        build_wavebook(&w, 5).unwrap()
    }

    #[test]
    fn round_trip_through_file() {
        let book = sample_book();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("book.wqbk");
        save_wavebook(&book, &path).unwrap();
        let back = load_wavebook(&path).unwrap();
        assert_eq!(back, book);
    }

    #[test]
    fn truncated_file() {
        let bytes = encode_wavebook(&sample_book());
        for cut in [0, 3, 10, 30, bytes.len() - 1] {
            let err = decode_wavebook(&bytes[..cut]).unwrap_err();
            assert!(matches!(err, WavebookError::Format { .. }), "cut {cut}: {err}");
        }
    }

    #[test]
    fn version_mismatch_names_both() {
        let mut bytes = encode_wavebook(&sample_book());
        bytes[4..8].copy_from_slice(&7u32.to_le_bytes());
        let err = decode_wavebook(&bytes).unwrap_err();
        assert!(matches!(err, WavebookError::Version { expected: 1, found: 7 }));
        let msg = err.to_string();
        assert!(msg.contains('1') && msg.contains('7'));
    }

    #[test]
    fn header_layout() {
        let book = sample_book();
        let bytes = encode_wavebook(&book);
        assert_eq!(&bytes[..4], b"WQBK");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 6);
        assert_eq!(u32::from_le_bytes(bytes[12..16].try_into().unwrap()), 5);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), book.f_c);
        let n1 = u32::from_le_bytes(bytes[24..28].try_into().unwrap()) as usize;
        assert_eq!(n1, book.bases[0].len());
    }
}
