use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::params::{HeadKind, ModelConfig, ModelParams};
use super::ModelError;
use crate::wavebook::{ByteReader, WavebookError};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"WQMD";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Parameters plus the path of the wavebook they were trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub wavebook_path: Option<String>,
}

fn put(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

/// Layout (little endian): magic, u32 version, u32 λ, l, layers, d_k,
/// n_heads, d_ff, head tag (0 forecast, 1 impute, 2 classify), head size,
/// window-embed width (0 for the wavebook tokenizer), u32 path length and
/// UTF-8 path, u64 parameter count, then every tensor in declaration order.
pub fn encode_checkpoint(ck: &Checkpoint) -> Vec<u8> {
    let c = &ck.params.config;
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    for v in [c.lambda, c.lookback, c.layers, c.d_k, c.n_heads, c.d_ff] {
        put(&mut out, v);
    }
    let (tag, size) = match c.head {
        HeadKind::Forecast { horizon } => (0, horizon),
        HeadKind::Impute => (1, 0),
        HeadKind::Classify { classes } => (2, classes),
    };
    put(&mut out, tag);
    put(&mut out, size);
    put(&mut out, c.window_embed.unwrap_or(0));
    let path = ck.wavebook_path.as_deref().unwrap_or("");
    put(&mut out, path.len());
    out.extend_from_slice(path.as_bytes());
    out.extend_from_slice(&(ck.params.num_params() as u64).to_le_bytes());
    for (_, t) in ck.params.tensors() {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

fn format_err(e: WavebookError) -> ModelError {
    match e {
        WavebookError::Format { offset, message } => ModelError::Format { offset, message },
        other => ModelError::Format { offset: 0, message: other.to_string() },
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Checkpoint, ModelError> {
    let mut r = ByteReader::new(bytes);
    let magic = r.take(4, "magic").map_err(format_err)?;
    if magic != CHECKPOINT_MAGIC {
        return Err(ModelError::Format { offset: 0, message: format!("bad magic {magic:?}") });
    }
    let version = r.u32("version").map_err(format_err)?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Version { expected: CHECKPOINT_VERSION, found: version });
    }
    let mut fields = [0usize; 9];
    let names =
        ["lambda", "lookback", "layers", "d_k", "n_heads", "d_ff", "head tag", "head size", "window"];
    for (f, name) in fields.iter_mut().zip(names) {
        *f = r.u32(name).map_err(format_err)? as usize;
    }
    let [lambda, lookback, layers, d_k, n_heads, d_ff, tag, size, window] = fields;
    let head = match tag {
        0 => HeadKind::Forecast { horizon: size },
        1 => HeadKind::Impute,
        2 => HeadKind::Classify { classes: size },
        t => {
            return Err(ModelError::Format { offset: 36, message: format!("unknown head tag {t}") })
        }
    };
    let config = ModelConfig {
        lambda,
        lookback,
        layers,
        d_k,
        n_heads,
        d_ff,
        head,
        window_embed: (window > 0).then_some(window),
    };
    config
        .validate()
        .map_err(|e| ModelError::Format { offset: 8, message: e.to_string() })?;
    let path_len = r.u32("path length").map_err(format_err)? as usize;
    let path_at = r.offset;
    let path = r.take(path_len, "wavebook path").map_err(format_err)?;
    let path = std::str::from_utf8(path)
        .map_err(|_| ModelError::Format { offset: path_at, message: "path is not UTF-8".into() })?
        .to_string();
    let count_at = r.offset;
    let count = r.take(8, "parameter count").map_err(format_err)?;
    let count = u64::from_le_bytes(count.try_into().unwrap()) as usize;
    // Shapes come from the config; the RNG only fills values that are overwritten.
    let mut params = ModelParams::init(config, &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| ModelError::Format { offset: 8, message: e.to_string() })?;
    if count != params.num_params() {
        return Err(ModelError::Format {
            offset: count_at,
            message: format!("parameter count {count} does not match configuration ({})", params.num_params()),
        });
    }
    for t in params.tensors_mut() {
        let vals = r.f64_vec(t.len(), "parameter tensor").map_err(format_err)?;
        t.copy_from_slice(&vals);
    }
    if r.offset != bytes.len() {
        return Err(ModelError::Format {
            offset: r.offset,
            message: format!("{} trailing bytes", bytes.len() - r.offset),
        });
    }
    Ok(Checkpoint { params, wavebook_path: (!path.is_empty()).then_some(path) })
}

pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<(), ModelError> {
    std::fs::write(path, encode_checkpoint(ck))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, ModelError> {
    decode_checkpoint(&std::fs::read(path)?)
}
