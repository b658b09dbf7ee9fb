//! Model files.
//!
//! ```text
//! magic        8 bytes  "HDADCNN\0"
//! version      u32 LE
//! arch         4 x u32 LE (input channels, width, levels, block)
//! fingerprint  32 bytes
//! count        u64 LE
//! weights      count x f32 LE, per layer weights then bias
//! ```

use std::path::Path;

use crate::error::{NnError, Result};
use crate::model::{ArchConfig, ModelParams};
use crate::tensor::Scalar;

pub const MAGIC: &[u8; 8] = b"HDADCNN\0";
pub const FORMAT_VERSION: u32 = 1;

pub fn encode_model<T: Scalar>(model: &ModelParams<T>) -> Vec<u8> {
    let a = model.arch();
    let mut out = Vec::with_capacity(64 + 4 * model.parameter_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    for v in [a.input_channels, a.width, a.levels, a.block] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&model.fingerprint());
    out.extend_from_slice(&(model.parameter_count() as u64).to_le_bytes());
    for v in model.values() {
        out.extend_from_slice(&(v.to_f64() as f32).to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        if self.bytes.len() < n {
            return None;
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Some(head)
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }
}

pub fn decode_model(bytes: &[u8], path: &Path) -> Result<ModelParams<f64>> {
    let format = |message: &str| NnError::Format {
        path: path.to_path_buf(),
        message: message.into(),
    };
    let truncated = || format("truncated");
    let mut cur = Cursor { bytes };
    if cur.take(MAGIC.len()) != Some(MAGIC.as_slice()) {
        return Err(format("bad magic"));
    }
    let version = cur.u32().ok_or_else(truncated)?;
    if version != FORMAT_VERSION {
        return Err(NnError::Version {
            path: path.to_path_buf(),
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut dims = [0usize; 4];
    for d in &mut dims {
        *d = cur.u32().ok_or_else(truncated)? as usize;
    }
    let arch = ArchConfig {
        input_channels: dims[0],
        width: dims[1],
        levels: dims[2],
        block: dims[3],
    };
    arch.validate().map_err(|e| format(&e.to_string()))?;
    let fingerprint = cur.take(32).ok_or_else(truncated)?;
    if fingerprint != arch.fingerprint() {
        return Err(NnError::Fingerprint { path: path.to_path_buf() });
    }
    let count = cur.u64().ok_or_else(truncated)?;
    if count != arch.parameter_count() as u64 {
        return Err(format("parameter count does not match the architecture"));
    }
    let raw = cur.take(count as usize * 4).ok_or_else(truncated)?;
    if !cur.bytes.is_empty() {
        return Err(format("trailing bytes"));
    }
    let values: Vec<f64> = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    ModelParams::from_flat(arch, &values)
}

pub fn save_model<T: Scalar>(model: &ModelParams<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| NnError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, encode_model(model)).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<ModelParams<f64>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| NnError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_model(&bytes, path)
}

/// Loads a model and requires it to have the given architecture.
pub fn load_model_for(path: impl AsRef<Path>, arch: &ArchConfig) -> Result<ModelParams<f64>> {
    let path = path.as_ref();
    let model = load_model(path)?;
    if model.fingerprint() != arch.fingerprint() {
        return Err(NnError::Fingerprint { path: path.to_path_buf() });
    }
    Ok(model)
}
