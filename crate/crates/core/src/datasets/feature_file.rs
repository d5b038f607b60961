//! Flat feature vector files.
//!
//! Layout, little-endian, no padding:
//!
//! ```text
//! offset  size   field
//! 0       4      magic "F2SF"
//! 4       4      version (u32) = 1
//! 8       4      dim (u32)
//! 12      4*dim  f32 values
//! ```

use std::fs;
use std::path::Path;

use crate::error::{F2sError, Result};
use crate::numerics::Tensor1;

pub const MAGIC: &[u8; 4] = b"F2SF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 12;

pub fn encode_features(v: &Tensor1) -> Result<Vec<u8>> {
    if let Some(i) = v.iter().position(|x| !x.is_finite()) {
        return Err(F2sError::data(format!("feature value {i} is not finite")));
    }
    let dim = u32::try_from(v.len()).map_err(|_| F2sError::data("feature vector too long"))?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * v.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim.to_le_bytes());
    for &x in v.iter() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_features(bytes: &[u8], path: &Path) -> Result<Tensor1> {
    let err = |offset: usize, message: String| F2sError::Format {
        path: path.to_path_buf(),
        offset: offset as u64,
        message,
    };
    if bytes.len() < HEADER_LEN {
        return Err(err(bytes.len(), format!("file is {} bytes, header needs {HEADER_LEN}", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(err(0, format!("bad magic {:?}", &bytes[0..4])));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(err(4, format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + 4 * dim;
    if bytes.len() < expected {
        return Err(err(bytes.len(), format!("truncated: dim {dim} needs {expected} bytes, found {}", bytes.len())));
    }
    if bytes.len() > expected {
        return Err(err(expected, format!("{} trailing bytes after {dim} values", bytes.len() - expected)));
    }
    let values: Vec<f32> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    if let Some(i) = values.iter().position(|x| !x.is_finite()) {
        return Err(err(HEADER_LEN + 4 * i, "non-finite value".into()));
    }
    Ok(Tensor1::from_f32(&values))
}

pub fn write_feature_file(path: impl AsRef<Path>, v: &Tensor1) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_features(v)?;
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| F2sError::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| F2sError::io(path, e))
}

pub fn read_feature_file(path: impl AsRef<Path>) -> Result<Tensor1> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| F2sError::io(path, e))?;
    decode_features(&bytes, path)
}
