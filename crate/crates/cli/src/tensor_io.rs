//! Binary tensor file format.
//!
//! Layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "MTMV"
//! version u32      currently 1
//! rank    u8
//! dims    rank x u64
//! data    product(dims) x f64, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use mtmv_core::Tensor;

use crate::error::{CliError, Result};

pub const MAGIC: [u8; 4] = *b"MTMV";
pub const VERSION: u32 = 1;

/// Serializes a tensor into the binary layout.
pub fn tensor_to_bytes(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(4 + 4 + 1 + 8 * t.rank() + 8 * t.numel());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(t.rank() as u8);
    for &d in t.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses the binary layout; errors carry `context` (normally the path).
pub fn tensor_from_bytes(bytes: &[u8], context: &str) -> Result<Tensor> {
    let mut cursor = bytes;
    let mut magic = [0u8; 4];
    read_exact(&mut cursor, &mut magic, context, "magic")?;
    if magic != MAGIC {
        return Err(CliError::Data(format!(
            "{context}: bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let mut v4 = [0u8; 4];
    read_exact(&mut cursor, &mut v4, context, "version")?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(CliError::Data(format!(
            "{context}: unsupported version {version}, expected {VERSION}"
        )));
    }
    let mut rank_b = [0u8; 1];
    read_exact(&mut cursor, &mut rank_b, context, "rank")?;
    let rank = rank_b[0] as usize;
    let mut dims = Vec::with_capacity(rank);
    for i in 0..rank {
        let mut d8 = [0u8; 8];
        read_exact(&mut cursor, &mut d8, context, &format!("dimension {i}"))?;
        dims.push(u64::from_le_bytes(d8) as usize);
    }
    let numel: usize = dims.iter().product();
    let expected = numel * 8;
    if cursor.len() != expected {
        return Err(CliError::Data(format!(
            "{context}: declared shape {dims:?} expects {expected} payload bytes, found {}",
            cursor.len()
        )));
    }
    let mut data = Vec::with_capacity(numel);
    for chunk in cursor.chunks_exact(8) {
        data.push(f64::from_le_bytes(chunk.try_into().expect("chunk of 8")));
    }
    Tensor::new(dims, data).map_err(|e| CliError::Data(format!("{context}: {e}")))
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8], context: &str, what: &str) -> Result<()> {
    cursor
        .read_exact(buf)
        .map_err(|_| CliError::Data(format!("{context}: truncated while reading {what}")))
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    file.write_all(&tensor_to_bytes(t))
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    tensor_from_bytes(&bytes, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_bytes_for_a_small_tensor() {
        let t = Tensor::new(vec![2, 2], vec![1.0, 0.5, -2.0, 0.0]).unwrap();
        let bytes = tensor_to_bytes(&t);
        let mut expected = Vec::new();
        expected.extend_from_slice(b"MTMV");
        expected.extend_from_slice(&1u32.to_le_bytes());
        expected.push(2u8);
        expected.extend_from_slice(&2u64.to_le_bytes());
        expected.extend_from_slice(&2u64.to_le_bytes());
        for v in [1.0f64, 0.5, -2.0, 0.0] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        assert_eq!(bytes, expected);
        assert_eq!(tensor_from_bytes(&bytes, "golden").unwrap(), t);
    }

    #[test]
    fn bad_magic_and_truncation() {
        let t = Tensor::new(vec![3], vec![1.0, 2.0, 3.0]).unwrap();
        let mut bytes = tensor_to_bytes(&t);
        bytes[0] = b'X';
        assert!(matches!(tensor_from_bytes(&bytes, "x"), Err(CliError::Data(_))));

        let bytes = tensor_to_bytes(&t);
        let truncated = &bytes[..bytes.len() - 4];
        let err = tensor_from_bytes(truncated, "trunc").unwrap_err();
        assert!(err.to_string().contains("expects"), "{err}");
    }

    #[test]
    fn wrong_declared_shape_names_expected_and_found() {
        let t = Tensor::new(vec![2], vec![1.0, 2.0]).unwrap();
        let mut bytes = tensor_to_bytes(&t);
        // corrupt the dim to 3 while payload stays 2 values
        let dim_offset = 4 + 4 + 1;
        bytes[dim_offset..dim_offset + 8].copy_from_slice(&3u64.to_le_bytes());
        let err = tensor_from_bytes(&bytes, "shape").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[3]") && msg.contains("24") && msg.contains("16"), "{msg}");
    }
}
