//! Parameter container file: every named tensor of a model in registration
//! order.
//!
//! Layout, little-endian:
//!
//! ```text
//! magic   4 bytes  "MTMP"
//! version u32      currently 1
//! count   u32
//! then per parameter:
//!   name_len u32, name utf-8 bytes,
//!   rank u8, dims rank x u64, data f64 row-major
//! ```

use std::path::Path;

use mtmv_core::params::ParamStore;
use mtmv_core::Tensor;

use crate::error::{CliError, Result};

const MAGIC: [u8; 4] = *b"MTMP";
const VERSION: u32 = 1;

pub fn save_params(store: &ParamStore, path: &Path) -> Result<()> {
    let mut out: Vec<u8> = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(store.len() as u32).to_le_bytes());
    for (_, name, value) in store.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.push(value.rank() as u8);
        for &d in value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for &v in value.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(())
}

pub fn load_params(path: &Path) -> Result<Vec<(String, Tensor)>> {
    let bytes =
        std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let ctx = path.display().to_string();
    let mut pos = 0usize;
    let take = |pos: &mut usize, len: usize| -> Result<&[u8]> {
        if *pos + len > bytes.len() {
            return Err(CliError::Data(format!("{ctx}: truncated parameter file")));
        }
        let slice = &bytes[*pos..*pos + len];
        *pos += len;
        Ok(slice)
    };
    if take(&mut pos, 4)? != MAGIC {
        return Err(CliError::Data(format!("{ctx}: bad magic, expected MTMP")));
    }
    let version = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap());
    if version != VERSION {
        return Err(CliError::Data(format!("{ctx}: unsupported version {version}")));
    }
    let count = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = u32::from_le_bytes(take(&mut pos, 4)?.try_into().unwrap()) as usize;
        let name = String::from_utf8(take(&mut pos, name_len)?.to_vec())
            .map_err(|_| CliError::Data(format!("{ctx}: parameter name is not utf-8")))?;
        let rank = take(&mut pos, 1)?[0] as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(u64::from_le_bytes(take(&mut pos, 8)?.try_into().unwrap()) as usize);
        }
        let numel: usize = dims.iter().product();
        let payload = take(&mut pos, numel * 8)?;
        let data: Vec<f64> =
            payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let tensor =
            Tensor::new(dims, data).map_err(|e| CliError::Data(format!("{ctx}: {name}: {e}")))?;
        out.push((name, tensor));
    }
    if pos != bytes.len() {
        return Err(CliError::Data(format!("{ctx}: trailing bytes after last parameter")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_names_order_and_bits() {
        let mut store = ParamStore::new();
        store.register("a/w", Tensor::new(vec![2, 2], vec![1.0, -0.5, 3.25, 0.0]).unwrap()).unwrap();
        store.register("b", Tensor::new(vec![3], vec![0.1, 0.2, 0.3]).unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.mtmvp");
        save_params(&store, &path).unwrap();
        let loaded = load_params(&path).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].0, "a/w");
        assert_eq!(loaded[0].1, store.value(mtmv_core::params::ParamId(0)).clone());
        assert_eq!(loaded[1].0, "b");
    }
}
