//! Binary parameter checkpoints.
//!
//! Layout (all integers little-endian `u32`):
//!
//! ```text
//! magic        8 bytes   b"FLATCKPT"
//! version      u32       1
//! meta_len     u32       byte length of the metadata block
//! meta         meta_len  UTF-8 JSON, opaque to this module
//! n_arrays     u32
//! n_arrays times:
//!   name_len   u32
//!   name       name_len  UTF-8
//!   ndim       u32       always 2
//!   dims       ndim x u32
//!   values     prod(dims) x f32 little-endian, row-major
//! ```

use std::io::{Read, Write};
use std::path::Path;

use super::{Init, ParamStore, Tensor};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"FLATCKPT";
pub const VERSION: u32 = 1;

pub fn write_checkpoint(w: &mut impl Write, meta: &str, params: &ParamStore) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(meta.len() as u32).to_le_bytes())?;
    w.write_all(meta.as_bytes())?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (_, p) in params.iter() {
        w.write_all(&(p.name.len() as u32).to_le_bytes())?;
        w.write_all(p.name.as_bytes())?;
        w.write_all(&2u32.to_le_bytes())?;
        w.write_all(&(p.value.rows() as u32).to_le_bytes())?;
        w.write_all(&(p.value.cols() as u32).to_le_bytes())?;
        for &v in p.value.data() {
            w.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)
        .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(u32::from_le_bytes(b))
}

fn read_bytes(r: &mut impl Read, n: usize) -> Result<Vec<u8>> {
    let mut buf = vec![0u8; n];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated file: {e}")))?;
    Ok(buf)
}

fn read_string(r: &mut impl Read, n: usize) -> Result<String> {
    String::from_utf8(read_bytes(r, n)?).map_err(|e| Error::Checkpoint(format!("bad UTF-8: {e}")))
}

/// Reads a checkpoint into its metadata string and a parameter store whose
/// insertion order follows the file.
pub fn read_checkpoint(r: &mut impl Read) -> Result<(String, ParamStore)> {
    let magic = read_bytes(r, MAGIC.len())?;
    if magic != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    let meta_len = read_u32(r)? as usize;
    let meta = read_string(r, meta_len)?;
    let n = read_u32(r)? as usize;
    let mut store = ParamStore::new();
    for _ in 0..n {
        let name_len = read_u32(r)? as usize;
        let name = read_string(r, name_len)?;
        let ndim = read_u32(r)?;
        if ndim != 2 {
            return Err(Error::Checkpoint(format!("{name}: expected 2 dims, found {ndim}")));
        }
        let rows = read_u32(r)? as usize;
        let cols = read_u32(r)? as usize;
        let raw = read_bytes(r, rows * cols * 4)?;
        let data = raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect();
        store.insert(name, Tensor::from_vec(rows, cols, data)?, Init::Zeros)?;
    }
    Ok((meta, store))
}

pub fn save(path: &Path, meta: &str, params: &ParamStore) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_checkpoint(&mut w, meta, params)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(String, ParamStore)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&mut std::io::BufReader::new(file))
}
