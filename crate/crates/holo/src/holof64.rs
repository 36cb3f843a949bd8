//! Exact floating-point sidecar: the 8-byte magic `HOLOF64\0`, height and
//! width as little-endian `u32`, then row-major little-endian `f64` samples.

use std::fs;
use std::path::Path;

use holo_core::Grid2;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"HOLOF64\0";
pub const HEADER_LEN: usize = 16;

pub fn encode(grid: &Grid2<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(grid.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.cols() as u32).to_le_bytes());
    for v in grid.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<Grid2<f64>, String> {
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err("missing HOLOF64 header".into());
    }
    let rows = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != 8 * rows * cols {
        return Err(format!("{} data bytes for a {rows}x{cols} grid", body.len()));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Grid2::from_vec(rows, cols, data).map_err(|e| e.to_string())
}

pub fn write(path: &Path, grid: &Grid2<f64>) -> Result<()> {
    fs::write(path, encode(grid)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Grid2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::format(path, m))
}
