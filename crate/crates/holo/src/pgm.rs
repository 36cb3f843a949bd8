//! Binary portable graymaps (`P5`), 16-bit for interchange and 8-bit for
//! viewing.

use std::fs;
use std::path::Path;

use holo_core::Grid2;

use crate::error::{Error, Result};

/// Quantizes `(v - lo) / (hi - lo)`, clamped to `[0, 1]`, to `maxval` levels.
fn quantize(grid: &Grid2<f64>, lo: f64, hi: f64, maxval: u16) -> Vec<u16> {
    let span = hi - lo;
    grid.iter()
        .map(|&v| {
            let x = if span > 0.0 { (v - lo) / span } else { 0.0 };
            let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
            (x * maxval as f64).round() as u16
        })
        .collect()
}

pub fn encode(grid: &Grid2<f64>, lo: f64, hi: f64, sixteen_bit: bool) -> Vec<u8> {
    let maxval: u16 = if sixteen_bit { 65535 } else { 255 };
    let mut out = format!("P5\n{} {}\n{}\n", grid.cols(), grid.rows(), maxval).into_bytes();
    for q in quantize(grid, lo, hi, maxval) {
        if sixteen_bit {
            out.extend_from_slice(&q.to_be_bytes());
        } else {
            out.push(q as u8);
        }
    }
    out
}

/// 16-bit graymap with samples `(v - lo) / (hi - lo)` scaled to 65535.
pub fn write16(path: &Path, grid: &Grid2<f64>, lo: f64, hi: f64) -> Result<()> {
    fs::write(path, encode(grid, lo, hi, true)).map_err(|e| Error::io(path, e))
}

/// 8-bit preview.
pub fn write8(path: &Path, grid: &Grid2<f64>, lo: f64, hi: f64) -> Result<()> {
    fs::write(path, encode(grid, lo, hi, false)).map_err(|e| Error::io(path, e))
}

fn header_token<'a>(bytes: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| &bytes[start..*pos])
}

/// Decodes a `P5` graymap into values in `[0, 1]`.
pub fn decode(bytes: &[u8]) -> std::result::Result<Grid2<f64>, String> {
    let mut pos = 0;
    if header_token(bytes, &mut pos) != Some(b"P5") {
        return Err("not a binary graymap (missing P5 magic)".into());
    }
    let mut number = |what: &str| -> std::result::Result<usize, String> {
        header_token(bytes, &mut pos)
            .and_then(|t| std::str::from_utf8(t).ok())
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| format!("bad {what} in header"))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if width == 0 || height == 0 {
        return Err("empty image".into());
    }
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let bytes_per = if maxval < 256 { 1 } else { 2 };
    let need = width * height * bytes_per;
    let raster = bytes.get(pos..).unwrap_or(&[]);
    if raster.len() < need {
        return Err(format!("raster has {} bytes, expected {need}", raster.len()));
    }
    let scale = maxval as f64;
    let data = (0..width * height)
        .map(|i| {
            let v = if bytes_per == 1 {
                raster[i] as u16
            } else {
                u16::from_be_bytes([raster[2 * i], raster[2 * i + 1]])
            };
            (v as f64 / scale).min(1.0)
        })
        .collect();
    Grid2::from_vec(height, width, data).map_err(|e| e.to_string())
}

pub fn read(path: &Path) -> Result<Grid2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_byte_order() {
        let g = Grid2::from_vec(1, 2, vec![0.0, 1.0]).unwrap();
        let b = encode(&g, 0.0, 1.0, true);
        assert_eq!(&b[..], b"P5\n2 1\n65535\n\x00\x00\xff\xff");
        let g = Grid2::from_vec(1, 2, vec![0.5, 2.0]).unwrap();
        assert_eq!(&encode(&g, 0.0, 1.0, true)[13..], &[0x80, 0x00, 0xff, 0xff]);
        assert_eq!(&encode(&g, 0.0, 1.0, false)[..], b"P5\n2 1\n255\n\x80\xff");
    }

    #[test]
    fn comments_and_eight_bit_input() {
        let bytes = b"P5 # made by hand\n3 1\n# depth\n255\n\x00\x33\xff";
        let g = decode(bytes).unwrap();
        assert_eq!(g.as_slice(), &[0.0, 0.2, 1.0]);
    }

    #[test]
    fn malformed_inputs() {
        assert!(decode(b"P2\n1 1\n255\n0").is_err());
        assert!(decode(b"P5\n2 2\n255\n\x00").is_err());
        assert!(decode(b"P5\n2 x\n255\n\x00").is_err());
        assert!(decode(b"P5\n1 1\n70000\n\x00\x00").is_err());
    }
}
