//! Lengths with explicit unit suffixes.

use crate::error::{Error, Result};

const SUFFIXES: [(&str, f64); 6] = [
    ("nm", 1e-9),
    ("um", 1e-6),
    ("µm", 1e-6),
    ("mm", 1e-3),
    ("cm", 1e-2),
    ("m", 1.0),
];

/// Parses `532nm`, `4um`, `1.2cm`, `-15 µm` or `0.0015m` into meters. A bare
/// number is rejected so that a wavelength can never be misread by a
/// factor of a thousand.
pub fn parse_length(text: &str) -> Result<f64> {
    let t = text.trim();
    for (suffix, scale) in SUFFIXES {
        if let Some(number) = t.strip_suffix(suffix) {
            let value: f64 = number
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("cannot parse length {text:?}")))?;
            if !value.is_finite() {
                return Err(Error::Config(format!("length {text:?} is not finite")));
            }
            return Ok(value * scale);
        }
    }
    Err(Error::Config(format!(
        "length {text:?} needs a unit suffix (nm, um, mm, cm or m)"
    )))
}

/// Lossless representation in meters, for manifests.
pub fn format_meters(value: f64) -> String {
    format!("{value:e}m")
}

/// Human-readable echo such as `532 nm`.
pub fn describe_length(value: f64) -> String {
    let a = value.abs();
    let (scale, unit) = if a == 0.0 || a >= 1.0 {
        (1.0, "m")
    } else if a >= 1e-2 {
        (1e-2, "cm")
    } else if a >= 1e-3 {
        (1e-3, "mm")
    } else if a >= 1e-6 {
        (1e-6, "um")
    } else {
        (1e-9, "nm")
    };
    let v = value / scale;
    let rounded = (v * 1e6).round() / 1e6;
    format!("{rounded} {unit}")
}
