//! Synthetic test objects.
//!
//! Objects are transmittances on a clear (unit) background, so that the
//! empty part of the field does not scatter.

use alloc::vec::Vec;

use crate::error::Result;
use crate::grid::Grid2;
use crate::optics::{ComplexField, OpticalConfig};

/// Parameters of the disk phase fixture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiskParams {
    /// Disk radius as a fraction of the smaller grid dimension.
    pub radius_frac: f64,
    /// Amplitude outside the disk; `1.0` gives a pure phase object.
    pub outside_amplitude: f64,
    /// Peak of the Gaussian phase bump, radians.
    pub phase_peak: f64,
    /// Standard deviation of the bump as a fraction of the smaller dimension.
    pub phase_sigma_frac: f64,
}

impl Default for DiskParams {
    fn default() -> Self {
        Self {
            radius_frac: 0.3,
            outside_amplitude: 0.5,
            phase_peak: 0.5,
            phase_sigma_frac: 0.06,
        }
    }
}

impl DiskParams {
    /// Uniform-amplitude variant used as a weak phase object.
    pub fn weak_phase() -> Self {
        Self {
            outside_amplitude: 1.0,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TargetKind {
    /// Opaque three-bar groups at several scales.
    Bars,
    /// Opaque pi glyph.
    Pi,
    /// Amplitude disk carrying a Gaussian phase bump.
    Disk(DiskParams),
}

/// Bar thickness and top-left corner of each three-bar element.
fn bar_layout(height: usize, width: usize) -> Vec<(usize, usize, usize)> {
    let n = height.min(width) as f64;
    let mut widths = Vec::new();
    let mut w = n / 24.0;
    while w >= 1.0 && widths.len() < 6 {
        let px = libm::round(w) as usize;
        if widths.last() != Some(&px) {
            widths.push(px);
        }
        w /= core::f64::consts::SQRT_2;
    }
    if widths.is_empty() {
        widths.push(1);
    }
    // Pack elements left to right in rows; an element is a 5w x 5w block of
    // horizontal bars next to a 5w x 5w block of vertical bars.
    let margin = (height.min(width) / 16).max(1);
    let mut placed = Vec::new();
    let (mut x, mut y, mut row_height) = (margin, margin, 0);
    for w in widths {
        let (ew, eh) = (11 * w, 5 * w);
        if x + ew + margin > width {
            x = margin;
            y += row_height + 2 * margin;
            row_height = 0;
        }
        if y + eh + margin > height || x + ew + margin > width {
            break;
        }
        placed.push((w, y, x));
        x += ew + 2 * margin;
        row_height = row_height.max(eh);
    }
    // Centre the used area vertically.
    if let Some(bottom) = placed.iter().map(|&(w, y, _)| y + 5 * w).max() {
        let shift = (height - bottom - margin) / 2;
        for p in placed.iter_mut() {
            p.1 += shift;
        }
    }
    placed
}

fn bars_amplitude(height: usize, width: usize) -> Grid2<f64> {
    let mut amp = Grid2::filled(height, width, 1.0);
    for (w, top, left) in bar_layout(height, width) {
        for k in 0..3 {
            // Horizontal bars.
            for r in top + 2 * k * w..top + (2 * k + 1) * w {
                for c in left..left + 5 * w {
                    amp[(r, c)] = 0.0;
                }
            }
            // Vertical bars.
            let vleft = left + 6 * w;
            for r in top..top + 5 * w {
                for c in vleft + 2 * k * w..vleft + (2 * k + 1) * w {
                    amp[(r, c)] = 0.0;
                }
            }
        }
    }
    amp
}

fn pi_amplitude(height: usize, width: usize) -> Grid2<f64> {
    let h = height as f64;
    let w = width as f64;
    Grid2::from_fn(height, width, |r, c| {
        let y = (r as f64 + 0.5) / h;
        let x = (c as f64 + 0.5) / w;
        let top = (0.25..0.34).contains(&y) && (0.2..0.8).contains(&x);
        let left_leg = (0.34..0.76).contains(&y) && (0.33..0.42).contains(&x);
        let right_leg = (0.34..0.76).contains(&y) && (0.58..0.67).contains(&x);
        let foot = (0.68..0.76).contains(&y) && (0.58..0.74).contains(&x);
        if top || left_leg || right_leg || foot { 0.0 } else { 1.0 }
    })
}

fn disk_field(height: usize, width: usize, p: &DiskParams) -> (Grid2<f64>, Grid2<f64>) {
    let n = height.min(width) as f64;
    let (cy, cx) = (height as f64 / 2.0, width as f64 / 2.0);
    let radius = p.radius_frac * n;
    let sigma = p.phase_sigma_frac * n;
    let r2 = |r: usize, c: usize| {
        let dy = r as f64 + 0.5 - cy;
        let dx = c as f64 + 0.5 - cx;
        dy * dy + dx * dx
    };
    let amplitude = Grid2::from_fn(height, width, |r, c| {
        if r2(r, c) <= radius * radius { 1.0 } else { p.outside_amplitude }
    });
    let phase = Grid2::from_fn(height, width, |r, c| p.phase_peak * libm::exp(-r2(r, c) / (2.0 * sigma * sigma)));
    (amplitude, phase)
}

/// Amplitude and phase maps of a synthetic target.
pub fn target_maps(kind: &TargetKind, height: usize, width: usize) -> (Grid2<f64>, Grid2<f64>) {
    match kind {
        TargetKind::Bars => (bars_amplitude(height, width), Grid2::zeros(height, width)),
        TargetKind::Pi => (pi_amplitude(height, width), Grid2::zeros(height, width)),
        TargetKind::Disk(p) => disk_field(height, width, p),
    }
}

/// Builds the transmittance of a synthetic target on the configured grid.
pub fn generate_target(kind: &TargetKind, config: &OpticalConfig) -> Result<ComplexField> {
    let (amplitude, phase) = target_maps(kind, config.height, config.width);
    ComplexField::from_amplitude_phase(&amplitude, &phase, *config)
}

/// Transmittance from explicit maps, e.g. imported images.
pub fn from_maps(amplitude: &Grid2<f64>, phase: &Grid2<f64>, config: &OpticalConfig) -> Result<ComplexField> {
    ComplexField::from_amplitude_phase(amplitude, phase, *config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize) -> OpticalConfig {
        OpticalConfig::new(532e-9, 1.2e-2, 4e-6, n, n).unwrap()
    }

    #[test]
    fn disk_has_unit_amplitude_inside_and_bump_peak() {
        let p = DiskParams::default();
        let (amp, phase) = target_maps(&TargetKind::Disk(p), 64, 64);
        assert_eq!(amp[(32, 32)], 1.0);
        assert_eq!(amp[(0, 0)], p.outside_amplitude);
        let peak = phase.iter().cloned().fold(f64::MIN, f64::max);
        assert!((peak - 0.5).abs() < 0.01);
    }

    #[test]
    fn bars_are_binary_and_have_several_scales() {
        for n in [128, 1000] {
            let layout = bar_layout(n, n);
            assert!(layout.len() >= 3, "{n}: {layout:?}");
            let (amp, phase) = target_maps(&TargetKind::Bars, n, n);
            assert!(amp.iter().all(|&a| a == 0.0 || a == 1.0));
            assert!(phase.iter().all(|&p| p == 0.0));
            let opaque = amp.iter().filter(|&&a| a == 0.0).count();
            assert!(opaque > n * n / 50);
        }
        let field = generate_target(&TargetKind::Bars, &cfg(1000)).unwrap();
        assert_eq!(field.values.shape(), (1000, 1000));
    }

    #[test]
    fn pi_glyph_is_opaque_on_clear_background() {
        let (amp, _) = target_maps(&TargetKind::Pi, 64, 64);
        assert_eq!(amp[(0, 0)], 1.0);
        assert_eq!(amp[(19, 32)], 0.0);
    }
}
