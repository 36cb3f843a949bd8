//! Quick numerical checks run by `holo selftest`.

use std::f64::consts::PI;

use holo_core::fft::Fft2;
use holo_core::metrics::{mean_edge_factor, canny_edges, CannyParams, ssim};
use holo_core::nn::{haar_down, haar_up, Tensor};
use holo_core::optics::propagate;
use holo_core::{Complex64, ComplexField, Grid2, OpticalConfig};

pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }
}

/// Deterministic, irregular test signal.
fn signal(i: usize) -> f64 {
    let x = i as f64;
    (0.7 * x).sin() + 0.5 * (1.3 * x + 0.4).cos() * (0.11 * x).sin()
}

fn fft_vs_dft() -> f64 {
    let (rows, cols) = (8, 12);
    let x: Vec<Complex64> = (0..rows * cols).map(|i| Complex64::new(signal(i), signal(i + 1000))).collect();
    let mut fast = x.clone();
    Fft2::new(rows, cols).forward(&mut fast);
    let mut worst: f64 = 0.0;
    for kr in 0..rows {
        for kc in 0..cols {
            let mut acc = Complex64::new(0.0, 0.0);
            for r in 0..rows {
                for c in 0..cols {
                    let a = -2.0 * PI * ((kr * r) as f64 / rows as f64 + (kc * c) as f64 / cols as f64);
                    acc += x[r * cols + c] * Complex64::from_polar(1.0, a);
                }
            }
            worst = worst.max((acc - fast[kr * cols + kc]).norm());
        }
    }
    worst
}

fn propagation_round_trip() -> f64 {
    let cfg = OpticalConfig::new(532e-9, 1.5e-3, 4e-6, 64, 64).expect("valid optics");
    let values = Grid2::from_fn(64, 64, |r, c| Complex64::from_polar(1.0 + 0.2 * signal(r * 64 + c), signal(r + 7 * c)));
    let field = ComplexField::new(values, cfg).expect("matching shape");
    // At this pitch every sampled frequency propagates, so nothing is lost.
    let back = propagate(&propagate(&field, cfg.distance), -cfg.distance);
    back.values
        .iter()
        .zip(field.values.iter())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).norm()))
}

fn haar_round_trip() -> f64 {
    let shape = [2, 3, 8, 6];
    let len = shape.iter().product();
    let x = Tensor::from_vec(shape, (0..len).map(signal).collect()).expect("shape");
    let y = haar_up(&haar_down(&x).expect("even")).expect("shape");
    x.data().iter().zip(y.data()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
}

fn ssim_identity() -> f64 {
    let g = Grid2::from_fn(24, 24, |r, c| 0.5 + 0.4 * signal(r * 24 + c));
    (1.0 - ssim(&g, &g, 1.0).expect("large enough")).abs()
}

fn edge_factor_mean() -> f64 {
    let g = Grid2::from_fn(32, 32, |r, c| if (r / 8 + c / 8) % 2 == 0 { 0.2 } else { 0.8 });
    let e = canny_edges(&g, &CannyParams::default());
    let ones = e.edges.iter().filter(|&&v| v == 1).count() as f64;
    (mean_edge_factor(&e) - ones / 1024.0).abs()
}

pub fn run() -> Vec<Check> {
    vec![
        Check { name: "fft_vs_dft", value: fft_vs_dft(), tolerance: 1e-10 },
        Check { name: "propagation_round_trip", value: propagation_round_trip(), tolerance: 1e-9 },
        Check { name: "haar_round_trip", value: haar_round_trip(), tolerance: 1e-12 },
        Check { name: "ssim_identity", value: ssim_identity(), tolerance: 1e-12 },
        Check { name: "edge_factor_mean", value: edge_factor_mean(), tolerance: 0.0 },
    ]
}
