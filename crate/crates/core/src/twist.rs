//! Compressive-sensing baseline: TwIST on a TV-regularized linearized
//! hologram model.
//!
//! The unknown is a real absorption map `rho = 1 - a >= 0`. Dropping the
//! `|O|^2` term, the hologram deviation is `I - 1 = -A rho` with
//! `A rho = 2 Re[T rho]`, and the objective is
//! `0.5 ||(I - 1) + A rho||^2 + tau TV(rho)`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid2;
pub use crate::optics::ReferenceLevel;
use crate::optics::{Hologram, Propagator};
use crate::result::{Method, ReconstructionResult};

/// Isotropic total variation with forward differences; the gradient past
/// the last row or column is zero.
pub fn tv_norm(image: &Grid2<f64>) -> f64 {
    let (rows, cols) = image.shape();
    let mut total = 0.0;
    for r in 0..rows {
        for c in 0..cols {
            let v = image[(r, c)];
            let dx = if c + 1 < cols { image[(r, c + 1)] - v } else { 0.0 };
            let dy = if r + 1 < rows { image[(r + 1, c)] - v } else { 0.0 };
            total += libm::sqrt(dx * dx + dy * dy);
        }
    }
    total
}

fn gradient(u: &[f64], rows: usize, cols: usize, gx: &mut [f64], gy: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            gx[i] = if c + 1 < cols { u[i + 1] - u[i] } else { 0.0 };
            gy[i] = if r + 1 < rows { u[i + cols] - u[i] } else { 0.0 };
        }
    }
}

/// Negative adjoint of [`gradient`].
fn divergence(px: &[f64], py: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        for c in 0..cols {
            let i = r * cols + c;
            let dx = if cols == 1 {
                0.0
            } else if c == 0 {
                px[i]
            } else if c + 1 == cols {
                -px[i - 1]
            } else {
                px[i] - px[i - 1]
            };
            let dy = if rows == 1 {
                0.0
            } else if r == 0 {
                py[i]
            } else if r + 1 == rows {
                -py[i - cols]
            } else {
                py[i] - py[i - cols]
            };
            out[i] = dx + dy;
        }
    }
}

/// Dual variable of Chambolle's projection algorithm. Keeping it between
/// calls warm-starts successive proximal steps.
#[derive(Clone, Debug, PartialEq)]
pub struct TvDual {
    rows: usize,
    cols: usize,
    px: Vec<f64>,
    py: Vec<f64>,
}

impl TvDual {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            px: vec![0.0; rows * cols],
            py: vec![0.0; rows * cols],
        }
    }

    /// Approximate `argmin_u 0.5 ||u - f||^2 + weight TV(u)` after
    /// `iterations` fixed-point steps.
    pub fn prox(&mut self, image: &Grid2<f64>, weight: f64, iterations: usize) -> Grid2<f64> {
        assert_eq!(image.shape(), (self.rows, self.cols));
        if weight <= 0.0 {
            return image.clone();
        }
        const STEP: f64 = 0.125;
        let (rows, cols) = (self.rows, self.cols);
        let n = rows * cols;
        let f = image.as_slice();
        let mut div = vec![0.0; n];
        let mut work = vec![0.0; n];
        let mut gx = vec![0.0; n];
        let mut gy = vec![0.0; n];
        for _ in 0..iterations {
            divergence(&self.px, &self.py, rows, cols, &mut div);
            for i in 0..n {
                work[i] = div[i] - f[i] / weight;
            }
            gradient(&work, rows, cols, &mut gx, &mut gy);
            for i in 0..n {
                let norm = libm::sqrt(gx[i] * gx[i] + gy[i] * gy[i]);
                let denom = 1.0 + STEP * norm;
                self.px[i] = (self.px[i] + STEP * gx[i]) / denom;
                self.py[i] = (self.py[i] + STEP * gy[i]) / denom;
            }
        }
        divergence(&self.px, &self.py, rows, cols, &mut div);
        let data = f.iter().zip(&div).map(|(v, d)| v - weight * d).collect();
        Grid2::from_vec(rows, cols, data).expect("same shape")
    }
}

/// TV proximal step from a cold start.
pub fn tv_denoise(image: &Grid2<f64>, weight: f64, inner_iters: usize) -> Grid2<f64> {
    TvDual::new(image.rows(), image.cols()).prox(image, weight, inner_iters)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistConfig {
    /// TV weight.
    pub tau: f64,
    pub iterations: usize,
    pub alpha: f64,
    pub beta: f64,
    pub tv_inner_iters: usize,
    pub reference: ReferenceLevel,
}

impl TwistConfig {
    /// Assumed ratio between the smallest and largest eigenvalue of the
    /// normalized data term when choosing the two-step weights.
    pub const KAPPA: f64 = 1e-2;

    /// Two-step weights from the conditioning estimate `kappa`.
    pub fn weights(kappa: f64) -> (f64, f64) {
        let rho = (1.0 - kappa) / (1.0 + kappa);
        let alpha = 2.0 / (1.0 + libm::sqrt(1.0 - rho * rho));
        let beta = 2.0 * alpha / (1.0 + kappa);
        (alpha, beta)
    }

    pub fn new(tau: f64, iterations: usize) -> Self {
        let (alpha, beta) = Self::weights(Self::KAPPA);
        Self {
            tau,
            iterations,
            alpha,
            beta,
            tv_inner_iters: 10,
            reference: ReferenceLevel::Median,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau must be positive, got {}", self.tau)));
        }
        if self.iterations == 0 || self.tv_inner_iters == 0 {
            return Err(Error::InvalidParameter("iteration counts must be >= 1".into()));
        }
        if !(self.alpha.is_finite() && self.beta.is_finite()) {
            return Err(Error::InvalidParameter("two-step weights must be finite".into()));
        }
        Ok(())
    }
}

impl Default for TwistConfig {
    fn default() -> Self {
        Self::new(0.03, 200)
    }
}

/// The linearized in-line model `A rho = 2 Re[T rho]` on real images.
#[derive(Clone, Debug)]
pub struct LinearModel {
    op: Propagator,
    rows: usize,
    cols: usize,
}

impl LinearModel {
    /// Upper bound on `||A||^2`.
    pub const LIPSCHITZ: f64 = 4.0;

    pub fn new(hologram: &Hologram) -> Self {
        let config = hologram.config;
        Self {
            op: Propagator::carrier_free(&config, config.distance),
            rows: config.height,
            cols: config.width,
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.op.forward(&mut buf);
        buf.iter().map(|v| 2.0 * v.re).collect()
    }

    pub fn adjoint(&self, y: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = y.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.op.adjoint(&mut buf);
        buf.iter().map(|v| 2.0 * v.re).collect()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }
}

struct Problem {
    model: LinearModel,
    data: Vec<f64>,
    tau: f64,
    inner: usize,
    dual: TvDual,
}

impl Problem {
    fn objective(&self, rho: &Grid2<f64>) -> f64 {
        let pred = self.model.apply(rho.as_slice());
        let fit: f64 = pred.iter().zip(&self.data).map(|(p, d)| (d + p) * (d + p)).sum();
        0.5 * fit + self.tau * tv_norm(rho)
    }

    /// Clamped proximal-gradient step with unit step in the normalized data term.
    fn shrink(&mut self, rho: &Grid2<f64>) -> Grid2<f64> {
        let l = LinearModel::LIPSCHITZ;
        let pred = self.model.apply(rho.as_slice());
        let resid: Vec<f64> = pred.iter().zip(&self.data).map(|(p, d)| p + d).collect();
        let grad = self.model.adjoint(&resid);
        let (rows, cols) = rho.shape();
        let stepped = Grid2::from_vec(rows, cols, rho.iter().zip(&grad).map(|(x, g)| x - g / l).collect())
            .expect("same shape");
        let mut out = self.dual.prox(&stepped, self.tau / l, self.inner);
        clamp_nonnegative(&mut out);
        out
    }
}

fn clamp_nonnegative(x: &mut Grid2<f64>) {
    for v in x.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Number of leading iterations exempt from the monotonicity check.
pub const MONOTONE_GRACE: usize = 5;

/// Monotone TwIST. A two-step candidate that would raise the objective is
/// replaced by the plain shrinkage step, and if that also fails the
/// iterate is kept, so the history never increases.
pub fn twist_reconstruct(hologram: &Hologram, cfg: &TwistConfig) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let (rows, cols) = hologram.config.shape();
    let reference = cfg.reference.estimate(hologram.intensity.as_slice());
    if !(reference > 0.0) {
        return Err(Error::NonPositiveIntensity(reference));
    }
    let mut problem = Problem {
        model: LinearModel::new(hologram),
        data: hologram.intensity.iter().map(|v| v / reference - 1.0).collect(),
        tau: cfg.tau,
        inner: cfg.tv_inner_iters,
        dual: TvDual::new(rows, cols),
    };
    let mut previous = Grid2::zeros(rows, cols);
    let initial = problem.objective(&previous);
    let mut current = problem.shrink(&previous);
    let mut value = problem.objective(&current);
    if value > initial {
        current = previous.clone();
        value = initial;
    }
    let mut history = Vec::with_capacity(cfg.iterations);
    history.push(value);

    for iteration in 1..cfg.iterations {
        let step = problem.shrink(&current);
        let mut candidate = Grid2::from_vec(
            rows,
            cols,
            previous
                .iter()
                .zip(current.iter())
                .zip(step.iter())
                .map(|((p, c), s)| (1.0 - cfg.alpha) * p + (cfg.alpha - cfg.beta) * c + cfg.beta * s)
                .collect(),
        )?;
        clamp_nonnegative(&mut candidate);
        let mut next_value = problem.objective(&candidate);
        if next_value > value {
            candidate = step;
            next_value = problem.objective(&candidate);
            if next_value > value {
                candidate = current.clone();
                next_value = value;
            }
        }
        if !next_value.is_finite() {
            return Err(Error::NonFinite("TwIST objective"));
        }
        if next_value > 10.0 * initial.max(f64::MIN_POSITIVE) {
            return Err(Error::Diverged {
                iteration,
                value: next_value,
                initial,
            });
        }
        if iteration >= MONOTONE_GRACE && next_value > value + 1e-9 {
            return Err(Error::NotMonotone {
                iteration,
                previous: value,
                value: next_value,
            });
        }
        previous = core::mem::replace(&mut current, candidate);
        value = next_value;
        history.push(value);
    }

    let amplitude = current.map(|r| (1.0 - r).clamp(0.0, 1.0));
    let mut result = ReconstructionResult::new(amplitude, Grid2::zeros(rows, cols), Method::CompressiveSensing);
    result.loss_history = history;
    Ok(result)
}
