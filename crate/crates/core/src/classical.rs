//! Single-pass backpropagation and the support-constrained iterative phase
//! retrieval baselines (Gerchberg-Saxton error reduction and hybrid
//! input-output).
//!
//! The object-plane variable is the scattered field `s = t - 1`. At the
//! sensor the field is `T s + 1`, whose modulus is replaced by `sqrt(I)`.
//! In the object plane the scattered field is forced to zero (GS) or
//! relaxed (HIO) on the constrained region outside the support.

use alloc::format;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::optics::{backpropagate, ComplexField, Hologram, Propagator, ReferenceLevel};
use crate::result::{Method, ReconstructionResult};
use crate::stats;

/// Object-plane constraint. `true` marks a pixel OUTSIDE the support, i.e.
/// in the constrained region where no scattering is allowed.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportMask {
    outside: Grid2<bool>,
}

impl SupportMask {
    pub fn new(outside: Grid2<bool>) -> Result<Self> {
        if outside.iter().all(|&o| o) {
            return Err(Error::EmptySupport);
        }
        Ok(Self { outside })
    }

    /// Every pixel may scatter.
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            outside: Grid2::filled(rows, cols, false),
        }
    }

    /// Support given as a predicate on `(row, col)`.
    pub fn from_support(rows: usize, cols: usize, inside: impl Fn(usize, usize) -> bool) -> Result<Self> {
        Self::new(Grid2::from_fn(rows, cols, |r, c| !inside(r, c)))
    }

    pub fn outside(&self) -> &Grid2<bool> {
        &self.outside
    }

    #[inline]
    pub fn is_outside(&self, index: usize) -> bool {
        self.outside.as_slice()[index]
    }

    pub fn support_size(&self) -> usize {
        self.outside.iter().filter(|&&o| !o).count()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.outside.shape()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrConfig {
    pub iterations: usize,
    /// HIO relaxation factor, `0 < beta <= 1`.
    pub beta: f64,
    pub support: SupportMask,
    pub reference: ReferenceLevel,
}

impl PrConfig {
    pub const DEFAULT_BETA: f64 = 0.9;

    pub fn new(iterations: usize, beta: f64, support: SupportMask) -> Result<Self> {
        let cfg = Self {
            iterations,
            beta,
            support,
            reference: ReferenceLevel::Median,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidParameter("iterations must be >= 1".into()));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidParameter(format!("beta must be in (0, 1], got {}", self.beta)));
        }
        if self.support.support_size() == 0 {
            return Err(Error::EmptySupport);
        }
        Ok(())
    }
}

/// Naive reconstruction wrapped as a result: `t = 1 + T*(I - 1)`.
pub fn backprop_reconstruct(hologram: &Hologram) -> ReconstructionResult {
    let field = backpropagate(hologram);
    let t = field.values.map(|v| v + 1.0);
    ReconstructionResult::from_transmittance(&t, Method::Backprop)
}

/// Result of [`estimate_support`].
#[derive(Clone, Debug, PartialEq)]
pub struct SupportEstimate {
    pub mask: SupportMask,
    /// Set when the input had no variation and the full grid was returned.
    pub degenerate: bool,
}

/// Thresholds the deviation of a backpropagated amplitude from its median.
///
/// Pixels whose deviation falls below the `quantile`-th quantile of all
/// deviations are constrained; the remaining support is dilated by two
/// pixels (5x5 square).
pub fn estimate_support(amplitude: &Grid2<f64>, quantile: f64) -> Result<SupportEstimate> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::InvalidParameter(format!("quantile must be in (0, 1), got {quantile}")));
    }
    let (rows, cols) = amplitude.shape();
    let median = stats::median(amplitude.as_slice());
    let deviation: Vec<f64> = amplitude.iter().map(|a| (a - median).abs()).collect();
    let max_dev = deviation.iter().cloned().fold(0.0, f64::max);
    if max_dev == 0.0 {
        return Ok(SupportEstimate {
            mask: SupportMask::full(rows, cols),
            degenerate: true,
        });
    }
    let threshold = stats::quantile(&deviation, quantile);
    let seed: Vec<bool> = deviation.iter().map(|&d| d >= threshold).collect();

    const RADIUS: usize = 2;
    let outside = Grid2::from_fn(rows, cols, |r, c| {
        let r0 = r.saturating_sub(RADIUS);
        let c0 = c.saturating_sub(RADIUS);
        let r1 = (r + RADIUS).min(rows - 1);
        let c1 = (c + RADIUS).min(cols - 1);
        !(r0..=r1).any(|rr| (c0..=c1).any(|cc| seed[rr * cols + cc]))
    });
    Ok(SupportEstimate {
        mask: SupportMask::new(outside)?,
        degenerate: false,
    })
}

/// Object-plane update rule.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Update {
    ErrorReduction,
    HybridInputOutput(f64),
}

/// One HIO object-plane update: keep the projected estimate inside the
/// support, relax `previous - beta * projected` outside it.
pub fn hio_update(previous: &[Complex64], projected: &[Complex64], support: &SupportMask, beta: f64) -> Vec<Complex64> {
    previous
        .iter()
        .zip(projected)
        .enumerate()
        .map(|(i, (&p, &q))| if support.is_outside(i) { p - q * beta } else { q })
        .collect()
}

fn apply_support(buf: &mut [Complex64], support: &SupportMask) {
    for (i, v) in buf.iter_mut().enumerate() {
        if support.is_outside(i) {
            *v = Complex64::new(0.0, 0.0);
        }
    }
}

/// Runs the alternating-projection loop from an explicit scattered-field
/// initialization. The history holds, per iteration, the RMS difference
/// between the modelled sensor modulus and `sqrt(I)` before projection.
fn iterate(
    hologram: &Hologram,
    cfg: &PrConfig,
    initial: &Grid2<Complex64>,
    update: Update,
) -> Result<(Vec<Complex64>, Vec<f64>)> {
    cfg.validate()?;
    let config = hologram.config;
    if cfg.support.shape() != config.shape() {
        return Err(Error::ShapeMismatch {
            expected: config.shape(),
            found: cfg.support.shape(),
        });
    }
    hologram.intensity.check_same_shape(initial)?;
    let op = Propagator::carrier_free(&config, config.distance);
    let reference = cfg.reference.estimate(hologram.intensity.as_slice());
    if !(reference > 0.0) {
        return Err(Error::NonPositiveIntensity(reference));
    }
    let modulus: Vec<f64> = hologram.intensity.iter().map(|&v| libm::sqrt(v.max(0.0) / reference)).collect();
    let n = modulus.len() as f64;

    let mut current: Vec<Complex64> = initial.as_slice().to_vec();
    apply_support(&mut current, &cfg.support);
    let mut history = Vec::with_capacity(cfg.iterations);
    let mut projected = Vec::new();
    for _ in 0..cfg.iterations {
        let mut sensor = current.clone();
        op.forward(&mut sensor);
        let mut err = 0.0;
        for (u, &m) in sensor.iter_mut().zip(&modulus) {
            let field = *u + 1.0;
            let norm = field.norm();
            err += (norm - m) * (norm - m);
            let replaced = if norm > 0.0 { field * (m / norm) } else { Complex64::new(m, 0.0) };
            *u = replaced - 1.0;
        }
        history.push(libm::sqrt(err / n));
        op.adjoint(&mut sensor);
        projected = sensor;
        current = match update {
            Update::ErrorReduction => {
                let mut next = projected.clone();
                apply_support(&mut next, &cfg.support);
                next
            }
            Update::HybridInputOutput(beta) => hio_update(&current, &projected, &cfg.support, beta),
        };
    }
    // The reported estimate always satisfies the support constraint.
    apply_support(&mut projected, &cfg.support);
    Ok((projected, history))
}

fn finish(hologram: &Hologram, scattered: Vec<Complex64>, history: Vec<f64>, method: Method) -> ReconstructionResult {
    let (rows, cols) = hologram.config.shape();
    let t = Grid2::from_vec(rows, cols, scattered.into_iter().map(|v| v + 1.0).collect()).expect("same shape");
    let mut result = ReconstructionResult::from_transmittance(&t, method);
    result.loss_history = history;
    result
}

fn warm_start(hologram: &Hologram) -> Grid2<Complex64> {
    backpropagate(hologram).values
}

/// Gerchberg-Saxton (error reduction), initialized from backpropagation.
pub fn gs_reconstruct(hologram: &Hologram, cfg: &PrConfig) -> Result<ReconstructionResult> {
    gs_reconstruct_from(hologram, cfg, &warm_start(hologram))
}

/// Gerchberg-Saxton from an explicit initial scattered field `t - 1`.
pub fn gs_reconstruct_from(hologram: &Hologram, cfg: &PrConfig, initial: &Grid2<Complex64>) -> Result<ReconstructionResult> {
    let (s, history) = iterate(hologram, cfg, initial, Update::ErrorReduction)?;
    Ok(finish(hologram, s, history, Method::GerchbergSaxton))
}

/// Hybrid input-output, initialized from backpropagation.
pub fn hio_reconstruct(hologram: &Hologram, cfg: &PrConfig) -> Result<ReconstructionResult> {
    hio_reconstruct_from(hologram, cfg, &warm_start(hologram))
}

/// Hybrid input-output from an explicit initial scattered field `t - 1`.
pub fn hio_reconstruct_from(hologram: &Hologram, cfg: &PrConfig, initial: &Grid2<Complex64>) -> Result<ReconstructionResult> {
    let (s, history) = iterate(hologram, cfg, initial, Update::HybridInputOutput(cfg.beta))?;
    Ok(finish(hologram, s, history, Method::HybridInputOutput))
}

/// The scattered field `t - 1` of a result, as used to initialize solvers.
pub fn scattered_field(result: &ReconstructionResult) -> Grid2<Complex64> {
    result.transmittance().map(|v| v - 1.0)
}

/// Convenience for callers holding a full field rather than a grid.
pub fn scattered_of(field: &ComplexField) -> Grid2<Complex64> {
    field.values.map(|v| v - 1.0)
}
