//! Transport-of-intensity phase recovery from a multi-height stack.
//!
//! In the near-uniform intensity regime the TIE reduces to a Poisson
//! equation `lap(phi) = -(k / I) dI/dz`, solved here spectrally with
//! periodic boundaries and the mean of `phi` fixed to zero.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::grid::Grid2;
use crate::optics::{propagate, ComplexField, OpticalConfig};
use crate::result::{Method, ReconstructionResult};
use crate::stats;

/// Coefficient of variation above which the uniform-intensity
/// approximation is considered violated.
pub const UNIFORMITY_LIMIT: f64 = 0.2;

/// Intensity planes recorded at `z0 + k * step_dz`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntensityStack {
    pub planes: Vec<Grid2<f64>>,
    pub step_dz: f64,
    pub config: OpticalConfig,
}

impl IntensityStack {
    pub fn new(planes: Vec<Grid2<f64>>, step_dz: f64, config: OpticalConfig) -> Result<Self> {
        if planes.len() < 2 {
            return Err(Error::InvalidParameter("an intensity stack needs at least two planes".into()));
        }
        if !(step_dz > 0.0 && step_dz.is_finite()) {
            return Err(Error::InvalidParameter(format!("step_dz must be positive, got {step_dz}")));
        }
        for p in &planes {
            if p.shape() != config.shape() {
                return Err(Error::ShapeMismatch {
                    expected: config.shape(),
                    found: p.shape(),
                });
            }
        }
        Ok(Self { planes, step_dz, config })
    }

    /// Per-pixel mean over the planes. For a stack centred on the object
    /// plane this is the in-focus intensity to first order.
    pub fn mean_intensity(&self) -> Grid2<f64> {
        let (rows, cols) = self.config.shape();
        let n = self.planes.len() as f64;
        let mut out = Grid2::zeros(rows, cols);
        for p in &self.planes {
            for (o, v) in out.as_mut_slice().iter_mut().zip(p.iter()) {
                *o += v;
            }
        }
        for o in out.as_mut_slice() {
            *o /= n;
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseMap {
    /// Radians, zero mean.
    pub phase: Grid2<f64>,
}

/// `dI/dz` per pixel: a forward difference for two planes, otherwise the
/// least-squares slope of intensity against plane height.
pub fn axial_derivative(stack: &IntensityStack) -> Result<Grid2<f64>> {
    let shape = stack.planes[0].shape();
    for p in &stack.planes {
        if p.shape() != shape {
            return Err(Error::ShapeMismatch { expected: shape, found: p.shape() });
        }
    }
    let n = stack.planes.len();
    if n == 2 {
        let data = stack.planes[1]
            .iter()
            .zip(stack.planes[0].iter())
            .map(|(b, a)| (b - a) / stack.step_dz)
            .collect();
        return Grid2::from_vec(shape.0, shape.1, data);
    }
    let centre = (n - 1) as f64 / 2.0;
    let offsets: Vec<f64> = (0..n).map(|k| (k as f64 - centre) * stack.step_dz).collect();
    let denom: f64 = offsets.iter().map(|z| z * z).sum();
    let mut slope = Grid2::zeros(shape.0, shape.1);
    for (p, z) in stack.planes.iter().zip(&offsets) {
        for (s, v) in slope.as_mut_slice().iter_mut().zip(p.iter()) {
            *s += z * v;
        }
    }
    // The centred offsets sum to zero, so the intercept drops out.
    for s in slope.as_mut_slice() {
        *s /= denom;
    }
    Ok(slope)
}

/// Zero-mean solution of the periodic Poisson problem `lap(phi) = rhs`
/// (the mean of `rhs` is discarded).
pub fn solve_poisson(rhs: &Grid2<f64>, pixel_pitch: f64) -> Grid2<f64> {
    let (rows, cols) = rhs.shape();
    let fft = Fft2::new(rows, cols);
    let fx = crate::fft::frequencies(cols, pixel_pitch);
    let fy = crate::fft::frequencies(rows, pixel_pitch);
    let mut buf: Vec<Complex64> = rhs.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for (r, &v) in fy.iter().enumerate() {
        for (c, &u) in fx.iter().enumerate() {
            let idx = r * cols + c;
            let f2 = u * u + v * v;
            buf[idx] = if f2 == 0.0 { Complex64::new(0.0, 0.0) } else { buf[idx] / (-4.0 * PI * PI * f2) };
        }
    }
    fft.inverse(&mut buf);
    let mut phi = Grid2::from_vec(rows, cols, buf.iter().map(|v| v.re).collect()).expect("same shape");
    let m = phi.mean();
    for v in phi.as_mut_slice() {
        *v -= m;
    }
    phi
}

/// Spectral Laplacian with the same periodic convention as [`solve_poisson`].
pub fn spectral_laplacian(field: &Grid2<f64>, pixel_pitch: f64) -> Grid2<f64> {
    let (rows, cols) = field.shape();
    let fft = Fft2::new(rows, cols);
    let fx = crate::fft::frequencies(cols, pixel_pitch);
    let fy = crate::fft::frequencies(rows, pixel_pitch);
    let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for (r, &v) in fy.iter().enumerate() {
        for (c, &u) in fx.iter().enumerate() {
            buf[r * cols + c] *= -4.0 * PI * PI * (u * u + v * v);
        }
    }
    fft.inverse(&mut buf);
    Grid2::from_vec(rows, cols, buf.iter().map(|v| v.re).collect()).expect("same shape")
}

/// Coefficient of variation of an intensity map.
pub fn intensity_variation(intensity: &Grid2<f64>) -> f64 {
    let m = intensity.mean();
    libm::sqrt(stats::variance(intensity.as_slice())) / m
}

/// Recovers the phase from the in-focus intensity and its axial derivative
/// under the uniform-intensity approximation.
///
/// Callers should check [`intensity_variation`] against
/// [`UNIFORMITY_LIMIT`]; the solve itself only rejects a non-positive mean.
pub fn tie_solve(intensity: &Grid2<f64>, didz: &Grid2<f64>, config: &OpticalConfig) -> Result<PhaseMap> {
    intensity.check_same_shape(didz)?;
    if !didz.all_finite() || !intensity.all_finite() {
        return Err(Error::NonFinite("TIE input"));
    }
    let mean = intensity.mean();
    if !(mean > 0.0) {
        return Err(Error::NonPositiveIntensity(mean));
    }
    let scale = -config.wave_number() / mean;
    let rhs = didz.map(|&d| scale * d);
    Ok(PhaseMap {
        phase: solve_poisson(&rhs, config.pixel_pitch),
    })
}

/// Full multi-height reconstruction from a stack centred on the object plane.
pub fn tie_reconstruct(stack: &IntensityStack) -> Result<ReconstructionResult> {
    let didz = axial_derivative(stack)?;
    let intensity = stack.mean_intensity();
    let phase = tie_solve(&intensity, &didz, &stack.config)?;
    let amplitude = intensity.map(|&v| libm::sqrt(v.max(0.0)).min(1.0));
    Ok(ReconstructionResult::new(amplitude, phase.phase, Method::Tie))
}

/// Simulates a stack of `planes` intensities spaced `step_dz` apart and
/// centred on the object plane.
pub fn simulate_stack(object: &ComplexField, planes: usize, step_dz: f64) -> Result<IntensityStack> {
    if planes < 2 {
        return Err(Error::InvalidParameter("an intensity stack needs at least two planes".into()));
    }
    let centre = (planes - 1) as f64 / 2.0;
    let intensities = (0..planes)
        .map(|k| propagate(object, (k as f64 - centre) * step_dz).intensity())
        .collect();
    IntensityStack::new(intensities, step_dz, object.config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn config() -> OpticalConfig {
        OpticalConfig::new(532e-9, 0.0, 4e-6, 16, 16).unwrap()
    }

    #[test]
    fn identical_planes_have_zero_derivative() {
        let plane = Grid2::from_fn(16, 16, |r, c| 1.0 + (r * c) as f64 * 0.01);
        let stack = IntensityStack::new(vec![plane.clone(), plane.clone(), plane], 15e-6, config()).unwrap();
        assert!(axial_derivative(&stack).unwrap().iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn linear_stack_has_exact_slope() {
        let c = 250.0;
        let dz = 15e-6;
        let planes = (0..3).map(|k| Grid2::filled(16, 16, 1.0 + c * k as f64 * dz)).collect();
        let stack = IntensityStack::new(planes, dz, config()).unwrap();
        for v in axial_derivative(&stack).unwrap().iter() {
            assert!((v - c).abs() < 1e-9 * c);
        }
        let two = IntensityStack::new(vec![Grid2::filled(16, 16, 1.0), Grid2::filled(16, 16, 1.0 + c * dz)], dz, config()).unwrap();
        for v in axial_derivative(&two).unwrap().iter() {
            assert!((v - c).abs() < 1e-9 * c);
        }
    }

    #[test]
    fn stack_validation() {
        assert!(IntensityStack::new(vec![Grid2::zeros(16, 16)], 1e-6, config()).is_err());
        assert!(IntensityStack::new(vec![Grid2::zeros(16, 16); 2], 0.0, config()).is_err());
        assert!(IntensityStack::new(vec![Grid2::zeros(16, 16), Grid2::zeros(8, 16)], 1e-6, config()).is_err());
    }

    #[test]
    fn zero_derivative_gives_zero_phase() {
        let phi = tie_solve(&Grid2::filled(16, 16, 1.0), &Grid2::zeros(16, 16), &config()).unwrap();
        assert!(phi.phase.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_non_positive_mean() {
        assert!(matches!(
            tie_solve(&Grid2::zeros(16, 16), &Grid2::zeros(16, 16), &config()),
            Err(Error::NonPositiveIntensity(_))
        ));
    }

    #[test]
    fn laplacian_eigenfunction_is_recovered() {
        let pitch = 4e-6;
        let n = 16;
        let f0 = 2.0 / (n as f64 * pitch);
        let x = |c: usize| c as f64 * pitch;
        let rhs = Grid2::from_fn(n, n, |_, c| -4.0 * PI * PI * f0 * f0 * libm::cos(2.0 * PI * f0 * x(c)));
        let phi = solve_poisson(&rhs, pitch);
        for r in 0..n {
            for c in 0..n {
                let expected = libm::cos(2.0 * PI * f0 * x(c));
                assert!((phi[(r, c)] - expected).abs() < 1e-9);
            }
        }
    }
}
