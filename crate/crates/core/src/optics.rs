//! Complex wavefronts, angular spectrum propagation and the in-line
//! hologram forward model.
//!
//! The reference wave is a unit plane wave. Objects are complex
//! transmittances `t = a exp(i phi)`; only the deviation `t - 1` scatters,
//! so an empty object produces a perfectly flat hologram.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::fft::{frequencies, Fft2};
use crate::grid::Grid2;

/// Illumination and sensor geometry. All lengths are in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpticalConfig {
    pub wavelength: f64,
    /// Object-to-sensor distance; negative values propagate backwards.
    pub distance: f64,
    pub pixel_pitch: f64,
    pub height: usize,
    pub width: usize,
}

impl OpticalConfig {
    pub fn new(
        wavelength: f64,
        distance: f64,
        pixel_pitch: f64,
        height: usize,
        width: usize,
    ) -> Result<Self> {
        let config = Self {
            wavelength,
            distance,
            pixel_pitch,
            height,
            width,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(Error::InvalidConfig("wavelength must be positive"));
        }
        if !(self.pixel_pitch.is_finite() && self.pixel_pitch > 0.0) {
            return Err(Error::InvalidConfig("pixel pitch must be positive"));
        }
        if !self.distance.is_finite() {
            return Err(Error::InvalidConfig("distance must be finite"));
        }
        if self.height < 2 || self.width < 2 || self.height % 2 != 0 || self.width % 2 != 0 {
            return Err(Error::InvalidConfig("grid dimensions must be even and at least 2"));
        }
        Ok(())
    }

    #[inline]
    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn with_distance(&self, distance: f64) -> Self {
        Self { distance, ..*self }
    }

    pub fn with_shape(&self, height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            ..*self
        }
    }

    /// Horizontal DFT frequencies (cycles per meter) in FFT order.
    pub fn frequencies_x(&self) -> Vec<f64> {
        frequencies(self.width, self.pixel_pitch)
    }

    /// Vertical DFT frequencies (cycles per meter) in FFT order.
    pub fn frequencies_y(&self) -> Vec<f64> {
        frequencies(self.height, self.pixel_pitch)
    }
}

/// A sampled complex wavefront.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    pub values: Grid2<Complex64>,
    pub config: OpticalConfig,
}

impl ComplexField {
    pub fn new(values: Grid2<Complex64>, config: OpticalConfig) -> Result<Self> {
        config.validate()?;
        if values.shape() != config.shape() {
            return Err(Error::ShapeMismatch {
                expected: config.shape(),
                found: values.shape(),
            });
        }
        if !values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::NonFinite("complex field"));
        }
        Ok(Self { values, config })
    }

    pub fn uniform(config: OpticalConfig, value: Complex64) -> Result<Self> {
        Self::new(Grid2::filled(config.height, config.width, value), config)
    }

    /// Builds a transmittance `a exp(i phi)` from amplitude and phase maps.
    pub fn from_amplitude_phase(
        amplitude: &Grid2<f64>,
        phase: &Grid2<f64>,
        config: OpticalConfig,
    ) -> Result<Self> {
        amplitude.check_same_shape(phase)?;
        let data = amplitude
            .iter()
            .zip(phase.iter())
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Self::new(Grid2::from_vec(amplitude.rows(), amplitude.cols(), data)?, config)
    }

    pub fn amplitude(&self) -> Grid2<f64> {
        self.values.map(|v| v.norm())
    }

    /// Phase in `[-pi, pi]`.
    pub fn phase(&self) -> Grid2<f64> {
        self.values.map(|v| v.arg())
    }

    pub fn intensity(&self) -> Grid2<f64> {
        self.values.map(|v| v.norm_sqr())
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum()
    }

    /// The scattering part `t - 1` of a transmittance.
    pub fn scattered(&self) -> Self {
        Self {
            values: self.values.map(|v| v - 1.0),
            config: self.config,
        }
    }
}

/// Recorded hologram intensity.
#[derive(Clone, Debug, PartialEq)]
pub struct Hologram {
    pub intensity: Grid2<f64>,
    pub config: OpticalConfig,
}

impl Hologram {
    pub fn new(intensity: Grid2<f64>, config: OpticalConfig) -> Result<Self> {
        config.validate()?;
        if intensity.shape() != config.shape() {
            return Err(Error::ShapeMismatch {
                expected: config.shape(),
                found: intensity.shape(),
            });
        }
        if !intensity.all_finite() {
            return Err(Error::NonFinite("hologram"));
        }
        if intensity.iter().any(|&v| v < 0.0) {
            return Err(Error::Negative("hologram"));
        }
        Ok(Self { intensity, config })
    }

    /// Scales the intensity to unit mean.
    pub fn normalized(intensity: Grid2<f64>, config: OpticalConfig) -> Result<Self> {
        let mut holo = Self::new(intensity, config)?;
        holo.normalize()?;
        Ok(holo)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let mean = self.intensity.mean();
        if !(mean > 0.0) {
            return Err(Error::NonPositiveIntensity(mean));
        }
        for v in self.intensity.as_mut_slice() {
            *v /= mean;
        }
        Ok(())
    }

    pub fn is_normalized(&self) -> bool {
        (self.intensity.mean() - 1.0).abs() <= 1e-9
    }
}

/// How the unscattered reference intensity `|R|^2` is estimated from a
/// hologram. The iterative baselines divide the hologram by it so that the
/// background matches the `T s + 1` model.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceLevel {
    /// The hologram mean, which is 1 for a normalized hologram.
    Mean,
    /// The hologram median. Absorbing objects pull the mean below the
    /// background level; the median follows the background as long as
    /// the object covers less than half of the field.
    Median,
}

impl ReferenceLevel {
    pub fn estimate(self, intensity: &[f64]) -> f64 {
        match self {
            ReferenceLevel::Mean => crate::stats::mean(intensity),
            ReferenceLevel::Median => crate::stats::median(intensity),
        }
    }
}

/// Options for [`synthesize_hologram`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisOptions {
    /// Standard deviation of additive Gaussian noise on the intensity.
    pub noise_std: f64,
    pub seed: u64,
    /// Propagate on a 2x zero-padded grid to suppress wrap-around.
    pub zero_pad: bool,
    /// When set, the object's configured distance must match this value.
    pub distance: Option<f64>,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self {
            noise_std: 0.0,
            seed: 0,
            zero_pad: false,
            distance: None,
        }
    }
}

/// `exp(i k z (sqrt(1 - (lambda fx)^2 - (lambda fy)^2) - offset))` on the
/// propagating band and zero beyond it. `offset = 1` removes the carrier
/// phase `exp(ikz)` while keeping the argument well conditioned.
fn kernel_values(config: &OpticalConfig, z: f64, remove_carrier: bool) -> Vec<Complex64> {
    let k = config.wave_number();
    let lambda = config.wavelength;
    let fx = config.frequencies_x();
    let fy = config.frequencies_y();
    let mut out = Vec::with_capacity(config.pixels());
    for &v in &fy {
        for &u in &fx {
            let q = (lambda * u) * (lambda * u) + (lambda * v) * (lambda * v);
            if q > 1.0 {
                out.push(Complex64::new(0.0, 0.0));
                continue;
            }
            let root = libm::sqrt(1.0 - q);
            let theta = if remove_carrier {
                -k * z * q / (1.0 + root)
            } else {
                k * z * root
            };
            out.push(Complex64::new(libm::cos(theta), libm::sin(theta)));
        }
    }
    out
}

/// The angular-spectrum transfer function for a propagation distance `z`,
/// laid out in FFT order (DC at index `(0, 0)`).
pub fn transfer_kernel(config: &OpticalConfig, z: f64) -> ComplexField {
    let values = Grid2::from_vec(config.height, config.width, kernel_values(config, z, false))
        .expect("kernel has config shape");
    ComplexField {
        values,
        config: config.with_distance(z),
    }
}

/// Spectral propagation operator with a cached FFT plan and kernel.
///
/// `forward` multiplies the spectrum by the kernel, `adjoint` by its complex
/// conjugate. On fields without evanescent content the two are inverse to
/// each other.
#[derive(Clone, Debug)]
pub struct Propagator {
    fft: Fft2,
    kernel: Vec<Complex64>,
    config: OpticalConfig,
    distance: f64,
}

impl Propagator {
    /// Plain angular-spectrum propagation over `z`.
    pub fn new(config: &OpticalConfig, z: f64) -> Self {
        Self::build(config, z, false)
    }

    /// Propagation over `z` with the common carrier phase `exp(ikz)` removed.
    ///
    /// This is the operator that maps the object's scattered field into the
    /// frame of the unit reference wave at the sensor.
    pub fn carrier_free(config: &OpticalConfig, z: f64) -> Self {
        Self::build(config, z, true)
    }

    fn build(config: &OpticalConfig, z: f64, remove_carrier: bool) -> Self {
        Self {
            fft: Fft2::new(config.height, config.width),
            kernel: kernel_values(config, z, remove_carrier),
            config: *config,
            distance: z,
        }
    }

    pub fn config(&self) -> &OpticalConfig {
        &self.config
    }

    pub fn distance(&self) -> f64 {
        self.distance
    }

    pub fn kernel(&self) -> &[Complex64] {
        &self.kernel
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
        for (v, h) in buf.iter_mut().zip(&self.kernel) {
            *v *= h;
        }
        self.fft.inverse(buf);
    }

    pub fn adjoint(&self, buf: &mut [Complex64]) {
        self.fft.forward(buf);
        for (v, h) in buf.iter_mut().zip(&self.kernel) {
            *v *= h.conj();
        }
        self.fft.inverse(buf);
    }
}

/// Propagates a field over `z` (relative to its current plane).
pub fn propagate(field: &ComplexField, z: f64) -> ComplexField {
    let prop = Propagator::new(&field.config, z);
    let mut values = field.values.clone();
    prop.forward(values.as_mut_slice());
    ComplexField {
        values,
        config: field.config,
    }
}

/// Noise-free, unnormalized sensor intensity `|T(t - 1) + 1|^2` for a
/// transmittance `t`, where `T` is the carrier-free propagator.
pub fn model_intensity(object: &Grid2<Complex64>, op: &Propagator) -> Grid2<f64> {
    let mut buf: Vec<Complex64> = object.iter().map(|v| v - 1.0).collect();
    op.forward(&mut buf);
    let data = buf.iter().map(|v| (v + 1.0).norm_sqr()).collect();
    Grid2::from_vec(object.rows(), object.cols(), data).expect("same shape")
}

/// Simulates the recorded in-line hologram of `object`.
///
/// The intensity is `|T(t - 1) + 1|^2`, optionally corrupted with Gaussian
/// noise, clamped at zero and normalized to unit mean.
pub fn synthesize_hologram(object: &ComplexField, options: &SynthesisOptions) -> Result<Hologram> {
    let config = object.config;
    config.validate()?;
    if let Some(requested) = options.distance {
        if (requested - config.distance).abs() > 1e-12 * config.distance.abs().max(requested.abs()) {
            return Err(Error::DistanceMismatch {
                object: config.distance,
                requested,
            });
        }
    }
    if !(options.noise_std >= 0.0 && options.noise_std.is_finite()) {
        return Err(Error::InvalidParameter("noise_std must be finite and >= 0".into()));
    }

    let mut intensity = if options.zero_pad {
        padded_intensity(object)
    } else {
        let op = Propagator::carrier_free(&config, config.distance);
        model_intensity(&object.values, &op)
    };

    if options.noise_std > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        let normal = Normal::new(0.0, options.noise_std)
            .map_err(|_| Error::InvalidParameter("noise_std".into()))?;
        for v in intensity.as_mut_slice() {
            *v += normal.sample(&mut rng);
        }
    }
    for v in intensity.as_mut_slice() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    Hologram::normalized(intensity, config)
}

/// Propagation on a grid twice as large, padded with non-scattering pixels,
/// then cropped back to the central window.
fn padded_intensity(object: &ComplexField) -> Grid2<f64> {
    let (h, w) = object.config.shape();
    let big = object.config.with_shape(2 * h, 2 * w);
    let (r0, c0) = (h / 2, w / 2);
    let mut buf: Vec<Complex64> = Vec::with_capacity(4 * h * w);
    for r in 0..2 * h {
        for c in 0..2 * w {
            let inside = r >= r0 && r < r0 + h && c >= c0 && c < c0 + w;
            buf.push(if inside {
                object.values[(r - r0, c - c0)] - 1.0
            } else {
                Complex64::new(0.0, 0.0)
            });
        }
    }
    let op = Propagator::carrier_free(&big, big.distance);
    op.forward(&mut buf);
    Grid2::from_fn(h, w, |r, c| (buf[(r + r0) * 2 * w + c + c0] + 1.0).norm_sqr())
}

/// Naive single-pass reconstruction: the adjoint of the hologram operator
/// applied to `I - 1`.
///
/// The result holds the in-focus scattered field plus the out-of-focus twin.
/// Add one to obtain a transmittance estimate.
pub fn backpropagate(hologram: &Hologram) -> ComplexField {
    let config = hologram.config;
    let op = Propagator::carrier_free(&config, config.distance);
    let mut buf: Vec<Complex64> = hologram
        .intensity
        .iter()
        .map(|&v| Complex64::new(v - 1.0, 0.0))
        .collect();
    op.adjoint(&mut buf);
    ComplexField {
        values: Grid2::from_vec(config.height, config.width, buf).expect("same shape"),
        config,
    }
}
