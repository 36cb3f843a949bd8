//! Flat `key=value` experiment configuration.
//!
//! Keys carry section prefixes (`optical.wavelength=532nm`). Lines starting
//! with `#` are comments. Unknown or repeated keys are errors, and lengths
//! need an explicit unit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use holo_core::dip::DEFAULT_SNAPSHOTS;
use holo_core::nn::DEFAULT_STAGES;
use holo_core::targets::DiskParams;
use holo_core::twist::{ReferenceLevel, TwistConfig};
use holo_core::{Method, OpticalConfig};

use crate::error::{Error, Result};
use crate::units::{describe_length, format_meters, parse_length};

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSpec {
    Bars,
    Pi,
    Disk(DiskParams),
    /// Grayscale image as amplitude, optional second image scaled to
    /// `[0, phase_range]` radians as phase.
    Import {
        amplitude: PathBuf,
        phase: Option<PathBuf>,
        phase_range: f64,
    },
}

/// Where GS and HIO take their support from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SupportSource {
    /// Thresholded backpropagation.
    Estimate,
    /// Pixels where the ground truth differs from unit transmittance.
    Truth,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PrSettings {
    pub iterations: usize,
    pub beta: f64,
    pub support: SupportSource,
    pub support_quantile: f64,
    pub reference: ReferenceLevel,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TieSettings {
    pub planes: usize,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DipSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub stages: Vec<usize>,
    pub output_channels: usize,
    pub snapshots: Vec<usize>,
    pub stop_loss: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub optical: OpticalConfig,
    pub noise_std: f64,
    pub zero_pad: bool,
    pub target: TargetSpec,
    pub method: Method,
    pub pr: PrSettings,
    pub cs: TwistConfig,
    pub tie: TieSettings,
    pub dip: DipSettings,
    /// Seeds both the synthesis noise and the network initialization.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub previews: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            optical: OpticalConfig::new(532e-9, 1.5e-3, 4e-6, 128, 128).expect("valid defaults"),
            noise_std: 0.01,
            zero_pad: false,
            target: TargetSpec::Bars,
            method: Method::Backprop,
            pr: PrSettings {
                iterations: 200,
                beta: 0.9,
                support: SupportSource::Estimate,
                support_quantile: 0.9,
                reference: ReferenceLevel::Median,
            },
            cs: TwistConfig::new(0.05, 200),
            tie: TieSettings { planes: 10, step: 15e-6 },
            dip: DipSettings {
                epochs: 1500,
                learning_rate: 5e-4,
                beta1: 0.9,
                beta2: 0.999,
                epsilon: 1e-8,
                stages: DEFAULT_STAGES.to_vec(),
                output_channels: 2,
                snapshots: DEFAULT_SNAPSHOTS.to_vec(),
                stop_loss: None,
            },
            seed: 0,
            output_dir: PathBuf::from("out"),
            previews: false,
        }
    }
}

/// Raw `key=value` pairs, keyed by name.
pub fn parse_pairs(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", n + 1)))?;
        let key = key.trim().to_string();
        if map.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key {key}", n + 1)));
        }
    }
    Ok(map)
}

fn bad(key: &str, value: &str, what: &str) -> Error {
    Error::Config(format!("{key}={value}: expected {what}"))
}

fn number<T: std::str::FromStr>(key: &str, value: &str, what: &str) -> Result<T> {
    value.parse().map_err(|_| bad(key, value, what))
}

fn real(key: &str, value: &str) -> Result<f64> {
    let v: f64 = number(key, value, "a number")?;
    if !v.is_finite() {
        return Err(bad(key, value, "a finite number"));
    }
    Ok(v)
}

fn flag(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "yes" | "on" => Ok(true),
        "false" | "no" | "off" => Ok(false),
        _ => Err(bad(key, value, "true or false")),
    }
}

fn list(key: &str, value: &str) -> Result<Vec<usize>> {
    if value.is_empty() || value == "none" {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| number(key, s.trim(), "a comma-separated list of counts"))
        .collect()
}

fn reference(key: &str, value: &str) -> Result<ReferenceLevel> {
    match value {
        "median" => Ok(ReferenceLevel::Median),
        "mean" => Ok(ReferenceLevel::Mean),
        _ => Err(bad(key, value, "median or mean")),
    }
}

fn reference_tag(r: ReferenceLevel) -> &'static str {
    match r {
        ReferenceLevel::Median => "median",
        ReferenceLevel::Mean => "mean",
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Self::from_pairs(parse_pairs(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Builds a config from defaults overridden by `pairs`.
    pub fn from_pairs(pairs: BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply(&pairs)?;
        Ok(cfg)
    }

    /// Overrides fields from `pairs`, then validates the result.
    pub fn apply(&mut self, pairs: &BTreeMap<String, String>) -> Result<()> {
        let mut disk = match &self.target {
            TargetSpec::Disk(p) => *p,
            _ => DiskParams::default(),
        };
        let mut target_kind = match &self.target {
            TargetSpec::Bars => "bars",
            TargetSpec::Pi => "pi",
            TargetSpec::Disk(_) => "disk",
            TargetSpec::Import { .. } => "import",
        }
        .to_string();
        let (mut import_amp, mut import_phase, mut phase_range) = match &self.target {
            TargetSpec::Import {
                amplitude,
                phase,
                phase_range,
            } => (Some(amplitude.clone()), phase.clone(), *phase_range),
            _ => (None, None, std::f64::consts::PI),
        };
        let o = &mut self.optical;
        for (key, value) in pairs {
            let (k, v) = (key.as_str(), value.as_str());
            match k {
                "seed" => self.seed = number(k, v, "an unsigned integer")?,
                "output_dir" => self.output_dir = PathBuf::from(v),
                "output.previews" => self.previews = flag(k, v)?,
                "optical.wavelength" => o.wavelength = parse_length(v)?,
                "optical.distance" => o.distance = parse_length(v)?,
                "optical.pixel_pitch" => o.pixel_pitch = parse_length(v)?,
                "optical.height" => o.height = number(k, v, "a pixel count")?,
                "optical.width" => o.width = number(k, v, "a pixel count")?,
                "synthesis.noise_std" => self.noise_std = real(k, v)?,
                "synthesis.zero_pad" => self.zero_pad = flag(k, v)?,
                "target.kind" => target_kind = v.to_string(),
                "target.disk.radius" => disk.radius_frac = real(k, v)?,
                "target.disk.outside_amplitude" => disk.outside_amplitude = real(k, v)?,
                "target.disk.phase_peak" => disk.phase_peak = real(k, v)?,
                "target.disk.phase_sigma" => disk.phase_sigma_frac = real(k, v)?,
                "target.import.amplitude" => import_amp = Some(PathBuf::from(v)),
                "target.import.phase" => import_phase = (!v.is_empty() && v != "none").then(|| PathBuf::from(v)),
                "target.import.phase_range" => phase_range = real(k, v)?,
                "solver.method" => {
                    self.method = Method::from_tag(v).ok_or_else(|| bad(k, v, "backprop, gs, hio, tie, cs or dip"))?
                }
                "pr.iterations" => self.pr.iterations = number(k, v, "an iteration count")?,
                "pr.beta" => self.pr.beta = real(k, v)?,
                "pr.support" => {
                    self.pr.support = match v {
                        "estimate" => SupportSource::Estimate,
                        "truth" => SupportSource::Truth,
                        _ => return Err(bad(k, v, "estimate or truth")),
                    }
                }
                "pr.support_quantile" => self.pr.support_quantile = real(k, v)?,
                "pr.reference" => self.pr.reference = reference(k, v)?,
                "cs.tau" => self.cs.tau = real(k, v)?,
                "cs.iterations" => self.cs.iterations = number(k, v, "an iteration count")?,
                "cs.tv_inner_iters" => self.cs.tv_inner_iters = number(k, v, "an iteration count")?,
                "cs.alpha" => self.cs.alpha = real(k, v)?,
                "cs.beta" => self.cs.beta = real(k, v)?,
                "cs.reference" => self.cs.reference = reference(k, v)?,
                "tie.planes" => self.tie.planes = number(k, v, "a plane count")?,
                "tie.step" => self.tie.step = parse_length(v)?,
                "dip.epochs" => self.dip.epochs = number(k, v, "an epoch count")?,
                "dip.learning_rate" => self.dip.learning_rate = real(k, v)?,
                "dip.beta1" => self.dip.beta1 = real(k, v)?,
                "dip.beta2" => self.dip.beta2 = real(k, v)?,
                "dip.epsilon" => self.dip.epsilon = real(k, v)?,
                "dip.stages" => self.dip.stages = list(k, v)?,
                "dip.output_channels" => self.dip.output_channels = number(k, v, "1 or 2")?,
                "dip.snapshots" => self.dip.snapshots = list(k, v)?,
                "dip.stop_loss" => {
                    self.dip.stop_loss = if v == "off" { None } else { Some(real(k, v)?) }
                }
                _ => return Err(Error::Config(format!("unknown key {k}"))),
            }
        }
        self.target = match target_kind.as_str() {
            "bars" => TargetSpec::Bars,
            "pi" => TargetSpec::Pi,
            "disk" => TargetSpec::Disk(disk),
            "import" => TargetSpec::Import {
                amplitude: import_amp
                    .ok_or_else(|| Error::Config("target.kind=import needs target.import.amplitude".into()))?,
                phase: import_phase,
                phase_range,
            },
            other => return Err(bad("target.kind", other, "bars, pi, disk or import")),
        };
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let o = &self.optical;
        OpticalConfig::new(o.wavelength, o.distance, o.pixel_pitch, o.height, o.width)
            .map_err(|e| Error::Config(e.to_string()))?;
        if !(self.noise_std >= 0.0) {
            return Err(Error::Config("synthesis.noise_std must be >= 0".into()));
        }
        if let TargetSpec::Disk(d) = &self.target {
            if !(d.radius_frac > 0.0 && d.phase_sigma_frac > 0.0 && (0.0..=1.0).contains(&d.outside_amplitude)) {
                return Err(Error::Config("disk radius and sigma must be positive, outside amplitude in [0, 1]".into()));
            }
        }
        if self.tie.planes < 2 || !(self.tie.step > 0.0) {
            return Err(Error::Config("tie needs at least 2 planes and a positive step".into()));
        }
        if !(self.pr.support_quantile > 0.0 && self.pr.support_quantile < 1.0) {
            return Err(Error::Config("pr.support_quantile must be in (0, 1)".into()));
        }
        if self.dip.stages.is_empty() {
            return Err(Error::Config("dip.stages must list at least one stage".into()));
        }
        Ok(())
    }

    /// Every resolved parameter, in a form that [`ExperimentConfig::parse`]
    /// reads back to an identical config. Lengths are stored in meters and
    /// echoed in their natural unit as comments.
    pub fn to_manifest(&self) -> String {
        let mut s = String::new();
        let o = &self.optical;
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("seed", self.seed.to_string());
        kv("output_dir", self.output_dir.display().to_string());
        kv("output.previews", self.previews.to_string());
        kv("optical.wavelength", format_meters(o.wavelength));
        kv("optical.distance", format_meters(o.distance));
        kv("optical.pixel_pitch", format_meters(o.pixel_pitch));
        kv("optical.height", o.height.to_string());
        kv("optical.width", o.width.to_string());
        kv("synthesis.noise_std", self.noise_std.to_string());
        kv("synthesis.zero_pad", self.zero_pad.to_string());
        match &self.target {
            TargetSpec::Bars => kv("target.kind", "bars".into()),
            TargetSpec::Pi => kv("target.kind", "pi".into()),
            TargetSpec::Disk(d) => {
                kv("target.kind", "disk".into());
                kv("target.disk.radius", d.radius_frac.to_string());
                kv("target.disk.outside_amplitude", d.outside_amplitude.to_string());
                kv("target.disk.phase_peak", d.phase_peak.to_string());
                kv("target.disk.phase_sigma", d.phase_sigma_frac.to_string());
            }
            TargetSpec::Import {
                amplitude,
                phase,
                phase_range,
            } => {
                kv("target.kind", "import".into());
                kv("target.import.amplitude", amplitude.display().to_string());
                kv(
                    "target.import.phase",
                    phase.as_ref().map_or("none".into(), |p| p.display().to_string()),
                );
                kv("target.import.phase_range", phase_range.to_string());
            }
        }
        kv("solver.method", self.method.tag().into());
        kv("pr.iterations", self.pr.iterations.to_string());
        kv("pr.beta", self.pr.beta.to_string());
        kv(
            "pr.support",
            match self.pr.support {
                SupportSource::Estimate => "estimate",
                SupportSource::Truth => "truth",
            }
            .into(),
        );
        kv("pr.support_quantile", self.pr.support_quantile.to_string());
        kv("pr.reference", reference_tag(self.pr.reference).into());
        kv("cs.tau", self.cs.tau.to_string());
        kv("cs.iterations", self.cs.iterations.to_string());
        kv("cs.tv_inner_iters", self.cs.tv_inner_iters.to_string());
        kv("cs.alpha", self.cs.alpha.to_string());
        kv("cs.beta", self.cs.beta.to_string());
        kv("cs.reference", reference_tag(self.cs.reference).into());
        kv("tie.planes", self.tie.planes.to_string());
        kv("tie.step", format_meters(self.tie.step));
        let join = |v: &[usize]| {
            if v.is_empty() {
                "none".to_string()
            } else {
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            }
        };
        kv("dip.epochs", self.dip.epochs.to_string());
        kv("dip.learning_rate", self.dip.learning_rate.to_string());
        kv("dip.beta1", self.dip.beta1.to_string());
        kv("dip.beta2", self.dip.beta2.to_string());
        kv("dip.epsilon", self.dip.epsilon.to_string());
        kv("dip.stages", join(&self.dip.stages));
        kv("dip.output_channels", self.dip.output_channels.to_string());
        kv("dip.snapshots", join(&self.dip.snapshots));
        kv("dip.stop_loss", self.dip.stop_loss.map_or("off".into(), |v| v.to_string()));
        let _ = writeln!(s, "# optical.wavelength = {}", describe_length(o.wavelength));
        let _ = writeln!(s, "# optical.distance = {}", describe_length(o.distance));
        let _ = writeln!(s, "# optical.pixel_pitch = {}", describe_length(o.pixel_pitch));
        let _ = writeln!(s, "# tie.step = {}", describe_length(self.tie.step));
        s
    }

    /// One line per length, as the parser understood it.
    pub fn unit_echo(&self) -> String {
        let o = &self.optical;
        format!(
            "wavelength {} ({} m), distance {} ({} m), pixel pitch {} ({} m)",
            describe_length(o.wavelength),
            o.wavelength,
            describe_length(o.distance),
            o.distance,
            describe_length(o.pixel_pitch),
            o.pixel_pitch
        )
    }
}
