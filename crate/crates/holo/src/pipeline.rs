//! Simulation, reconstruction and evaluation on a directory of artifacts.
//!
//! A run directory holds `manifest.cfg`, the hologram, the ground truth, the
//! reconstruction, `loss.csv`, `metrics.txt`/`metrics.csv` and, for the
//! network solver, a `snapshots/` folder. Every grid is written twice: as an
//! exact `.holof64` sidecar and as a 16-bit `.pgm`. Nothing time-dependent
//! is written, so equal manifests give byte-identical directories.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use holo_core::classical::{
    backprop_reconstruct, estimate_support, gs_reconstruct, hio_reconstruct, PrConfig, SupportMask,
};
use holo_core::dip::{dip_reconstruct, snapshot_report, DipConfig, SnapshotReport};
use holo_core::metrics::MetricReport;
use holo_core::nn::{build_hourglass, OptimizerConfig};
use holo_core::optics::synthesize_hologram;
use holo_core::targets::{from_maps, generate_target, TargetKind};
use holo_core::tie::{simulate_stack, tie_reconstruct, IntensityStack};
use holo_core::twist::twist_reconstruct;
use holo_core::{ComplexField, Grid2, Hologram, Method, ReconstructionResult, Snapshot, SynthesisOptions};

use crate::config::{ExperimentConfig, SupportSource, TargetSpec};
use crate::error::{Error, Result};
use crate::report::{read_metrics, write_loss_csv, write_metrics, write_sharpness_csv};
use crate::{holof64, pgm};

pub const MANIFEST: &str = "manifest.cfg";
pub const STACK_DIR: &str = "stack";
pub const SNAPSHOT_DIR: &str = "snapshots";

const PI: f64 = std::f64::consts::PI;

/// Writes `name.holof64` and `name.pgm`, the latter mapping `[lo, hi]`
/// onto the full 16-bit range.
pub fn write_grid(dir: &Path, name: &str, grid: &Grid2<f64>, lo: f64, hi: f64) -> Result<()> {
    holof64::write(&dir.join(format!("{name}.holof64")), grid)?;
    pgm::write16(&dir.join(format!("{name}.pgm")), grid, lo, hi)
}

fn write_preview(dir: &Path, name: &str, grid: &Grid2<f64>, lo: f64, hi: f64) -> Result<()> {
    pgm::write8(&dir.join(format!("{name}_preview.pgm")), grid, lo, hi)
}

pub fn read_grid(dir: &Path, name: &str) -> Result<Grid2<f64>> {
    holof64::read(&dir.join(format!("{name}.holof64")))
}

/// Reads a `.holof64` grid, or a graymap scaled to `[0, 1]`.
pub fn read_image(path: &Path) -> Result<Grid2<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(holof64::MAGIC) {
        holof64::decode(&bytes).map_err(|m| Error::format(path, m))
    } else {
        pgm::decode(&bytes).map_err(|m| Error::format(path, m))
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// The complex object described by the config.
pub fn build_object(cfg: &ExperimentConfig) -> Result<ComplexField> {
    let optical = cfg.optical;
    let kind = match &cfg.target {
        TargetSpec::Bars => TargetKind::Bars,
        TargetSpec::Pi => TargetKind::Pi,
        TargetSpec::Disk(p) => TargetKind::Disk(*p),
        TargetSpec::Import {
            amplitude,
            phase,
            phase_range,
        } => {
            let amp = read_image(amplitude)?;
            let ph = match phase {
                Some(p) => read_image(p)?.map(|v| v * phase_range),
                None => Grid2::zeros(amp.rows(), amp.cols()),
            };
            if amp.shape() != optical.shape() || ph.shape() != optical.shape() {
                return Err(Error::Config(format!(
                    "imported target is {:?}, optical grid is {:?}",
                    amp.shape(),
                    optical.shape()
                )));
            }
            return Ok(from_maps(&amp.map(|v| v.clamp(0.0, 1.0)), &ph, &optical)?);
        }
    };
    Ok(generate_target(&kind, &optical)?)
}

#[derive(Debug)]
pub struct Simulation {
    pub object: ComplexField,
    pub hologram: Hologram,
    pub stack: Option<IntensityStack>,
}

/// Generates the target and its hologram (plus a defocus stack for TIE)
/// and writes them to `cfg.output_dir` together with the manifest.
pub fn simulate(cfg: &ExperimentConfig) -> Result<Simulation> {
    cfg.validate()?;
    let dir = &cfg.output_dir;
    create_dir(dir)?;
    let object = build_object(cfg)?;
    let hologram = synthesize_hologram(
        &object,
        &SynthesisOptions {
            noise_std: cfg.noise_std,
            seed: cfg.seed,
            zero_pad: cfg.zero_pad,
            distance: Some(cfg.optical.distance),
        },
    )?;
    write_manifest(cfg)?;
    let hmax = hologram.intensity.iter().cloned().fold(0.0, f64::max);
    write_grid(dir, "hologram", &hologram.intensity, 0.0, hmax)?;
    write_grid(dir, "truth_amplitude", &object.amplitude(), 0.0, 1.0)?;
    write_grid(dir, "truth_phase", &object.phase(), -PI, PI)?;
    if cfg.previews {
        write_preview(dir, "hologram", &hologram.intensity, 0.0, hmax)?;
        write_preview(dir, "truth_amplitude", &object.amplitude(), 0.0, 1.0)?;
    }
    let stack = if cfg.method == Method::Tie {
        let stack = simulate_stack(&object, cfg.tie.planes, cfg.tie.step)?;
        write_stack(&dir.join(STACK_DIR), &stack)?;
        Some(stack)
    } else {
        None
    };
    Ok(Simulation { object, hologram, stack })
}

pub fn write_manifest(cfg: &ExperimentConfig) -> Result<()> {
    let path = cfg.output_dir.join(MANIFEST);
    fs::write(&path, cfg.to_manifest()).map_err(|e| Error::io(&path, e))
}

/// Numbered `plane_NN.holof64` files plus `stack.cfg` holding the step.
pub fn write_stack(dir: &Path, stack: &IntensityStack) -> Result<()> {
    create_dir(dir)?;
    for (i, plane) in stack.planes.iter().enumerate() {
        holof64::write(&dir.join(format!("plane_{i:02}.holof64")), plane)?;
    }
    let path = dir.join("stack.cfg");
    let text = format!("step_dz={}\n", crate::units::format_meters(stack.step_dz));
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Loads every `.holof64` or `.pgm` plane of `dir` in name order.
pub fn read_stack(dir: &Path, cfg: &ExperimentConfig) -> Result<IntensityStack> {
    let manifest = dir.join("stack.cfg");
    let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
    let pairs = crate::config::parse_pairs(&text)?;
    let step = pairs
        .get("step_dz")
        .ok_or_else(|| Error::Config(format!("{}: missing step_dz", manifest.display())))
        .and_then(|v| crate::units::parse_length(v))?;
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| matches!(p.extension().and_then(|e| e.to_str()), Some("holof64" | "pgm")))
        .collect();
    files.sort();
    let planes = files.iter().map(|p| read_image(p)).collect::<Result<Vec<_>>>()?;
    Ok(IntensityStack::new(planes, step, cfg.optical)?)
}

/// Support mask for the phase-retrieval baselines.
fn support_for(cfg: &ExperimentConfig, dir: &Path, hologram: &Hologram) -> Result<SupportMask> {
    match cfg.pr.support {
        SupportSource::Estimate => {
            let bp = backprop_reconstruct(hologram);
            Ok(estimate_support(&bp.amplitude, cfg.pr.support_quantile)?.mask)
        }
        SupportSource::Truth => {
            let a = read_grid(dir, "truth_amplitude")?;
            let p = read_grid(dir, "truth_phase")?;
            let (rows, cols) = a.shape();
            Ok(SupportMask::from_support(rows, cols, |r, c| {
                (a[(r, c)] - 1.0).abs() > 1e-12 || p[(r, c)].abs() > 1e-12
            })?)
        }
    }
}

pub fn dip_config(cfg: &ExperimentConfig) -> Result<DipConfig> {
    Ok(DipConfig {
        epochs: cfg.dip.epochs,
        optimizer: OptimizerConfig {
            learning_rate: cfg.dip.learning_rate,
            beta1: cfg.dip.beta1,
            beta2: cfg.dip.beta2,
            epsilon: cfg.dip.epsilon,
            seed: cfg.seed,
        },
        snapshot_epochs: cfg.dip.snapshots.iter().copied().filter(|&e| e <= cfg.dip.epochs).collect(),
        network: build_hourglass(1, &cfg.dip.stages, cfg.dip.output_channels)?,
        stop_loss: cfg.dip.stop_loss,
    })
}

/// Runs the configured solver on the artifacts in `dir`.
pub fn solve(cfg: &ExperimentConfig, dir: &Path) -> Result<ReconstructionResult> {
    let start = Instant::now();
    let mut result = if cfg.method == Method::Tie {
        tie_reconstruct(&read_stack(&dir.join(STACK_DIR), cfg)?)?
    } else {
        let mut intensity = read_grid(dir, "hologram")?;
        if intensity.shape() != cfg.optical.shape() {
            return Err(Error::Config(format!(
                "hologram is {:?}, manifest says {:?}",
                intensity.shape(),
                cfg.optical.shape()
            )));
        }
        let mut hologram = Hologram::new(std::mem::replace(&mut intensity, Grid2::zeros(0, 0)), cfg.optical)?;
        hologram.normalize()?;
        match cfg.method {
            Method::Backprop => backprop_reconstruct(&hologram),
            Method::GerchbergSaxton | Method::HybridInputOutput => {
                let mut pr = PrConfig::new(cfg.pr.iterations, cfg.pr.beta, support_for(cfg, dir, &hologram)?)?;
                pr.reference = cfg.pr.reference;
                if cfg.method == Method::GerchbergSaxton {
                    gs_reconstruct(&hologram, &pr)?
                } else {
                    hio_reconstruct(&hologram, &pr)?
                }
            }
            Method::CompressiveSensing => twist_reconstruct(&hologram, &cfg.cs)?,
            Method::DeepPrior => dip_reconstruct(&hologram, &dip_config(cfg)?)?,
            Method::Tie => unreachable!(),
        }
    };
    result.wall_time = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Writes reconstruction maps, the loss log and any snapshots.
pub fn write_result(dir: &Path, result: &ReconstructionResult, previews: bool) -> Result<()> {
    write_grid(dir, "recon_amplitude", &result.amplitude, 0.0, 1.0)?;
    write_grid(dir, "recon_phase", &result.phase, -PI, PI)?;
    if previews {
        write_preview(dir, "recon_amplitude", &result.amplitude, 0.0, 1.0)?;
    }
    write_loss_csv(&dir.join("loss.csv"), &result.loss_history)?;
    if !result.snapshots.is_empty() {
        let snaps = dir.join(SNAPSHOT_DIR);
        create_dir(&snaps)?;
        for s in &result.snapshots {
            write_grid(&snaps, &format!("epoch_{:05}_amplitude", s.epoch), &s.amplitude, 0.0, 1.0)?;
            write_grid(&snaps, &format!("epoch_{:05}_phase", s.epoch), &s.phase, -PI, PI)?;
        }
    }
    Ok(())
}

/// Solves with `cfg` on the simulation in `dir`, recording `cfg` as the
/// directory's manifest.
pub fn reconstruct(cfg: &ExperimentConfig, dir: &Path) -> Result<ReconstructionResult> {
    cfg.validate()?;
    let result = solve(cfg, dir)?;
    write_result(dir, &result, cfg.previews)?;
    let mut recorded = cfg.clone();
    recorded.output_dir = dir.to_path_buf();
    write_manifest(&recorded)?;
    Ok(result)
}

/// Compares the reconstructed amplitude in `dir` with the ground truth.
pub fn evaluate(dir: &Path) -> Result<MetricReport> {
    let cfg = ExperimentConfig::load(&dir.join(MANIFEST))?;
    let truth = read_grid(dir, "truth_amplitude")?;
    let recon = read_grid(dir, "recon_amplitude")?;
    let report = MetricReport::compute(&recon, &truth, 1.0)?;
    write_metrics(dir, cfg.method, &report)?;
    Ok(report)
}

/// Sharpness series of the snapshots stored in `dir`.
pub fn snapshot_series(dir: &Path) -> Result<SnapshotReport> {
    let snaps = dir.join(SNAPSHOT_DIR);
    let mut epochs: Vec<usize> = fs::read_dir(&snaps)
        .map_err(|e| Error::io(&snaps, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            name.strip_prefix("epoch_")?
                .strip_suffix("_amplitude.holof64")?
                .parse()
                .ok()
        })
        .collect();
    epochs.sort_unstable();
    let mut result = ReconstructionResult::new(Grid2::zeros(0, 0), Grid2::zeros(0, 0), Method::DeepPrior);
    for epoch in epochs {
        let amplitude = read_grid(&snaps, &format!("epoch_{epoch:05}_amplitude"))?;
        let phase = read_grid(&snaps, &format!("epoch_{epoch:05}_phase"))?;
        result.snapshots.push(Snapshot { epoch, amplitude, phase });
    }
    let report = snapshot_report(&result)?;
    write_sharpness_csv(&dir.join("sharpness.csv"), &report)?;
    Ok(report)
}

/// Outcome of a full run.
pub struct RunSummary {
    pub result: ReconstructionResult,
    pub metrics: MetricReport,
}

/// Simulate, reconstruct and evaluate in `cfg.output_dir`.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<RunSummary> {
    simulate(cfg)?;
    let mut result = reconstruct(cfg, &cfg.output_dir)?;
    let metrics = evaluate(&cfg.output_dir)?;
    result.metrics = Some(metrics);
    Ok(RunSummary { result, metrics })
}

/// Metrics previously written by [`evaluate`].
pub fn load_metrics(dir: &Path) -> Result<MetricReport> {
    read_metrics(&dir.join("metrics.txt"))
}
