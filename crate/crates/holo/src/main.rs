use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use holo::config::parse_pairs;
use holo::pipeline::{self, MANIFEST};
use holo::{selftest, Error, ExperimentConfig, Result};

/// Lensless in-line hologram simulation and reconstruction.
#[derive(Parser)]
#[command(name = "holo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a target and its hologram into an output directory.
    Simulate(SetupArgs),
    /// Reconstruct the hologram stored in a simulation directory.
    Reconstruct(ReconstructArgs),
    /// Compare the reconstruction in a directory with its ground truth.
    Evaluate { dir: PathBuf },
    /// Sharpness of the stored network snapshots, written to sharpness.csv.
    SnapshotReport { dir: PathBuf },
    /// Simulate, reconstruct and evaluate in one go.
    Run(SetupArgs),
    /// Run the built-in numerical checks.
    Selftest,
}

#[derive(Args)]
struct SetupArgs {
    /// key=value config file; defaults are used for missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra KEY=VALUE overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ReconstructArgs {
    /// Directory written by `simulate`.
    dir: PathBuf,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    /// Iteration count for gs, hio or cs.
    #[arg(long)]
    iters: Option<usize>,
    /// Stop the network fit once the loss falls below this value.
    #[arg(long)]
    stop_loss: Option<f64>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn overrides(set: &[String]) -> Result<BTreeMap<String, String>> {
    parse_pairs(&set.join("\n"))
}

fn setup(args: &SetupArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let mut pairs = overrides(&args.set)?;
    if let Some(out) = &args.out {
        pairs.insert("output_dir".into(), out.display().to_string());
    }
    cfg.apply(&pairs)?;
    eprintln!("units: {}", cfg.unit_echo());
    Ok(cfg)
}

fn reconstruct_config(args: &ReconstructArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&args.dir.join(MANIFEST))?;
    let mut pairs = overrides(&args.set)?;
    if let Some(m) = &args.method {
        pairs.insert("solver.method".into(), m.clone());
    }
    cfg.apply(&pairs)?;
    let mut flags = BTreeMap::new();
    if let Some(e) = args.epochs {
        flags.insert("dip.epochs".to_string(), e.to_string());
    }
    if let Some(lr) = args.lr {
        flags.insert("dip.learning_rate".into(), lr.to_string());
    }
    if let Some(t) = args.tau {
        flags.insert("cs.tau".into(), t.to_string());
    }
    if let Some(s) = args.stop_loss {
        flags.insert("dip.stop_loss".into(), s.to_string());
    }
    if let Some(n) = args.iters {
        let key = match cfg.method {
            holo_core::Method::CompressiveSensing => "cs.iterations",
            holo_core::Method::GerchbergSaxton | holo_core::Method::HybridInputOutput => "pr.iterations",
            m => return Err(Error::Config(format!("--iters does not apply to method {}", m.tag()))),
        };
        flags.insert(key.into(), n.to_string());
    }
    cfg.apply(&flags)?;
    Ok(cfg)
}

fn print_metrics(dir: &Path, m: &holo_core::metrics::MetricReport) {
    println!(
        "{}: mse {:.6e} psnr {:.3} dB ssim {:.4} edge factor {:.4}",
        dir.display(),
        m.mse,
        m.psnr,
        m.ssim,
        m.edge_factor
    );
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let cfg = setup(&args)?;
            pipeline::simulate(&cfg)?;
            println!("simulated {} into {}", cfg.method.tag(), cfg.output_dir.display());
        }
        Command::Reconstruct(args) => {
            let cfg = reconstruct_config(&args)?;
            let r = pipeline::reconstruct(&cfg, &args.dir)?;
            println!(
                "{} finished in {:.2} s after {} iterations",
                r.method.tag(),
                r.wall_time,
                r.loss_history.len()
            );
        }
        Command::Evaluate { dir } => print_metrics(&dir, &pipeline::evaluate(&dir)?),
        Command::SnapshotReport { dir } => {
            let report = pipeline::snapshot_series(&dir)?;
            for (e, s) in report.epochs.iter().zip(&report.sharpness) {
                println!("epoch {e}: sharpness {s:.6e}");
            }
        }
        Command::Run(args) => {
            let cfg = setup(&args)?;
            let summary = pipeline::run_pipeline(&cfg)?;
            println!("{} finished in {:.2} s", cfg.method.tag(), summary.result.wall_time);
            print_metrics(&cfg.output_dir, &summary.metrics);
        }
        Command::Selftest => {
            let checks = selftest::run();
            for c in &checks {
                let status = if c.passed() { "ok" } else { "FAIL" };
                println!("{status:4} {:24} {:.3e} (tolerance {:.0e})", c.name, c.value, c.tolerance);
            }
            let failed = checks.iter().filter(|c| !c.passed()).count();
            if failed > 0 {
                return Err(Error::SelfTest(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
