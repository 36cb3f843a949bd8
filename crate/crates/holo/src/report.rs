//! Loss logs, metric tables and snapshot sharpness as text files.
//!
//! Floats are written with Rust's shortest round-trip formatting so a value
//! read back is bit-identical to the one written.

use std::fs;
use std::path::Path;

use holo_core::dip::SnapshotReport;
use holo_core::metrics::MetricReport;
use holo_core::Method;

use crate::config::parse_pairs;
use crate::error::{Error, Result};

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::format(path, format!("{other:?}")),
    })
}

/// `epoch,loss` with epochs counted from 1.
pub fn write_loss_csv(path: &Path, history: &[f64]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "loss"])?;
    for (i, loss) in history.iter().enumerate() {
        w.write_record([(i + 1).to_string(), format!("{loss:?}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_loss_csv(path: &Path) -> Result<Vec<f64>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for record in r.records() {
        let record = record?;
        let v = record
            .get(1)
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, format!("bad loss row {record:?}")))?;
        out.push(v);
    }
    Ok(out)
}

/// `metrics.txt` (key=value) and `metrics.csv` (one header row, one data row).
pub fn write_metrics(dir: &Path, method: Method, report: &MetricReport) -> Result<()> {
    let fields = [
        ("mse", report.mse),
        ("psnr", report.psnr),
        ("ssim", report.ssim),
        ("edge_factor", report.edge_factor),
    ];
    let mut text = format!("method={}\n", method.tag());
    for (k, v) in fields {
        text.push_str(&format!("{k}={v:?}\n"));
    }
    let path = dir.join("metrics.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;

    let path = dir.join("metrics.csv");
    let mut w = csv_writer(&path)?;
    w.write_record(["method", "mse", "psnr", "ssim", "edge_factor"])?;
    let mut row = vec![method.tag().to_string()];
    row.extend(fields.iter().map(|(_, v)| format!("{v:?}")));
    w.write_record(&row)?;
    w.flush().map_err(|e| Error::io(&path, e))
}

pub fn read_metrics(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let pairs = parse_pairs(&text)?;
    let get = |k: &str| -> Result<f64> {
        pairs
            .get(k)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::format(path, format!("missing or invalid {k}")))
    };
    Ok(MetricReport {
        mse: get("mse")?,
        psnr: get("psnr")?,
        ssim: get("ssim")?,
        edge_factor: get("edge_factor")?,
    })
}

/// `epoch,sharpness`, one row per snapshot.
pub fn write_sharpness_csv(path: &Path, report: &SnapshotReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["epoch", "sharpness"])?;
    for (e, s) in report.epochs.iter().zip(&report.sharpness) {
        w.write_record([e.to_string(), format!("{s:?}")])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
