//! Untrained-network reconstruction: an hourglass network, fed the hologram
//! itself, is fitted so that the hologram synthesized from its
//! amplitude/phase output matches the recording.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::Grid2;
use crate::nn::{adam_step, AdamState, Network, NetworkSpec, OptimizerConfig, Tensor};
use crate::optics::{Hologram, Propagator};
use crate::result::{Method, ReconstructionResult, Snapshot};
use crate::stats::mean_gradient_magnitude;

/// Snapshot schedule of the coarse-to-fine figure.
pub const DEFAULT_SNAPSHOTS: [usize; 5] = [100, 200, 500, 1000, 1500];

#[derive(Clone, Debug, PartialEq)]
pub struct DipConfig {
    pub epochs: usize,
    pub optimizer: OptimizerConfig,
    /// 1-based epochs after whose forward pass a snapshot is taken.
    pub snapshot_epochs: Vec<usize>,
    pub network: NetworkSpec,
    /// Stop once the loss drops to this value. Off by default.
    pub stop_loss: Option<f64>,
}

impl Default for DipConfig {
    fn default() -> Self {
        Self {
            epochs: 1500,
            optimizer: OptimizerConfig::default(),
            snapshot_epochs: Vec::new(),
            network: NetworkSpec::hourglass_default(),
            stop_loss: None,
        }
    }
}

impl DipConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be >= 1".into()));
        }
        if let Some(&bad) = self.snapshot_epochs.iter().find(|&&e| e == 0 || e > self.epochs) {
            return Err(Error::InvalidParameter(format!(
                "snapshot epoch {bad} outside 1..={}",
                self.epochs
            )));
        }
        if self.network.input_channels != 1 {
            return Err(Error::InvalidParameter("the network input is the single-channel hologram".into()));
        }
        if let Some(s) = self.stop_loss {
            if !(s >= 0.0) {
                return Err(Error::InvalidParameter("stop_loss must be >= 0".into()));
            }
        }
        self.optimizer.validate()
    }
}

/// Physics-consistency loss and its gradients w.r.t. amplitude and phase.
#[derive(Clone, Debug)]
pub struct LossEval {
    pub loss: f64,
    pub grad_amplitude: Vec<f64>,
    pub grad_phase: Vec<f64>,
}

/// Mean squared error between the unit-mean intensity predicted from
/// `t = a exp(i phi)` and the hologram.
///
/// With `U = T(t - 1) + 1`, `I = |U|^2` and `p = I / mean(I)`, the gradient
/// chain is `dL/dI`, then `G = T*(2 U dL/dI)`, then
/// `dL/da = Re(G e^{-i phi})` and `dL/dphi = a Im(G e^{-i phi})`.
pub fn dip_loss(amplitude: &[f64], phase: &[f64], hologram: &Hologram, op: &Propagator) -> Result<LossEval> {
    let n = hologram.intensity.len();
    if amplitude.len() != n || phase.len() != n {
        return Err(Error::ShapeMismatch {
            expected: hologram.intensity.shape(),
            found: (amplitude.len(), phase.len()),
        });
    }
    let nf = n as f64;
    let rotor: Vec<Complex64> = phase.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
    let mut u: Vec<Complex64> = amplitude.iter().zip(&rotor).map(|(&a, r)| a * r - 1.0).collect();
    op.forward(&mut u);
    for v in u.iter_mut() {
        *v += 1.0;
    }
    let intensity: Vec<f64> = u.iter().map(|v| v.norm_sqr()).collect();
    let m = intensity.iter().sum::<f64>() / nf;
    if !(m > 0.0) {
        return Err(Error::NonPositiveIntensity(m));
    }
    let target = hologram.intensity.as_slice();
    let mut loss = 0.0;
    let mut g = Vec::with_capacity(n);
    for (&i, &h) in intensity.iter().zip(target) {
        let r = i / m - h;
        loss += r * r;
        g.push(2.0 * r / nf);
    }
    loss /= nf;
    // Through the normalization p_j = I_j / m.
    let gi: f64 = g.iter().zip(&intensity).map(|(a, b)| a * b).sum();
    let correction = gi / (m * m * nf);
    let mut field: Vec<Complex64> = u
        .iter()
        .zip(&g)
        .map(|(uj, gj)| uj * (2.0 * (gj / m - correction)))
        .collect();
    op.adjoint(&mut field);
    let mut grad_amplitude = Vec::with_capacity(n);
    let mut grad_phase = Vec::with_capacity(n);
    for ((gs, r), &a) in field.iter().zip(&rotor).zip(amplitude) {
        let w = gs * r.conj();
        grad_amplitude.push(w.re);
        grad_phase.push(a * w.im);
    }
    Ok(LossEval {
        loss,
        grad_amplitude,
        grad_phase,
    })
}

fn split_output(out: &Tensor, rows: usize, cols: usize) -> (Grid2<f64>, Grid2<f64>) {
    let amplitude = Grid2::from_vec(rows, cols, out.plane(0, 0).to_vec()).expect("network output shape");
    let phase = if out.shape()[1] > 1 {
        Grid2::from_vec(rows, cols, out.plane(0, 1).to_vec()).expect("network output shape")
    } else {
        Grid2::zeros(rows, cols)
    };
    (amplitude, phase)
}

fn non_finite(epoch: usize, loss: f64, history: &[f64], net: &Network) -> Error {
    Error::NonFiniteLoss {
        epoch,
        loss,
        previous: history.last().copied().unwrap_or(f64::NAN),
        dump: diagnostic_dump(net, history),
    }
}

/// Fixes the global phase and scale, to which the loss is blind: the
/// mean of `t` is rotated onto the positive real axis and `max |t|` is
/// scaled to 1.
pub fn fix_gauge(amplitude: &Grid2<f64>, phase: &Grid2<f64>) -> (Grid2<f64>, Grid2<f64>) {
    let sum: Complex64 = amplitude
        .iter()
        .zip(phase.iter())
        .map(|(&a, &p)| Complex64::from_polar(a, p))
        .sum();
    let max = amplitude.iter().cloned().fold(0.0, f64::max);
    if !(max > 0.0) {
        return (amplitude.clone(), phase.clone());
    }
    let shift = if sum.norm() > 0.0 { sum.arg() } else { 0.0 };
    let a = amplitude.map(|&a| a / max);
    let p = phase.map(|&p| {
        let q = Complex64::from_polar(1.0, p - shift).arg();
        if q == -core::f64::consts::PI { core::f64::consts::PI } else { q }
    });
    (a, p)
}

/// Diagnostic summary used when training aborts.
pub fn diagnostic_dump(net: &Network, history: &[f64]) -> String {
    let mut s = String::new();
    for (i, p) in net.parameters().iter().enumerate() {
        let max = p.data().iter().fold(0.0f64, |m, v| if v.is_finite() { m.max(v.abs()) } else { f64::INFINITY });
        s.push_str(&format!("param {i} shape {:?} max|w| {max:e}\n", p.shape()));
    }
    let tail = &history[history.len().saturating_sub(5)..];
    s.push_str(&format!("last losses {tail:?}\n"));
    s
}

/// Fits a freshly initialized network to `hologram`.
///
/// The returned maps and the last loss entry come from the same forward
/// pass, so resynthesizing the returned object reproduces that loss.
pub fn dip_reconstruct(hologram: &Hologram, cfg: &DipConfig) -> Result<ReconstructionResult> {
    cfg.validate()?;
    if !hologram.is_normalized() {
        return Err(Error::InvalidParameter("hologram must be normalized to unit mean".into()));
    }
    let (rows, cols) = hologram.intensity.shape();
    let (out_c, _, _) = cfg.network.output_shape(rows, cols)?;
    if out_c == 0 || out_c > 2 {
        return Err(Error::InvalidParameter("network must output amplitude (and phase)".into()));
    }
    let config = hologram.config;
    let op = Propagator::carrier_free(&config, config.distance);
    let mut net = Network::new(&cfg.network, cfg.optimizer.seed)?;
    // The fit starts from a flat transmittance rather than from whatever
    // structure random weights imprint on the input.
    net.zero_output_projection();
    let input = Tensor::from_vec([1, 1, rows, cols], hologram.intensity.as_slice().to_vec())?;
    let mut state = AdamState::new();
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut snapshots = Vec::new();
    let mut last = None;

    for epoch in 1..=cfg.epochs {
        let out = net.forward(&input)?;
        if !out.all_finite() {
            return Err(non_finite(epoch, f64::NAN, &history, &net));
        }
        let (amplitude, phase) = split_output(&out, rows, cols);
        let eval = dip_loss(amplitude.as_slice(), phase.as_slice(), hologram, &op)?;
        if !eval.loss.is_finite() {
            return Err(non_finite(epoch, eval.loss, &history, &net));
        }
        history.push(eval.loss);
        if cfg.snapshot_epochs.contains(&epoch) {
            let (amplitude, phase) = fix_gauge(&amplitude, &phase);
            snapshots.push(Snapshot { epoch, amplitude, phase });
        }
        let done = epoch == cfg.epochs || cfg.stop_loss.is_some_and(|s| eval.loss <= s);
        if done {
            last = Some((amplitude, phase));
            break;
        }
        let mut grad = Tensor::zeros(out.shape());
        grad.plane_mut(0, 0).copy_from_slice(&eval.grad_amplitude);
        if out_c == 2 {
            grad.plane_mut(0, 1).copy_from_slice(&eval.grad_phase);
        }
        net.zero_grad();
        net.backward(&grad)?;
        let mut params = net.parameters_mut();
        adam_step(&mut params, &mut state, &cfg.optimizer)?;
    }

    let (amplitude, phase) = last.expect("at least one epoch");
    let (amplitude, phase) = fix_gauge(&amplitude, &phase);
    let mut result = ReconstructionResult::new(amplitude, phase, Method::DeepPrior);
    result.loss_history = history;
    result.snapshots = snapshots;
    Ok(result)
}

/// Snapshot sequence with its sharpness series.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotReport {
    pub epochs: Vec<usize>,
    /// Mean gradient magnitude of each snapshot's amplitude.
    pub sharpness: Vec<f64>,
}

impl SnapshotReport {
    pub fn first_to_last_ratio(&self) -> f64 {
        self.sharpness[self.sharpness.len() - 1] / self.sharpness[0]
    }
}

pub fn snapshot_report(result: &ReconstructionResult) -> Result<SnapshotReport> {
    if result.snapshots.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "a snapshot report needs at least 2 snapshots, got {}",
            result.snapshots.len()
        )));
    }
    let mut snaps: Vec<&Snapshot> = result.snapshots.iter().collect();
    snaps.sort_by_key(|s| s.epoch);
    Ok(SnapshotReport {
        epochs: snaps.iter().map(|s| s.epoch).collect(),
        sharpness: snaps
            .iter()
            .map(|s| mean_gradient_magnitude(s.amplitude.as_slice(), s.amplitude.rows(), s.amplitude.cols()))
            .collect(),
    })
}
