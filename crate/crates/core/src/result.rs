use alloc::vec::Vec;

use num_complex::Complex64;

use crate::grid::Grid2;
use crate::metrics::MetricReport;

/// Which solver produced a reconstruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Backprop,
    GerchbergSaxton,
    HybridInputOutput,
    Tie,
    CompressiveSensing,
    DeepPrior,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Backprop,
        Method::GerchbergSaxton,
        Method::HybridInputOutput,
        Method::Tie,
        Method::CompressiveSensing,
        Method::DeepPrior,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Backprop => "backprop",
            Method::GerchbergSaxton => "gs",
            Method::HybridInputOutput => "hio",
            Method::Tie => "tie",
            Method::CompressiveSensing => "cs",
            Method::DeepPrior => "dip",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }
}

/// Intermediate estimate recorded during training.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub epoch: usize,
    pub amplitude: Grid2<f64>,
    pub phase: Grid2<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionResult {
    /// Amplitude in `[0, 1]`.
    pub amplitude: Grid2<f64>,
    /// Phase in `[-pi, pi]`.
    pub phase: Grid2<f64>,
    /// Per-iteration objective, modulus error or loss, depending on the solver.
    pub loss_history: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    /// Seconds; filled in by callers that own a clock.
    pub wall_time: f64,
    pub method: Method,
    pub metrics: Option<MetricReport>,
}

impl ReconstructionResult {
    pub fn new(amplitude: Grid2<f64>, phase: Grid2<f64>, method: Method) -> Self {
        Self {
            amplitude,
            phase,
            loss_history: Vec::new(),
            snapshots: Vec::new(),
            wall_time: 0.0,
            method,
            metrics: None,
        }
    }

    /// Splits a transmittance estimate into clamped amplitude and phase.
    pub fn from_transmittance(t: &Grid2<Complex64>, method: Method) -> Self {
        Self::new(t.map(|v| v.norm().min(1.0)), t.map(|v| v.arg()), method)
    }

    /// `a exp(i phi)` for the stored maps.
    pub fn transmittance(&self) -> Grid2<Complex64> {
        let data = self
            .amplitude
            .iter()
            .zip(self.phase.iter())
            .map(|(&a, &p)| Complex64::from_polar(a, p))
            .collect();
        Grid2::from_vec(self.amplitude.rows(), self.amplitude.cols(), data).expect("same shape")
    }
}
