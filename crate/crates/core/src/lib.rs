//! Reconstruction algorithms for lensless digital in-line holograms.
//!
//! The crate is `no_std` and only needs an allocator. It covers angular
//! spectrum propagation and the in-line hologram forward model, the
//! classical reconstruction baselines (naive backpropagation,
//! Gerchberg-Saxton, hybrid input-output, transport of intensity and
//! TV-regularized TwIST), a small reverse-mode neural network library and
//! the untrained hourglass reconstructor built on top of it, and the image
//! quality metrics used to compare them.
//!
//! File formats, timing and the command line live in the `holo` crate.

#![no_std]

extern crate alloc;

pub mod classical;
pub mod dip;
mod error;
pub mod fft;
pub mod grid;
pub mod metrics;
pub mod nn;
pub mod optics;
pub mod result;
pub mod stats;
pub mod targets;
pub mod tie;
pub mod twist;

pub use error::{Error, Result};
pub use grid::Grid2;
pub use num_complex::Complex64;
pub use optics::{ComplexField, Hologram, OpticalConfig, SynthesisOptions};
pub use result::{Method, ReconstructionResult, Snapshot};
