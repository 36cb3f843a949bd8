//! Minimal reverse-mode differentiation for chains of dense layers.
//!
//! A [`Network`] is an ordered list of layers. The forward pass caches what
//! each layer needs, and the backward pass walks the chain in reverse,
//! accumulating parameter gradients into the layers' parameter tensors.
//! Only the layer set used by the hourglass autoencoder is provided.

mod adam;
mod haar;
mod layers;
mod network;
mod spec;
mod tensor;

pub use adam::{adam_step, AdamState, OptimizerConfig};
pub use haar::{haar_down, haar_down_adjoint, haar_up, haar_up_adjoint};
pub use layers::{AmplitudePhaseHead, BatchNorm, Conv2d, LeakyRelu};
pub use network::{Layer, Network};
pub use spec::{build_hourglass, LayerSpec, NetworkSpec, DEFAULT_STAGES, LEAKY_SLOPE};
pub use tensor::Tensor;
