use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;
use crate::nn::haar::{haar_down, haar_down_adjoint, haar_up, haar_up_adjoint};
use crate::nn::layers::{AmplitudePhaseHead, BatchNorm, Conv2d, LeakyRelu};
use crate::nn::spec::{LayerSpec, NetworkSpec};
use crate::nn::tensor::Tensor;

#[derive(Clone, Debug)]
pub enum Layer {
    Conv(Conv2d),
    BatchNorm(BatchNorm),
    LeakyRelu(LeakyRelu),
    HaarDown,
    HaarUp,
    Head(AmplitudePhaseHead),
}

impl Layer {
    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.forward(input),
            Layer::BatchNorm(l) => l.forward(input),
            Layer::LeakyRelu(l) => l.forward(input),
            Layer::HaarDown => haar_down(input),
            Layer::HaarUp => haar_up(input),
            Layer::Head(l) => l.forward(input),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Conv(l) => l.backward(grad),
            Layer::BatchNorm(l) => l.backward(grad),
            Layer::LeakyRelu(l) => l.backward(grad),
            Layer::HaarDown => haar_down_adjoint(grad),
            Layer::HaarUp => haar_up_adjoint(grad),
            Layer::Head(l) => l.backward(grad),
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Conv(l) => alloc::vec![&mut l.weight, &mut l.bias],
            Layer::BatchNorm(l) => alloc::vec![&mut l.gamma, &mut l.beta],
            _ => Vec::new(),
        }
    }

    fn parameters(&self) -> Vec<&Tensor> {
        match self {
            Layer::Conv(l) => alloc::vec![&l.weight, &l.bias],
            Layer::BatchNorm(l) => alloc::vec![&l.gamma, &l.beta],
            _ => Vec::new(),
        }
    }
}

/// An instantiated [`NetworkSpec`].
#[derive(Clone, Debug)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Layer>,
}

impl Network {
    /// Kaiming-normal convolution weights (`std = sqrt(2 / fan_in)`), zero
    /// biases, unit BN scale and zero BN shift, drawn from a seeded ChaCha8
    /// stream in layer order.
    pub fn new(spec: &NetworkSpec, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut channels = spec.input_channels;
        let mut layers = Vec::with_capacity(spec.layers.len());
        for layer in &spec.layers {
            let built = match *layer {
                LayerSpec::Conv { out_channels, kernel } => {
                    let fan_in = (channels * kernel * kernel) as f64;
                    let normal = Normal::new(0.0, libm::sqrt(2.0 / fan_in)).expect("positive std");
                    let weights = (0..out_channels * channels * kernel * kernel)
                        .map(|_| normal.sample(&mut rng))
                        .collect();
                    let conv = Conv2d::new(
                        Tensor::parameter([out_channels, channels, kernel, kernel], weights)?,
                        Tensor::parameter([1, out_channels, 1, 1], alloc::vec![0.0; out_channels])?,
                    )?;
                    channels = out_channels;
                    Layer::Conv(conv)
                }
                LayerSpec::BatchNorm => Layer::BatchNorm(BatchNorm::new(channels)),
                LayerSpec::LeakyRelu { slope } => Layer::LeakyRelu(LeakyRelu::new(slope)),
                LayerSpec::HaarDown => {
                    channels *= 4;
                    Layer::HaarDown
                }
                LayerSpec::HaarUp => {
                    channels /= 4;
                    Layer::HaarUp
                }
                LayerSpec::AmplitudePhaseHead => Layer::Head(AmplitudePhaseHead::new()),
            };
            layers.push(built);
        }
        Ok(Self { spec: spec.clone(), layers })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn forward(&mut self, input: &Tensor) -> Result<Tensor> {
        let [_, _, h, w] = input.shape();
        self.spec.output_shape(h, w)?;
        let mut x = input.clone();
        for layer in self.layers.iter_mut() {
            x = layer.forward(&x)?;
        }
        Ok(x)
    }

    /// Back-propagates `grad` (w.r.t. the last forward output), accumulating
    /// parameter gradients. Returns the gradient w.r.t. the input.
    pub fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.parameters_mut()).collect()
    }

    pub fn parameters(&self) -> Vec<&Tensor> {
        self.layers.iter().flat_map(|l| l.parameters()).collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|t| t.len()).sum()
    }

    /// Zeroes the weights of the last convolution, so that the network
    /// output no longer depends on the input.
    pub fn zero_output_projection(&mut self) {
        if let Some(Layer::Conv(conv)) = self.layers.iter_mut().rev().find(|l| matches!(l, Layer::Conv(_))) {
            conv.weight.data_mut().iter_mut().for_each(|w| *w = 0.0);
        }
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }
}
