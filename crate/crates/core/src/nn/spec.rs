use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LayerSpec {
    /// Square odd kernel (3 for the body, 1 for the final projection).
    Conv { out_channels: usize, kernel: usize },
    BatchNorm,
    LeakyRelu { slope: f64 },
    HaarDown,
    HaarUp,
    /// Logistic amplitude / `pi tanh` phase output.
    AmplitudePhaseHead,
}

/// Ordered layer list of a feed-forward network (no skip connections).
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkSpec {
    pub input_channels: usize,
    pub layers: Vec<LayerSpec>,
}

pub const DEFAULT_STAGES: [usize; 3] = [16, 32, 64];
pub const LEAKY_SLOPE: f64 = 0.1;

/// Hourglass autoencoder: per encoder stage `conv3x3 -> BN -> leaky` then
/// Haar down-sampling, a mirrored decoder starting each stage with Haar
/// up-sampling, and a tail `conv3x3 -> leaky -> conv3x3 -> leaky -> conv1x1`
/// without batch normalization, followed by the amplitude/phase head.
pub fn build_hourglass(input_channels: usize, stage_channels: &[usize], output_channels: usize) -> Result<NetworkSpec> {
    if stage_channels.is_empty() || stage_channels.contains(&0) {
        return Err(Error::InvalidParameter("stage channel counts must be non-empty and positive".into()));
    }
    if input_channels == 0 || output_channels == 0 || output_channels > 2 {
        return Err(Error::InvalidParameter(format!(
            "need >= 1 input channel and 1 or 2 output channels, got {input_channels} -> {output_channels}"
        )));
    }
    let mut layers = Vec::new();
    for &c in stage_channels {
        layers.push(LayerSpec::Conv { out_channels: c, kernel: 3 });
        layers.push(LayerSpec::BatchNorm);
        layers.push(LayerSpec::LeakyRelu { slope: LEAKY_SLOPE });
        layers.push(LayerSpec::HaarDown);
    }
    for &c in stage_channels.iter().rev() {
        layers.push(LayerSpec::HaarUp);
        layers.push(LayerSpec::Conv { out_channels: c, kernel: 3 });
        layers.push(LayerSpec::BatchNorm);
        layers.push(LayerSpec::LeakyRelu { slope: LEAKY_SLOPE });
    }
    let tail = stage_channels[0];
    layers.push(LayerSpec::Conv { out_channels: tail, kernel: 3 });
    layers.push(LayerSpec::LeakyRelu { slope: LEAKY_SLOPE });
    layers.push(LayerSpec::Conv { out_channels: tail, kernel: 3 });
    layers.push(LayerSpec::LeakyRelu { slope: LEAKY_SLOPE });
    layers.push(LayerSpec::Conv { out_channels: output_channels, kernel: 1 });
    layers.push(LayerSpec::AmplitudePhaseHead);
    Ok(NetworkSpec { input_channels, layers })
}

impl NetworkSpec {
    pub fn hourglass_default() -> Self {
        build_hourglass(1, &DEFAULT_STAGES, 2).expect("default hourglass is valid")
    }

    pub fn haar_depth(&self) -> usize {
        self.layers.iter().filter(|l| matches!(l, LayerSpec::HaarDown)).count()
    }

    /// Checks that the layers chain for a `height x width` input and returns
    /// the output shape `(channels, height, width)`.
    pub fn output_shape(&self, height: usize, width: usize) -> Result<(usize, usize, usize)> {
        let (mut c, mut h, mut w) = (self.input_channels, height, width);
        let mut open_downs = 0usize;
        for (i, layer) in self.layers.iter().enumerate() {
            match *layer {
                LayerSpec::Conv { out_channels, kernel } => {
                    if kernel % 2 == 0 || out_channels == 0 {
                        return Err(Error::InvalidParameter(format!("layer {i}: bad convolution")));
                    }
                    if kernel > 1 && (h < 2 || w < 2) {
                        return Err(Error::InvalidParameter(format!("layer {i}: {h}x{w} too small to pad")));
                    }
                    c = out_channels;
                }
                LayerSpec::BatchNorm | LayerSpec::LeakyRelu { .. } => {}
                LayerSpec::HaarDown => {
                    if h % 2 != 0 || w % 2 != 0 {
                        return Err(Error::InvalidParameter(format!(
                            "layer {i}: Haar downsampling of odd size {h}x{w}; input must be divisible by 2^{}",
                            self.haar_depth()
                        )));
                    }
                    open_downs += 1;
                    c *= 4;
                    h /= 2;
                    w /= 2;
                }
                LayerSpec::HaarUp => {
                    if open_downs == 0 {
                        return Err(Error::InvalidParameter(format!("layer {i}: Haar upsampling without matching downsampling")));
                    }
                    if c % 4 != 0 {
                        return Err(Error::InvalidParameter(format!("layer {i}: {c} channels not divisible by 4")));
                    }
                    open_downs -= 1;
                    c /= 4;
                    h *= 2;
                    w *= 2;
                }
                LayerSpec::AmplitudePhaseHead => {
                    if c == 0 || c > 2 {
                        return Err(Error::InvalidParameter(format!("layer {i}: head needs 1 or 2 channels, got {c}")));
                    }
                    if i + 1 != self.layers.len() {
                        return Err(Error::InvalidParameter("the output head must be the last layer".into()));
                    }
                }
            }
        }
        if open_downs != 0 {
            return Err(Error::InvalidParameter(format!("{open_downs} Haar downsampling layer(s) left unmatched")));
        }
        Ok((c, h, w))
    }

    /// Plain-text descriptor, one layer per line.
    pub fn to_descriptor(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "input {}", self.input_channels);
        for layer in &self.layers {
            let _ = match layer {
                LayerSpec::Conv { out_channels, kernel } => writeln!(s, "conv {out_channels} {kernel}"),
                LayerSpec::BatchNorm => writeln!(s, "batchnorm"),
                LayerSpec::LeakyRelu { slope } => writeln!(s, "leaky_relu {slope}"),
                LayerSpec::HaarDown => writeln!(s, "haar_down"),
                LayerSpec::HaarUp => writeln!(s, "haar_up"),
                LayerSpec::AmplitudePhaseHead => writeln!(s, "head amplitude_phase"),
            };
        }
        s
    }

    pub fn from_descriptor(text: &str) -> Result<Self> {
        let bad = |line: &str| Error::InvalidParameter(format!("bad layer descriptor line: {line:?}"));
        let mut input_channels = None;
        let mut layers = Vec::new();
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let mut parts = line.split_whitespace();
            let name = parts.next().ok_or_else(|| bad(line))?;
            let mut num = || -> Result<&str> { parts.next().ok_or_else(|| bad(line)) };
            match name {
                "input" => input_channels = Some(num()?.parse().map_err(|_| bad(line))?),
                "conv" => {
                    let out_channels = num()?.parse().map_err(|_| bad(line))?;
                    let kernel = num()?.parse().map_err(|_| bad(line))?;
                    layers.push(LayerSpec::Conv { out_channels, kernel });
                }
                "batchnorm" => layers.push(LayerSpec::BatchNorm),
                "leaky_relu" => layers.push(LayerSpec::LeakyRelu {
                    slope: num()?.parse().map_err(|_| bad(line))?,
                }),
                "haar_down" => layers.push(LayerSpec::HaarDown),
                "haar_up" => layers.push(LayerSpec::HaarUp),
                "head" => {
                    if num()? != "amplitude_phase" {
                        return Err(bad(line));
                    }
                    layers.push(LayerSpec::AmplitudePhaseHead);
                }
                _ => return Err(bad(line)),
            }
        }
        Ok(Self {
            input_channels: input_channels.ok_or_else(|| Error::InvalidParameter("descriptor lacks an input line".into()))?,
            layers,
        })
    }
}
