use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Dense `(batch, channels, height, width)` array with an optional gradient
/// buffer of the same shape.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: [usize; 4],
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn zeros(shape: [usize; 4]) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.iter().product()],
            grad: None,
        }
    }

    pub fn from_vec(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.iter().product::<usize>() {
            return Err(Error::TensorShape {
                expected: shape,
                found: [data.len(), 1, 1, 1],
            });
        }
        Ok(Self { shape, data, grad: None })
    }

    /// A trainable tensor with a zeroed gradient buffer.
    pub fn parameter(shape: [usize; 4], data: Vec<f64>) -> Result<Self> {
        let mut t = Self::from_vec(shape, data)?;
        t.grad = Some(vec![0.0; t.data.len()]);
        Ok(t)
    }

    #[inline]
    pub fn shape(&self) -> [usize; 4] {
        self.shape
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn requires_grad(&self) -> bool {
        self.grad.is_some()
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [f64]> {
        self.grad.as_deref_mut()
    }

    pub fn zero_grad(&mut self) {
        if let Some(g) = self.grad.as_mut() {
            g.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    /// Values and gradient together, for optimizers.
    pub fn data_and_grad_mut(&mut self) -> (&mut [f64], Option<&[f64]>) {
        (&mut self.data, self.grad.as_deref())
    }

    /// Contiguous `height * width` plane of one channel.
    pub fn plane(&self, batch: usize, channel: usize) -> &[f64] {
        let hw = self.shape[2] * self.shape[3];
        let start = (batch * self.shape[1] + channel) * hw;
        &self.data[start..start + hw]
    }

    pub fn plane_mut(&mut self, batch: usize, channel: usize) -> &mut [f64] {
        let hw = self.shape[2] * self.shape[3];
        let start = (batch * self.shape[1] + channel) * hw;
        &mut self.data[start..start + hw]
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn check_shape(&self, expected: [usize; 4]) -> Result<()> {
        if self.shape != expected {
            return Err(Error::TensorShape {
                expected,
                found: self.shape,
            });
        }
        Ok(())
    }
}
