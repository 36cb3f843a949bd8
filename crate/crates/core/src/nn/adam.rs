use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seed for weight initialization.
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 5e-4,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::InvalidParameter("Adam betas must lie in [0, 1)".into()));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter("Adam epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// First and second moment estimates, one buffer per parameter tensor.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AdamState {
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new() -> Self {
        Self::default()
    }
}

/// One bias-corrected Adam update of every parameter from its stored
/// gradient.
pub fn adam_step(params: &mut [&mut Tensor], state: &mut AdamState, cfg: &OptimizerConfig) -> Result<()> {
    if state.first.is_empty() {
        state.first = params.iter().map(|p| vec![0.0; p.len()]).collect();
        state.second = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    if state.first.len() != params.len() {
        return Err(Error::InvalidParameter("optimizer state does not match parameter list".into()));
    }
    state.step += 1;
    let t = state.step as f64;
    let correction1 = 1.0 - libm::pow(cfg.beta1, t);
    let correction2 = 1.0 - libm::pow(cfg.beta2, t);
    for ((param, m), v) in params.iter_mut().zip(state.first.iter_mut()).zip(state.second.iter_mut()) {
        let (data, grad) = param.data_and_grad_mut();
        let Some(grad) = grad else { continue };
        for i in 0..data.len() {
            let g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / correction1;
            let v_hat = v[i] / correction2;
            data[i] -= cfg.learning_rate * m_hat / (libm::sqrt(v_hat) + cfg.epsilon);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = OptimizerConfig::default();
        let mut p = Tensor::parameter([1, 1, 1, 3], vec![1.0, 1.0, 1.0]).unwrap();
        p.grad_mut().unwrap().copy_from_slice(&[0.3, -2.0, 1e-3]);
        let mut state = AdamState::new();
        adam_step(&mut [&mut p], &mut state, &cfg).unwrap();
        let deltas: Vec<f64> = p.data().iter().map(|v| v - 1.0).collect();
        for (d, s) in deltas.iter().zip([-1.0, 1.0, -1.0]) {
            assert!((d - s * cfg.learning_rate).abs() <= cfg.learning_rate * 1e-4, "{d}");
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let cfg = OptimizerConfig::default();
        let mut p = Tensor::parameter([1, 1, 1, 2], vec![0.5, -0.25]).unwrap();
        let mut state = AdamState::new();
        for _ in 0..50 {
            adam_step(&mut [&mut p], &mut state, &cfg).unwrap();
        }
        assert_eq!(p.data(), &[0.5, -0.25]);
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { beta1: 1.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig::default().validate().is_ok());
    }
}
