//! Adam optimizer with bias correction.

use crate::autodiff::Parameter;
use crate::error::{CoreError, Result};
use crate::tensor::Tensor;

/// Optimizer hyperparameters. The training default is `lr = 1e-3`,
/// `beta1 = 0.9`, `beta2 = 0.999`, `epsilon = 1e-8`, no weight decay.
/// `weight_decay` is the classic L2 form folded into the gradient.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
        }
    }
}

/// Per-parameter first/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Tensor>,
    second: Vec<Tensor>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &[Parameter], config: AdamConfig) -> Self {
        AdamState {
            config,
            first: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            second: params.iter().map(|p| Tensor::zeros(p.value.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn set_lr(&mut self, lr: f64) {
        self.config.lr = lr;
    }
}

/// One Adam update from the gradients currently stored in `params`.
/// Gradients are left untouched; the caller resets them.
pub fn adam_step(params: &mut [Parameter], state: &mut AdamState) -> Result<()> {
    if params.len() != state.first.len() {
        return Err(CoreError::OptimizerStateMismatch(format!(
            "state tracks {} parameters, got {}",
            state.first.len(),
            params.len()
        )));
    }
    state.step += 1;
    let t = state.step as i32;
    let AdamConfig {
        lr,
        beta1,
        beta2,
        epsilon,
        weight_decay,
    } = state.config;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);
    for (i, p) in params.iter_mut().enumerate() {
        if state.first[i].shape() != p.value.shape() {
            return Err(CoreError::OptimizerStateMismatch(format!(
                "parameter {} ({}) changed shape",
                i, p.name
            )));
        }
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        let g = p.gradient.data();
        let x = p.value.data_mut();
        for j in 0..g.len() {
            let grad = if weight_decay != 0.0 {
                g[j] + weight_decay * x[j]
            } else {
                g[j]
            };
            m[j] = beta1 * m[j] + (1.0 - beta1) * grad;
            v[j] = beta2 * v[j] + (1.0 - beta2) * grad * grad;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            x[j] -= lr * m_hat / (v_hat.sqrt() + epsilon);
        }
    }
    Ok(())
}
