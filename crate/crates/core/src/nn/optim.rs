//! AdamW with the AMSGrad maximum-of-second-moments denominator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 1e-2,
        }
    }
}

/// Moments for one parameter tensor. `t` counts the steps this tensor took.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_max: Vec<f64>,
    pub t: u64,
}

impl TensorState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            v_max: vec![0.0; len],
            t: 0,
        }
    }
}

/// One decoupled-weight-decay AMSGrad update of `param` in place.
pub fn adamw_step(param: &mut [f64], grad: &[f64], state: &mut TensorState, cfg: &AdamWConfig) {
    debug_assert_eq!(param.len(), grad.len());
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    let step = cfg.lr / bc1;
    let bc2_sqrt = bc2.sqrt();
    for i in 0..param.len() {
        let g = grad[i];
        param[i] *= 1.0 - cfg.lr * cfg.weight_decay;
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        if state.v[i] > state.v_max[i] {
            state.v_max[i] = state.v[i];
        }
        let denom = state.v_max[i].sqrt() / bc2_sqrt + cfg.eps;
        param[i] -= step * state.m[i] / denom;
    }
}

/// Optimizer over an ordered list of parameter tensors.
#[derive(Clone, Debug)]
pub struct AdamW {
    pub config: AdamWConfig,
    states: Vec<TensorState>,
}

impl AdamW {
    pub fn new(config: AdamWConfig, tensor_lens: &[usize]) -> Self {
        Self {
            config,
            states: tensor_lens.iter().map(|&n| TensorState::new(n)).collect(),
        }
    }

    pub fn states(&self) -> &[TensorState] {
        &self.states
    }

    /// Updates every tensor whose `active` flag is set. Inactive tensors
    /// keep both their values and their moments. All gradients are
    /// checked before anything is modified.
    pub fn step(
        &mut self,
        params: Vec<&mut [f64]>,
        grads: Vec<&[f64]>,
        active: &[bool],
        name_of: impl Fn(usize) -> String,
    ) -> Result<()> {
        if params.len() != self.states.len() || grads.len() != params.len() || active.len() != params.len() {
            return Err(Error::Internal(format!(
                "optimizer tracks {} tensors, got {} params / {} grads / {} flags",
                self.states.len(),
                params.len(),
                grads.len(),
                active.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if !active[i] {
                continue;
            }
            if let Some(pos) = g.iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    param: format!("{}[{pos}]", name_of(i)),
                    detail: format!("non-finite gradient {}", g[pos]),
                });
            }
        }
        for (i, (p, g)) in params.into_iter().zip(grads).enumerate() {
            if active[i] {
                adamw_step(p, g, &mut self.states[i], &self.config);
            }
        }
        Ok(())
    }
}
