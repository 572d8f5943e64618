use serde::{Deserialize, Serialize};

use super::cache::{ForwardCache, LayerId};
use super::matrix::Matrix;
use super::rng::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }
}

/// Fully connected layer computing `act(x·Wᵀ + b)` with `W` stored out×in.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense {
    pub weight: Matrix,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(input: usize, output: usize, activation: Activation) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
            activation,
        }
    }

    /// Weights and biases drawn from `U[-1/√in, 1/√in]`.
    pub fn uniform(input: usize, output: usize, activation: Activation, rng: &mut Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut layer = Self::zeros(input, output, activation);
        for w in layer.weight.as_mut_slice() {
            *w = rng.uniform_in(-bound, bound);
        }
        for b in &mut layer.bias {
            *b = rng.uniform_in(-bound, bound);
        }
        layer
    }

    pub fn input_dim(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weight.rows()
    }

    pub fn param_count(&self) -> usize {
        self.weight.len() + self.bias.len()
    }

    pub fn forward(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.input_dim() {
            return Err(Error::config(format!(
                "dense layer expects {} inputs, got {}",
                self.input_dim(),
                input.cols()
            )));
        }
        let mut out = input.matmul_t(&self.weight)?;
        for r in 0..out.rows() {
            for (v, b) in out.row_mut(r).iter_mut().zip(&self.bias) {
                *v = self.activation.apply(*v + b);
            }
        }
        Ok(out)
    }

    /// Forward pass that also records the output under `id`.
    pub fn forward_cached(&self, input: &Matrix, id: LayerId, cache: &mut ForwardCache) -> Result<Matrix> {
        let out = self.forward(input)?;
        cache.push(id, out.clone());
        Ok(out)
    }

    /// Accumulates parameter gradients into `grad` and returns dL/d(input)
    /// when `need_input_grad` is set.
    pub fn backward(
        &self,
        input: &Matrix,
        output: &Matrix,
        grad_out: &Matrix,
        grad: &mut Dense,
        need_input_grad: bool,
    ) -> Option<Matrix> {
        let (batch, out_dim) = grad_out.shape();
        let in_dim = self.input_dim();
        let mut pre = grad_out.clone();
        if self.activation == Activation::Relu {
            for (g, o) in pre.as_mut_slice().iter_mut().zip(output.as_slice()) {
                if *o <= 0.0 {
                    *g = 0.0;
                }
            }
        }
        for r in 0..batch {
            let gp = pre.row(r);
            let x = input.row(r);
            for o in 0..out_dim {
                let g = gp[o];
                if g == 0.0 {
                    continue;
                }
                grad.bias[o] += g;
                let wrow = grad.weight.row_mut(o);
                for (w, xi) in wrow.iter_mut().zip(x) {
                    *w += g * xi;
                }
            }
        }
        if !need_input_grad {
            return None;
        }
        let mut gin = Matrix::zeros(batch, in_dim);
        for r in 0..batch {
            let gp = pre.row(r);
            let dst = gin.row_mut(r);
            for (o, &g) in gp.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                for (d, w) in dst.iter_mut().zip(self.weight.row(o)) {
                    *d += g * w;
                }
            }
        }
        Some(gin)
    }

    pub fn tensors(&self) -> [&[f64]; 2] {
        [self.weight.as_slice(), &self.bias]
    }

    pub fn tensors_mut(&mut self) -> [&mut [f64]; 2] {
        [self.weight.as_mut_slice(), &mut self.bias]
    }
}

/// A chain of dense layers applied in order.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

impl Mlp {
    /// `dims` lists every width including input; `activations` has one entry per layer.
    pub fn uniform(dims: &[usize], activations: &[Activation], rng: &mut Rng) -> Self {
        debug_assert_eq!(dims.len(), activations.len() + 1);
        let layers = dims
            .windows(2)
            .zip(activations)
            .map(|(w, &a)| Dense::uniform(w[0], w[1], a, rng))
            .collect();
        Self { layers }
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| Dense::zeros(l.input_dim(), l.output_dim(), l.activation))
                .collect(),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].input_dim()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, Dense::output_dim)
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Dense::param_count).sum()
    }

    /// Returns every layer output, last one being the MLP output.
    pub fn forward_cached(
        &self,
        input: &Matrix,
        id: impl Fn(usize) -> LayerId,
        cache: &mut ForwardCache,
    ) -> Result<Vec<Matrix>> {
        let mut outs: Vec<Matrix> = Vec::with_capacity(self.layers.len());
        for (i, layer) in self.layers.iter().enumerate() {
            let x = if i == 0 { input } else { &outs[i - 1] };
            let y = layer.forward_cached(x, id(i), cache)?;
            outs.push(y);
        }
        Ok(outs)
    }

    pub fn backward(
        &self,
        input: &Matrix,
        outputs: &[Matrix],
        grad_out: Matrix,
        grad: &mut Mlp,
        need_input_grad: bool,
    ) -> Option<Matrix> {
        let mut g = grad_out;
        for i in (0..self.layers.len()).rev() {
            let x = if i == 0 { input } else { &outputs[i - 1] };
            let need = i > 0 || need_input_grad;
            g = self.layers[i].backward(x, &outputs[i], &g, &mut grad.layers[i], need)?;
        }
        Some(g)
    }
}
