//! Scaled dot-product attention for a single query row against a small
//! key/value matrix, with `H` heads and an output projection.

use super::matrix::{dot, Matrix};
use super::rng::Rng;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct AttentionHead {
    /// model-dim × d_k
    pub w_query: Matrix,
    pub w_key: Matrix,
    pub w_value: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Attention {
    pub heads: Vec<AttentionHead>,
    /// (H·d_k) × model-dim
    pub w_out: Matrix,
}

/// Intermediate values of one attention evaluation.
#[derive(Clone, Debug)]
pub struct AttentionTrace {
    pub queries: Vec<Vec<f64>>,
    pub keys: Vec<Matrix>,
    pub values: Vec<Matrix>,
    /// Softmax weights per head, length m.
    pub weights: Vec<Vec<f64>>,
    pub concat: Vec<f64>,
    pub output: Vec<f64>,
}

pub struct AttentionGrads {
    pub query: Vec<f64>,
    pub keys: Matrix,
    pub values: Matrix,
}

fn uniform_matrix(rows: usize, cols: usize, fan_in: usize, rng: &mut Rng) -> Matrix {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut m = Matrix::zeros(rows, cols);
    for v in m.as_mut_slice() {
        *v = rng.uniform_in(-bound, bound);
    }
    m
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `x · W` for a row vector `x`.
fn vec_mat(x: &[f64], w: &Matrix) -> Vec<f64> {
    let mut out = vec![0.0; w.cols()];
    for (k, &xk) in x.iter().enumerate() {
        if xk == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(w.row(k)) {
            *o += xk * wv;
        }
    }
    out
}

impl Attention {
    pub fn zeros(model_dim: usize, key_dim: usize, heads: usize) -> Self {
        Self {
            heads: (0..heads)
                .map(|_| AttentionHead {
                    w_query: Matrix::zeros(model_dim, key_dim),
                    w_key: Matrix::zeros(model_dim, key_dim),
                    w_value: Matrix::zeros(model_dim, key_dim),
                })
                .collect(),
            w_out: Matrix::zeros(heads * key_dim, model_dim),
        }
    }

    pub fn uniform(model_dim: usize, key_dim: usize, heads: usize, rng: &mut Rng) -> Self {
        let heads_v = (0..heads)
            .map(|_| AttentionHead {
                w_query: uniform_matrix(model_dim, key_dim, model_dim, rng),
                w_key: uniform_matrix(model_dim, key_dim, model_dim, rng),
                w_value: uniform_matrix(model_dim, key_dim, model_dim, rng),
            })
            .collect();
        Self {
            heads: heads_v,
            w_out: uniform_matrix(heads * key_dim, model_dim, heads * key_dim, rng),
        }
    }

    /// Attention with identity projections (single head, d_k = model-dim).
    pub fn identity(model_dim: usize) -> Self {
        Self {
            heads: vec![AttentionHead {
                w_query: Matrix::identity(model_dim),
                w_key: Matrix::identity(model_dim),
                w_value: Matrix::identity(model_dim),
            }],
            w_out: Matrix::identity(model_dim),
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.model_dim(), self.key_dim(), self.heads.len())
    }

    pub fn model_dim(&self) -> usize {
        self.w_out.cols()
    }

    pub fn key_dim(&self) -> usize {
        self.heads[0].w_query.cols()
    }

    pub fn param_count(&self) -> usize {
        self.heads.len() * 3 * self.model_dim() * self.key_dim() + self.w_out.len()
    }

    pub fn forward(&self, query: &[f64], keys: &Matrix, values: &Matrix) -> Result<AttentionTrace> {
        let d = self.model_dim();
        if query.len() != d || keys.cols() != d || values.cols() != d {
            return Err(Error::config(format!(
                "attention model-dim is {d}, got query {} keys {} values {}",
                query.len(),
                keys.cols(),
                values.cols()
            )));
        }
        if keys.rows() != values.rows() || keys.rows() == 0 {
            return Err(Error::config(format!(
                "attention needs matching non-empty key/value rows, got {} and {}",
                keys.rows(),
                values.rows()
            )));
        }
        let scale = 1.0 / (self.key_dim() as f64).sqrt();
        let mut trace = AttentionTrace {
            queries: Vec::with_capacity(self.heads.len()),
            keys: Vec::with_capacity(self.heads.len()),
            values: Vec::with_capacity(self.heads.len()),
            weights: Vec::with_capacity(self.heads.len()),
            concat: Vec::with_capacity(self.heads.len() * self.key_dim()),
            output: Vec::new(),
        };
        for head in &self.heads {
            let qh = vec_mat(query, &head.w_query);
            let kh = keys.matmul(&head.w_key)?;
            let vh = values.matmul(&head.w_value)?;
            let logits: Vec<f64> = (0..kh.rows()).map(|j| dot(&qh, kh.row(j)) * scale).collect();
            let p = softmax(&logits);
            let mut out = vec![0.0; vh.cols()];
            for (j, pj) in p.iter().enumerate() {
                for (o, v) in out.iter_mut().zip(vh.row(j)) {
                    *o += pj * v;
                }
            }
            trace.concat.extend_from_slice(&out);
            trace.queries.push(qh);
            trace.keys.push(kh);
            trace.values.push(vh);
            trace.weights.push(p);
        }
        trace.output = vec_mat(&trace.concat, &self.w_out);
        Ok(trace)
    }

    /// Accumulates parameter gradients and returns input gradients.
    pub fn backward(
        &self,
        query: &[f64],
        keys: &Matrix,
        values: &Matrix,
        trace: &AttentionTrace,
        grad_out: &[f64],
        grad: &mut Attention,
    ) -> AttentionGrads {
        let d = self.model_dim();
        let dk = self.key_dim();
        let m = keys.rows();
        let scale = 1.0 / (dk as f64).sqrt();

        // A = concat · W_O
        for (r, &c) in trace.concat.iter().enumerate() {
            for (g, go) in grad.w_out.row_mut(r).iter_mut().zip(grad_out) {
                *g += c * go;
            }
        }
        let dconcat: Vec<f64> = (0..trace.concat.len())
            .map(|r| dot(self.w_out.row(r), grad_out))
            .collect();

        let mut dquery = vec![0.0; d];
        let mut dkeys = Matrix::zeros(m, d);
        let mut dvalues = Matrix::zeros(m, d);

        for (h, head) in self.heads.iter().enumerate() {
            let dhead = &dconcat[h * dk..(h + 1) * dk];
            let p = &trace.weights[h];
            let qh = &trace.queries[h];
            let kh = &trace.keys[h];
            let vh = &trace.values[h];

            // head = Σ_j p_j vh_j
            let dp: Vec<f64> = (0..m).map(|j| dot(vh.row(j), dhead)).collect();
            let pdp: f64 = p.iter().zip(&dp).map(|(a, b)| a * b).sum();
            let dlogits: Vec<f64> = p.iter().zip(&dp).map(|(pj, dpj)| pj * (dpj - pdp)).collect();

            let mut dqh = vec![0.0; dk];
            let mut dkh = Matrix::zeros(m, dk);
            let mut dvh = Matrix::zeros(m, dk);
            for j in 0..m {
                let s = dlogits[j] * scale;
                for c in 0..dk {
                    dqh[c] += s * kh[(j, c)];
                    dkh[(j, c)] = s * qh[c];
                    dvh[(j, c)] = p[j] * dhead[c];
                }
            }

            let gh = &mut grad.heads[h];
            for (r, &qr) in query.iter().enumerate() {
                for (g, dq) in gh.w_query.row_mut(r).iter_mut().zip(&dqh) {
                    *g += qr * dq;
                }
            }
            for j in 0..m {
                for r in 0..d {
                    let kj = keys[(j, r)];
                    let vj = values[(j, r)];
                    for c in 0..dk {
                        gh.w_key[(r, c)] += kj * dkh[(j, c)];
                        gh.w_value[(r, c)] += vj * dvh[(j, c)];
                    }
                }
            }

            for r in 0..d {
                dquery[r] += dot(head.w_query.row(r), &dqh);
            }
            for j in 0..m {
                for r in 0..d {
                    dkeys[(j, r)] += dot(head.w_key.row(r), dkh.row(j));
                    dvalues[(j, r)] += dot(head.w_value.row(r), dvh.row(j));
                }
            }
        }

        AttentionGrads {
            query: dquery,
            keys: dkeys,
            values: dvalues,
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(self.heads.len() * 3 + 1);
        for h in &self.heads {
            out.push(h.w_query.as_slice());
            out.push(h.w_key.as_slice());
            out.push(h.w_value.as_slice());
        }
        out.push(self.w_out.as_slice());
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(self.heads.len() * 3 + 1);
        for h in &mut self.heads {
            out.push(h.w_query.as_mut_slice());
            out.push(h.w_key.as_mut_slice());
            out.push(h.w_value.as_mut_slice());
        }
        out.push(self.w_out.as_mut_slice());
        out
    }
}
