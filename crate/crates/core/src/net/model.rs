//! The multi-task effect-prediction network.
//!
//! For an engaged task `*` and a batch of `(state, action)` pairs:
//!
//! ```text
//! x̂ = P_state[*](x)            task-specific linear projection
//! h = F(x̂)                      shared encoder, two ReLU layers
//! r_i = f_i(h)   for every i    task encoders, two ReLU layers
//! z_i = [r_i : δ_i]             δ_i = 1 only for i = *
//! A = Attn(q = z_*, K = V = Z)  shared attention over the stacked z_i
//! ẽ = g_*([A : P_action[*](a)]) task decoder, ReLU×3 then linear
//! ```
//!
//! Training an engaged task only touches the shared modules and that
//! task's own modules. The other task encoders still run forward to fill
//! `Z`, but gradient never flows into their branches.

use super::spec::{Ablation, NetworkSpec, TaskSpec, Variant};
use crate::error::{Error, Result};
use crate::nn::{
    energy_of, Activation, AdamW, AdamWConfig, Attention, AttentionTrace, Dense, ForwardCache, LayerId, Matrix, Mlp,
    Rng,
};

/// Which parameter set a tensor belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Owner {
    Shared,
    Task(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamInfo {
    pub name: String,
    pub owner: Owner,
    pub len: usize,
}

/// Module-level trainability. A frozen module gets no gradient and passes
/// none to its inputs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainMask {
    pub shared_encoder: bool,
    pub attention: bool,
    pub state_projection: Vec<bool>,
    pub action_projection: Vec<bool>,
    pub task_encoder: Vec<bool>,
    pub decoder: Vec<bool>,
}

impl TrainMask {
    /// Shared modules plus the modules of `task`.
    pub fn engaged(tasks: usize, task: usize) -> Self {
        let only = |i: usize| i == task;
        Self {
            shared_encoder: true,
            attention: true,
            state_projection: (0..tasks).map(only).collect(),
            action_projection: (0..tasks).map(only).collect(),
            task_encoder: (0..tasks).map(only).collect(),
            decoder: (0..tasks).map(only).collect(),
        }
    }

    pub fn frozen(tasks: usize) -> Self {
        Self {
            shared_encoder: false,
            attention: false,
            state_projection: vec![false; tasks],
            action_projection: vec![false; tasks],
            task_encoder: vec![false; tasks],
            decoder: vec![false; tasks],
        }
    }

    pub fn all(tasks: usize) -> Self {
        Self {
            shared_encoder: true,
            attention: true,
            state_projection: vec![true; tasks],
            action_projection: vec![true; tasks],
            task_encoder: vec![true; tasks],
            decoder: vec![true; tasks],
        }
    }
}

/// Everything a backward pass needs from the forward pass.
#[derive(Clone, Debug)]
pub struct ForwardPass {
    pub engaged: usize,
    pub prediction: Matrix,
    pub cache: ForwardCache,
    pub energy: f64,
    states: Matrix,
    actions: Matrix,
    projected_state: Matrix,
    shared: Vec<Matrix>,
    task_outputs: Vec<Vec<Matrix>>,
    /// Per sample: the stacked Z (m × attention dim) as fed to K and V.
    z_keys: Vec<Matrix>,
    /// Per sample: the query row z_*.
    queries: Vec<Vec<f64>>,
    traces: Vec<AttentionTrace>,
    zeroed: Vec<usize>,
    projected_action: Matrix,
    decoder_input: Matrix,
    decoder: Vec<Matrix>,
}

impl ForwardPass {
    /// Stacked task representations for sample `b`, as seen by keys/values.
    pub fn z_matrix(&self, b: usize) -> &Matrix {
        &self.z_keys[b]
    }

    pub fn query(&self, b: usize) -> &[f64] {
        &self.queries[b]
    }

    pub fn attention_weights(&self, b: usize) -> Option<&[f64]> {
        self.traces.get(b).map(|t| t.weights[0].as_slice())
    }

    pub fn decoder_input(&self) -> &Matrix {
        &self.decoder_input
    }
}

/// Result of one optimisation step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepStats {
    pub mse: f64,
    pub mae: f64,
    pub energy: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiTaskModel {
    spec: NetworkSpec,
    tasks: Vec<TaskSpec>,
    ablation: Ablation,
    pub shared_encoder: Mlp,
    pub attention: Option<Attention>,
    pub state_projection: Vec<Dense>,
    pub action_projection: Vec<Dense>,
    pub task_encoders: Vec<Mlp>,
    pub decoders: Vec<Mlp>,
}

const ENC: [Activation; 2] = [Activation::Relu, Activation::Relu];
const DEC: [Activation; 4] = [
    Activation::Relu,
    Activation::Relu,
    Activation::Relu,
    Activation::Identity,
];

pub fn mse_mae(pred: &Matrix, target: &Matrix) -> (f64, f64) {
    let n = pred.len() as f64;
    let (mut se, mut ae) = (0.0, 0.0);
    for (p, t) in pred.as_slice().iter().zip(target.as_slice()) {
        let d = p - t;
        se += d * d;
        ae += d.abs();
    }
    (se / n, ae / n)
}

impl MultiTaskModel {
    /// Builds and initialises every module.
    pub fn build(tasks: &[TaskSpec], spec: NetworkSpec, ablation: Ablation, rng: &mut Rng) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::config("at least one task is required"));
        }
        spec.validate()?;
        for t in tasks {
            t.validate()?;
        }
        if spec.variant == Variant::SingleTask && tasks.len() != 1 {
            return Err(Error::config(
                "a single-task network holds exactly one task; build one per task",
            ));
        }
        let m = tasks.len();
        let zdim = spec.attention_dim(ablation);
        let dec_in = spec.decoder_input_dim(ablation, m);

        let shared_encoder = Mlp::uniform(&[spec.state_dim, spec.shared_hidden, spec.latent_dim], &ENC, rng);
        let attention = ablation
            .use_attention
            .then(|| Attention::uniform(zdim, zdim, spec.heads, rng));
        let mut state_projection = Vec::with_capacity(m);
        let mut action_projection = Vec::with_capacity(m);
        let mut task_encoders = Vec::with_capacity(m);
        let mut decoders = Vec::with_capacity(m);
        for t in tasks {
            state_projection.push(Dense::uniform(t.state_dim, spec.state_dim, Activation::Identity, rng));
            action_projection.push(Dense::uniform(t.action_dim, spec.action_dim, Activation::Identity, rng));
            task_encoders.push(Mlp::uniform(&[spec.latent_dim, spec.task_hidden, spec.repr_dim], &ENC, rng));
            let mut decoder = Mlp::uniform(
                &[
                    dec_in,
                    spec.decoder_hidden,
                    spec.decoder_hidden,
                    spec.decoder_hidden,
                    t.effect_dim,
                ],
                &DEC,
                rng,
            );
            // Zero output layer: every network starts as the zero predictor.
            let out = decoder.layers.last_mut().expect("decoder has layers");
            out.weight.as_mut_slice().fill(0.0);
            out.bias.fill(0.0);
            decoders.push(decoder);
        }
        Ok(Self {
            spec,
            tasks: tasks.to_vec(),
            ablation,
            shared_encoder,
            attention,
            state_projection,
            action_projection,
            task_encoders,
            decoders,
        })
    }

    /// Same structure, every parameter zero. Used as a gradient buffer.
    pub fn zeros_like(&self) -> Self {
        Self {
            spec: self.spec,
            tasks: self.tasks.clone(),
            ablation: self.ablation,
            shared_encoder: self.shared_encoder.zeros_like(),
            attention: self.attention.as_ref().map(Attention::zeros_like),
            state_projection: self
                .state_projection
                .iter()
                .map(|d| Dense::zeros(d.input_dim(), d.output_dim(), d.activation))
                .collect(),
            action_projection: self
                .action_projection
                .iter()
                .map(|d| Dense::zeros(d.input_dim(), d.output_dim(), d.activation))
                .collect(),
            task_encoders: self.task_encoders.iter().map(Mlp::zeros_like).collect(),
            decoders: self.decoders.iter().map(Mlp::zeros_like).collect(),
        }
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task_count(&self) -> usize {
        self.tasks.len()
    }

    pub fn ablation(&self) -> Ablation {
        self.ablation
    }

    /// Tensor metadata in declaration order: shared encoder, attention,
    /// then for each task its state projection, action projection,
    /// encoder and decoder.
    pub fn param_info(&self) -> Vec<ParamInfo> {
        let mut out = Vec::new();
        let dense = |out: &mut Vec<ParamInfo>, prefix: String, d: &Dense, owner: Owner| {
            out.push(ParamInfo {
                name: format!("{prefix}.weight"),
                owner,
                len: d.weight.len(),
            });
            out.push(ParamInfo {
                name: format!("{prefix}.bias"),
                owner,
                len: d.bias.len(),
            });
        };
        for (l, d) in self.shared_encoder.layers.iter().enumerate() {
            dense(&mut out, format!("shared_encoder.{l}"), d, Owner::Shared);
        }
        if let Some(att) = &self.attention {
            for (h, head) in att.heads.iter().enumerate() {
                for (n, w) in [("w_query", &head.w_query), ("w_key", &head.w_key), ("w_value", &head.w_value)] {
                    out.push(ParamInfo {
                        name: format!("attention.head{h}.{n}"),
                        owner: Owner::Shared,
                        len: w.len(),
                    });
                }
            }
            out.push(ParamInfo {
                name: "attention.w_out".into(),
                owner: Owner::Shared,
                len: att.w_out.len(),
            });
        }
        for (i, task) in self.tasks.iter().enumerate() {
            let owner = Owner::Task(i);
            let t = &task.name;
            dense(&mut out, format!("{t}.state_projection"), &self.state_projection[i], owner);
            dense(&mut out, format!("{t}.action_projection"), &self.action_projection[i], owner);
            for (l, d) in self.task_encoders[i].layers.iter().enumerate() {
                dense(&mut out, format!("{t}.encoder.{l}"), d, owner);
            }
            for (l, d) in self.decoders[i].layers.iter().enumerate() {
                dense(&mut out, format!("{t}.decoder.{l}"), d, owner);
            }
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for d in &self.shared_encoder.layers {
            out.extend(d.tensors());
        }
        if let Some(att) = &self.attention {
            out.extend(att.tensors());
        }
        for i in 0..self.tasks.len() {
            out.extend(self.state_projection[i].tensors());
            out.extend(self.action_projection[i].tensors());
            for d in &self.task_encoders[i].layers {
                out.extend(d.tensors());
            }
            for d in &self.decoders[i].layers {
                out.extend(d.tensors());
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for d in &mut self.shared_encoder.layers {
            out.extend(d.tensors_mut());
        }
        if let Some(att) = &mut self.attention {
            out.extend(att.tensors_mut());
        }
        let m = self.tasks.len();
        let (sp, ap, te, de) = (
            &mut self.state_projection,
            &mut self.action_projection,
            &mut self.task_encoders,
            &mut self.decoders,
        );
        for (((s, a), e), d) in sp.iter_mut().zip(ap.iter_mut()).zip(te.iter_mut()).zip(de.iter_mut()).take(m) {
            out.extend(s.tensors_mut());
            out.extend(a.tensors_mut());
            for l in &mut e.layers {
                out.extend(l.tensors_mut());
            }
            for l in &mut d.layers {
                out.extend(l.tensors_mut());
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// All parameters flattened in declaration order.
    pub fn flat_params(&self) -> Vec<f64> {
        self.tensors().concat()
    }

    pub fn set_flat_params(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.param_count() {
            return Err(Error::config(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                values.len()
            )));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    /// Per-tensor trainability for a module mask, in declaration order.
    pub fn tensor_mask(&self, mask: &TrainMask) -> Vec<bool> {
        let mut out = Vec::new();
        out.extend(std::iter::repeat_n(mask.shared_encoder, self.shared_encoder.layers.len() * 2));
        if let Some(att) = &self.attention {
            out.extend(std::iter::repeat_n(mask.attention, att.heads.len() * 3 + 1));
        }
        for i in 0..self.tasks.len() {
            out.extend([mask.state_projection[i]; 2]);
            out.extend([mask.action_projection[i]; 2]);
            out.extend(std::iter::repeat_n(mask.task_encoder[i], self.task_encoders[i].layers.len() * 2));
            out.extend(std::iter::repeat_n(mask.decoder[i], self.decoders[i].layers.len() * 2));
        }
        out
    }

    pub fn optimizer(&self, config: AdamWConfig) -> AdamW {
        let lens: Vec<usize> = self.tensors().iter().map(|t| t.len()).collect();
        AdamW::new(config, &lens)
    }

    fn check_inputs(&self, engaged: usize, states: &Matrix, actions: &Matrix) -> Result<()> {
        let task = self
            .tasks
            .get(engaged)
            .ok_or_else(|| Error::config(format!("engaged task {engaged} out of range ({} tasks)", self.tasks.len())))?;
        if states.cols() != task.state_dim || actions.cols() != task.action_dim {
            return Err(Error::config(format!(
                "task {} expects state/action widths {}/{}, got {}/{}",
                task.name,
                task.state_dim,
                task.action_dim,
                states.cols(),
                actions.cols()
            )));
        }
        if states.rows() != actions.rows() {
            return Err(Error::config(format!(
                "state batch has {} rows, action batch {}",
                states.rows(),
                actions.rows()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, engaged: usize, states: &Matrix, actions: &Matrix) -> Result<ForwardPass> {
        self.forward_zeroed(engaged, states, actions, &[])
    }

    /// Forward pass with an explicit ablation contract; the flags must match
    /// the ones the model was built with.
    pub fn forward_ablated(
        &self,
        engaged: usize,
        states: &Matrix,
        actions: &Matrix,
        ablation: Ablation,
    ) -> Result<ForwardPass> {
        if ablation != self.ablation {
            return Err(Error::config(format!(
                "model was built as '{}' but forward requested '{}'",
                self.ablation.name(),
                ablation.name()
            )));
        }
        self.forward(engaged, states, actions)
    }

    /// Forward pass where the listed task rows are replaced by zero vectors
    /// in the key/value matrix. The query row is left untouched.
    pub fn forward_transfer_ablated(
        &self,
        target: usize,
        zeroed_source: usize,
        states: &Matrix,
        actions: &Matrix,
    ) -> Result<ForwardPass> {
        if zeroed_source >= self.tasks.len() {
            return Err(Error::config(format!("source task {zeroed_source} out of range")));
        }
        self.forward_zeroed(target, states, actions, &[zeroed_source])
    }

    pub fn forward_zeroed(
        &self,
        engaged: usize,
        states: &Matrix,
        actions: &Matrix,
        zeroed: &[usize],
    ) -> Result<ForwardPass> {
        self.forward_inner(engaged, states, actions, zeroed, None)
    }

    /// Forward pass in which every non-engaged row of Z is taken from
    /// `detached[b]` instead of being computed. This spells out the
    /// stop-gradient that frozen branches impose during training, so the
    /// backward pass can be checked against finite differences.
    pub fn forward_detached(
        &self,
        engaged: usize,
        states: &Matrix,
        actions: &Matrix,
        detached: &[Matrix],
    ) -> Result<ForwardPass> {
        self.forward_inner(engaged, states, actions, &[], Some(detached))
    }

    fn forward_inner(
        &self,
        engaged: usize,
        states: &Matrix,
        actions: &Matrix,
        zeroed: &[usize],
        detached: Option<&[Matrix]>,
    ) -> Result<ForwardPass> {
        self.check_inputs(engaged, states, actions)?;
        let m = self.tasks.len();
        let batch = states.rows();
        let mut cache = ForwardCache::new();

        let projected_state = self.state_projection[engaged].forward_cached(
            states,
            LayerId::StateProjection { task: engaged },
            &mut cache,
        )?;
        let shared = self
            .shared_encoder
            .forward_cached(&projected_state, |l| LayerId::SharedEncoder { layer: l }, &mut cache)?;
        let h = shared.last().expect("shared encoder has layers");
        let mut task_outputs = Vec::with_capacity(m);
        for (i, enc) in self.task_encoders.iter().enumerate() {
            task_outputs.push(enc.forward_cached(h, |l| LayerId::TaskEncoder { task: i, layer: l }, &mut cache)?);
        }

        let zdim = self.spec.attention_dim(self.ablation);
        let r = self.spec.repr_dim;
        if let Some(d) = detached {
            if d.len() != batch || d.iter().any(|z| z.shape() != (m, zdim)) {
                return Err(Error::config(format!("detached rows must be {batch} matrices of {m}×{zdim}")));
            }
        }
        let mut z_keys = Vec::with_capacity(batch);
        let mut queries = Vec::with_capacity(batch);
        for b in 0..batch {
            let mut z = Matrix::zeros(m, zdim);
            for (i, outs) in task_outputs.iter().enumerate() {
                let rep = outs.last().expect("task encoder has layers").row(b);
                let row = z.row_mut(i);
                row[..r].copy_from_slice(rep);
                if self.ablation.use_flag {
                    row[r] = if i == engaged { 1.0 } else { 0.0 };
                }
                if let (Some(d), true) = (detached, i != engaged) {
                    row.copy_from_slice(d[b].row(i));
                }
            }
            queries.push(z.row(engaged).to_vec());
            for &j in zeroed {
                z.row_mut(j).fill(0.0);
            }
            z_keys.push(z);
        }

        let mut traces = Vec::new();
        let context = if let Some(att) = &self.attention {
            let mut out = Matrix::zeros(batch, zdim);
            traces.reserve(batch);
            for b in 0..batch {
                let t = att.forward(&queries[b], &z_keys[b], &z_keys[b])?;
                out.row_mut(b).copy_from_slice(&t.output);
                traces.push(t);
            }
            cache.push(LayerId::Attention, out.clone());
            out
        } else {
            let mut out = Matrix::zeros(batch, m * zdim);
            for b in 0..batch {
                out.row_mut(b).copy_from_slice(z_keys[b].as_slice());
            }
            out
        };

        let projected_action = self.action_projection[engaged].forward_cached(
            actions,
            LayerId::ActionProjection { task: engaged },
            &mut cache,
        )?;
        let decoder_input = context.hcat(&projected_action)?;
        let decoder = self.decoders[engaged].forward_cached(
            &decoder_input,
            |l| LayerId::Decoder { task: engaged, layer: l },
            &mut cache,
        )?;
        let prediction = decoder.last().expect("decoder has layers").clone();
        let energy = energy_of(&cache);
        Ok(ForwardPass {
            engaged,
            prediction,
            cache,
            energy,
            states: states.clone(),
            actions: actions.clone(),
            projected_state,
            shared,
            task_outputs,
            z_keys,
            queries,
            traces,
            zeroed: zeroed.to_vec(),
            projected_action,
            decoder_input,
            decoder,
        })
    }

    /// Reverse pass for `dL/d(prediction) = grad_pred`. Returns a
    /// zero-initialised copy of the model holding the gradients.
    pub fn backward(&self, pass: &ForwardPass, grad_pred: &Matrix, mask: &TrainMask) -> Result<MultiTaskModel> {
        if pass.prediction.shape() != grad_pred.shape() {
            return Err(Error::Internal(format!(
                "gradient shape {:?} does not match prediction {:?}",
                grad_pred.shape(),
                pass.prediction.shape()
            )));
        }
        if pass.task_outputs.len() != self.tasks.len() || pass.decoder.len() != self.decoders[pass.engaged].layers.len() {
            return Err(Error::Internal("forward pass does not belong to this model".into()));
        }
        let mut grads = self.zeros_like();
        let e = pass.engaged;
        if !mask.decoder[e] {
            return Ok(grads);
        }
        let d_in = self.decoders[e]
            .backward(&pass.decoder_input, &pass.decoder, grad_pred.clone(), &mut grads.decoders[e], true)
            .expect("input gradient requested");
        let ctx_w = pass.decoder_input.cols() - self.spec.action_dim;
        if mask.action_projection[e] {
            let d_act = d_in.columns(ctx_w, d_in.cols());
            self.action_projection[e].backward(
                &pass.actions,
                &pass.projected_action,
                &d_act,
                &mut grads.action_projection[e],
                false,
            );
        }

        let batch = pass.prediction.rows();
        let zdim = self.spec.attention_dim(self.ablation);
        let r = self.spec.repr_dim;
        let engaged_zeroed = pass.zeroed.contains(&e);
        // dL/d r_* per sample
        let mut d_rep = Matrix::zeros(batch, r);
        match &self.attention {
            Some(att) => {
                if mask.attention {
                    let ga = grads.attention.as_mut().expect("gradient buffer mirrors model");
                    for b in 0..batch {
                        let d_out = &d_in.row(b)[..ctx_w];
                        let ig = att.backward(&pass.queries[b], &pass.z_keys[b], &pass.z_keys[b], &pass.traces[b], d_out, ga);
                        let dst = d_rep.row_mut(b);
                        for c in 0..r {
                            dst[c] += ig.query[c];
                            if !engaged_zeroed {
                                dst[c] += ig.keys[(e, c)] + ig.values[(e, c)];
                            }
                        }
                    }
                }
            }
            None => {
                if !engaged_zeroed {
                    for b in 0..batch {
                        let src = &d_in.row(b)[e * zdim..e * zdim + r];
                        d_rep.row_mut(b).copy_from_slice(src);
                    }
                }
            }
        }

        if !mask.task_encoder[e] {
            return Ok(grads);
        }
        let h = pass.shared.last().expect("shared encoder has layers");
        let d_h = self.task_encoders[e]
            .backward(h, &pass.task_outputs[e], d_rep, &mut grads.task_encoders[e], mask.shared_encoder)
            .filter(|_| mask.shared_encoder);
        let Some(d_h) = d_h else {
            return Ok(grads);
        };
        let d_x = self.shared_encoder.backward(
            &pass.projected_state,
            &pass.shared,
            d_h,
            &mut grads.shared_encoder,
            mask.state_projection[e],
        );
        if let Some(d_x) = d_x {
            self.state_projection[e].backward(
                &pass.states,
                &pass.projected_state,
                &d_x,
                &mut grads.state_projection[e],
                false,
            );
        }
        Ok(grads)
    }

    /// Batch-mean squared error and its gradient with respect to the prediction.
    pub fn loss_and_grad(&self, pass: &ForwardPass, targets: &Matrix) -> Result<(f64, f64, Matrix)> {
        if pass.prediction.shape() != targets.shape() {
            return Err(Error::config(format!(
                "target shape {:?} does not match prediction {:?}",
                targets.shape(),
                pass.prediction.shape()
            )));
        }
        let (mse, mae) = mse_mae(&pass.prediction, targets);
        let n = targets.len() as f64;
        let mut g = pass.prediction.clone();
        for (gv, t) in g.as_mut_slice().iter_mut().zip(targets.as_slice()) {
            *gv = 2.0 * (*gv - t) / n;
        }
        Ok((mse, mae, g))
    }

    /// One AdamW step on the engaged task's minibatch. Only the shared
    /// modules and the engaged task's modules change.
    pub fn train_step(
        &mut self,
        engaged: usize,
        states: &Matrix,
        actions: &Matrix,
        effects: &Matrix,
        optimizer: &mut AdamW,
    ) -> Result<StepStats> {
        let pass = self.forward(engaged, states, actions)?;
        let (mse, mae, grad) = self.loss_and_grad(&pass, effects)?;
        if !mse.is_finite() || !mae.is_finite() {
            return Err(Error::Numeric {
                param: format!("loss[{}]", self.tasks[engaged].name),
                detail: format!("non-finite training loss (mse={mse}, mae={mae})"),
            });
        }
        let mask = TrainMask::engaged(self.tasks.len(), engaged);
        let grads = self.backward(&pass, &grad, &mask)?;
        let active = self.tensor_mask(&mask);
        let info = self.param_info();
        optimizer.step(self.tensors_mut(), grads.tensors(), &active, |i| info[i].name.clone())?;
        Ok(StepStats {
            mse,
            mae,
            energy: pass.energy,
        })
    }
}
