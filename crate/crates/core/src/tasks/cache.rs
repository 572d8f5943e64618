use super::generators::Sample;
use super::objects::{OBJECTS, OBJECT_COUNT};
use super::TaskKind;
use crate::error::{Error, Result};
use crate::net::TaskSpec;
use crate::nn::{Matrix, Rng};

/// Fraction of a cache held out for evaluation.
pub const EVAL_FRACTION: f64 = 0.1;
/// Number of eval samples scored every epoch.
pub const EVAL_BATCH: usize = 200;

/// Row-aligned states, actions and effects.
#[derive(Clone, Debug, PartialEq)]
pub struct Batch {
    pub states: Matrix,
    pub actions: Matrix,
    pub effects: Matrix,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.states.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn gather(samples: &[Sample], idx: &[usize], task: &TaskSpec) -> Self {
        let mut s = Vec::with_capacity(idx.len() * task.state_dim);
        let mut a = Vec::with_capacity(idx.len() * task.action_dim);
        let mut e = Vec::with_capacity(idx.len() * task.effect_dim);
        for &i in idx {
            s.extend_from_slice(&samples[i].state);
            a.extend_from_slice(&samples[i].action);
            e.extend_from_slice(&samples[i].effect);
        }
        let n = idx.len();
        Self {
            states: Matrix::from_vec(n, task.state_dim, s).expect("state width checked on insert"),
            actions: Matrix::from_vec(n, task.action_dim, a).expect("action width checked on insert"),
            effects: Matrix::from_vec(n, task.effect_dim, e).expect("effect width checked on insert"),
        }
    }
}

/// Pre-generated interactions for one task, split once into train and
/// eval parts. The first 90% of samples train, the rest evaluate.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperienceCache {
    task: TaskSpec,
    samples: Vec<Sample>,
    split: usize,
}

impl ExperienceCache {
    pub fn new(task: TaskSpec, samples: Vec<Sample>) -> Result<Self> {
        task.validate()?;
        for (i, s) in samples.iter().enumerate() {
            if s.state.len() != task.state_dim
                || s.action.len() != task.action_dim
                || s.effect.len() != task.effect_dim
            {
                return Err(Error::config(format!(
                    "sample {i} has dims ({}, {}, {}), task {} expects ({}, {}, {})",
                    s.state.len(),
                    s.action.len(),
                    s.effect.len(),
                    task.name,
                    task.state_dim,
                    task.action_dim,
                    task.effect_dim
                )));
            }
        }
        let n = samples.len();
        // At least one eval row, so tiny external files still split.
        let split = n.saturating_sub(((n as f64 * EVAL_FRACTION).round() as usize).max(1));
        if split == 0 || split == n {
            return Err(Error::config(format!(
                "cache of {n} samples leaves an empty train or eval split"
            )));
        }
        Ok(Self { task, samples, split })
    }

    pub fn task(&self) -> &TaskSpec {
        &self.task
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn train_indices(&self) -> std::ops::Range<usize> {
        0..self.split
    }

    pub fn eval_indices(&self) -> std::ops::Range<usize> {
        self.split..self.samples.len()
    }

    /// `size` train samples drawn uniformly with replacement. `size` may
    /// exceed the train split.
    pub fn draw_minibatch(&self, size: usize, rng: &mut Rng) -> Result<Batch> {
        if size == 0 {
            return Err(Error::config(format!("batch size 0 for {}", self.task.name)));
        }
        let idx: Vec<usize> = (0..size).map(|_| rng.below(self.split)).collect();
        Ok(Batch::gather(&self.samples, &idx, &self.task))
    }

    /// The fixed per-epoch evaluation batch: the first eval samples.
    pub fn eval_batch(&self) -> Batch {
        let end = (self.split + EVAL_BATCH).min(self.samples.len());
        let idx: Vec<usize> = (self.split..end).collect();
        Batch::gather(&self.samples, &idx, &self.task)
    }

    /// Eval samples grouped by object (or object pair for two-object
    /// actions), in group order. Groups with no samples are omitted.
    pub fn eval_by_object(&self) -> Vec<(String, Batch)> {
        let mut groups: Vec<(String, Vec<usize>)> = Vec::new();
        for i in self.eval_indices() {
            let Some(name) = object_group(&self.samples[i].action) else {
                continue;
            };
            match groups.iter_mut().find(|(g, _)| *g == name) {
                Some((_, v)) => v.push(i),
                None => groups.push((name, vec![i])),
            }
        }
        groups.sort_by_key(|(name, _)| group_rank(name));
        groups
            .into_iter()
            .map(|(name, idx)| {
                let b = Batch::gather(&self.samples, &idx, &self.task);
                (name, b)
            })
            .collect()
    }
}

fn one_hot_index(block: &[f64]) -> Option<usize> {
    let mut hit = None;
    for (i, &v) in block.iter().enumerate() {
        if v == 1.0 {
            if hit.is_some() {
                return None;
            }
            hit = Some(i);
        } else if v != 0.0 {
            return None;
        }
    }
    hit
}

/// Object label of an action: the pushed object for 8-wide actions,
/// "picked/target" for 12-wide ones, `None` otherwise.
pub fn object_group(action: &[f64]) -> Option<String> {
    match action.len() {
        8 => one_hot_index(&action[2..]).map(|o| OBJECTS[o].name.to_string()),
        12 => {
            let p = one_hot_index(&action[..OBJECT_COUNT])?;
            let t = one_hot_index(&action[OBJECT_COUNT..])?;
            Some(format!("{}/{}", OBJECTS[p].name, OBJECTS[t].name))
        }
        _ => None,
    }
}

fn group_rank(name: &str) -> (usize, usize) {
    let index = |n: &str| OBJECTS.iter().position(|o| o.name == n).unwrap_or(OBJECT_COUNT);
    match name.split_once('/') {
        Some((p, t)) => (index(p), index(t)),
        None => (index(name), 0),
    }
}

/// Generates `n` samples of `kind` and splits them.
pub fn fill_cache(kind: TaskKind, n: usize, rng: &mut Rng) -> Result<ExperienceCache> {
    let samples = (0..n).map(|_| kind.generate(rng)).collect();
    ExperienceCache::new(kind.spec(), samples)
}
