//! Task arbitration: which task to engage at each epoch.
//!
//! Learning progress (LP) is the negated least-squares slope of a task's
//! recent error window, clipped at zero. The energy-modulated variant
//! scores tasks by `exp(k·LP̃) / max(EC̃, ε_num)` where both terms are
//! min-max scaled across tasks and EC sums the task's recent activation
//! energies. Both are wrapped in ε-greedy exploration that never picks
//! the current argmax when exploring.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StrategyKind {
    /// Highest learning progress.
    Lp,
    /// Energy-modulated learning progress with sensitivity `k`.
    Emlp { k: f64 },
    /// Uniform over all tasks.
    Rand,
    /// Contiguous blocks of `R/m` epochs in the given task order.
    Block { order: Vec<usize> },
    /// Always the same task.
    Single { task: usize },
    /// Cycle through the tasks one epoch at a time.
    RoundRobin,
}

impl StrategyKind {
    pub fn label(&self) -> String {
        match self {
            StrategyKind::Lp => "lp".into(),
            StrategyKind::Emlp { k } => format!("emlp-k{k}"),
            StrategyKind::Rand => "rand".into(),
            StrategyKind::Block { order } => {
                let o: Vec<String> = order.iter().map(|t| (t + 1).to_string()).collect();
                format!("block-{}", o.concat())
            }
            StrategyKind::Single { task } => format!("single-{task}"),
            StrategyKind::RoundRobin => "round-robin".into(),
        }
    }

    fn uses_progress(&self) -> bool {
        matches!(self, StrategyKind::Lp | StrategyKind::Emlp { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    /// Exploration rate.
    pub epsilon: f64,
    /// History window L.
    pub window: usize,
    /// Floor for the scaled energy in the EMLP denominator.
    pub eps_num: f64,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            epsilon: 0.1,
            window: 5,
            eps_num: 1e-6,
        }
    }

    pub fn validate(&self, tasks: usize) -> Result<()> {
        if tasks == 0 {
            return Err(Error::config("task set is empty"));
        }
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::config(format!("epsilon must be in [0,1], got {}", self.epsilon)));
        }
        if self.window < 2 {
            return Err(Error::config(format!("window must be >= 2, got {}", self.window)));
        }
        if !(self.eps_num > 0.0) {
            return Err(Error::config("eps_num must be positive"));
        }
        match &self.kind {
            StrategyKind::Emlp { k } if !(*k > 0.0) => Err(Error::config(format!("EMLP k must be > 0, got {k}"))),
            StrategyKind::Block { order } => {
                let mut seen = vec![false; tasks];
                if order.len() != tasks || order.iter().any(|&t| t >= tasks || std::mem::replace(&mut seen[t], true)) {
                    Err(Error::config(format!("block order {order:?} is not a permutation of {tasks} tasks")))
                } else {
                    Ok(())
                }
            }
            StrategyKind::Single { task } if *task >= tasks => {
                Err(Error::config(format!("single task {task} out of range")))
            }
            _ => Ok(()),
        }
    }
}

/// Ordinary least-squares slope of `values` against `t = 0..n-1`.
/// `None` with fewer than two values.
pub fn slope(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 2 {
        return None;
    }
    let t_mean = (n - 1) as f64 / 2.0;
    let y_mean = values.iter().sum::<f64>() / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for (t, y) in values.iter().enumerate() {
        let dt = t as f64 - t_mean;
        num += dt * (y - y_mean);
        den += dt * dt;
    }
    Some(num / den)
}

/// `|β|` when the error trend is falling, 0 otherwise.
pub fn learning_progress(values: &[f64]) -> Option<f64> {
    slope(values).map(|b| if b < 0.0 { -b } else { 0.0 })
}

pub fn energy_consumption(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// `(v − min) / (max − min)`; every output is 0.5 when all inputs are equal.
pub fn minmax_scale(values: &[f64]) -> Vec<f64> {
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == min {
        return vec![0.5; values.len()];
    }
    values.iter().map(|v| (v - min) / (max - min)).collect()
}

pub fn emlp_scores(lp_scaled: &[f64], ec_scaled: &[f64], k: f64, eps_num: f64) -> Result<Vec<f64>> {
    if !(k > 0.0) {
        return Err(Error::config(format!("EMLP k must be > 0, got {k}")));
    }
    if lp_scaled.len() != ec_scaled.len() {
        return Err(Error::config("LP and EC vectors differ in length"));
    }
    Ok(lp_scaled
        .iter()
        .zip(ec_scaled)
        .map(|(lp, ec)| (k * lp).exp() / ec.max(eps_num))
        .collect())
}

/// Indices holding the maximum score.
fn argmax_set(scores: &[f64]) -> Vec<usize> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (0..scores.len()).filter(|&i| scores[i] == max).collect()
}

/// The argmax of `scores` (ties broken uniformly), except that with
/// probability `epsilon` a task is drawn uniformly from the others.
/// Returns the pick and whether it was exploratory.
pub fn epsilon_greedy(scores: &[f64], epsilon: f64, rng: &mut Rng) -> (usize, bool) {
    let m = scores.len();
    let best = argmax_set(scores);
    let leader = if best.len() == 1 { best[0] } else { best[rng.below(best.len())] };
    if m > 1 && rng.uniform() < epsilon {
        let pick = rng.below(m - 1);
        (if pick >= leader { pick + 1 } else { pick }, true)
    } else {
        (leader, false)
    }
}

/// Per-task ring buffers of `(epoch, value)`.
#[derive(Clone, Debug, PartialEq)]
pub struct History {
    window: usize,
    buffers: Vec<VecDeque<(usize, f64)>>,
}

impl History {
    pub fn new(tasks: usize, window: usize) -> Self {
        Self {
            window,
            buffers: vec![VecDeque::with_capacity(window); tasks],
        }
    }

    pub fn push(&mut self, task: usize, epoch: usize, value: f64) {
        let b = &mut self.buffers[task];
        if b.len() == self.window {
            b.pop_front();
        }
        b.push_back((epoch, value));
    }

    pub fn values(&self, task: usize) -> Vec<f64> {
        self.buffers[task].iter().map(|&(_, v)| v).collect()
    }

    pub fn len(&self, task: usize) -> usize {
        self.buffers[task].len()
    }

    pub fn is_empty(&self, task: usize) -> bool {
        self.buffers[task].is_empty()
    }
}

/// Outcome of one arbitration step, with the quantities behind it.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub task: usize,
    pub lp: Vec<f64>,
    pub ec: Vec<f64>,
    pub scores: Vec<f64>,
    pub warmup: bool,
    pub explored: bool,
}

#[derive(Clone, Debug)]
pub struct ArbitrationState {
    tasks: usize,
    pub errors: History,
    pub energies: History,
    epoch: usize,
    rng: Rng,
}

impl ArbitrationState {
    pub fn new(tasks: usize, window: usize, rng: Rng) -> Self {
        Self {
            tasks,
            errors: History::new(tasks, window),
            energies: History::new(tasks, window),
            epoch: 0,
            rng,
        }
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Appends the engaged task's error and energy for the current epoch.
    pub fn record(&mut self, task: usize, error: f64, energy: f64) {
        let epoch = self.epoch.saturating_sub(1);
        self.errors.push(task, epoch, error);
        self.energies.push(task, epoch, energy);
    }

    pub fn learning_progress(&self) -> Vec<f64> {
        (0..self.tasks)
            .map(|t| learning_progress(&self.errors.values(t)).unwrap_or(0.0))
            .collect()
    }

    pub fn energy_consumption(&self) -> Vec<f64> {
        (0..self.tasks)
            .map(|t| energy_consumption(&self.energies.values(t)))
            .collect()
    }

    /// Picks the task for the current epoch and advances the epoch counter.
    pub fn select(&mut self, strategy: &StrategyConfig, total_epochs: usize) -> Result<Decision> {
        let m = self.tasks;
        if m == 0 {
            return Err(Error::config("task set is empty"));
        }
        let epoch = self.epoch;
        self.epoch += 1;
        let lp = self.learning_progress();
        let ec = self.energy_consumption();
        let mut decision = Decision {
            task: 0,
            lp,
            ec,
            scores: vec![0.0; m],
            warmup: false,
            explored: false,
        };

        if strategy.kind.uses_progress() && epoch < m * strategy.window {
            decision.warmup = true;
            decision.task = epoch % m;
            return Ok(decision);
        }

        decision.task = match &strategy.kind {
            StrategyKind::Lp | StrategyKind::Emlp { .. } => {
                let scores = match strategy.kind {
                    StrategyKind::Emlp { k } => emlp_scores(
                        &minmax_scale(&decision.lp),
                        &minmax_scale(&decision.ec),
                        k,
                        strategy.eps_num,
                    )?,
                    _ => decision.lp.clone(),
                };
                let (task, explored) = epsilon_greedy(&scores, strategy.epsilon, &mut self.rng);
                decision.scores = scores;
                decision.explored = explored;
                task
            }
            StrategyKind::Rand => self.rng.below(m),
            StrategyKind::Block { order } => {
                let slot = (epoch * m / total_epochs.max(1)).min(m - 1);
                order[slot]
            }
            StrategyKind::Single { task } => *task,
            StrategyKind::RoundRobin => epoch % m,
        };
        Ok(decision)
    }
}
