use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::arbitration::{StrategyConfig, StrategyKind};
use crate::error::{Error, Result};
use crate::net::{Ablation, NetworkSpec, Tier, Variant};
use crate::nn::AdamWConfig;
use crate::tasks::TaskKind;

/// Where a task's experience comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskSource {
    /// Generated from the run seed.
    Synthetic(TaskKind),
    /// A dataset CSV; the file's own split is used unchanged.
    File(PathBuf),
}

impl TaskSource {
    pub fn name(&self) -> String {
        match self {
            TaskSource::Synthetic(k) => k.name().to_string(),
            TaskSource::File(p) => p
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("external")
                .to_string(),
        }
    }
}

/// A learner/strategy pairing as used in the comparisons.
#[derive(Clone, Debug, PartialEq)]
pub enum Method {
    /// Shared network, learning-progress arbitration.
    Lp,
    /// Shared network, energy-modulated learning progress.
    Emlp(f64),
    /// Shared network, uniform random task choice.
    Rand,
    /// Shared network, contiguous blocks in the given order.
    Block(Vec<usize>),
    /// Independent single-task networks trained in turn.
    Single,
}

impl Method {
    /// Parses `lp`, `rand`, `single`, `emlp:<k>` or `block:<order>` where
    /// the order lists 1-based task numbers, e.g. `block:231`.
    pub fn parse(text: &str) -> Result<Self> {
        let (head, arg) = match text.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (text, None),
        };
        match (head, arg) {
            ("lp", None) => Ok(Method::Lp),
            ("rand", None) => Ok(Method::Rand),
            ("single", None) => Ok(Method::Single),
            ("emlp", Some(k)) => k
                .parse()
                .map(Method::Emlp)
                .map_err(|_| Error::config(format!("bad EMLP k {k:?}"))),
            ("block", Some(order)) => order
                .chars()
                .map(|c| match c.to_digit(10) {
                    Some(d) if d >= 1 => Ok(d as usize - 1),
                    _ => Err(Error::config(format!("bad block order {order:?}"))),
                })
                .collect::<Result<Vec<_>>>()
                .map(Method::Block),
            _ => Err(Error::config(format!(
                "unknown method {text:?} (expected lp, rand, single, emlp:<k> or block:<order>)"
            ))),
        }
    }

    pub fn strategy(&self, tasks: usize) -> StrategyKind {
        match self {
            Method::Lp => StrategyKind::Lp,
            Method::Emlp(k) => StrategyKind::Emlp { k: *k },
            Method::Rand => StrategyKind::Rand,
            Method::Block(order) if order.is_empty() => StrategyKind::Block {
                order: (0..tasks).collect(),
            },
            Method::Block(order) => StrategyKind::Block { order: order.clone() },
            Method::Single => StrategyKind::RoundRobin,
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Method::Single => Variant::SingleTask,
            _ => Variant::MultiTask,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Lp => write!(f, "imtl-lp"),
            Method::Emlp(k) => write!(f, "imtl-emlp-k{k}"),
            Method::Rand => write!(f, "imtl-rand"),
            Method::Block(order) => {
                write!(f, "block-")?;
                order.iter().try_for_each(|t| write!(f, "{}", t + 1))
            }
            Method::Single => write!(f, "single"),
        }
    }
}

/// Everything that determines a run apart from its seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub label: String,
    pub tasks: Vec<TaskSource>,
    pub strategy: StrategyConfig,
    /// Number of epochs R; one epoch is one minibatch step.
    pub epochs: usize,
    pub batch: usize,
    /// Samples generated per synthetic task.
    pub cache_size: usize,
    pub optimizer: AdamWConfig,
    pub network: NetworkSpec,
    pub ablation: Ablation,
    pub seeds: Vec<u64>,
    /// Parallel runs; 0 lets the thread pool decide.
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            label: Method::Lp.to_string(),
            tasks: TaskKind::ALL.into_iter().map(TaskSource::Synthetic).collect(),
            strategy: StrategyConfig::new(StrategyKind::Lp),
            epochs: 3000,
            batch: 100,
            cache_size: 10_000,
            optimizer: AdamWConfig::default(),
            network: NetworkSpec::paper_default(Variant::MultiTask),
            ablation: Ablation::FULL,
            seeds: (0..10).collect(),
            threads: 0,
        }
    }
}

impl RunConfig {
    /// Copy configured for `method`, keeping the tier and every other knob.
    pub fn with_method(&self, method: &Method) -> Self {
        let mut c = self.clone();
        c.strategy.kind = method.strategy(self.tasks.len());
        c.network = NetworkSpec::for_tier(self.network.tier, method.variant());
        c.label = method.to_string();
        c
    }

    pub fn with_tier(&self, tier: Tier) -> Self {
        let mut c = self.clone();
        c.network = NetworkSpec::for_tier(tier, self.network.variant);
        c
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.tasks.len();
        self.strategy.validate(m)?;
        self.network.validate()?;
        if self.epochs == 0 {
            return Err(Error::config("epochs must be >= 1"));
        }
        if self.batch == 0 {
            return Err(Error::config("batch must be >= 1"));
        }
        if self.tasks.iter().any(|t| matches!(t, TaskSource::Synthetic(_))) && self.cache_size < self.batch {
            return Err(Error::config(format!(
                "cache size {} is smaller than the batch size {}",
                self.cache_size, self.batch
            )));
        }
        if self.seeds.is_empty() {
            return Err(Error::config("at least one seed is required"));
        }
        if !(self.optimizer.lr > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        Ok(())
    }
}
