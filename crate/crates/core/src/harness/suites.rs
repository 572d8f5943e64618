use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{aggregate, Aggregate};
use super::config::{Method, RunConfig};
use super::metrics::MetricsLog;
use super::run::run;
use crate::error::{Error, Result};
use crate::net::{Ablation, Tier};

pub const DEFAULT_K_LIST: [f64; 4] = [0.4, 0.7, 1.0, 1.2];

/// Logs and aggregate of one configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub config: RunConfig,
    pub aggregate: Aggregate,
    #[serde(skip)]
    pub logs: Vec<MetricsLog>,
}

/// Runs every (configuration, seed) pair as one parallel job pool.
pub fn run_configs(configs: Vec<RunConfig>, threads: usize) -> Result<Vec<SuiteEntry>> {
    for c in &configs {
        c.validate()?;
    }
    let jobs: Vec<(usize, u64)> = configs
        .iter()
        .enumerate()
        .flat_map(|(i, c)| c.seeds.iter().map(move |&s| (i, s)))
        .collect();
    let work = || {
        jobs.par_iter()
            .map(|&(i, seed)| run(&configs[i], seed).map(|o| (i, o.log)))
            .collect::<Result<Vec<_>>>()
    };
    let done = if threads == 0 {
        work()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work)?
    };
    let mut grouped: Vec<Vec<MetricsLog>> = vec![Vec::new(); configs.len()];
    for (i, log) in done {
        if let Some((epoch, detail)) = &log.aborted {
            return Err(Error::Aborted {
                epoch: *epoch,
                detail: format!("{} seed {}: {detail}", log.label, log.seed),
            });
        }
        grouped[i].push(log);
    }
    configs
        .into_iter()
        .zip(grouped)
        .map(|(config, logs)| {
            let aggregate = aggregate(&logs.iter().collect::<Vec<_>>())?;
            Ok(SuiteEntry {
                config,
                aggregate,
                logs,
            })
        })
        .collect()
}

/// One aggregate per method, all other settings from `base`.
pub fn compare(base: &RunConfig, methods: &[Method]) -> Result<Vec<SuiteEntry>> {
    run_configs(methods.iter().map(|m| base.with_method(m)).collect(), base.threads)
}

/// All orderings of `0..m` in lexicographic order.
pub fn permutations(m: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, left: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left.is_empty() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..left.len() {
            let t = left.remove(i);
            prefix.push(t);
            go(prefix, left, out);
            prefix.pop();
            left.insert(i, t);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..m).collect(), &mut out);
    out
}

/// First epoch of every block after the first.
pub fn block_boundaries(epochs: usize, tasks: usize) -> Vec<usize> {
    (1..tasks).map(|j| j * epochs / tasks).collect()
}

/// For each block boundary, the change in the just-finished task's eval
/// MAE from the last epoch of its block to one block length later (or the
/// final epoch). Positive values mean the task was forgotten.
pub fn forgetting_deltas(log: &MetricsLog, order: &[usize]) -> Vec<f64> {
    let epochs = log.epochs();
    let m = order.len();
    let block = epochs / m;
    block_boundaries(epochs, m)
        .into_iter()
        .enumerate()
        .map(|(j, b)| {
            let task = order[j];
            let end = b - 1;
            let later = (end + block).min(epochs - 1);
            log.rows[later].eval_mae[task] - log.rows[end].eval_mae[task]
        })
        .collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockResult {
    pub order: Vec<usize>,
    pub entry: SuiteEntry,
    /// `[seed][boundary]`
    pub forgetting: Vec<Vec<f64>>,
}

impl BlockResult {
    /// Per boundary, how many seeds show a forgetting spike.
    pub fn spike_counts(&self) -> Vec<usize> {
        let boundaries = self.forgetting.first().map_or(0, Vec::len);
        (0..boundaries)
            .map(|b| self.forgetting.iter().filter(|d| d[b] > 0.0).count())
            .collect()
    }
}

/// BLOCK over every task order.
pub fn block_suite(base: &RunConfig) -> Result<Vec<BlockResult>> {
    let m = base.tasks.len();
    if m > 5 {
        return Err(Error::config(format!("{m}! block orders is too many; at most 5 tasks")));
    }
    let orders = permutations(m);
    let configs = orders.iter().map(|o| base.with_method(&Method::Block(o.clone()))).collect();
    let entries = run_configs(configs, base.threads)?;
    Ok(orders
        .into_iter()
        .zip(entries)
        .map(|(order, entry)| {
            let forgetting = entry.logs.iter().map(|l| forgetting_deltas(l, &order)).collect();
            BlockResult {
                order,
                entry,
                forgetting,
            }
        })
        .collect())
}

/// EMLP for each `k`, plus the LP and SINGLE references (in that order).
pub fn k_sweep(base: &RunConfig, ks: &[f64]) -> Result<Vec<SuiteEntry>> {
    let mut methods: Vec<Method> = ks.iter().map(|&k| Method::Emlp(k)).collect();
    methods.push(Method::Lp);
    methods.push(Method::Single);
    compare(base, &methods)
}

/// The base method under each architecture ablation.
pub fn ablation_suite(base: &RunConfig, ablations: &[Ablation]) -> Result<Vec<SuiteEntry>> {
    let configs = ablations
        .iter()
        .map(|&a| {
            let mut c = base.clone();
            c.ablation = a;
            c.label = format!("{}/{}", base.label, a.name());
            c
        })
        .collect();
    run_configs(configs, base.threads)
}

/// Every method at every tier.
pub fn tier_suite(base: &RunConfig, methods: &[Method], tiers: &[Tier]) -> Result<Vec<SuiteEntry>> {
    let configs = tiers
        .iter()
        .flat_map(|&tier| {
            methods.iter().map(move |m| {
                let mut c = base.with_tier(tier).with_method(m);
                c.label = format!("{}/{:?}", c.label, tier).to_lowercase();
                c
            })
        })
        .collect();
    run_configs(configs, base.threads)
}
