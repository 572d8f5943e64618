use std::time::Instant;

use rayon::prelude::*;

use super::config::{RunConfig, TaskSource};
use super::metrics::{EpochRow, MetricsLog};
use crate::arbitration::ArbitrationState;
use crate::error::{Error, Result};
use crate::net::{mse_mae, Learner, TaskSpec};
use crate::nn::{streams, Rng};
use crate::tasks::{fill_cache, read_dataset, Batch, ExperienceCache};

/// A finished (or aborted) run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub log: MetricsLog,
    pub learner: Learner,
    pub data: Vec<ExperienceCache>,
}

/// Loads or generates every task's cache. Synthetic tasks draw from the
/// run seed's data stream, one sub-stream per task position.
pub fn prepare_data(config: &RunConfig, seed: u64) -> Result<Vec<ExperienceCache>> {
    let data_rng = Rng::new(seed, streams::DATA);
    config
        .tasks
        .iter()
        .enumerate()
        .map(|(i, source)| match source {
            TaskSource::Synthetic(kind) => {
                let mut rng = data_rng.substream(i as u64);
                fill_cache(*kind, config.cache_size, &mut rng)
            }
            TaskSource::File(path) => read_dataset(path),
        })
        .collect()
}

fn evaluate(learner: &Learner, task: usize, batch: &Batch) -> Result<f64> {
    let pred = learner.predict(task, &batch.states, &batch.actions)?;
    Ok(mse_mae(&pred, &batch.effects).1)
}

/// Trains one learner for `config.epochs` epochs with the configured
/// arbitration. A non-finite loss stops the run; the log keeps the rows so
/// far and records where it stopped.
pub fn run_with_data(config: &RunConfig, seed: u64, data: Vec<ExperienceCache>) -> Result<RunOutput> {
    config.validate()?;
    if data.len() != config.tasks.len() {
        return Err(Error::config(format!(
            "{} datasets for {} tasks",
            data.len(),
            config.tasks.len()
        )));
    }
    let specs: Vec<TaskSpec> = data.iter().map(|c| c.task().clone()).collect();
    let m = specs.len();
    let mut learner = Learner::build(
        &specs,
        config.network,
        config.ablation,
        config.optimizer,
        &mut Rng::new(seed, streams::INIT),
    )?;
    let mut arbiter = ArbitrationState::new(m, config.strategy.window, Rng::new(seed, streams::ARBITRATION));
    let mut batch_rng = Rng::new(seed, streams::MINIBATCH);
    let eval: Vec<Batch> = data.iter().map(ExperienceCache::eval_batch).collect();
    let names = specs.iter().map(|t| t.name.clone()).collect();
    let mut log = MetricsLog::new(config.label.clone(), seed, names);
    let started = Instant::now();
    let mut cumulative = 0.0;

    for epoch in 0..config.epochs {
        let decision = arbiter.select(&config.strategy, config.epochs)?;
        let task = decision.task;
        let batch = data[task].draw_minibatch(config.batch, &mut batch_rng)?;
        let stats = match learner.train_step(task, &batch.states, &batch.actions, &batch.effects) {
            Ok(s) => s,
            Err(Error::Numeric { param, detail }) => {
                log.aborted = Some((epoch, format!("{param}: {detail}")));
                break;
            }
            Err(e) => return Err(e),
        };
        arbiter.record(task, stats.mae, stats.energy);
        cumulative += stats.energy;
        let eval_mae = (0..m)
            .map(|t| evaluate(&learner, t, &eval[t]))
            .collect::<Result<Vec<_>>>()?;
        log.rows.push(EpochRow {
            epoch,
            engaged: task,
            warmup: decision.warmup,
            explored: decision.explored,
            train_mse: stats.mse,
            train_mae: stats.mae,
            energy: stats.energy,
            cumulative_energy: cumulative,
            eval_mae,
            lp: decision.lp,
            ec: decision.ec,
            score: decision.scores,
            wall_ms: started.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(RunOutput { log, learner, data })
}

pub fn run(config: &RunConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let data = prepare_data(config, seed)?;
    run_with_data(config, seed, data)
}

/// Runs every configured seed, in parallel up to `config.threads`.
pub fn run_seeds(config: &RunConfig) -> Result<Vec<RunOutput>> {
    config.validate()?;
    let job = || config.seeds.par_iter().map(|&s| run(config, s)).collect::<Result<Vec<_>>>();
    if config.threads == 0 {
        job()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.threads)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(job)
    }
}
