use serde::{Deserialize, Serialize};

use super::metrics::MetricsLog;
use crate::error::{Error, Result};

/// The midpoint epoch index ⌊R/2⌋.
pub fn midpoint(epochs: usize) -> usize {
    epochs / 2
}

/// Mean and population standard deviation.
pub fn population_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Cross-seed statistics of one configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub label: String,
    pub tasks: Vec<String>,
    pub seeds: Vec<u64>,
    pub epochs: usize,
    pub midpoint: usize,
    /// Per-epoch overall loss (sum of per-task eval MAE).
    pub overall_mean: Vec<f64>,
    pub overall_std: Vec<f64>,
    /// `[task][epoch]`
    pub task_mean: Vec<Vec<f64>>,
    pub task_std: Vec<Vec<f64>>,
    /// Per seed, in seed order.
    pub midpoint_overall: Vec<f64>,
    pub midpoint_task_mean: Vec<f64>,
    pub midpoint_task_std: Vec<f64>,
    pub final_overall: Vec<f64>,
    /// Cumulative energy at the midpoint, per seed.
    pub midpoint_energy: Vec<f64>,
    pub total_energy: Vec<f64>,
    /// `[seed][task]` engagement counts.
    pub counts: Vec<Vec<usize>>,
}

impl Aggregate {
    pub fn midpoint_overall_stats(&self) -> (f64, f64) {
        population_std(&self.midpoint_overall)
    }

    pub fn final_overall_stats(&self) -> (f64, f64) {
        population_std(&self.final_overall)
    }

    pub fn midpoint_energy_stats(&self) -> (f64, f64) {
        population_std(&self.midpoint_energy)
    }

    pub fn total_energy_stats(&self) -> (f64, f64) {
        population_std(&self.total_energy)
    }

    /// Per task, mean and std over seeds of the engagement count.
    pub fn count_stats(&self) -> Vec<(f64, f64)> {
        (0..self.tasks.len())
            .map(|t| {
                let c: Vec<f64> = self.counts.iter().map(|s| s[t] as f64).collect();
                population_std(&c)
            })
            .collect()
    }

    /// Mean over seeds of the variance of a seed's per-task counts.
    pub fn allocation_variance(&self) -> f64 {
        let per_seed: Vec<f64> = self
            .counts
            .iter()
            .map(|c| {
                let v: Vec<f64> = c.iter().map(|&x| x as f64).collect();
                population_std(&v).1.powi(2)
            })
            .collect();
        population_std(&per_seed).0
    }

    /// One-line report used by the CLI.
    pub fn summary_line(&self) -> String {
        let (mm, ms) = self.midpoint_overall_stats();
        let (fm, fs) = self.final_overall_stats();
        let (em, es) = self.midpoint_energy_stats();
        format!(
            "{:<18} midpoint MAE {mm:.4} ± {ms:.4}  final {fm:.4} ± {fs:.4}  energy@mid {em:.1} ± {es:.1}",
            self.label
        )
    }
}

/// Aggregates complete logs of one configuration over seeds.
pub fn aggregate(logs: &[&MetricsLog]) -> Result<Aggregate> {
    let first = logs.first().ok_or_else(|| Error::config("nothing to aggregate"))?;
    let epochs = first.epochs();
    for l in logs {
        if l.label != first.label || l.tasks != first.tasks {
            return Err(Error::config(format!(
                "cannot aggregate '{}' with '{}': mixed configurations",
                l.label, first.label
            )));
        }
        if l.aborted.is_some() || l.epochs() != epochs || epochs == 0 {
            return Err(Error::config(format!("run '{}' seed {} is incomplete", l.label, l.seed)));
        }
    }
    let m = first.tasks.len();
    let mid = midpoint(epochs);
    let column = |f: &dyn Fn(&MetricsLog) -> f64| -> Vec<f64> { logs.iter().map(|l| f(l)).collect() };
    let mut overall_mean = Vec::with_capacity(epochs);
    let mut overall_std = Vec::with_capacity(epochs);
    let mut task_mean = vec![Vec::with_capacity(epochs); m];
    let mut task_std = vec![Vec::with_capacity(epochs); m];
    for e in 0..epochs {
        let (mean, std) = population_std(&column(&|l| l.rows[e].overall()));
        overall_mean.push(mean);
        overall_std.push(std);
        for t in 0..m {
            let (mean, std) = population_std(&column(&|l| l.rows[e].eval_mae[t]));
            task_mean[t].push(mean);
            task_std[t].push(std);
        }
    }
    let (midpoint_task_mean, midpoint_task_std) = (0..m)
        .map(|t| (task_mean[t][mid], task_std[t][mid]))
        .unzip();
    Ok(Aggregate {
        label: first.label.clone(),
        tasks: first.tasks.clone(),
        seeds: logs.iter().map(|l| l.seed).collect(),
        epochs,
        midpoint: mid,
        overall_mean,
        overall_std,
        task_mean,
        task_std,
        midpoint_overall: column(&|l| l.rows[mid].overall()),
        midpoint_task_mean,
        midpoint_task_std,
        final_overall: column(&|l| l.rows[epochs - 1].overall()),
        midpoint_energy: column(&|l| l.rows[mid].cumulative_energy),
        total_energy: column(&|l| l.rows[epochs - 1].cumulative_energy),
        counts: logs.iter().map(|l| l.counts()).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::EpochRow;

    fn flat_log(seed: u64, value: f64, epochs: usize) -> MetricsLog {
        let mut log = MetricsLog::new("x", seed, vec!["a".into(), "b".into()]);
        for epoch in 0..epochs {
            log.rows.push(EpochRow {
                epoch,
                engaged: epoch % 2,
                warmup: false,
                explored: false,
                train_mse: 0.0,
                train_mae: 0.0,
                energy: 1.0,
                cumulative_energy: (epoch + 1) as f64,
                eval_mae: vec![value, value],
                lp: vec![0.0; 2],
                ec: vec![0.0; 2],
                score: vec![0.0; 2],
                wall_ms: 0.0,
            });
        }
        log
    }

    #[test]
    fn one_seed_has_zero_std() {
        let log = flat_log(0, 0.3, 10);
        let a = aggregate(&[&log]).unwrap();
        assert!(a.overall_std.iter().all(|&s| s == 0.0));
        assert!(a.overall_mean.iter().all(|&v| v == 0.6));
    }

    #[test]
    fn midpoint_index() {
        assert_eq!(midpoint(3000), 1500);
        assert_eq!(midpoint(1501), 750);
        let a = aggregate(&[&flat_log(0, 0.1, 3000), &flat_log(1, 0.3, 3000)]).unwrap();
        assert_eq!(a.midpoint, 1500);
        assert_eq!(a.midpoint_energy, vec![1501.0, 1501.0]);
        let (m, s) = a.midpoint_overall_stats();
        assert!((m - 0.4).abs() < 1e-12 && (s - 0.2).abs() < 1e-12);
    }

    #[test]
    fn mixed_configs_rejected() {
        let a = flat_log(0, 0.1, 4);
        let mut b = flat_log(1, 0.1, 4);
        b.label = "y".into();
        assert!(matches!(aggregate(&[&a, &b]), Err(Error::Config(_))));
        let c = flat_log(2, 0.1, 5);
        assert!(aggregate(&[&a, &c]).is_err());
    }
}
