//! Task-to-task transfer measured by zeroing a source task's row in the
//! attention keys and values after training: `ΔL = L_ablate − L_full` on
//! the target task's eval samples, per object group.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::aggregate::population_std;
use crate::error::{Error, Result};
use crate::net::{mse_mae, MultiTaskModel};
use crate::tasks::{Batch, ExperienceCache, OBJECTS};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferCell {
    pub target: usize,
    pub group: String,
    /// Zeroed source task; `None` is the unablated reference column.
    pub source: Option<usize>,
    pub mean: f64,
    pub std: f64,
    /// Checkpoints contributing to the cell.
    pub runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub tasks: Vec<String>,
    pub cells: Vec<TransferCell>,
    /// `(target, group)` pairs with no eval samples in any run.
    pub skipped: Vec<(usize, String)>,
}

fn group_mae(model: &MultiTaskModel, target: usize, zeroed: Option<usize>, batch: &Batch) -> Result<f64> {
    let pass = match zeroed {
        None => model.forward(target, &batch.states, &batch.actions)?,
        Some(s) => model.forward_transfer_ablated(target, s, &batch.states, &batch.actions)?,
    };
    Ok(mse_mae(&pass.prediction, &batch.effects).1)
}

fn expected_groups(cache: &ExperienceCache) -> Vec<String> {
    match cache.task().action_dim {
        8 => OBJECTS.iter().map(|o| o.name.to_string()).collect(),
        12 => OBJECTS
            .iter()
            .flat_map(|p| OBJECTS.iter().map(move |t| format!("{}/{}", p.name, t.name)))
            .collect(),
        _ => Vec::new(),
    }
}

/// ΔL for every (target, object group, source) over a set of trained
/// multi-task checkpoints and the eval data they were trained with.
pub fn transfer_analysis(runs: &[(&MultiTaskModel, &[ExperienceCache])]) -> Result<TransferReport> {
    let (first, first_data) = runs.first().ok_or_else(|| Error::config("no checkpoints to analyse"))?;
    let m = first.task_count();
    let tasks: Vec<String> = first.tasks().iter().map(|t| t.name.clone()).collect();
    for (model, data) in runs {
        if model.attention.is_none() {
            return Err(Error::config("transfer analysis needs a model with attention"));
        }
        let names: Vec<String> = model.tasks().iter().map(|t| t.name.clone()).collect();
        if names != tasks || data.len() != m {
            return Err(Error::config("checkpoints and datasets describe different task sets"));
        }
    }
    // (target, group, source) -> ΔL per run
    let mut samples: Vec<(usize, String, Option<usize>, Vec<f64>)> = Vec::new();
    let mut skipped = Vec::new();
    for target in 0..m {
        let mut groups: Vec<String> = expected_groups(&first_data[target]);
        for (_, data) in runs {
            for (g, _) in data[target].eval_by_object() {
                if !groups.contains(&g) {
                    groups.push(g);
                }
            }
        }
        for group in groups {
            let sources = std::iter::once(None).chain((0..m).map(Some));
            let mut rows: Vec<(Option<usize>, Vec<f64>)> = sources.map(|s| (s, Vec::new())).collect();
            for (model, data) in runs {
                let Some((_, batch)) = data[target].eval_by_object().into_iter().find(|(g, _)| *g == group) else {
                    continue;
                };
                let full = group_mae(model, target, None, &batch)?;
                for (source, values) in &mut rows {
                    let ablated = match source {
                        None => full,
                        Some(_) => group_mae(model, target, *source, &batch)?,
                    };
                    values.push(ablated - full);
                }
            }
            if rows[0].1.is_empty() {
                skipped.push((target, group));
                continue;
            }
            for (source, values) in rows {
                samples.push((target, group.clone(), source, values));
            }
        }
    }
    let cells = samples
        .into_iter()
        .map(|(target, group, source, values)| {
            let (mean, std) = population_std(&values);
            TransferCell {
                target,
                group,
                source,
                mean,
                std,
                runs: values.len(),
            }
        })
        .collect();
    Ok(TransferReport { tasks, cells, skipped })
}

impl TransferReport {
    pub fn cell(&self, target: usize, group: &str, source: Option<usize>) -> Option<&TransferCell> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.group == group && c.source == source)
    }

    /// One block per object group: rows are target tasks, columns are the
    /// zeroed source (`none` first), entries `mean ± std`.
    pub fn render(&self) -> String {
        let mut groups: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !groups.contains(&c.group.as_str()) {
                groups.push(&c.group);
            }
        }
        let mut out = String::new();
        for g in groups {
            let _ = writeln!(out, "[{g}]");
            let _ = write!(out, "{:<10}{:>18}", "target", "none");
            for t in &self.tasks {
                let _ = write!(out, "{t:>18}");
            }
            out.push('\n');
            for (ti, tname) in self.tasks.iter().enumerate() {
                if self.cell(ti, g, None).is_none() {
                    continue;
                }
                let _ = write!(out, "{tname:<10}");
                for s in std::iter::once(None).chain((0..self.tasks.len()).map(Some)) {
                    let c = self.cell(ti, g, s).expect("rows are complete");
                    let _ = write!(out, "{:>18}", format!("{:+.4} ± {:.4}", c.mean, c.std));
                }
                out.push('\n');
            }
        }
        for (t, g) in &self.skipped {
            let _ = writeln!(out, "skipped {} / {g}: no eval samples", self.tasks[*t]);
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("target,group,source,mean,std,runs\n");
        for c in &self.cells {
            let source = c.source.map_or("none".to_string(), |s| self.tasks[s].clone());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                self.tasks[c.target], c.group, source, c.mean, c.std, c.runs
            );
        }
        out
    }
}
