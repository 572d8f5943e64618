//! Per-epoch run logs and their CSV form.
//!
//! ```text
//! # imtl metrics v1 label=imtl-lp seed=3 tasks=push,hit,stack
//! epoch,engaged,warmup,explored,train_mse,train_mae,energy,cumulative_energy,
//!   eval_mae_<task>...,overall,lp_<task>...,ec_<task>...,score_<task>...,wall_ms
//! ...
//! # aborted at epoch 812: <detail>          only when the run failed
//! ```
//!
//! Numbers use Rust's shortest round-trip formatting, so reading a log back
//! reproduces every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const METRICS_MAGIC: &str = "# imtl metrics v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRow {
    pub epoch: usize,
    pub engaged: usize,
    pub warmup: bool,
    pub explored: bool,
    pub train_mse: f64,
    pub train_mae: f64,
    /// Activation energy of this epoch's training forward pass.
    pub energy: f64,
    pub cumulative_energy: f64,
    pub eval_mae: Vec<f64>,
    pub lp: Vec<f64>,
    pub ec: Vec<f64>,
    pub score: Vec<f64>,
    /// Milliseconds since the run started. Not deterministic.
    pub wall_ms: f64,
}

impl EpochRow {
    /// Sum over tasks of eval MAE.
    pub fn overall(&self) -> f64 {
        self.eval_mae.iter().sum()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsLog {
    pub label: String,
    pub seed: u64,
    pub tasks: Vec<String>,
    pub rows: Vec<EpochRow>,
    /// Set when training stopped on a non-finite loss.
    pub aborted: Option<(usize, String)>,
}

impl MetricsLog {
    pub fn new(label: impl Into<String>, seed: u64, tasks: Vec<String>) -> Self {
        Self {
            label: label.into(),
            seed,
            tasks,
            rows: Vec::new(),
            aborted: None,
        }
    }

    pub fn epochs(&self) -> usize {
        self.rows.len()
    }

    pub fn engaged(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.engaged).collect()
    }

    /// How often each task was engaged.
    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.tasks.len()];
        for r in &self.rows {
            c[r.engaged] += 1;
        }
        c
    }

    pub fn overall(&self) -> Vec<f64> {
        self.rows.iter().map(EpochRow::overall).collect()
    }

    pub fn task_curve(&self, task: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r.eval_mae[task]).collect()
    }

    pub fn header(&self) -> String {
        let mut cols: Vec<String> = [
            "epoch",
            "engaged",
            "warmup",
            "explored",
            "train_mse",
            "train_mae",
            "energy",
            "cumulative_energy",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        cols.extend(self.tasks.iter().map(|t| format!("eval_mae_{t}")));
        cols.push("overall".into());
        for prefix in ["lp", "ec", "score"] {
            cols.extend(self.tasks.iter().map(|t| format!("{prefix}_{t}")));
        }
        cols.push("wall_ms".into());
        cols.join(",")
    }

    fn write_rows(&self, out: &mut String, with_wall: bool) {
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.epoch,
                r.engaged,
                u8::from(r.warmup),
                u8::from(r.explored),
                r.train_mse,
                r.train_mae,
                r.energy,
                r.cumulative_energy
            );
            for v in &r.eval_mae {
                let _ = write!(out, ",{v}");
            }
            let _ = write!(out, ",{}", r.overall());
            for v in r.lp.iter().chain(&r.ec).chain(&r.score) {
                let _ = write!(out, ",{v}");
            }
            if with_wall {
                let _ = write!(out, ",{}", r.wall_ms);
            }
            out.push('\n');
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "{METRICS_MAGIC} label={} seed={} tasks={}\n{}\n",
            self.label,
            self.seed,
            self.tasks.join(","),
            self.header()
        );
        self.write_rows(&mut out, true);
        if let Some((epoch, detail)) = &self.aborted {
            let _ = writeln!(out, "# aborted at epoch {epoch}: {detail}");
        }
        out
    }

    /// SHA-256 over everything except wall-clock times.
    pub fn checksum(&self) -> String {
        let mut body = format!("{}|{}|{}\n", self.label, self.seed, self.tasks.join(","));
        self.write_rows(&mut body, false);
        if let Some((epoch, detail)) = &self.aborted {
            let _ = writeln!(body, "aborted {epoch} {detail}");
        }
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut offset = 0u64;
        let mut lines = text.split_inclusive('\n').map(|raw| {
            let at = offset;
            offset += raw.len() as u64;
            (at, raw.trim_end_matches(['\n', '\r']))
        });
        let (_, first) = lines.next().unwrap_or((0, ""));
        let meta = first
            .strip_prefix(METRICS_MAGIC)
            .ok_or_else(|| Error::format(path, 0, "not an imtl metrics v1 file"))?;
        let field = |key: &str| {
            meta.split_whitespace()
                .find_map(|w| w.strip_prefix(key).and_then(|v| v.strip_prefix('=')))
                .map(str::to_string)
        };
        let label = field("label").unwrap_or_default();
        let seed = field("seed")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::format(path, 0, "missing seed in metrics header"))?;
        let tasks: Vec<String> = field("tasks")
            .map(|t| t.split(',').map(str::to_string).collect())
            .ok_or_else(|| Error::format(path, 0, "missing tasks in metrics header"))?;
        let mut log = MetricsLog::new(label, seed, tasks);
        let m = log.tasks.len();
        let expected_cols = 8 + m + 1 + 3 * m + 1;
        let header = log.header();
        match lines.next() {
            Some((_, h)) if h == header => {}
            Some((at, _)) => return Err(Error::format(path, at, "unexpected column header")),
            None => return Err(Error::format(path, offset, "missing column header")),
        }
        for (at, line) in lines {
            if let Some(rest) = line.strip_prefix("# aborted at epoch ") {
                let (epoch, detail) = rest
                    .split_once(": ")
                    .ok_or_else(|| Error::format(path, at, "malformed abort marker"))?;
                let epoch = epoch
                    .parse()
                    .map_err(|_| Error::format(path, at, "malformed abort marker"))?;
                log.aborted = Some((epoch, detail.to_string()));
                continue;
            }
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != expected_cols {
                return Err(Error::format(
                    path,
                    at,
                    format!("row has {} columns, expected {expected_cols}", fields.len()),
                ));
            }
            let num = |i: usize| -> Result<f64> {
                fields[i]
                    .parse()
                    .map_err(|_| Error::format(path, at, format!("bad number {:?}", fields[i])))
            };
            let int = |i: usize| -> Result<usize> {
                fields[i]
                    .parse()
                    .map_err(|_| Error::format(path, at, format!("bad integer {:?}", fields[i])))
            };
            let vec = |start: usize| -> Result<Vec<f64>> { (start..start + m).map(num).collect() };
            let engaged = int(1)?;
            if engaged >= m {
                return Err(Error::format(path, at, format!("engaged task {engaged} out of range")));
            }
            log.rows.push(EpochRow {
                epoch: int(0)?,
                engaged,
                warmup: int(2)? != 0,
                explored: int(3)? != 0,
                train_mse: num(4)?,
                train_mae: num(5)?,
                energy: num(6)?,
                cumulative_energy: num(7)?,
                eval_mae: vec(8)?,
                lp: vec(9 + m)?,
                ec: vec(9 + 2 * m)?,
                score: vec(9 + 3 * m)?,
                wall_ms: num(9 + 4 * m)?,
            });
        }
        Ok(log)
    }
}
