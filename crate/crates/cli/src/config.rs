//! Experiment config files: `key = value` lines grouped under `[run]`,
//! `[strategy]`, `[network]` and `[tasks]`. `#` starts a comment. Every key
//! is optional and unknown keys are rejected.
//!
//! ```text
//! [run]
//! epochs = 1500
//! seeds = 0..10
//!
//! [strategy]
//! method = emlp
//! k = 1.0
//!
//! [tasks]
//! push = synthetic
//! mine = data/mine.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use imtl_core::harness::{Method, RunConfig, TaskSource};
use imtl_core::net::{Ablation, NetworkSpec, Tier, Variant};
use imtl_core::tasks::TaskKind;

use crate::CliError;

const RUN_KEYS: &[&str] = &[
    "label",
    "epochs",
    "batch",
    "cache_size",
    "seeds",
    "threads",
    "lr",
    "beta1",
    "beta2",
    "eps",
    "weight_decay",
];
const STRATEGY_KEYS: &[&str] = &["method", "k", "order", "epsilon", "window", "eps_num"];
const NETWORK_KEYS: &[&str] = &["tier", "ablation"];

/// A parsed config file and the method it selects.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub run: RunConfig,
    pub method: Method,
}

fn bad(path: &Path, line: usize, detail: impl std::fmt::Display) -> CliError {
    CliError::usage(format!("{}:{line}: {detail}", path.display()))
}

fn parse_num<T: std::str::FromStr>(path: &Path, line: usize, key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| bad(path, line, format!("bad value {value:?} for key '{key}'")))
}

/// `0..10`, `3` or `1,4,9`.
pub fn parse_seeds(text: &str) -> Option<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
        return (a < b).then(|| (a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().ok()).collect()
}

fn parse_tier(text: &str) -> Option<Tier> {
    match text {
        "paper" => Some(Tier::PaperDefault),
        "low" => Some(Tier::Low),
        "medium" => Some(Tier::Medium),
        "high" => Some(Tier::High),
        _ => None,
    }
}

pub fn tier_name(tier: Tier) -> &'static str {
    match tier {
        Tier::PaperDefault => "paper",
        Tier::Low => "low",
        Tier::Medium => "medium",
        Tier::High => "high",
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text, path)
    }

    /// Relative dataset paths resolve against the config file's directory.
    pub fn parse(text: &str, path: &Path) -> Result<Self, CliError> {
        let base_dir = path.parent().unwrap_or(Path::new("."));
        let mut run = RunConfig::default();
        let mut method_name = "lp".to_string();
        let mut k = 1.0;
        let mut order: Option<String> = None;
        let mut tier = Tier::PaperDefault;
        let mut tasks: Vec<TaskSource> = Vec::new();
        let mut label: Option<String> = None;
        let mut section = String::new();
        let mut seen: Vec<(String, String)> = Vec::new();

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !["run", "strategy", "network", "tasks"].contains(&name) {
                    return Err(bad(path, line, format!("unknown section [{name}]")));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(bad(path, line, format!("expected key = value, got {content:?}")));
            };
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(bad(path, line, format!("key '{key}' outside a section")));
            }
            if seen.iter().any(|(s, k)| *s == section && k == key) {
                return Err(bad(path, line, format!("duplicate key '{key}' in [{section}]")));
            }
            seen.push((section.clone(), key.to_string()));
            let known = match section.as_str() {
                "run" => RUN_KEYS,
                "strategy" => STRATEGY_KEYS,
                "network" => NETWORK_KEYS,
                _ => &[],
            };
            if section != "tasks" && !known.contains(&key) {
                return Err(bad(path, line, format!("unknown key '{key}' in [{section}]")));
            }
            match (section.as_str(), key) {
                ("run", "label") => label = Some(value.to_string()),
                ("run", "epochs") => run.epochs = parse_num(path, line, key, value)?,
                ("run", "batch") => run.batch = parse_num(path, line, key, value)?,
                ("run", "cache_size") => run.cache_size = parse_num(path, line, key, value)?,
                ("run", "seeds") => {
                    run.seeds = parse_seeds(value)
                        .ok_or_else(|| bad(path, line, format!("bad value {value:?} for key 'seeds'")))?
                }
                ("run", "threads") => run.threads = parse_num(path, line, key, value)?,
                ("run", "lr") => run.optimizer.lr = parse_num(path, line, key, value)?,
                ("run", "beta1") => run.optimizer.beta1 = parse_num(path, line, key, value)?,
                ("run", "beta2") => run.optimizer.beta2 = parse_num(path, line, key, value)?,
                ("run", "eps") => run.optimizer.eps = parse_num(path, line, key, value)?,
                ("run", "weight_decay") => run.optimizer.weight_decay = parse_num(path, line, key, value)?,
                ("strategy", "method") => method_name = value.to_string(),
                ("strategy", "k") => k = parse_num(path, line, key, value)?,
                ("strategy", "order") => order = Some(value.replace([',', ' '], "")),
                ("strategy", "epsilon") => run.strategy.epsilon = parse_num(path, line, key, value)?,
                ("strategy", "window") => run.strategy.window = parse_num(path, line, key, value)?,
                ("strategy", "eps_num") => run.strategy.eps_num = parse_num(path, line, key, value)?,
                ("network", "tier") => {
                    tier = parse_tier(value).ok_or_else(|| {
                        bad(path, line, format!("bad tier {value:?} (expected paper, low, medium or high)"))
                    })?
                }
                ("network", "ablation") => {
                    run.ablation = Ablation::from_name(value).ok_or_else(|| {
                        bad(
                            path,
                            line,
                            format!("bad ablation {value:?} (expected full, no-flag, no-attn or no-both)"),
                        )
                    })?
                }
                ("tasks", name) => tasks.push(if value == "synthetic" {
                    TaskSource::Synthetic(TaskKind::from_name(name).ok_or_else(|| {
                        bad(path, line, format!("no synthetic generator for task '{name}'"))
                    })?)
                } else {
                    let p = PathBuf::from(value);
                    TaskSource::File(if p.is_relative() { base_dir.join(p) } else { p })
                }),
                _ => unreachable!("keys are checked against the section's list"),
            }
        }

        let method = match (method_name.as_str(), order) {
            ("emlp", _) => Method::Emlp(k),
            ("block", Some(o)) => Method::parse(&format!("block:{o}")).map_err(|e| CliError::usage(e.to_string()))?,
            ("block", None) => Method::Block(Vec::new()),
            (name, _) => Method::parse(name).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?,
        };
        if !tasks.is_empty() {
            run.tasks = tasks;
        }
        let variant = if method == Method::Single {
            Variant::SingleTask
        } else {
            Variant::MultiTask
        };
        run = run.with_method(&method);
        run.network = NetworkSpec::for_tier(tier, variant);
        if let Some(l) = label {
            run.label = l;
        }
        run.validate()
            .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        Ok(Self { run, method })
    }
}
