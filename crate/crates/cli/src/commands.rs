use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use imtl_core::harness::{
    self, ablation_suite, run_configs, selection_regime, transfer_analysis, Aggregate,
    MetricsLog, RunConfig, SuiteEntry,
};
use imtl_core::net::{checkpoint, Ablation, MultiTaskModel, Variant};
use imtl_core::nn::{streams, Rng};
use imtl_core::tasks::{fill_cache, format_dataset, read_dataset_for, ExperienceCache, TaskKind};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{tier_name, ExperimentConfig};
use crate::CliError;

pub const SEED_ENV: &str = "IMTL_SEED";

fn sha256(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))
}

/// Loads a config and applies the seed precedence: flag, then the
/// environment, then the file, then the default.
fn load(path: &Path, seed_flag: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut c = ExperimentConfig::load(path)?;
    if let Some(seed) = seed_flag {
        c.run.seeds = vec![seed];
    } else if let Ok(v) = std::env::var(SEED_ENV) {
        let seed = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v:?} is not a seed")))?;
        c.run.seeds = vec![seed];
    }
    Ok(c)
}

pub fn gen_data(task: &str, n: usize, seed: u64, batch: usize, out: &Path) -> Result<(), CliError> {
    let kind = TaskKind::from_name(task)
        .ok_or_else(|| CliError::usage(format!("unknown task '{task}' (expected push, hit or stack)")))?;
    if n < batch || n == 0 {
        return Err(CliError::usage(format!("n must be ≥ batch (n = {n}, batch = {batch})")));
    }
    // The same sub-stream a default three-task run uses for this task.
    let position = TaskKind::ALL.iter().position(|&k| k == kind).expect("listed");
    let cache = fill_cache(kind, n, &mut Rng::new(seed, streams::DATA).substream(position as u64))?;
    let text = format_dataset(&cache);
    write_file(out, &text)?;
    let t = cache.task();
    println!(
        "task={} rows={n} dims={},{},{} sha256={} path={}",
        t.name,
        t.state_dim,
        t.action_dim,
        t.effect_dim,
        sha256(&text),
        out.display()
    );
    Ok(())
}

fn data_checksums(data: &[ExperienceCache]) -> Value {
    data.iter()
        .map(|c| (c.task().name.clone(), Value::String(sha256(&format_dataset(c)))))
        .collect::<serde_json::Map<_, _>>()
        .into()
}

fn aggregate_json(a: &Aggregate) -> Value {
    let pair = |(m, s): (f64, f64)| json!({ "mean": m, "std": s });
    json!({
        "label": a.label,
        "tasks": a.tasks,
        "seeds": a.seeds,
        "epochs": a.epochs,
        "midpoint_epoch": a.midpoint,
        "midpoint_overall": pair(a.midpoint_overall_stats()),
        "final_overall": pair(a.final_overall_stats()),
        "midpoint_energy": pair(a.midpoint_energy_stats()),
        "total_energy": pair(a.total_energy_stats()),
        "midpoint_task_mean": a.midpoint_task_mean,
        "midpoint_task_std": a.midpoint_task_std,
        "counts": a.counts,
        "count_stats": a.count_stats().into_iter().map(pair).collect::<Vec<_>>(),
    })
}

fn config_json(c: &RunConfig) -> Value {
    let mut v = serde_json::to_value(c).expect("config serialises");
    if let imtl_core::arbitration::StrategyKind::Emlp { k } = c.strategy.kind {
        v["k"] = json!(k);
    }
    v["tier"] = json!(tier_name(c.network.tier));
    v
}

fn log_path(out: &Path, label: &str, seed: u64, ext: &str) -> PathBuf {
    out.join(format!("{}-seed{seed}.{ext}", label.replace('/', "_")))
}

fn progress(log: &MetricsLog) {
    let mid = harness::midpoint(log.epochs());
    let at = |e: usize| log.rows.get(e).map_or(f64::NAN, |r| r.overall());
    println!(
        "run label={} seed={} epochs={} midpoint_overall={} final_overall={} checksum={}",
        log.label,
        log.seed,
        log.epochs(),
        at(mid),
        at(log.epochs().saturating_sub(1)),
        log.checksum()
    );
}

pub fn run(config: &Path, seed: Option<u64>, out: &Path, save_data: bool) -> Result<(), CliError> {
    let cfg = load(config, seed)?;
    ensure_dir(out)?;
    let outputs = imtl_core::harness::run_seeds(&cfg.run)?;
    let label = cfg.run.label.clone();
    let mut runs = Vec::new();
    let mut aborted = None;
    for o in &outputs {
        let log = &o.log;
        log.write(&log_path(out, &label, log.seed, "csv"))?;
        let ckpt = log_path(out, &label, log.seed, "ckpt");
        checkpoint::write(&ckpt, &o.learner.models())?;
        if save_data {
            let dir = out.join(format!("{}-seed{}-data", label.replace('/', "_"), log.seed));
            for c in &o.data {
                write_file(&dir.join(format!("{}.csv", c.task().name)), &format_dataset(c))?;
            }
        }
        progress(log);
        if let Some((epoch, detail)) = &log.aborted {
            aborted.get_or_insert_with(|| CliError {
                code: 3,
                message: format!("run aborted at epoch {epoch} (seed {}): {detail}", log.seed),
            });
        }
        runs.push(json!({
            "seed": log.seed,
            "epochs_completed": log.epochs(),
            "aborted": log.aborted.as_ref().map(|(e, d)| json!({ "epoch": e, "detail": d })),
            "counts": log.counts(),
            "metrics_checksum": log.checksum(),
            "data_checksums": data_checksums(&o.data),
        }));
    }
    let logs: Vec<&MetricsLog> = outputs.iter().map(|o| &o.log).collect();
    let summary = json!({
        "format": "imtl summary v1",
        "label": label,
        "method": cfg.method.to_string(),
        "config": config_json(&cfg.run),
        "seeds": cfg.run.seeds,
        "runs": runs,
        "aggregate": if aborted.is_none() { aggregate_json(&harness::aggregate(&logs)?) } else { Value::Null },
    });
    let path = out.join(format!("{}.summary.json", label.replace('/', "_")));
    write_file(&path, &serde_json::to_string_pretty(&summary).expect("json"))?;
    println!("summary path={}", path.display());
    match aborted {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

/// Labels made unique by a numeric suffix where needed.
fn unique_labels(entries: &mut [SuiteEntry]) {
    let mut seen: Vec<String> = Vec::new();
    for e in entries.iter_mut() {
        let mut label = e.aggregate.label.clone();
        let mut n = 2;
        while seen.contains(&label) {
            label = format!("{}-{n}", e.aggregate.label);
            n += 1;
        }
        seen.push(label.clone());
        e.aggregate.label = label;
    }
}

fn curves_csv(entries: &[SuiteEntry]) -> String {
    let mut out = String::from("epoch");
    for e in entries {
        let _ = write!(out, ",{0}_mean,{0}_std", e.aggregate.label);
    }
    out.push('\n');
    let epochs = entries.first().map_or(0, |e| e.aggregate.epochs);
    for t in 0..epochs {
        let _ = write!(out, "{t}");
        for e in entries {
            let _ = write!(out, ",{},{}", e.aggregate.overall_mean[t], e.aggregate.overall_std[t]);
        }
        out.push('\n');
    }
    out
}

fn midpoint_csv(entries: &[SuiteEntry]) -> String {
    let tasks = entries.first().map_or(Vec::new(), |e| e.aggregate.tasks.clone());
    let mut out = String::from(
        "label,midpoint_mean,midpoint_std,final_mean,final_std,energy_mid_mean,energy_mid_std,alloc_variance",
    );
    for t in &tasks {
        let _ = write!(out, ",{t}_mid_mean,{t}_mid_std,{t}_count_mean");
    }
    out.push('\n');
    for e in entries {
        let a = &e.aggregate;
        let (mm, ms) = a.midpoint_overall_stats();
        let (fm, fs) = a.final_overall_stats();
        let (em, es) = a.midpoint_energy_stats();
        let _ = write!(out, "{},{mm},{ms},{fm},{fs},{em},{es},{}", a.label, a.allocation_variance());
        let counts = a.count_stats();
        for t in 0..tasks.len() {
            let _ = write!(out, ",{},{},{}", a.midpoint_task_mean[t], a.midpoint_task_std[t], counts[t].0);
        }
        out.push('\n');
    }
    out
}

/// Writes per-run logs, the curve and midpoint tables and a summary.
fn write_suite(out: &Path, name: &str, entries: &mut [SuiteEntry]) -> Result<(), CliError> {
    unique_labels(entries);
    ensure_dir(out)?;
    for e in entries.iter() {
        for log in &e.logs {
            log.write(&log_path(out, &e.aggregate.label, log.seed, "csv"))?;
        }
        eprintln!("{}", e.aggregate.summary_line());
        let (mm, ms) = e.aggregate.midpoint_overall_stats();
        println!(
            "config label={} seeds={} midpoint_mean={mm} midpoint_std={ms}",
            e.aggregate.label,
            e.aggregate.seeds.len()
        );
    }
    write_file(&out.join(format!("{name}.csv")), &curves_csv(entries))?;
    write_file(&out.join(format!("{name}-midpoint.csv")), &midpoint_csv(entries))?;
    let summary = json!({
        "format": "imtl summary v1",
        "suite": name,
        "configs": entries.iter().map(|e| json!({
            "config": config_json(&e.config),
            "aggregate": aggregate_json(&e.aggregate),
            "metrics_checksums": e.logs.iter().map(|l| l.checksum()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    });
    let path = out.join(format!("{name}.summary.json"));
    write_file(&path, &serde_json::to_string_pretty(&summary).expect("json"))?;
    println!("summary path={}", path.display());
    Ok(())
}

pub fn compare(configs: &[PathBuf], out: &Path) -> Result<(), CliError> {
    let loaded = configs.iter().map(|p| load(p, None)).collect::<Result<Vec<_>, _>>()?;
    let epochs = loaded[0].run.epochs;
    if let Some((p, c)) = configs.iter().zip(&loaded).find(|(_, c)| c.run.epochs != epochs) {
        return Err(CliError::usage(format!(
            "{}: epochs R = {} differs from the first config's {epochs}",
            p.display(),
            c.run.epochs
        )));
    }
    let threads = loaded[0].run.threads;
    let mut entries = run_configs(loaded.into_iter().map(|c| c.run).collect(), threads)?;
    write_suite(out, "compare", &mut entries)
}

pub fn block_suite(config: &Path, out: &Path) -> Result<(), CliError> {
    let cfg = load(config, None)?;
    let results = harness::block_suite(&cfg.run)?;
    let mut table = String::from("order,seed,boundary_epoch,task,delta\n");
    let boundaries = harness::block_boundaries(cfg.run.epochs, cfg.run.tasks.len());
    for r in &results {
        let order: String = r.order.iter().map(|t| (t + 1).to_string()).collect();
        for (log, deltas) in r.entry.logs.iter().zip(&r.forgetting) {
            for (j, d) in deltas.iter().enumerate() {
                let task = &log.tasks[r.order[j]];
                let _ = writeln!(table, "{order},{},{},{task},{d}", log.seed, boundaries[j]);
            }
        }
        println!("block order={order} spikes={:?}", r.spike_counts());
    }
    write_file(&out.join("forgetting.csv"), &table)?;
    let mut entries: Vec<SuiteEntry> = results.into_iter().map(|r| r.entry).collect();
    write_suite(out, "block", &mut entries)
}

pub fn ablate(config: &Path, modes: &[String], out: &Path) -> Result<(), CliError> {
    let cfg = load(config, None)?;
    if cfg.run.network.variant != Variant::MultiTask {
        return Err(CliError::usage("ablations need a multi-task method"));
    }
    let ablations = if modes.is_empty() {
        Ablation::ALL.to_vec()
    } else {
        modes
            .iter()
            .map(|m| {
                Ablation::from_name(m).ok_or_else(|| {
                    CliError::usage(format!("unknown mode '{m}' (expected full, no-flag, no-attn or no-both)"))
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let mut entries = ablation_suite(&cfg.run, &ablations)?;
    write_suite(out, "ablate", &mut entries)
}

pub fn k_sweep(config: &Path, ks: &[f64], out: &Path) -> Result<(), CliError> {
    let cfg = load(config, None)?;
    if let Some(k) = ks.iter().find(|k| !(**k > 0.0)) {
        return Err(CliError::usage(format!("k must be > 0, got {k}")));
    }
    let mut entries = harness::k_sweep(&cfg.run, ks)?;
    write_suite(out, "k-sweep", &mut entries)
}

fn load_checkpoint(path: &Path) -> Result<MultiTaskModel, CliError> {
    let mut models = checkpoint::read(path)?;
    match (models.len(), models.first().map(|m| m.spec().variant)) {
        (1, Some(Variant::MultiTask)) => Ok(models.remove(0)),
        _ => Err(CliError::usage(format!(
            "{}: transfer analysis needs a multi-task checkpoint",
            path.display()
        ))),
    }
}

pub fn transfer(checkpoints: &[PathBuf], data: &[PathBuf], out: Option<&Path>) -> Result<(), CliError> {
    if data.len() != 1 && data.len() != checkpoints.len() {
        return Err(CliError::usage(format!(
            "{} data directories for {} checkpoints; give one per checkpoint or one for all",
            data.len(),
            checkpoints.len()
        )));
    }
    let mut loaded = Vec::new();
    for (i, path) in checkpoints.iter().enumerate() {
        let model = load_checkpoint(path)?;
        let dir = &data[if data.len() == 1 { 0 } else { i }];
        let caches = model
            .tasks()
            .iter()
            .map(|t| read_dataset_for(&dir.join(format!("{}.csv", t.name)), t))
            .collect::<imtl_core::Result<Vec<_>>>()?;
        loaded.push((model, caches));
    }
    let pairs: Vec<(&MultiTaskModel, &[ExperienceCache])> = loaded.iter().map(|(m, d)| (m, d.as_slice())).collect();
    let report = transfer_analysis(&pairs)?;
    eprint!("{}", report.render());
    match out {
        Some(p) => {
            write_file(p, &report.to_csv())?;
            println!("transfer cells={} path={}", report.cells.len(), p.display());
        }
        None => print!("{}", report.to_csv()),
    }
    Ok(())
}

pub fn regime(metrics: &Path, window: usize, step: usize, out: Option<&Path>) -> Result<(), CliError> {
    if window == 0 || step == 0 {
        return Err(CliError::usage("window and step must be positive"));
    }
    let log = MetricsLog::read(metrics)?;
    let r = selection_regime(&log.engaged(), log.tasks.len(), window, step);
    let csv = r.to_csv(&log.tasks);
    match out {
        Some(p) => {
            write_file(p, &csv)?;
            println!("regime windows={} path={}", r.starts.len(), p.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}
