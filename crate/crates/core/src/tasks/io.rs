//! Dataset CSV files.
//!
//! ```text
//! # imtl dataset v1 task=push      optional comment lines
//! 9,8,9                            d_s,d_a,d_e
//! x_1,...,x_ds,a_1,...,a_da,e_1,...,e_de
//! ```
//!
//! Values are written with 17 significant digits, enough to round-trip any
//! f64. Hand-written files may omit the comment line; the task then takes
//! its name from the file stem.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::cache::ExperienceCache;
use super::generators::Sample;
use crate::error::{Error, Result};
use crate::net::TaskSpec;

pub const DATASET_MAGIC: &str = "# imtl dataset v1";

pub fn format_dataset(cache: &ExperienceCache) -> String {
    let t = cache.task();
    let mut out = format!("{DATASET_MAGIC} task={}\n", t.name);
    let _ = writeln!(out, "{},{},{}", t.state_dim, t.action_dim, t.effect_dim);
    for s in cache.samples() {
        let mut first = true;
        for v in s.state.iter().chain(&s.action).chain(&s.effect) {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(out, "{v:.16e}");
        }
        out.push('\n');
    }
    out
}

pub fn write_dataset(cache: &ExperienceCache, path: &Path) -> Result<()> {
    if cache.is_empty() {
        return Err(Error::config("refusing to write an empty dataset"));
    }
    fs::write(path, format_dataset(cache)).map_err(|e| Error::io(path, e))
}

/// Parses dataset text. `fallback_name` names the task when the file has no
/// `task=` comment.
pub fn parse_dataset(text: &str, path: &Path, fallback_name: &str) -> Result<ExperienceCache> {
    let mut name = fallback_name.to_string();
    let mut dims: Option<(usize, usize, usize)> = None;
    let mut samples = Vec::new();
    let mut offset = 0u64;
    for raw in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += raw.len() as u64;
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if dims.is_none() {
                if let Some(t) = comment.split_whitespace().find_map(|w| w.strip_prefix("task=")) {
                    name = t.to_string();
                }
            }
            continue;
        }
        let Some((ds, da, de)) = dims else {
            let parts: Vec<&str> = line.split(',').map(str::trim).collect();
            let parsed: Option<Vec<usize>> = parts.iter().map(|p| p.parse().ok()).collect();
            match parsed.as_deref() {
                Some(&[s, a, e]) if s > 0 && a > 0 && e > 0 => dims = Some((s, a, e)),
                _ => {
                    return Err(Error::format(
                        path,
                        line_offset,
                        format!("malformed header {line:?}, expected d_s,d_a,d_e"),
                    ))
                }
            }
            continue;
        };
        let width = ds + da + de;
        let mut values = Vec::with_capacity(width);
        let mut col_offset = line_offset;
        for field in line.split(',') {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(path, col_offset, format!("not a number: {:?}", field.trim()))
            })?;
            values.push(v);
            col_offset += field.len() as u64 + 1;
        }
        if values.len() != width {
            return Err(Error::format(
                path,
                line_offset,
                format!("row has {} columns, expected {width} columns", values.len()),
            ));
        }
        let effect = values.split_off(ds + da);
        let action = values.split_off(ds);
        samples.push(Sample {
            state: values,
            action,
            effect,
        });
    }
    let Some((ds, da, de)) = dims else {
        return Err(Error::format(path, offset, "missing d_s,d_a,d_e header"));
    };
    if samples.is_empty() {
        return Err(Error::format(path, offset, "dataset has no samples"));
    }
    ExperienceCache::new(TaskSpec::new(name, ds, da, de), samples)
}

pub fn read_dataset(path: &Path) -> Result<ExperienceCache> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("external");
    parse_dataset(&text, path, stem)
}

/// Reads a dataset and checks its dims against an expected task.
pub fn read_dataset_for(path: &Path, task: &TaskSpec) -> Result<ExperienceCache> {
    let cache = read_dataset(path)?;
    let t = cache.task();
    if (t.state_dim, t.action_dim, t.effect_dim) != (task.state_dim, task.action_dim, task.effect_dim) {
        return Err(Error::format(
            path,
            0,
            format!(
                "dims {},{},{} do not match task {} ({},{},{})",
                t.state_dim, t.action_dim, t.effect_dim, task.name, task.state_dim, task.action_dim, task.effect_dim
            ),
        ));
    }
    Ok(cache)
}
