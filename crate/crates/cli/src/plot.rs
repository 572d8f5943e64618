//! SVG line charts from CSV curve tables.
//!
//! A spec file holds `key = value` lines. Each `[chart]` header starts a
//! new chart; lines before any header describe the first one. Keys:
//! `input` (CSV, first column is x), `output` (SVG), `series` (comma list,
//! default every column), `title`, `width`, `height`. A series `name` is
//! read from a `name_mean` or `name` column and gets a shaded ±1 std band
//! only when a matching `name_std` column exists.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];
const MARGIN: (f64, f64, f64, f64) = (60.0, 20.0, 40.0, 50.0); // left, right, top, bottom

#[derive(Debug, Default)]
pub struct ChartSpec {
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub series: Vec<String>,
    pub title: String,
    pub width: f64,
    pub height: f64,
}

pub fn parse_spec(text: &str, path: &Path) -> Result<Vec<ChartSpec>, CliError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let fresh = || ChartSpec {
        width: 800.0,
        height: 480.0,
        ..ChartSpec::default()
    };
    let mut charts = vec![fresh()];
    let mut touched = false;
    let err = |line: usize, msg: String| CliError::usage(format!("{}:{line}: {msg}", path.display()));
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[chart]" {
            if touched {
                charts.push(fresh());
            }
            touched = false;
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(i + 1, format!("expected key = value, got '{line}'")))?;
        let (key, value) = (key.trim(), value.trim());
        let c = charts.last_mut().expect("non-empty");
        touched = true;
        match key {
            "input" => c.input = Some(base.join(value)),
            "output" => c.output = Some(base.join(value)),
            "title" => c.title = value.to_string(),
            "series" => c.series = value.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect(),
            "width" | "height" => {
                let v: f64 = value
                    .parse()
                    .ok()
                    .filter(|v: &f64| *v >= 100.0)
                    .ok_or_else(|| err(i + 1, format!("{key} must be a number ≥ 100")))?;
                if key == "width" {
                    c.width = v;
                } else {
                    c.height = v;
                }
            }
            _ => return Err(err(i + 1, format!("unknown key '{key}'"))),
        }
    }
    for (n, c) in charts.iter().enumerate() {
        if c.input.is_none() || c.output.is_none() {
            return Err(CliError::usage(format!(
                "{}: chart {} needs both input and output",
                path.display(),
                n + 1
            )));
        }
    }
    Ok(charts)
}

pub struct Table {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

pub fn parse_table(text: &str, path: &Path) -> Result<Table, CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'));
    let (_, head) = lines
        .next()
        .ok_or_else(|| CliError::usage(format!("{}: empty table", path.display())))?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    if header.len() < 2 {
        return Err(CliError::usage(format!("{}: need an x column and at least one series", path.display())));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (i, line) in lines {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(CliError::usage(format!(
                "{}:{}: {} cells, header has {}",
                path.display(),
                i + 1,
                cells.len(),
                header.len()
            )));
        }
        for (col, cell) in columns.iter_mut().zip(cells) {
            let v = cell
                .trim()
                .parse()
                .map_err(|_| CliError::usage(format!("{}:{}: '{cell}' is not a number", path.display(), i + 1)))?;
            col.push(v);
        }
    }
    Ok(Table { header, columns })
}

struct Series<'a> {
    name: String,
    values: &'a [f64],
    std: Option<&'a [f64]>,
}

fn pick_series<'a>(table: &'a Table, wanted: &[String], path: &Path) -> Result<Vec<Series<'a>>, CliError> {
    let col = |name: &str| table.header.iter().position(|h| h == name).map(|i| table.columns[i].as_slice());
    let names: Vec<String> = if wanted.is_empty() {
        table.header[1..]
            .iter()
            .filter(|h| !h.ends_with("_std"))
            .map(|h| h.strip_suffix("_mean").unwrap_or(h).to_string())
            .collect()
    } else {
        wanted.to_vec()
    };
    names
        .into_iter()
        .map(|name| {
            let values = col(&format!("{name}_mean"))
                .or_else(|| col(&name))
                .ok_or_else(|| CliError::usage(format!("{}: no column for series '{name}'", path.display())))?;
            let std = col(&format!("{name}_std"));
            Ok(Series { name, values, std })
        })
        .collect()
}

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + step * 1e-9 {
        out.push(if t.abs() < step * 1e-9 { 0.0 } else { t });
        t += step;
    }
    out
}

/// Label with just enough decimals for the tick spacing.
fn tick_label(t: f64, ticks: &[f64]) -> String {
    let step = ticks.windows(2).map(|w| w[1] - w[0]).next().unwrap_or(1.0);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{t:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render(spec: &ChartSpec, table: &Table, path: &Path) -> Result<String, CliError> {
    let series = pick_series(table, &spec.series, path)?;
    let xs = &table.columns[0];
    if xs.is_empty() {
        return Err(CliError::usage(format!("{}: table has no rows", path.display())));
    }
    let (x_lo, x_hi) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let mut y_lo = f64::INFINITY;
    let mut y_hi = f64::NEG_INFINITY;
    for s in &series {
        for (i, &v) in s.values.iter().enumerate() {
            let d = s.std.map_or(0.0, |sd| sd[i]);
            if v.is_finite() && d.is_finite() {
                y_lo = y_lo.min(v - d);
                y_hi = y_hi.max(v + d);
            }
        }
    }
    if !y_lo.is_finite() {
        (y_lo, y_hi) = (0.0, 1.0);
    }
    if y_hi - y_lo < 1e-12 {
        y_hi = y_lo + 1.0;
    }
    let (ml, mr, mt, mb) = MARGIN;
    let (w, h) = (spec.width, spec.height);
    let pw = w - ml - mr;
    let ph = h - mt - mb;
    let x_span = (x_hi - x_lo).max(1e-12);
    let px = |x: f64| ml + (x - x_lo) / x_span * pw;
    let py = |y: f64| mt + ph - (y - y_lo) / (y_hi - y_lo) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    if !spec.title.is_empty() {
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
            w / 2.0,
            escape(&spec.title)
        );
    }
    let _ = writeln!(
        svg,
        r#"<rect x="{ml}" y="{mt}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="black"/>"#
    );
    let y_ticks = nice_ticks(y_lo, y_hi);
    for &t in &y_ticks {
        let y = py(t);
        let label = tick_label(t, &y_ticks);
        let _ = writeln!(
            svg,
            r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{label}</text>"##,
            ml + pw,
            ml - 6.0,
            y + 4.0
        );
    }
    let x_ticks = nice_ticks(x_lo, x_hi);
    for &t in &x_ticks {
        let x = px(t);
        let label = tick_label(t, &x_ticks);
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{label}</text>"#,
            mt + ph + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        ml + pw / 2.0,
        h - 10.0,
        escape(&table.header[0])
    );
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        if let Some(sd) = s.std {
            let upper = xs.iter().zip(s.values).zip(sd).map(|((&x, &v), &d)| format!("{:.2},{:.2}", px(x), py(v + d)));
            let lower = xs.iter().zip(s.values).zip(sd).rev().map(|((&x, &v), &d)| format!("{:.2},{:.2}", px(x), py(v - d)));
            let points: Vec<String> = upper.chain(lower).collect();
            let _ = writeln!(
                svg,
                r#"<polygon class="band" points="{}" fill="{color}" fill-opacity="0.2" stroke="none"/>"#,
                points.join(" ")
            );
        }
        let points: Vec<String> = xs
            .iter()
            .zip(s.values)
            .filter(|(_, v)| v.is_finite())
            .map(|(&x, &v)| format!("{:.2},{:.2}", px(x), py(v)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="series" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            points.join(" ")
        );
        let ly = mt + 14.0 + 16.0 * k as f64;
        let lx = ml + pw - 150.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

pub fn run(spec_path: &Path) -> Result<(), CliError> {
    let text =
        fs::read_to_string(spec_path).map_err(|e| CliError::usage(format!("{}: {e}", spec_path.display())))?;
    for spec in parse_spec(&text, spec_path)? {
        let input = spec.input.as_deref().expect("validated");
        let output = spec.output.as_deref().expect("validated");
        let csv = fs::read_to_string(input).map_err(|e| CliError::usage(format!("{}: {e}", input.display())))?;
        let table = parse_table(&csv, input)?;
        let svg = render(&spec, &table, input)?;
        if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
        }
        fs::write(output, &svg).map_err(|e| CliError::usage(format!("{}: {e}", output.display())))?;
        println!("plot output={} series={}", output.display(), svg.matches("class=\"series\"").count());
    }
    Ok(())
}
