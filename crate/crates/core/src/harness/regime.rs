use serde::{Deserialize, Serialize};

pub const REGIME_WINDOW: usize = 50;
pub const REGIME_STEP: usize = 10;

/// Sliding-window engagement counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRegime {
    pub window: usize,
    pub step: usize,
    pub starts: Vec<usize>,
    /// `[window][task]`
    pub counts: Vec<Vec<usize>>,
}

/// Counts engagements of each of `tasks` tasks in `[start, start + window)`
/// for `start = 0, step, 2·step, …` while the window fits in the log.
pub fn selection_regime(engaged: &[usize], tasks: usize, window: usize, step: usize) -> SelectionRegime {
    assert!(window > 0 && step > 0, "window and step must be positive");
    let mut starts = Vec::new();
    let mut counts = Vec::new();
    let mut start = 0;
    while start + window <= engaged.len() {
        let mut c = vec![0; tasks];
        for &t in &engaged[start..start + window] {
            c[t] += 1;
        }
        starts.push(start);
        counts.push(c);
        start += step;
    }
    SelectionRegime {
        window,
        step,
        starts,
        counts,
    }
}

impl SelectionRegime {
    pub fn to_csv(&self, task_names: &[String]) -> String {
        let mut out = format!("start,{}\n", task_names.join(","));
        for (s, c) in self.starts.iter().zip(&self.counts) {
            let cells: Vec<String> = c.iter().map(|v| v.to_string()).collect();
            out.push_str(&format!("{s},{}\n", cells.join(",")));
        }
        out
    }
}
