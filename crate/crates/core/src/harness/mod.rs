//! Experiment orchestration: training runs, baselines, suites, seed
//! aggregation, transfer analysis and selection regimes.

mod aggregate;
mod config;
mod metrics;
mod regime;
mod run;
mod suites;
mod transfer;

pub use aggregate::{aggregate, midpoint, population_std, Aggregate};
pub use config::{Method, RunConfig, TaskSource};
pub use metrics::{EpochRow, MetricsLog, METRICS_MAGIC};
pub use regime::{selection_regime, SelectionRegime, REGIME_STEP, REGIME_WINDOW};
pub use run::{prepare_data, run, run_seeds, run_with_data, RunOutput};
pub use suites::{
    ablation_suite, block_boundaries, block_suite, compare, forgetting_deltas, k_sweep, permutations, run_configs,
    tier_suite,
    BlockResult, SuiteEntry, DEFAULT_K_LIST,
};
pub use transfer::{transfer_analysis, TransferCell, TransferReport};
