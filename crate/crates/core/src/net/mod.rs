//! Effect-prediction networks: the shared multi-task model, its
//! single-task and ablated variants, and checkpoint files.

pub mod checkpoint;
mod learner;
mod model;
mod spec;

pub use learner::Learner;
pub use model::{mse_mae, ForwardPass, MultiTaskModel, Owner, ParamInfo, StepStats, TrainMask};
pub use spec::{Ablation, NetworkSpec, TaskSpec, Tier, Variant};

#[cfg(test)]
mod tests;
