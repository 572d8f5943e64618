//! Deterministic numeric core: matrices, dense layers, attention, the
//! AdamW/AMSGrad optimizer, activation-energy metering and a
//! finite-difference oracle. Everything is `f64`.

pub mod attention;
pub mod cache;
pub mod dense;
pub mod gradcheck;
pub mod matrix;
pub mod optim;
pub mod rng;

pub use attention::{softmax, Attention, AttentionHead, AttentionTrace};
pub use cache::{energy_of, CacheEntry, ForwardCache, LayerId};
pub use dense::{Activation, Dense, Mlp};
pub use gradcheck::{finite_diff_grad, max_relative_error};
pub use matrix::Matrix;
pub use optim::{adamw_step, AdamW, AdamWConfig, TensorState};
pub use rng::{streams, Rng};
