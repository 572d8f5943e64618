//! Synthetic Push/Hit/Stack tasks, the experience cache and dataset files.

mod cache;
pub mod generators;
mod io;
mod objects;

pub use cache::{fill_cache, object_group, Batch, ExperienceCache, EVAL_BATCH, EVAL_FRACTION};
pub use generators::{gen_hit, gen_push, gen_stack, reflect, Sample, Teacher};
pub use io::{format_dataset, parse_dataset, read_dataset, read_dataset_for, write_dataset};
pub use objects::{stable_pair, ObjectConfig, OBJECTS, OBJECT_COUNT};

use crate::net::TaskSpec;
use crate::nn::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Push,
    Hit,
    Stack,
}

impl TaskKind {
    pub const ALL: [TaskKind; 3] = [TaskKind::Push, TaskKind::Hit, TaskKind::Stack];

    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Push => "push",
            TaskKind::Hit => "hit",
            TaskKind::Stack => "stack",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    pub fn spec(self) -> TaskSpec {
        match self {
            TaskKind::Push => TaskSpec::push(),
            TaskKind::Hit => TaskSpec::hit(),
            TaskKind::Stack => TaskSpec::stack(),
        }
    }

    pub fn generate(self, rng: &mut Rng) -> Sample {
        match self {
            TaskKind::Push => gen_push(rng),
            TaskKind::Hit => gen_hit(rng),
            TaskKind::Stack => gen_stack(rng),
        }
    }
}
