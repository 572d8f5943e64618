use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Input/output dimensions of one effect-prediction task.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub state_dim: usize,
    pub action_dim: usize,
    pub effect_dim: usize,
}

impl TaskSpec {
    pub fn new(name: impl Into<String>, state_dim: usize, action_dim: usize, effect_dim: usize) -> Self {
        Self {
            name: name.into(),
            state_dim,
            action_dim,
            effect_dim,
        }
    }

    pub fn push() -> Self {
        Self::new("push", 9, 8, 9)
    }

    pub fn hit() -> Self {
        Self::new("hit", 9, 8, 9)
    }

    pub fn stack() -> Self {
        Self::new("stack", 18, 12, 18)
    }

    /// Push, Hit and Stack in that order.
    pub fn default_tasks() -> Vec<Self> {
        vec![Self::push(), Self::hit(), Self::stack()]
    }

    pub fn validate(&self) -> Result<()> {
        if self.state_dim == 0 || self.action_dim == 0 || self.effect_dim == 0 {
            return Err(Error::config(format!(
                "task {}: all dimensions must be >= 1 (got {},{},{})",
                self.name, self.state_dim, self.action_dim, self.effect_dim
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// One network shared by all tasks.
    MultiTask,
    /// An independent network per task, no shared parameters.
    SingleTask,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    PaperDefault,
    Low,
    Medium,
    High,
}

impl Tier {
    /// Nominal parameter budget for the complexity tiers.
    pub fn target_params(self) -> Option<usize> {
        match self {
            Tier::PaperDefault => None,
            Tier::Low => Some(800),
            Tier::Medium => Some(2000),
            Tier::High => Some(5200),
        }
    }
}

/// Attention/flag configuration of a multi-task network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ablation {
    pub use_attention: bool,
    pub use_flag: bool,
}

impl Ablation {
    pub const FULL: Ablation = Ablation {
        use_attention: true,
        use_flag: true,
    };
    pub const NO_FLAG: Ablation = Ablation {
        use_attention: true,
        use_flag: false,
    };
    pub const NO_ATTENTION: Ablation = Ablation {
        use_attention: false,
        use_flag: true,
    };
    pub const NO_BOTH: Ablation = Ablation {
        use_attention: false,
        use_flag: false,
    };

    /// The four architecture variants, full model first.
    pub const ALL: [Ablation; 4] = [Self::FULL, Self::NO_FLAG, Self::NO_ATTENTION, Self::NO_BOTH];

    pub fn name(self) -> &'static str {
        match (self.use_attention, self.use_flag) {
            (true, true) => "full",
            (true, false) => "no-flag",
            (false, true) => "no-attn",
            (false, false) => "no-both",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|a| a.name() == name)
    }
}

impl Default for Ablation {
    fn default() -> Self {
        Self::FULL
    }
}

/// Layer widths of the effect-prediction network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    /// Projected state width (d_s).
    pub state_dim: usize,
    /// Hidden width of the shared encoder F.
    pub shared_hidden: usize,
    /// Shared encoder output (d_h).
    pub latent_dim: usize,
    /// Hidden width of the task encoders f.
    pub task_hidden: usize,
    /// Task representation width (d_r).
    pub repr_dim: usize,
    /// Projected action width (d_a).
    pub action_dim: usize,
    /// Hidden width of the task decoders g.
    pub decoder_hidden: usize,
    pub heads: usize,
    pub variant: Variant,
    pub tier: Tier,
}

impl NetworkSpec {
    pub fn paper_default(variant: Variant) -> Self {
        Self::for_tier(Tier::PaperDefault, variant)
    }

    /// Widths for a complexity tier. `Low` reuses the default widths; the
    /// larger tiers were searched so the three-task model lands near the
    /// tier's parameter budget while keeping roughly the default aspect ratios.
    pub fn for_tier(tier: Tier, variant: Variant) -> Self {
        // (d_s, F hidden, d_h, f hidden, d_r, decoder hidden)
        let (s, sh, h, th, r, g) = match (tier, variant) {
            (Tier::PaperDefault | Tier::Low, Variant::MultiTask) => (6, 6, 4, 4, 2, 4),
            (Tier::PaperDefault | Tier::Low, Variant::SingleTask) => (4, 4, 4, 4, 2, 4),
            (Tier::Medium, Variant::MultiTask) => (11, 11, 8, 8, 4, 8),
            (Tier::Medium, Variant::SingleTask) => (7, 7, 7, 7, 4, 8),
            (Tier::High, Variant::MultiTask) => (22, 22, 14, 14, 7, 14),
            (Tier::High, Variant::SingleTask) => (13, 13, 13, 13, 7, 14),
        };
        Self {
            state_dim: s,
            shared_hidden: sh,
            latent_dim: h,
            task_hidden: th,
            repr_dim: r,
            action_dim: 1,
            decoder_hidden: g,
            heads: 1,
            variant,
            tier,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let widths = [
            ("state_dim", self.state_dim),
            ("shared_hidden", self.shared_hidden),
            ("latent_dim", self.latent_dim),
            ("task_hidden", self.task_hidden),
            ("repr_dim", self.repr_dim),
            ("action_dim", self.action_dim),
            ("decoder_hidden", self.decoder_hidden),
            ("heads", self.heads),
        ];
        for (name, w) in widths {
            if w == 0 {
                return Err(Error::config(format!("network {name} must be >= 1")));
            }
        }
        Ok(())
    }

    /// Attention model-dim (d_r, plus one for the flag).
    pub fn attention_dim(&self, ablation: Ablation) -> usize {
        self.repr_dim + usize::from(ablation.use_flag)
    }

    /// Width of the decoder input for `m` tasks.
    pub fn decoder_input_dim(&self, ablation: Ablation, m: usize) -> usize {
        let z = self.attention_dim(ablation);
        if ablation.use_attention {
            z + self.action_dim
        } else {
            m * z + self.action_dim
        }
    }
}
