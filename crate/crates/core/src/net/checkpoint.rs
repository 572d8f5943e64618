//! Versioned binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes  "IMTLCKPT"
//! version    u32      1
//! network    8 × u32  state_dim shared_hidden latent_dim task_hidden
//!                     repr_dim action_dim decoder_hidden heads
//!            4 × u8   variant (0 multi, 1 single), tier (0 paper, 1 low,
//!                     2 medium, 3 high), use_attention, use_flag
//! tasks      u32 count, then per task: u32 name length, UTF-8 name,
//!            u32 state_dim, u32 action_dim, u32 effect_dim
//! params     u64 count, then that many f64 in declaration order
//!            (single-task checkpoints concatenate the per-task networks
//!            in task order)
//! ```

use std::fs;
use std::path::Path;

use super::model::MultiTaskModel;
use super::spec::{Ablation, NetworkSpec, TaskSpec, Tier, Variant};
use crate::error::{Error, Result};
use crate::nn::Rng;

pub const MAGIC: &[u8; 8] = b"IMTLCKPT";
pub const VERSION: u32 = 1;

/// Serialises one multi-task model or a set of single-task models.
pub fn encode(models: &[&MultiTaskModel]) -> Result<Vec<u8>> {
    let first = models.first().ok_or_else(|| Error::config("nothing to checkpoint"))?;
    let spec = first.spec();
    let ablation = first.ablation();
    let tasks: Vec<TaskSpec> = match spec.variant {
        Variant::MultiTask => {
            if models.len() != 1 {
                return Err(Error::config("a multi-task checkpoint holds one model"));
            }
            first.tasks().to_vec()
        }
        Variant::SingleTask => models.iter().map(|m| m.tasks()[0].clone()).collect(),
    };
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for v in [
        spec.state_dim,
        spec.shared_hidden,
        spec.latent_dim,
        spec.task_hidden,
        spec.repr_dim,
        spec.action_dim,
        spec.decoder_hidden,
        spec.heads,
    ] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.push(match spec.variant {
        Variant::MultiTask => 0,
        Variant::SingleTask => 1,
    });
    out.push(match spec.tier {
        Tier::PaperDefault => 0,
        Tier::Low => 1,
        Tier::Medium => 2,
        Tier::High => 3,
    });
    out.push(u8::from(ablation.use_attention));
    out.push(u8::from(ablation.use_flag));
    out.extend_from_slice(&(tasks.len() as u32).to_le_bytes());
    for t in &tasks {
        out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
        out.extend_from_slice(t.name.as_bytes());
        for v in [t.state_dim, t.action_dim, t.effect_dim] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
    }
    let params: Vec<f64> = models.iter().flat_map(|m| m.flat_params()).collect();
    out.extend_from_slice(&(params.len() as u64).to_le_bytes());
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(
                self.path,
                self.pos as u64,
                format!("truncated checkpoint while reading {what}"),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn bad(&self, detail: impl Into<String>) -> Error {
        Error::format(self.path, self.pos as u64, detail)
    }
}

/// Parses a checkpoint back into its model(s).
pub fn decode(bytes: &[u8], path: &Path) -> Result<Vec<MultiTaskModel>> {
    let mut r = Reader { bytes, pos: 0, path };
    if r.take(8, "magic")? != MAGIC {
        return Err(Error::format(path, 0, "not a checkpoint (bad magic)"));
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return Err(r.bad(format!("unsupported checkpoint version {version}")));
    }
    let mut dims = [0usize; 8];
    for d in &mut dims {
        *d = r.u32("network spec")? as usize;
    }
    let variant = match r.u8("variant")? {
        0 => Variant::MultiTask,
        1 => Variant::SingleTask,
        v => return Err(r.bad(format!("unknown variant tag {v}"))),
    };
    let tier = match r.u8("tier")? {
        0 => Tier::PaperDefault,
        1 => Tier::Low,
        2 => Tier::Medium,
        3 => Tier::High,
        v => return Err(r.bad(format!("unknown tier tag {v}"))),
    };
    let ablation = Ablation {
        use_attention: r.u8("ablation")? != 0,
        use_flag: r.u8("ablation")? != 0,
    };
    let spec = NetworkSpec {
        state_dim: dims[0],
        shared_hidden: dims[1],
        latent_dim: dims[2],
        task_hidden: dims[3],
        repr_dim: dims[4],
        action_dim: dims[5],
        decoder_hidden: dims[6],
        heads: dims[7],
        variant,
        tier,
    };
    let n_tasks = r.u32("task count")? as usize;
    let mut tasks = Vec::with_capacity(n_tasks);
    for _ in 0..n_tasks {
        let len = r.u32("task name length")? as usize;
        let name = std::str::from_utf8(r.take(len, "task name")?)
            .map_err(|_| r.bad("task name is not UTF-8"))?
            .to_string();
        let s = r.u32("task dims")? as usize;
        let a = r.u32("task dims")? as usize;
        let e = r.u32("task dims")? as usize;
        tasks.push(TaskSpec::new(name, s, a, e));
    }
    let n_params = r.u64("parameter count")? as usize;
    // Build skeletons, then overwrite their parameters.
    let mut rng = Rng::new(0, 0);
    let mut models = match variant {
        Variant::MultiTask => vec![MultiTaskModel::build(&tasks, spec, ablation, &mut rng)?],
        Variant::SingleTask => tasks
            .iter()
            .map(|t| MultiTaskModel::build(std::slice::from_ref(t), spec, ablation, &mut rng))
            .collect::<Result<Vec<_>>>()?,
    };
    let expected: usize = models.iter().map(MultiTaskModel::param_count).sum();
    if expected != n_params {
        return Err(r.bad(format!(
            "header describes {expected} parameters but file declares {n_params}"
        )));
    }
    for m in &mut models {
        let count = m.param_count();
        let raw = r.take(count * 8, "parameters")?;
        let values: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        m.set_flat_params(&values)?;
    }
    if r.pos != bytes.len() {
        return Err(r.bad("trailing bytes after parameters"));
    }
    Ok(models)
}

pub fn write(path: &Path, models: &[&MultiTaskModel]) -> Result<()> {
    let bytes = encode(models)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<Vec<MultiTaskModel>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
