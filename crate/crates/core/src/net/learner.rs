use super::model::{MultiTaskModel, StepStats};
use super::spec::{Ablation, NetworkSpec, TaskSpec, Variant};
use crate::error::{Error, Result};
use crate::nn::{AdamW, AdamWConfig, Matrix, Rng};

/// A trainable predictor for a task set: either one shared network or an
/// independent single-task network per task, each with its own optimizer.
#[derive(Clone, Debug)]
pub enum Learner {
    Multi {
        model: MultiTaskModel,
        optimizer: AdamW,
    },
    Single {
        models: Vec<MultiTaskModel>,
        optimizers: Vec<AdamW>,
    },
}

impl Learner {
    pub fn build(
        tasks: &[TaskSpec],
        spec: NetworkSpec,
        ablation: Ablation,
        optimizer: AdamWConfig,
        rng: &mut Rng,
    ) -> Result<Self> {
        match spec.variant {
            Variant::MultiTask => {
                let model = MultiTaskModel::build(tasks, spec, ablation, rng)?;
                let optimizer = model.optimizer(optimizer);
                Ok(Learner::Multi { model, optimizer })
            }
            Variant::SingleTask => {
                if tasks.is_empty() {
                    return Err(Error::config("at least one task is required"));
                }
                // one task per network, so the engaged flag carries no information
                let single = Ablation {
                    use_attention: ablation.use_attention,
                    use_flag: false,
                };
                let models = tasks
                    .iter()
                    .map(|t| MultiTaskModel::build(std::slice::from_ref(t), spec, single, rng))
                    .collect::<Result<Vec<_>>>()?;
                let optimizers = models.iter().map(|m| m.optimizer(optimizer)).collect();
                Ok(Learner::Single { models, optimizers })
            }
        }
    }

    pub fn from_models(models: Vec<MultiTaskModel>, optimizer: AdamWConfig) -> Result<Self> {
        match models.first().map(|m| m.spec().variant) {
            None => Err(Error::config("no models")),
            Some(Variant::MultiTask) if models.len() == 1 => {
                let model = models.into_iter().next().expect("one model");
                let optimizer = model.optimizer(optimizer);
                Ok(Learner::Multi { model, optimizer })
            }
            Some(Variant::SingleTask) => {
                let optimizers = models.iter().map(|m| m.optimizer(optimizer)).collect();
                Ok(Learner::Single { models, optimizers })
            }
            Some(Variant::MultiTask) => Err(Error::config("a multi-task learner holds exactly one model")),
        }
    }

    pub fn variant(&self) -> Variant {
        match self {
            Learner::Multi { .. } => Variant::MultiTask,
            Learner::Single { .. } => Variant::SingleTask,
        }
    }

    pub fn task_count(&self) -> usize {
        match self {
            Learner::Multi { model, .. } => model.task_count(),
            Learner::Single { models, .. } => models.len(),
        }
    }

    pub fn models(&self) -> Vec<&MultiTaskModel> {
        match self {
            Learner::Multi { model, .. } => vec![model],
            Learner::Single { models, .. } => models.iter().collect(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.models().iter().map(|m| m.param_count()).sum()
    }

    /// The network and local task index serving `task`.
    pub fn route(&self, task: usize) -> Result<(&MultiTaskModel, usize)> {
        match self {
            Learner::Multi { model, .. } if task < model.task_count() => Ok((model, task)),
            Learner::Single { models, .. } if task < models.len() => Ok((&models[task], 0)),
            _ => Err(Error::config(format!("task {task} out of range"))),
        }
    }

    pub fn train_step(&mut self, task: usize, states: &Matrix, actions: &Matrix, effects: &Matrix) -> Result<StepStats> {
        match self {
            Learner::Multi { model, optimizer } => model.train_step(task, states, actions, effects, optimizer),
            Learner::Single { models, optimizers } => {
                let (Some(model), Some(opt)) = (models.get_mut(task), optimizers.get_mut(task)) else {
                    return Err(Error::config(format!("task {task} out of range")));
                };
                model.train_step(0, states, actions, effects, opt)
            }
        }
    }

    pub fn predict(&self, task: usize, states: &Matrix, actions: &Matrix) -> Result<Matrix> {
        let (model, local) = self.route(task)?;
        Ok(model.forward(local, states, actions)?.prediction)
    }
}
