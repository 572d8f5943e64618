//! Synthetic stand-ins for the Push, Hit and Stack interaction data.
//!
//! Effects come from a frozen random "teacher": a tanh layer over a scalar
//! summary of the object state and a scalar summary of the action, followed
//! by a linear head. The networks see the action through a one-wide
//! projection and the state through a two-wide ReLU code, so richer
//! dependence would be unlearnable at the default widths. Push
//! scales the teacher output by the object's rollability. Hit doubles the
//! push effect and folds the positional part back into `[-1, 1]`, a
//! bouncing-off-the-walls analogue. Stack places the picked object on the
//! target for stable pairs and otherwise produces a hit-style fall.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::objects::{stable_pair, OBJECTS, OBJECT_COUNT};
use crate::nn::{Matrix, Rng};

pub const OBJECT_STATE_DIM: usize = 9;
pub const PUSH_ACTION_DIM: usize = 8;
/// The teacher sees the state and the action only through these few
/// linear summaries.
pub const STATE_SUMMARY: usize = 1;
pub const ACTION_SUMMARY: usize = 1;
pub const TEACHER_INPUT: usize = STATE_SUMMARY + ACTION_SUMMARY;
pub const TEACHER_HIDDEN: usize = 16;
/// Positional slots (x, y, z) of an object state or effect.
pub const POSITION: std::ops::Range<usize> = 0..3;

const TEACHER_SEED: u64 = 0x5EED_7EAC;
/// Scale of the teacher weights relative to a unit-variance layer. Below
/// one the tanh stays mostly in its linear range.
const TEACHER_GAIN: f64 = 0.5;
/// Bound on the teacher residual added to a stable placement.
pub const STACK_RESIDUAL: f64 = 0.05;
/// Bound on the target-object motion in a stable stack.
pub const STACK_TARGET_JITTER: f64 = 0.02;

/// One `(state, action, effect)` interaction.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub effect: Vec<f64>,
}

/// Frozen map from (object state, push action) to an effect vector.
#[derive(Clone, Debug)]
pub struct Teacher {
    /// hidden × (state + compressed action)
    pub core: Matrix,
    pub core_bias: Vec<f64>,
    /// effect × hidden
    pub head: Matrix,
    /// summary × object state
    pub state_summary: Matrix,
    /// summary × push action
    pub action_summary: Matrix,
}

impl Teacher {
    pub fn new(seed: u64) -> Self {
        let mut rng = Rng::new(seed, 0);
        let mut fill = |rows: usize, cols: usize, bound: f64| {
            let mut m = Matrix::zeros(rows, cols);
            for v in m.as_mut_slice() {
                *v = rng.uniform_in(-bound, bound);
            }
            m
        };
        let core = fill(TEACHER_HIDDEN, TEACHER_INPUT, TEACHER_GAIN * (3.0 / TEACHER_INPUT as f64).sqrt());
        let head = fill(OBJECT_STATE_DIM, TEACHER_HIDDEN, TEACHER_GAIN * (3.0 / TEACHER_HIDDEN as f64).sqrt());
        let state_summary = fill(STATE_SUMMARY, OBJECT_STATE_DIM, (3.0 / OBJECT_STATE_DIM as f64).sqrt());
        let action_summary = fill(ACTION_SUMMARY, PUSH_ACTION_DIM, (3.0 / PUSH_ACTION_DIM as f64).sqrt());
        let core_bias = fill(1, TEACHER_HIDDEN, 0.5).into_vec();
        Self {
            core,
            core_bias,
            head,
            state_summary,
            action_summary,
        }
    }

    /// The teacher shared by every generator.
    pub fn standard() -> &'static Teacher {
        static TEACHER: OnceLock<Teacher> = OnceLock::new();
        TEACHER.get_or_init(|| Teacher::new(TEACHER_SEED))
    }

    /// `C · tanh(T · [S·state ; A·action] + b)`, before object scaling.
    pub fn raw(&self, state: &[f64], action: &[f64]) -> Vec<f64> {
        let dot = |w: &[f64], x: &[f64]| -> f64 { w.iter().zip(x).map(|(a, b)| a * b).sum() };
        let mut input = Vec::with_capacity(TEACHER_INPUT);
        input.extend((0..STATE_SUMMARY).map(|r| dot(self.state_summary.row(r), state)));
        input.extend((0..ACTION_SUMMARY).map(|r| dot(self.action_summary.row(r), action)));
        let hidden: Vec<f64> = (0..TEACHER_HIDDEN)
            .map(|h| {
                let pre: f64 = self.core.row(h).iter().zip(&input).map(|(w, x)| w * x).sum();
                (pre + self.core_bias[h]).tanh()
            })
            .collect();
        (0..OBJECT_STATE_DIM)
            .map(|o| self.head.row(o).iter().zip(&hidden).map(|(w, x)| w * x).sum())
            .collect()
    }
}

/// Folds `v` into `[-1, 1]` by reflecting at the boundaries.
pub fn reflect(v: f64) -> f64 {
    if (-1.0..=1.0).contains(&v) {
        return v;
    }
    let u = (v + 1.0).rem_euclid(4.0);
    let u = if u > 2.0 { 4.0 - u } else { u };
    u - 1.0
}

fn one_hot(index: usize, len: usize) -> impl Iterator<Item = f64> {
    (0..len).map(move |i| if i == index { 1.0 } else { 0.0 })
}

/// Random pose for `object`: x, y uniform on the table, z at rest height,
/// three Euler angles as sin/cos pairs.
pub fn object_state(object: usize, rng: &mut Rng) -> Vec<f64> {
    let x = rng.uniform_in(-1.0, 1.0);
    let y = rng.uniform_in(-1.0, 1.0);
    let mut s = vec![x, y, OBJECTS[object].rest_height];
    for _ in 0..3 {
        let phi = rng.uniform_in(0.0, 2.0 * PI);
        s.push(phi.sin());
        s.push(phi.cos());
    }
    s
}

pub fn push_action(theta: f64, object: usize) -> Vec<f64> {
    let mut a = vec![theta.sin(), theta.cos()];
    a.extend(one_hot(object, OBJECT_COUNT));
    a
}

pub fn push_effect(state: &[f64], action: &[f64], object: usize) -> Vec<f64> {
    let alpha = OBJECTS[object].rollability;
    Teacher::standard().raw(state, action).into_iter().map(|v| alpha * v).collect()
}


pub fn hit_effect(state: &[f64], action: &[f64], object: usize) -> Vec<f64> {
    let mut e: Vec<f64> = push_effect(state, action, object).into_iter().map(|v| 2.0 * v).collect();
    for v in &mut e[POSITION] {
        *v = reflect(*v);
    }
    e
}

fn draw_push_inputs(rng: &mut Rng) -> (usize, Vec<f64>, Vec<f64>) {
    let object = rng.below(OBJECT_COUNT);
    let state = object_state(object, rng);
    let theta = rng.uniform_in(0.0, PI);
    let action = push_action(theta, object);
    (object, state, action)
}

pub fn gen_push(rng: &mut Rng) -> Sample {
    let (object, state, action) = draw_push_inputs(rng);
    let effect = push_effect(&state, &action, object);
    Sample { state, action, effect }
}

pub fn gen_hit(rng: &mut Rng) -> Sample {
    let (object, state, action) = draw_push_inputs(rng);
    let effect = hit_effect(&state, &action, object);
    Sample { state, action, effect }
}

/// Direction of a fall, folded into `[0, π]`: away from the target.
fn fall_angle(picked: &[f64], target: &[f64]) -> f64 {
    let a = (picked[1] - target[1]).atan2(picked[0] - target[0]);
    a.abs()
}

pub fn gen_stack(rng: &mut Rng) -> Sample {
    let picked = rng.below(OBJECT_COUNT);
    let target = rng.below(OBJECT_COUNT);
    let sp = object_state(picked, rng);
    let st = object_state(target, rng);
    let mut action: Vec<f64> = one_hot(picked, OBJECT_COUNT).collect();
    action.extend(one_hot(target, OBJECT_COUNT));

    let theta = fall_angle(&sp, &st);
    let teacher = Teacher::standard();
    let (ep, et) = if stable_pair(picked, target) {
        let mut ep = vec![0.0; OBJECT_STATE_DIM];
        ep[0] = st[0] - sp[0];
        ep[1] = st[1] - sp[1];
        ep[2] = st[2] + OBJECTS[target].rest_height + OBJECTS[picked].rest_height - sp[2];
        let residual = teacher.raw(&sp, &push_action(theta, picked));
        for (e, r) in ep.iter_mut().zip(residual) {
            *e += STACK_RESIDUAL * r.tanh();
        }
        let jitter = teacher.raw(&st, &push_action(theta, target));
        let et: Vec<f64> = jitter.into_iter().map(|r| STACK_TARGET_JITTER * r.tanh()).collect();
        (ep, et)
    } else {
        let ep = hit_effect(&sp, &push_action(theta, picked), picked);
        let et = hit_effect(&st, &push_action(theta, target), target)
            .into_iter()
            .map(|v| 0.5 * v)
            .collect();
        (ep, et)
    };
    let mut effect = ep;
    effect.extend(et);
    let mut state = sp;
    state.extend(st);
    Sample { state, action, effect }
}
