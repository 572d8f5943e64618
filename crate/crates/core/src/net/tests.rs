use std::collections::HashSet;
use std::path::Path;

use super::*;
use crate::nn::{finite_diff_grad, max_relative_error, AdamWConfig, Matrix, Rng};

fn random_batch(task: &TaskSpec, n: usize, rng: &mut Rng) -> (Matrix, Matrix, Matrix) {
    let mut fill = |cols: usize| {
        let data = (0..n * cols).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        Matrix::from_vec(n, cols, data).unwrap()
    };
    let s = fill(task.state_dim);
    let a = fill(task.action_dim);
    let e = fill(task.effect_dim);
    (s, a, e)
}

fn default_model(ablation: Ablation, seed: u64) -> MultiTaskModel {
    MultiTaskModel::build(
        &TaskSpec::default_tasks(),
        NetworkSpec::paper_default(Variant::MultiTask),
        ablation,
        &mut Rng::new(seed, 1),
    )
    .unwrap()
}

/// Fills the zero-initialised output layers so every path carries gradient.
fn with_random_outputs(mut model: MultiTaskModel, seed: u64) -> MultiTaskModel {
    let mut rng = Rng::new(seed, 8);
    let p: Vec<f64> = model
        .flat_params()
        .into_iter()
        .map(|v| if v == 0.0 { rng.uniform_in(-0.5, 0.5) } else { v })
        .collect();
    model.set_flat_params(&p).unwrap();
    model
}

fn dims(layers: &[crate::nn::Dense]) -> Vec<(usize, usize)> {
    layers.iter().map(|d| (d.input_dim(), d.output_dim())).collect()
}

/// Analytic gradient of the engaged task's MSE against central differences
/// of the same loss with the other tasks' rows held fixed.
fn gradient_gap(model: &MultiTaskModel, engaged: usize, seed: u64) -> f64 {
    let mut rng = Rng::new(seed, 9);
    let (s, a, e) = random_batch(&model.tasks()[engaged], 4, &mut rng);
    let pass = model.forward(engaged, &s, &a).unwrap();
    let detached: Vec<Matrix> = (0..s.rows()).map(|b| pass.z_matrix(b).clone()).collect();
    let (_, _, g) = model.loss_and_grad(&pass, &e).unwrap();
    let mask = TrainMask::engaged(model.task_count(), engaged);
    let grads = model.backward(&pass, &g, &mask).unwrap();
    let analytic = grads.flat_params();

    let mut probe = model.clone();
    let numeric = finite_diff_grad(
        |p| {
            probe.set_flat_params(p).unwrap();
            let pass = probe.forward_detached(engaged, &s, &a, &detached).unwrap();
            mse_mae(&pass.prediction, &e).0
        },
        &model.flat_params(),
        1e-4,
    );
    // Frozen tensors must carry exactly zero gradient; compare the rest.
    let active = model.tensor_mask(&mask);
    let (mut an, mut nu) = (Vec::new(), Vec::new());
    let mut offset = 0;
    for (t, on) in model.tensors().iter().zip(active) {
        let range = offset..offset + t.len();
        if on {
            an.extend_from_slice(&analytic[range.clone()]);
            nu.extend_from_slice(&numeric[range]);
        } else {
            assert!(analytic[range].iter().all(|&v| v == 0.0));
        }
        offset += t.len();
    }
    max_relative_error(&an, &nu)
}

#[test]
fn paper_default_layer_sizes() {
    let m = default_model(Ablation::FULL, 0);
    assert_eq!(dims(&m.shared_encoder.layers), vec![(6, 6), (6, 4)]);
    let want_state = [(9, 6), (9, 6), (18, 6)];
    let want_action = [(8, 1), (8, 1), (12, 1)];
    let want_effect = [9, 9, 18];
    for i in 0..3 {
        assert_eq!(
            (m.state_projection[i].input_dim(), m.state_projection[i].output_dim()),
            want_state[i]
        );
        assert_eq!(
            (m.action_projection[i].input_dim(), m.action_projection[i].output_dim()),
            want_action[i]
        );
        assert_eq!(dims(&m.task_encoders[i].layers), vec![(4, 4), (4, 2)]);
        assert_eq!(
            dims(&m.decoders[i].layers),
            vec![(4, 4), (4, 4), (4, 4), (4, want_effect[i])]
        );
    }
    let att = m.attention.as_ref().unwrap();
    assert_eq!((att.model_dim(), att.key_dim()), (3, 3));
    // push state projection 9→6 with bias
    assert_eq!(m.state_projection[0].weight.len() + m.state_projection[0].bias.len(), 60);
}

#[test]
fn paper_default_param_counts() {
    // Hand count: F 42+28, MHA 4·9, per task P_s + P_a + f + g.
    let push = 60 + 9 + (20 + 10) + (20 + 20 + 20 + 45);
    let stack = 114 + 13 + (20 + 10) + (20 + 20 + 20 + 90);
    let multi = 70 + 36 + 2 * push + stack;
    assert_eq!(default_model(Ablation::FULL, 0).param_count(), multi);
    assert_eq!(multi, 821);

    let learner = Learner::build(
        &TaskSpec::default_tasks(),
        NetworkSpec::paper_default(Variant::SingleTask),
        Ablation::FULL,
        AdamWConfig::default(),
        &mut Rng::new(0, 1),
    )
    .unwrap();
    let per = |t: &TaskSpec| {
        let sp = (t.state_dim + 1) * 4;
        let ap = t.action_dim + 1;
        sp + ap + (20 + 20) + (20 + 10) + 4 * 2 * 2 + (16 + 20 + 20 + 5 * t.effect_dim)
    };
    let expected: usize = TaskSpec::default_tasks().iter().map(per).sum();
    assert_eq!(learner.param_count(), expected);
    let single = &learner.models()[0];
    assert_eq!(single.attention.as_ref().unwrap().model_dim(), 2);
    assert_eq!(dims(&single.decoders[0].layers)[0], (3, 4));
}

#[test]
fn tier_budgets() {
    for tier in [Tier::Low, Tier::Medium, Tier::High] {
        let target = tier.target_params().unwrap() as f64;
        let multi = MultiTaskModel::build(
            &TaskSpec::default_tasks(),
            NetworkSpec::for_tier(tier, Variant::MultiTask),
            Ablation::FULL,
            &mut Rng::new(0, 1),
        )
        .unwrap()
        .param_count() as f64;
        assert!((multi / target - 1.0).abs() <= 0.05, "{tier:?} multi {multi}");
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..3 {
        let m = with_random_outputs(default_model(Ablation::FULL, seed), seed);
        for engaged in 0..3 {
            let gap = gradient_gap(&m, engaged, seed * 10 + engaged as u64);
            assert!(gap < 1e-4, "seed {seed} task {engaged}: {gap}");
        }
    }
}

#[test]
fn ablated_gradients_match_finite_differences() {
    for ab in [Ablation::NO_FLAG, Ablation::NO_ATTENTION, Ablation::NO_BOTH] {
        let m = with_random_outputs(default_model(ab, 4), 4);
        for engaged in 0..3 {
            let gap = gradient_gap(&m, engaged, engaged as u64);
            assert!(gap < 1e-4, "{} task {engaged}: {gap}", ab.name());
        }
    }
}

#[test]
fn frozen_mask_gives_zero_gradients() {
    let m = default_model(Ablation::FULL, 1);
    let (s, a, e) = random_batch(&m.tasks()[1], 5, &mut Rng::new(2, 2));
    let pass = m.forward(1, &s, &a).unwrap();
    let (_, _, g) = m.loss_and_grad(&pass, &e).unwrap();
    let grads = m.backward(&pass, &g, &TrainMask::frozen(3)).unwrap();
    assert!(grads.flat_params().iter().all(|&v| v == 0.0));
}

#[test]
fn train_step_touches_only_engaged_and_shared() {
    let mut m = default_model(Ablation::FULL, 2);
    let mut opt = m.optimizer(AdamWConfig::default());
    let (s, a, e) = random_batch(&m.tasks()[0], 20, &mut Rng::new(3, 2));
    let before = m.clone();
    m.train_step(0, &s, &a, &e, &mut opt).unwrap();
    for i in 1..3 {
        assert_eq!(before.state_projection[i], m.state_projection[i]);
        assert_eq!(before.action_projection[i], m.action_projection[i]);
        assert_eq!(before.task_encoders[i], m.task_encoders[i]);
        assert_eq!(before.decoders[i], m.decoders[i]);
    }
    assert_ne!(before.state_projection[0], m.state_projection[0]);
    assert_ne!(before.shared_encoder, m.shared_encoder);
    assert_ne!(before.task_encoders[0], m.task_encoders[0]);
    assert_ne!(before.attention, m.attention);
    assert_ne!(before.decoders[0], m.decoders[0]);
}

#[test]
fn parameter_partition() {
    let m = default_model(Ablation::FULL, 0);
    let info = m.param_info();
    let names: HashSet<&str> = info.iter().map(|p| p.name.as_str()).collect();
    assert_eq!(names.len(), info.len(), "tensor names are unique");
    assert_eq!(info.iter().map(|p| p.len).sum::<usize>(), m.param_count());
    let mut by_owner: Vec<HashSet<&str>> = vec![HashSet::new(); 4];
    for p in &info {
        let slot = match p.owner {
            Owner::Shared => 0,
            Owner::Task(i) => i + 1,
        };
        by_owner[slot].insert(&p.name);
    }
    let union: HashSet<&str> = by_owner.iter().flatten().copied().collect();
    assert_eq!(union, names);
    for i in 0..4 {
        for j in i + 1..4 {
            assert!(by_owner[i].is_disjoint(&by_owner[j]));
        }
    }
}

#[test]
fn flag_exclusivity_and_shape() {
    for m_tasks in 1..=4 {
        let tasks: Vec<TaskSpec> = (0..m_tasks).map(|i| TaskSpec::new(format!("t{i}"), 3, 2, 2)).collect();
        for ab in Ablation::ALL {
            let model = MultiTaskModel::build(
                &tasks,
                NetworkSpec::paper_default(Variant::MultiTask),
                ab,
                &mut Rng::new(1, 1),
            )
            .unwrap();
            for engaged in 0..m_tasks {
                let (s, a, _) = random_batch(&tasks[engaged], 3, &mut Rng::new(5, 5));
                let pass = model.forward(engaged, &s, &a).unwrap();
                let z = pass.z_matrix(0);
                let width = 2 + usize::from(ab.use_flag);
                assert_eq!(z.shape(), (m_tasks, width));
                if ab.use_flag {
                    let flags: Vec<f64> = (0..m_tasks).map(|i| z[(i, 2)]).collect();
                    assert_eq!(flags.iter().filter(|&&f| f == 1.0).count(), 1);
                    assert_eq!(flags[engaged], 1.0);
                }
                let dec_in = if ab.use_attention { width + 1 } else { m_tasks * width + 1 };
                assert_eq!(pass.decoder_input().cols(), dec_in);
            }
        }
    }
}

#[test]
fn ablation_dimensions() {
    let no_attn = default_model(Ablation::NO_ATTENTION, 0);
    assert_eq!(no_attn.decoders[0].layers[0].input_dim(), 10);
    assert!(no_attn.attention.is_none());
    let no_flag = default_model(Ablation::NO_FLAG, 0);
    assert_eq!(no_flag.attention.as_ref().unwrap().model_dim(), 2);
    let (s, a, _) = random_batch(&no_flag.tasks()[0], 2, &mut Rng::new(0, 0));
    assert_eq!(no_flag.forward(0, &s, &a).unwrap().query(0).len(), 2);
    let no_both = default_model(Ablation::NO_BOTH, 0);
    assert_eq!(no_both.decoders[2].layers[0].input_dim(), 7);
}

#[test]
fn forward_ablated_checks_flags() {
    let m = default_model(Ablation::FULL, 0);
    let (s, a, _) = random_batch(&m.tasks()[0], 2, &mut Rng::new(0, 0));
    let plain = m.forward(0, &s, &a).unwrap().prediction;
    assert_eq!(m.forward_ablated(0, &s, &a, Ablation::FULL).unwrap().prediction, plain);
    assert!(m.forward_ablated(0, &s, &a, Ablation::NO_FLAG).is_err());
}

#[test]
fn transfer_ablation_no_op_and_all_zero() {
    let m = default_model(Ablation::FULL, 3);
    let (s, a, _) = random_batch(&m.tasks()[1], 6, &mut Rng::new(1, 0));
    let plain = m.forward(1, &s, &a).unwrap();
    let none = m.forward_zeroed(1, &s, &a, &[]).unwrap();
    assert_eq!(plain.prediction, none.prediction);

    let all = m.forward_zeroed(1, &s, &a, &[0, 1, 2]).unwrap();
    // Zero values give a zero attention output, so the decoder sees [0 : â].
    let ctx = all.decoder_input().columns(0, 3);
    assert!(ctx.as_slice().iter().all(|&v| v == 0.0));
    let by_source = m.forward_transfer_ablated(1, 0, &s, &a).unwrap();
    assert_eq!(by_source.z_matrix(0).row(0), &[0.0, 0.0, 0.0]);
    assert_eq!(by_source.query(0), plain.query(0));
}

#[test]
fn zero_network_outputs_bias() {
    let mut m = default_model(Ablation::FULL, 0);
    let n = m.param_count();
    m.set_flat_params(&vec![0.0; n]).unwrap();
    let last = m.decoders[0].layers.len() - 1;
    m.decoders[0].layers[last].bias = vec![0.5; 9];
    let (s, a, _) = random_batch(&m.tasks()[0], 3, &mut Rng::new(0, 0));
    let pass = m.forward(0, &s, &a).unwrap();
    assert!(pass.prediction.as_slice().iter().all(|&v| v == 0.5));
    // Every activation upstream of the last bias is zero.
    assert!((pass.energy - 0.5 * 27.0).abs() < 1e-12);
}

#[test]
fn rejects_bad_inputs() {
    let m = default_model(Ablation::FULL, 0);
    let (s, a, _) = random_batch(&m.tasks()[2], 2, &mut Rng::new(0, 0));
    assert!(m.forward(0, &s, &a).is_err());
    assert!(m.forward(3, &s, &a).is_err());
    let bad = MultiTaskModel::build(
        &TaskSpec::default_tasks(),
        NetworkSpec::paper_default(Variant::SingleTask),
        Ablation::FULL,
        &mut Rng::new(0, 0),
    );
    assert!(bad.is_err());
}

#[test]
fn checkpoint_round_trip() {
    let m = default_model(Ablation::NO_FLAG, 7);
    let bytes = checkpoint::encode(&[&m]).unwrap();
    let back = checkpoint::decode(&bytes, Path::new("m.ckpt")).unwrap();
    assert_eq!(back, vec![m.clone()]);

    let learner = Learner::build(
        &TaskSpec::default_tasks(),
        NetworkSpec::for_tier(Tier::Medium, Variant::SingleTask),
        Ablation::FULL,
        AdamWConfig::default(),
        &mut Rng::new(1, 1),
    )
    .unwrap();
    let models = learner.models();
    let bytes = checkpoint::encode(&models).unwrap();
    let back = checkpoint::decode(&bytes, Path::new("s.ckpt")).unwrap();
    assert_eq!(back.iter().collect::<Vec<_>>(), models);

    let err = checkpoint::decode(&bytes[..bytes.len() - 3], Path::new("s.ckpt")).unwrap_err();
    assert!(err.to_string().contains("truncated"));
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(checkpoint::decode(&extra, Path::new("s.ckpt")).is_err());
    assert!(checkpoint::decode(b"NOTACKPT", Path::new("x")).is_err());
}

#[test]
fn fresh_model_predicts_zero() {
    let m = default_model(Ablation::FULL, 6);
    for t in 0..3 {
        let (s, a, _) = random_batch(&m.tasks()[t], 7, &mut Rng::new(t as u64, 3));
        let pass = m.forward(t, &s, &a).unwrap();
        assert!(pass.prediction.as_slice().iter().all(|&v| v == 0.0));
    }
}
