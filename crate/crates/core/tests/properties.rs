use imtl_core::arbitration::{epsilon_greedy, learning_progress};
use imtl_core::harness::{run, RunConfig};
use imtl_core::nn::{adamw_step, softmax, AdamWConfig, Attention, Matrix, Rng, TensorState};
use imtl_core::tasks::{fill_cache, format_dataset, reflect, TaskKind};
use proptest::prelude::*;

fn matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.uniform_in(-3.0, 3.0)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn attention_weights_are_a_distribution(seed in any::<u64>(), tasks in 1usize..6, heads in 1usize..3) {
        let mut rng = Rng::new(seed, 0);
        let dim = 3;
        let att = Attention::uniform(dim, dim, heads, &mut rng);
        let z = matrix(tasks, dim, &mut rng);
        let q: Vec<f64> = z.row(rng.below(tasks)).to_vec();
        let trace = att.forward(&q, &z, &z).unwrap();
        for w in &trace.weights {
            prop_assert_eq!(w.len(), tasks);
            prop_assert!(w.iter().all(|&x| (0.0..=1.0).contains(&x)));
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_is_shift_invariant(logits in prop::collection::vec(-50.0f64..50.0, 1..8), shift in -100.0f64..100.0) {
        let a = softmax(&logits);
        let shifted: Vec<f64> = logits.iter().map(|l| l + shift).collect();
        let b = softmax(&shifted);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn amsgrad_second_moment_max_never_shrinks(grads in prop::collection::vec(-10.0f64..10.0, 1..60)) {
        let cfg = AdamWConfig::default();
        let mut w = vec![0.3];
        let mut state = TensorState::new(1);
        let mut prev = 0.0;
        for g in grads {
            adamw_step(&mut w, &[g], &mut state, &cfg);
            prop_assert!(state.v_max[0] >= prev);
            prop_assert!(state.v_max[0] >= state.v[0]);
            prev = state.v_max[0];
        }
        prop_assert!(w[0].is_finite());
    }

    #[test]
    fn learning_progress_is_non_negative(window in prop::collection::vec(0.0f64..5.0, 2..20)) {
        let lp = learning_progress(&window).unwrap();
        prop_assert!(lp >= 0.0);
    }

    #[test]
    fn exploration_never_picks_the_argmax(scores in prop::collection::vec(-5.0f64..5.0, 2..6), seed in any::<u64>()) {
        let best = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assume!(scores.iter().filter(|&&s| s == best).count() == 1);
        let argmax = scores.iter().position(|&s| s == best).unwrap();
        let mut rng = Rng::new(seed, 3);
        for _ in 0..20 {
            let (pick, explored) = epsilon_greedy(&scores, 1.0, &mut rng);
            prop_assert!(explored);
            prop_assert_ne!(pick, argmax);
        }
        let (pick, explored) = epsilon_greedy(&scores, 0.0, &mut rng);
        prop_assert!(!explored);
        prop_assert_eq!(pick, argmax);
    }

    #[test]
    fn reflect_lands_in_range_and_is_identity_inside(v in -1e6f64..1e6) {
        let r = reflect(v);
        prop_assert!((-1.0..=1.0).contains(&r));
        if (-1.0..=1.0).contains(&v) {
            prop_assert_eq!(r, v);
        }
        // Reflection has period four.
        prop_assert!((reflect(v + 4.0) - r).abs() < 1e-6);
    }

    #[test]
    fn dataset_generation_is_a_function_of_seed(seed in any::<u64>(), task in 0usize..3) {
        let kind = TaskKind::ALL[task];
        let a = fill_cache(kind, 50, &mut Rng::new(seed, 2)).unwrap();
        let b = fill_cache(kind, 50, &mut Rng::new(seed, 2)).unwrap();
        prop_assert_eq!(format_dataset(&a), format_dataset(&b));
    }
}

#[test]
fn runs_are_deterministic_per_seed() {
    let mut c = RunConfig::default();
    c.epochs = 40;
    c.cache_size = 300;
    let a = run(&c, 11).unwrap().log;
    let b = run(&c, 11).unwrap().log;
    let other = run(&c, 12).unwrap().log;
    assert_eq!(a.checksum(), b.checksum());
    assert_ne!(a.checksum(), other.checksum());
}
