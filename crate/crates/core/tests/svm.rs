mod common;

use egosenti::datamodel::{FeatureLayout, SentimentLabel};
use egosenti::svm::{
    dual_objective, kkt_violation, predict_label, primal_from_dual, train_binary, train_multiclass,
    BinaryProblem, ClassWeights, TrainConfig,
};
use egosenti::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use SentimentLabel::*;

fn problem(f: &common::Fixture) -> BinaryProblem<'_> {
    BinaryProblem::new(
        f.xs.iter().map(|x| x.as_slice()).collect(),
        f.ys.clone(),
        f.costs.clone(),
    )
    .unwrap()
}

fn tight() -> TrainConfig {
    TrainConfig {
        tolerance: 1e-8,
        max_epochs: 1_000_000,
        ..TrainConfig::default()
    }
}

#[test]
fn matches_qp_oracle_on_small_fixtures() {
    for (k, f) in common::small_fixtures(40, 11).iter().enumerate() {
        let sol = train_binary(&problem(f), &TrainConfig::default()).unwrap();
        let oracle = common::qp_oracle(&f.xs, &f.ys, &f.costs, 1.0, 1e-8);
        for (j, (a, b)) in sol.weights.iter().zip(&oracle).enumerate() {
            assert!((a - b).abs() < 1e-3, "fixture {k} coord {j}: {a} vs {b}");
        }
    }
}

#[test]
fn matches_oracle_with_other_bias_scales() {
    for bias_scale in [0.5, 2.0, 10.0] {
        for f in common::small_fixtures(8, 12) {
            // large B makes the dual ill-conditioned, so solve tightly
            let cfg = TrainConfig {
                bias_scale,
                ..tight()
            };
            let sol = train_binary(&problem(&f), &cfg).unwrap();
            let oracle = common::qp_oracle(&f.xs, &f.ys, &f.costs, bias_scale, 1e-8);
            for (a, b) in sol.weights.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-3, "B={bias_scale}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn primal_stays_consistent_with_dual() {
    for f in common::small_fixtures(20, 13) {
        let p = problem(&f);
        let sol = train_binary(&p, &TrainConfig::default()).unwrap();
        let w = primal_from_dual(&p, &sol.dual, 1.0);
        for (a, b) in sol.weights.iter().zip(&w) {
            assert!((a - b).abs() < 1e-6);
        }
        let obj = dual_objective(&sol.dual, &w);
        assert!((obj - sol.objective_trace.last().unwrap()).abs() < 1e-6);
        assert!((kkt_violation(&p, &sol.dual, 1.0) - sol.kkt_violation).abs() < 1e-12);
    }
}

#[test]
fn sample_order_does_not_matter_at_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for f in common::small_fixtures(15, 14) {
        let a = train_binary(&problem(&f), &tight()).unwrap();
        let mut perm: Vec<usize> = (0..f.xs.len()).collect();
        perm.shuffle(&mut rng);
        let g = common::Fixture {
            xs: perm.iter().map(|&i| f.xs[i].clone()).collect(),
            ys: perm.iter().map(|&i| f.ys[i]).collect(),
            costs: perm.iter().map(|&i| f.costs[i]).collect(),
        };
        let b = train_binary(&problem(&g), &tight()).unwrap();
        for (x, y) in a.weights.iter().zip(&b.weights) {
            assert!((x - y).abs() < 1e-3, "{x} vs {y}");
        }
    }
}

#[test]
fn same_seed_is_bitwise_reproducible() {
    for f in common::small_fixtures(10, 15) {
        let cfg = TrainConfig {
            seed: 99,
            ..TrainConfig::default()
        };
        let a = train_binary(&problem(&f), &cfg).unwrap();
        let b = train_binary(&problem(&f), &cfg).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn tighter_tolerance_reduces_violation() {
    for f in common::small_fixtures(10, 16) {
        for tol in [1e-1, 1e-3, 1e-5, 1e-7] {
            let cfg = TrainConfig {
                tolerance: tol,
                max_epochs: 1_000_000,
                ..TrainConfig::default()
            };
            let sol = train_binary(&problem(&f), &cfg).unwrap();
            assert!(sol.converged);
            assert!(
                sol.kkt_violation < 10.0 * tol,
                "{} at tol {tol}",
                sol.kkt_violation
            );
        }
    }
}

#[test]
fn budget_exhaustion_is_reported_not_fatal() {
    let f = &common::small_fixtures(1, 17)[0];
    let cfg = TrainConfig {
        tolerance: 1e-12,
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let sol = train_binary(&problem(f), &cfg).unwrap();
    assert_eq!(sol.epochs, 1);
    assert_eq!(sol.objective_trace.len(), 2);
}

fn orthogonal_clusters(per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<SentimentLabel>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::new();
    let mut labels = Vec::new();
    for (k, label) in SentimentLabel::ALL.into_iter().enumerate() {
        for _ in 0..per_class {
            let mut x: Vec<f64> = (0..4).map(|_| rng.random_range(-0.1..0.1)).collect();
            x[k] += 1.0;
            xs.push(x);
            labels.push(label);
        }
    }
    (xs, labels)
}

#[test]
fn separable_orthogonal_clusters_fit_perfectly() {
    let (xs, labels) = orthogonal_clusters(30, 18);
    let layout = FeatureLayout { cnn: 2, anp: 2 };
    let model = train_multiclass(&xs, &labels, layout, &TrainConfig::default()).unwrap();
    for (x, &label) in xs.iter().zip(&labels) {
        assert_eq!(predict_label(&model, x).unwrap(), label);
    }
    assert!(model.diagnostics.iter().all(|d| d.converged));
}

#[test]
fn class_weights_are_recorded() {
    let (xs, mut labels) = orthogonal_clusters(10, 19);
    labels.truncate(25);
    let xs = &xs[..25];
    let layout = FeatureLayout { cnn: 2, anp: 2 };
    let model = train_multiclass(xs, &labels, layout, &TrainConfig::default()).unwrap();
    // 10 positive, 10 neutral, 5 negative
    let w = &model.hyperparams.class_weights;
    assert!((w[0] - 25.0 / 30.0).abs() < 1e-12);
    assert!((w[1] - 25.0 / 30.0).abs() < 1e-12);
    assert!((w[2] - 25.0 / 15.0).abs() < 1e-12);
    assert_eq!(model.hyperparams.class_weight_mode, "auto");

    let manual = TrainConfig {
        class_weights: ClassWeights::Manual([1.0, 2.0, 3.0]),
        ..TrainConfig::default()
    };
    let model = train_multiclass(xs, &labels, layout, &manual).unwrap();
    assert_eq!(model.hyperparams.class_weights, vec![1.0, 2.0, 3.0]);
}

#[test]
fn missing_class_is_rejected() {
    let xs = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
    let labels = vec![Positive, Neutral];
    let err = train_multiclass(
        &xs,
        &labels,
        FeatureLayout { cnn: 1, anp: 1 },
        &TrainConfig::default(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        Error::MissingClass {
            label: Negative,
            fold: None
        }
    ));
}

#[test]
fn invalid_hyperparameters_are_rejected() {
    let (xs, labels) = orthogonal_clusters(3, 20);
    let layout = FeatureLayout { cnn: 2, anp: 2 };
    for bad in [
        TrainConfig {
            c: 0.0,
            ..TrainConfig::default()
        },
        TrainConfig {
            c: -1.0,
            ..TrainConfig::default()
        },
        TrainConfig {
            tolerance: 0.0,
            ..TrainConfig::default()
        },
        TrainConfig {
            max_epochs: 0,
            ..TrainConfig::default()
        },
        TrainConfig {
            class_weights: ClassWeights::Manual([1.0, 0.0, 1.0]),
            ..TrainConfig::default()
        },
    ] {
        assert!(matches!(
            train_multiclass(&xs, &labels, layout, &bad),
            Err(Error::InvalidParameter(_))
        ));
    }
}
