#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;

use stratgraph::datasets::{generate_synthetic, load_bundle, save_bundle};
use stratgraph::exact::BUDGET;
use stratgraph::experiments::movement_metrics;
use stratgraph::graph::{scores, sign, EmbeddingWeights, Labels, LinearGraphClassifier, NodeFeatures};
use stratgraph::smooth::{stacked_forward, SmoothConfig};
use stratgraph::train::logistic_loss;
use stratgraph::{simulate_dynamics, ResponseConfig};

#[derive(Debug, Clone)]
struct Instance {
    x: NodeFeatures,
    w: EmbeddingWeights,
    clf: LinearGraphClassifier,
    beta: f64,
}

fn instance() -> impl Strategy<Value = Instance> {
    (1usize..8, 1usize..4).prop_flat_map(|(n, dim)| {
        (
            prop::collection::vec(-3.0f64..3.0, n * dim),
            prop::collection::vec(0.1f64..1.0, n),
            prop::collection::vec(prop::option::weighted(0.4, 0.05f64..1.0), n * n),
            prop::collection::vec(prop_oneof![-2.0f64..-0.2, 0.2f64..2.0], dim),
            -2.0f64..2.0,
            0.2f64..3.0,
        )
            .prop_map(move |(data, selfw, offdiag, theta, bias, beta)| {
                let mut entries: Vec<(usize, usize, f64)> = selfw.iter().enumerate().map(|(i, &v)| (i, i, v)).collect();
                for (k, v) in offdiag.into_iter().enumerate() {
                    let (j, i) = (k / n, k % n);
                    if let (Some(v), true) = (v, i != j) {
                        entries.push((j, i, v));
                    }
                }
                Instance {
                    x: NodeFeatures::new(n, dim, data).unwrap(),
                    w: EmbeddingWeights::from_entries(n, entries).unwrap(),
                    clf: LinearGraphClassifier::new(theta, bias),
                    beta,
                }
            })
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn dynamics_are_monotone_and_budgeted(inst in instance()) {
        let r = ResponseConfig::new(inst.beta).unwrap();
        let trace = simulate_dynamics(&inst.clf, &inst.x, &inst.w, &r).unwrap();
        let n = inst.x.n();
        prop_assert!(trace.rounds() <= n);
        let preds = trace.predictions_by_round();
        let all_scores = trace.scores_by_round();
        for t in 1..preds.len() {
            for i in 0..n {
                prop_assert!(preds[t].get(i) >= preds[t - 1].get(i), "prediction fell");
                prop_assert!(all_scores[t][i] >= all_scores[t - 1][i] - 1e-9, "score fell");
            }
        }
        let fin = trace.final_features();
        for i in 0..n {
            let d = distance(fin.row(i), inst.x.row(i));
            match trace.moved_round(i) {
                Some(_) => {
                    prop_assert!(r.cost(d) <= BUDGET + 1e-8);
                    prop_assert!(trace.final_predictions().get(i) == 1);
                }
                None => prop_assert_eq!(d, 0.0),
            }
        }
        prop_assert!(trace.moves_per_round().iter().all(|&c| c > 0));
    }

    #[test]
    fn converged_state_is_stable(inst in instance()) {
        let r = ResponseConfig::new(inst.beta).unwrap();
        let trace = simulate_dynamics(&inst.clf, &inst.x, &inst.w, &r).unwrap();
        let again = simulate_dynamics(&inst.clf, &inst.x, &inst.w, &r).unwrap();
        prop_assert_eq!(trace.final_features(), again.final_features());
        // no unmoved negative node can afford to cross from the final state
        let fin = trace.final_features();
        let s = scores(&inst.clf, &fin, &inst.w).unwrap();
        let norm = inst.clf.norm_sq().sqrt();
        for i in 0..inst.x.n() {
            if trace.moved_round(i).is_none() && s[i] < 0.0 {
                let need = (r.tol - s[i]) / (inst.w.self_weight(i) * norm);
                prop_assert!(r.cost(need) > BUDGET - 1e-6);
            }
        }
    }

    #[test]
    fn metrics_are_fractions(inst in instance(), seed in 0u64..1000) {
        let r = ResponseConfig::new(inst.beta).unwrap();
        let trace = simulate_dynamics(&inst.clf, &inst.x, &inst.w, &r).unwrap();
        let n = inst.x.n();
        let y = Labels::new((0..n).map(|i| if (seed >> (i % 60)) & 1 == 1 { 1 } else { -1 }).collect()).unwrap();
        let eval: Vec<usize> = (0..n).collect();
        let m = movement_metrics(&trace, &y, &eval);
        for f in [m.moved_fraction, m.crossed_fraction, m.moved_fraction_pos, m.moved_fraction_neg,
                  m.crossed_fraction_pos, m.crossed_fraction_neg, m.gain_from_positive, m.harm_from_negative] {
            prop_assert!((0.0..=1.0).contains(&f));
        }
        let static_acc = (0..n).filter(|&i| trace.initial_predictions().get(i) == y.get(i)).count() as f64 / n as f64;
        let strat_acc = (0..n).filter(|&i| trace.final_predictions().get(i) == y.get(i)).count() as f64 / n as f64;
        prop_assert!((strat_acc - static_acc - (m.gain_from_positive - m.harm_from_negative)).abs() < 1e-12);
    }

    #[test]
    fn soft_layers_never_lower_scores(inst in instance(), layers in 0usize..4, tau in 0.01f64..1.0) {
        let cfg = SmoothConfig { tau, layers, tol: 1e-6, beta: inst.beta, freeze_immobile: false };
        let rec = stacked_forward(&inst.clf, &inst.x, &inst.w, &cfg).unwrap();
        let s0 = scores(&inst.clf, &inst.x, &inst.w).unwrap();
        for (i, (&a, &b)) in s0.iter().zip(rec.scores()).enumerate() {
            prop_assert!(b >= a - 1e-9, "node {} score fell", i);
            prop_assert!(rec.features().row(i).iter().all(|v| v.is_finite()));
        }
        if layers == 0 {
            prop_assert_eq!(rec.scores(), &s0[..]);
        }
    }

    #[test]
    fn infinite_cost_freezes_everyone(inst in instance(), layers in 1usize..4) {
        let r = ResponseConfig::from_max_distance(0.0).unwrap();
        let trace = simulate_dynamics(&inst.clf, &inst.x, &inst.w, &r).unwrap();
        prop_assert_eq!(trace.rounds(), 0);
        let cfg = SmoothConfig { tau: 0.05, layers, tol: 1e-6, beta: r.beta, freeze_immobile: false };
        let rec = stacked_forward(&inst.clf, &inst.x, &inst.w, &cfg).unwrap();
        prop_assert_eq!(rec.features(), &inst.x);
    }

    #[test]
    fn logistic_loss_is_nonnegative_with_bounded_gradient(
        s in prop::collection::vec(-50.0f64..50.0, 1..20),
        seed in 0u64..u64::MAX,
    ) {
        let y: Vec<i8> = (0..s.len()).map(|i| if (seed >> (i % 64)) & 1 == 1 { 1 } else { -1 }).collect();
        let (loss, grad) = logistic_loss(&s, &y).unwrap();
        prop_assert!(loss >= 0.0 && loss.is_finite());
        let bound = 1.0 / s.len() as f64 + 1e-15;
        prop_assert!(grad.iter().all(|g| g.abs() <= bound));
    }

    #[test]
    fn sign_is_positive_at_zero(v in -10.0f64..10.0) {
        prop_assert_eq!(sign(v), if v >= 0.0 { 1 } else { -1 });
        prop_assert_eq!(sign(0.0), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn bundles_round_trip(half in (8usize..20).prop_map(|h| 2 * h), alpha in 0.0f64..1.0, seed in 0u64..1000) {
        let b = generate_synthetic(half, alpha, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_bundle(&b, dir.path()).unwrap();
        let back = load_bundle(dir.path()).unwrap();
        prop_assert_eq!(&back, &b);
        prop_assert_eq!(back.weights().unwrap(), b.weights().unwrap());
    }
}
