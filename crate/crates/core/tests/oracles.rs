//! Library results checked against independent reference computations.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stratgraph::constructions::{cascade_graph, hitchhike_example};
use stratgraph::datasets::{generate_synthetic, make_inductive_split, DatasetBundle};
use stratgraph::experiments::{
    centrality_ablation, centrality_cut, evaluate, movement_metrics, run_sweep, Arm, CentralityOrdering,
    DatasetSpec, ExperimentConfig, Learner, SweepAxis, ThresholdGrid,
};
use stratgraph::graph::{build_sgc_weights, embed, DirectedGraph, Edge, LinearGraphClassifier, NodeFeatures};
use stratgraph::train::TrainConfig;
use stratgraph::{simulate_dynamics, ResponseConfig};

fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> DirectedGraph {
    let mut edges = Vec::new();
    for s in 0..n {
        for d in 0..n {
            if s != d && rng.gen_bool(p) {
                edges.push(Edge { src: s, dst: d, weight: rng.gen_range(0.5..2.0) });
            }
        }
    }
    DirectedGraph::new(n, edges).unwrap()
}

#[test]
fn sgc_weights_match_dense_matrix_powers() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..40 {
        let n = rng.gen_range(1..9);
        let g = random_graph(&mut rng, n, 0.3);
        let k = rng.gen_range(1..4);
        let loops = rng.gen_bool(0.5);
        // a[(i, j)]: weight of j -> i
        let mut a = DMatrix::<f64>::zeros(n, n);
        for e in g.edges() {
            a[(e.dst, e.src)] += e.weight;
        }
        if loops {
            a += DMatrix::identity(n, n);
        }
        let d: Vec<f64> = (0..n).map(|i| a.row(i).sum()).map(|s| if s > 0.0 { s } else { 1.0 }).collect();
        let d_inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, d.iter().map(|v| 1.0 / v.sqrt())));
        let dense = &d_inv_sqrt * a.pow(k as u32) * &d_inv_sqrt;
        let w = build_sgc_weights(&g, k, loops).unwrap();
        for i in 0..n {
            for j in 0..n {
                assert!((w.get(j, i) - dense[(i, j)]).abs() < 1e-12, "entry {j}->{i}");
            }
        }
    }
}

#[test]
fn embedding_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let g = random_graph(&mut rng, 7, 0.4);
    let w = build_sgc_weights(&g, 2, true).unwrap();
    let data: Vec<f64> = (0..14).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x = NodeFeatures::new(7, 2, data.clone()).unwrap();
    let dense_w = DMatrix::from_fn(7, 7, |i, j| w.get(j, i));
    let dense_x = DMatrix::from_row_slice(7, 2, &data);
    let want = dense_w * dense_x;
    let got = embed(&x, &w).unwrap();
    for i in 0..7 {
        for c in 0..2 {
            assert!((got.row(i)[c] - want[(i, c)]).abs() < 1e-12);
        }
    }
}

/// Nodes within `k` directed hops of any train node, found by repeated
/// frontier expansion over the edge list.
fn reachable_within(bundle: &DatasetBundle, k: usize) -> BTreeSet<usize> {
    let mut seen: BTreeSet<usize> = bundle.train_mask.iter().copied().collect();
    let mut frontier = seen.clone();
    for _ in 0..k {
        let next: BTreeSet<usize> = bundle
            .graph
            .edges()
            .iter()
            .filter(|e| frontier.contains(&e.src) && !seen.contains(&e.dst))
            .map(|e| e.dst)
            .collect();
        seen.extend(&next);
        frontier = next;
    }
    seen
}

#[test]
fn inductive_split_matches_hop_expansion() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut bundle = generate_synthetic(40, 0.5, 9).unwrap();
    let extra: Vec<Edge> = (0..30)
        .map(|_| Edge { src: rng.gen_range(0..80), dst: rng.gen_range(0..80), weight: 1.0 })
        .filter(|e| e.src != e.dst)
        .collect();
    let mut edges = bundle.graph.edges().to_vec();
    let mut present: BTreeSet<(usize, usize)> = edges.iter().map(|e| (e.src, e.dst)).collect();
    edges.extend(extra.into_iter().filter(|e| present.insert((e.src, e.dst))));
    bundle.graph = DirectedGraph::new(80, edges).unwrap();
    for k in 1..4 {
        let (split, frac) = make_inductive_split(&bundle, k).unwrap();
        let reach = reachable_within(&bundle, k);
        let want: Vec<usize> = bundle.test_mask.iter().copied().filter(|t| !reach.contains(t)).collect();
        assert_eq!(split.test_mask, want, "k = {k}");
        let removed = bundle.test_mask.len() - want.len();
        assert!((frac - removed as f64 / bundle.test_mask.len() as f64).abs() < 1e-15);
    }
}

#[test]
fn movement_metrics_match_recount_from_snapshots() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..30 {
        let bundle = generate_synthetic(20, rng.gen_range(0.0..1.0), rng.gen()).unwrap();
        let view = bundle.test_view().unwrap();
        let clf = LinearGraphClassifier::threshold(rng.gen_range(-0.5..1.5));
        let resp = ResponseConfig::from_max_distance(rng.gen_range(0.1..1.5)).unwrap();
        let trace = simulate_dynamics(&clf, &view.features, &view.weights, &resp).unwrap();
        let m = movement_metrics(&trace, &view.labels, &view.eval);

        // a node moved iff some snapshot differs from its predecessor
        let snaps = trace.features_by_round();
        let moved: Vec<bool> = (0..view.weights.n())
            .map(|i| snaps.windows(2).any(|p| p[0].row(i) != p[1].row(i)))
            .collect();
        let preds = trace.predictions_by_round();
        let crossed: Vec<bool> =
            (0..view.weights.n()).map(|i| preds[0].get(i) == -1 && preds.last().unwrap().get(i) == 1).collect();
        let count = |flags: &[bool], class: Option<i8>| {
            let pool: Vec<usize> =
                view.eval.iter().copied().filter(|&i| class.is_none_or(|c| view.labels.get(i) == c)).collect();
            let hits = pool.iter().filter(|&&i| flags[i]).count();
            if pool.is_empty() {
                0.0
            } else {
                hits as f64 / pool.len() as f64
            }
        };
        assert_eq!(m.moved_fraction, count(&moved, None));
        assert_eq!(m.crossed_fraction, count(&crossed, None));
        assert_eq!(m.moved_fraction_pos, count(&moved, Some(1)));
        assert_eq!(m.moved_fraction_neg, count(&moved, Some(-1)));
        assert_eq!(m.crossed_fraction_pos, count(&crossed, Some(1)));
        assert_eq!(m.crossed_fraction_neg, count(&crossed, Some(-1)));
        assert_eq!(m.moves_per_round.iter().sum::<usize>(), view.eval.iter().filter(|&&i| moved[i]).count());
        assert_eq!(m.rounds, snaps.len() - 1);
    }
}

#[test]
fn hitchhike_metrics() {
    let inst = hitchhike_example();
    let trace = inst.simulate().unwrap();
    let y = stratgraph::Labels::new(vec![1, 1, 1]).unwrap();
    let m = movement_metrics(&trace, &y, &[0, 1, 2]);
    assert_eq!(m.moved_fraction, 1.0 / 3.0);
    assert_eq!(m.crossed_fraction, 2.0 / 3.0);
    assert_eq!(trace.hitchhikers(), vec![1]);
}

#[test]
fn static_classifier_on_cascade_drops_to_zero() {
    let bundle = cascade_graph(3).unwrap().to_bundle().unwrap();
    let view = bundle.test_view().unwrap();
    let resp = bundle.meta.response.clone().unwrap();
    let clf = LinearGraphClassifier::threshold(0.0);
    assert_eq!(evaluate(&clf, &view, &resp, false).unwrap().accuracy, 1.0);
    assert_eq!(evaluate(&clf, &view, &resp, true).unwrap().accuracy, 0.0);
}

fn quick_train() -> TrainConfig {
    TrainConfig { epochs: 5, pretrain_epochs: 5, layers: 2, tau: 0.5, ..TrainConfig::default() }
}

#[test]
fn zero_distance_means_no_strategic_effect() {
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic { n: 40, alpha: 0.6 },
        arms: vec![Arm::Benchmark, Arm::Naive],
        axis: SweepAxis::MaxDistance,
        values: vec![0.0],
        train: quick_train(),
        seeds: vec![0, 1, 2],
        learner: Learner::LineSearch,
        threshold_grid: ThresholdGrid::default(),
    };
    let recs = run_sweep(&cfg).unwrap();
    for pair in recs.chunks(2) {
        assert_eq!(pair[0].metrics.accuracy, pair[1].metrics.accuracy);
        assert_eq!(pair[1].metrics.movement.moved_fraction, 0.0);
    }
}

#[test]
fn strategic_accuracy_decomposes_into_gain_and_harm() {
    let cfg = ExperimentConfig {
        dataset: DatasetSpec::Synthetic { n: 60, alpha: 0.7 },
        arms: vec![Arm::Benchmark, Arm::Naive],
        axis: SweepAxis::Alpha,
        values: vec![0.0, 0.5, 0.9],
        train: quick_train(),
        seeds: vec![0, 1],
        learner: Learner::LineSearch,
        threshold_grid: ThresholdGrid::default(),
    };
    let recs = run_sweep(&cfg).unwrap();
    for pair in recs.chunks(2) {
        let (bench, naive) = (&pair[0].metrics, &pair[1].metrics);
        let m = &naive.movement;
        let delta = naive.accuracy - bench.accuracy;
        assert!((delta - (m.gain_from_positive - m.harm_from_negative)).abs() < 1e-12);
        if m.crossed_fraction_neg > 0.0 && m.crossed_fraction_pos == 0.0 {
            assert!(naive.accuracy <= bench.accuracy);
        }
    }
}

#[test]
fn full_cut_reduces_embeddings_to_own_features() {
    let bundle = generate_synthetic(20, 0.8, 1).unwrap();
    let cut = centrality_cut(&bundle, 100.0, CentralityOrdering::OutDegree, 0);
    assert_eq!(cut.len(), bundle.n());
    let mut b = bundle.clone();
    b.graph = bundle.graph.without_out_edges(&cut);
    let w = b.weights().unwrap();
    let phi = embed(&b.features, &w).unwrap();
    assert_eq!(phi, b.features);
}

#[test]
fn zero_cut_equals_unablated_run() {
    let bundle = generate_synthetic(30, 0.7, 2).unwrap();
    let tc = quick_train();
    let rows = centrality_ablation(&bundle, &[0.0], CentralityOrdering::Random, &tc, Learner::LineSearch, &ThresholdGrid::default()).unwrap();
    let plain = stratgraph::experiments::run_arms(
        &bundle.train_view().unwrap(),
        &bundle.test_view().unwrap(),
        &Arm::ALL,
        &tc,
        Learner::LineSearch,
        &ThresholdGrid::default(),
    )
    .unwrap();
    assert_eq!(rows.len(), 3);
    for (r, (arm, _, m)) in rows.iter().zip(plain) {
        assert_eq!(r.arm, arm);
        assert_eq!(r.metrics, m);
        assert_eq!(r.disconnected, 0);
    }
}

#[test]
fn degree_ordering_cuts_hubs_first() {
    let g = DirectedGraph::from_pairs(5, &[(3, 0), (3, 1), (3, 2), (1, 0), (1, 2), (4, 0)]).unwrap();
    let mut bundle = generate_synthetic(16, 0.5, 0).unwrap();
    bundle.graph = DirectedGraph::new(32, g.edges().to_vec()).unwrap();
    assert_eq!(centrality_cut(&bundle, 100.0 * 2.0 / 32.0, CentralityOrdering::OutDegree, 0), vec![3, 1]);
}
