use std::collections::BTreeMap;

use proptest::prelude::*;
use thtn_core::community::{detect_communities, CommunityCover};
use thtn_core::graph::community_subgraph;
use thtn_core::hypergraph::{build_hypergraph, Hypergraph};
use thtn_core::linalg::Matrix;
use thtn_core::measures::{assemble_bias, closeness_centrality, uniqueness_scores, ClosenessMode};
use thtn_core::model::{Model, ModelConfig, ModelInputs};
use thtn_core::rng::seeded;
use thtn_core::spectral::{hypergraph_laplacian, laplacian_eigenvectors};
use thtn_core::split::{Split, SplitMask};
use thtn_core::train::{train, TrainConfig};
use thtn_core::Graph;

fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = Graph> {
    (1..=max_nodes).prop_flat_map(|n| {
        proptest::collection::vec((0..n, 0..n), 0..3 * n).prop_map(move |pairs| {
            let mut edges: Vec<(usize, usize)> = pairs
                .into_iter()
                .filter(|(u, v)| u != v)
                .map(|(u, v)| (u.min(v), u.max(v)))
                .collect();
            edges.sort_unstable();
            edges.dedup();
            Graph::from_unweighted(n, edges).unwrap()
        })
    })
}

fn hyperedges_strategy() -> impl Strategy<Value = (usize, Vec<Vec<usize>>)> {
    (2usize..30).prop_flat_map(|m| {
        let edge = proptest::collection::btree_set(0..m, 1..=m.min(6))
            .prop_map(|s| s.into_iter().collect::<Vec<_>>());
        (Just(m), proptest::collection::vec(edge, 1..10))
    })
}

fn covered(graph: &Graph, n_g: usize) -> Hypergraph {
    let cover = detect_communities(graph, "greedy", &BTreeMap::new())
        .unwrap()
        .covering(graph.num_nodes())
        .unwrap();
    build_hypergraph(graph, &cover, n_g).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn construction_covers_nodes_and_injects_globals(graph in graph_strategy(20), n_g in 0usize..3) {
        let m = graph.num_nodes();
        let n_g = n_g.min(m);
        let h = covered(&graph, n_g);
        prop_assert_eq!(h.global_nodes().len(), n_g);
        let mut seen = vec![false; m];
        for (j, e) in h.hyperedges().iter().enumerate() {
            for &g in h.global_nodes() {
                prop_assert!(e.contains(&g));
            }
            for &c in &h.communities()[j] {
                prop_assert!(e.contains(&c));
            }
            for &i in e {
                seen[i] = true;
            }
        }
        prop_assert!(seen.iter().all(|&s| s));
        let dense = h.incidence_dense();
        for inc in h.incidence() {
            prop_assert_eq!(dense[inc.node][inc.edge], 1);
            prop_assert_eq!(inc.injected, h.communities()[inc.edge].binary_search(&inc.node).is_err());
        }
        let total: usize = h.hyperedges().iter().map(Vec::len).sum();
        prop_assert_eq!(total, h.incidence().len());
    }

    #[test]
    fn subgraph_of_subgraph_is_itself(graph in graph_strategy(20)) {
        let h = covered(&graph, 0);
        for sub in h.subgraphs() {
            let all: Vec<usize> = (0..sub.graph.num_nodes()).collect();
            let again = community_subgraph(&sub.graph, &all).unwrap();
            prop_assert_eq!(&again.graph, &sub.graph);
            for (l, &g) in sub.global_ids.iter().enumerate() {
                prop_assert_eq!(sub.local_id(g), Some(l));
            }
        }
    }

    #[test]
    fn laplacian_quadratic_form((m, edges) in hyperedges_strategy(), seed in 0u64..1000) {
        let h = Hypergraph::from_hyperedges(m, edges.clone()).unwrap();
        let l = hypergraph_laplacian(&h).to_dense();
        let mut rng = seeded(seed);
        use rand::Rng;
        let x: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut quad = 0.0;
        for i in 0..m {
            for k in 0..m {
                quad += x[i] * l[(i, k)] * x[k];
            }
        }
        // sum over hyperedges and member pairs of (x_i - x_k)^2
        let mut expected = 0.0;
        for e in h.hyperedges() {
            for (a, &i) in e.iter().enumerate() {
                for &k in &e[a + 1..] {
                    expected += (x[i] - x[k]).powi(2);
                }
            }
        }
        prop_assert!((quad - expected).abs() <= 1e-9 * (1.0 + expected.abs()));
        for i in 0..m {
            let row: f64 = (0..m).map(|k| l[(i, k)]).sum();
            prop_assert!(row.abs() <= 1e-12);
        }
    }

    #[test]
    fn eigenvectors_follow_sign_convention((m, edges) in hyperedges_strategy(), k in 1usize..10) {
        let h = Hypergraph::from_hyperedges(m, edges).unwrap();
        let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), k).unwrap();
        prop_assert_eq!(eig.vectors.cols(), k);
        for w in eig.values.windows(2) {
            prop_assert!(w[0] <= w[1]);
        }
        for c in 0..k {
            let first = (0..m).map(|r| eig.vectors[(r, c)]).find(|v| v.abs() > 1e-12);
            if let Some(v) = first {
                prop_assert!(v > 0.0);
            }
        }
    }

    #[test]
    fn closeness_lies_in_unit_interval(graph in graph_strategy(25)) {
        for mode in [ClosenessMode::Hops, ClosenessMode::Weighted] {
            for c in closeness_centrality(&graph, mode) {
                prop_assert!((0.0..=1.0).contains(&c));
            }
        }
    }
}

#[test]
fn disjoint_pairs_give_two_zero_eigenvalues() {
    let h = Hypergraph::from_hyperedges(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
    let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), 4).unwrap();
    let zeros = eig.values.iter().filter(|v| v.abs() <= 1e-9).count();
    assert_eq!(zeros, 2);
    assert!((eig.values[2] - 2.0).abs() < 1e-12 && (eig.values[3] - 2.0).abs() < 1e-12);
}

#[test]
fn fewer_nodes_than_k_pads_with_zero_columns() {
    let h = Hypergraph::from_hyperedges(2, vec![vec![0, 1]]).unwrap();
    let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), 5).unwrap();
    assert_eq!(eig.vectors.cols(), 5);
    for c in 2..5 {
        assert!((0..2).all(|r| eig.vectors[(r, c)] == 0.0));
    }
}

fn path_instance() -> (Model, ModelInputs, Vec<usize>, SplitMask) {
    let n = 10;
    let graph = Graph::from_unweighted(n, (0..n - 1).map(|i| (i, i + 1))).unwrap();
    let communities = vec![(0..5).collect(), (5..10).collect()];
    let h = Hypergraph::from_parts(&graph, communities, vec![4]).unwrap();
    let cover = CommunityCover::new(h.communities().to_vec()).unwrap();
    let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), 3).unwrap();
    let inputs = ModelInputs::new(
        &graph,
        Matrix::identity(n),
        &h,
        assemble_bias(&h, false),
        closeness_centrality(&graph, ClosenessMode::Hops),
        uniqueness_scores(&cover, n).unwrap(),
        eig.vectors,
    )
    .unwrap();
    let config = ModelConfig {
        d: 8,
        heads: 2,
        ..ModelConfig::default()
    };
    let model = Model::new(config, n, 2, 2, 3).unwrap();
    let labels = (0..n).map(|i| usize::from(i >= 5)).collect();
    let split = SplitMask(
        (0..n)
            .map(|i| match i % 5 {
                0 | 1 | 2 => Split::Train,
                3 => Split::Val,
                _ => Split::Test,
            })
            .collect(),
    );
    (model, inputs, labels, split)
}

#[test]
fn early_stopping_fires_exactly_at_patience() {
    let (model, inputs, labels, split) = path_instance();
    let mut early = 0;
    for patience in [1, 3, 7] {
        let config = TrainConfig {
            epochs: 300,
            patience,
            ..TrainConfig::default()
        };
        let params = model.init_params(&mut seeded(1));
        let out = train(&model, params, &inputs, &labels, &split, &config, 2).unwrap();
        // replay the stopping rule over the recorded history
        let mut best = (0, f64::NEG_INFINITY);
        let mut stop = None;
        for r in &out.history {
            if r.val_acc > best.1 {
                best = (r.epoch, r.val_acc);
            } else if r.epoch - best.0 >= patience {
                stop = Some(r.epoch);
                break;
            }
        }
        assert_eq!(out.best_epoch, best.0);
        assert_eq!(out.stopped_early, stop.is_some());
        let last = out.history.last().unwrap().epoch;
        match stop {
            Some(s) => assert_eq!(last, s),
            None => assert_eq!(last, 300),
        }
        early += usize::from(out.stopped_early);
    }
    assert!(early > 0);
}

#[test]
fn training_is_deterministic() {
    let (model, inputs, labels, split) = path_instance();
    let config = TrainConfig {
        epochs: 30,
        ..TrainConfig::default()
    };
    let run = || {
        let params = model.init_params(&mut seeded(5));
        train(&model, params, &inputs, &labels, &split, &config, 6).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.history, b.history);
    assert_eq!(a.test_acc, b.test_acc);
    assert_eq!(a.best_params, b.best_params);
}
