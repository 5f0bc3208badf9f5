use std::path::Path;

use proptest::prelude::*;
use thtn::error::Error;
use thtn::io::{self, Checkpoint, HypergraphFile};
use thtn::synthetic::{random_graph, twelve_node_graph};
use thtn_core::linalg::Matrix;
use thtn_core::model::{Model, ModelConfig};
use thtn_core::rng::seeded;
use thtn_core::{Graph, Hypergraph};

fn parse(text: &str) -> thtn::Result<io::LoadedGraph> {
    io::parse_graph(text, Path::new("g.tsv"))
}

fn line_of(err: Error) -> usize {
    match err {
        Error::Parse { line, .. } => line,
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn duplicate_edge_reports_its_line() {
    let err = parse("0\t1\n1\t2\n# comment\n2\t1\n").unwrap_err();
    let msg = err.to_string();
    assert_eq!(line_of(err), 4, "{msg}");
    assert!(msg.contains("first on line 2"), "{msg}");
}

#[test]
fn self_loop_reports_its_line() {
    assert_eq!(line_of(parse("0\t1\n\n3\t3\n").unwrap_err()), 3);
}

#[test]
fn malformed_lines_are_rejected() {
    assert_eq!(line_of(parse("0\t1\n0\n").unwrap_err()), 2);
    assert_eq!(line_of(parse("0\t1\tx\n").unwrap_err()), 1);
    assert_eq!(line_of(parse("0\t1\t-1\n").unwrap_err()), 1);
}

#[test]
fn sparse_ids_are_remapped_in_numeric_order() {
    let g = parse("10\t2\n2\t7\n").unwrap();
    assert_eq!(g.id_map.as_deref(), Some(&["2".to_string(), "7".into(), "10".into()][..]));
    assert!(g.graph.has_edge(0, 2) && g.graph.has_edge(0, 1));
    let named = parse("b\ta\nc\ta\n").unwrap();
    assert_eq!(named.id_map.as_deref(), Some(&["a".to_string(), "b".into(), "c".into()][..]));
    assert_eq!(named.resolver().resolve("c"), Some(2));
}

#[test]
fn node_directive_keeps_isolated_nodes() {
    let g = parse("# nodes\t5\n0\t1\n").unwrap();
    assert_eq!(g.graph.num_nodes(), 5);
    assert!(g.id_map.is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_round_trip_is_byte_identical(n in 1usize..30, p in 0.0f64..1.0, seed in 0u64..10_000) {
        let graph = random_graph(n, p, seed);
        let text = io::format_graph(&graph);
        let back = parse(&text).unwrap();
        prop_assert!(back.id_map.is_none());
        prop_assert_eq!(&back.graph, &graph);
        prop_assert_eq!(io::format_graph(&back.graph), text);
    }

    #[test]
    fn remapping_preserves_the_graph(n in 2usize..20, p in 0.1f64..1.0, seed in 0u64..10_000, offset in 1usize..50) {
        let graph = random_graph(n, p, seed);
        prop_assume!(graph.num_edges() > 0);
        // relabel every id v as offset + 3v and list edges back to front
        let mut text = String::new();
        for e in graph.edges().iter().rev() {
            text.push_str(&format!("{}\t{}\n", offset + 3 * e.v, offset + 3 * e.u));
        }
        let loaded = parse(&text).unwrap();
        let map = loaded.id_map.clone().unwrap();
        let original: Vec<usize> = map.iter().map(|s| (s.parse::<usize>().unwrap() - offset) / 3).collect();
        prop_assert_eq!(loaded.graph.num_edges(), graph.num_edges());
        for e in loaded.graph.edges() {
            prop_assert!(graph.has_edge(original[e.u], original[e.v]));
        }
    }
}

#[test]
fn hypergraph_file_round_trip() {
    let (graph, communities) = twelve_node_graph();
    let h = Hypergraph::from_parts(&graph, communities, vec![4, 9]).unwrap();
    let text = io::format_hypergraph(&h);
    let file: HypergraphFile = serde_json::from_str(&text).unwrap();
    let back = file.to_hypergraph(&graph).unwrap();
    assert_eq!(back.hyperedges(), h.hyperedges());
    assert_eq!(back.communities(), h.communities());
    assert_eq!(back.global_nodes(), h.global_nodes());
    assert_eq!(io::format_hypergraph(&back), text);
}

#[test]
fn features_labels_and_eigenvectors_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let f = Matrix::from_vec(3, 2, vec![0.1, -2.5, 1e-300, 3.0, 0.0, 7.25]).unwrap();
    let fp = dir.path().join("f.csv");
    io::write_text(&fp, &io::format_features(&f)).unwrap();
    assert_eq!(io::load_features(&fp, 3).unwrap(), f);
    assert!(io::load_features(&fp, 4).is_err());

    let lp = dir.path().join("l.tsv");
    io::write_text(&lp, &io::format_labels(&[2, 0, 1])).unwrap();
    let ids = io::NodeIds::dense(3);
    assert_eq!(io::load_labels(&lp, &ids).unwrap(), vec![2, 0, 1]);

    let h = Hypergraph::from_hyperedges(3, vec![vec![0, 1], vec![1, 2]]).unwrap();
    let eig = thtn_core::spectral::laplacian_eigenvectors(&thtn_core::spectral::hypergraph_laplacian(&h), 3).unwrap();
    let ep = dir.path().join("ev.csv");
    io::write_text(&ep, &io::format_eigenvectors(&eig)).unwrap();
    let back = io::load_eigenvectors(&ep, 3).unwrap();
    assert_eq!(back.values, eig.values);
    assert_eq!(back.vectors, eig.vectors);
}

#[test]
fn checkpoint_round_trip_restores_parameters() {
    let config = ModelConfig { d: 8, heads: 2, ..ModelConfig::default() };
    let model = Model::new(config, 5, 3, 4, 2).unwrap();
    let params = model.init_params(&mut seeded(9));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");
    io::save_checkpoint(&path, &Checkpoint::new(&model, &params)).unwrap();
    let ck = io::load_checkpoint(&path).unwrap();
    assert_eq!(ck.model().unwrap().config, model.config);
    assert_eq!(ck.params().unwrap(), params);

    let mut value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    value["version"] = 99.into();
    std::fs::write(&path, value.to_string()).unwrap();
    assert!(io::load_checkpoint(&path).is_err());
}

#[test]
fn empty_graph_text_gives_empty_graph() {
    let g = parse("# only a comment\n").unwrap();
    assert_eq!(g.graph, Graph::empty(0));
}
