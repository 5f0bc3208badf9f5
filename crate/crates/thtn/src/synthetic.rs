//! Seeded toy datasets.

use std::path::Path;

use thtn_core::linalg::Matrix;
use thtn_core::rng::{seeded, RngExt};
use thtn_core::split::{Split, SplitMask};
use thtn_core::{Graph, Hypergraph};

use crate::config::RunConfig;
use crate::error::Result;
use crate::io::{format_features, format_graph, format_labels, write_text};

#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub features: Matrix,
    pub labels: Vec<usize>,
}

impl Dataset {
    /// Writes `graph.tsv`, `features.csv` and `labels.tsv` under `dir` and
    /// returns a config pointing at them.
    pub fn write(&self, dir: &Path) -> Result<RunConfig> {
        let graph = dir.join("graph.tsv");
        let features = dir.join("features.csv");
        let labels = dir.join("labels.tsv");
        write_text(&graph, &format_graph(&self.graph))?;
        write_text(&features, &format_features(&self.features))?;
        write_text(&labels, &format_labels(&self.labels))?;
        Ok(RunConfig {
            graph: Some(graph),
            features: Some(features),
            labels: Some(labels),
            ..RunConfig::default()
        })
    }
}

/// Erdos-Renyi `G(n, p)`.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_unweighted(n, edges).expect("simple graph")
}

/// Random hyperedges of size 1..=`max_size` over `m` nodes. Some nodes may
/// be left uncovered.
pub fn random_hypergraph(m: usize, edges: usize, max_size: usize, seed: u64) -> Hypergraph {
    let mut rng = seeded(seed);
    let hyperedges = (0..edges)
        .map(|_| {
            let size = rng.gen_range(1..=max_size.min(m));
            let mut e: Vec<usize> = (0..size).map(|_| rng.gen_range(0..m)).collect();
            e.sort_unstable();
            e.dedup();
            e
        })
        .collect();
    Hypergraph::from_hyperedges(m, hyperedges).expect("valid hyperedges")
}

/// Planted partition: `classes` equal blocks, edge probability `p_in`
/// inside a block and `p_out` across. Features are a per-class Gaussian
/// centroid plus unit Gaussian noise scaled by `noise`.
pub fn planted_partition(
    n: usize,
    classes: usize,
    p_in: f64,
    p_out: f64,
    dim: usize,
    noise: f64,
    seed: u64,
) -> Dataset {
    let mut rng = seeded(seed);
    let labels: Vec<usize> = (0..n).map(|i| i * classes / n).collect();
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            let p = if labels[u] == labels[v] { p_in } else { p_out };
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    let graph = Graph::from_unweighted(n, edges).expect("simple graph");
    let centroids: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| gaussian(&mut rng)).collect())
        .collect();
    let mut data = Vec::with_capacity(n * dim);
    for &c in &labels {
        for x in &centroids[c] {
            data.push(x + noise * gaussian(&mut rng));
        }
    }
    Dataset {
        graph,
        features: Matrix::from_vec(n, dim, data).expect("sized"),
        labels,
    }
}

/// Standard normal draw by Box-Muller.
fn gaussian(rng: &mut thtn_core::rng::Rng) -> f64 {
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Twelve nodes in four overlapping cliques with two bridges.
pub fn twelve_node_graph() -> (Graph, Vec<Vec<usize>>) {
    let communities = vec![
        vec![0, 1, 2, 3],
        vec![3, 4, 5, 6],
        vec![6, 7, 8],
        vec![8, 9, 10, 11],
    ];
    let mut edges = vec![(1, 10), (2, 7)];
    for c in &communities {
        for (a, &u) in c.iter().enumerate() {
            for &v in &c[a + 1..] {
                edges.push((u, v));
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    (Graph::from_unweighted(12, edges).expect("simple graph"), communities)
}

/// Two bridged 6-cliques (classes 0 and 1) plus four isolated test nodes
/// of class 0 with all-zero features. The isolated nodes sit alone in their
/// hyperedges, so only a global node can carry information to them; the
/// closeness tie between the bridge ends picks node 0, in class 0.
pub fn connector_dataset() -> (Dataset, SplitMask) {
    let mut edges = vec![(0, 6)];
    for base in [0, 6] {
        for u in base..base + 6 {
            for v in u + 1..base + 6 {
                edges.push((u, v));
            }
        }
    }
    edges.sort_unstable();
    let graph = Graph::from_edges(16, edges.into_iter().map(|(u, v)| (u, v, 1.0))).expect("simple graph");
    let labels: Vec<usize> = (0..16).map(|i| usize::from((6..12).contains(&i))).collect();
    let mut features = Matrix::zeros(16, 2);
    for i in 0..12 {
        features[(i, labels[i])] = 1.0;
    }
    let split = SplitMask(
        (0..16)
            .map(|i| match i {
                12.. => Split::Test,
                5 | 11 => Split::Val,
                _ => Split::Train,
            })
            .collect(),
    );
    (Dataset { graph, features, labels }, split)
}
