//! Weighted undirected simple graphs.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// An undirected edge stored with `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// Weighted undirected simple graph on dense node ids `0..num_nodes`.
///
/// Edges are kept sorted by `(u, v)` with `u < v`. Each adjacency list is
/// sorted by neighbor id and carries the edge weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    num_nodes: usize,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl Graph {
    /// Graph with `num_nodes` isolated nodes.
    pub fn empty(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            edges: Vec::new(),
            adjacency: vec![Vec::new(); num_nodes],
        }
    }

    /// Builds a graph from an edge list, rejecting self-loops, duplicate
    /// undirected edges, out-of-range ids and negative or non-finite weights.
    pub fn from_edges<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut seen = BTreeMap::new();
        for (a, b, w) in edges {
            for id in [a, b] {
                if id >= num_nodes {
                    return Err(Error::NodeOutOfRange { id, num_nodes });
                }
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidWeight { u: a, v: b, weight: w });
            }
            let key = (a.min(b), a.max(b));
            if seen.insert(key, w).is_some() {
                return Err(Error::DuplicateEdge(key.0, key.1));
            }
        }
        Ok(Self::from_canonical(num_nodes, seen))
    }

    /// Unit-weight convenience constructor.
    pub fn from_unweighted<I>(num_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        Self::from_edges(num_nodes, edges.into_iter().map(|(u, v)| (u, v, 1.0)))
    }

    fn from_canonical(num_nodes: usize, sorted: BTreeMap<(usize, usize), f64>) -> Self {
        let mut adjacency = vec![Vec::new(); num_nodes];
        let mut edges = Vec::with_capacity(sorted.len());
        for ((u, v), weight) in sorted {
            adjacency[u].push((v, weight));
            adjacency[v].push((u, weight));
            edges.push(Edge { u, v, weight });
        }
        for list in &mut adjacency {
            list.sort_by_key(|&(n, _)| n);
        }
        Self {
            num_nodes,
            edges,
            adjacency,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Neighbors of `v` with edge weights, sorted by neighbor id.
    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adjacency[v]
    }

    pub fn neighbor_ids(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency[v].iter().map(|&(n, _)| n)
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn weighted_degree(&self, v: usize) -> f64 {
        self.adjacency[v].iter().map(|&(_, w)| w).sum()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edge_weight(u, v).is_some()
    }

    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        if u >= self.num_nodes || v >= self.num_nodes {
            return None;
        }
        let list = &self.adjacency[u];
        list.binary_search_by_key(&v, |&(n, _)| n)
            .ok()
            .map(|pos| list[pos].1)
    }

    /// Degree sequence in node order.
    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes).map(|v| self.degree(v)).collect()
    }

    /// Appends isolated nodes until the graph has `num_nodes` nodes.
    pub fn with_num_nodes(mut self, num_nodes: usize) -> Result<Self> {
        if num_nodes < self.num_nodes {
            return Err(Error::InvalidGraph(alloc::format!(
                "cannot shrink graph from {} to {} nodes",
                self.num_nodes, num_nodes
            )));
        }
        self.adjacency.resize(num_nodes, Vec::new());
        self.num_nodes = num_nodes;
        Ok(self)
    }

    /// Connected component label per node, labels numbered in order of first
    /// appearance.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.num_nodes];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.num_nodes {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            stack.push(start);
            while let Some(v) = stack.pop() {
                for n in self.neighbor_ids(v) {
                    if label[n] == usize::MAX {
                        label[n] = next;
                        stack.push(n);
                    }
                }
            }
            next += 1;
        }
        label
    }
}

/// Subgraph induced by a node set, re-indexed locally.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub graph: Graph,
    /// `global_ids[local] = global id`, ascending.
    pub global_ids: Vec<usize>,
}

impl Subgraph {
    pub fn local_id(&self, global: usize) -> Option<usize> {
        self.global_ids.binary_search(&global).ok()
    }
}

/// Induced subgraph on `nodes` (duplicates ignored). Local ids follow
/// ascending global id order.
pub fn community_subgraph(graph: &Graph, nodes: &[usize]) -> Result<Subgraph> {
    if nodes.is_empty() {
        return Err(Error::EmptyNodeSet);
    }
    let mut global_ids = nodes.to_vec();
    global_ids.sort_unstable();
    global_ids.dedup();
    if let Some(&last) = global_ids.last() {
        if last >= graph.num_nodes() {
            return Err(Error::NodeOutOfRange {
                id: last,
                num_nodes: graph.num_nodes(),
            });
        }
    }
    let mut local = BTreeMap::new();
    for (l, &g) in global_ids.iter().enumerate() {
        local.insert(g, l);
    }
    let mut sorted = BTreeMap::new();
    for (l, &g) in global_ids.iter().enumerate() {
        for &(n, w) in graph.neighbors(g) {
            if n > g {
                if let Some(&ln) = local.get(&n) {
                    sorted.insert((l, ln), w);
                }
            }
        }
    }
    Ok(Subgraph {
        graph: Graph::from_canonical(global_ids.len(), sorted),
        global_ids,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_duplicate_in_either_direction() {
        let err = Graph::from_unweighted(2, [(0, 1), (1, 0)]).unwrap_err();
        assert_eq!(err, Error::DuplicateEdge(0, 1));
    }

    #[test]
    fn rejects_self_loop_and_bad_weight() {
        assert_eq!(
            Graph::from_unweighted(2, [(1, 1)]).unwrap_err(),
            Error::SelfLoop(1)
        );
        assert!(matches!(
            Graph::from_edges(2, [(0, 1, -1.0)]),
            Err(Error::InvalidWeight { .. })
        ));
        assert!(matches!(
            Graph::from_edges(2, [(0, 1, f64::NAN)]),
            Err(Error::InvalidWeight { .. })
        ));
    }

    #[test]
    fn canonical_order_and_weights() {
        let g = Graph::from_edges(3, [(2, 1, 2.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(g.edges()[0], Edge { u: 0, v: 1, weight: 1.0 });
        assert_eq!(g.edges()[1], Edge { u: 1, v: 2, weight: 2.5 });
        assert_eq!(g.edge_weight(2, 1), Some(2.5));
        assert_eq!(g.weighted_degree(1), 3.5);
    }

    #[test]
    fn subgraph_of_all_nodes_is_identity() {
        let g = Graph::from_unweighted(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let s = community_subgraph(&g, &[3, 2, 1, 0]).unwrap();
        assert_eq!(s.graph, g);
    }

    #[test]
    fn single_node_subgraph() {
        let g = Graph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let s = community_subgraph(&g, &[1]).unwrap();
        assert_eq!(s.graph.num_nodes(), 1);
        assert_eq!(s.graph.num_edges(), 0);
        assert_eq!(community_subgraph(&g, &[]).unwrap_err(), Error::EmptyNodeSet);
    }

    #[test]
    fn triangle_subgraph_drops_outside_edges() {
        // a=0 b=1 c=2 d=3
        let g = Graph::from_unweighted(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        let s = community_subgraph(&g, &[0, 1, 2]).unwrap();
        // oracle: filter the edge list to edges with both ends inside
        let expected = g
            .edges()
            .iter()
            .filter(|e| e.u <= 2 && e.v <= 2)
            .count();
        assert_eq!(expected, 3);
        assert_eq!(s.graph.num_edges(), expected);
    }

    #[test]
    fn components_labels() {
        let g = Graph::from_unweighted(5, [(0, 1), (3, 4)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 1, 2, 2]);
    }
}
