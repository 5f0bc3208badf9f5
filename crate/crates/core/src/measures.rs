//! Topological measures and the structural attention biases built on them.
//!
//! Node-level measures (`lc`, `kc`) are evaluated inside each community
//! subgraph and give the node-to-hyperedge bias `omega = lc + kc`.
//! Hyperedge-level measures (`hd`, `cc`) give the hyperedge-to-node bias
//! `upsilon = hd + cc`, shared by every member of the hyperedge. Memberships
//! that exist only through global node injection get zero for all four.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::community::CommunityCover;
use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hypergraph::Hypergraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosenessMode {
    /// Hop counts from breadth-first search.
    #[default]
    Hops,
    /// Edge weights as lengths, via Dijkstra.
    Weighted,
}

/// Closeness centrality with the Wasserman-Faust correction for
/// disconnected graphs: `(r-1)/sum(d) * (r-1)/(n-1)` where `r` counts the
/// nodes reachable from `v` (itself included).
pub fn closeness_centrality(graph: &Graph, mode: ClosenessMode) -> Vec<f64> {
    let n = graph.num_nodes();
    let mut out = vec![0.0; n];
    if n <= 1 {
        return out;
    }
    for (v, slot) in out.iter_mut().enumerate() {
        let dist = match mode {
            ClosenessMode::Hops => bfs_distances(graph, v),
            ClosenessMode::Weighted => dijkstra_distances(graph, v),
        };
        let mut reach = 0usize;
        let mut total = 0.0;
        for d in dist.into_iter().flatten() {
            reach += 1;
            total += d;
        }
        if reach > 1 && total > 0.0 {
            let r = (reach - 1) as f64;
            *slot = (r / total) * (r / (n - 1) as f64);
        }
    }
    out
}

fn bfs_distances(graph: &Graph, source: usize) -> Vec<Option<f64>> {
    let mut dist = vec![None; graph.num_nodes()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0.0);
    queue.push_back((source, 0usize));
    while let Some((v, d)) = queue.pop_front() {
        for n in graph.neighbor_ids(v) {
            if dist[n].is_none() {
                dist[n] = Some((d + 1) as f64);
                queue.push_back((n, d + 1));
            }
        }
    }
    dist
}

fn dijkstra_distances(graph: &Graph, source: usize) -> Vec<Option<f64>> {
    use alloc::collections::BinaryHeap;
    use core::cmp::Reverse;

    #[derive(PartialEq)]
    struct Key(f64);
    impl Eq for Key {}
    impl PartialOrd for Key {
        fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Key {
        fn cmp(&self, other: &Self) -> core::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }

    let mut dist: Vec<Option<f64>> = vec![None; graph.num_nodes()];
    let mut done = vec![false; graph.num_nodes()];
    let mut heap = BinaryHeap::new();
    dist[source] = Some(0.0);
    heap.push(Reverse((Key(0.0), source)));
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if done[v] {
            continue;
        }
        done[v] = true;
        for &(n, w) in graph.neighbors(v) {
            let nd = d + w;
            if dist[n].is_none_or(|cur| nd < cur) {
                dist[n] = Some(nd);
                heap.push(Reverse((Key(nd), n)));
            }
        }
    }
    dist
}

/// `u_i = 1 - N_A(i) / N_T`.
pub fn uniqueness_scores(cover: &CommunityCover, num_nodes: usize) -> Result<Vec<f64>> {
    if cover.is_empty() {
        return Err(Error::EmptyCover);
    }
    let total = cover.len() as f64;
    Ok(cover
        .memberships(num_nodes)
        .into_iter()
        .map(|count| 1.0 - count as f64 / total)
        .collect())
}

/// Local clustering coefficient: the fraction of neighbor pairs that are
/// adjacent, `2H / (g(g-1))`; zero below degree two.
pub fn local_clustering(graph: &Graph) -> Vec<f64> {
    (0..graph.num_nodes())
        .map(|v| {
            let nbrs: Vec<usize> = graph.neighbor_ids(v).collect();
            let g = nbrs.len();
            if g < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (a, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[a + 1..] {
                    if graph.has_edge(x, y) {
                        links += 1;
                    }
                }
            }
            2.0 * links as f64 / (g * (g - 1)) as f64
        })
        .collect()
}

/// Core number of every node (bucket-based peeling).
pub fn coreness(graph: &Graph) -> Vec<usize> {
    let n = graph.num_nodes();
    let mut degree = graph.degrees();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    // nodes bucketed by current degree, processed in increasing order
    let mut bins = vec![0usize; max_deg + 1];
    for &d in &degree {
        bins[d] += 1;
    }
    let mut start = 0;
    for b in bins.iter_mut() {
        let count = *b;
        *b = start;
        start += count;
    }
    let mut order = vec![0usize; n];
    let mut pos = vec![0usize; n];
    for v in 0..n {
        pos[v] = bins[degree[v]];
        order[pos[v]] = v;
        bins[degree[v]] += 1;
    }
    for d in (1..=max_deg).rev() {
        bins[d] = bins[d - 1];
    }
    bins[0] = 0;
    for idx in 0..n {
        let v = order[idx];
        for u in graph.neighbor_ids(v) {
            if degree[u] > degree[v] {
                let du = degree[u];
                let pu = pos[u];
                let pw = bins[du];
                let w = order[pw];
                if u != w {
                    order.swap(pu, pw);
                    pos[u] = pw;
                    pos[w] = pu;
                }
                bins[du] += 1;
                degree[u] -= 1;
            }
        }
    }
    degree
}

/// `hd(e_j) = |e_j| / m`, with `|e_j|` the community size before global
/// node injection.
pub fn hyperedge_density(hypergraph: &Hypergraph) -> Vec<f64> {
    let m = hypergraph.num_nodes() as f64;
    hypergraph
        .communities()
        .iter()
        .map(|c| c.len() as f64 / m)
        .collect()
}

/// Triangles divided by possible triples `C(n,3)`; zero when `n < 3`.
///
/// Triangles are counted per adjacent pair `(u, v)` with `u` before `v`,
/// over their common neighbors, so each one is seen three times.
pub fn hyperedge_clustering(graph: &Graph) -> f64 {
    let n = graph.num_nodes();
    let mut count = 0usize;
    for u in 0..n {
        for v in (u + 1)..n {
            if !graph.has_edge(u, v) {
                continue;
            }
            for w in common_neighbors(graph, u, v) {
                if graph.has_edge(u, w) && graph.has_edge(v, w) {
                    count += 1;
                }
            }
        }
    }
    let triangles = count as f64 / 3.0;
    let possible = (n * n.saturating_sub(1) * n.saturating_sub(2)) as f64 / 6.0;
    if possible > 0.0 {
        triangles / possible
    } else {
        0.0
    }
}

fn common_neighbors(graph: &Graph, u: usize, v: usize) -> Vec<usize> {
    let (a, b) = (graph.neighbors(u), graph.neighbors(v));
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                out.push(a[i].0);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Which measures enter the attention biases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiasFlags {
    pub lc: bool,
    pub kc: bool,
    pub hd: bool,
    pub cc: bool,
}

impl Default for BiasFlags {
    fn default() -> Self {
        Self {
            lc: true,
            kc: true,
            hd: true,
            cc: true,
        }
    }
}

/// Per-incidence measure values, aligned with [`Hypergraph::incidence`].
#[derive(Debug, Clone, PartialEq)]
pub struct StructuralBias {
    /// `(hyperedge, node)` of every entry.
    pub pairs: Vec<(usize, usize)>,
    pub lc: Vec<f64>,
    pub kc: Vec<f64>,
    pub hd: Vec<f64>,
    pub cc: Vec<f64>,
}

impl StructuralBias {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// `omega_ji = lc_ji + kc_ji`, restricted to the enabled terms.
    pub fn omega(&self, flags: BiasFlags) -> Vec<f64> {
        combine(&self.lc, flags.lc, &self.kc, flags.kc)
    }

    /// `upsilon_ij = hd_j + cc_j`, restricted to the enabled terms.
    pub fn upsilon(&self, flags: BiasFlags) -> Vec<f64> {
        combine(&self.hd, flags.hd, &self.cc, flags.cc)
    }

    /// Min-max scales each measure to `[0, 1]` over the non-injected
    /// entries. A constant measure maps to 1 when positive, else 0.
    pub fn normalized(&self, injected: &[bool]) -> Self {
        let scale = |values: &[f64]| -> Vec<f64> {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for (&v, &inj) in values.iter().zip(injected) {
                if !inj {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            values
                .iter()
                .zip(injected)
                .map(|(&v, &inj)| {
                    if inj {
                        0.0
                    } else if hi > lo {
                        (v - lo) / (hi - lo)
                    } else if hi > 0.0 {
                        v / hi
                    } else {
                        0.0
                    }
                })
                .collect()
        };
        Self {
            pairs: self.pairs.clone(),
            lc: scale(&self.lc),
            kc: scale(&self.kc),
            hd: scale(&self.hd),
            cc: scale(&self.cc),
        }
    }

    /// Copy with the measures whose flag is off replaced by zeros.
    pub fn zeroed(&self, keep: BiasFlags) -> Self {
        let z = |v: &Vec<f64>, on: bool| if on { v.clone() } else { vec![0.0; v.len()] };
        Self {
            pairs: self.pairs.clone(),
            lc: z(&self.lc, keep.lc),
            kc: z(&self.kc, keep.kc),
            hd: z(&self.hd, keep.hd),
            cc: z(&self.cc, keep.cc),
        }
    }
}

fn combine(a: &[f64], use_a: bool, b: &[f64], use_b: bool) -> Vec<f64> {
    match (use_a, use_b) {
        (true, true) => a.iter().zip(b).map(|(x, y)| x + y).collect(),
        (true, false) => a.to_vec(),
        (false, true) => b.to_vec(),
        (false, false) => vec![0.0; a.len()],
    }
}

/// Computes `lc`, `kc`, `hd` and `cc` for every incidence entry.
pub fn assemble_bias(hypergraph: &Hypergraph, normalize: bool) -> StructuralBias {
    let hd = hyperedge_density(hypergraph);
    let per_edge: Vec<(Vec<f64>, Vec<usize>, f64)> = hypergraph
        .subgraphs()
        .iter()
        .map(|s| {
            (
                local_clustering(&s.graph),
                coreness(&s.graph),
                hyperedge_clustering(&s.graph),
            )
        })
        .collect();
    let n = hypergraph.incidence().len();
    let mut bias = StructuralBias {
        pairs: Vec::with_capacity(n),
        lc: Vec::with_capacity(n),
        kc: Vec::with_capacity(n),
        hd: Vec::with_capacity(n),
        cc: Vec::with_capacity(n),
    };
    let mut injected = Vec::with_capacity(n);
    for inc in hypergraph.incidence() {
        bias.pairs.push((inc.edge, inc.node));
        injected.push(inc.injected);
        if inc.injected {
            bias.lc.push(0.0);
            bias.kc.push(0.0);
            bias.hd.push(0.0);
            bias.cc.push(0.0);
            continue;
        }
        let sub = &hypergraph.subgraphs()[inc.edge];
        let local = sub
            .local_id(inc.node)
            .expect("non-injected member belongs to its community subgraph");
        let (lc, kc, cc) = &per_edge[inc.edge];
        bias.lc.push(lc[local]);
        bias.kc.push(kc[local] as f64);
        bias.hd.push(hd[inc.edge]);
        bias.cc.push(*cc);
    }
    if normalize {
        bias.normalized(&injected)
    } else {
        bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn approx(a: f64, b: f64) -> bool {
        libm::fabs(a - b) < 1e-12
    }

    #[test]
    fn closeness_on_path() {
        let g = Graph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let c = closeness_centrality(&g, ClosenessMode::Hops);
        assert!(approx(c[1], 1.0));
        assert!(approx(c[0], 2.0 / 3.0));
        assert!(approx(c[2], 2.0 / 3.0));
    }

    #[test]
    fn closeness_isolated_and_complete() {
        let g = Graph::from_unweighted(3, [(0, 1)]).unwrap();
        assert_eq!(closeness_centrality(&g, ClosenessMode::Hops)[2], 0.0);
        let k4 = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        for c in closeness_centrality(&k4, ClosenessMode::Hops) {
            assert!(approx(c, 1.0));
        }
    }

    #[test]
    fn weighted_closeness_uses_lengths() {
        let g = Graph::from_edges(3, [(0, 1, 2.0), (1, 2, 2.0)]).unwrap();
        let c = closeness_centrality(&g, ClosenessMode::Weighted);
        assert!(approx(c[1], 0.5));
        assert!(approx(c[0], 2.0 / 6.0));
    }

    #[test]
    fn uniqueness_formula() {
        let cover =
            CommunityCover::new(vec![vec![0, 1], vec![1, 2], vec![1, 3], vec![1, 4]]).unwrap();
        let u = uniqueness_scores(&cover, 5).unwrap();
        assert_eq!(u[0], 0.75);
        assert_eq!(u[1], 0.0);
        let cover = CommunityCover::new(vec![vec![0], vec![0], vec![1]]).unwrap();
        assert!(approx(uniqueness_scores(&cover, 2).unwrap()[0], 1.0 / 3.0));
        let empty = CommunityCover::new(vec![]).unwrap();
        assert_eq!(uniqueness_scores(&empty, 2).unwrap_err(), Error::EmptyCover);
    }

    #[test]
    fn clustering_cases() {
        let tri = Graph::from_unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(local_clustering(&tri), vec![1.0, 1.0, 1.0]);
        let star = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(local_clustering(&star)[0], 0.0);
        // neighbors {1,2,3} of node 0 with only 1-2 linked
        let g = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2)]).unwrap();
        assert!(approx(local_clustering(&g)[0], 1.0 / 3.0));
    }

    #[test]
    fn coreness_cases() {
        let g = Graph::from_unweighted(4, [(0, 1), (1, 2), (0, 2), (2, 3)]).unwrap();
        assert_eq!(coreness(&g), vec![2, 2, 2, 1]);
        let k4 = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        assert_eq!(coreness(&k4), vec![3; 4]);
        let p4 = Graph::from_unweighted(4, [(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(coreness(&p4), vec![1; 4]);
        assert_eq!(coreness(&Graph::empty(2)), vec![0, 0]);
    }

    #[test]
    fn hyperedge_clustering_cases() {
        let k3 = Graph::from_unweighted(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(hyperedge_clustering(&k3), 1.0);
        let p3 = Graph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(hyperedge_clustering(&p3), 0.0);
        // K4 minus edge 2-3: triangles 012 and 013 out of 4 triples
        let g = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]).unwrap();
        assert_eq!(hyperedge_clustering(&g), 0.5);
        assert_eq!(hyperedge_clustering(&Graph::empty(2)), 0.0);
    }

    #[test]
    fn density_cases() {
        let h = Hypergraph::from_hyperedges(20, vec![(0..5).collect(), vec![7], (0..20).collect()])
            .unwrap();
        assert_eq!(hyperedge_density(&h), vec![0.25, 0.05, 1.0]);
    }

    #[test]
    fn triangle_bias_in_six_node_hypergraph() {
        let g = Graph::from_unweighted(6, [(0, 1), (1, 2), (0, 2), (3, 4)]).unwrap();
        let h = Hypergraph::from_parts(&g, vec![vec![0, 1, 2], vec![3, 4], vec![5]], vec![])
            .unwrap();
        let b = assemble_bias(&h, false);
        let omega = b.omega(BiasFlags::default());
        let upsilon = b.upsilon(BiasFlags::default());
        assert_eq!(b.pairs[0], (0, 0));
        assert_eq!(omega[0], 3.0);
        assert_eq!(upsilon[0], 1.5);
        // singleton {5}
        let last = b.len() - 1;
        assert_eq!(omega[last], 0.0);
        assert!(approx(upsilon[last], 1.0 / 6.0));
    }

    #[test]
    fn singleton_in_ten_nodes() {
        let h = Hypergraph::from_hyperedges(10, vec![vec![4]]).unwrap();
        let b = assemble_bias(&h, false);
        assert_eq!(b.omega(BiasFlags::default()), vec![0.0]);
        assert_eq!(b.upsilon(BiasFlags::default()), vec![0.1]);
    }

    #[test]
    fn injected_global_node_gets_zero_bias() {
        let g = Graph::from_unweighted(4, [(0, 1), (2, 3), (1, 2)]).unwrap();
        let h = Hypergraph::from_parts(&g, vec![vec![0, 1], vec![2, 3]], vec![2]).unwrap();
        let b = assemble_bias(&h, false);
        let idx = b.pairs.iter().position(|&p| p == (0, 2)).unwrap();
        assert_eq!(b.omega(BiasFlags::default())[idx], 0.0);
        assert_eq!(b.upsilon(BiasFlags::default())[idx], 0.0);
        let genuine = b.pairs.iter().position(|&p| p == (1, 2)).unwrap();
        assert!(b.upsilon(BiasFlags::default())[genuine] > 0.0);
    }

    #[test]
    fn normalization_bounds() {
        let g = Graph::from_unweighted(
            7,
            [(0, 1), (1, 2), (0, 2), (2, 3), (4, 5), (5, 6)],
        )
        .unwrap();
        let h = Hypergraph::from_parts(&g, vec![vec![0, 1, 2, 3], vec![4, 5, 6]], vec![0])
            .unwrap();
        let b = assemble_bias(&h, true);
        for values in [&b.lc, &b.kc, &b.hd, &b.cc] {
            assert!(values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
        assert!(b.kc.iter().any(|&v| v == 1.0));
    }

    #[test]
    fn upsilon_constant_within_hyperedge() {
        let g = Graph::from_unweighted(5, [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let h = Hypergraph::from_parts(&g, vec![vec![0, 1, 2], vec![2, 3, 4, 0]], vec![]).unwrap();
        let b = assemble_bias(&h, false);
        let up = b.upsilon(BiasFlags::default());
        for j in 0..2 {
            let vals: Vec<f64> = b
                .pairs
                .iter()
                .zip(&up)
                .filter(|((e, _), _)| *e == j)
                .map(|(_, &v)| v)
                .collect();
            assert!(vals.windows(2).all(|w| w[0] == w[1]));
        }
    }
}
