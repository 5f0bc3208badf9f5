//! Community hypergraphs.
//!
//! Every community becomes one hyperedge. Global nodes, chosen by closeness
//! centrality in the input graph, are then added to every hyperedge so that
//! hyperedges which share no member still exchange information. The
//! community subgraph of each hyperedge is taken before injection, and the
//! incidence keeps track of which memberships were injected.

use alloc::vec;
use alloc::vec::Vec;

use crate::community::CommunityCover;
use crate::error::{Error, Result};
use crate::graph::{community_subgraph, Graph, Subgraph};
use crate::measures::{closeness_centrality, ClosenessMode};

/// One nonzero of the incidence matrix: node `node` belongs to hyperedge
/// `edge`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Incidence {
    pub edge: usize,
    pub node: usize,
    /// Membership exists only because `node` is a global node.
    pub injected: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    communities: Vec<Vec<usize>>,
    hyperedges: Vec<Vec<usize>>,
    global_nodes: Vec<usize>,
    subgraphs: Vec<Subgraph>,
    /// Sorted by `(edge, node)`.
    incidence: Vec<Incidence>,
    /// Per node, indices into `incidence`, ascending by hyperedge.
    node_incidence: Vec<Vec<usize>>,
}

impl Hypergraph {
    /// Builds the hypergraph from communities and an explicit global node
    /// list. `graph` supplies the community subgraphs.
    pub fn from_parts(
        graph: &Graph,
        communities: Vec<Vec<usize>>,
        global_nodes: Vec<usize>,
    ) -> Result<Self> {
        let num_nodes = graph.num_nodes();
        let cover = CommunityCover::new(communities)?;
        let communities: Vec<Vec<usize>> = cover.communities().to_vec();
        for &g in &global_nodes {
            if g >= num_nodes {
                return Err(Error::NodeOutOfRange { id: g, num_nodes });
            }
        }
        let mut subgraphs = Vec::with_capacity(communities.len());
        for c in &communities {
            subgraphs.push(community_subgraph(graph, c)?);
        }
        let mut hyperedges = Vec::with_capacity(communities.len());
        let mut incidence = Vec::new();
        for (j, c) in communities.iter().enumerate() {
            let mut members = c.clone();
            for &g in &global_nodes {
                if c.binary_search(&g).is_err() {
                    members.push(g);
                }
            }
            members.sort_unstable();
            members.dedup();
            for &i in &members {
                incidence.push(Incidence {
                    edge: j,
                    node: i,
                    injected: c.binary_search(&i).is_err(),
                });
            }
            hyperedges.push(members);
        }
        let mut node_incidence = vec![Vec::new(); num_nodes];
        for (k, inc) in incidence.iter().enumerate() {
            node_incidence[inc.node].push(k);
        }
        Ok(Self {
            num_nodes,
            communities,
            hyperedges,
            global_nodes,
            subgraphs,
            incidence,
            node_incidence,
        })
    }

    /// Hypergraph with no underlying graph edges, for purely combinatorial
    /// uses such as the Laplacian.
    pub fn from_hyperedges(num_nodes: usize, hyperedges: Vec<Vec<usize>>) -> Result<Self> {
        Self::from_parts(&Graph::empty(num_nodes), hyperedges, Vec::new())
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.hyperedges.len()
    }

    /// Members of each hyperedge, global nodes included.
    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    /// Members of each hyperedge before global node injection.
    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    pub fn global_nodes(&self) -> &[usize] {
        &self.global_nodes
    }

    /// Subgraph of the input graph induced by each community.
    pub fn subgraphs(&self) -> &[Subgraph] {
        &self.subgraphs
    }

    pub fn incidence(&self) -> &[Incidence] {
        &self.incidence
    }

    /// Incidence indices of the hyperedges containing `node`.
    pub fn node_incidence(&self, node: usize) -> &[usize] {
        &self.node_incidence[node]
    }

    pub fn contains(&self, node: usize, edge: usize) -> bool {
        self.hyperedges
            .get(edge)
            .is_some_and(|h| h.binary_search(&node).is_ok())
    }

    /// Dense `m x n` incidence matrix, row-major.
    pub fn incidence_dense(&self) -> Vec<Vec<u8>> {
        let mut a = vec![vec![0u8; self.num_edges()]; self.num_nodes];
        for inc in &self.incidence {
            a[inc.node][inc.edge] = 1;
        }
        a
    }

    /// True when the graph on hyperedges, joined whenever two hyperedges
    /// share a node, is connected.
    pub fn hyperedges_connected(&self) -> bool {
        let n = self.num_edges();
        if n <= 1 {
            return true;
        }
        let mut uf = UnionFind::new(n);
        for edges in &self.node_incidence {
            for w in edges.windows(2) {
                uf.union(self.incidence[w[0]].edge, self.incidence[w[1]].edge);
            }
        }
        let root = uf.find(0);
        (1..n).all(|j| uf.find(j) == root)
    }
}

/// The `n_g` nodes with the highest closeness centrality, ties broken by the
/// smaller id.
pub fn select_global_nodes(graph: &Graph, n_g: usize, mode: ClosenessMode) -> Vec<usize> {
    let closeness = closeness_centrality(graph, mode);
    top_by_score(&closeness, n_g)
}

pub(crate) fn top_by_score(scores: &[f64], count: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(count.min(scores.len()));
    order
}

/// One hyperedge per community of `cover`, plus `n_g` global nodes
/// injected into every hyperedge.
pub fn build_hypergraph(graph: &Graph, cover: &CommunityCover, n_g: usize) -> Result<Hypergraph> {
    let globals = select_global_nodes(graph, n_g, ClosenessMode::Hops);
    Hypergraph::from_parts(graph, cover.communities().to_vec(), globals)
}

/// Disjoint-set forest with path halving.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }

    pub fn count_sets(&mut self) -> usize {
        (0..self.parent.len()).filter(|&x| self.find(x) == x).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_diagonal_incidence() {
        let g = Graph::from_unweighted(4, [(0, 1), (2, 3)]).unwrap();
        let cover = CommunityCover::new(vec![vec![0, 1], vec![2, 3]]).unwrap();
        let h = build_hypergraph(&g, &cover, 0).unwrap();
        assert_eq!(
            h.incidence_dense(),
            vec![vec![1, 0], vec![1, 0], vec![0, 1], vec![0, 1]]
        );
        assert!(!h.hyperedges_connected());
    }

    #[test]
    fn global_node_joins_every_hyperedge() {
        // 0-1 and 2-3 joined through 4; node 4 has the top closeness
        let g = Graph::from_unweighted(5, [(0, 1), (2, 3), (1, 4), (2, 4)]).unwrap();
        let cover = CommunityCover::new(vec![vec![0, 1], vec![2, 3], vec![4]]).unwrap();
        let h = build_hypergraph(&g, &cover, 1).unwrap();
        assert_eq!(h.global_nodes(), &[4]);
        for j in 0..3 {
            assert!(h.contains(4, j));
        }
        assert!(h.hyperedges_connected());
        // injected memberships are flagged, genuine ones are not
        let flags: Vec<_> = h
            .incidence()
            .iter()
            .filter(|inc| inc.node == 4)
            .map(|inc| inc.injected)
            .collect();
        assert_eq!(flags, vec![true, true, false]);
        // subgraphs keep the pre-injection member sets
        assert_eq!(h.subgraphs()[0].global_ids, vec![0, 1]);
    }

    #[test]
    fn node_in_three_of_four_communities() {
        let g = Graph::empty(6);
        let cover = CommunityCover::new(vec![
            vec![5, 0],
            vec![5, 1],
            vec![5, 2],
            vec![3, 4],
        ])
        .unwrap();
        let h = build_hypergraph(&g, &cover, 0).unwrap();
        let a = h.incidence_dense();
        assert_eq!(a[0].len(), 4);
        assert_eq!(a[5].iter().filter(|&&x| x == 1).count(), 3);
        let total: usize = h.hyperedges().iter().map(Vec::len).sum();
        assert_eq!(total, h.incidence().len());
    }

    #[test]
    fn selection_of_zero_global_nodes() {
        let g = Graph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        assert!(select_global_nodes(&g, 0, ClosenessMode::Hops).is_empty());
        assert_eq!(select_global_nodes(&g, 1, ClosenessMode::Hops), vec![1]);
    }

    #[test]
    fn star_hub_is_global() {
        let g = Graph::from_unweighted(5, [(3, 0), (3, 1), (3, 2), (3, 4)]).unwrap();
        assert_eq!(select_global_nodes(&g, 1, ClosenessMode::Hops), vec![3]);
    }
}
