//! Overlapping community detection.
//!
//! The default detector grows communities greedily from seeds. Seeds are
//! taken in order of decreasing weighted degree among nodes that no
//! community has claimed yet. A community `C` is scored with the local
//! fitness
//!
//! ```text
//! f(C) = k_in(C) / (k_in(C) + k_out(C))^alpha
//! ```
//!
//! where `k_in` is twice the internal edge weight and `k_out` the weight
//! leaving `C`. Each step adds the neighboring node with the largest fitness
//! gain; growth stops when no gain reaches `epsilon`. Nodes already claimed
//! by earlier communities may be added again, which is where overlap comes
//! from.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Overlapping node sets. Each community is sorted and non-empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunityCover {
    communities: Vec<Vec<usize>>,
}

impl CommunityCover {
    /// Validates and canonicalizes (sorts, dedups) the given communities.
    pub fn new(communities: Vec<Vec<usize>>) -> Result<Self> {
        let mut out = Vec::with_capacity(communities.len());
        for mut c in communities {
            if c.is_empty() {
                return Err(Error::EmptyNodeSet);
            }
            c.sort_unstable();
            c.dedup();
            out.push(c);
        }
        Ok(Self { communities: out })
    }

    pub fn communities(&self) -> &[Vec<usize>] {
        &self.communities
    }

    /// Total community count, `N_T`.
    pub fn len(&self) -> usize {
        self.communities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.communities.is_empty()
    }

    /// Number of communities containing each node, `N_A(i)`.
    pub fn memberships(&self, num_nodes: usize) -> Vec<usize> {
        let mut counts = vec![0; num_nodes];
        for c in &self.communities {
            for &v in c {
                if v < num_nodes {
                    counts[v] += 1;
                }
            }
        }
        counts
    }

    /// Checks ids against `num_nodes` and appends a singleton community for
    /// every node no community contains.
    pub fn covering(mut self, num_nodes: usize) -> Result<Self> {
        for c in &self.communities {
            if let Some(&id) = c.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::NodeOutOfRange { id, num_nodes });
            }
        }
        let counts = self.memberships(num_nodes);
        for (v, &n) in counts.iter().enumerate() {
            if n == 0 {
                self.communities.push(vec![v]);
            }
        }
        Ok(self)
    }
}

/// Anything that can produce an overlapping cover of a graph.
pub trait CommunityDetector {
    fn detect(&self, graph: &Graph) -> Result<CommunityCover>;
}

/// A cover computed elsewhere (for instance loaded from a cover file).
#[derive(Debug, Clone)]
pub struct Precomputed(pub CommunityCover);

impl CommunityDetector for Precomputed {
    fn detect(&self, graph: &Graph) -> Result<CommunityCover> {
        self.0.clone().covering(graph.num_nodes())
    }
}

/// Greedy local expansion, see the module docs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreedyExpansion {
    pub alpha: f64,
    pub epsilon: f64,
}

impl Default for GreedyExpansion {
    fn default() -> Self {
        Self {
            alpha: 1.5,
            epsilon: 1e-9,
        }
    }
}

/// Local fitness of a community with internal degree `k_in` and total
/// degree `k_total = k_in + k_out`.
pub fn local_fitness(k_in: f64, k_total: f64, alpha: f64) -> f64 {
    if k_total <= 0.0 {
        0.0
    } else {
        k_in / libm::pow(k_total, alpha)
    }
}

impl GreedyExpansion {
    pub fn from_params(params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut algo = Self::default();
        for (name, &value) in params {
            match name.as_str() {
                "alpha" => algo.alpha = value,
                "epsilon" => algo.epsilon = value,
                _ => {
                    return Err(Error::InvalidParam {
                        name: name.clone(),
                        reason: "unknown parameter for greedy expansion".to_string(),
                    })
                }
            }
        }
        if !(algo.alpha.is_finite() && algo.alpha > 0.0) {
            return Err(Error::InvalidParam {
                name: "alpha".to_string(),
                reason: "must be positive".to_string(),
            });
        }
        if !(algo.epsilon.is_finite() && algo.epsilon >= 0.0) {
            return Err(Error::InvalidParam {
                name: "epsilon".to_string(),
                reason: "must be non-negative".to_string(),
            });
        }
        Ok(algo)
    }

    fn expand(&self, graph: &Graph, seed: usize) -> Vec<usize> {
        let strength: Vec<f64> = (0..graph.num_nodes())
            .map(|v| graph.weighted_degree(v))
            .collect();
        let mut members = BTreeSet::new();
        members.insert(seed);
        let mut k_in = 0.0;
        let mut k_total = strength[seed];
        // weight from each frontier node into the community
        let mut frontier: BTreeMap<usize, f64> = BTreeMap::new();
        for &(n, w) in graph.neighbors(seed) {
            *frontier.entry(n).or_insert(0.0) += w;
        }
        loop {
            let current = local_fitness(k_in, k_total, self.alpha);
            let mut best: Option<(usize, f64)> = None;
            for (&v, &w_in) in &frontier {
                let f = local_fitness(k_in + 2.0 * w_in, k_total + strength[v], self.alpha);
                let gain = f - current;
                if best.is_none_or(|(_, g)| gain > g) {
                    best = Some((v, gain));
                }
            }
            let Some((v, gain)) = best else { break };
            if gain < self.epsilon {
                break;
            }
            let w_in = frontier.remove(&v).unwrap_or(0.0);
            members.insert(v);
            k_in += 2.0 * w_in;
            k_total += strength[v];
            for &(n, w) in graph.neighbors(v) {
                if !members.contains(&n) {
                    *frontier.entry(n).or_insert(0.0) += w;
                }
            }
        }
        members.into_iter().collect()
    }
}

impl CommunityDetector for GreedyExpansion {
    fn detect(&self, graph: &Graph) -> Result<CommunityCover> {
        let n = graph.num_nodes();
        if n == 0 {
            return Err(Error::InvalidGraph("graph has no nodes".to_string()));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let strength: Vec<f64> = order.iter().map(|&v| graph.weighted_degree(v)).collect();
        // stable sort keeps smaller ids first among equal strengths
        order.sort_by(|&a, &b| strength[b].total_cmp(&strength[a]));
        let mut assigned = vec![false; n];
        let mut communities = Vec::new();
        for seed in order {
            if assigned[seed] {
                continue;
            }
            let community = self.expand(graph, seed);
            for &v in &community {
                assigned[v] = true;
            }
            communities.push(community);
        }
        CommunityCover::new(communities)?.covering(n)
    }
}

/// Runs the detector named `algorithm` with numeric parameters.
///
/// Only `"greedy"` is resolvable here; covers from files go through
/// [`Precomputed`].
pub fn detect_communities(
    graph: &Graph,
    algorithm: &str,
    params: &BTreeMap<String, f64>,
) -> Result<CommunityCover> {
    match algorithm {
        "greedy" => GreedyExpansion::from_params(params)?.detect(graph),
        other => Err(Error::UnknownAlgorithm(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Re-runs the greedy procedure evaluating fitness from scratch on every
    /// candidate subset instead of tracking it incrementally.
    fn brute_force_greedy(graph: &Graph, alpha: f64, eps: f64) -> Vec<Vec<usize>> {
        let n = graph.num_nodes();
        let fitness = |set: &BTreeSet<usize>| {
            let mut k_in = 0.0;
            let mut k_total = 0.0;
            for &v in set {
                for &(u, w) in graph.neighbors(v) {
                    k_total += w;
                    if set.contains(&u) {
                        k_in += w;
                    }
                }
            }
            local_fitness(k_in, k_total, alpha)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            graph
                .weighted_degree(b)
                .partial_cmp(&graph.weighted_degree(a))
                .unwrap()
                .then(a.cmp(&b))
        });
        let mut assigned = vec![false; n];
        let mut out = Vec::new();
        for seed in order {
            if assigned[seed] {
                continue;
            }
            let mut set = BTreeSet::from([seed]);
            loop {
                let base = fitness(&set);
                let mut best: Option<(usize, f64)> = None;
                for v in 0..n {
                    if set.contains(&v) || !set.iter().any(|&m| graph.has_edge(m, v)) {
                        continue;
                    }
                    let mut grown = set.clone();
                    grown.insert(v);
                    let gain = fitness(&grown) - base;
                    if best.is_none_or(|(_, g)| gain > g) {
                        best = Some((v, gain));
                    }
                }
                match best {
                    Some((v, g)) if g >= eps => {
                        set.insert(v);
                    }
                    _ => break,
                }
            }
            for &v in &set {
                assigned[v] = true;
            }
            out.push(set.into_iter().collect());
        }
        out
    }

    fn bowtie() -> Graph {
        Graph::from_unweighted(5, [(0, 1), (0, 2), (1, 2), (2, 3), (2, 4), (3, 4)]).unwrap()
    }

    #[test]
    fn bowtie_gives_two_overlapping_triangles() {
        let g = bowtie();
        let cover = detect_communities(&g, "greedy", &BTreeMap::new()).unwrap();
        assert_eq!(cover.communities(), &[vec![0, 1, 2], vec![2, 3, 4]]);
        assert_eq!(
            cover.communities(),
            brute_force_greedy(&g, 1.5, 1e-9).as_slice()
        );
    }

    #[test]
    fn bowtie_triangles_are_local_fitness_maxima() {
        // exhaustive check over every single-node move
        let g = bowtie();
        let score = |set: &[usize]| {
            let mut k_in = 0.0;
            let mut k_total = 0.0;
            for &v in set {
                for &(u, w) in g.neighbors(v) {
                    k_total += w;
                    if set.contains(&u) {
                        k_in += w;
                    }
                }
            }
            local_fitness(k_in, k_total, 1.5)
        };
        for community in [[0usize, 1, 2], [2, 3, 4]] {
            let base = score(&community);
            for v in 0..5 {
                let mut moved: Vec<usize> = community.to_vec();
                if let Some(pos) = moved.iter().position(|&x| x == v) {
                    moved.remove(pos);
                } else {
                    moved.push(v);
                }
                assert!(score(&moved) < base, "move {v} improves {community:?}");
            }
        }
    }

    #[test]
    fn k4_is_one_community() {
        let g = Graph::from_unweighted(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
            .unwrap();
        let cover = detect_communities(&g, "greedy", &BTreeMap::new()).unwrap();
        assert_eq!(cover.communities(), &[vec![0, 1, 2, 3]]);
        assert_eq!(cover.communities(), brute_force_greedy(&g, 1.5, 1e-9).as_slice());
    }

    #[test]
    fn edgeless_graph_gives_singletons() {
        let g = Graph::empty(3);
        let cover = detect_communities(&g, "greedy", &BTreeMap::new()).unwrap();
        assert_eq!(cover.communities(), &[vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn unknown_algorithm_and_param() {
        let g = Graph::empty(2);
        assert_eq!(
            detect_communities(&g, "louvain", &BTreeMap::new()).unwrap_err(),
            Error::UnknownAlgorithm("louvain".into())
        );
        let mut params = BTreeMap::new();
        params.insert("beta".to_string(), 1.0);
        assert!(matches!(
            detect_communities(&g, "greedy", &params),
            Err(Error::InvalidParam { .. })
        ));
    }

    #[test]
    fn incremental_matches_brute_force_on_random_graphs() {
        use crate::rng::{seeded, RngExt};
        for seed in 0..30u64 {
            let mut rng = seeded(seed);
            let n = rng.gen_range(2..14);
            let mut edges = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.gen_bool(0.35) {
                        edges.push((u, v, rng.gen_range(1..4) as f64));
                    }
                }
            }
            let g = Graph::from_edges(n, edges).unwrap();
            let cover = GreedyExpansion::default().detect(&g).unwrap();
            let expected = brute_force_greedy(&g, 1.5, 1e-9);
            assert_eq!(cover.communities(), expected.as_slice(), "seed {seed}");
        }
    }

    #[test]
    fn precomputed_adds_missing_singletons() {
        let g = Graph::empty(4);
        let cover = Precomputed(CommunityCover::new(vec![vec![2, 0]]).unwrap())
            .detect(&g)
            .unwrap();
        assert_eq!(cover.communities(), &[vec![0, 2], vec![1], vec![3]]);
    }
}
