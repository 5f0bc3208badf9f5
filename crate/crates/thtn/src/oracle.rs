//! Brute-force reference implementations, written against dense adjacency
//! matrices and sharing no code with the library paths they check.

use thtn_core::Graph;

/// Dense 0/1 adjacency of the subgraph induced by `nodes` (in that order),
/// found by filtering the full edge list.
pub fn induced_adjacency(graph: &Graph, nodes: &[usize]) -> Vec<Vec<bool>> {
    let n = nodes.len();
    let mut adj = vec![vec![false; n]; n];
    for e in graph.edges() {
        let a = nodes.iter().position(|&x| x == e.u);
        let b = nodes.iter().position(|&x| x == e.v);
        if let (Some(a), Some(b)) = (a, b) {
            adj[a][b] = true;
            adj[b][a] = true;
        }
    }
    adj
}

pub fn adjacency(graph: &Graph) -> Vec<Vec<bool>> {
    let nodes: Vec<usize> = (0..graph.num_nodes()).collect();
    induced_adjacency(graph, &nodes)
}

/// All-pairs distances by Floyd-Warshall; `None` when unreachable.
pub fn all_pairs(n: usize, length: impl Fn(usize, usize) -> Option<f64>) -> Vec<Vec<Option<f64>>> {
    let mut d = vec![vec![None; n]; n];
    for i in 0..n {
        for j in 0..n {
            d[i][j] = if i == j { Some(0.0) } else { length(i, j) };
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Closeness `(r-1)/sum(d) * (r-1)/(n-1)` from a distance table, where `r`
/// counts the nodes reachable from `v` including itself.
pub fn closeness(dist: &[Vec<Option<f64>>]) -> Vec<f64> {
    let n = dist.len();
    (0..n)
        .map(|v| {
            let reach: Vec<f64> = dist[v].iter().flatten().copied().collect();
            let r = reach.len() as f64;
            let total: f64 = reach.iter().sum();
            if n < 2 || total == 0.0 {
                0.0
            } else {
                (r - 1.0) / total * (r - 1.0) / (n as f64 - 1.0)
            }
        })
        .collect()
}

pub fn hop_closeness(graph: &Graph) -> Vec<f64> {
    let adj = adjacency(graph);
    closeness(&all_pairs(graph.num_nodes(), |i, j| adj[i][j].then_some(1.0)))
}

pub fn weighted_closeness(graph: &Graph) -> Vec<f64> {
    closeness(&all_pairs(graph.num_nodes(), |i, j| graph.edge_weight(i, j)))
}

/// Connected neighbor pairs over possible pairs; 0 below degree 2.
pub fn local_clustering(adj: &[Vec<bool>]) -> Vec<f64> {
    let n = adj.len();
    (0..n)
        .map(|v| {
            let nb: Vec<usize> = (0..n).filter(|&u| adj[v][u]).collect();
            let g = nb.len();
            if g < 2 {
                return 0.0;
            }
            let mut linked = 0usize;
            for a in 0..g {
                for b in a + 1..g {
                    if adj[nb[a]][nb[b]] {
                        linked += 1;
                    }
                }
            }
            linked as f64 / (g * (g - 1) / 2) as f64
        })
        .collect()
}

/// Largest `k` whose `k`-core contains the node, each core found by
/// repeated deletion of nodes with fewer than `k` surviving neighbors.
pub fn coreness(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut core = vec![0; n];
    for k in 1..=n {
        let mut alive = vec![true; n];
        loop {
            let mut changed = false;
            for v in 0..n {
                if alive[v] {
                    let deg = (0..n).filter(|&u| alive[u] && adj[v][u]).count();
                    if deg < k {
                        alive[v] = false;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for v in 0..n {
            if alive[v] {
                core[v] = k;
            }
        }
    }
    core
}

/// Triangles over node triples, by enumerating every triple.
pub fn triangle_density(adj: &[Vec<bool>]) -> f64 {
    let n = adj.len();
    if n < 3 {
        return 0.0;
    }
    let mut triangles = 0usize;
    let mut triples = 0usize;
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                triples += 1;
                if adj[a][b] && adj[b][c] && adj[a][c] {
                    triangles += 1;
                }
            }
        }
    }
    triangles as f64 / triples as f64
}

/// Dense co-membership Laplacian built entry by entry.
pub fn dense_laplacian(m: usize, hyperedges: &[Vec<usize>]) -> Vec<Vec<f64>> {
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for k in 0..m {
            if i != k {
                let shared = hyperedges
                    .iter()
                    .filter(|e| e.contains(&i) && e.contains(&k))
                    .count() as f64;
                l[i][k] = -shared;
                l[i][i] += shared;
            }
        }
    }
    l
}

/// Connected components of a dense symmetric pattern, by depth-first search.
pub fn component_count(adj: &[Vec<bool>]) -> usize {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for u in 0..n {
                if adj[v][u] && !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
    }
    count
}

/// `softmax(x)[k]` for a short vector.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn adj(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
        let g = Graph::from_unweighted(n, edges.iter().copied()).unwrap();
        adjacency(&g)
    }

    #[test]
    fn hand_examples() {
        let p3 = Graph::from_unweighted(3, [(0, 1), (1, 2)]).unwrap();
        let c = hop_closeness(&p3);
        assert_eq!(c[1], 1.0);
        assert!((c[0] - 2.0 / 3.0).abs() < 1e-15);
        let a = adj(4, &[(0, 1), (0, 2), (0, 3), (1, 2)]);
        assert!((local_clustering(&a)[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(coreness(&adj(4, &[(0, 1), (1, 2), (0, 2), (2, 3)])), vec![2, 2, 2, 1]);
        assert_eq!(coreness(&adj(4, &[(0, 1), (1, 2), (2, 3)])), vec![1; 4]);
        let k4_minus = adj(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)]);
        assert_eq!(triangle_density(&k4_minus), 0.5);
        assert_eq!(component_count(&adj(4, &[(0, 1)])), 3);
        let s = softmax(&[1.5, 0.1]);
        assert!((s[0] - 0.802).abs() < 1e-3);
    }
}
