//! Hypergraph Laplacian eigenvectors used as positional features.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::hypergraph::{Hypergraph, UnionFind};
use crate::linalg::{lanczos_smallest, symmetric_eigen, CsrMatrix, Matrix};
use crate::rng::{Rng, RngExt};

/// Components above this size use Lanczos instead of the dense solver.
pub const DENSE_LIMIT: usize = 2048;

/// Residual target for the iterative solver.
pub const LANCZOS_TOL: f64 = 1e-9;

/// Clique-expansion Laplacian `L = D - A`, where `A_ik` counts the
/// hyperedges containing both `i` and `k`.
pub fn hypergraph_laplacian(hypergraph: &Hypergraph) -> CsrMatrix {
    let m = hypergraph.num_nodes();
    let mut triplets = Vec::new();
    let mut degree = vec![0.0; m];
    for members in hypergraph.hyperedges() {
        for (a, &i) in members.iter().enumerate() {
            for &k in &members[a + 1..] {
                triplets.push((i, k, -1.0));
                triplets.push((k, i, -1.0));
                degree[i] += 1.0;
                degree[k] += 1.0;
            }
        }
    }
    for (i, d) in degree.into_iter().enumerate() {
        triplets.push((i, i, d));
    }
    CsrMatrix::from_triplets(m, m, triplets)
}

/// Low end of the Laplacian spectrum.
#[derive(Debug, Clone)]
pub struct LaplacianEigen {
    /// Ascending; shorter than `k` only when `m < k`.
    pub values: Vec<f64>,
    /// `m x k`, zero-padded columns past `values.len()`.
    pub vectors: Matrix,
}

/// The `k` eigenpairs of smallest eigenvalue.
///
/// The Laplacian is block diagonal over connected components, so each
/// component is solved on its own (dense up to [`DENSE_LIMIT`] nodes,
/// Lanczos above) and the pieces are merged. Zero eigenvalues therefore come
/// out as one component indicator each. Every column is flipped so that its
/// first entry of significant magnitude is positive.
pub fn laplacian_eigenvectors(laplacian: &CsrMatrix, k: usize) -> Result<LaplacianEigen> {
    laplacian_eigenvectors_with(laplacian, k, DENSE_LIMIT)
}

pub fn laplacian_eigenvectors_with(
    laplacian: &CsrMatrix,
    k: usize,
    dense_limit: usize,
) -> Result<LaplacianEigen> {
    let m = laplacian.rows();
    if k == 0 || m == 0 {
        return Ok(LaplacianEigen {
            values: Vec::new(),
            vectors: Matrix::zeros(m, k),
        });
    }
    let components = components(laplacian);
    // (eigenvalue, component, rank within component, global vector)
    let mut pairs: Vec<(f64, usize, usize, Vec<f64>)> = Vec::new();
    for (ci, nodes) in components.iter().enumerate() {
        let sub = laplacian.principal_submatrix(nodes);
        let want = k.min(nodes.len());
        let eig = if nodes.len() <= dense_limit {
            symmetric_eigen(&sub.to_dense())?
        } else {
            lanczos_smallest(&sub, want, LANCZOS_TOL, ci as u64)?
        };
        for r in 0..want {
            let mut v = vec![0.0; m];
            for (l, &g) in nodes.iter().enumerate() {
                v[g] = eig.vectors[(l, r)];
            }
            pairs.push((eig.values[r], ci, r, v));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    pairs.truncate(k);
    let mut vectors = Matrix::zeros(m, k);
    let mut values = Vec::with_capacity(pairs.len());
    for (c, (value, _, _, mut v)) in pairs.into_iter().enumerate() {
        fix_sign(&mut v);
        for (r, x) in v.into_iter().enumerate() {
            vectors[(r, c)] = x;
        }
        values.push(value);
    }
    Ok(LaplacianEigen { values, vectors })
}

fn fix_sign(v: &mut [f64]) {
    let scale = v.iter().fold(0.0f64, |a, &x| a.max(libm::fabs(x)));
    if scale == 0.0 {
        return;
    }
    if let Some(&first) = v.iter().find(|&&x| libm::fabs(x) > 1e-8 * scale) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Node sets of the connected components of the matrix's sparsity graph,
/// each ascending, ordered by smallest node.
pub fn components(matrix: &CsrMatrix) -> Vec<Vec<usize>> {
    let n = matrix.rows();
    let mut uf = UnionFind::new(n);
    for r in 0..n {
        for (c, v) in matrix.row(r) {
            if c != r && v != 0.0 {
                uf.union(r, c);
            }
        }
    }
    let mut index = vec![usize::MAX; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for v in 0..n {
        let root = uf.find(v);
        if index[root] == usize::MAX {
            index[root] = out.len();
            out.push(Vec::new());
        }
        out[index[root]].push(v);
    }
    out
}

/// Multiplies each column by an independent random sign.
pub fn sign_flip(ev: &Matrix, rng: &mut Rng) -> Matrix {
    let signs: Vec<f64> = (0..ev.cols())
        .map(|_| if rng.gen_bool(0.5) { -1.0 } else { 1.0 })
        .collect();
    apply_signs(ev, &signs)
}

/// Multiplies column `c` by `signs[c]`.
pub fn apply_signs(ev: &Matrix, signs: &[f64]) -> Matrix {
    let mut out = ev.clone();
    for r in 0..ev.rows() {
        for (x, s) in out.row_mut(r).iter_mut().zip(signs) {
            *x *= s;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn single_pair_laplacian() {
        let h = Hypergraph::from_hyperedges(2, vec![vec![0, 1]]).unwrap();
        let l = hypergraph_laplacian(&h).to_dense();
        assert_eq!(l.data(), &[1.0, -1.0, -1.0, 1.0]);
        let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), 2).unwrap();
        assert!(eig.values[0].abs() < 1e-12);
        assert!((eig.values[1] - 2.0).abs() < 1e-12);
        let c = eig.vectors.column(0);
        assert!((c[0] - c[1]).abs() < 1e-12 && c[0] > 0.0);
    }

    #[test]
    fn repeated_hyperedge_counts_twice() {
        let h = Hypergraph::from_hyperedges(2, vec![vec![0, 1], vec![0, 1]]).unwrap();
        assert_eq!(
            hypergraph_laplacian(&h).to_dense().data(),
            &[2.0, -2.0, -2.0, 2.0]
        );
    }

    #[test]
    fn disjoint_blocks_have_two_zero_eigenvalues() {
        let h = Hypergraph::from_hyperedges(4, vec![vec![0, 1], vec![2, 3]]).unwrap();
        let l = hypergraph_laplacian(&h);
        let eig = laplacian_eigenvectors(&l, 4).unwrap();
        let zeros = eig.values.iter().filter(|v| v.abs() < 1e-9).count();
        assert_eq!(zeros, 2);
        // independent dense route on the full matrix
        let dense = symmetric_eigen(&l.to_dense()).unwrap();
        for (a, b) in eig.values.iter().zip(&dense.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_k_and_padding() {
        let h = Hypergraph::from_hyperedges(3, vec![vec![0, 1, 2]]).unwrap();
        let l = hypergraph_laplacian(&h);
        let eig = laplacian_eigenvectors(&l, 0).unwrap();
        assert_eq!(eig.vectors.shape(), (3, 0));
        let eig = laplacian_eigenvectors(&l, 5).unwrap();
        assert_eq!(eig.vectors.shape(), (3, 5));
        assert_eq!(eig.values.len(), 3);
        assert!(eig.vectors.column(4).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn sign_flip_is_deterministic_and_orthonormal() {
        let h = Hypergraph::from_hyperedges(5, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4]])
            .unwrap();
        let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), 3).unwrap();
        let a = sign_flip(&eig.vectors, &mut seeded(9));
        let b = sign_flip(&eig.vectors, &mut seeded(9));
        assert_eq!(a, b);
        let all = apply_signs(&eig.vectors, &[-1.0; 3]);
        assert_eq!(all, eig.vectors.map(|x| -x));
        assert_eq!(apply_signs(&eig.vectors, &[1.0; 3]), eig.vectors);
        for i in 0..3 {
            for j in 0..3 {
                let dot: f64 = a.column(i).iter().zip(a.column(j)).map(|(x, y)| x * y).sum();
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lanczos_path_matches_dense_path() {
        let mut edges = Vec::new();
        for i in 0..119 {
            edges.push(vec![i, i + 1]);
        }
        edges.push(vec![0, 40, 80]);
        let h = Hypergraph::from_hyperedges(120, edges).unwrap();
        let l = hypergraph_laplacian(&h);
        let dense = laplacian_eigenvectors_with(&l, 4, usize::MAX).unwrap();
        let sparse = laplacian_eigenvectors_with(&l, 4, 10).unwrap();
        for (a, b) in dense.values.iter().zip(&sparse.values) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }
}
