//! Tape-based reverse-mode automatic differentiation over dense matrices.
//!
//! Every operation appends a node to a [`Tape`] holding its forward value
//! and enough context to run its backward rule. Nodes are appended after
//! their inputs, so walking the tape from the end is a reverse topological
//! order and each node is visited exactly once. Gradients flowing into a
//! node from several consumers are summed.
//!
//! ```
//! use thtn_core::linalg::Matrix;
//! use thtn_core::tensor::Tape;
//!
//! let mut tape = Tape::new();
//! let x = tape.param(Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap());
//! let sq = tape.mul(x, x).unwrap();
//! let loss = tape.sum(sq);
//! let grads = tape.backward(loss).unwrap();
//! assert_eq!(grads.get(x).unwrap().data(), &[2.0, 4.0]);
//! ```

mod check;
mod optim;
mod params;

pub use check::finite_diff_check;
pub use optim::{Adam, AdamConfig};
pub use params::ParamSet;

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Matrix};
use crate::rng::{Rng, RngExt};

/// Handle to a node on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    MatMulNt(usize, usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    Scale(usize, f64),
    AddRow(usize, usize),
    MulRow(usize, usize),
    AddCol(usize, usize),
    LeakyRelu(usize, f64),
    LayerNorm {
        x: usize,
        normalized: Matrix,
        inv_std: Vec<f64>,
    },
    Dropout {
        x: usize,
        mask: Vec<f64>,
    },
    ConcatCols(Vec<usize>),
    GatherRows {
        x: usize,
        index: Vec<usize>,
    },
    ScatterAddRows {
        x: usize,
        index: Vec<usize>,
    },
    GroupSoftmax {
        x: usize,
        groups: Vec<Option<usize>>,
        num_groups: usize,
    },
    HeadSum {
        x: usize,
        heads: usize,
    },
    HeadExpand {
        x: usize,
        width: usize,
    },
    SpMM {
        matrix: usize,
        x: usize,
    },
    Sum(usize),
    CrossEntropy {
        logits: usize,
        labels: Vec<usize>,
        rows: Vec<usize>,
        probs: Matrix,
    },
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
    requires_grad: bool,
}

/// Gradients of a scalar with respect to every node that requires them.
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&Matrix> {
        self.grads.get(var.0).and_then(Option::as_ref)
    }

    /// Gradient of `var`, or zeros shaped like `like` when nothing flowed.
    pub fn get_or_zeros(&self, var: Var, like: &Matrix) -> Matrix {
        self.get(var)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(like.rows(), like.cols()))
    }
}

/// Recording of a computation for reverse-mode differentiation.
#[derive(Debug, Clone, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    sparse: Vec<CsrMatrix>,
    empty_softmax_groups: usize,
}

fn shape_err(op: &'static str, detail: String) -> Error {
    Error::Shape { op, detail }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Matrix, op: Op, parents: &[usize]) -> Var {
        let requires_grad = parents.iter().any(|&p| self.nodes[p].requires_grad);
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Differentiable leaf.
    pub fn param(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: true,
        });
        Var(self.nodes.len() - 1)
    }

    /// Leaf that receives no gradient.
    pub fn constant(&mut self, value: Matrix) -> Var {
        self.nodes.push(Node {
            value,
            op: Op::Leaf,
            requires_grad: false,
        });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Matrix {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> (usize, usize) {
        self.nodes[var.0].value.shape()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    /// Softmax groups so far that had every entry masked out.
    pub fn empty_softmax_groups(&self) -> usize {
        self.empty_softmax_groups
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul(self.value(b))?;
        Ok(self.push(value, Op::MatMul(a.0, b.0), &[a.0, b.0]))
    }

    /// `a * b^T`.
    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = self.value(a).matmul_nt(self.value(b))?;
        Ok(self.push(value, Op::MatMulNt(a.0, b.0), &[a.0, b.0]))
    }

    /// `x * w`.
    pub fn linear(&mut self, x: Var, w: Var) -> Result<Var> {
        self.matmul(x, w)
    }

    /// `x * w + b` with `b` a `1 x out` row.
    pub fn linear_bias(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.matmul(x, w)?;
        self.add_row(xw, b)
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(shape_err(
                op,
                alloc::format!("{:?} vs {:?}", self.shape(a), self.shape(b)),
            ));
        }
        Ok(())
    }

    fn zip(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Matrix {
        let (r, c) = self.shape(a);
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| f(x, y))
            .collect();
        Matrix::from_vec(r, c, data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let value = self.zip(a, b, |x, y| x + y);
        Ok(self.push(value, Op::Add(a.0, b.0), &[a.0, b.0]))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let value = self.zip(a, b, |x, y| x - y);
        Ok(self.push(value, Op::Sub(a.0, b.0), &[a.0, b.0]))
    }

    /// Elementwise product.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let value = self.zip(a, b, |x, y| x * y);
        Ok(self.push(value, Op::Mul(a.0, b.0), &[a.0, b.0]))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.value(x).map(|v| v * factor);
        self.push(value, Op::Scale(x.0, factor), &[x.0])
    }

    fn row_broadcast(
        &self,
        op: &'static str,
        x: Var,
        row: Var,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Matrix> {
        let (r, c) = self.shape(x);
        if self.shape(row) != (1, c) {
            return Err(shape_err(
                op,
                alloc::format!("{:?} with row {:?}", (r, c), self.shape(row)),
            ));
        }
        let b = self.value(row).data();
        let mut out = self.value(x).clone();
        for i in 0..r {
            for (o, &bv) in out.row_mut(i).iter_mut().zip(b) {
                *o = f(*o, bv);
            }
        }
        Ok(out)
    }

    /// Adds a `1 x c` row to every row of `x`.
    pub fn add_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let value = self.row_broadcast("add_row", x, row, |a, b| a + b)?;
        Ok(self.push(value, Op::AddRow(x.0, row.0), &[x.0, row.0]))
    }

    /// Multiplies every row of `x` elementwise by a `1 x c` row.
    pub fn mul_row(&mut self, x: Var, row: Var) -> Result<Var> {
        let value = self.row_broadcast("mul_row", x, row, |a, b| a * b)?;
        Ok(self.push(value, Op::MulRow(x.0, row.0), &[x.0, row.0]))
    }

    /// Adds an `r x 1` column to every column of `x`.
    pub fn add_col(&mut self, x: Var, col: Var) -> Result<Var> {
        let (r, c) = self.shape(x);
        if self.shape(col) != (r, 1) {
            return Err(shape_err(
                "add_col",
                alloc::format!("{:?} with column {:?}", (r, c), self.shape(col)),
            ));
        }
        let mut value = self.value(x).clone();
        for i in 0..r {
            let b = self.value(col)[(i, 0)];
            value.row_mut(i).iter_mut().for_each(|v| *v += b);
        }
        Ok(self.push(value, Op::AddCol(x.0, col.0), &[x.0, col.0]))
    }

    pub fn leaky_relu(&mut self, x: Var, slope: f64) -> Var {
        let value = self.value(x).map(|v| if v > 0.0 { v } else { slope * v });
        self.push(value, Op::LeakyRelu(x.0, slope), &[x.0])
    }

    /// Per-row standardization `(x - mean) / sqrt(var + eps)` with the
    /// biased variance. Affine terms are applied separately.
    pub fn layer_norm(&mut self, x: Var, eps: f64) -> Var {
        let (r, c) = self.shape(x);
        let src = self.value(x);
        let mut normalized = Matrix::zeros(r, c);
        let mut inv_std = Vec::with_capacity(r);
        for i in 0..r {
            let row = src.row(i);
            let mean = row.iter().sum::<f64>() / c as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / c as f64;
            let s = 1.0 / libm::sqrt(var + eps);
            for (o, &v) in normalized.row_mut(i).iter_mut().zip(row) {
                *o = (v - mean) * s;
            }
            inv_std.push(s);
        }
        let value = normalized.clone();
        self.push(
            value,
            Op::LayerNorm {
                x: x.0,
                normalized,
                inv_std,
            },
            &[x.0],
        )
    }

    /// Inverted dropout. Identity when `training` is false or `p == 0`.
    pub fn dropout(&mut self, x: Var, p: f64, rng: &mut Rng, training: bool) -> Var {
        if !training || p <= 0.0 {
            return x;
        }
        let keep = 1.0 - p;
        let n = self.value(x).len();
        let mask: Vec<f64> = (0..n)
            .map(|_| {
                if keep > 0.0 && rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        let (r, c) = self.shape(x);
        let data = self
            .value(x)
            .data()
            .iter()
            .zip(&mask)
            .map(|(v, m)| v * m)
            .collect();
        let value = Matrix::from_vec(r, c, data).expect("same shape");
        self.push(value, Op::Dropout { x: x.0, mask }, &[x.0])
    }

    /// Concatenates along columns.
    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var> {
        let rows = parts.first().map_or(0, |&p| self.shape(p).0);
        if parts.iter().any(|&p| self.shape(p).0 != rows) {
            return Err(shape_err("concat_cols", "row counts differ".into()));
        }
        let cols: usize = parts.iter().map(|&p| self.shape(p).1).sum();
        let mut value = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.value(p).row(r);
                value.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        let ids: Vec<usize> = parts.iter().map(|p| p.0).collect();
        Ok(self.push(value, Op::ConcatCols(ids.clone()), &ids))
    }

    /// Row `k` of the output is row `index[k]` of `x`.
    pub fn gather_rows(&mut self, x: Var, index: &[usize]) -> Result<Var> {
        let rows = self.shape(x).0;
        if let Some(&bad) = index.iter().find(|&&i| i >= rows) {
            return Err(shape_err(
                "gather_rows",
                alloc::format!("index {bad} out of {rows} rows"),
            ));
        }
        let value = self.value(x).select_rows(index);
        Ok(self.push(
            value,
            Op::GatherRows {
                x: x.0,
                index: index.to_vec(),
            },
            &[x.0],
        ))
    }

    /// Output row `index[k]` accumulates row `k` of `x`.
    pub fn scatter_add_rows(&mut self, x: Var, index: &[usize], out_rows: usize) -> Result<Var> {
        let (r, c) = self.shape(x);
        if index.len() != r {
            return Err(shape_err(
                "scatter_add_rows",
                alloc::format!("{} indices for {} rows", index.len(), r),
            ));
        }
        if let Some(&bad) = index.iter().find(|&&i| i >= out_rows) {
            return Err(shape_err(
                "scatter_add_rows",
                alloc::format!("index {bad} out of {out_rows} rows"),
            ));
        }
        let mut value = Matrix::zeros(out_rows, c);
        for (k, &dst) in index.iter().enumerate() {
            let src = self.value(x).row(k).to_vec();
            for (o, v) in value.row_mut(dst).iter_mut().zip(src) {
                *o += v;
            }
        }
        Ok(self.push(
            value,
            Op::ScatterAddRows {
                x: x.0,
                index: index.to_vec(),
            },
            &[x.0],
        ))
    }

    fn group_softmax(&mut self, x: Var, groups: Vec<Option<usize>>, num_groups: usize) -> Var {
        let src = self.value(x);
        let mut max = vec![f64::NEG_INFINITY; num_groups];
        for (&v, g) in src.data().iter().zip(&groups) {
            if let Some(g) = *g {
                max[g] = max[g].max(v);
            }
        }
        let mut sum = vec![0.0; num_groups];
        let mut data: Vec<f64> = src
            .data()
            .iter()
            .zip(&groups)
            .map(|(&v, g)| match *g {
                Some(g) => {
                    let e = libm::exp(v - max[g]);
                    sum[g] += e;
                    e
                }
                None => 0.0,
            })
            .collect();
        for (v, g) in data.iter_mut().zip(&groups) {
            if let Some(g) = *g {
                *v /= sum[g];
            }
        }
        let (r, c) = src.shape();
        let value = Matrix::from_vec(r, c, data).expect("same shape");
        self.push(
            value,
            Op::GroupSoftmax {
                x: x.0,
                groups,
                num_groups,
            },
            &[x.0],
        )
    }

    /// Softmax over the unmasked entries along `axis` (1: within each row,
    /// 0: within each column). Masked entries get weight 0; a row or column
    /// with no unmasked entry becomes all zeros and is counted in
    /// [`Tape::empty_softmax_groups`].
    pub fn softmax_masked(&mut self, x: Var, mask: &[bool], axis: usize) -> Result<Var> {
        let (r, c) = self.shape(x);
        if mask.len() != r * c || axis > 1 {
            return Err(shape_err(
                "softmax_masked",
                alloc::format!("mask of {} for {}x{} along axis {}", mask.len(), r, c, axis),
            ));
        }
        let num_groups = if axis == 1 { r } else { c };
        let mut seen = vec![false; num_groups];
        let groups: Vec<Option<usize>> = (0..r * c)
            .map(|k| {
                mask[k].then(|| {
                    let g = if axis == 1 { k / c } else { k % c };
                    seen[g] = true;
                    g
                })
            })
            .collect();
        self.empty_softmax_groups += seen.iter().filter(|s| !**s).count();
        Ok(self.group_softmax(x, groups, num_groups))
    }

    /// Column-wise softmax of `x` (`E x H`) within row segments:
    /// `segment[e]` names the group of row `e`, so for each column the
    /// weights of rows sharing a segment sum to one.
    pub fn segment_softmax(&mut self, x: Var, segment: &[usize], num_segments: usize) -> Result<Var> {
        let (r, c) = self.shape(x);
        if segment.len() != r || segment.iter().any(|&s| s >= num_segments) {
            return Err(shape_err(
                "segment_softmax",
                alloc::format!("{} segment ids for {} rows", segment.len(), r),
            ));
        }
        let mut seen = vec![false; num_segments];
        for &s in segment {
            seen[s] = true;
        }
        self.empty_softmax_groups += c * seen.iter().filter(|s| !**s).count();
        let groups = (0..r * c)
            .map(|k| Some(segment[k / c] * c + k % c))
            .collect();
        Ok(self.group_softmax(x, groups, num_segments * c))
    }

    /// Sums each block of `width = cols / heads` consecutive columns,
    /// giving `rows x heads`.
    pub fn head_sum(&mut self, x: Var, heads: usize) -> Result<Var> {
        let (r, c) = self.shape(x);
        if heads == 0 || c % heads != 0 {
            return Err(shape_err(
                "head_sum",
                alloc::format!("{c} columns into {heads} heads"),
            ));
        }
        let width = c / heads;
        let mut value = Matrix::zeros(r, heads);
        for i in 0..r {
            let row = self.value(x).row(i);
            for h in 0..heads {
                value[(i, h)] = row[h * width..(h + 1) * width].iter().sum();
            }
        }
        Ok(self.push(value, Op::HeadSum { x: x.0, heads }, &[x.0]))
    }

    /// Repeats each column `width` times, `rows x heads -> rows x heads*width`.
    pub fn head_expand(&mut self, x: Var, width: usize) -> Var {
        let (r, h) = self.shape(x);
        let mut value = Matrix::zeros(r, h * width);
        for i in 0..r {
            for k in 0..h {
                let v = self.value(x)[(i, k)];
                value.row_mut(i)[k * width..(k + 1) * width]
                    .iter_mut()
                    .for_each(|o| *o = v);
            }
        }
        self.push(value, Op::HeadExpand { x: x.0, width }, &[x.0])
    }

    /// Constant sparse matrix times `x`.
    pub fn spmm(&mut self, matrix: &CsrMatrix, x: Var) -> Result<Var> {
        let value = matrix.matmul_dense(self.value(x))?;
        self.sparse.push(matrix.clone());
        let id = self.sparse.len() - 1;
        Ok(self.push(value, Op::SpMM { matrix: id, x: x.0 }, &[x.0]))
    }

    /// Sum of all entries, as `1 x 1`.
    pub fn sum(&mut self, x: Var) -> Var {
        let total = self.value(x).data().iter().sum();
        self.push(Matrix::filled(1, 1, total), Op::Sum(x.0), &[x.0])
    }

    /// Mean softmax cross-entropy over `rows`, as `1 x 1`.
    pub fn cross_entropy(&mut self, logits: Var, labels: &[usize], rows: &[usize]) -> Result<Var> {
        let (r, c) = self.shape(logits);
        if rows.is_empty() {
            return Err(Error::EmptyMask);
        }
        if labels.len() != r {
            return Err(shape_err(
                "cross_entropy",
                alloc::format!("{} labels for {} rows", labels.len(), r),
            ));
        }
        if let Some(&bad) = rows.iter().find(|&&i| i >= r || labels[i] >= c) {
            return Err(shape_err(
                "cross_entropy",
                alloc::format!("row {bad} or its label is out of range"),
            ));
        }
        let src = self.value(logits);
        let mut probs = Matrix::zeros(r, c);
        let mut total = 0.0;
        for &i in rows {
            let row = src.row(i);
            let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
            let z: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
            let log_z = max + libm::log(z);
            total += log_z - row[labels[i]];
            for (p, &v) in probs.row_mut(i).iter_mut().zip(row) {
                *p = libm::exp(v - log_z);
            }
        }
        let value = Matrix::filled(1, 1, total / rows.len() as f64);
        Ok(self.push(
            value,
            Op::CrossEntropy {
                logits: logits.0,
                labels: labels.to_vec(),
                rows: rows.to_vec(),
                probs,
            },
            &[logits.0],
        ))
    }

    /// Backpropagates from the `1 x 1` node `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.shape(loss) != (1, 1) {
            return Err(shape_err(
                "backward",
                alloc::format!("loss has shape {:?}", self.shape(loss)),
            ));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(Matrix::filled(1, 1, 1.0));
        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if node.requires_grad {
                self.propagate(idx, &g, &mut grads)?;
            }
            grads[idx] = Some(g);
        }
        for (idx, g) in grads.iter_mut().enumerate() {
            if !self.nodes[idx].requires_grad {
                *g = None;
            }
        }
        Ok(Gradients { grads })
    }

    fn accumulate(&self, grads: &mut [Option<Matrix>], idx: usize, delta: Matrix) {
        if !self.nodes[idx].requires_grad {
            return;
        }
        match &mut grads[idx] {
            Some(existing) => {
                for (e, d) in existing.data_mut().iter_mut().zip(delta.data()) {
                    *e += d;
                }
            }
            slot @ None => *slot = Some(delta),
        }
    }

    fn propagate(&self, idx: usize, g: &Matrix, grads: &mut [Option<Matrix>]) -> Result<()> {
        let node = &self.nodes[idx];
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                if self.nodes[*a].requires_grad {
                    self.accumulate(grads, *a, g.matmul_nt(vb)?);
                }
                if self.nodes[*b].requires_grad {
                    self.accumulate(grads, *b, va.matmul_tn(g)?);
                }
            }
            Op::MatMulNt(a, b) => {
                let (va, vb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                if self.nodes[*a].requires_grad {
                    self.accumulate(grads, *a, g.matmul(vb)?);
                }
                if self.nodes[*b].requires_grad {
                    self.accumulate(grads, *b, g.matmul_tn(va)?);
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                let da = elementwise(g, vb, |x, y| x * y);
                let db = elementwise(g, va, |x, y| x * y);
                self.accumulate(grads, *a, da);
                self.accumulate(grads, *b, db);
            }
            Op::Scale(x, f) => self.accumulate(grads, *x, g.map(|v| v * f)),
            Op::AddRow(x, row) => {
                self.accumulate(grads, *x, g.clone());
                self.accumulate(grads, *row, column_sums(g));
            }
            Op::MulRow(x, row) => {
                let vx = &self.nodes[*x].value;
                let vr = &self.nodes[*row].value;
                let mut dx = g.clone();
                for i in 0..dx.rows() {
                    for (d, &s) in dx.row_mut(i).iter_mut().zip(vr.data()) {
                        *d *= s;
                    }
                }
                self.accumulate(grads, *x, dx);
                self.accumulate(grads, *row, column_sums(&elementwise(g, vx, |a, b| a * b)));
            }
            Op::AddCol(x, col) => {
                self.accumulate(grads, *x, g.clone());
                let mut dc = Matrix::zeros(g.rows(), 1);
                for i in 0..g.rows() {
                    dc[(i, 0)] = g.row(i).iter().sum();
                }
                self.accumulate(grads, *col, dc);
            }
            Op::LeakyRelu(x, slope) => {
                let vx = &self.nodes[*x].value;
                let dx = elementwise(g, vx, |d, v| if v > 0.0 { d } else { slope * d });
                self.accumulate(grads, *x, dx);
            }
            Op::LayerNorm {
                x,
                normalized,
                inv_std,
            } => {
                let (r, c) = g.shape();
                let mut dx = Matrix::zeros(r, c);
                let n = c as f64;
                for i in 0..r {
                    let dy = g.row(i);
                    let xh = normalized.row(i);
                    let sum_dy: f64 = dy.iter().sum();
                    let sum_dy_xh: f64 = dy.iter().zip(xh).map(|(a, b)| a * b).sum();
                    for (k, o) in dx.row_mut(i).iter_mut().enumerate() {
                        *o = inv_std[i] / n * (n * dy[k] - sum_dy - xh[k] * sum_dy_xh);
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::Dropout { x, mask } => {
                let data = g.data().iter().zip(mask).map(|(d, m)| d * m).collect();
                self.accumulate(grads, *x, Matrix::from_vec(g.rows(), g.cols(), data)?);
            }
            Op::ConcatCols(parts) => {
                let mut offset = 0;
                for &p in parts {
                    let w = self.nodes[p].value.cols();
                    let mut dp = Matrix::zeros(g.rows(), w);
                    for i in 0..g.rows() {
                        dp.row_mut(i).copy_from_slice(&g.row(i)[offset..offset + w]);
                    }
                    offset += w;
                    self.accumulate(grads, p, dp);
                }
            }
            Op::GatherRows { x, index } => {
                let rows = self.nodes[*x].value.rows();
                let mut dx = Matrix::zeros(rows, g.cols());
                for (k, &src) in index.iter().enumerate() {
                    for (o, &v) in dx.row_mut(src).iter_mut().zip(g.row(k)) {
                        *o += v;
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::ScatterAddRows { x, index } => {
                self.accumulate(grads, *x, g.select_rows(index));
            }
            Op::GroupSoftmax {
                x,
                groups,
                num_groups,
            } => {
                let y = &node.value;
                let mut dot = vec![0.0; *num_groups];
                for ((&yv, &gv), grp) in y.data().iter().zip(g.data()).zip(groups) {
                    if let Some(grp) = *grp {
                        dot[grp] += yv * gv;
                    }
                }
                let data = y
                    .data()
                    .iter()
                    .zip(g.data())
                    .zip(groups)
                    .map(|((&yv, &gv), grp)| match *grp {
                        Some(grp) => yv * (gv - dot[grp]),
                        None => 0.0,
                    })
                    .collect();
                self.accumulate(grads, *x, Matrix::from_vec(y.rows(), y.cols(), data)?);
            }
            Op::HeadSum { x, heads } => {
                let (r, c) = self.nodes[*x].value.shape();
                let width = c / heads;
                let mut dx = Matrix::zeros(r, c);
                for i in 0..r {
                    for h in 0..*heads {
                        let v = g[(i, h)];
                        dx.row_mut(i)[h * width..(h + 1) * width]
                            .iter_mut()
                            .for_each(|o| *o = v);
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::HeadExpand { x, width } => {
                let (r, h) = self.nodes[*x].value.shape();
                let mut dx = Matrix::zeros(r, h);
                for i in 0..r {
                    for k in 0..h {
                        dx[(i, k)] = g.row(i)[k * width..(k + 1) * width].iter().sum();
                    }
                }
                self.accumulate(grads, *x, dx);
            }
            Op::SpMM { matrix, x } => {
                let dx = self.sparse[*matrix].transpose().matmul_dense(g)?;
                self.accumulate(grads, *x, dx);
            }
            Op::Sum(x) => {
                let (r, c) = self.nodes[*x].value.shape();
                self.accumulate(grads, *x, Matrix::filled(r, c, g[(0, 0)]));
            }
            Op::CrossEntropy {
                logits,
                labels,
                rows,
                probs,
            } => {
                let (r, c) = probs.shape();
                let scale = g[(0, 0)] / rows.len() as f64;
                let mut dx = Matrix::zeros(r, c);
                for &i in rows {
                    for (o, &p) in dx.row_mut(i).iter_mut().zip(probs.row(i)) {
                        *o = p * scale;
                    }
                    dx[(i, labels[i])] -= scale;
                }
                self.accumulate(grads, *logits, dx);
            }
        }
        Ok(())
    }
}

fn elementwise(a: &Matrix, b: &Matrix, f: impl Fn(f64, f64) -> f64) -> Matrix {
    let data = a.data().iter().zip(b.data()).map(|(&x, &y)| f(x, y)).collect();
    Matrix::from_vec(a.rows(), a.cols(), data).expect("same shape")
}

fn column_sums(g: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(1, g.cols());
    for i in 0..g.rows() {
        for (o, &v) in out.row_mut(0).iter_mut().zip(g.row(i)) {
            *o += v;
        }
    }
    out
}
