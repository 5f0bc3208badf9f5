//! The topology-guided hypergraph transformer.
//!
//! Input node features are projected to the model width and summed with
//! four optional encodings: a two-layer GCN over the input graph (`lse`),
//! embeddings of closeness (`ce`) and uniqueness (`ue`) scores, and a
//! projection of Laplacian eigenvectors (`pe`). Each layer then runs
//!
//! 1. node-to-hyperedge attention: hyperedge `j` attends over its members
//!    with logits `sum_c lrelu((W2 p_i) * (W3 q_j))_c / sqrt(d_k) + omega_ji`;
//! 2. hyperedge-to-node attention: node `i` attends over its hyperedges with
//!    logits `sum_c lrelu((W5 q_j) * (W6 p_i))_c / sqrt(d_k) + upsilon_ij`,
//!
//! each followed by residual + layer norm, a feed-forward block, and a
//! second residual + layer norm. Logits are `P W_S^T`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::hypergraph::Hypergraph;
use crate::linalg::{CsrMatrix, Matrix};
use crate::measures::{BiasFlags, StructuralBias};
use crate::rng::{Rng, RngExt};
use crate::spectral::sign_flip;
use crate::tensor::{ParamSet, Tape, Var};

/// Ablation switches. Each encoding and each bias measure can be turned
/// off independently; `normalize_bias` selects min-max scaled measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Flags {
    pub pe: bool,
    pub ce: bool,
    pub ue: bool,
    pub lse: bool,
    pub lc: bool,
    pub kc: bool,
    pub hd: bool,
    pub cc: bool,
    pub normalize_bias: bool,
}

impl Default for Flags {
    fn default() -> Self {
        Self {
            pe: true,
            ce: true,
            ue: true,
            lse: true,
            lc: true,
            kc: true,
            hd: true,
            cc: true,
            normalize_bias: false,
        }
    }
}

impl Flags {
    pub fn bias(&self) -> BiasFlags {
        BiasFlags {
            lc: self.lc,
            kc: self.kc,
            hd: self.hd,
            cc: self.cc,
        }
    }

    /// The eight ablation switches by name.
    pub const ABLATIONS: [&'static str; 8] = ["pe", "ce", "ue", "lse", "lc", "kc", "hd", "cc"];

    pub fn with(mut self, name: &str, on: bool) -> Result<Self> {
        match name {
            "pe" => self.pe = on,
            "ce" => self.ce = on,
            "ue" => self.ue = on,
            "lse" => self.lse = on,
            "lc" => self.lc = on,
            "kc" => self.kc = on,
            "hd" => self.hd = on,
            "cc" => self.cc = on,
            "normalize_bias" => self.normalize_bias = on,
            other => return Err(Error::Invalid(format!("unknown flag `{other}`"))),
        }
        Ok(self)
    }
}

/// How closeness and uniqueness scores become vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarEncoder {
    /// `buckets` uniform bins over `[0, 1]`, one learnable vector each.
    #[default]
    Bucket,
    /// `s * w + b`.
    Linear,
}

/// Where the LeakyReLU sits in the attention logit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogitActivation {
    /// On each component of the elementwise product, before the sum.
    #[default]
    Elementwise,
    /// On the summed score.
    AfterSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub d: usize,
    pub heads: usize,
    pub layers: usize,
    pub dropout: f64,
    pub leaky_slope: f64,
    pub buckets: usize,
    pub scalar_encoder: ScalarEncoder,
    pub logit_activation: LogitActivation,
    pub layer_norm_eps: f64,
    pub flags: Flags,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d: 64,
            heads: 4,
            layers: 1,
            dropout: 0.5,
            leaky_slope: 0.01,
            buckets: 32,
            scalar_encoder: ScalarEncoder::Bucket,
            logit_activation: LogitActivation::Elementwise,
            layer_norm_eps: 1e-9,
            flags: Flags::default(),
        }
    }
}

impl ModelConfig {
    pub fn head_width(&self) -> usize {
        self.d / self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.heads == 0 || !self.d.is_multiple_of(self.heads) {
            return Err(Error::Invalid(format!(
                "model width {} must be a positive multiple of heads {}",
                self.d, self.heads
            )));
        }
        if self.layers == 0 {
            return Err(Error::Invalid("at least one layer is required".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Invalid(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.buckets == 0 {
            return Err(Error::Invalid("buckets must be positive".into()));
        }
        Ok(())
    }
}

/// Everything the network reads besides its parameters.
#[derive(Debug, Clone)]
pub struct ModelInputs {
    pub features: Matrix,
    /// `D^-1/2 (A + I) D^-1/2` of the input graph.
    pub gcn_adjacency: CsrMatrix,
    pub closeness: Vec<f64>,
    pub uniqueness: Vec<f64>,
    /// `m x k` Laplacian eigenvectors.
    pub eigenvectors: Matrix,
    pub num_edges: usize,
    /// Hyperedge of each incidence entry.
    pub edge_of: Vec<usize>,
    /// Node of each incidence entry.
    pub node_of: Vec<usize>,
    pub bias: StructuralBias,
}

impl ModelInputs {
    pub fn new(
        graph: &Graph,
        features: Matrix,
        hypergraph: &Hypergraph,
        bias: StructuralBias,
        closeness: Vec<f64>,
        uniqueness: Vec<f64>,
        eigenvectors: Matrix,
    ) -> Result<Self> {
        let m = graph.num_nodes();
        let check = |what: &str, rows: usize| {
            if rows != m {
                Err(Error::Shape {
                    op: "model inputs",
                    detail: format!("{what} has {rows} rows for {m} nodes"),
                })
            } else {
                Ok(())
            }
        };
        check("features", features.rows())?;
        check("closeness", closeness.len())?;
        check("uniqueness", uniqueness.len())?;
        check("eigenvectors", eigenvectors.rows())?;
        check("hypergraph", hypergraph.num_nodes())?;
        if !features.is_finite() {
            return Err(Error::NonFinite("features"));
        }
        let pairs: Vec<(usize, usize)> = hypergraph
            .incidence()
            .iter()
            .map(|inc| (inc.edge, inc.node))
            .collect();
        if pairs != bias.pairs {
            return Err(Error::Invalid(
                "bias support differs from the hypergraph incidence".into(),
            ));
        }
        if let Some(j) = hypergraph.hyperedges().iter().position(Vec::is_empty) {
            return Err(Error::Invalid(format!("hyperedge {j} has no members")));
        }
        if let Some(i) = (0..m).find(|&i| hypergraph.node_incidence(i).is_empty()) {
            return Err(Error::Invalid(format!("node {i} belongs to no hyperedge")));
        }
        Ok(Self {
            features,
            gcn_adjacency: gcn_adjacency(graph),
            closeness,
            uniqueness,
            eigenvectors,
            num_edges: hypergraph.num_edges(),
            edge_of: pairs.iter().map(|p| p.0).collect(),
            node_of: pairs.iter().map(|p| p.1).collect(),
            bias,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.features.rows()
    }
}

/// Symmetrically normalized adjacency with self loops, using edge weights.
pub fn gcn_adjacency(graph: &Graph) -> CsrMatrix {
    let n = graph.num_nodes();
    let degree: Vec<f64> = (0..n).map(|v| graph.weighted_degree(v) + 1.0).collect();
    let inv_sqrt: Vec<f64> = degree.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
    let mut triplets = Vec::with_capacity(n + 2 * graph.num_edges());
    for v in 0..n {
        triplets.push((v, v, inv_sqrt[v] * inv_sqrt[v]));
    }
    for e in graph.edges() {
        let w = e.weight * inv_sqrt[e.u] * inv_sqrt[e.v];
        triplets.push((e.u, e.v, w));
        triplets.push((e.v, e.u, w));
    }
    CsrMatrix::from_triplets(n, n, triplets)
}

/// Bin index of a score in `[0, 1]`.
pub fn bucketize(score: f64, buckets: usize) -> usize {
    let s = score.clamp(0.0, 1.0);
    ((s * buckets as f64) as usize).min(buckets - 1)
}

/// Shapes of the network; parameters live in a separate [`ParamSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub num_features: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    pub num_eigenvectors: usize,
}

/// Values recorded by one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub logits: Var,
    /// Node representations after the last layer.
    pub nodes: Var,
    /// Hyperedge representations after the last layer.
    pub hyperedges: Var,
    /// Per layer, `E x H` node-to-hyperedge attention weights (incidence order).
    pub edge_attention: Vec<Var>,
    /// Per layer, `E x H` hyperedge-to-node attention weights.
    pub node_attention: Vec<Var>,
}

fn xavier(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    let bound = libm::sqrt(6.0 / (rows + cols) as f64);
    let data = (0..rows * cols)
        .map(|_| rng.gen_range(-bound..bound))
        .collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

struct Lookup<'a> {
    names: &'a ParamSet,
    vars: &'a [Var],
}

impl Lookup<'_> {
    fn get(&self, name: &str) -> Result<Var> {
        self.names
            .index_of(name)
            .map(|i| self.vars[i])
            .ok_or_else(|| Error::Invalid(format!("missing parameter `{name}`")))
    }
}

impl Model {
    pub fn new(
        config: ModelConfig,
        num_features: usize,
        num_classes: usize,
        num_edges: usize,
        num_eigenvectors: usize,
    ) -> Result<Self> {
        config.validate()?;
        if num_classes == 0 {
            return Err(Error::Invalid("no classes".into()));
        }
        Ok(Self {
            config,
            num_features,
            num_classes,
            num_edges,
            num_eigenvectors,
        })
    }

    /// Freshly initialized parameters (Xavier-uniform weights, zero biases,
    /// unit layer-norm gains).
    pub fn init_params(&self, rng: &mut Rng) -> ParamSet {
        let d = self.config.d;
        let f = self.num_features;
        let mut p = ParamSet::new();
        p.insert("input.w", xavier(f, d, rng));
        p.insert("input.b", Matrix::zeros(1, d));
        p.insert("gcn.w1", xavier(f, d, rng));
        p.insert("gcn.w2", xavier(d, d, rng));
        for enc in ["centrality", "uniqueness"] {
            match self.config.scalar_encoder {
                ScalarEncoder::Bucket => {
                    p.insert(format!("{enc}.table"), xavier(self.config.buckets, d, rng));
                }
                ScalarEncoder::Linear => {
                    p.insert(format!("{enc}.w"), xavier(1, d, rng));
                    p.insert(format!("{enc}.b"), Matrix::zeros(1, d));
                }
            }
        }
        p.insert("position.w", xavier(self.num_eigenvectors, d, rng));
        p.insert("edge.embed", xavier(self.num_edges, d, rng));
        for l in 0..self.config.layers {
            for (block, names) in [("n2h", ["w1", "w2", "w3"]), ("h2n", ["w4", "w5", "w6"])] {
                for w in names {
                    p.insert(format!("l{l}.{block}.{w}"), xavier(d, d, rng));
                }
                p.insert(format!("l{l}.{block}.ln1.g"), Matrix::filled(1, d, 1.0));
                p.insert(format!("l{l}.{block}.ln1.b"), Matrix::zeros(1, d));
                p.insert(format!("l{l}.{block}.ffn.w1"), xavier(d, 2 * d, rng));
                p.insert(format!("l{l}.{block}.ffn.b1"), Matrix::zeros(1, 2 * d));
                p.insert(format!("l{l}.{block}.ffn.w2"), xavier(2 * d, d, rng));
                p.insert(format!("l{l}.{block}.ffn.b2"), Matrix::zeros(1, d));
                p.insert(format!("l{l}.{block}.ln2.g"), Matrix::filled(1, d, 1.0));
                p.insert(format!("l{l}.{block}.ln2.b"), Matrix::zeros(1, d));
            }
        }
        p.insert("out.w", xavier(self.num_classes, d, rng));
        p
    }

    /// Names of the parameters that only feed the given encoding flag.
    pub fn encoding_params(&self, flag: &str) -> Vec<String> {
        let scalar = |enc: &str| match self.config.scalar_encoder {
            ScalarEncoder::Bucket => vec![format!("{enc}.table")],
            ScalarEncoder::Linear => vec![format!("{enc}.w"), format!("{enc}.b")],
        };
        match flag {
            "pe" => vec!["position.w".into()],
            "ce" => scalar("centrality"),
            "ue" => scalar("uniqueness"),
            "lse" => vec!["gcn.w1".into(), "gcn.w2".into()],
            _ => Vec::new(),
        }
    }

    fn check_inputs(&self, inputs: &ModelInputs) -> Result<()> {
        if inputs.features.cols() != self.num_features
            || inputs.eigenvectors.cols() != self.num_eigenvectors
            || inputs.num_edges != self.num_edges
        {
            return Err(Error::Shape {
                op: "forward",
                detail: format!(
                    "model expects {} features, {} eigenvectors, {} hyperedges; got {}, {}, {}",
                    self.num_features,
                    self.num_eigenvectors,
                    self.num_edges,
                    inputs.features.cols(),
                    inputs.eigenvectors.cols(),
                    inputs.num_edges
                ),
            });
        }
        Ok(())
    }

    fn scalar_embedding(
        &self,
        tape: &mut Tape,
        p: &Lookup,
        name: &str,
        scores: &[f64],
    ) -> Result<Var> {
        match self.config.scalar_encoder {
            ScalarEncoder::Bucket => {
                let idx: Vec<usize> = scores
                    .iter()
                    .map(|&s| bucketize(s, self.config.buckets))
                    .collect();
                tape.gather_rows(p.get(&format!("{name}.table"))?, &idx)
            }
            ScalarEncoder::Linear => {
                let col = Matrix::from_vec(scores.len(), 1, scores.to_vec())?;
                let c = tape.constant(col);
                let w = p.get(&format!("{name}.w"))?;
                let b = p.get(&format!("{name}.b"))?;
                tape.linear_bias(c, w, b)
            }
        }
    }

    /// Summed input encodings, `m x d`.
    pub fn encode_inputs(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        vars: &[Var],
        inputs: &ModelInputs,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        self.check_inputs(inputs)?;
        let p = Lookup { names: params, vars };
        let flags = self.config.flags;
        let slope = self.config.leaky_slope;
        let x0 = tape.constant(inputs.features.clone());
        let mut x = tape.linear_bias(x0, p.get("input.w")?, p.get("input.b")?)?;
        if flags.lse {
            let h = tape.spmm(&inputs.gcn_adjacency, x0)?;
            let h = tape.matmul(h, p.get("gcn.w1")?)?;
            let h = tape.leaky_relu(h, slope);
            let h = tape.spmm(&inputs.gcn_adjacency, h)?;
            let h = tape.matmul(h, p.get("gcn.w2")?)?;
            let lse = tape.leaky_relu(h, slope);
            x = tape.add(x, lse)?;
        }
        if flags.ce {
            let ce = self.scalar_embedding(tape, &p, "centrality", &inputs.closeness)?;
            x = tape.add(x, ce)?;
        }
        if flags.ue {
            let ue = self.scalar_embedding(tape, &p, "uniqueness", &inputs.uniqueness)?;
            x = tape.add(x, ue)?;
        }
        // drawn even when unused so the dropout stream does not depend on `pe`
        let flipped = training.then(|| sign_flip(&inputs.eigenvectors, rng));
        if flags.pe {
            let ev = tape.constant(flipped.unwrap_or_else(|| inputs.eigenvectors.clone()));
            let pe = tape.matmul(ev, p.get("position.w")?)?;
            x = tape.add(x, pe)?;
        }
        Ok(x)
    }

    /// Structure-biased attention of `targets` over `sources` along the
    /// incidence list. `target_of[e]` / `source_of[e]` name the endpoints of
    /// entry `e`. Returns the aggregated `targets x d` messages and the
    /// `E x H` weights.
    #[allow(clippy::too_many_arguments)]
    fn attend(
        &self,
        tape: &mut Tape,
        sources: Var,
        targets: Var,
        source_of: &[usize],
        target_of: &[usize],
        num_targets: usize,
        bias: &[f64],
        w_value: Var,
        w_source: Var,
        w_target: Var,
        training: bool,
        rng: &mut Rng,
    ) -> Result<(Var, Var)> {
        let cfg = &self.config;
        let width = cfg.head_width();
        let ks = tape.matmul(sources, w_source)?;
        let kt = tape.matmul(targets, w_target)?;
        let ks = tape.gather_rows(ks, source_of)?;
        let kt = tape.gather_rows(kt, target_of)?;
        let prod = tape.mul(ks, kt)?;
        let scores = match cfg.logit_activation {
            LogitActivation::Elementwise => {
                let act = tape.leaky_relu(prod, cfg.leaky_slope);
                tape.head_sum(act, cfg.heads)?
            }
            LogitActivation::AfterSum => {
                let s = tape.head_sum(prod, cfg.heads)?;
                tape.leaky_relu(s, cfg.leaky_slope)
            }
        };
        let scores = tape.scale(scores, 1.0 / libm::sqrt(width as f64));
        let b = tape.constant(Matrix::from_vec(bias.len(), 1, bias.to_vec())?);
        let logits = tape.add_col(scores, b)?;
        let weights = tape.segment_softmax(logits, target_of, num_targets)?;
        let dropped = tape.dropout(weights, cfg.dropout, rng, training);
        let expanded = tape.head_expand(dropped, width);
        let values = tape.matmul(sources, w_value)?;
        let values = tape.gather_rows(values, source_of)?;
        let messages = tape.mul(expanded, values)?;
        let agg = tape.scatter_add_rows(messages, target_of, num_targets)?;
        Ok((tape.leaky_relu(agg, cfg.leaky_slope), weights))
    }

    /// Residual + layer norm, feed-forward, residual + layer norm.
    fn post_block(
        &self,
        tape: &mut Tape,
        p: &Lookup,
        prefix: &str,
        residual: Var,
        update: Var,
        training: bool,
        rng: &mut Rng,
    ) -> Result<Var> {
        let cfg = &self.config;
        let s = tape.add(residual, update)?;
        let h = self.norm(tape, p, &format!("{prefix}.ln1"), s)?;
        let f = tape.linear_bias(h, p.get(&format!("{prefix}.ffn.w1"))?, p.get(&format!("{prefix}.ffn.b1"))?)?;
        let f = tape.leaky_relu(f, cfg.leaky_slope);
        let f = tape.dropout(f, cfg.dropout, rng, training);
        let f = tape.linear_bias(f, p.get(&format!("{prefix}.ffn.w2"))?, p.get(&format!("{prefix}.ffn.b2"))?)?;
        let s = tape.add(h, f)?;
        self.norm(tape, p, &format!("{prefix}.ln2"), s)
    }

    fn norm(&self, tape: &mut Tape, p: &Lookup, prefix: &str, x: Var) -> Result<Var> {
        let n = tape.layer_norm(x, self.config.layer_norm_eps);
        let g = tape.mul_row(n, p.get(&format!("{prefix}.g"))?)?;
        tape.add_row(g, p.get(&format!("{prefix}.b"))?)
    }

    /// Full forward pass. `vars[k]` is the tape variable of parameter slot
    /// `k` of `params`.
    pub fn forward(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        vars: &[Var],
        inputs: &ModelInputs,
        training: bool,
        rng: &mut Rng,
    ) -> Result<ForwardOutput> {
        let x = self.encode_inputs(tape, params, vars, inputs, training, rng)?;
        let p = Lookup { names: params, vars };
        let flags = self.config.flags.bias();
        let omega = inputs.bias.omega(flags);
        let upsilon = inputs.bias.upsilon(flags);
        let m = inputs.num_nodes();
        let n = inputs.num_edges;

        let mut nodes = x;
        let mut edges = p.get("edge.embed")?;
        let mut edge_attention = Vec::new();
        let mut node_attention = Vec::new();
        for l in 0..self.config.layers {
            let pre = format!("l{l}.n2h");
            let (agg, w) = self.attend(
                tape,
                nodes,
                edges,
                &inputs.node_of,
                &inputs.edge_of,
                n,
                &omega,
                p.get(&format!("{pre}.w1"))?,
                p.get(&format!("{pre}.w2"))?,
                p.get(&format!("{pre}.w3"))?,
                training,
                rng,
            )?;
            edge_attention.push(w);
            edges = self.post_block(tape, &p, &pre, edges, agg, training, rng)?;

            let pre = format!("l{l}.h2n");
            let (agg, w) = self.attend(
                tape,
                edges,
                nodes,
                &inputs.edge_of,
                &inputs.node_of,
                m,
                &upsilon,
                p.get(&format!("{pre}.w4"))?,
                p.get(&format!("{pre}.w5"))?,
                p.get(&format!("{pre}.w6"))?,
                training,
                rng,
            )?;
            node_attention.push(w);
            nodes = self.post_block(tape, &p, &pre, nodes, agg, training, rng)?;
        }
        let logits = tape.matmul_nt(nodes, p.get("out.w")?)?;
        Ok(ForwardOutput {
            logits,
            nodes,
            hyperedges: edges,
            edge_attention,
            node_attention,
        })
    }

    /// Registers `params` on `tape` and runs [`Model::forward`].
    pub fn run(
        &self,
        tape: &mut Tape,
        params: &ParamSet,
        inputs: &ModelInputs,
        training: bool,
        rng: &mut Rng,
    ) -> Result<(Vec<Var>, ForwardOutput)> {
        let vars: Vec<Var> = params.values().iter().map(|v| tape.param(v.clone())).collect();
        let out = self.forward(tape, params, &vars, inputs, training, rng)?;
        Ok((vars, out))
    }

    /// Evaluation-mode logits as a plain matrix.
    pub fn predict(&self, params: &ParamSet, inputs: &ModelInputs) -> Result<Matrix> {
        let mut tape = Tape::new();
        let mut rng = crate::rng::seeded(0);
        let vars: Vec<Var> = params
            .values()
            .iter()
            .map(|v| tape.constant(v.clone()))
            .collect();
        let out = self.forward(&mut tape, params, &vars, inputs, false, &mut rng)?;
        Ok(tape.value(out.logits).clone())
    }
}

/// Mean cross-entropy and accuracy over `rows`.
pub fn loss_and_metrics(logits: &Matrix, labels: &[usize], rows: &[usize]) -> Result<(f64, f64)> {
    if rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    let mut loss = 0.0;
    let mut correct = 0usize;
    for &i in rows {
        let row = logits.row(i);
        let label = *labels.get(i).ok_or_else(|| Error::Invalid(format!("no label for node {i}")))?;
        if label >= row.len() {
            return Err(Error::Invalid(format!("label {label} out of {} classes", row.len())));
        }
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let z: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
        loss += max + libm::log(z) - row[label];
        if argmax(row) == label {
            correct += 1;
        }
    }
    Ok((loss / rows.len() as f64, correct as f64 / rows.len() as f64))
}

/// First index of the maximum.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}
