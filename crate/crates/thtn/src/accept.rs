//! Acceptance checks with fixed seeds and thresholds.
//!
//! Suites group the checks: `oracles` (structural measures, Laplacian),
//! `gradients` (finite differences, attention contracts, ablation flags)
//! and `overfit` (planted-partition training, optional Cora run).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use serde::Serialize;
use thtn_core::community::{detect_communities, CommunityCover};
use thtn_core::hypergraph::{build_hypergraph, Hypergraph};
use thtn_core::linalg::{CsrMatrix, Matrix};
use thtn_core::measures::{
    assemble_bias, closeness_centrality, coreness, hyperedge_clustering, hyperedge_density,
    local_clustering, uniqueness_scores, ClosenessMode,
};
use thtn_core::model::{Flags, Model, ModelConfig, ModelInputs};
use thtn_core::rng::{derive_seed, seeded, RngExt};
use thtn_core::spectral::{hypergraph_laplacian, laplacian_eigenvectors, laplacian_eigenvectors_with};
use thtn_core::tensor::{finite_diff_check, ParamSet, Tape, Var};
use thtn_core::Graph;

use crate::config::RunConfig;
use crate::io::LoadedGraph;
use crate::oracle;
use crate::pipeline::{prepare_data, run_pipeline, run_prepared, Timings};
use crate::synthetic::{planted_partition, random_graph, random_hypergraph, twelve_node_graph};

const SEED: u64 = 0x7448_544e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }
}

/// One line of the report.
#[derive(Debug, Clone, Serialize)]
pub struct Entry {
    /// Position in the criterion list.
    pub number: usize,
    pub suite: &'static str,
    pub criterion: &'static str,
    pub measured: String,
    pub threshold: String,
    pub status: Status,
    /// Non-gating entries never fail a suite.
    pub gating: bool,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Entry {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass || !self.gating
    }

    pub fn line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.number,
            self.suite,
            self.criterion,
            self.measured,
            self.threshold,
            self.status.as_str()
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Oracles,
    Gradients,
    Overfit,
    All,
}

impl Suite {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "oracles" => Some(Suite::Oracles),
            "gradients" => Some(Suite::Gradients),
            "overfit" => Some(Suite::Overfit),
            "all" => Some(Suite::All),
            _ => None,
        }
    }
}

pub fn run_acceptance(suite: Suite) -> Vec<Entry> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Oracles | Suite::All) {
        out.push(structural_oracles());
        out.push(laplacian_checks());
    }
    if matches!(suite, Suite::Gradients | Suite::All) {
        out.push(gradient_fidelity());
        out.push(attention_contracts());
        out.push(ablation_consistency());
    }
    if matches!(suite, Suite::Overfit | Suite::All) {
        out.push(overfit());
        out.push(cora_stretch());
    }
    out.sort_by_key(|e| e.number);
    out
}

pub fn report_tsv(entries: &[Entry]) -> String {
    let mut s = String::from("number\tsuite\tcriterion\tmeasured\tthreshold\tstatus\n");
    for e in entries {
        s.push_str(&e.line());
        s.push('\n');
    }
    s
}

fn timed(
    number: usize,
    suite: &'static str,
    criterion: &'static str,
    limit: Option<Duration>,
    f: impl FnOnce() -> (String, String, bool),
) -> Entry {
    let start = Instant::now();
    let (measured, threshold, ok) = f();
    let elapsed = start.elapsed();
    let in_time = limit.is_none_or(|l| elapsed < l);
    let threshold = match limit {
        Some(l) => format!("{threshold}; < {} s", l.as_secs()),
        None => threshold,
    };
    Entry {
        number,
        suite,
        criterion,
        measured,
        threshold,
        status: if ok && in_time { Status::Pass } else { Status::Fail },
        gating: true,
        elapsed,
    }
}

/// Closeness, lc, coreness, hd and cc against brute force on 100 random
/// graphs, together with the bias tables assembled from them.
pub fn structural_oracles() -> Entry {
    timed(1, "oracles", "structural-measures", Some(Duration::from_secs(30)), || {
        let mut ratio_err: f64 = 0.0;
        let mut int_mismatch = 0usize;
        for g in 0..100u64 {
            let n = 1 + (derive_seed(SEED, g) % 25) as usize;
            let p = [0.2, 0.5, 0.8][(g % 3) as usize];
            let graph = random_graph(n, p, derive_seed(SEED, 1000 + g));
            let lib = closeness_centrality(&graph, ClosenessMode::Hops);
            for (a, b) in lib.iter().zip(oracle::hop_closeness(&graph)) {
                ratio_err = ratio_err.max((a - b).abs());
            }

            let cover = detect_communities(&graph, "greedy", &BTreeMap::new())
                .and_then(|c| c.covering(n))
                .expect("detector");
            let h = build_hypergraph(&graph, &cover, 1).expect("hypergraph");
            let hd = hyperedge_density(&h);
            let bias = assemble_bias(&h, false);
            let mut expected_entry = BTreeMap::new();
            for (j, members) in h.communities().iter().enumerate() {
                let sub = &h.subgraphs()[j];
                let adj = oracle::induced_adjacency(&graph, members);
                let o_lc = oracle::local_clustering(&adj);
                let o_kc = oracle::coreness(&adj);
                let o_cc = oracle::triangle_density(&adj);
                let o_hd = members.len() as f64 / n as f64;
                let lc = local_clustering(&sub.graph);
                let kc = coreness(&sub.graph);
                let cc = hyperedge_clustering(&sub.graph);
                ratio_err = ratio_err.max((cc - o_cc).abs()).max((hd[j] - o_hd).abs());
                for (pos, &node) in members.iter().enumerate() {
                    let local = sub.global_ids.iter().position(|&x| x == node).expect("member");
                    ratio_err = ratio_err.max((lc[local] - o_lc[pos]).abs());
                    if kc[local] != o_kc[pos] {
                        int_mismatch += 1;
                    }
                    expected_entry.insert((j, node), [o_lc[pos], o_kc[pos] as f64, o_hd, o_cc]);
                }
            }
            for (e, &(j, i)) in bias.pairs.iter().enumerate() {
                let want = expected_entry.get(&(j, i)).copied().unwrap_or([0.0; 4]);
                let got = [bias.lc[e], bias.kc[e], bias.hd[e], bias.cc[e]];
                for (a, b) in got.iter().zip(want) {
                    ratio_err = ratio_err.max((a - b).abs());
                }
            }
        }
        (
            format!("max ratio error {ratio_err:.3e}, integer mismatches {int_mismatch}"),
            "ratios <= 1e-12, integers exact".into(),
            ratio_err <= 1e-12 && int_mismatch == 0,
        )
    })
}

fn dense(m: &CsrMatrix) -> Vec<Vec<f64>> {
    let d = m.to_dense();
    (0..d.rows()).map(|r| d.row(r).to_vec()).collect()
}

fn eigen_errors(l: &[Vec<f64>], values: &[f64], vectors: &Matrix) -> (f64, f64) {
    let m = l.len();
    let k = values.len();
    let mut residual: f64 = 0.0;
    for (c, &lambda) in values.iter().enumerate() {
        for r in 0..m {
            let lv: f64 = (0..m).map(|t| l[r][t] * vectors[(t, c)]).sum();
            residual = residual.max((lv - lambda * vectors[(r, c)]).abs());
        }
    }
    let mut ortho: f64 = 0.0;
    for a in 0..k {
        for b in 0..k {
            let dot: f64 = (0..m).map(|r| vectors[(r, a)] * vectors[(r, b)]).sum();
            let want = if a == b { 1.0 } else { 0.0 };
            ortho = ortho.max((dot - want).abs());
        }
    }
    (residual, ortho)
}

/// Eigenpairs of 20 random hypergraph Laplacians (all pairs, dense route)
/// plus 5 iterative solves; residuals, orthonormality and the number of
/// zero eigenvalues against a component count.
pub fn laplacian_checks() -> Entry {
    timed(2, "oracles", "laplacian", None, || {
        let (mut residual, mut ortho): (f64, f64) = (0.0, 0.0);
        let mut construction_mismatch = 0usize;
        let mut multiplicity_mismatch = 0usize;
        for t in 0..25u64 {
            let iterative = t >= 20;
            let m = if iterative {
                150 + (derive_seed(SEED, 200 + t) % 51) as usize
            } else {
                2 + (derive_seed(SEED, 200 + t) % 199) as usize
            };
            let h = random_hypergraph(m, m / 3 + 1, 5, derive_seed(SEED, 300 + t));
            let l = hypergraph_laplacian(&h);
            let reference = oracle::dense_laplacian(m, h.hyperedges());
            if dense(&l) != reference {
                construction_mismatch += 1;
            }
            let adj: Vec<Vec<bool>> = (0..m)
                .map(|i| (0..m).map(|k| i != k && reference[i][k] != 0.0).collect())
                .collect();
            let components = oracle::component_count(&adj);
            let (k, eig) = if iterative {
                (12, laplacian_eigenvectors_with(&l, 12, 20))
            } else {
                (m, laplacian_eigenvectors(&l, m))
            };
            let eig = match eig {
                Ok(e) => e,
                Err(_) => {
                    multiplicity_mismatch += 1;
                    continue;
                }
            };
            let (r, o) = eigen_errors(&reference, &eig.values, &eig.vectors);
            residual = residual.max(r);
            ortho = ortho.max(o);
            let zeros = eig.values.iter().filter(|v| v.abs() <= 1e-9).count();
            if zeros != components.min(k) {
                multiplicity_mismatch += 1;
            }
        }
        (
            format!(
                "residual {residual:.3e}, orthonormality {ortho:.3e}, \
                 multiplicity mismatches {multiplicity_mismatch}, construction mismatches {construction_mismatch}"
            ),
            "residual <= 1e-8, orthonormality <= 1e-8, multiplicity exact".into(),
            residual <= 1e-8
                && ortho <= 1e-8
                && multiplicity_mismatch == 0
                && construction_mismatch == 0,
        )
    })
}

/// Model inputs for a graph and explicit communities.
pub fn inputs_for(
    graph: &Graph,
    communities: Vec<Vec<usize>>,
    globals: Vec<usize>,
    features: Matrix,
    k: usize,
) -> (Hypergraph, ModelInputs) {
    let m = graph.num_nodes();
    let h = Hypergraph::from_parts(graph, communities, globals).expect("hypergraph");
    let cover = CommunityCover::new(h.communities().to_vec()).expect("cover");
    let eig = laplacian_eigenvectors(&hypergraph_laplacian(&h), k).expect("eigen");
    let inputs = ModelInputs::new(
        graph,
        features,
        &h,
        assemble_bias(&h, false),
        closeness_centrality(graph, ClosenessMode::Hops),
        uniqueness_scores(&cover, m).expect("uniqueness"),
        eig.vectors,
    )
    .expect("inputs");
    (h, inputs)
}

fn random_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = seeded(seed);
    let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Matrix::from_vec(rows, cols, data).expect("sized")
}

fn small_config() -> ModelConfig {
    ModelConfig {
        d: 8,
        heads: 2,
        ..ModelConfig::default()
    }
}

/// The twelve-node, four-hyperedge instance used by the gradient check.
pub fn gradient_fixture() -> (Model, ModelInputs, Vec<usize>) {
    let (graph, communities) = twelve_node_graph();
    let (_, inputs) = inputs_for(&graph, communities, vec![4], random_matrix(12, 5, SEED), 3);
    let model = Model::new(small_config(), 5, 3, 4, 3).expect("model");
    let labels = (0..12).map(|i| i % 3).collect();
    (model, inputs, labels)
}

/// Largest relative finite-difference error of the full training loss.
pub fn model_gradient_error(model: &Model, params: &ParamSet, inputs: &ModelInputs, labels: &[usize]) -> f64 {
    let rows: Vec<usize> = (0..inputs.num_nodes()).step_by(2).collect();
    finite_diff_check(params.values(), 1e-6, 400, SEED, |tape, vars| {
        let mut rng = seeded(SEED);
        let out = model.forward(tape, params, vars, inputs, true, &mut rng)?;
        tape.cross_entropy(out.logits, labels, &rows)
    })
    .unwrap_or(f64::INFINITY)
}

/// Finite-difference error of every tape operation in isolation.
pub fn op_gradient_errors() -> Vec<(&'static str, f64)> {
    type Build = Box<dyn Fn(&mut Tape, &[Var]) -> thtn_core::Result<Var>>;
    let r = random_matrix;
    // keeps entries away from the LeakyReLU kink
    let away = |m: Matrix| m.map(|v| if v.abs() < 0.05 { v + 0.1 } else { v });
    let probe = |t: &mut Tape, y: Var, seed: u64| -> thtn_core::Result<Var> {
        let (a, b) = t.shape(y);
        let w = t.constant(random_matrix(a, b, seed));
        let p = t.mul(y, w)?;
        Ok(t.sum(p))
    };
    let csr = CsrMatrix::from_triplets(3, 4, vec![(0, 1, 0.5), (1, 0, -1.0), (2, 3, 2.0), (2, 1, 1.0)]);
    let cases: Vec<(&'static str, Vec<Matrix>, Build)> = vec![
        ("matmul", vec![r(3, 4, 1), r(4, 2, 2)], Box::new(move |t, v| { let y = t.matmul(v[0], v[1])?; probe(t, y, 11) })),
        ("matmul_nt", vec![r(3, 4, 3), r(5, 4, 4)], Box::new(move |t, v| { let y = t.matmul_nt(v[0], v[1])?; probe(t, y, 12) })),
        ("linear_bias", vec![r(3, 4, 5), r(4, 2, 6), r(1, 2, 7)], Box::new(move |t, v| { let y = t.linear_bias(v[0], v[1], v[2])?; probe(t, y, 13) })),
        ("add", vec![r(3, 4, 8), r(3, 4, 9)], Box::new(move |t, v| { let y = t.add(v[0], v[1])?; probe(t, y, 14) })),
        ("sub", vec![r(3, 4, 10), r(3, 4, 11)], Box::new(move |t, v| { let y = t.sub(v[0], v[1])?; probe(t, y, 15) })),
        ("mul", vec![r(3, 4, 12), r(3, 4, 13)], Box::new(move |t, v| { let y = t.mul(v[0], v[1])?; probe(t, y, 16) })),
        ("scale", vec![r(3, 4, 14)], Box::new(move |t, v| { let y = t.scale(v[0], -1.5); probe(t, y, 17) })),
        ("add_row", vec![r(4, 3, 15), r(1, 3, 16)], Box::new(move |t, v| { let y = t.add_row(v[0], v[1])?; probe(t, y, 18) })),
        ("mul_row", vec![r(4, 3, 17), r(1, 3, 18)], Box::new(move |t, v| { let y = t.mul_row(v[0], v[1])?; probe(t, y, 19) })),
        ("add_col", vec![r(4, 3, 19), r(4, 1, 20)], Box::new(move |t, v| { let y = t.add_col(v[0], v[1])?; probe(t, y, 20) })),
        ("leaky_relu", vec![away(r(4, 6, 21))], Box::new(move |t, v| { let y = t.leaky_relu(v[0], 0.2); probe(t, y, 21) })),
        ("layer_norm", vec![r(4, 6, 22)], Box::new(move |t, v| { let y = t.layer_norm(v[0], 1e-9); probe(t, y, 22) })),
        ("dropout", vec![r(4, 6, 23)], Box::new(move |t, v| { let y = t.dropout(v[0], 0.5, &mut seeded(5), true); probe(t, y, 23) })),
        ("concat_cols", vec![r(3, 2, 24), r(3, 3, 25)], Box::new(move |t, v| { let y = t.concat_cols(&[v[0], v[1]])?; probe(t, y, 24) })),
        ("gather_rows", vec![r(4, 3, 26)], Box::new(move |t, v| { let y = t.gather_rows(v[0], &[3, 0, 3, 1])?; probe(t, y, 25) })),
        ("scatter_add_rows", vec![r(4, 3, 27)], Box::new(move |t, v| { let y = t.scatter_add_rows(v[0], &[1, 1, 0, 2], 3)?; probe(t, y, 26) })),
        ("softmax_masked", vec![r(3, 4, 28)], Box::new(move |t, v| {
            let mask = [true, false, true, true, true, true, false, false, false, true, true, false];
            let y = t.softmax_masked(v[0], &mask, 1)?;
            probe(t, y, 27)
        })),
        ("segment_softmax", vec![r(6, 2, 29)], Box::new(move |t, v| { let y = t.segment_softmax(v[0], &[0, 0, 1, 2, 2, 2], 3)?; probe(t, y, 28) })),
        ("head_sum", vec![r(4, 6, 30)], Box::new(move |t, v| { let y = t.head_sum(v[0], 3)?; probe(t, y, 29) })),
        ("head_expand", vec![r(4, 3, 31)], Box::new(move |t, v| { let y = t.head_expand(v[0], 2); probe(t, y, 30) })),
        ("spmm", vec![r(4, 2, 32)], Box::new(move |t, v| { let y = t.spmm(&csr, v[0])?; probe(t, y, 31) })),
        ("sum", vec![r(3, 3, 33)], Box::new(|t, v| Ok(t.sum(v[0])))),
        ("cross_entropy", vec![r(5, 3, 34)], Box::new(|t, v| t.cross_entropy(v[0], &[0, 2, 1, 1, 0], &[0, 2, 3]))),
    ];
    cases
        .into_iter()
        .map(|(name, params, build)| {
            let err = finite_diff_check(&params, 1e-5, 200, SEED, |t, v| build(t, v))
                .unwrap_or(f64::INFINITY);
            (name, err)
        })
        .collect()
}

pub fn gradient_fidelity() -> Entry {
    timed(3, "gradients", "gradient-fidelity", Some(Duration::from_secs(60)), || {
        let (model, inputs, labels) = gradient_fixture();
        let params = model.init_params(&mut seeded(SEED));
        let model_err = model_gradient_error(&model, &params, &inputs, &labels);
        let ops = op_gradient_errors();
        let (worst_op, op_err) = ops
            .iter()
            .copied()
            .fold(("none", 0.0f64), |a, b| if b.1 > a.1 { b } else { a });
        (
            format!("model {model_err:.3e}, worst op {worst_op} {op_err:.3e} ({} ops)", ops.len()),
            "model <= 1e-4, each op <= 1e-6".into(),
            model_err <= 1e-4 && op_err <= 1e-6,
        )
    })
}

fn attention_weights(model: &Model, params: &ParamSet, inputs: &ModelInputs) -> (Matrix, Matrix) {
    let mut tape = Tape::new();
    let (_, out) = model
        .run(&mut tape, params, inputs, false, &mut seeded(0))
        .expect("forward");
    (
        tape.value(out.edge_attention[0]).clone(),
        tape.value(out.node_attention[0]).clone(),
    )
}

fn logits(model: &Model, params: &ParamSet, inputs: &ModelInputs, training: bool) -> Matrix {
    let mut tape = Tape::new();
    let (_, out) = model
        .run(&mut tape, params, inputs, training, &mut seeded(SEED))
        .expect("forward");
    tape.value(out.logits).clone()
}

/// Largest deviation from 1 of any attention group sum, over random
/// planted-partition instances with two layers.
pub fn softmax_sum_error() -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..10u64 {
        let data = planted_partition(30, 3, 0.4, 0.05, 6, 1.0, derive_seed(SEED, 400 + t));
        let cover = detect_communities(&data.graph, "greedy", &BTreeMap::new())
            .and_then(|c| c.covering(30))
            .expect("cover");
        let (h, inputs) = inputs_for(&data.graph, cover.communities().to_vec(), vec![0, 1], data.features, 4);
        let config = ModelConfig { layers: 2, ..small_config() };
        let model = Model::new(config, 6, 3, h.num_edges(), 4).expect("model");
        let params = model.init_params(&mut seeded(t));
        let mut tape = Tape::new();
        let (_, out) = model
            .run(&mut tape, &params, &inputs, true, &mut seeded(t))
            .expect("forward");
        for layer in 0..2 {
            let groups = [
                (out.edge_attention[layer], &inputs.edge_of, h.num_edges()),
                (out.node_attention[layer], &inputs.node_of, 30),
            ];
            for (w, group, count) in groups {
                let w = tape.value(w);
                for head in 0..config.heads {
                    let mut sums = vec![0.0; count];
                    for (e, &g) in group.iter().enumerate() {
                        sums[g] += w[(e, head)];
                    }
                    for s in sums {
                        worst = worst.max((s - 1.0).abs());
                    }
                }
            }
        }
    }
    worst
}

/// Violations of strict monotonicity in the bias over 50 two-member
/// instances, for both attention levels.
pub fn monotonicity_violations() -> usize {
    let graph = Graph::from_unweighted(3, [(0, 1), (1, 2)]).expect("path");
    let mut violations = 0;
    for t in 0..50u64 {
        let mut rng = seeded(derive_seed(SEED, 500 + t));
        let (_, mut inputs) = inputs_for(
            &graph,
            vec![vec![0, 1], vec![1, 2]],
            vec![],
            random_matrix(3, 4, derive_seed(SEED, 600 + t)),
            2,
        );
        for v in inputs
            .bias
            .lc
            .iter_mut()
            .chain(inputs.bias.kc.iter_mut())
            .chain(inputs.bias.hd.iter_mut())
            .chain(inputs.bias.cc.iter_mut())
        {
            *v = rng.gen_range(0.0..3.0);
        }
        let model = Model::new(small_config(), 4, 2, 2, 2).expect("model");
        let params = model.init_params(&mut rng);
        // entries are (0,0), (0,1), (1,1), (1,2); node 1 is in both hyperedges
        let entry = if t % 2 == 0 { 1 } else { 2 };
        let delta = rng.gen_range(0.01..2.0);
        let (e0, n0) = attention_weights(&model, &params, &inputs);
        let mut raised = inputs.clone();
        raised.bias.kc[entry] += delta;
        let (e1, _) = attention_weights(&model, &params, &raised);
        let mut raised = inputs.clone();
        raised.bias.cc[entry] += delta;
        let (_, n1) = attention_weights(&model, &params, &raised);
        for head in 0..2 {
            if e1[(entry, head)] <= e0[(entry, head)] {
                violations += 1;
            }
            if n1[(entry, head)] <= n0[(entry, head)] {
                violations += 1;
            }
        }
    }
    violations
}

/// Largest logit difference after relabeling the nodes of random
/// instances.
pub fn permutation_error() -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..5u64 {
        let n = 24;
        let data = planted_partition(n, 3, 0.4, 0.05, 5, 1.0, derive_seed(SEED, 700 + t));
        let cover = detect_communities(&data.graph, "greedy", &BTreeMap::new())
            .and_then(|c| c.covering(n))
            .expect("cover");
        let comms = cover.communities().to_vec();
        let globals = vec![3];
        let (h, inputs) = inputs_for(&data.graph, comms.clone(), globals.clone(), data.features.clone(), 4);
        let model = Model::new(small_config(), 5, 3, h.num_edges(), 4).expect("model");
        let params = model.init_params(&mut seeded(t));
        let base = logits(&model, &params, &inputs, false);

        let mut rng = seeded(derive_seed(SEED, 800 + t));
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let edges = data.graph.edges().iter().map(|e| (perm[e.u], perm[e.v]));
        let pgraph = Graph::from_unweighted(n, edges).expect("graph");
        let pcomms: Vec<Vec<usize>> = comms
            .iter()
            .map(|c| {
                let mut c: Vec<usize> = c.iter().map(|&i| perm[i]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        let mut features = Matrix::zeros(n, 5);
        let mut ev = Matrix::zeros(n, 4);
        for i in 0..n {
            features.row_mut(perm[i]).copy_from_slice(data.features.row(i));
            ev.row_mut(perm[i]).copy_from_slice(inputs.eigenvectors.row(i));
        }
        let pglobals = globals.iter().map(|&g| perm[g]).collect();
        let (ph, mut pinputs) = inputs_for(&pgraph, pcomms.clone(), pglobals, features, 4);
        pinputs.eigenvectors = ev;
        let mut pparams = params.clone();
        let embed = params.get("edge.embed").expect("embedding").clone();
        let table = pparams.get_mut("edge.embed").expect("embedding");
        for (old, c) in pcomms.iter().enumerate() {
            let new = ph.communities().iter().position(|x| x == c).expect("community");
            table.row_mut(new).copy_from_slice(embed.row(old));
        }
        let moved = logits(&model, &pparams, &pinputs, false);
        for i in 0..n {
            for (a, b) in base.row(i).iter().zip(moved.row(perm[i])) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    worst
}

pub fn attention_contracts() -> Entry {
    timed(4, "gradients", "attention-contracts", None, || {
        let sum_err = softmax_sum_error();
        let violations = monotonicity_violations();
        let perm_err = permutation_error();
        (
            format!(
                "softmax sum error {sum_err:.3e}, monotonicity violations {violations}/200, \
                 permutation error {perm_err:.3e}"
            ),
            "sums 1 +- 1e-9, no violations, permutation <= 1e-9".into(),
            sum_err <= 1e-9 && violations == 0 && perm_err <= 1e-9,
        )
    })
}

/// Names of the ablation flags whose off state differs from zeroing the
/// matching parameters or measures.
pub fn ablation_mismatches() -> Vec<&'static str> {
    let (model, inputs, _) = gradient_fixture();
    let params = model.init_params(&mut seeded(SEED));
    let mut bad = Vec::new();
    for name in Flags::ABLATIONS {
        let on = model.config;
        let off = ModelConfig {
            flags: on.flags.with(name, false).expect("flag"),
            ..on
        };
        let model_off = Model { config: off, ..model.clone() };
        let mut zeroed = params.clone();
        for p in model.encoding_params(name) {
            let w = zeroed.get_mut(&p).expect("param");
            *w = Matrix::zeros(w.rows(), w.cols());
        }
        let mut zeroed_inputs = inputs.clone();
        zeroed_inputs.bias = inputs.bias.zeroed(off.flags.bias());
        let same = [false, true].iter().all(|&training| {
            logits(&model_off, &params, &inputs, training)
                == logits(&model, &zeroed, &zeroed_inputs, training)
        });
        if !same {
            bad.push(name);
        }
    }
    bad
}

pub fn ablation_consistency() -> Entry {
    timed(6, "gradients", "ablation-consistency", None, || {
        let bad = ablation_mismatches();
        (
            format!("{} of 8 flags differ{}", bad.len(), if bad.is_empty() { String::new() } else { format!(" ({})", bad.join(",")) }),
            "bit-identical for all 8 flags".into(),
            bad.is_empty(),
        )
    })
}

/// The 60-node, 3-class planted partition used by the overfit check.
pub fn overfit_dataset() -> crate::synthetic::Dataset {
    planted_partition(60, 3, 0.3, 0.02, 16, 1.0, derive_seed(SEED, 900))
}

/// Training with default settings for at most 200 epochs: whether train
/// accuracy reached 1 and the test accuracy at the best validation epoch.
pub fn overfit_run() -> crate::Result<(bool, f64)> {
    let data = overfit_dataset();
    let mut config = RunConfig {
        seed: SEED,
        ..RunConfig::default()
    };
    config.optimizer.epochs = 200;
    let mut timings = Timings::default();
    let loaded = LoadedGraph {
        graph: data.graph,
        id_map: None,
    };
    let prepared = prepare_data(&config, loaded, data.features, data.labels, None, &mut timings)?;
    let out = run_prepared(&config, &prepared, timings)?;
    let rep = &out.record.repeats[0];
    let fitted = rep.history.iter().any(|e| e.train_acc == 1.0);
    Ok((fitted, rep.test_acc))
}

pub fn overfit() -> Entry {
    timed(5, "overfit", "planted-partition-overfit", Some(Duration::from_secs(120)), || {
        match overfit_run() {
            Ok((fitted, test)) => (
                format!("train accuracy 1.0 reached: {fitted}, test accuracy {test:.4}"),
                "train 1.0 within 200 epochs, test >= 0.8".into(),
                fitted && test >= 0.8,
            ),
            Err(e) => (format!("error: {e}"), "run completes".into(), false),
        }
    })
}

pub const CORA_ENV: &str = "THTN_CORA_DIR";

/// Non-gating: default pipeline on Cora when `THTN_CORA_DIR` holds
/// `graph.tsv`, `features.csv` and `labels.tsv`.
pub fn cora_stretch() -> Entry {
    let start = Instant::now();
    let dir = std::env::var_os(CORA_ENV).map(PathBuf::from);
    let files = dir.as_ref().map(|d| {
        (d.join("graph.tsv"), d.join("features.csv"), d.join("labels.tsv"))
    });
    let (measured, status) = match files {
        Some((g, f, l)) if g.exists() && f.exists() && l.exists() => {
            let config = RunConfig {
                graph: Some(g),
                features: Some(f),
                labels: Some(l),
                ..RunConfig::default()
            };
            match run_pipeline(&config) {
                Ok(out) => {
                    let acc = out.record.mean_test_acc;
                    let status = if acc > 0.7 { Status::Pass } else { Status::Fail };
                    (format!("test accuracy {acc:.4}"), status)
                }
                Err(e) => (format!("error: {e}"), Status::Fail),
            }
        }
        _ => (format!("no data (set {CORA_ENV})"), Status::Skip),
    };
    Entry {
        number: 7,
        suite: "overfit",
        criterion: "cora-stretch",
        measured,
        threshold: "test > 0.7 (non-gating)".into(),
        status,
        gating: false,
        elapsed: start.elapsed(),
    }
}

/// Human-readable timing lines, kept off the deterministic report.
pub fn timing_lines(entries: &[Entry]) -> String {
    let mut s = String::new();
    for e in entries {
        let _ = writeln!(s, "{}\t{:.2}s", e.criterion, e.elapsed.as_secs_f64());
    }
    s
}
