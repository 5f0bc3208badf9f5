//! Text formats for every pipeline artifact.
//!
//! | artifact     | format                                                    |
//! |--------------|-----------------------------------------------------------|
//! | graph        | `u<TAB>v[<TAB>w]` per line, `#` comments                  |
//! | features     | header-less CSV of floats, row `i` is node `i`            |
//! | labels       | `node<TAB>class`                                          |
//! | splits       | `node<TAB>train\|val\|test`                               |
//! | cover        | one community per line, space-separated node ids          |
//! | hypergraph   | JSON `{num_nodes, hyperedges, global_nodes, communities}` |
//! | bias         | `j<TAB>i<TAB>omega<TAB>upsilon`, sorted by `(j, i)`       |
//! | eigenvectors | `# eigenvalues: ...` then an `m x k` CSV                  |
//! | checkpoint   | versioned JSON of named row-major tensors                 |
//!
//! Floats are written with Rust's shortest round-trip formatting, so every
//! writer followed by its reader reproduces the values exactly.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thtn_core::community::CommunityCover;
use thtn_core::linalg::Matrix;
use thtn_core::measures::StructuralBias;
use thtn_core::model::{Model, ModelConfig};
use thtn_core::spectral::LaplacianEigen;
use thtn_core::split::{Split, SplitMask};
use thtn_core::tensor::ParamSet;
use thtn_core::{Graph, Hypergraph};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Data lines with their 1-based line numbers; blank lines and `#`
/// comments are skipped.
fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

/// A graph plus the original node tokens when the file's ids were not
/// already `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedGraph {
    pub graph: Graph,
    /// `id_map[new]` is the token used in the file.
    pub id_map: Option<Vec<String>>,
}

impl LoadedGraph {
    pub fn resolver(&self) -> NodeIds {
        NodeIds::new(self.graph.num_nodes(), self.id_map.as_deref())
    }
}

/// Maps node tokens in label, split and cover files to dense ids.
#[derive(Debug, Clone)]
pub struct NodeIds {
    num_nodes: usize,
    map: Option<HashMap<String, usize>>,
}

impl NodeIds {
    pub fn new(num_nodes: usize, id_map: Option<&[String]>) -> Self {
        let map = id_map.map(|ids| {
            ids.iter()
                .enumerate()
                .map(|(k, s)| (s.clone(), k))
                .collect()
        });
        Self { num_nodes, map }
    }

    pub fn dense(num_nodes: usize) -> Self {
        Self::new(num_nodes, None)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn resolve(&self, token: &str) -> Option<usize> {
        match &self.map {
            Some(map) => map.get(token).copied(),
            None => token.parse::<usize>().ok().filter(|&i| i < self.num_nodes),
        }
    }

    fn resolve_at(&self, path: &Path, line: usize, token: &str) -> Result<usize> {
        self.resolve(token)
            .ok_or_else(|| Error::parse(path, line, format!("unknown node `{token}`")))
    }
}

const NODES_DIRECTIVE: &str = "# nodes";

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    parse_graph(&read_text(path)?, path)
}

/// Parses an edge list. A leading `# nodes<TAB>N` line fixes the node
/// count (so trailing isolated nodes survive); otherwise ids must be
/// exactly `0..=max` to be kept as they are, and are remapped in sorted
/// order when they are not.
pub fn parse_graph(text: &str, path: &Path) -> Result<LoadedGraph> {
    let mut declared = None;
    for (k, line) in text.lines().enumerate() {
        if let Some(rest) = line.strip_prefix(NODES_DIRECTIVE) {
            let n = rest
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(path, k + 1, "bad node count directive"))?;
            declared = Some(n);
        }
    }
    let mut raw: Vec<(usize, String, String, f64)> = Vec::new();
    for (line, l) in data_lines(text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 && fields.len() != 3 {
            return Err(Error::parse(
                path,
                line,
                format!("expected `u v [w]`, found {} fields", fields.len()),
            ));
        }
        let w = match fields.get(2) {
            Some(s) => s
                .parse::<f64>()
                .map_err(|_| Error::parse(path, line, format!("bad weight `{s}`")))?,
            None => 1.0,
        };
        if !w.is_finite() || w < 0.0 {
            return Err(Error::parse(path, line, format!("weight {w} must be finite and >= 0")));
        }
        raw.push((line, fields[0].to_string(), fields[1].to_string(), w));
    }

    let numeric: Option<Vec<(usize, usize)>> = raw
        .iter()
        .map(|(_, u, v, _)| Some((u.parse::<usize>().ok()?, v.parse::<usize>().ok()?)))
        .collect();
    let tokens: BTreeSet<&str> = raw
        .iter()
        .flat_map(|(_, u, v, _)| [u.as_str(), v.as_str()])
        .collect();
    let (num_nodes, ids, id_map): (usize, Vec<(usize, usize)>, Option<Vec<String>>) =
        match (numeric, declared) {
            (Some(ids), Some(n)) if ids.iter().all(|&(u, v)| u < n && v < n) => (n, ids, None),
            (Some(ids), None) => {
                let seen: BTreeSet<usize> = ids.iter().flat_map(|&(u, v)| [u, v]).collect();
                let dense = seen.iter().enumerate().all(|(k, &id)| k == id);
                if dense {
                    (seen.len(), ids, None)
                } else {
                    let order: Vec<usize> = seen.into_iter().collect();
                    let index: HashMap<usize, usize> =
                        order.iter().enumerate().map(|(k, &id)| (id, k)).collect();
                    let ids = ids.iter().map(|(u, v)| (index[u], index[v])).collect();
                    let map = order.iter().map(|id| id.to_string()).collect();
                    (order.len(), ids, Some(map))
                }
            }
            (Some(_), Some(n)) => {
                return Err(Error::parse(path, 1, format!("node id outside the declared {n} nodes")));
            }
            (None, _) => {
                let order: Vec<String> = tokens.iter().map(|s| s.to_string()).collect();
                let index: HashMap<&str, usize> =
                    tokens.iter().enumerate().map(|(k, &s)| (s, k)).collect();
                let ids = raw
                    .iter()
                    .map(|(_, u, v, _)| (index[u.as_str()], index[v.as_str()]))
                    .collect();
                (order.len(), ids, Some(order))
            }
        };

    let mut seen = HashMap::new();
    let mut edges = Vec::with_capacity(raw.len());
    for ((line, _, _, w), (u, v)) in raw.iter().zip(ids) {
        if u == v {
            return Err(Error::parse(path, *line, format!("self-loop on node {u}")));
        }
        let key = (u.min(v), u.max(v));
        if let Some(first) = seen.insert(key, *line) {
            return Err(Error::parse(
                path,
                *line,
                format!("duplicate undirected edge {}-{} (first on line {first})", key.0, key.1),
            ));
        }
        edges.push((key.0, key.1, *w));
    }
    let graph = Graph::from_edges(num_nodes, edges)?;
    Ok(LoadedGraph { graph, id_map })
}

/// Canonical form: node-count directive, then edges sorted by `(u, v)`
/// with `u < v`.
pub fn format_graph(graph: &Graph) -> String {
    let mut out = format!("{NODES_DIRECTIVE}\t{}\n", graph.num_nodes());
    for e in graph.edges() {
        let _ = writeln!(out, "{}\t{}\t{}", e.u, e.v, e.weight);
    }
    out
}

pub fn save_graph(path: &Path, graph: &Graph) -> Result<()> {
    write_text(path, &format_graph(graph))
}

/// `new<TAB>original` per line.
pub fn format_id_map(id_map: &[String]) -> String {
    let mut out = String::new();
    for (k, s) in id_map.iter().enumerate() {
        let _ = writeln!(out, "{k}\t{s}");
    }
    out
}

pub fn save_id_map(path: &Path, id_map: &[String]) -> Result<()> {
    write_text(path, &format_id_map(id_map))
}

pub fn load_features(path: &Path, num_nodes: usize) -> Result<Matrix> {
    let text = read_text(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (line, l) in data_lines(&text) {
        let row = l
            .split(',')
            .map(|s| {
                let s = s.trim();
                match s.parse::<f64>() {
                    Ok(v) if v.is_finite() => Ok(v),
                    _ => Err(Error::parse(path, line, format!("bad feature value `{s}`"))),
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::parse(
                    path,
                    line,
                    format!("{} columns, expected {}", row.len(), first.len()),
                ));
            }
        }
        rows.push(row);
    }
    if rows.len() != num_nodes {
        return Err(Error::parse(
            path,
            0,
            format!("{} feature rows for {num_nodes} nodes", rows.len()),
        ));
    }
    Ok(Matrix::from_rows(&rows)?)
}

pub fn format_features(features: &Matrix) -> String {
    format_csv(features)
}

fn format_csv(m: &Matrix) -> String {
    let mut out = String::new();
    for r in 0..m.rows() {
        for (c, v) in m.row(r).iter().enumerate() {
            if c > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v}");
        }
        out.push('\n');
    }
    out
}

/// Two-column `node<TAB>value` files where every node appears once.
fn load_node_table<T>(
    path: &Path,
    ids: &NodeIds,
    mut parse: impl FnMut(&str) -> Option<T>,
) -> Result<Vec<T>> {
    let text = read_text(path)?;
    let mut values: Vec<Option<T>> = (0..ids.num_nodes()).map(|_| None).collect();
    for (line, l) in data_lines(&text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::parse(path, line, "expected `node value`"));
        }
        let node = ids.resolve_at(path, line, fields[0])?;
        let value = parse(fields[1])
            .ok_or_else(|| Error::parse(path, line, format!("bad value `{}`", fields[1])))?;
        if values[node].replace(value).is_some() {
            return Err(Error::parse(path, line, format!("node `{}` listed twice", fields[0])));
        }
    }
    values
        .into_iter()
        .enumerate()
        .map(|(i, v)| v.ok_or_else(|| Error::parse(path, 0, format!("node {i} missing"))))
        .collect()
}

pub fn load_labels(path: &Path, ids: &NodeIds) -> Result<Vec<usize>> {
    load_node_table(path, ids, |s| s.parse().ok())
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut out = String::new();
    for (i, c) in labels.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{c}");
    }
    out
}

pub fn load_splits(path: &Path, ids: &NodeIds) -> Result<SplitMask> {
    Ok(SplitMask(load_node_table(path, ids, Split::parse)?))
}

pub fn format_splits(mask: &SplitMask) -> String {
    let mut out = String::new();
    for (i, s) in mask.0.iter().enumerate() {
        let _ = writeln!(out, "{i}\t{}", s.as_str());
    }
    out
}

pub fn load_cover(path: &Path, ids: &NodeIds) -> Result<CommunityCover> {
    let text = read_text(path)?;
    let mut communities = Vec::new();
    for (line, l) in data_lines(&text) {
        let members = l
            .split_whitespace()
            .map(|t| ids.resolve_at(path, line, t))
            .collect::<Result<Vec<usize>>>()?;
        communities.push(members);
    }
    Ok(CommunityCover::new(communities)?)
}

pub fn format_cover(cover: &CommunityCover) -> String {
    let mut out = String::new();
    for c in cover.communities() {
        let line: Vec<String> = c.iter().map(|i| i.to_string()).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// On-disk hypergraph. `communities` holds the members before global
/// node injection, which the structural measures need.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HypergraphFile {
    pub num_nodes: usize,
    pub hyperedges: Vec<Vec<usize>>,
    pub global_nodes: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub communities: Option<Vec<Vec<usize>>>,
}

impl HypergraphFile {
    pub fn from_hypergraph(h: &Hypergraph) -> Self {
        Self {
            num_nodes: h.num_nodes(),
            hyperedges: h.hyperedges().to_vec(),
            global_nodes: h.global_nodes().to_vec(),
            communities: Some(h.communities().to_vec()),
        }
    }

    /// Rebuilds the hypergraph on `graph`. Without stored communities, the
    /// global nodes are stripped from each hyperedge (kept when that would
    /// leave it empty).
    pub fn to_hypergraph(&self, graph: &Graph) -> Result<Hypergraph> {
        if self.num_nodes != graph.num_nodes() {
            return Err(Error::Config(format!(
                "hypergraph has {} nodes, graph has {}",
                self.num_nodes,
                graph.num_nodes()
            )));
        }
        let communities = match &self.communities {
            Some(c) => c.clone(),
            None => self
                .hyperedges
                .iter()
                .map(|e| {
                    let kept: Vec<usize> = e
                        .iter()
                        .copied()
                        .filter(|i| !self.global_nodes.contains(i))
                        .collect();
                    if kept.is_empty() {
                        e.clone()
                    } else {
                        kept
                    }
                })
                .collect(),
        };
        let h = Hypergraph::from_parts(graph, communities, self.global_nodes.clone())?;
        let mut expected: Vec<Vec<usize>> = self.hyperedges.clone();
        for e in &mut expected {
            e.sort_unstable();
            e.dedup();
        }
        if h.hyperedges() != expected.as_slice() {
            return Err(Error::Config(
                "hyperedges do not match communities plus global nodes".into(),
            ));
        }
        Ok(h)
    }
}

pub fn format_hypergraph(h: &Hypergraph) -> String {
    let mut s = serde_json::to_string(&HypergraphFile::from_hypergraph(h)).expect("serializable");
    s.push('\n');
    s
}

pub fn save_hypergraph(path: &Path, h: &Hypergraph) -> Result<()> {
    write_text(path, &format_hypergraph(h))
}

pub fn load_hypergraph(path: &Path, graph: &Graph) -> Result<Hypergraph> {
    let text = read_text(path)?;
    let file: HypergraphFile = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    file.to_hypergraph(graph)
}

/// One row of the bias table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasRow {
    pub edge: usize,
    pub node: usize,
    pub omega: f64,
    pub upsilon: f64,
}

pub fn bias_rows(bias: &StructuralBias, flags: thtn_core::measures::BiasFlags) -> Vec<BiasRow> {
    let omega = bias.omega(flags);
    let upsilon = bias.upsilon(flags);
    bias.pairs
        .iter()
        .zip(omega.into_iter().zip(upsilon))
        .map(|(&(edge, node), (omega, upsilon))| BiasRow {
            edge,
            node,
            omega,
            upsilon,
        })
        .collect()
}

pub fn format_bias(rows: &[BiasRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.edge, r.node, r.omega, r.upsilon);
    }
    out
}

pub fn load_bias(path: &Path) -> Result<Vec<BiasRow>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (line, l) in data_lines(&text) {
        let f: Vec<&str> = l.split('\t').collect();
        if f.len() != 4 {
            return Err(Error::parse(path, line, "expected `j i omega upsilon`"));
        }
        let bad = || Error::parse(path, line, "bad number");
        rows.push(BiasRow {
            edge: f[0].parse().map_err(|_| bad())?,
            node: f[1].parse().map_err(|_| bad())?,
            omega: f[2].parse().map_err(|_| bad())?,
            upsilon: f[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

const EIGENVALUES_HEADER: &str = "# eigenvalues:";

pub fn format_eigenvectors(eig: &LaplacianEigen) -> String {
    let values: Vec<String> = eig.values.iter().map(|v| v.to_string()).collect();
    let mut out = format!("{EIGENVALUES_HEADER} {}\n", values.join(","));
    out.push_str(&format_csv(&eig.vectors));
    out
}

pub fn load_eigenvectors(path: &Path, num_nodes: usize) -> Result<LaplacianEigen> {
    let text = read_text(path)?;
    let mut values = Vec::new();
    if let Some(rest) = text.lines().next().and_then(|l| l.strip_prefix(EIGENVALUES_HEADER)) {
        for t in rest.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            values.push(
                t.parse::<f64>()
                    .map_err(|_| Error::parse(path, 1, format!("bad eigenvalue `{t}`")))?,
            );
        }
    }
    let vectors = if num_nodes == 0 {
        Matrix::zeros(0, values.len())
    } else {
        load_features(path, num_nodes)?
    };
    Ok(LaplacianEigen { values, vectors })
}

pub const CHECKPOINT_FORMAT: &str = "thtn-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: [usize; 2],
    pub data: Vec<f64>,
}

/// Parameters plus what is needed to rebuild the model around them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub model: ModelConfig,
    pub num_features: usize,
    pub num_classes: usize,
    pub num_edges: usize,
    pub num_eigenvectors: usize,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(model: &Model, params: &ParamSet) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: model.config,
            num_features: model.num_features,
            num_classes: model.num_classes,
            num_edges: model.num_edges,
            num_eigenvectors: model.num_eigenvectors,
            tensors: params
                .iter()
                .map(|(name, m)| NamedTensor {
                    name: name.to_string(),
                    shape: [m.rows(), m.cols()],
                    data: m.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn model(&self) -> Result<Model> {
        Ok(Model::new(
            self.model,
            self.num_features,
            self.num_classes,
            self.num_edges,
            self.num_eigenvectors,
        )?)
    }

    /// Parameters in stored order, checked against a fresh initialization
    /// for names and shapes.
    pub fn params(&self) -> Result<ParamSet> {
        let model = self.model()?;
        let reference = model.init_params(&mut thtn_core::rng::seeded(0));
        let mut params = ParamSet::new();
        for t in &self.tensors {
            let m = Matrix::from_vec(t.shape[0], t.shape[1], t.data.clone())?;
            match reference.get(&t.name) {
                Some(r) if r.shape() == m.shape() => {}
                _ => {
                    return Err(Error::Config(format!(
                        "checkpoint tensor `{}` {:?} does not fit the model",
                        t.name, t.shape
                    )))
                }
            }
            params.insert(t.name.clone(), m);
        }
        if params.names() != reference.names() {
            return Err(Error::Config("checkpoint parameter list differs from the model".into()));
        }
        Ok(params)
    }
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<()> {
    let mut s = serde_json::to_string(checkpoint).expect("serializable");
    s.push('\n');
    write_text(path, &s)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = read_text(path)?;
    let c: Checkpoint = serde_json::from_str(&text).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    if c.format != CHECKPOINT_FORMAT || c.version != CHECKPOINT_VERSION {
        return Err(Error::Config(format!(
            "{}: unsupported checkpoint {} v{}",
            path.display(),
            c.format,
            c.version
        )));
    }
    Ok(c)
}
