//! construct -> features -> spectral -> train -> eval.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thtn_core::community::{detect_communities, CommunityCover};
use thtn_core::hypergraph::{select_global_nodes, Hypergraph};
use thtn_core::linalg::Matrix;
use thtn_core::measures::{assemble_bias, closeness_centrality, uniqueness_scores, StructuralBias};
use thtn_core::model::{loss_and_metrics, Model, ModelInputs};
use thtn_core::rng::{derive_seed, seeded};
use thtn_core::spectral::{hypergraph_laplacian, laplacian_eigenvectors, LaplacianEigen};
use thtn_core::split::{make_splits, Split, SplitMask};
use thtn_core::tensor::ParamSet;
use thtn_core::train::{train, EpochRecord};
use thtn_core::Graph;

use crate::config::RunConfig;
use crate::error::{Error, Result, StageExt};
use crate::io::{self, LoadedGraph, NodeIds};

/// Wall-clock seconds per stage, kept apart from [`RunRecord`] so that
/// records stay byte-identical across runs.
#[derive(Debug, Clone, Default)]
pub struct Timings(pub Vec<(&'static str, f64)>);

impl Timings {
    fn time<T>(&mut self, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f().stage(stage);
        self.0.push((stage, start.elapsed().as_secs_f64()));
        out
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (stage, secs) in &self.0 {
            let _ = writeln!(s, "{stage}\t{secs:.3}");
        }
        s
    }
}

fn required<'a>(path: &'a Option<std::path::PathBuf>, what: &str) -> Result<&'a std::path::Path> {
    path.as_deref()
        .ok_or_else(|| Error::Config(format!("no {what} path configured")))
}

pub fn load_input_graph(config: &RunConfig) -> Result<LoadedGraph> {
    io::load_graph(required(&config.graph, "graph")?)
}

/// Communities from the cover file when configured, otherwise from the
/// detector; uncovered nodes become singletons.
pub fn communities(config: &RunConfig, graph: &Graph, ids: &NodeIds) -> Result<CommunityCover> {
    let cover = match &config.cover {
        Some(path) => io::load_cover(path, ids)?,
        None => detect_communities(graph, &config.algorithm, &config.algorithm_params)?,
    };
    Ok(cover.covering(graph.num_nodes())?)
}

pub fn construct(config: &RunConfig, graph: &Graph, ids: &NodeIds) -> Result<Hypergraph> {
    let cover = communities(config, graph, ids)?;
    if config.n_global > graph.num_nodes() {
        return Err(Error::Config(format!(
            "n_global {} exceeds {} nodes",
            config.n_global,
            graph.num_nodes()
        )));
    }
    let globals = select_global_nodes(graph, config.n_global, config.closeness);
    Ok(Hypergraph::from_parts(graph, cover.communities().to_vec(), globals)?)
}

pub fn structural_bias(config: &RunConfig, hypergraph: &Hypergraph) -> StructuralBias {
    assemble_bias(hypergraph, config.model.flags.normalize_bias)
}

pub fn spectral(config: &RunConfig, hypergraph: &Hypergraph) -> Result<LaplacianEigen> {
    Ok(laplacian_eigenvectors(&hypergraph_laplacian(hypergraph), config.k)?)
}

/// Everything training needs, built once per configuration.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub loaded: LoadedGraph,
    pub hypergraph: Hypergraph,
    pub inputs: ModelInputs,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    /// Splits from file, shared by every repeat.
    pub splits: Option<SplitMask>,
}

impl Prepared {
    pub fn model(&self, config: &RunConfig) -> Result<Model> {
        Ok(Model::new(
            config.model_config(),
            self.inputs.features.cols(),
            self.num_classes,
            self.hypergraph.num_edges(),
            self.inputs.eigenvectors.cols(),
        )?)
    }

    pub fn splits_for(&self, config: &RunConfig, repeat: usize) -> Result<SplitMask> {
        match &self.splits {
            Some(s) => Ok(s.clone()),
            None => Ok(make_splits(
                self.labels.len(),
                config.ratios,
                seeds(config.seed, repeat).split,
                config.stratified.then_some(self.labels.as_slice()),
            )?),
        }
    }
}

/// Loads inputs and builds (or reads back) the hypergraph, bias and
/// eigenvectors. A configured hypergraph or eigenvector path is used when
/// the file exists.
pub fn prepare(config: &RunConfig, timings: &mut Timings) -> Result<Prepared> {
    let (loaded, features, labels, splits) = timings.time("load", || {
        let loaded = load_input_graph(config)?;
        let m = loaded.graph.num_nodes();
        let ids = loaded.resolver();
        let features = match &config.features {
            Some(p) => io::load_features(p, m)?,
            None => Matrix::identity(m),
        };
        let labels = io::load_labels(required(&config.labels, "labels")?, &ids)?;
        let splits = match &config.splits {
            Some(p) => Some(io::load_splits(p, &ids)?),
            None => None,
        };
        Ok((loaded, features, labels, splits))
    })?;
    prepare_data(config, loaded, features, labels, splits, timings)
}

/// [`prepare`] for data already in memory.
pub fn prepare_data(
    config: &RunConfig,
    loaded: LoadedGraph,
    features: Matrix,
    labels: Vec<usize>,
    splits: Option<SplitMask>,
    timings: &mut Timings,
) -> Result<Prepared> {
    if labels.len() != loaded.graph.num_nodes() {
        return Err(Error::Config(format!(
            "{} labels for {} nodes",
            labels.len(),
            loaded.graph.num_nodes()
        )))
        .stage("load");
    }
    let graph = &loaded.graph;
    let hypergraph = timings.time("construct", || match &config.hypergraph {
        Some(p) if p.exists() => io::load_hypergraph(p, graph),
        _ => construct(config, graph, &loaded.resolver()),
    })?;
    let (bias, closeness, uniqueness) = timings.time("features", || {
        let cover = CommunityCover::new(hypergraph.communities().to_vec())?;
        Ok((
            structural_bias(config, &hypergraph),
            closeness_centrality(graph, config.closeness),
            uniqueness_scores(&cover, graph.num_nodes())?,
        ))
    })?;
    let eig = timings.time("spectral", || match &config.eigenvectors {
        Some(p) if p.exists() => io::load_eigenvectors(p, graph.num_nodes()),
        _ => spectral(config, &hypergraph),
    })?;
    let inputs = ModelInputs::new(
        graph,
        features,
        &hypergraph,
        bias,
        closeness,
        uniqueness,
        eig.vectors,
    )
    .stage("features")?;
    let num_classes = labels.iter().max().map_or(0, |&c| c + 1);
    Ok(Prepared {
        loaded,
        hypergraph,
        inputs,
        labels,
        num_classes,
        splits,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepeatSeeds {
    pub split: u64,
    pub init: u64,
    pub train: u64,
}

/// Per-repeat seeds derived from the master seed.
pub fn seeds(master: u64, repeat: usize) -> RepeatSeeds {
    let r = 3 * repeat as u64;
    RepeatSeeds {
        split: derive_seed(master, r),
        init: derive_seed(master, r + 1),
        train: derive_seed(master, r + 2),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub split_seed: u64,
    pub init_seed: u64,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub stopped_early: bool,
    pub history: Vec<EpochRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub seed: u64,
    pub num_nodes: usize,
    pub num_hyperedges: usize,
    pub global_nodes: Vec<usize>,
    pub repeats: Vec<RepeatRecord>,
    pub mean_test_acc: f64,
    /// Population standard deviation over repeats.
    pub std_test_acc: f64,
}

impl RunRecord {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    /// `repeat<TAB>epoch<TAB>train_loss<TAB>train_acc<TAB>val_loss<TAB>val_acc`.
    pub fn history_tsv(&self) -> String {
        let mut s = String::from("repeat\tepoch\ttrain_loss\ttrain_acc\tval_loss\tval_acc\n");
        for r in &self.repeats {
            for e in &r.history {
                let _ = writeln!(
                    s,
                    "{}\t{}\t{}\t{}\t{}\t{}",
                    r.repeat, e.epoch, e.train_loss, e.train_acc, e.val_loss, e.val_acc
                );
            }
        }
        s
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Output of [`run_pipeline`].
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub record: RunRecord,
    pub timings: Timings,
    pub model: Model,
    /// Best parameters of the first repeat.
    pub params: ParamSet,
}

pub fn run_pipeline(config: &RunConfig) -> Result<PipelineOutput> {
    let mut timings = Timings::default();
    let prepared = prepare(config, &mut timings)?;
    run_prepared(config, &prepared, timings)
}

pub fn run_prepared(config: &RunConfig, prepared: &Prepared, mut timings: Timings) -> Result<PipelineOutput> {
    if config.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let model = prepared.model(config).stage("train")?;
    let train_config = config.train_config();
    let mut repeats = Vec::with_capacity(config.repeats);
    let mut first_params = None;
    for r in 0..config.repeats {
        let s = seeds(config.seed, r);
        let outcome = timings.time("train", || {
            let split = prepared.splits_for(config, r)?;
            let params = model.init_params(&mut seeded(s.init));
            Ok(train(
                &model,
                params,
                &prepared.inputs,
                &prepared.labels,
                &split,
                &train_config,
                s.train,
            )?)
        })?;
        repeats.push(RepeatRecord {
            repeat: r,
            split_seed: s.split,
            init_seed: s.init,
            best_epoch: outcome.best_epoch,
            best_val_acc: outcome.best_val_acc,
            test_loss: outcome.test_loss,
            test_acc: outcome.test_acc,
            stopped_early: outcome.stopped_early,
            history: outcome.history,
        });
        if first_params.is_none() {
            first_params = Some(outcome.best_params);
        }
    }
    let accs: Vec<f64> = repeats.iter().map(|r| r.test_acc).collect();
    let (mean, std) = mean_std(&accs);
    let record = RunRecord {
        seed: config.seed,
        num_nodes: prepared.loaded.graph.num_nodes(),
        num_hyperedges: prepared.hypergraph.num_edges(),
        global_nodes: prepared.hypergraph.global_nodes().to_vec(),
        repeats,
        mean_test_acc: mean,
        std_test_acc: std,
    };
    Ok(PipelineOutput {
        record,
        timings,
        model,
        params: first_params.expect("at least one repeat"),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitMetrics {
    pub loss: f64,
    pub accuracy: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train: SplitMetrics,
    pub val: SplitMetrics,
    pub test: SplitMetrics,
}

/// Scores saved parameters on the splits of repeat 0 (or the split file).
pub fn evaluate(config: &RunConfig, model: &Model, params: &ParamSet) -> Result<EvalReport> {
    let mut timings = Timings::default();
    let prepared = prepare(config, &mut timings)?;
    let split = prepared.splits_for(config, 0).stage("eval")?;
    let logits = model.predict(params, &prepared.inputs).stage("eval")?;
    let metrics = |s: Split| -> Result<SplitMetrics> {
        let rows = split.nodes(s);
        let (loss, accuracy) = loss_and_metrics(&logits, &prepared.labels, &rows).stage("eval")?;
        Ok(SplitMetrics {
            loss,
            accuracy,
            count: rows.len(),
        })
    };
    Ok(EvalReport {
        train: metrics(Split::Train)?,
        val: metrics(Split::Val)?,
        test: metrics(Split::Test)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n_global: usize,
    pub mean_acc: f64,
    pub std: f64,
}

/// One full run per global node count. Stored hypergraphs and eigenvectors
/// are ignored since both depend on the count.
pub fn sweep_global_nodes(config: &RunConfig, values: &[usize]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(values.len());
    for &n_global in values {
        let c = RunConfig {
            n_global,
            hypergraph: None,
            eigenvectors: None,
            ..config.clone()
        };
        let out = run_pipeline(&c)?;
        rows.push(SweepRow {
            n_global,
            mean_acc: out.record.mean_test_acc,
            std: out.record.std_test_acc,
        });
    }
    Ok(rows)
}

pub fn sweep_tsv(rows: &[SweepRow]) -> String {
    let mut s = String::from("n_g\tmean_acc\tstd\n");
    for r in rows {
        let _ = writeln!(s, "{}\t{}\t{}", r.n_global, r.mean_acc, r.std);
    }
    s
}

/// Loads the graph and builds its hypergraph, for the `construct` command.
pub fn construct_from_config(config: &RunConfig) -> Result<(LoadedGraph, Hypergraph)> {
    let loaded = load_input_graph(config).stage("load")?;
    let h = construct(config, &loaded.graph, &loaded.resolver()).stage("construct")?;
    Ok((loaded, h))
}
