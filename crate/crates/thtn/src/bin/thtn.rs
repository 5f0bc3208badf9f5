//! `thtn` command line.
//!
//! Every command starts from `--config` (or defaults), applies the
//! remaining `--key value` pairs as overrides and then `THTN_SEED`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use thtn::accept::{self, Suite};
use thtn::config::parse_override_args;
use thtn::error::StageExt;
use thtn::io::{self, Checkpoint, HypergraphFile};
use thtn::pipeline::{self, Prepared, Timings};
use thtn::RunConfig;
use thtn_core::measures::BiasFlags;

#[derive(Parser)]
#[command(name = "thtn", version, about = "Topology-biased hypergraph transformer for node classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect communities, add global nodes and write the hypergraph JSON.
    Construct(Common),
    /// Write the per-membership structural bias table (TSV).
    Features(Common),
    /// Write the Laplacian eigenvectors (CSV).
    Spectral(Common),
    /// Train; `--out` is a directory for record.json, history.tsv and
    /// checkpoint.json.
    Train(Common),
    /// Score the configured checkpoint on the train, val and test splits.
    Eval(Common),
    /// One run per global node count, as `n_g<TAB>mean_acc<TAB>std`.
    Sweep {
        /// Comma-separated global node counts.
        #[arg(long, value_delimiter = ',')]
        values: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference check of the loss gradient on the configured data.
    Gradcheck(Common),
    /// Run the acceptance suites and print one line per criterion.
    Accept {
        /// oracles, gradients, overfit or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// `--key value` overrides of configuration fields.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

impl Common {
    /// Pulls options clap left among the overrides (anything after the
    /// first unknown `--key`) back out.
    fn take(&mut self, key: &str) -> anyhow::Result<Option<String>> {
        let pairs = parse_override_args(&self.overrides)?;
        let found = pairs.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.clone());
        if found.is_some() {
            self.overrides = pairs
                .into_iter()
                .filter(|(k, _)| k != key)
                .flat_map(|(k, v)| [format!("--{k}"), v])
                .collect();
        }
        Ok(found)
    }

    fn resolve(mut self) -> anyhow::Result<Resolved> {
        if let Some(p) = self.take("config")? {
            self.config = Some(p.into());
        }
        if let Some(p) = self.take("out")? {
            self.out = Some(p.into());
        }
        let values = self.take("values")?;
        let base = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let overrides = parse_override_args(&self.overrides)?;
        Ok(Resolved {
            config: base.with_overrides(&overrides)?.with_env_seed()?,
            out: self.out,
            values,
        })
    }
}

struct Resolved {
    config: RunConfig,
    out: Option<PathBuf>,
    values: Option<String>,
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => io::write_text(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn report_timings(timings: &Timings) {
    eprint!("{}", timings.to_tsv());
}

fn load_hypergraph(config: &RunConfig) -> anyhow::Result<(io::LoadedGraph, thtn_core::Hypergraph)> {
    match &config.hypergraph {
        Some(p) => {
            let loaded = pipeline::load_input_graph(config).stage("load")?;
            let h = io::load_hypergraph(p, &loaded.graph).stage("load")?;
            Ok((loaded, h))
        }
        None => Ok(pipeline::construct_from_config(config)?),
    }
}

fn construct(common: Resolved) -> anyhow::Result<()> {
    let config = &common.config;
    let (loaded, h) = pipeline::construct_from_config(config)?;
    emit(common.out.as_deref(), &io::format_hypergraph(&h))?;
    if let (Some(ids), Some(out)) = (&loaded.id_map, &common.out) {
        io::save_id_map(&out.with_extension("ids.tsv"), ids)?;
    }
    let file = HypergraphFile::from_hypergraph(&h);
    eprintln!(
        "{} nodes, {} hyperedges, global nodes {:?}",
        file.num_nodes,
        file.hyperedges.len(),
        file.global_nodes
    );
    Ok(())
}

fn features(common: Resolved) -> anyhow::Result<()> {
    let config = &common.config;
    let (_, h) = load_hypergraph(config)?;
    let bias = pipeline::structural_bias(config, &h);
    let flags = config.model.flags;
    let rows = io::bias_rows(
        &bias,
        BiasFlags {
            lc: flags.lc,
            kc: flags.kc,
            hd: flags.hd,
            cc: flags.cc,
        },
    );
    emit(common.out.as_deref(), &io::format_bias(&rows))
}

fn spectral(common: Resolved) -> anyhow::Result<()> {
    let config = &common.config;
    // the Laplacian only needs the hyperedges
    let h = match (&config.graph, &config.hypergraph) {
        (None, Some(p)) => {
            let file: HypergraphFile = serde_json::from_str(&io::read_text(p).stage("load")?)
                .with_context(|| format!("{}", p.display()))?;
            thtn_core::Hypergraph::from_hyperedges(file.num_nodes, file.hyperedges).stage("load")?
        }
        _ => load_hypergraph(config)?.1,
    };
    let eig = pipeline::spectral(config, &h).stage("spectral")?;
    emit(common.out.as_deref(), &io::format_eigenvectors(&eig))
}

fn train(common: Resolved) -> anyhow::Result<()> {
    let config = &common.config;
    let out = pipeline::run_pipeline(config)?;
    let record = &out.record;
    let checkpoint = Checkpoint::new(&out.model, &out.params);
    if let Some(dir) = &common.out {
        io::write_text(&dir.join("record.json"), &record.to_json())?;
        io::write_text(&dir.join("history.tsv"), &record.history_tsv())?;
        io::save_checkpoint(&dir.join("checkpoint.json"), &checkpoint)?;
    }
    if let Some(p) = &config.checkpoint {
        io::save_checkpoint(p, &checkpoint)?;
    }
    if let Some(p) = &config.history {
        io::write_text(p, &record.history_tsv())?;
    }
    report_timings(&out.timings);
    for r in &record.repeats {
        println!(
            "repeat {}\tbest_epoch {}\tbest_val_acc {}\ttest_acc {}",
            r.repeat, r.best_epoch, r.best_val_acc, r.test_acc
        );
    }
    println!("mean_test_acc {}\tstd {}", record.mean_test_acc, record.std_test_acc);
    Ok(())
}

fn eval(common: Resolved) -> anyhow::Result<()> {
    let config = &common.config;
    let Some(path) = &config.checkpoint else {
        bail!("eval needs a checkpoint path (--checkpoint)");
    };
    let checkpoint = io::load_checkpoint(path).stage("load")?;
    let model = checkpoint.model().stage("load")?;
    let params = checkpoint.params().stage("load")?;
    let report = pipeline::evaluate(config, &model, &params)?;
    let json = serde_json::to_string_pretty(&report).context("serializing report")?;
    emit(common.out.as_deref(), &(json + "\n"))
}

fn sweep(values: &[usize], common: Resolved) -> anyhow::Result<()> {
    let mut values = values.to_vec();
    if let Some(v) = &common.values {
        values = v
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad --values `{v}`"))?;
    }
    if values.is_empty() {
        bail!("sweep needs --values, e.g. --values 0,1,2");
    }
    let rows = pipeline::sweep_global_nodes(&common.config, &values)?;
    emit(common.out.as_deref(), &pipeline::sweep_tsv(&rows))
}

const GRADCHECK_TOL: f64 = 1e-4;

fn gradcheck(common: Resolved) -> anyhow::Result<bool> {
    let config = &common.config;
    let mut timings = Timings::default();
    let prepared: Prepared = pipeline::prepare(config, &mut timings)?;
    let model = prepared.model(config)?;
    let params = model.init_params(&mut thtn_core::rng::seeded(config.seed));
    let err = accept::model_gradient_error(&model, &params, &prepared.inputs, &prepared.labels);
    let mut text = format!("model\t{err:e}\n");
    for (name, e) in accept::op_gradient_errors() {
        text.push_str(&format!("{name}\t{e:e}\n"));
    }
    emit(common.out.as_deref(), &text)?;
    report_timings(&timings);
    Ok(err <= GRADCHECK_TOL)
}

fn acceptance(suite: &str, out: Option<&Path>) -> anyhow::Result<bool> {
    let Some(suite) = Suite::parse(suite) else {
        bail!("unknown suite `{suite}` (oracles, gradients, overfit, all)");
    };
    let entries = accept::run_acceptance(suite);
    emit(out, &accept::report_tsv(&entries))?;
    eprint!("{}", accept::timing_lines(&entries));
    Ok(entries.iter().all(|e| e.passed()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Construct(c) => c.resolve().and_then(construct).map(|_| true),
        Command::Features(c) => c.resolve().and_then(features).map(|_| true),
        Command::Spectral(c) => c.resolve().and_then(spectral).map(|_| true),
        Command::Train(c) => c.resolve().and_then(train).map(|_| true),
        Command::Eval(c) => c.resolve().and_then(eval).map(|_| true),
        Command::Sweep { values, common } => common.resolve().and_then(|c| sweep(&values, c)).map(|_| true),
        Command::Gradcheck(c) => c.resolve().and_then(gradcheck),
        Command::Accept { suite, out } => acceptance(&suite, out.as_deref()),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("check failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
