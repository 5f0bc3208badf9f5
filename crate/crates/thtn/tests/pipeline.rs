use std::process::Command;

use thtn::error::Error;
use thtn::pipeline::{run_pipeline, sweep_global_nodes, sweep_tsv};
use thtn::synthetic::{connector_dataset, planted_partition};
use thtn::RunConfig;

fn toy(dir: &std::path::Path) -> RunConfig {
    let data = planted_partition(24, 2, 0.5, 0.05, 4, 1.0, 3);
    let mut config = data.write(dir).unwrap();
    config.optimizer.epochs = 30;
    config
}

#[test]
fn config_round_trips_through_json() {
    let mut config = RunConfig::default();
    config.n_global = 3;
    config.optimizer.lr = 0.0123456789;
    config.model.flags.pe = false;
    config.algorithm_params.insert("alpha".into(), 1.25);
    let back = RunConfig::from_json(&config.to_json()).unwrap();
    assert_eq!(back, config);
    assert_eq!(back.to_json(), config.to_json());
}

#[test]
fn repeated_runs_are_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy(dir.path());
    config.repeats = 2;
    config.seed = 7;
    let a = run_pipeline(&config).unwrap();
    let b = run_pipeline(&config).unwrap();
    assert_eq!(a.record.to_json(), b.record.to_json());
    assert_eq!(a.record.history_tsv(), b.record.history_tsv());
    assert_eq!(a.record.repeats.len(), 2);
    assert_ne!(a.record.repeats[0].split_seed, a.record.repeats[1].split_seed);
}

#[test]
fn missing_labels_fail_in_the_load_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy(dir.path());
    config.labels = Some(dir.path().join("absent.tsv"));
    match run_pipeline(&config) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "load"),
        Err(other) => panic!("unexpected error {other}"),
        Ok(_) => panic!("missing labels must fail"),
    }
}

#[test]
fn sweep_emits_one_row_per_value() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy(dir.path());
    let single = sweep_global_nodes(&config, &[0]).unwrap();
    assert_eq!(single.len(), 1);
    let rows = sweep_global_nodes(&config, &[0, 1, 2]).unwrap();
    let again = sweep_global_nodes(&config, &[0, 1, 2]).unwrap();
    assert_eq!(rows.iter().map(|r| r.n_global).collect::<Vec<_>>(), vec![0, 1, 2]);
    let tsv = sweep_tsv(&rows);
    assert_eq!(tsv, sweep_tsv(&again));
    assert_eq!(tsv.lines().next(), Some("n_g\tmean_acc\tstd"));
    assert_eq!(tsv.lines().count(), 4);
}

#[test]
fn global_node_reaches_isolated_test_nodes() {
    let dir = tempfile::tempdir().unwrap();
    let (data, split) = connector_dataset();
    let mut config = data.write(dir.path()).unwrap();
    let splits = dir.path().join("splits.tsv");
    std::fs::write(&splits, thtn::io::format_splits(&split)).unwrap();
    config.splits = Some(splits);
    config.optimizer.epochs = 100;
    config.repeats = 5;
    let rows = sweep_global_nodes(&config, &[0, 1]).unwrap();
    assert!(rows[1].mean_acc >= rows[0].mean_acc, "{rows:?}");
}

#[test]
fn too_many_global_nodes_is_a_construct_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = toy(dir.path());
    config.n_global = 100;
    match run_pipeline(&config) {
        Err(Error::Stage { stage, .. }) => assert_eq!(stage, "construct"),
        other => panic!("expected a construct error, got {:?}", other.map(|_| ())),
    }
}

fn thtn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thtn"))
}

#[test]
fn cli_overrides_and_seed_variable() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy(dir.path());
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, config.to_json()).unwrap();
    let run = |seed: Option<&str>, extra: &[&str]| {
        let mut cmd = thtn();
        cmd.args(["train", "--config", cfg.to_str().unwrap(), "--epochs", "5"]).args(extra);
        match seed {
            Some(s) => cmd.env("THTN_SEED", s),
            None => cmd.env_remove("THTN_SEED"),
        };
        let out = cmd.output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let base = run(None, &["--seed", "4"]);
    assert_eq!(base, run(Some("4"), &[]));
    assert_eq!(base, run(None, &["--seed=4"]));
    assert!(base.contains("mean_test_acc"));
}

#[test]
fn cli_failures_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let config = toy(dir.path());
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, config.to_json()).unwrap();
    let cfg = cfg.to_str().unwrap();
    let cases: [&[&str]; 4] = [
        &["train", "--config", cfg, "--labels", "/nonexistent/labels.tsv"],
        &["construct", "--config", cfg, "--no-such-key", "1"],
        &["eval", "--config", cfg],
        &["accept", "--suite", "bogus"],
    ];
    for args in cases {
        let out = thtn().args(args).output().unwrap();
        assert!(!out.status.success(), "{args:?} succeeded");
        assert!(!out.stderr.is_empty());
    }
    let out = thtn()
        .args(["train", "--config", cfg, "--labels", "/nonexistent/labels.tsv"])
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains("load stage"));
}

#[test]
fn cli_construct_writes_id_map_for_remapped_graphs() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.tsv");
    std::fs::write(&graph, "a\tb\nb\tc\nc\ta\nc\td\n").unwrap();
    let out = dir.path().join("hg.json");
    let status = thtn()
        .args(["construct", "--graph", graph.to_str().unwrap(), "--n-global", "1"])
        .args(["--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let ids = std::fs::read_to_string(dir.path().join("hg.ids.tsv")).unwrap();
    assert_eq!(ids, "0\ta\n1\tb\n2\tc\n3\td\n");
    let file: thtn::io::HypergraphFile = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(file.num_nodes, 4);
    assert_eq!(file.global_nodes.len(), 1);
}
