//! Run configuration: a JSON file, `THTN_SEED`, then `--key value`
//! overrides, in increasing precedence.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thtn_core::measures::ClosenessMode;
use thtn_core::model::{Flags, LogitActivation, ModelConfig, ScalarEncoder};
use thtn_core::split::SplitRatios;
use thtn_core::tensor::AdamConfig;
use thtn_core::train::TrainConfig;

use crate::error::{Error, Result};
use crate::io::read_text;

pub const SEED_ENV: &str = "THTN_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub lr: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub patience: usize,
    pub heads: usize,
    pub hidden: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            dropout: 0.5,
            epochs: 500,
            patience: 100,
            heads: 4,
            hidden: 64,
        }
    }
}

/// Architecture settings outside the optimizer block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelOptions {
    pub layers: usize,
    pub leaky_slope: f64,
    pub buckets: usize,
    pub scalar_encoder: ScalarEncoder,
    pub logit_activation: LogitActivation,
    pub layer_norm_eps: f64,
    pub flags: Flags,
}

impl Default for ModelOptions {
    fn default() -> Self {
        let m = ModelConfig::default();
        Self {
            layers: m.layers,
            leaky_slope: m.leaky_slope,
            buckets: m.buckets,
            scalar_encoder: m.scalar_encoder,
            logit_activation: m.logit_activation,
            layer_norm_eps: m.layer_norm_eps,
            flags: m.flags,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub graph: Option<PathBuf>,
    pub features: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub splits: Option<PathBuf>,
    /// Precomputed community cover; replaces the detector when set.
    pub cover: Option<PathBuf>,
    pub hypergraph: Option<PathBuf>,
    pub bias: Option<PathBuf>,
    pub eigenvectors: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    /// Per-epoch metrics TSV written by `train`.
    pub history: Option<PathBuf>,
    pub algorithm: String,
    pub algorithm_params: BTreeMap<String, f64>,
    pub n_global: usize,
    pub closeness: ClosenessMode,
    /// Number of Laplacian eigenvectors.
    pub k: usize,
    pub ratios: SplitRatios,
    pub stratified: bool,
    pub seed: u64,
    pub repeats: usize,
    pub optimizer: OptimizerConfig,
    pub model: ModelOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            graph: None,
            features: None,
            labels: None,
            splits: None,
            cover: None,
            hypergraph: None,
            bias: None,
            eigenvectors: None,
            checkpoint: None,
            history: None,
            algorithm: "greedy".into(),
            algorithm_params: BTreeMap::new(),
            n_global: 1,
            closeness: ClosenessMode::Hops,
            k: 8,
            ratios: SplitRatios::default(),
            stratified: false,
            seed: 0,
            repeats: 1,
            optimizer: OptimizerConfig::default(),
            model: ModelOptions::default(),
        }
    }
}

/// Short spellings accepted on the command line.
const ALIASES: &[(&str, &str)] = &[
    ("algo", "algorithm"),
    ("n_g", "n_global"),
    ("d", "optimizer.hidden"),
];

/// Objects searched, in order, for a key given without a dotted path.
const SECTIONS: &[&str] = &["", "optimizer", "model", "model.flags", "ratios"];

impl RunConfig {
    pub fn model_config(&self) -> ModelConfig {
        let m = &self.model;
        ModelConfig {
            d: self.optimizer.hidden,
            heads: self.optimizer.heads,
            layers: m.layers,
            dropout: self.optimizer.dropout,
            leaky_slope: m.leaky_slope,
            buckets: m.buckets,
            scalar_encoder: m.scalar_encoder,
            logit_activation: m.logit_activation,
            layer_norm_eps: m.layer_norm_eps,
            flags: m.flags,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.optimizer.epochs,
            patience: self.optimizer.patience,
            adam: AdamConfig {
                lr: self.optimizer.lr,
                ..AdamConfig::default()
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("serializable");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_text(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Applies `(key, value)` overrides. Keys may be dotted paths
    /// (`optimizer.lr`) or bare names found in one section (`lr`, `pe`);
    /// hyphens read as underscores.
    pub fn with_overrides(&self, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = serde_json::to_value(self).expect("serializable");
        for (key, raw) in overrides {
            let key = key.replace('-', "_");
            let key = ALIASES
                .iter()
                .find(|(a, _)| *a == key)
                .map_or(key.as_str(), |(_, full)| full)
                .to_string();
            let path = resolve_key(&value, &key)?;
            let slot = pointer_mut(&mut value, &path).expect("resolved");
            *slot = if path[0] == "algorithm_params" {
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
            } else {
                parse_value(slot, raw)
            };
        }
        serde_json::from_value(value).map_err(|e| Error::Config(format!("override: {e}")))
    }

    /// Replaces the seed with `THTN_SEED` when set.
    pub fn with_env_seed(mut self) -> Result<Self> {
        if let Ok(s) = std::env::var(SEED_ENV) {
            self.seed = s
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("{SEED_ENV}={s} is not an integer")))?;
        }
        Ok(self)
    }
}

fn resolve_key(root: &Value, key: &str) -> Result<Vec<String>> {
    let parts: Vec<String> = key.split('.').map(String::from).collect();
    if parts.len() > 1 {
        return if pointer(root, &parts).is_some() {
            Ok(parts)
        } else {
            Err(Error::Config(format!("unknown config key `{key}`")))
        };
    }
    for section in SECTIONS {
        let mut path: Vec<String> = section
            .split('.')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        path.push(key.to_string());
        if pointer(root, &path).is_some() {
            return Ok(path);
        }
    }
    // map-valued settings such as algorithm parameters
    if let Some(Value::Object(_)) = root.get("algorithm_params") {
        if matches!(key, "alpha" | "epsilon") {
            return Ok(vec!["algorithm_params".into(), key.into()]);
        }
    }
    Err(Error::Config(format!("unknown config key `{key}`")))
}

fn pointer<'a>(root: &'a Value, path: &[String]) -> Option<&'a Value> {
    path.iter().try_fold(root, |v, p| v.get(p))
}

fn pointer_mut<'a>(root: &'a mut Value, path: &[String]) -> Option<&'a mut Value> {
    let (last, init) = path.split_last()?;
    let parent = init.iter().try_fold(root, |v, p| v.get_mut(p))?;
    let obj = parent.as_object_mut()?;
    Some(obj.entry(last.clone()).or_insert(Value::Null))
}

fn parse_value(current: &Value, raw: &str) -> Value {
    match current {
        Value::String(_) | Value::Null => Value::String(raw.to_string()),
        _ => serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string())),
    }
}

/// Splits `--key value` / `--flag` tokens into pairs; a flag followed by
/// another `--` token or nothing reads as `true`.
pub fn parse_override_args(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut k = 0;
    while k < args.len() {
        let key = args[k]
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected `--key`, found `{}`", args[k])))?;
        if let Some((name, value)) = key.split_once('=') {
            out.push((name.to_string(), value.to_string()));
            k += 1;
            continue;
        }
        match args.get(k + 1) {
            Some(v) if !v.starts_with("--") => {
                out.push((key.to_string(), v.clone()));
                k += 2;
            }
            _ => {
                out.push((key.to_string(), "true".into()));
                k += 1;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(args: &[&str]) -> Vec<(String, String)> {
        let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        parse_override_args(&args).unwrap()
    }

    #[test]
    fn defaults_follow_the_training_protocol() {
        let c = RunConfig::default();
        assert_eq!(c.optimizer.lr, 0.001);
        assert_eq!(c.optimizer.dropout, 0.5);
        assert_eq!(c.optimizer.epochs, 500);
        assert_eq!(c.optimizer.patience, 100);
        assert_eq!(c.optimizer.heads, 4);
        assert_eq!(c.optimizer.hidden, 64);
        assert_eq!(c.model.layers, 1);
        assert_eq!(RunConfig::from_json("{}").unwrap(), c);
    }

    #[test]
    fn round_trips_through_json() {
        let mut c = RunConfig::default();
        c.graph = Some("g.tsv".into());
        c.optimizer.lr = 0.1 + 0.2;
        c.model.flags.pe = false;
        c.algorithm_params.insert("alpha".into(), 1.25);
        assert_eq!(RunConfig::from_json(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn overrides_by_bare_and_dotted_keys() {
        let c = RunConfig::default()
            .with_overrides(&pairs(&[
                "--lr", "0.01", "--pe", "false", "--graph", "x.tsv", "--n-global", "3",
                "--optimizer.heads", "2", "--normalize-bias", "--algo", "greedy", "--alpha", "2",
            ]))
            .unwrap();
        assert_eq!(c.optimizer.lr, 0.01);
        assert!(!c.model.flags.pe);
        assert_eq!(c.graph.as_deref(), Some(Path::new("x.tsv")));
        assert_eq!(c.n_global, 3);
        assert_eq!(c.optimizer.heads, 2);
        assert!(c.model.flags.normalize_bias);
        assert_eq!(c.algorithm_params["alpha"], 2.0);
    }

    #[test]
    fn unknown_key_and_bad_value_fail() {
        assert!(RunConfig::default().with_overrides(&pairs(&["--nope", "1"])).is_err());
        assert!(RunConfig::default().with_overrides(&pairs(&["--lr", "fast"])).is_err());
        assert!(RunConfig::from_json(r#"{"typo": 1}"#).is_err());
    }
}
