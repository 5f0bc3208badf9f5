//! Full-batch training with early stopping on validation accuracy.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{loss_and_metrics, Model, ModelInputs};
use crate::rng::seeded;
use crate::split::{Split, SplitMask};
use crate::tensor::{Adam, AdamConfig, ParamSet, Tape};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    /// Stop after this many epochs without a strictly better validation
    /// accuracy.
    pub patience: usize,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 500,
            patience: 100,
            adam: AdamConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub stopped_early: bool,
    pub best_params: ParamSet,
}

/// Trains `params` in place of a copy and evaluates the test split once,
/// with the parameters of the best validation epoch.
///
/// `seed` drives dropout and eigenvector sign flips.
pub fn train(
    model: &Model,
    params: ParamSet,
    inputs: &ModelInputs,
    labels: &[usize],
    split: &SplitMask,
    config: &TrainConfig,
    seed: u64,
) -> Result<TrainOutcome> {
    let train_rows = split.nodes(Split::Train);
    let val_rows = split.nodes(Split::Val);
    let test_rows = split.nodes(Split::Test);
    if train_rows.is_empty() || val_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::EmptyMask);
    }
    if labels.len() != inputs.num_nodes() || split.0.len() != inputs.num_nodes() {
        return Err(Error::Invalid("labels and splits must cover every node".into()));
    }
    let mut params = params;
    let mut optimizer = Adam::new(config.adam, params.values());
    let mut rng = seeded(seed);
    let mut history = Vec::new();
    let mut best: Option<(usize, f64, ParamSet)> = None;
    let mut stopped_early = false;

    for epoch in 1..=config.epochs {
        let mut tape = Tape::new();
        let (vars, out) = model.run(&mut tape, &params, inputs, true, &mut rng)?;
        let loss = tape.cross_entropy(out.logits, labels, &train_rows)?;
        if !tape.value(loss)[(0, 0)].is_finite() {
            return Err(Error::NonFinite("training loss"));
        }
        let grads = tape.backward(loss)?;
        let grads: Vec<_> = vars
            .iter()
            .zip(params.values())
            .map(|(&v, p)| grads.get_or_zeros(v, p))
            .collect();
        optimizer.step(params.values_mut(), &grads)?;

        let logits = model.predict(&params, inputs)?;
        let (train_loss, train_acc) = loss_and_metrics(&logits, labels, &train_rows)?;
        let (val_loss, val_acc) = loss_and_metrics(&logits, labels, &val_rows)?;
        history.push(EpochRecord {
            epoch,
            train_loss,
            train_acc,
            val_loss,
            val_acc,
        });
        let improved = best.as_ref().is_none_or(|(_, acc, _)| val_acc > *acc);
        if improved {
            best = Some((epoch, val_acc, params.clone()));
        } else if epoch - best.as_ref().map_or(0, |b| b.0) >= config.patience {
            stopped_early = true;
            break;
        }
    }

    let (best_epoch, best_val_acc, best_params) = match best {
        Some(b) => b,
        None => (0, f64::NAN, params),
    };
    let logits = model.predict(&best_params, inputs)?;
    let (test_loss, test_acc) = loss_and_metrics(&logits, labels, &test_rows)?;
    Ok(TrainOutcome {
        history,
        best_epoch,
        best_val_acc,
        test_loss,
        test_acc,
        stopped_early,
        best_params,
    })
}

#[cfg(test)]
mod tests {
    use alloc::vec;

    use super::*;
    use crate::community::CommunityCover;
    use crate::graph::Graph;
    use crate::hypergraph::Hypergraph;
    use crate::linalg::Matrix;
    use crate::measures::{assemble_bias, closeness_centrality, uniqueness_scores, ClosenessMode};
    use crate::model::ModelConfig;
    use crate::rng::RngExt;
    use crate::spectral::{hypergraph_laplacian, laplacian_eigenvectors};

    /// Two 6-cliques joined by one edge; labels follow the cliques.
    fn setup() -> (Model, ModelInputs, Vec<usize>, SplitMask) {
        let mut edges = Vec::new();
        for base in [0, 6] {
            for u in base..base + 6 {
                for v in u + 1..base + 6 {
                    edges.push((u, v));
                }
            }
        }
        edges.push((5, 6));
        let graph = Graph::from_unweighted(12, edges).unwrap();
        let comms = vec![(0..6).collect(), (6..12).collect()];
        let h = Hypergraph::from_parts(&graph, comms, vec![]).unwrap();
        let cover = CommunityCover::new(h.communities().to_vec()).unwrap();
        let mut rng = seeded(0);
        let labels: Vec<usize> = (0..12).map(|i| i / 6).collect();
        let features = Matrix::from_vec(
            12,
            4,
            (0..48)
                .map(|k| rng.gen_range(-1.0..1.0) + if k % 4 == labels[k / 4] { 1.0 } else { 0.0 })
                .collect(),
        )
        .unwrap();
        let inputs = ModelInputs::new(
            &graph,
            features,
            &h,
            assemble_bias(&h, false),
            closeness_centrality(&graph, ClosenessMode::Hops),
            uniqueness_scores(&cover, 12).unwrap(),
            laplacian_eigenvectors(&hypergraph_laplacian(&h), 2).unwrap().vectors,
        )
        .unwrap();
        let config = ModelConfig {
            d: 8,
            heads: 2,
            dropout: 0.1,
            ..ModelConfig::default()
        };
        let model = Model::new(config, 4, 2, 2, 2).unwrap();
        let split = SplitMask(
            (0..12)
                .map(|i| match i % 4 {
                    0 | 1 => Split::Train,
                    2 => Split::Val,
                    _ => Split::Test,
                })
                .collect(),
        );
        (model, inputs, labels, split)
    }

    #[test]
    fn loss_decreases_and_run_is_deterministic() {
        let (model, inputs, labels, split) = setup();
        let params = model.init_params(&mut seeded(1));
        let config = TrainConfig {
            epochs: 60,
            patience: 1000,
            adam: AdamConfig {
                lr: 0.01,
                ..AdamConfig::default()
            },
        };
        let a = train(&model, params.clone(), &inputs, &labels, &split, &config, 3).unwrap();
        let b = train(&model, params, &inputs, &labels, &split, &config, 3).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.test_acc, b.test_acc);
        assert_eq!(a.history.len(), 60);
        assert!(a.history[59].train_loss < a.history[0].train_loss);
        assert!(!a.stopped_early);
    }

    #[test]
    fn early_stopping_counts_from_best_epoch() {
        let (model, inputs, labels, split) = setup();
        let params = model.init_params(&mut seeded(2));
        let config = TrainConfig {
            epochs: 500,
            patience: 5,
            adam: AdamConfig {
                lr: 0.0,
                ..AdamConfig::default()
            },
        };
        // with a zero learning rate nothing improves after the first epoch
        let out = train(&model, params, &inputs, &labels, &split, &config, 0).unwrap();
        assert_eq!(out.best_epoch, 1);
        assert_eq!(out.history.len(), 6);
        assert!(out.stopped_early);
    }

    #[test]
    fn test_accuracy_comes_from_best_snapshot() {
        let (model, inputs, labels, split) = setup();
        let params = model.init_params(&mut seeded(4));
        let config = TrainConfig {
            epochs: 40,
            patience: 1000,
            adam: AdamConfig {
                lr: 0.02,
                ..AdamConfig::default()
            },
        };
        let out = train(&model, params, &inputs, &labels, &split, &config, 1).unwrap();
        let best = &out.history[out.best_epoch - 1];
        assert_eq!(best.val_acc, out.best_val_acc);
        assert!(out.history[..out.best_epoch - 1]
            .iter()
            .all(|r| r.val_acc < out.best_val_acc));
        let logits = model.predict(&out.best_params, &inputs).unwrap();
        let (_, acc) = loss_and_metrics(&logits, &labels, &split.nodes(Split::Test)).unwrap();
        assert_eq!(acc, out.test_acc);
    }

    #[test]
    fn empty_split_is_rejected() {
        let (model, inputs, labels, _) = setup();
        let split = SplitMask(vec![Split::Train; 12]);
        let params = model.init_params(&mut seeded(0));
        let r = train(&model, params, &inputs, &labels, &split, &TrainConfig::default(), 0);
        assert!(matches!(r, Err(Error::EmptyMask)));
    }
}
