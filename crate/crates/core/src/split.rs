//! Train / validation / test splits.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "train" => Some(Split::Train),
            "val" => Some(Split::Val),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One split tag per node.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitMask(pub Vec<Split>);

impl SplitMask {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn nodes(&self, split: Split) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == split)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.0.iter().filter(|&&s| s == split).count()
    }
}

/// Split proportions; must sum to one within 1e-9.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.5,
            val: 0.25,
            test: 0.25,
        }
    }
}

impl SplitRatios {
    fn validate(&self) -> Result<()> {
        let sum = self.train + self.val + self.test;
        let ok = [self.train, self.val, self.test]
            .iter()
            .all(|r| r.is_finite() && *r >= 0.0);
        if !ok || libm::fabs(sum - 1.0) > 1e-9 {
            return Err(Error::RatioSum(sum));
        }
        Ok(())
    }

    /// Sizes for `n` items: validation and test are floored, the remainder
    /// goes to training.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let val = libm::floor(self.val * n as f64) as usize;
        let test = libm::floor(self.test * n as f64) as usize;
        let val = val.min(n);
        let test = test.min(n - val);
        (n - val - test, val, test)
    }
}

/// Random split of `num_nodes` nodes.
///
/// Without `labels` the split is unstratified. With labels, every class is
/// split separately with the same rounding rule.
pub fn make_splits(
    num_nodes: usize,
    ratios: SplitRatios,
    seed: u64,
    labels: Option<&[usize]>,
) -> Result<SplitMask> {
    ratios.validate()?;
    let mut rng = rng::seeded(seed);
    let mut mask = vec![Split::Train; num_nodes];
    let groups: Vec<Vec<usize>> = match labels {
        None => vec![(0..num_nodes).collect()],
        Some(labels) => {
            if labels.len() != num_nodes {
                return Err(Error::Invalid(alloc::format!(
                    "{} labels for {} nodes",
                    labels.len(),
                    num_nodes
                )));
            }
            let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (node, &c) in labels.iter().enumerate() {
                by_class.entry(c).or_default().push(node);
            }
            by_class.into_values().collect()
        }
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let (train, val, _) = ratios.sizes(group.len());
        for (rank, node) in group.into_iter().enumerate() {
            mask[node] = if rank < train {
                Split::Train
            } else if rank < train + val {
                Split::Val
            } else {
                Split::Test
            };
        }
    }
    Ok(SplitMask(mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hundred_nodes_default_ratios() {
        let m = make_splits(100, SplitRatios::default(), 7, None).unwrap();
        assert_eq!(
            (m.count(Split::Train), m.count(Split::Val), m.count(Split::Test)),
            (50, 25, 25)
        );
    }

    #[test]
    fn deterministic_for_seed() {
        let a = make_splits(100, SplitRatios::default(), 7, None).unwrap();
        let b = make_splits(100, SplitRatios::default(), 7, None).unwrap();
        assert_eq!(a, b);
        let c = make_splits(100, SplitRatios::default(), 8, None).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn four_nodes_rounding() {
        // floor(0.25*4)=1 val, floor(0.25*4)=1 test, remainder 2 to train
        let m = make_splits(4, SplitRatios::default(), 1, None).unwrap();
        assert_eq!(
            (m.count(Split::Train), m.count(Split::Val), m.count(Split::Test)),
            (2, 1, 1)
        );
    }

    #[test]
    fn remainder_goes_to_train() {
        // 7 nodes: val floor(1.75)=1, test 1, train 5
        assert_eq!(SplitRatios::default().sizes(7), (5, 1, 1));
    }

    #[test]
    fn bad_ratio_sum() {
        let r = SplitRatios {
            train: 0.5,
            val: 0.3,
            test: 0.3,
        };
        assert!(matches!(make_splits(10, r, 0, None), Err(Error::RatioSum(_))));
    }

    #[test]
    fn stratified_per_class() {
        let labels: Vec<usize> = (0..40).map(|i| i % 2).collect();
        let m = make_splits(40, SplitRatios::default(), 3, Some(&labels)).unwrap();
        for class in 0..2 {
            let train = (0..40)
                .filter(|&i| labels[i] == class && m.0[i] == Split::Train)
                .count();
            assert_eq!(train, 10);
        }
    }
}
