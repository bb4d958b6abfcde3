use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub const DEFAULT_TEST_LEN: usize = 300;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Range<usize>,
    pub test: Range<usize>,
}

/// Rolling-origin evaluation plan over one series.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub folds: Vec<Fold>,
    pub test_len: usize,
}

/// Contiguous test blocks at the tail of a series of `n_samples`, each fold
/// training on the `train_len` samples immediately before its test block.
pub fn kfold_splits(n_samples: usize, train_len: usize, folds: usize, test_len: usize) -> Result<FoldPlan> {
    if folds == 0 {
        return Err(invalid("folds", "must be >= 1"));
    }
    if test_len == 0 || train_len == 0 {
        return Err(invalid("test_len", "train and test lengths must be >= 1"));
    }
    let needed = folds * test_len + train_len;
    if n_samples < needed {
        return Err(Error::SeriesTooShort { needed, have: n_samples });
    }
    let tail = n_samples - folds * test_len;
    let folds = (0..folds)
        .map(|k| {
            let start = tail + k * test_len;
            Fold {
                train: (start - train_len)..start,
                test: start..start + test_len,
            }
        })
        .collect();
    Ok(FoldPlan { folds, test_len })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fold_uses_tail() {
        let plan = kfold_splits(1000, 500, 1, 300).unwrap();
        assert_eq!(plan.folds.len(), 1);
        assert_eq!(plan.folds[0].test, 700..1000);
        assert_eq!(plan.folds[0].train, 200..700);
    }

    #[test]
    fn test_blocks_disjoint_and_causal() {
        let plan = kfold_splits(5000, 1000, 5, 300).unwrap();
        let mut covered = 0;
        for (i, a) in plan.folds.iter().enumerate() {
            covered += a.test.len();
            assert!(a.train.end <= a.test.start);
            for b in &plan.folds[i + 1..] {
                assert!(a.test.end <= b.test.start || b.test.end <= a.test.start);
            }
        }
        assert_eq!(covered, 5 * 300);
    }

    #[test]
    fn insufficient_data() {
        assert!(matches!(kfold_splits(1000, 600, 2, 300), Err(Error::SeriesTooShort { .. })));
        assert!(kfold_splits(1000, 100, 0, 300).is_err());
    }
}
