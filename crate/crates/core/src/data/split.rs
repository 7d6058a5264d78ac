use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Dataset;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
    /// `1` means a single shuffled split; `k ≥ 3` means k-fold rotation.
    pub folds: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
            seed: 0,
            folds: 1,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        let fr = [self.train, self.val, self.test];
        if fr.iter().any(|f| !f.is_finite() || *f <= 0.0) {
            return Err(Error::InvalidSplit(format!(
                "fractions must be positive, got {fr:?}"
            )));
        }
        if (fr.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidSplit(format!("fractions must sum to 1, got {fr:?}")));
        }
        if self.folds == 0 || self.folds == 2 {
            return Err(Error::InvalidSplit(format!(
                "fold count must be 1 or at least 3, got {}",
                self.folds
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Split<T> {
    pub train: Dataset<T>,
    pub val: Dataset<T>,
    pub test: Dataset<T>,
    pub indices: SplitIndices,
}

fn shuffled(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    idx
}

/// Row partitions for one split (`folds == 1`) or every fold rotation. In
/// rotation `f`, fold `f` is the test set, fold `f+1 mod k` is validation and
/// the rest is training.
pub fn split_indices(n: usize, config: &SplitConfig) -> Result<Vec<SplitIndices>> {
    config.validate()?;
    let perm = shuffled(n, config.seed);
    if config.folds == 1 {
        let n_train = (n as f64 * config.train).round() as usize;
        let n_val = (n as f64 * config.val).round() as usize;
        if n_train == 0 || n_val == 0 || n_train + n_val >= n {
            return Err(Error::TooFewRows { needed: 3, have: n });
        }
        return Ok(vec![SplitIndices {
            train: perm[..n_train].to_vec(),
            val: perm[n_train..n_train + n_val].to_vec(),
            test: perm[n_train + n_val..].to_vec(),
        }]);
    }
    let k = config.folds;
    if n < k {
        return Err(Error::TooFewRows { needed: k, have: n });
    }
    let bounds: Vec<usize> = (0..=k).map(|f| f * n / k).collect();
    let fold = |f: usize| perm[bounds[f]..bounds[f + 1]].to_vec();
    Ok((0..k)
        .map(|f| {
            let v = (f + 1) % k;
            SplitIndices {
                train: (0..k).filter(|&g| g != f && g != v).flat_map(fold).collect(),
                val: fold(v),
                test: fold(f),
            }
        })
        .collect())
}

fn materialize<T: Scalar>(dataset: &Dataset<T>, indices: SplitIndices) -> Split<T> {
    Split {
        train: dataset.select_rows(&indices.train),
        val: dataset.select_rows(&indices.val),
        test: dataset.select_rows(&indices.test),
        indices,
    }
}

/// Single shuffled train/val/test split; `config.folds` is ignored.
pub fn split<T: Scalar>(dataset: &Dataset<T>, config: &SplitConfig) -> Result<Split<T>> {
    let single = SplitConfig {
        folds: 1,
        ..config.clone()
    };
    let mut parts = split_indices(dataset.n(), &single)?;
    Ok(materialize(dataset, parts.remove(0)))
}

pub fn k_folds<T: Scalar>(dataset: &Dataset<T>, config: &SplitConfig) -> Result<Vec<Split<T>>> {
    Ok(split_indices(dataset.n(), config)?
        .into_iter()
        .map(|ix| materialize(dataset, ix))
        .collect())
}
