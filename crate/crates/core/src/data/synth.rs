use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::linalg::Dataset;

pub const MAJORITY: &str = "majority";
pub const MINORITY: &str = "minority";

/// Per-feature `(label-1 mean, label-0 mean)`, unit variance.
const CLASS_MEANS: [(f64, f64); 5] = [(0.5, -0.5), (1.0, 1.0), (0.5, -0.5), (-1.0, 1.0), (0.0, 0.0)];

fn standard_normal() -> Normal<f64> {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Balanced two-class Gaussian data with 3 to 5 features named `f1..`.
/// Rows are shuffled so classes are interleaved.
pub fn synth_classification(n: usize, num_features: usize, seed: u64) -> Result<Dataset<f64>> {
    if !(3..=5).contains(&num_features) {
        return Err(Error::BadFeatureCount(num_features));
    }
    if n == 0 || !n.is_multiple_of(2) {
        return Err(Error::OddSampleCount(n));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<f64> = (0..n).map(|i| if i < n / 2 { 1.0 } else { 0.0 }).collect();
    labels.shuffle(&mut rng);
    let noise = standard_normal();
    let x = Array2::from_shape_fn((n, num_features), |(i, j)| {
        let (m1, m0) = CLASS_MEANS[j];
        let mean = if labels[i] == 1.0 { m1 } else { m0 };
        mean + noise.sample(&mut rng)
    });
    let names = (1..=num_features).map(|j| format!("f{j}")).collect();
    Dataset::new(x, Array1::from(labels), names, None)
}

/// Means of the four Gaussian components of [`synth_demographic`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemographicMeans {
    pub majority_pos: [f64; 2],
    pub majority_neg: [f64; 2],
    pub minority_pos: [f64; 2],
    pub minority_neg: [f64; 2],
}

impl Default for DemographicMeans {
    fn default() -> Self {
        Self {
            majority_pos: [1.0, 1.0],
            majority_neg: [-1.0, -1.0],
            minority_pos: [0.5, 1.5],
            minority_neg: [-0.5, -1.5],
        }
    }
}

/// Two-feature data from a majority and a minority group, each balanced across
/// labels, with identity covariance. Uses [`DemographicMeans::default`].
pub fn synth_demographic(n: usize, minority_fraction: f64, seed: u64) -> Result<Dataset<f64>> {
    if !(minority_fraction > 0.0 && minority_fraction <= 0.5) {
        return Err(Error::BadFraction(minority_fraction));
    }
    let n_min = (n as f64 * minority_fraction).round() as usize;
    if n_min < 2 || n - n_min < 2 {
        return Err(Error::TooFewRows { needed: 4, have: n });
    }
    let means = DemographicMeans::default();
    let mut rows: Vec<(bool, bool)> = Vec::with_capacity(n);
    for (minority, size) in [(false, n - n_min), (true, n_min)] {
        rows.extend((0..size).map(|i| (minority, i < size / 2)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    let noise = standard_normal();
    let x = Array2::from_shape_fn((n, 2), |(i, j)| {
        let mean = match rows[i] {
            (false, true) => means.majority_pos,
            (false, false) => means.majority_neg,
            (true, true) => means.minority_pos,
            (true, false) => means.minority_neg,
        };
        mean[j] + noise.sample(&mut rng)
    });
    let y = rows.iter().map(|&(_, pos)| if pos { 1.0 } else { 0.0 }).collect();
    let groups = rows
        .iter()
        .map(|&(minority, _)| if minority { MINORITY } else { MAJORITY }.to_string())
        .collect();
    Dataset::new(x, y, vec!["f1".into(), "f2".into()], Some(groups))
}
