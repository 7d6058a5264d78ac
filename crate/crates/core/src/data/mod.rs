//! Dataset ingestion, splitting and synthetic generators.

mod csv_io;
mod split;
mod synth;

pub use csv_io::{load_csv, read_csv, write_csv, DatasetSchema};
pub use split::{k_folds, split, split_indices, Split, SplitConfig, SplitIndices};
pub use synth::{synth_classification, synth_demographic, DemographicMeans, MAJORITY, MINORITY};

use ndarray::Array2;

use crate::linalg::Dataset;

/// Per-column min-max scaling to `[0, 1]`. Constant columns map to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct MinMaxScaler {
    min: Vec<f64>,
    range: Vec<f64>,
}

impl MinMaxScaler {
    pub fn fit(dataset: &Dataset<f64>) -> Self {
        let (min, range) = dataset
            .x()
            .columns()
            .into_iter()
            .map(|col| {
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi - lo)
            })
            .unzip();
        Self { min, range }
    }

    pub fn transform(&self, dataset: &Dataset<f64>) -> crate::Result<Dataset<f64>> {
        crate::error::check_len("scaler columns", self.min.len(), dataset.m())?;
        let x = Array2::from_shape_fn(dataset.x().dim(), |(i, j)| {
            if self.range[j] > 0.0 {
                (dataset.x()[[i, j]] - self.min[j]) / self.range[j]
            } else {
                0.0
            }
        });
        Dataset::new(
            x,
            dataset.y().clone(),
            dataset.feature_names().to_vec(),
            dataset.group_labels().map(|g| g.to_vec()),
        )
    }
}
