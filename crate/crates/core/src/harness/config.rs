use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bias::{apply_targeting, classification_delta, uniform_delta, Comparison, PerturbationVector, TargetPredicate};
use crate::data::{load_csv, synth_classification, synth_demographic, DatasetSchema, SplitConfig};
use crate::error::{Error, Result};
use crate::exact::Band;
use crate::interval::Interval;
use crate::linalg::Dataset;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Approx,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Approx => "approx",
        })
    }
}

/// A bias cap as an absolute label count or a percentage of the training rows.
///
/// Written as an integer (`5`) or a string (`"5"`, `"2.5%"`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LevelRepr", into = "LevelRepr")]
pub enum BiasLevel {
    Count(usize),
    Percent(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum LevelRepr {
    Count(usize),
    Text(String),
}

impl TryFrom<LevelRepr> for BiasLevel {
    type Error = Error;

    fn try_from(r: LevelRepr) -> Result<Self> {
        match r {
            LevelRepr::Count(c) => Ok(BiasLevel::Count(c)),
            LevelRepr::Text(s) => s.parse(),
        }
    }
}

impl From<BiasLevel> for LevelRepr {
    fn from(l: BiasLevel) -> Self {
        match l {
            BiasLevel::Count(c) => LevelRepr::Count(c),
            BiasLevel::Percent(_) => LevelRepr::Text(l.to_string()),
        }
    }
}

impl std::str::FromStr for BiasLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidConfig(format!("bias level `{s}` is not a count or a percentage"));
        match s.strip_suffix('%') {
            Some(p) => {
                let p: f64 = p.trim().parse().map_err(|_| bad())?;
                if !(0.0..=100.0).contains(&p) {
                    return Err(bad());
                }
                Ok(BiasLevel::Percent(p))
            }
            None => s.parse().map(BiasLevel::Count).map_err(|_| bad()),
        }
    }
}

impl fmt::Display for BiasLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BiasLevel::Count(c) => write!(f, "{c}"),
            BiasLevel::Percent(p) => write!(f, "{p}%"),
        }
    }
}

impl BiasLevel {
    /// Label count for a training set of `n_train` rows. Nonzero percentages
    /// round to the nearest integer but never below 1.
    pub fn resolve(&self, n_train: usize) -> usize {
        match *self {
            BiasLevel::Count(c) => c,
            BiasLevel::Percent(0.0) => 0,
            BiasLevel::Percent(p) => ((p / 100.0 * n_train as f64).round() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        schema: DatasetSchema,
    },
    SynthClassification {
        n: usize,
        features: usize,
        /// Append an all-ones intercept column.
        #[serde(default)]
        bias_column: bool,
    },
    SynthDemographic {
        n: usize,
        minority_fraction: f64,
        /// Append an all-ones intercept column.
        #[serde(default)]
        bias_column: bool,
    },
}

impl DatasetSource {
    /// Loads or generates the data. Relative CSV paths resolve against `base`.
    pub fn load(&self, task: Task, seed: u64, base: &Path) -> Result<Dataset<f64>> {
        match self {
            DatasetSource::Csv { path, schema } => {
                let mut schema = schema.clone();
                schema.binary_labels |= task == Task::Classification;
                load_csv(base.join(path), &schema)
            }
            DatasetSource::SynthClassification { n, features, bias_column } => {
                let ds = synth_classification(*n, *features, seed)?;
                Ok(if *bias_column { ds.with_bias_column() } else { ds })
            }
            DatasetSource::SynthDemographic {
                n,
                minority_fraction,
                bias_column,
            } => {
                let ds = synth_demographic(*n, *minority_fraction, seed)?;
                Ok(if *bias_column { ds.with_bias_column() } else { ds })
            }
        }
    }
}

/// Where the per-label perturbation intervals come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BiasSource {
    /// `[-halfwidth, halfwidth]` on every label.
    Uniform { halfwidth: f64 },
    /// Label flips for `{0,1}` labels.
    Flip,
    /// CSV with `lo,hi` columns, one row per dataset row.
    File { path: PathBuf },
}

impl BiasSource {
    /// Perturbation intervals for every row of `dataset`.
    pub fn resolve(&self, dataset: &Dataset<f64>, base: &Path) -> Result<PerturbationVector<f64>> {
        match self {
            BiasSource::Uniform { halfwidth } => uniform_delta(dataset.n(), *halfwidth),
            BiasSource::Flip => classification_delta(dataset.y().as_slice().expect("contiguous labels")),
            BiasSource::File { path } => {
                let full = base.join(path);
                let mut rdr = csv::Reader::from_path(&full)?;
                let mut deltas = Vec::new();
                for (i, rec) in rdr.deserialize::<IntervalRow>().enumerate() {
                    let rec = rec.map_err(|e| Error::ParseError {
                        path: full.clone(),
                        row: i + 1,
                        column: String::new(),
                        message: e.to_string(),
                    })?;
                    deltas.push(Interval::new(rec.lo, rec.hi)?);
                }
                crate::error::check_len("bias file rows", dataset.n(), deltas.len())?;
                PerturbationVector::new(deltas)
            }
        }
    }
}

#[derive(Deserialize)]
struct IntervalRow {
    lo: f64,
    hi: f64,
}

/// Restricts perturbations to rows matching a feature value or group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TargetConfig {
    Feature {
        name: String,
        comparison: Comparison,
        value: f64,
    },
    Group {
        comparison: Comparison,
        value: String,
    },
}

impl TargetConfig {
    pub fn apply(&self, delta: &PerturbationVector<f64>, dataset: &Dataset<f64>) -> Result<PerturbationVector<f64>> {
        let phi = match self {
            TargetConfig::Feature { name, comparison, value } => {
                TargetPredicate::feature_named(dataset, name, *comparison, *value)?
            }
            TargetConfig::Group { comparison, value } => TargetPredicate::Group {
                comparison: *comparison,
                value: value.clone(),
            },
        };
        apply_targeting(delta, dataset, &phi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        Self {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub task: Task,
    pub bias: BiasSource,
    #[serde(default)]
    pub target: Option<TargetConfig>,
    pub levels: Vec<BiasLevel>,
    /// Level used to rank λ candidates; defaults to the first entry of `levels`.
    #[serde(default)]
    pub reference_level: Option<BiasLevel>,
    /// Robustness radius, regression only.
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<f64>,
    /// Accuracy slack in percentage points (classification) or MSE units (regression).
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub folds: usize,
    #[serde(default)]
    pub split: SplitFractions,
    /// Directory relative paths in the config resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_lambdas() -> Vec<f64> {
    vec![0.0]
}

fn default_methods() -> Vec<Method> {
    vec![Method::Exact, Method::Approx]
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.levels.is_empty() {
            return Err(Error::EmptyGrid("bias level"));
        }
        if self.lambdas.is_empty() {
            return Err(Error::EmptyGrid("lambda"));
        }
        if self.methods.is_empty() {
            return Err(Error::EmptyGrid("method"));
        }
        if let Some(l) = self.lambdas.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::NegativeLambda(l.to_string()));
        }
        if self.tolerance.is_nan() || self.tolerance < 0.0 {
            return Err(Error::InvalidConfig(format!("tolerance must be ≥ 0, got {}", self.tolerance)));
        }
        match (self.task, self.epsilon) {
            (Task::Regression, None) => {
                return Err(Error::InvalidConfig("regression requires epsilon".into()))
            }
            (Task::Regression, Some(e)) if e.is_nan() || e < 0.0 => {
                return Err(Error::NegativeEpsilon(e.to_string()))
            }
            (Task::Classification, Some(_)) => {
                return Err(Error::InvalidConfig("epsilon applies to regression only".into()))
            }
            _ => {}
        }
        self.split_config().validate()
    }

    pub fn split_config(&self) -> SplitConfig {
        SplitConfig {
            train: self.split.train,
            val: self.split.val,
            test: self.split.test,
            seed: self.seed,
            folds: self.folds,
        }
    }

    pub fn reference(&self) -> BiasLevel {
        self.reference_level.unwrap_or(self.levels[0])
    }

    pub fn band(&self) -> Band<f64> {
        band_for(self.task, self.epsilon)
    }
}

pub(crate) fn band_for(task: Task, epsilon: Option<f64>) -> Band<f64> {
    match task {
        Task::Classification => Band::decision(),
        Task::Regression => Band::radius(epsilon.unwrap_or(0.0)),
    }
}
