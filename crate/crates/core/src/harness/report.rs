use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Method, Task};
use super::rates::{check_soundness, group_rates, robustness_rate, Certifier, GroupRate, RateResult};
use super::sweep::{lambda_sweep, SweepResult};
use crate::bias::{BiasSpec, PerturbationVector};
use crate::data::split_indices;
use crate::error::Result;
use crate::interval::Interval;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelRate {
    pub level: String,
    #[serde(flatten)]
    pub rate: RateResult,
    #[serde(default)]
    pub groups: Vec<GroupRate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub test_rows: Vec<usize>,
    pub sweep: SweepResult,
    pub lambda: f64,
    pub test_accuracy: f64,
    pub rates: Vec<LevelRate>,
    /// Wall-clock seconds spent certifying the test split, per method.
    pub seconds: BTreeMap<Method, f64>,
}

/// Mean and range over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: &[f64]) -> Self {
        Self {
            mean: values.iter().sum::<f64>() / values.len() as f64,
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub level: String,
    pub method: Method,
    #[serde(default)]
    pub group: Option<String>,
    pub fraction: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustnessReport {
    pub task: Task,
    pub seed: u64,
    pub rows: usize,
    pub folds: Vec<FoldReport>,
    pub lambda: Spread,
    pub test_accuracy: Spread,
    pub summary: Vec<SummaryRow>,
}

impl RobustnessReport {
    /// Copy with every wall-clock field zeroed, for reproducibility checks.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for f in &mut r.folds {
            for s in f.seconds.values_mut() {
                *s = 0.0;
            }
        }
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// `rate(level, method)` averaged over folds, if present.
    pub fn mean_rate(&self, level: &str, method: Method) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.level == level && s.method == method && s.group.is_none())
            .map(|s| s.fraction.mean)
    }

    pub fn mean_group_rate(&self, level: &str, method: Method, group: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.level == level && s.method == method && s.group.as_deref() == Some(group))
            .map(|s| s.fraction.mean)
    }

    /// Writes `report.json`, `rates.csv`, `sweep.csv` and `verdicts.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.json"), self.to_json()?)?;
        self.write_tables(dir)?;
        let mut w = csv::Writer::from_path(dir.join("verdicts.csv"))?;
        w.write_record(["fold", "level", "l", "method", "row", "certified"])?;
        for f in &self.folds {
            for r in &f.rates {
                for (row, v) in f.test_rows.iter().zip(&r.rate.verdicts) {
                    w.write_record(&[
                        f.fold.to_string(),
                        r.level.clone(),
                        r.rate.l.to_string(),
                        r.rate.method.to_string(),
                        row.to_string(),
                        u8::from(*v).to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    /// The plot-ready tables: `rates.csv` (levels × methods, optionally per
    /// group) and `sweep.csv` (λ candidates per fold).
    pub fn write_tables(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("rates.csv"))?;
        w.write_record(["level", "method", "group", "mean", "min", "max"])?;
        for s in &self.summary {
            w.write_record(&[
                s.level.clone(),
                s.method.to_string(),
                s.group.clone().unwrap_or_default(),
                s.fraction.mean.to_string(),
                s.fraction.min.to_string(),
                s.fraction.max.to_string(),
            ])?;
        }
        w.flush()?;
        let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
        w.write_record(["fold", "lambda", "validation_accuracy", "reference_rate", "admissible", "chosen"])?;
        for f in &self.folds {
            for (i, e) in f.sweep.entries.iter().enumerate() {
                w.write_record(&[
                    f.fold.to_string(),
                    e.lambda.to_string(),
                    e.validation_accuracy.to_string(),
                    e.reference_rate.to_string(),
                    e.admissible.to_string(),
                    (i == f.sweep.chosen).to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn select_delta(delta: &PerturbationVector<f64>, rows: &[usize]) -> Result<PerturbationVector<f64>> {
    let picked: Vec<Interval<f64>> = rows.iter().map(|&i| delta.get(i)).collect();
    PerturbationVector::new(picked)
}

/// Loads data, splits it, chooses λ per fold and certifies the test split
/// at every configured level.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RobustnessReport> {
    config.validate()?;
    let data = config.dataset.load(config.task, config.seed, &config.base_dir)?;
    let mut delta = config.bias.resolve(&data, &config.base_dir)?;
    if let Some(target) = &config.target {
        delta = target.apply(&delta, &data)?;
    }
    let mut folds = Vec::new();
    for (fold, ix) in split_indices(data.n(), &config.split_config())?.into_iter().enumerate() {
        let train = data.select_rows(&ix.train);
        let val = data.select_rows(&ix.val);
        let test = data.select_rows(&ix.test);
        let train_delta = select_delta(&delta, &ix.train)?;
        let reference = BiasSpec::new(train_delta.clone(), config.reference().resolve(train.n()))?;
        let sweep = lambda_sweep(
            &train,
            &val,
            &reference,
            &config.lambdas,
            config.tolerance,
            config.task,
            config.epsilon,
        )?;
        let lambda = sweep.chosen_lambda();
        let cert = Certifier::fit(&train, lambda, config.task, config.epsilon)?;
        let mut rates = Vec::new();
        let mut seconds = BTreeMap::new();
        for level in &config.levels {
            let spec = BiasSpec::new(train_delta.clone(), level.resolve(train.n()))?;
            let mut by_method = Vec::new();
            for &method in &config.methods {
                let t = Instant::now();
                let rate = robustness_rate(&cert, &test, &spec, method)?;
                *seconds.entry(method).or_insert(0.0) += t.elapsed().as_secs_f64();
                by_method.push(rate);
            }
            if let (Some(e), Some(a)) = (
                by_method.iter().find(|r| r.method == Method::Exact),
                by_method.iter().find(|r| r.method == Method::Approx),
            ) {
                check_soundness(&e.verdicts, &a.verdicts)?;
            }
            for rate in by_method {
                let groups = match test.group_labels() {
                    Some(g) => group_rates(&rate.verdicts, Some(g))?,
                    None => Vec::new(),
                };
                rates.push(LevelRate {
                    level: level.to_string(),
                    rate,
                    groups,
                });
            }
        }
        folds.push(FoldReport {
            fold,
            train_rows: train.n(),
            test_rows: ix.test,
            test_accuracy: cert.accuracy(&test)?,
            sweep,
            lambda,
            rates,
            seconds,
        });
    }
    Ok(RobustnessReport {
        task: config.task,
        seed: config.seed,
        rows: data.n(),
        lambda: Spread::of(&folds.iter().map(|f| f.lambda).collect::<Vec<_>>()),
        test_accuracy: Spread::of(&folds.iter().map(|f| f.test_accuracy).collect::<Vec<_>>()),
        summary: summarize(&folds),
        folds,
    })
}

fn summarize(folds: &[FoldReport]) -> Vec<SummaryRow> {
    let mut order: Vec<(String, Method, Option<String>)> = Vec::new();
    let mut values: BTreeMap<(String, Method, Option<String>), Vec<f64>> = BTreeMap::new();
    let mut push = |key: (String, Method, Option<String>), v: f64| {
        if !values.contains_key(&key) {
            order.push(key.clone());
        }
        values.entry(key).or_default().push(v);
    };
    for f in folds {
        for r in &f.rates {
            push((r.level.clone(), r.rate.method, None), r.rate.fraction);
            for g in &r.groups {
                push((r.level.clone(), r.rate.method, Some(g.group.clone())), g.fraction);
            }
        }
    }
    order
        .into_iter()
        .map(|key| {
            let fraction = Spread::of(&values[&key]);
            let (level, method, group) = key;
            SummaryRow {
                level,
                method,
                group,
                fraction,
            }
        })
        .collect()
}
