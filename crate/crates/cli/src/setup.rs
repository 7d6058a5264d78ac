use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use labelbias::data::split_indices;
use labelbias::harness::{lambda_sweep, BiasLevel, ExperimentConfig, Method};
use labelbias::{BiasSpec, Dataset64, PerturbationVector64};

/// Flags that override values from the config file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub levels: Vec<BiasLevel>,
    pub lambdas: Vec<f64>,
    pub epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub methods: Vec<Method>,
    pub folds: Option<usize>,
}

pub fn load_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentConfig> {
    let path = path.context("this command needs --config <file>")?;
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if !overrides.levels.is_empty() {
        cfg.levels = overrides.levels.clone();
    }
    if !overrides.lambdas.is_empty() {
        cfg.lambdas = overrides.lambdas.clone();
    }
    if overrides.epsilon.is_some() {
        cfg.epsilon = overrides.epsilon;
    }
    if let Some(t) = overrides.tolerance {
        cfg.tolerance = t;
    }
    if !overrides.methods.is_empty() {
        cfg.methods = overrides.methods.clone();
    }
    if let Some(f) = overrides.folds {
        cfg.folds = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The first split of a config with λ chosen by the sweep.
pub struct Prepared {
    pub train: Dataset64,
    pub test: Dataset64,
    pub delta: PerturbationVector64,
    pub lambda: f64,
    pub test_rows: Vec<usize>,
}

impl Prepared {
    pub fn spec(&self, level: BiasLevel) -> Result<BiasSpec<f64>> {
        Ok(BiasSpec::new(self.delta.clone(), level.resolve(self.train.n()))?)
    }

    /// A feature vector from `--x` or from row `row` of the test split.
    pub fn point(&self, row: Option<usize>, x: Option<&[f64]>) -> Result<Vec<f64>> {
        match (row, x) {
            (_, Some(x)) => {
                if x.len() != self.train.m() {
                    bail!("--x has {} values but the model has {} features ({})", x.len(), self.train.m(), self.train.feature_names().join(","));
                }
                Ok(x.to_vec())
            }
            (Some(r), None) => {
                if r >= self.test.n() {
                    bail!("--row {r} is out of range: the test split has {} rows", self.test.n());
                }
                Ok(self.test.row(r).to_vec())
            }
            (None, None) => bail!("pass --row <test row> or --x <comma-separated features>"),
        }
    }
}

pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let data = cfg.dataset.load(cfg.task, cfg.seed, &cfg.base_dir)?;
    let mut delta = cfg.bias.resolve(&data, &cfg.base_dir)?;
    if let Some(t) = &cfg.target {
        delta = t.apply(&delta, &data)?;
    }
    let ix = split_indices(data.n(), &cfg.split_config())?.swap_remove(0);
    let train = data.select_rows(&ix.train);
    let val = data.select_rows(&ix.val);
    let train_delta = PerturbationVector64::new(ix.train.iter().map(|&i| delta.get(i)).collect())?;
    let lambda = if cfg.lambdas.len() == 1 {
        cfg.lambdas[0]
    } else {
        let spec = BiasSpec::new(train_delta.clone(), cfg.reference().resolve(train.n()))?;
        lambda_sweep(&train, &val, &spec, &cfg.lambdas, cfg.tolerance, cfg.task, cfg.epsilon)?.chosen_lambda()
    };
    Ok(Prepared {
        test: data.select_rows(&ix.test),
        train,
        delta: train_delta,
        lambda,
        test_rows: ix.test,
    })
}

pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir.join(name))
}
