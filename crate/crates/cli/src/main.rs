mod setup;

use std::fs::File;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use labelbias::data::{synth_classification, synth_demographic, write_csv};
use labelbias::exact::min_flips_in_band;
use labelbias::harness::{
    export_attack, robustness_rate, run_experiment, timing_report, write_poisoned_labels, AttackMode,
    BiasLevel, Certifier, Method, RobustnessReport,
};
use labelbias::{influence_vector, HullExport};
use serde::Serialize;

use setup::{load_config, out_path, prepare, Overrides};

#[derive(Parser)]
#[command(name = "labelbias", version, about = "Certify linear models against label bias")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = "LABELBIAS_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the seed used for splits and synthetic data.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads for per-point certification (0 = all cores).
    #[arg(long, global = true, env = "LABELBIAS_WORKERS", default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct GridArgs {
    /// Bias levels as counts or percentages of the training rows, e.g. `5` or `2%`.
    #[arg(long = "level", value_delimiter = ',')]
    levels: Vec<BiasLevel>,
    #[arg(long = "lambda", value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Accuracy tolerance when choosing λ.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct PointArgs {
    /// Row of the test split to certify.
    #[arg(long, conflicts_with = "x")]
    row: Option<usize>,
    /// Explicit feature vector, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Exact,
    Approx,
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum SynthKind {
    Classification,
    Demographic,
}

#[derive(Subcommand)]
enum Command {
    /// Certified fraction of the test split at each bias level.
    Certify {
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Smallest number of label changes that breaks one point.
    MinFlips {
        #[command(flatten)]
        point: PointArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Build the coefficient box for one bias level and export it as JSON.
    Hull {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Certified rates for every λ × level pair on the first split.
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Write a synthetic dataset as CSV.
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 3)]
        features: usize,
        #[arg(long, default_value_t = 0.25)]
        minority_fraction: f64,
    },
    /// Export poisoned training labels that change one prediction.
    Attack {
        #[command(flatten)]
        point: PointArgs,
        /// `minimal` or a number of flips.
        #[arg(long, default_value = "minimal")]
        flips: String,
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Re-render CSV tables from a saved report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
    },
    /// Wall-clock comparison of exact and approximate certification.
    Timing {
        #[command(flatten)]
        grid: GridArgs,
    },
}

fn overrides(cli: &Cli, grid: &GridArgs, methods: Vec<Method>) -> Overrides {
    Overrides {
        seed: cli.seed,
        levels: grid.levels.clone(),
        lambdas: grid.lambdas.clone(),
        epsilon: grid.epsilon,
        tolerance: grid.tolerance,
        methods,
        folds: grid.folds,
    }
}

fn write_json<T: Serialize>(path: &std::path::Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn print_report(report: &RobustnessReport) {
    println!("lambda {:.4} (fold mean), test accuracy {:.4}", report.lambda.mean, report.test_accuracy.mean);
    println!("{:<10} {:<7} {:<12} {:>8} {:>8} {:>8}", "level", "method", "group", "mean", "min", "max");
    for s in &report.summary {
        println!(
            "{:<10} {:<7} {:<12} {:>8.4} {:>8.4} {:>8.4}",
            s.level,
            s.method,
            s.group.as_deref().unwrap_or("-"),
            s.fraction.mean,
            s.fraction.min,
            s.fraction.max
        );
    }
}

#[derive(Serialize)]
struct SweepCell {
    lambda: f64,
    level: String,
    l: usize,
    method: Method,
    fraction: f64,
    test_accuracy: f64,
}

fn run(cli: &Cli) -> Result<()> {
    let cfg_path = cli.config.as_deref();
    match &cli.command {
        Command::Certify { method, grid } => {
            let methods = match method {
                MethodArg::Exact => vec![Method::Exact],
                MethodArg::Approx => vec![Method::Approx],
                MethodArg::Both => vec![Method::Exact, Method::Approx],
            };
            let cfg = load_config(cfg_path, &overrides(cli, grid, methods))?;
            let report = run_experiment(&cfg)?;
            report.write_to(&cli.out_dir)?;
            print_report(&report);
            println!("wrote {}", cli.out_dir.join("report.json").display());
        }
        Command::MinFlips { point, grid } => {
            let cfg = load_config(cfg_path, &overrides(cli, grid, Vec::new()))?;
            let prep = prepare(&cfg)?;
            let x = prep.point(point.row, point.x.as_deref())?;
            let cert = Certifier::fit(&prep.train, prep.lambda, cfg.task, cfg.epsilon)?;
            let z = influence_vector(&x, cert.influence())?;
            let found = min_flips_in_band(&z, cert.labels(), &prep.delta, cert.band())?;
            let path = out_path(&cli.out_dir, "min_flips.json")?;
            match &found {
                Some(mf) => println!(
                    "{} label change(s) move the prediction from {:.6} to {:.6}",
                    mf.flips,
                    cert.predict(&x)?,
                    mf.prediction
                ),
                None => println!("robust: no number of label changes within the bias model breaks this point"),
            }
            #[derive(Serialize)]
            struct Out {
                dataset_row: Option<usize>,
                lambda: f64,
                flips: Option<usize>,
                prediction: Option<f64>,
            }
            write_json(
                &path,
                &Out {
                    dataset_row: point.row.map(|r| prep.test_rows[r]),
                    lambda: prep.lambda,
                    flips: found.as_ref().map(|m| m.flips),
                    prediction: found.as_ref().map(|m| m.prediction),
                },
            )?;
        }
        Command::Hull { grid } => {
            let cfg = load_config(cfg_path, &overrides(cli, grid, Vec::new()))?;
            let prep = prepare(&cfg)?;
            let level = cfg.reference();
            let cert = Certifier::fit(&prep.train, prep.lambda, cfg.task, cfg.epsilon)?;
            let hull = cert.hull(&prep.spec(level)?)?;
            let export = HullExport::from_hull(&hull, prep.train.feature_names())?;
            let path = out_path(&cli.out_dir, "hull.json")?;
            std::fs::write(&path, export.to_json()?)?;
            for (name, iv) in export.feature_names.iter().zip(&export.theta_a) {
                println!("{name:<16} {iv}");
            }
            println!("level {level} (l = {}), wrote {}", hull.l, path.display());
        }
        Command::Sweep { grid } => {
            let cfg = load_config(cfg_path, &overrides(cli, grid, Vec::new()))?;
            let prep = prepare(&cfg)?;
            let mut cells = Vec::new();
            for &lambda in &cfg.lambdas {
                let cert = Certifier::fit(&prep.train, lambda, cfg.task, cfg.epsilon)?;
                let test_accuracy = cert.accuracy(&prep.test)?;
                for &level in &cfg.levels {
                    let spec = prep.spec(level)?;
                    for &method in &cfg.methods {
                        let r = robustness_rate(&cert, &prep.test, &spec, method)?;
                        cells.push(SweepCell {
                            lambda,
                            level: level.to_string(),
                            l: r.l,
                            method,
                            fraction: r.fraction,
                            test_accuracy,
                        });
                    }
                }
            }
            let path = out_path(&cli.out_dir, "lambda_grid.csv")?;
            let mut w = csv::Writer::from_path(&path)?;
            w.write_record(["lambda", "level", "l", "method", "fraction", "test_accuracy"])?;
            for c in &cells {
                println!("lambda {:<10} level {:<6} {:<7} {:.4}", c.lambda, c.level, c.method, c.fraction);
                w.write_record(&[
                    c.lambda.to_string(),
                    c.level.clone(),
                    c.l.to_string(),
                    c.method.to_string(),
                    c.fraction.to_string(),
                    c.test_accuracy.to_string(),
                ])?;
            }
            w.flush()?;
            println!("chosen lambda {} ; wrote {}", prep.lambda, path.display());
        }
        Command::Synth {
            kind,
            n,
            features,
            minority_fraction,
        } => {
            let seed = cli.seed.unwrap_or(0);
            let (ds, group) = match kind {
                SynthKind::Classification => (synth_classification(*n, *features, seed)?, None),
                SynthKind::Demographic => (synth_demographic(*n, *minority_fraction, seed)?, Some("group")),
            };
            let path = out_path(&cli.out_dir, "synth.csv")?;
            write_csv(File::create(&path)?, &ds, "label", group)?;
            println!("wrote {} rows to {}", ds.n(), path.display());
        }
        Command::Attack { point, flips, grid } => {
            let cfg = load_config(cfg_path, &overrides(cli, grid, Vec::new()))?;
            let mode = match flips.as_str() {
                "minimal" => AttackMode::Minimal,
                k => AttackMode::Count(k.parse().with_context(|| format!("--flips `{k}`: expected `minimal` or a count"))?),
            };
            let prep = prepare(&cfg)?;
            let x = prep.point(point.row, point.x.as_deref())?;
            let attack = export_attack(&x, &prep.train, &prep.delta, prep.lambda, mode)?;
            let labels = out_path(&cli.out_dir, "poisoned_labels.csv")?;
            write_poisoned_labels(File::create(&labels)?, prep.train.y().as_slice().expect("contiguous"), &attack)?;
            write_json(&out_path(&cli.out_dir, "attack_summary.json")?, &attack.summary)?;
            let s = &attack.summary;
            println!(
                "{} flip(s): prediction {:.6} -> {:.6} (class {} -> {}); wrote {}",
                s.flips,
                s.old_prediction,
                s.new_prediction,
                s.old_class,
                s.new_class,
                labels.display()
            );
        }
        Command::Report { input } => {
            let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
            let report = RobustnessReport::from_json(&text)?;
            report.write_tables(&cli.out_dir)?;
            print_report(&report);
        }
        Command::Timing { grid } => {
            let cfg = load_config(cfg_path, &overrides(cli, grid, Vec::new()))?;
            let prep = prepare(&cfg)?;
            let spec = prep.spec(cfg.reference())?;
            let t = timing_report(&prep.train, &prep.test, &spec, prep.lambda, cfg.task, cfg.epsilon)?;
            println!(
                "{} points at l = {}: exact {:.4}s, approx {:.4}s (hull {:.4}s)",
                t.points, t.l, t.exact_seconds, t.approx_seconds, t.hull_seconds
            );
            write_json(&out_path(&cli.out_dir, "timing.json")?, &t)?;
        }
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .context("configuring worker pool")?;
    }
    if let Some(d) = cli.config.as_deref().filter(|p| !p.exists()) {
        bail!("config file {} does not exist", d.display());
    }
    run(&cli)
}
