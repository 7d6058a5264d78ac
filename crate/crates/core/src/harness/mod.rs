//! Experiment plumbing: certified-rate tables, λ selection, group breakdowns,
//! timing and attack export. Everything here works on `f64`.

mod attack;
mod config;
mod rates;
mod report;
mod sweep;
mod timing;

pub use attack::{export_attack, write_poisoned_labels, Attack, AttackMode, AttackSummary};
pub use config::{
    BiasLevel, BiasSource, DatasetSource, ExperimentConfig, Method, SplitFractions, TargetConfig, Task,
};
pub use rates::{check_soundness, checked_rates, group_rates, robustness_rate, Certifier, GroupRate, RateResult};
pub use report::{run_experiment, FoldReport, LevelRate, RobustnessReport, Spread, SummaryRow};
pub use sweep::{lambda_sweep, SweepEntry, SweepResult};
pub use timing::{timing_report, TimingReport};
