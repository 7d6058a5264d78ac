use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::Task;
use super::rates::Certifier;
use crate::bias::BiasSpec;
use crate::error::Result;
use crate::linalg::Dataset;

/// Wall-clock seconds per method. Both include the model fit and influence
/// matrix; approx also includes the hull build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub points: usize,
    pub l: usize,
    pub fit_seconds: f64,
    pub exact_seconds: f64,
    pub hull_seconds: f64,
    pub approx_seconds: f64,
    pub exact_certified: usize,
    pub approx_certified: usize,
}

pub fn timing_report(
    train: &Dataset<f64>,
    test: &Dataset<f64>,
    spec: &BiasSpec<f64>,
    lambda: f64,
    task: Task,
    epsilon: Option<f64>,
) -> Result<TimingReport> {
    let t = Instant::now();
    let cert = Certifier::fit(train, lambda, task, epsilon)?;
    let fit_seconds = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let exact = cert.exact_verdicts(test, spec)?;
    let exact_seconds = fit_seconds + t.elapsed().as_secs_f64();

    let t = Instant::now();
    let hull = cert.hull(spec)?;
    let hull_seconds = t.elapsed().as_secs_f64();
    let approx = cert.approx_verdicts_with(&hull, test)?;
    let approx_seconds = fit_seconds + t.elapsed().as_secs_f64();

    super::rates::check_soundness(&exact, &approx)?;
    Ok(TimingReport {
        points: test.n(),
        l: spec.l(),
        fit_seconds,
        exact_seconds,
        hull_seconds: fit_seconds + hull_seconds,
        approx_seconds,
        exact_certified: exact.iter().filter(|&&v| v).count(),
        approx_certified: approx.iter().filter(|&&v| v).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::classification_delta;
    use crate::data::synth_classification;

    #[test]
    fn empty_test_set_costs_only_the_hull() {
        let ds = synth_classification(200, 3, 1).unwrap().with_bias_column();
        let spec = BiasSpec::new(classification_delta(ds.y().as_slice().unwrap()).unwrap(), 4).unwrap();
        let empty = ds.select_rows(&[]);
        let r = timing_report(&ds, &empty, &spec, 0.0, Task::Classification, None).unwrap();
        assert_eq!((r.points, r.exact_certified, r.approx_certified), (0, 0, 0));
        assert!(r.approx_seconds >= r.hull_seconds - 1e-9);
    }
}
