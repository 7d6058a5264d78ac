use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{band_for, Method, Task};
use crate::approx::{certify_approx_in_band, model_hull, ModelHull};
use crate::bias::BiasSpec;
use crate::error::{check_len, Error, Result};
use crate::exact::{certify_in_band, check_binary, Band};
use crate::linalg::{influence_vector, predict, Dataset, InfluenceMatrix, ModelCoefficients, RidgeFactor};

/// A ridge model fitted on a training split, ready to certify test points.
#[derive(Debug, Clone)]
pub struct Certifier {
    task: Task,
    band: Band<f64>,
    theta: ModelCoefficients<f64>,
    c: InfluenceMatrix<f64>,
    y: Vec<f64>,
}

impl Certifier {
    pub fn fit(train: &Dataset<f64>, lambda: f64, task: Task, epsilon: Option<f64>) -> Result<Self> {
        let y = train.y().to_vec();
        if task == Task::Classification {
            check_binary(&y)?;
        }
        let factor = RidgeFactor::new(train, lambda)?;
        Ok(Self {
            task,
            band: band_for(task, epsilon),
            theta: factor.coefficients(train)?,
            c: factor.influence_matrix(train)?,
            y,
        })
    }

    pub fn theta(&self) -> &ModelCoefficients<f64> {
        &self.theta
    }

    pub fn influence(&self) -> &InfluenceMatrix<f64> {
        &self.c
    }

    pub fn labels(&self) -> &[f64] {
        &self.y
    }

    pub fn band(&self) -> Band<f64> {
        self.band
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        predict(&self.theta, x)
    }

    /// Percent correct at the 0.5 threshold for classification, negative mean
    /// squared error for regression.
    pub fn accuracy(&self, data: &Dataset<f64>) -> Result<f64> {
        check_len("features", self.theta.theta.len(), data.m())?;
        if data.n() == 0 {
            return Err(Error::TooFewRows { needed: 1, have: 0 });
        }
        let preds = data.x().dot(&self.theta.theta);
        let n = data.n() as f64;
        Ok(match self.task {
            Task::Classification => {
                let correct = preds
                    .iter()
                    .zip(data.y())
                    .filter(|(p, y)| (**p >= 0.5) == (**y == 1.0))
                    .count();
                100.0 * correct as f64 / n
            }
            Task::Regression => {
                -preds.iter().zip(data.y()).map(|(p, y)| (p - y).powi(2)).sum::<f64>() / n
            }
        })
    }

    pub fn exact_verdicts(&self, test: &Dataset<f64>, spec: &BiasSpec<f64>) -> Result<Vec<bool>> {
        check_len("features", self.c.m(), test.m())?;
        (0..test.n())
            .into_par_iter()
            .map(|i| {
                let x = test.row(i).to_vec();
                let z = influence_vector(&x, &self.c)?;
                Ok(certify_in_band(&z, &self.y, spec, self.band)?.robust)
            })
            .collect()
    }

    pub fn hull(&self, spec: &BiasSpec<f64>) -> Result<ModelHull<f64>> {
        model_hull(&self.c, &self.y, spec)
    }

    pub fn approx_verdicts_with(&self, hull: &ModelHull<f64>, test: &Dataset<f64>) -> Result<Vec<bool>> {
        (0..test.n())
            .into_par_iter()
            .map(|i| {
                let x = test.row(i).to_vec();
                Ok(certify_approx_in_band(hull, &self.theta, &x, self.band)?.is_certified())
            })
            .collect()
    }

    /// Builds the hull, then checks every point against it.
    pub fn approx_verdicts(&self, test: &Dataset<f64>, spec: &BiasSpec<f64>) -> Result<Vec<bool>> {
        self.approx_verdicts_with(&self.hull(spec)?, test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateResult {
    pub method: Method,
    pub l: usize,
    pub certified: usize,
    pub total: usize,
    pub fraction: f64,
    /// One verdict per test row, in row order.
    #[serde(skip)]
    pub verdicts: Vec<bool>,
}

impl RateResult {
    fn new(method: Method, l: usize, verdicts: Vec<bool>) -> Result<Self> {
        if verdicts.is_empty() {
            return Err(Error::TooFewRows { needed: 1, have: 0 });
        }
        let certified = verdicts.iter().filter(|&&v| v).count();
        Ok(Self {
            method,
            l,
            certified,
            total: verdicts.len(),
            fraction: certified as f64 / verdicts.len() as f64,
            verdicts,
        })
    }
}

/// Fraction of `test` rows certified robust by one method.
pub fn robustness_rate(
    certifier: &Certifier,
    test: &Dataset<f64>,
    spec: &BiasSpec<f64>,
    method: Method,
) -> Result<RateResult> {
    let verdicts = match method {
        Method::Exact => certifier.exact_verdicts(test, spec)?,
        Method::Approx => certifier.approx_verdicts(test, spec)?,
    };
    RateResult::new(method, spec.l(), verdicts)
}

/// Runs both methods and fails if the box certifies a point the exact check rejects.
pub fn checked_rates(
    certifier: &Certifier,
    test: &Dataset<f64>,
    spec: &BiasSpec<f64>,
) -> Result<(RateResult, RateResult)> {
    let exact = robustness_rate(certifier, test, spec, Method::Exact)?;
    let approx = robustness_rate(certifier, test, spec, Method::Approx)?;
    check_soundness(&exact.verdicts, &approx.verdicts)?;
    Ok((exact, approx))
}

pub fn check_soundness(exact: &[bool], approx: &[bool]) -> Result<()> {
    check_len("verdicts", exact.len(), approx.len())?;
    match exact.iter().zip(approx).position(|(e, a)| *a && !*e) {
        Some(i) => Err(Error::SoundnessViolation(i)),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRate {
    pub group: String,
    pub certified: usize,
    pub total: usize,
    pub fraction: f64,
}

/// Certified fraction per distinct group value, sorted by group name.
pub fn group_rates(verdicts: &[bool], groups: Option<&[String]>) -> Result<Vec<GroupRate>> {
    let groups = groups.ok_or(Error::MissingGroups)?;
    check_len("group labels", verdicts.len(), groups.len())?;
    let mut tally: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (v, g) in verdicts.iter().zip(groups) {
        let e = tally.entry(g.as_str()).or_default();
        e.0 += usize::from(*v);
        e.1 += 1;
    }
    Ok(tally
        .into_iter()
        .map(|(group, (certified, total))| GroupRate {
            group: group.to_string(),
            certified,
            total,
            fraction: certified as f64 / total as f64,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::{classification_delta, uniform_delta};
    use crate::data::synth_classification;

    fn setup() -> (Dataset<f64>, Dataset<f64>) {
        let ds = synth_classification(240, 3, 4).unwrap().with_bias_column();
        let train: Vec<usize> = (0..200).collect();
        let test: Vec<usize> = (200..240).collect();
        (ds.select_rows(&train), ds.select_rows(&test))
    }

    #[test]
    fn zero_cap_certifies_everything() {
        let (train, test) = setup();
        let cert = Certifier::fit(&train, 0.0, Task::Classification, None).unwrap();
        let spec = BiasSpec::new(classification_delta(train.y().as_slice().unwrap()).unwrap(), 0).unwrap();
        let (e, a) = checked_rates(&cert, &test, &spec).unwrap();
        assert_eq!((e.fraction, a.fraction), (1.0, 1.0));
        assert_eq!(e.total, 40);
    }

    #[test]
    fn rates_fall_with_cap_and_box_is_sound() {
        let (train, test) = setup();
        let cert = Certifier::fit(&train, 1.0, Task::Classification, None).unwrap();
        let delta = classification_delta(train.y().as_slice().unwrap()).unwrap();
        let mut prev = vec![true; test.n()];
        for l in [1, 2, 4, 8, 16] {
            let spec = BiasSpec::new(delta.clone(), l).unwrap();
            let (e, a) = checked_rates(&cert, &test, &spec).unwrap();
            assert!(a.fraction <= e.fraction);
            for (p, v) in prev.iter().zip(&e.verdicts) {
                assert!(*p || !*v, "verdict recovered at larger cap");
            }
            prev = e.verdicts;
        }
    }

    #[test]
    fn accuracy_modes() {
        let (train, test) = setup();
        let cls = Certifier::fit(&train, 0.0, Task::Classification, None).unwrap();
        let acc = cls.accuracy(&test).unwrap();
        assert!((50.0..=100.0).contains(&acc));
        let reg = Certifier::fit(&train, 0.0, Task::Regression, Some(0.1)).unwrap();
        assert!(reg.accuracy(&test).unwrap() < 0.0);
        let spec = BiasSpec::new(uniform_delta(train.n(), 0.1).unwrap(), 3).unwrap();
        let r = robustness_rate(&reg, &test, &spec, Method::Exact).unwrap();
        assert_eq!(r.l, 3);
    }

    #[test]
    fn soundness_check_flags_violations() {
        assert!(check_soundness(&[true, false], &[true, false]).is_ok());
        assert!(matches!(check_soundness(&[true, false], &[false, true]), Err(Error::SoundnessViolation(1))));
    }

    #[test]
    fn groups() {
        let g: Vec<String> = ["a", "b", "a", "b"].iter().map(|s| s.to_string()).collect();
        let rates = group_rates(&[true, false, true, false], Some(&g)).unwrap();
        assert_eq!(rates.len(), 2);
        assert_eq!((rates[0].group.as_str(), rates[0].fraction), ("a", 1.0));
        assert_eq!((rates[1].group.as_str(), rates[1].fraction), ("b", 0.0));
        let single = vec!["x".to_string(); 4];
        let rates = group_rates(&[true, false, true, true], Some(&single)).unwrap();
        assert_eq!(rates[0].fraction, 0.75);
        assert!(matches!(group_rates(&[true], None), Err(Error::MissingGroups)));
    }
}
