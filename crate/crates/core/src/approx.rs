//! Test-point-independent certification through a box over reachable models.
//!
//! Each coefficient `θᵢ = cᵢ·y` (with `cᵢ` the i-th row of the influence matrix)
//! is bounded separately by the exact range machinery, giving the tightest
//! axis-aligned box containing every model reachable over the bias set. A test
//! point is then certified by one interval dot product. The box ignores the
//! coupling between coordinates, so this can abstain where the exact check
//! would succeed, but it never certifies a non-robust point.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bias::BiasSpec;
use crate::error::{check_len, Error, Result};
use crate::exact::{prediction_range, Band, PredictionRange};
use crate::interval::Interval;
use crate::linalg::{predict, InfluenceMatrix, InfluenceVector, ModelCoefficients};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelHull<T> {
    pub theta_a: Vec<Interval<T>>,
    pub base_theta: ModelCoefficients<T>,
    /// `l` of the spec the hull was built for.
    pub l: usize,
    /// [`BiasSpec::fingerprint`] of that spec.
    pub fingerprint: String,
    /// Label vectors attaining each coordinate's lower and upper bound.
    pub witnesses: Vec<PredictionRange<T>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ApproxVerdict<T> {
    Certified { predicted_interval: Interval<T> },
    Unknown { predicted_interval: Interval<T> },
}

impl<T: Scalar> ApproxVerdict<T> {
    pub fn is_certified(&self) -> bool {
        matches!(self, ApproxVerdict::Certified { .. })
    }

    pub fn predicted_interval(&self) -> Interval<T> {
        match *self {
            ApproxVerdict::Certified { predicted_interval }
            | ApproxVerdict::Unknown { predicted_interval } => predicted_interval,
        }
    }
}

pub fn model_hull<T: Scalar>(
    c: &InfluenceMatrix<T>,
    y: &[T],
    spec: &BiasSpec<T>,
) -> Result<ModelHull<T>> {
    check_len("labels", c.n(), y.len())?;
    check_len("bias spec", c.n(), spec.n())?;
    let rows: Vec<_> = c.c.outer_iter().map(|row| row.to_owned()).collect();
    let witnesses = rows
        .into_par_iter()
        .map(|row| prediction_range(&InfluenceVector::new(row), y, spec))
        .collect::<Result<Vec<_>>>()?;
    Ok(ModelHull {
        theta_a: witnesses.iter().map(|w| w.range).collect(),
        base_theta: c.coefficients(y)?,
        l: spec.l(),
        fingerprint: spec.fingerprint(),
        witnesses,
    })
}

/// `Σᵢ Θᵃᵢ · xᵢ` in interval arithmetic.
pub fn interval_predict<T: Scalar>(hull: &ModelHull<T>, x: &[T]) -> Result<Interval<T>> {
    check_len("test point", hull.theta_a.len(), x.len())?;
    Ok(hull
        .theta_a
        .iter()
        .zip(x)
        .map(|(iv, &xi)| iv.scale(xi))
        .sum())
}

pub fn certify_approx_in_band<T: Scalar>(
    hull: &ModelHull<T>,
    theta: &ModelCoefficients<T>,
    x: &[T],
    band: Band<T>,
) -> Result<ApproxVerdict<T>> {
    let predicted_interval = interval_predict(hull, x)?;
    let base = predict(theta, x)?;
    let ok = band.admits(
        base,
        predicted_interval.lo() - base,
        predicted_interval.hi() - base,
    );
    Ok(if ok {
        ApproxVerdict::Certified { predicted_interval }
    } else {
        ApproxVerdict::Unknown { predicted_interval }
    })
}

pub fn certify_approx<T: Scalar>(
    hull: &ModelHull<T>,
    theta: &ModelCoefficients<T>,
    x: &[T],
    epsilon: T,
) -> Result<ApproxVerdict<T>> {
    if epsilon < T::zero() {
        return Err(Error::NegativeEpsilon(epsilon.to_string()));
    }
    certify_approx_in_band(hull, theta, x, Band::radius(epsilon))
}

/// JSON form of a hull for shipping to an online certifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullExport {
    pub fingerprint: String,
    pub l: usize,
    pub lambda: f64,
    pub feature_names: Vec<String>,
    pub base_theta: Vec<f64>,
    pub theta_a: Vec<Interval<f64>>,
}

impl HullExport {
    pub fn from_hull(hull: &ModelHull<f64>, feature_names: &[String]) -> Result<Self> {
        check_len("feature names", hull.theta_a.len(), feature_names.len())?;
        Ok(Self {
            fingerprint: hull.fingerprint.clone(),
            l: hull.l,
            lambda: hull.base_theta.lambda,
            feature_names: feature_names.to_vec(),
            base_theta: hull.base_theta.theta.to_vec(),
            theta_a: hull.theta_a.clone(),
        })
    }

    /// Rebuilds a hull usable by [`certify_approx`]; witnesses are not exported.
    pub fn into_hull(self) -> Result<ModelHull<f64>> {
        check_len("base coefficients", self.theta_a.len(), self.base_theta.len())?;
        for iv in &self.theta_a {
            Interval::new(iv.lo(), iv.hi())?;
        }
        Ok(ModelHull {
            theta_a: self.theta_a,
            base_theta: ModelCoefficients {
                theta: self.base_theta.into(),
                lambda: self.lambda,
            },
            l: self.l,
            fingerprint: self.fingerprint,
            witnesses: Vec::new(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::{contains, uniform_delta, PerturbationVector};
    use crate::exact::certify_point;
    use crate::oracle::brute_force_hull;
    use ndarray::{array, Array2};
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn r(v: i64) -> Rational64 {
        Rational64::from_integer(v)
    }

    fn example() -> (InfluenceMatrix<Rational64>, Vec<Rational64>, BiasSpec<Rational64>) {
        let c = InfluenceMatrix {
            c: array![[r(1), r(2), r(1)], [r(-1), r(0), r(2)], [r(2), r(1), r(0)]],
            lambda: r(0),
        };
        let spec = BiasSpec::new(uniform_delta(3, r(1)).unwrap(), 2).unwrap();
        (c, vec![r(1), r(-1), r(2)], spec)
    }

    #[test]
    fn non_convex_example_box() {
        let (c, y, spec) = example();
        let hull = model_hull(&c, &y, &spec).unwrap();
        let expect = [(-2, 4), (0, 6), (-2, 4)].map(|(l, h)| Interval::new(r(l), r(h)).unwrap());
        assert_eq!(hull.theta_a, expect.to_vec());
        assert_eq!(hull.theta_a, brute_force_hull(&c.c, &y, &spec).unwrap());
        for member in [[3, 6, 3], [4, 5, 2]] {
            for (iv, v) in hull.theta_a.iter().zip(member) {
                assert!(iv.contains(r(v)));
            }
        }
        for (i, w) in hull.witnesses.iter().enumerate() {
            let row = c.c.row(i).to_vec();
            let dot = |v: &[Rational64]| row.iter().zip(v).fold(r(0), |a, (p, q)| a + *p * *q);
            assert_eq!(dot(&w.y_lower), hull.theta_a[i].lo());
            assert_eq!(dot(&w.y_upper), hull.theta_a[i].hi());
            assert!(contains(&spec, &y, &w.y_lower).unwrap());
        }
    }

    #[test]
    fn zero_cap_hull_is_a_point() {
        let (c, y, spec) = example();
        let hull = model_hull(&c, &y, &spec.with_cap(0).unwrap()).unwrap();
        for (iv, t) in hull.theta_a.iter().zip(hull.base_theta.theta.iter()) {
            assert_eq!(*iv, Interval::point(*t));
        }
        for eps in [r(0), r(1)] {
            let v = certify_approx(&hull, &hull.base_theta, &[r(1), r(-3), r(2)], eps).unwrap();
            assert!(v.is_certified());
        }
    }

    #[test]
    fn interval_predict_examples() {
        let (c, y, spec) = example();
        let hull = model_hull(&c, &y, &spec).unwrap();
        assert_eq!(interval_predict(&hull, &[r(0), r(0), r(0)]).unwrap(), Interval::point(r(0)));
        assert_eq!(
            interval_predict(&hull, &[r(1), r(0), r(0)]).unwrap(),
            Interval::new(r(-2), r(4)).unwrap()
        );
        assert_eq!(
            interval_predict(&hull, &[r(1), r(1), r(-1)]).unwrap(),
            Interval::new(r(-6), r(12)).unwrap()
        );
        assert!(interval_predict(&hull, &[r(1)]).is_err());
    }

    fn random_case(rng: &mut ChaCha8Rng, m: usize, n: usize) -> (InfluenceMatrix<f64>, Vec<f64>, BiasSpec<f64>) {
        let c = InfluenceMatrix {
            c: Array2::from_shape_fn((m, n), |_| rng.random_range(-1.0..1.0)),
            lambda: 0.0,
        };
        let y = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
        let delta = PerturbationVector::new(
            (0..n)
                .map(|_| Interval::new(-rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)).unwrap())
                .collect(),
        )
        .unwrap();
        let l = rng.random_range(0..=3);
        (c, y, BiasSpec::new(delta, l).unwrap())
    }

    #[test]
    fn sound_against_exact_and_finds_incompleteness() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut gap_seen = false;
        for _ in 0..300 {
            let (c, y, spec) = random_case(&mut rng, 3, 8);
            let hull = model_hull(&c, &y, &spec).unwrap();
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let eps = rng.random_range(0.0..1.5);
            let approx = certify_approx(&hull, &hull.base_theta, &x, eps).unwrap();
            let z = crate::linalg::influence_vector(&x, &c).unwrap();
            let exact = certify_point(&z, &y, &spec, eps).unwrap();
            let (v, box_v) = (exact.range.range, approx.predicted_interval());
            assert!(box_v.lo() <= v.lo() + 1e-12 && v.hi() <= box_v.hi() + 1e-12);
            if approx.is_certified() {
                assert!(exact.robust);
            }
            gap_seen |= exact.robust && !approx.is_certified();
        }
        assert!(gap_seen);
    }

    #[test]
    fn export_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c, y, spec) = random_case(&mut rng, 2, 6);
        let hull = model_hull(&c, &y, &spec).unwrap();
        let names = vec!["a".to_string(), "b".to_string()];
        let export = HullExport::from_hull(&hull, &names).unwrap();
        let back = HullExport::from_json(&export.to_json().unwrap()).unwrap();
        assert_eq!(back, export);
        let rebuilt = back.into_hull().unwrap();
        assert_eq!(rebuilt.theta_a, hull.theta_a);
        assert_eq!(rebuilt.fingerprint, spec.fingerprint());
        assert!(HullExport::from_hull(&hull, &names[..1]).is_err());
    }
}
