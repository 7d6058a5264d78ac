//! The label-bias model: which label vectors count as plausible versions of `y`.
//!
//! A [`BiasSpec`] pairs a per-label interval of allowed additive change with a
//! cap `l` on how many labels may move at once. Its bias set is every `ỹ` with
//! `ỹᵢ − yᵢ ∈ δᵢ` for all `i` and at most `l` nonzero differences.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{check_len, Error, Result};
use crate::interval::Interval;
use crate::linalg::Dataset;
use crate::scalar::Scalar;

/// One interval per training label, each containing 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval<T>>", into = "Vec<Interval<T>>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct PerturbationVector<T: Scalar> {
    deltas: Vec<Interval<T>>,
}

impl<T: Scalar> PerturbationVector<T> {
    pub fn new(deltas: Vec<Interval<T>>) -> Result<Self> {
        if let Some(index) = deltas.iter().position(|d| !d.contains_zero()) {
            return Err(Error::IntervalExcludesZero { index });
        }
        Ok(Self { deltas })
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }

    pub fn as_slice(&self) -> &[Interval<T>] {
        &self.deltas
    }

    pub fn get(&self, i: usize) -> Interval<T> {
        self.deltas[i]
    }
}

impl<T: Scalar> TryFrom<Vec<Interval<T>>> for PerturbationVector<T> {
    type Error = Error;

    fn try_from(deltas: Vec<Interval<T>>) -> Result<Self> {
        Self::new(deltas)
    }
}

impl<T: Scalar> From<PerturbationVector<T>> for Vec<Interval<T>> {
    fn from(p: PerturbationVector<T>) -> Self {
        p.deltas
    }
}

/// `Bias_{l,Δ}`: perturb at most `l` labels, each within its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSpec<T: Scalar> {
    delta: PerturbationVector<T>,
    l: usize,
}

impl<T: Scalar> BiasSpec<T> {
    pub fn new(delta: PerturbationVector<T>, l: usize) -> Result<Self> {
        if l > delta.len() {
            return Err(Error::CapTooLarge { l, n: delta.len() });
        }
        Ok(Self { delta, l })
    }

    pub fn delta(&self) -> &PerturbationVector<T> {
        &self.delta
    }

    pub fn l(&self) -> usize {
        self.l
    }

    pub fn n(&self) -> usize {
        self.delta.len()
    }

    /// Same intervals, different cap.
    pub fn with_cap(&self, l: usize) -> Result<Self> {
        Self::new(self.delta.clone(), l)
    }

    /// Hex digest over `l` and every interval endpoint.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.l as u64).to_le_bytes());
        hasher.update((self.n() as u64).to_le_bytes());
        for d in self.delta.as_slice() {
            hasher.update(d.lo().canonical_bytes());
            hasher.update(d.hi().canonical_bytes());
        }
        let digest = hasher.finalize();
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    Equals,
    NotEquals,
}

impl Comparison {
    fn holds(self, equal: bool) -> bool {
        match self {
            Comparison::Equals => equal,
            Comparison::NotEquals => !equal,
        }
    }
}

/// Selects the rows whose labels may be perturbed.
#[derive(Debug, Clone, PartialEq)]
pub enum TargetPredicate<T> {
    Feature {
        index: usize,
        comparison: Comparison,
        value: T,
    },
    Group {
        comparison: Comparison,
        value: String,
    },
}

impl<T: Scalar> TargetPredicate<T> {
    pub fn feature_named(
        dataset: &Dataset<T>,
        name: &str,
        comparison: Comparison,
        value: T,
    ) -> Result<Self> {
        let index = dataset
            .feature_index(name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))?;
        Ok(Self::Feature {
            index,
            comparison,
            value,
        })
    }

    fn mask(&self, dataset: &Dataset<T>) -> Result<Vec<bool>> {
        match self {
            TargetPredicate::Feature {
                index,
                comparison,
                value,
            } => {
                if *index >= dataset.m() {
                    return Err(Error::UnknownColumn(format!("feature #{index}")));
                }
                Ok(dataset
                    .x()
                    .column(*index)
                    .iter()
                    .map(|v| comparison.holds(v == value))
                    .collect())
            }
            TargetPredicate::Group { comparison, value } => {
                let groups = dataset
                    .group_labels()
                    .ok_or_else(|| Error::UnknownColumn("group labels".to_string()))?;
                Ok(groups.iter().map(|g| comparison.holds(g == value)).collect())
            }
        }
    }
}

/// `[-halfwidth, halfwidth]` for every label.
pub fn uniform_delta<T: Scalar>(n: usize, halfwidth: T) -> Result<PerturbationVector<T>> {
    let iv = Interval::symmetric(halfwidth)?;
    PerturbationVector::new(vec![iv; n])
}

/// Label flips for `{0,1}` labels: `[-1,0]` where `y = 1`, `[0,1]` where `y = 0`.
pub fn classification_delta<T: Scalar>(y: &[T]) -> Result<PerturbationVector<T>> {
    let deltas = y
        .iter()
        .enumerate()
        .map(|(index, &v)| {
            if v == T::one() {
                Interval::new(-T::one(), T::zero())
            } else if v == T::zero() {
                Interval::new(T::zero(), T::one())
            } else {
                Err(Error::NonBinaryLabel {
                    index,
                    value: v.to_string(),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    PerturbationVector::new(deltas)
}

/// Keeps `δᵢ` where the predicate holds for row `i` and zeroes it elsewhere.
pub fn apply_targeting<T: Scalar>(
    delta: &PerturbationVector<T>,
    dataset: &Dataset<T>,
    phi: &TargetPredicate<T>,
) -> Result<PerturbationVector<T>> {
    check_len("perturbation vector", dataset.n(), delta.len())?;
    let mask = phi.mask(dataset)?;
    let deltas = delta
        .as_slice()
        .iter()
        .zip(mask)
        .map(|(d, keep)| if keep { *d } else { Interval::zero() })
        .collect();
    PerturbationVector::new(deltas)
}

pub fn scale_delta<T: Scalar>(delta: &PerturbationVector<T>, c: T) -> Result<PerturbationVector<T>> {
    if c <= T::zero() || !c.is_finite_value() {
        return Err(Error::NonPositiveScale(c.to_string()));
    }
    PerturbationVector::new(delta.as_slice().iter().map(|d| d.scale(c)).collect())
}

/// Membership test for `Bias_{l,Δ}(y)`. A label counts as changed iff it differs at all.
pub fn contains<T: Scalar>(spec: &BiasSpec<T>, y: &[T], y_tilde: &[T]) -> Result<bool> {
    check_len("labels", spec.n(), y.len())?;
    check_len("perturbed labels", spec.n(), y_tilde.len())?;
    let mut changed = 0usize;
    for ((&orig, &pert), d) in y.iter().zip(y_tilde).zip(spec.delta().as_slice()) {
        let diff = pert - orig;
        if !d.contains(diff) {
            return Ok(false);
        }
        if diff != T::zero() {
            changed += 1;
        }
    }
    Ok(changed <= spec.l())
}

/// [`contains`] allowing each label difference to miss its interval by
/// `tol · max(1, |yᵢ|)`; differences within that slack also count as unchanged.
pub fn contains_within<T: Scalar>(spec: &BiasSpec<T>, y: &[T], y_tilde: &[T], tol: T) -> Result<bool> {
    check_len("labels", spec.n(), y.len())?;
    check_len("perturbed labels", spec.n(), y_tilde.len())?;
    let mut changed = 0usize;
    for ((&orig, &pert), d) in y.iter().zip(y_tilde).zip(spec.delta().as_slice()) {
        let slack = tol * T::max_of(T::one(), orig.abs());
        let diff = pert - orig;
        if diff < d.lo() - slack || diff > d.hi() + slack {
            return Ok(false);
        }
        if diff.abs() > slack {
            changed += 1;
        }
    }
    Ok(changed <= spec.l())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};
    use proptest::prelude::*;

    fn iv(lo: f64, hi: f64) -> Interval<f64> {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn uniform_examples() {
        assert_eq!(uniform_delta(2, 1.0).unwrap().as_slice(), &[iv(-1.0, 1.0); 2]);
        assert_eq!(uniform_delta(3, 0.0).unwrap().as_slice(), &[iv(0.0, 0.0); 3]);
        assert_eq!(uniform_delta(1, 2.5).unwrap().as_slice(), &[iv(-2.5, 2.5)]);
        assert!(uniform_delta(2, -1.0).is_err());
    }

    #[test]
    fn classification_examples() {
        assert_eq!(
            classification_delta(&[1.0, 0.0]).unwrap().as_slice(),
            &[iv(-1.0, 0.0), iv(0.0, 1.0)]
        );
        assert_eq!(
            classification_delta(&[0.0, 0.0, 0.0]).unwrap().as_slice(),
            &[iv(0.0, 1.0); 3]
        );
        assert_eq!(
            classification_delta(&[1.0, 1.0]).unwrap().as_slice(),
            &[iv(-1.0, 0.0); 2]
        );
        assert!(matches!(
            classification_delta(&[1.0, 0.5]),
            Err(Error::NonBinaryLabel { index: 1, .. })
        ));
    }

    fn grouped() -> Dataset<f64> {
        Dataset::from_arrays(array![[1.0], [2.0], [1.0]], array![0.0, 1.0, 0.0])
            .unwrap()
            .with_groups(vec!["A".into(), "B".into(), "A".into()])
            .unwrap()
    }

    #[test]
    fn targeting_by_group() {
        let ds = grouped();
        let delta = uniform_delta(3, 1.0).unwrap();
        let phi = TargetPredicate::Group {
            comparison: Comparison::Equals,
            value: "A".into(),
        };
        let out = apply_targeting(&delta, &ds, &phi).unwrap();
        assert_eq!(out.as_slice(), &[iv(-1.0, 1.0), iv(0.0, 0.0), iv(-1.0, 1.0)]);

        let always = TargetPredicate::Group {
            comparison: Comparison::NotEquals,
            value: "nobody".into(),
        };
        assert_eq!(apply_targeting(&delta, &ds, &always).unwrap(), delta);
        let never = TargetPredicate::Group {
            comparison: Comparison::Equals,
            value: "nobody".into(),
        };
        assert_eq!(
            apply_targeting(&delta, &ds, &never).unwrap().as_slice(),
            &[iv(0.0, 0.0); 3]
        );
    }

    #[test]
    fn targeting_by_feature_and_unknown() {
        let ds = grouped();
        let delta = classification_delta(ds.y().as_slice().unwrap()).unwrap();
        let phi = TargetPredicate::feature_named(&ds, "x0", Comparison::Equals, 2.0).unwrap();
        let out = apply_targeting(&delta, &ds, &phi).unwrap();
        assert_eq!(out.as_slice(), &[iv(0.0, 0.0), iv(-1.0, 0.0), iv(0.0, 0.0)]);
        assert!(matches!(
            TargetPredicate::feature_named(&ds, "race", Comparison::Equals, 1.0),
            Err(Error::UnknownColumn(_))
        ));
        let bad = TargetPredicate::Feature {
            index: 4,
            comparison: Comparison::Equals,
            value: 1.0,
        };
        assert!(matches!(apply_targeting(&delta, &ds, &bad), Err(Error::UnknownColumn(_))));
        let no_groups = Dataset::from_arrays(Array2::zeros((3, 1)), array![0.0, 0.0, 0.0]).unwrap();
        let g = TargetPredicate::Group {
            comparison: Comparison::Equals,
            value: "A".into(),
        };
        assert!(apply_targeting(&delta, &no_groups, &g).is_err());
    }

    #[test]
    fn scaling() {
        let d = uniform_delta(1, 1.0).unwrap();
        assert_eq!(scale_delta(&d, 1.0).unwrap(), d);
        assert_eq!(scale_delta(&d, 2.0).unwrap().as_slice(), &[iv(-2.0, 2.0)]);
        let d = PerturbationVector::new(vec![iv(-1.0, 0.0), iv(0.0, 3.0)]).unwrap();
        assert_eq!(
            scale_delta(&d, 0.5).unwrap().as_slice(),
            &[iv(-0.5, 0.0), iv(0.0, 1.5)]
        );
        assert!(matches!(scale_delta(&d, 0.0), Err(Error::NonPositiveScale(_))));
        assert!(scale_delta(&d, -1.0).is_err());
    }

    #[test]
    fn membership_examples() {
        let spec = BiasSpec::new(uniform_delta(2, 1.0).unwrap(), 1).unwrap();
        let y = [3.0, 4.0];
        assert!(contains(&spec, &y, &y).unwrap());
        assert!(contains(&spec, &y, &[2.5, 4.0]).unwrap());
        assert!(contains(&spec, &y, &[3.0, 5.0]).unwrap());
        assert!(!contains(&spec, &y, &[2.0, 5.0]).unwrap());
        assert!(!contains(&spec, &y, &[1.5, 4.0]).unwrap());
        assert!(contains(&spec, &y, &[3.0]).is_err());
    }

    #[test]
    fn spec_validation() {
        let d = uniform_delta(2, 1.0).unwrap();
        assert!(matches!(BiasSpec::new(d.clone(), 3), Err(Error::CapTooLarge { .. })));
        assert!(PerturbationVector::new(vec![iv(0.5, 1.0)]).is_err());
        let a = BiasSpec::new(d.clone(), 1).unwrap();
        let b = BiasSpec::new(d, 2).unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
    }

    type Instance = (Vec<(f64, f64)>, Vec<f64>, Vec<f64>, usize);

    fn arb_instance() -> impl Strategy<Value = Instance> {
        (1usize..8).prop_flat_map(|n| {
            (
                prop::collection::vec((-3.0f64..=0.0, 0.0f64..=3.0), n),
                prop::collection::vec(-5.0f64..5.0, n),
                prop::collection::vec(prop::option::of(0.0f64..=1.0), n),
                0usize..=n,
            )
                .prop_map(|(deltas, y, frac, l)| {
                    // ỹ built from exact endpoint fractions so membership is decidable
                    let yt = y
                        .iter()
                        .zip(&deltas)
                        .zip(&frac)
                        .map(|((&yi, &(lo, hi)), f)| match f {
                            Some(f) => yi + if *f < 0.5 { lo } else { hi },
                            None => yi,
                        })
                        .collect();
                    (deltas, y, yt, l)
                })
        })
    }

    proptest! {
        #[test]
        fn unperturbed_labels_always_members((deltas, y, _yt, l) in arb_instance()) {
            let delta = PerturbationVector::new(deltas.iter().map(|&(a, b)| iv(a, b)).collect()).unwrap();
            let spec = BiasSpec::new(delta, l).unwrap();
            prop_assert!(contains(&spec, &y, &y).unwrap());
        }

        #[test]
        fn membership_invariant_under_scaling((deltas, y, yt, l) in arb_instance(), k in 0usize..3) {
            // powers of two keep ỹ − y exact under scaling
            let c = [0.5, 2.0, 4.0][k];
            let delta = PerturbationVector::new(deltas.iter().map(|&(a, b)| iv(a, b)).collect()).unwrap();
            let spec = BiasSpec::new(delta.clone(), l).unwrap();
            let scaled = BiasSpec::new(scale_delta(&delta, c).unwrap(), l).unwrap();
            let diffs: Vec<f64> = y.iter().zip(&yt).map(|(a, b)| b - a).collect();
            let y0 = vec![0.0; y.len()];
            let yc: Vec<f64> = diffs.iter().map(|d| c * d).collect();
            prop_assert_eq!(contains(&spec, &y0, &diffs).unwrap(), contains(&scaled, &y0, &yc).unwrap());
        }

        #[test]
        fn targeting_never_widens(bounds in prop::collection::vec((-3.0f64..=0.0, 0.0f64..=3.0), 1..8), pick in any::<u64>()) {
            let n = bounds.len();
            let groups: Vec<String> = (0..n).map(|i| if (pick >> i) & 1 == 1 { "A".into() } else { "B".into() }).collect();
            let ds = Dataset::from_arrays(Array2::zeros((n, 1)), ndarray::Array1::zeros(n)).unwrap().with_groups(groups).unwrap();
            let delta = PerturbationVector::new(bounds.iter().map(|&(a, b)| iv(a, b)).collect()).unwrap();
            let phi = TargetPredicate::Group { comparison: Comparison::Equals, value: "A".into() };
            let out = apply_targeting(&delta, &ds, &phi).unwrap();
            for (o, d) in out.as_slice().iter().zip(delta.as_slice()) {
                prop_assert!(o.is_subset_of(d));
                prop_assert!(o.contains_zero());
            }
        }
    }
}
