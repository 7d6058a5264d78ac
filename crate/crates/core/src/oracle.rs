//! Exhaustive ground truth for small instances.
//!
//! Nothing here uses potential impacts or top-k selection. Ranges are found by
//! enumerating every subset of at most `l` labels and every endpoint
//! combination, and classification verdicts by refitting the model on every
//! flipped label vector. Hard size guards keep this out of production paths.

use crate::bias::BiasSpec;
use crate::error::{check_len, Error, Result};
use crate::exact::check_binary;
use crate::interval::Interval;
use crate::linalg::{predict, solve_ridge, Dataset};
use crate::scalar::{lit, Scalar};

pub const MAX_RANGE_LABELS: usize = 15;
pub const MAX_RANGE_CAP: usize = 3;
pub const MAX_HULL_ROWS: usize = 6;
pub const MAX_CLASSIFICATION_LABELS: usize = 12;
pub const MAX_CLASSIFICATION_CAP: usize = 2;

/// Calls `visit` with every subset of `0..n` of size at most `k`.
fn for_each_subset(n: usize, k: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, visit: &mut dyn FnMut(&[usize])) {
        visit(cur);
        if cur.len() == k {
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, visit);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::with_capacity(k), visit);
}

/// Calls `visit` with the sum `Σ z[i]·choice[i]` for every assignment of
/// `choices(i)` to the indices in `subset`.
fn for_each_assignment<T: Scalar>(
    z: &[T],
    subset: &[usize],
    choices: &dyn Fn(usize) -> Vec<T>,
    visit: &mut dyn FnMut(T),
) {
    fn rec<T: Scalar>(
        z: &[T],
        subset: &[usize],
        choices: &dyn Fn(usize) -> Vec<T>,
        acc: T,
        visit: &mut dyn FnMut(T),
    ) {
        match subset.split_first() {
            None => visit(acc),
            Some((&i, rest)) => {
                for d in choices(i) {
                    rec(z, rest, choices, acc + z[i] * d, visit);
                }
            }
        }
    }
    rec(z, subset, choices, T::zero(), visit);
}

/// Endpoint-optimal bounds plus the extremes seen on an interior grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeEnumeration<T> {
    pub endpoints: Interval<T>,
    pub interior: Interval<T>,
}

/// Enumerates `Z·ỹ` over every subset of at most `l` labels, each at either end
/// of its interval, and separately at three interior grid points per label.
pub fn enumerate_range<T: Scalar>(z: &[T], y: &[T], spec: &BiasSpec<T>) -> Result<RangeEnumeration<T>> {
    check_len("labels", z.len(), y.len())?;
    check_len("bias spec", z.len(), spec.n())?;
    if z.len() > MAX_RANGE_LABELS || spec.l() > MAX_RANGE_CAP {
        return Err(Error::InstanceTooLarge(format!(
            "n = {}, l = {} (limits {MAX_RANGE_LABELS}, {MAX_RANGE_CAP})",
            z.len(),
            spec.l()
        )));
    }
    let base = z.iter().zip(y).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
    let delta = spec.delta();
    let ends = |i: usize| vec![delta.get(i).lo(), delta.get(i).hi()];
    let four: T = lit(4);
    let grid = |i: usize| {
        let d = delta.get(i);
        (1..=3)
            .map(|k| d.lo() + d.width() * lit::<T>(k) / four)
            .collect()
    };
    let mut endpoints = Interval::point(base);
    let mut interior = Interval::point(base);
    for_each_subset(z.len(), spec.l(), &mut |subset| {
        for_each_assignment(z, subset, &ends, &mut |s| {
            endpoints = endpoints.hull(&Interval::point(base + s));
        });
        for_each_assignment(z, subset, &grid, &mut |s| {
            interior = interior.hull(&Interval::point(base + s));
        });
    });
    Ok(RangeEnumeration {
        endpoints,
        interior,
    })
}

pub fn brute_force_range<T: Scalar>(z: &[T], y: &[T], spec: &BiasSpec<T>) -> Result<Interval<T>> {
    Ok(enumerate_range(z, y, spec)?.endpoints)
}

/// Per-row [`brute_force_range`] of an `m×n` coefficient map.
pub fn brute_force_hull<T: Scalar>(
    c: &ndarray::Array2<T>,
    y: &[T],
    spec: &BiasSpec<T>,
) -> Result<Vec<Interval<T>>> {
    if c.nrows() > MAX_HULL_ROWS {
        return Err(Error::InstanceTooLarge(format!(
            "m = {} (limit {MAX_HULL_ROWS})",
            c.nrows()
        )));
    }
    c.outer_iter()
        .map(|row| brute_force_range(&row.to_vec(), y, spec))
        .collect()
}

/// Refits on every label vector with at most `l` admissible flips and reports
/// whether the thresholded prediction at `x` never changes.
pub fn brute_force_classification<T: Scalar>(
    x: &[T],
    dataset: &Dataset<T>,
    spec: &BiasSpec<T>,
    lambda: T,
) -> Result<bool> {
    let n = dataset.n();
    check_len("bias spec", n, spec.n())?;
    if n > MAX_CLASSIFICATION_LABELS || spec.l() > MAX_CLASSIFICATION_CAP {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n}, l = {} (limits {MAX_CLASSIFICATION_LABELS}, {MAX_CLASSIFICATION_CAP})",
            spec.l()
        )));
    }
    let y = dataset.y().to_vec();
    check_binary(&y)?;
    let half = T::one() / lit(2);
    let decide = |p: T| p >= half;
    let base = predict(&solve_ridge(dataset, lambda)?, x)?;
    let base_class = decide(base);
    let flippable: Vec<usize> = (0..n)
        .filter(|&i| spec.delta().get(i).contains(T::one() - y[i] - y[i]))
        .collect();
    let mut robust = true;
    let mut failure = None;
    for_each_subset(flippable.len(), spec.l(), &mut |subset| {
        if !robust || subset.is_empty() {
            return;
        }
        let mut yt = y.clone();
        for &j in subset {
            let i = flippable[j];
            yt[i] = T::one() - yt[i];
        }
        let refit = dataset
            .with_labels(yt.into())
            .and_then(|ds| solve_ridge(&ds, lambda))
            .and_then(|theta| predict(&theta, x));
        match refit {
            Ok(p) => {
                // a base exactly on the threshold is fragile to any movement
                if decide(p) != base_class || (base == half && p != half) {
                    robust = false;
                }
            }
            Err(e) => {
                failure = Some(e);
                robust = false;
            }
        }
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(robust),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bias::{classification_delta, uniform_delta, PerturbationVector};
    use ndarray::{array, Array2};
    use num_rational::Rational64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn subsets_are_counted() {
        let mut count = 0;
        for_each_subset(5, 2, &mut |_| count += 1);
        assert_eq!(count, 1 + 5 + 10);
    }

    #[test]
    fn worked_example() {
        let r = Rational64::from_integer;
        let spec = BiasSpec::new(uniform_delta(2, r(1)).unwrap(), 1).unwrap();
        let v = brute_force_range(&[r(-1), r(2)], &[r(3), r(4)], &spec).unwrap();
        assert_eq!(v, Interval::new(r(3), r(7)).unwrap());
        let v0 = brute_force_range(&[r(-1), r(2)], &[r(3), r(4)], &spec.with_cap(0).unwrap()).unwrap();
        assert_eq!(v0, Interval::point(r(5)));
    }

    #[test]
    fn non_convex_hull_example() {
        let r = Rational64::from_integer;
        let c = array![[r(1), r(2), r(1)], [r(-1), r(0), r(2)], [r(2), r(1), r(0)]];
        let y = [r(1), r(-1), r(2)];
        let spec = BiasSpec::new(uniform_delta(3, r(1)).unwrap(), 2).unwrap();
        let hull = brute_force_hull(&c, &y, &spec).unwrap();
        let expect = [(-2, 4), (0, 6), (-2, 4)].map(|(l, h)| Interval::new(r(l), r(h)).unwrap());
        assert_eq!(hull, expect.to_vec());
        let degenerate = brute_force_hull(&c, &y, &spec.with_cap(0).unwrap()).unwrap();
        let cy = c.dot(&ndarray::Array1::from(y.to_vec()));
        assert_eq!(degenerate, cy.iter().map(|&v| Interval::point(v)).collect::<Vec<_>>());
    }

    #[test]
    fn size_guards() {
        let spec = BiasSpec::new(uniform_delta(16, 1.0).unwrap(), 1).unwrap();
        assert!(matches!(
            brute_force_range(&[0.0; 16], &[0.0; 16], &spec),
            Err(Error::InstanceTooLarge(_))
        ));
        let spec = BiasSpec::new(uniform_delta(5, 1.0).unwrap(), 4).unwrap();
        assert!(brute_force_range(&[0.0; 5], &[0.0; 5], &spec).is_err());
        let spec = BiasSpec::new(uniform_delta(2, 1.0).unwrap(), 1).unwrap();
        assert!(brute_force_hull(&Array2::zeros((7, 2)), &[0.0; 2], &spec).is_err());
    }

    #[test]
    fn endpoints_dominate_interior_and_full_cap_is_interval_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..200 {
            let n = rng.random_range(1..=3);
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            let delta = PerturbationVector::new(
                (0..n)
                    .map(|_| Interval::new(-rng.random_range(0.0..1.5), rng.random_range(0.0..1.5)).unwrap())
                    .collect(),
            )
            .unwrap();
            let spec = BiasSpec::new(delta.clone(), n).unwrap();
            let e = enumerate_range(&z, &y, &spec).unwrap();
            assert!(e.interior.is_subset_of(&e.endpoints));
            let zy: f64 = z.iter().zip(&y).map(|(a, b)| a * b).sum();
            let sum: Interval<f64> = z.iter().zip(delta.as_slice()).map(|(&zi, d)| d.scale(zi)).sum();
            let expected = sum.shift(zy);
            assert!((e.endpoints.lo() - expected.lo()).abs() < 1e-12);
            assert!((e.endpoints.hi() - expected.hi()).abs() < 1e-12);
        }
    }

    fn separable() -> Dataset<f64> {
        let x = array![[2.0, 1.0], [1.5, 1.0], [1.8, 1.0], [-2.0, 1.0], [-1.5, 1.0], [-1.7, 1.0]];
        Dataset::from_arrays(x, array![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap()
    }

    #[test]
    fn classification_oracle() {
        let ds = separable();
        let delta = classification_delta(ds.y().as_slice().unwrap()).unwrap();
        let spec0 = BiasSpec::new(delta.clone(), 0).unwrap();
        assert!(brute_force_classification(&[0.1, 1.0], &ds, &spec0, 0.0).unwrap());
        let spec1 = BiasSpec::new(delta.clone(), 1).unwrap();
        assert!(brute_force_classification(&[5.0, 1.0], &ds, &spec1, 0.0).unwrap());
        let spec2 = BiasSpec::new(delta, 2).unwrap();
        assert!(!brute_force_classification(&[0.05, 1.0], &ds, &spec2, 0.0).unwrap());
        let big = BiasSpec::new(uniform_delta(6, 1.0).unwrap(), 3).unwrap();
        assert!(brute_force_classification(&[0.0, 1.0], &ds, &big, 0.0).is_err());
    }
}
