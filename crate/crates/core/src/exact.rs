//! Exact certification for a single test point.
//!
//! The prediction after refitting on `ỹ` is `Z·ỹ`, which is affine in every
//! label. Perturbing label `i` can raise it by at most `ρ⁺ᵢ` and lower it by at
//! most `|ρ⁻ᵢ|`, independently of the other labels, so the extremes over the bias
//! set are reached by spending the `l` perturbations on the labels with the
//! largest impacts. That gives the exact reachable range `V`, a witness for each
//! endpoint, and the smallest cap at which robustness breaks.

use std::cmp::Ordering;

use crate::bias::{BiasSpec, PerturbationVector};
use crate::error::{check_len, Error, Result};
use crate::interval::Interval;
use crate::linalg::{influence_matrix, influence_vector, Dataset, InfluenceVector};
use crate::scalar::{lit, Scalar};

/// `ρ⁺ᵢ ≥ 0` and `ρ⁻ᵢ ≤ 0`: the largest increase and decrease of `Z·y` from label `i` alone.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialImpacts<T> {
    pub rho_plus: Vec<T>,
    pub rho_minus: Vec<T>,
}

/// Reachable predictions over the bias set, with label vectors attaining each end.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRange<T> {
    pub range: Interval<T>,
    pub y_lower: Vec<T>,
    pub y_upper: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertResult<T> {
    pub robust: bool,
    pub range: PredictionRange<T>,
    pub epsilon: T,
    pub base_prediction: T,
    /// Present iff not robust: a bias-set member whose refit escapes the band.
    pub counterexample: Option<Vec<T>>,
}

/// Smallest cap that breaks robustness, with the label vector that does it.
#[derive(Debug, Clone, PartialEq)]
pub struct MinFlips<T> {
    pub flips: usize,
    pub witness: Vec<T>,
    pub prediction: T,
}

/// The set of predictions that count as "unchanged".
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band<T> {
    /// `[base − ε − τ, base + ε + τ]`; τ absorbs floating-point noise and defaults to 0.
    Radius { epsilon: T, tolerance: T },
    /// Same side of `threshold` as the base prediction; a prediction equal to
    /// the threshold is classified as positive.
    Threshold { threshold: T },
}

impl<T: Scalar> Band<T> {
    pub fn radius(epsilon: T) -> Self {
        Band::Radius {
            epsilon,
            tolerance: T::zero(),
        }
    }

    /// The 0.5 decision threshold of a `{0,1}` classifier.
    pub fn decision() -> Self {
        Band::Threshold {
            threshold: T::one() / lit(2),
        }
    }

    /// Whether predictions `base + lo_dev ..= base + hi_dev` all count as unchanged.
    pub fn admits(&self, base: T, lo_dev: T, hi_dev: T) -> bool {
        match *self {
            Band::Radius { epsilon, tolerance } => {
                let r = epsilon + tolerance;
                -r <= lo_dev && hi_dev <= r
            }
            Band::Threshold { threshold } => {
                let lo = base + lo_dev;
                let hi = base + hi_dev;
                if base == threshold {
                    lo == hi
                } else if base > threshold {
                    lo >= threshold
                } else {
                    hi < threshold
                }
            }
        }
    }

    /// Half-width reported in [`CertResult::epsilon`].
    fn reported_epsilon(&self, base: T) -> T {
        match *self {
            Band::Radius { epsilon, .. } => epsilon,
            Band::Threshold { threshold } => (base - threshold).abs(),
        }
    }
}

pub fn potential_impacts<T: Scalar>(
    z: &InfluenceVector<T>,
    delta: &PerturbationVector<T>,
) -> Result<PotentialImpacts<T>> {
    check_len("perturbation vector", z.len(), delta.len())?;
    let (rho_plus, rho_minus) = z
        .as_slice()
        .iter()
        .zip(delta.as_slice())
        .map(|(&zi, d)| {
            if zi >= T::zero() {
                (zi * d.hi(), zi * d.lo())
            } else {
                (zi * d.lo(), zi * d.hi())
            }
        })
        .unzip();
    Ok(PotentialImpacts {
        rho_plus,
        rho_minus,
    })
}

/// The endpoint of `δᵢ` that pushes `Z·y` up (`upward`) or down.
fn endpoint<T: Scalar>(zi: T, d: Interval<T>, upward: bool) -> T {
    if (zi >= T::zero()) == upward {
        d.hi()
    } else {
        d.lo()
    }
}

/// Indices with nonzero magnitude, sorted by decreasing `|v|`, ties to the lowest index.
fn ranked_by_magnitude<T: Scalar>(values: &[T], limit: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] != T::zero())
        .collect();
    let cmp = |&a: &usize, &b: &usize| {
        values[b]
            .abs()
            .partial_cmp(&values[a].abs())
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    };
    if limit < idx.len() {
        if limit == 0 {
            return Vec::new();
        }
        idx.select_nth_unstable_by(limit - 1, cmp);
        idx.truncate(limit);
    }
    idx.sort_unstable_by(cmp);
    idx
}

struct Extremes<T> {
    lo_dev: T,
    hi_dev: T,
    lower_idx: Vec<usize>,
    upper_idx: Vec<usize>,
}

fn extremes<T: Scalar>(impacts: &PotentialImpacts<T>, l: usize) -> Extremes<T> {
    let upper_idx = ranked_by_magnitude(&impacts.rho_plus, l);
    let lower_idx = ranked_by_magnitude(&impacts.rho_minus, l);
    let hi_dev = upper_idx
        .iter()
        .fold(T::zero(), |acc, &i| acc + impacts.rho_plus[i]);
    let lo_dev = lower_idx
        .iter()
        .fold(T::zero(), |acc, &i| acc + impacts.rho_minus[i]);
    Extremes {
        lo_dev,
        hi_dev,
        lower_idx,
        upper_idx,
    }
}

fn witness<T: Scalar>(
    z: &[T],
    y: &[T],
    delta: &PerturbationVector<T>,
    indices: &[usize],
    upward: bool,
) -> Vec<T> {
    let mut out = y.to_vec();
    for &i in indices {
        out[i] = out[i] + endpoint(z[i], delta.get(i), upward);
    }
    out
}

fn check_spec<T: Scalar>(z: &InfluenceVector<T>, y: &[T], spec: &BiasSpec<T>) -> Result<()> {
    check_len("labels", z.len(), y.len())?;
    check_len("bias spec", z.len(), spec.n())
}

/// Exact `V = [min, max]` of `Z·ỹ` over `Bias_{l,Δ}(y)`.
pub fn prediction_range<T: Scalar>(
    z: &InfluenceVector<T>,
    y: &[T],
    spec: &BiasSpec<T>,
) -> Result<PredictionRange<T>> {
    check_spec(z, y, spec)?;
    let impacts = potential_impacts(z, spec.delta())?;
    let base = z.apply(y)?;
    Ok(range_from(z, y, spec, &impacts, base))
}

fn range_from<T: Scalar>(
    z: &InfluenceVector<T>,
    y: &[T],
    spec: &BiasSpec<T>,
    impacts: &PotentialImpacts<T>,
    base: T,
) -> PredictionRange<T> {
    let ext = extremes(impacts, spec.l());
    let zs = z.as_slice();
    PredictionRange {
        range: Interval::new(base + ext.lo_dev, base + ext.hi_dev)
            .expect("ρ⁻ ≤ 0 ≤ ρ⁺ keeps the range ordered"),
        y_lower: witness(zs, y, spec.delta(), &ext.lower_idx, false),
        y_upper: witness(zs, y, spec.delta(), &ext.upper_idx, true),
    }
}

/// Decides robustness of one point against an arbitrary band.
pub fn certify_in_band<T: Scalar>(
    z: &InfluenceVector<T>,
    y: &[T],
    spec: &BiasSpec<T>,
    band: Band<T>,
) -> Result<CertResult<T>> {
    check_spec(z, y, spec)?;
    let impacts = potential_impacts(z, spec.delta())?;
    let base = z.apply(y)?;
    let ext = extremes(&impacts, spec.l());
    let robust = band.admits(base, ext.lo_dev, ext.hi_dev);
    let range = range_from(z, y, spec, &impacts, base);
    let counterexample = (!robust).then(|| {
        if band.admits(base, T::zero(), ext.hi_dev) {
            range.y_lower.clone()
        } else {
            range.y_upper.clone()
        }
    });
    Ok(CertResult {
        robust,
        range,
        epsilon: band.reported_epsilon(base),
        base_prediction: base,
        counterexample,
    })
}

/// Regression robustness at radius ε, given a precomputed influence vector.
pub fn certify_point<T: Scalar>(
    z: &InfluenceVector<T>,
    y: &[T],
    spec: &BiasSpec<T>,
    epsilon: T,
) -> Result<CertResult<T>> {
    if epsilon < T::zero() {
        return Err(Error::NegativeEpsilon(epsilon.to_string()));
    }
    certify_in_band(z, y, spec, Band::radius(epsilon))
}

pub fn certify_regression<T: Scalar>(
    x: &[T],
    dataset: &Dataset<T>,
    spec: &BiasSpec<T>,
    epsilon: T,
    lambda: T,
) -> Result<CertResult<T>> {
    let c = influence_matrix(dataset, lambda)?;
    let z = influence_vector(x, &c)?;
    certify_point(&z, dataset.y().as_slice().expect("contiguous labels"), spec, epsilon)
}

pub(crate) fn check_binary<T: Scalar>(y: &[T]) -> Result<()> {
    match y
        .iter()
        .position(|&v| v != T::zero() && v != T::one())
    {
        Some(index) => Err(Error::NonBinaryLabel {
            index,
            value: y[index].to_string(),
        }),
        None => Ok(()),
    }
}

/// Whether the thresholded decision at `x` survives every bias-set member.
pub fn certify_classification<T: Scalar>(
    x: &[T],
    dataset: &Dataset<T>,
    spec: &BiasSpec<T>,
    lambda: T,
) -> Result<CertResult<T>> {
    let y = dataset.y().as_slice().expect("contiguous labels");
    check_binary(y)?;
    let c = influence_matrix(dataset, lambda)?;
    let z = influence_vector(x, &c)?;
    certify_in_band(&z, y, spec, Band::decision())
}

/// Grows the cap one label at a time until the band is escaped.
///
/// Returns `None` when every label with nonzero impact has been spent on both
/// sides and the point is still robust.
pub fn min_flips_in_band<T: Scalar>(
    z: &InfluenceVector<T>,
    y: &[T],
    delta: &PerturbationVector<T>,
    band: Band<T>,
) -> Result<Option<MinFlips<T>>> {
    check_len("labels", z.len(), y.len())?;
    let impacts = potential_impacts(z, delta)?;
    let base = z.apply(y)?;
    let n = y.len();
    let up = ranked_by_magnitude(&impacts.rho_plus, n);
    let down = ranked_by_magnitude(&impacts.rho_minus, n);
    let mut hi_dev = T::zero();
    let mut lo_dev = T::zero();
    for k in 1..=up.len().max(down.len()) {
        if let Some(&i) = up.get(k - 1) {
            hi_dev = hi_dev + impacts.rho_plus[i];
        }
        if let Some(&i) = down.get(k - 1) {
            lo_dev = lo_dev + impacts.rho_minus[i];
        }
        if !band.admits(base, lo_dev, hi_dev) {
            let (indices, upward, prediction) = if band.admits(base, T::zero(), hi_dev) {
                (&down[..k.min(down.len())], false, base + lo_dev)
            } else {
                (&up[..k.min(up.len())], true, base + hi_dev)
            };
            return Ok(Some(MinFlips {
                flips: k,
                witness: witness(z.as_slice(), y, delta, indices, upward),
                prediction,
            }));
        }
    }
    Ok(None)
}

pub fn min_flips<T: Scalar>(
    x: &[T],
    dataset: &Dataset<T>,
    delta: &PerturbationVector<T>,
    epsilon: T,
    lambda: T,
) -> Result<Option<MinFlips<T>>> {
    if epsilon < T::zero() {
        return Err(Error::NegativeEpsilon(epsilon.to_string()));
    }
    let c = influence_matrix(dataset, lambda)?;
    let z = influence_vector(x, &c)?;
    let y = dataset.y().as_slice().expect("contiguous labels");
    min_flips_in_band(&z, y, delta, Band::radius(epsilon))
}

pub fn min_flips_classification<T: Scalar>(
    x: &[T],
    dataset: &Dataset<T>,
    delta: &PerturbationVector<T>,
    lambda: T,
) -> Result<Option<MinFlips<T>>> {
    let y = dataset.y().as_slice().expect("contiguous labels");
    check_binary(y)?;
    let c = influence_matrix(dataset, lambda)?;
    let z = influence_vector(x, &c)?;
    min_flips_in_band(&z, y, delta, Band::decision())
}
