//! Label-bias robustness certification for closed-form linear regression.
//!
//! Given a training set, a bias model bounding how many labels may be wrong and
//! by how much, and a test point, decide whether the refitted model's
//! prediction at that point can move outside a tolerance band.
//!
//! * [`exact`] answers the question exactly for one point and returns a
//!   witness label vector when the answer is no.
//! * [`approx`] bounds every reachable model with one box, then certifies
//!   any number of points with an interval dot product. It may abstain but
//!   never certifies a non-robust point.
//! * [`oracle`] is an exhaustive reference for small instances.
//!
//! The math is generic over [`Scalar`], so the same code runs on `f64`, `f32`
//! or exact rationals ([`Rational64`]).

pub mod approx;
pub mod bias;
pub mod data;
pub mod error;
pub mod exact;
pub mod harness;
pub mod interval;
pub mod linalg;
pub mod oracle;
pub mod scalar;

pub use num_rational::Rational64;

pub use approx::{certify_approx, interval_predict, model_hull, ApproxVerdict, HullExport, ModelHull};
pub use bias::{
    apply_targeting, classification_delta, contains, contains_within, scale_delta, uniform_delta, BiasSpec,
    Comparison, PerturbationVector, TargetPredicate,
};
pub use error::{Error, Result};
pub use exact::{
    certify_classification, certify_point, certify_regression, min_flips, potential_impacts,
    prediction_range, Band, CertResult, MinFlips, PotentialImpacts, PredictionRange,
};
pub use interval::Interval;
pub use linalg::{
    influence_matrix, influence_vector, predict, solve_ridge, Dataset, InfluenceMatrix,
    InfluenceVector, ModelCoefficients, RidgeFactor,
};
pub use scalar::Scalar;

pub type Interval64 = Interval<f64>;
pub type Dataset64 = Dataset<f64>;
pub type BiasSpec64 = BiasSpec<f64>;
pub type PerturbationVector64 = PerturbationVector<f64>;
pub type InfluenceMatrix64 = InfluenceMatrix<f64>;
pub type ModelHull64 = ModelHull<f64>;
pub type CertResult64 = CertResult<f64>;

pub type ExactInterval = Interval<Rational64>;
pub type ExactDataset = Dataset<Rational64>;
pub type ExactBiasSpec = BiasSpec<Rational64>;
pub type ExactCertResult = CertResult<Rational64>;
