use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bias::{contains, BiasSpec, PerturbationVector};
use crate::error::{Error, Result};
use crate::exact::{check_binary, min_flips_classification, potential_impacts, prediction_range};
use crate::linalg::{influence_matrix, influence_vector, predict, solve_ridge, Dataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    /// Fewest flips that change the thresholded prediction.
    Minimal,
    /// Exactly this many flips, pushing the prediction toward the threshold.
    Count(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackSummary {
    pub mode: AttackMode,
    pub lambda: f64,
    pub flips: usize,
    pub flipped_rows: Vec<usize>,
    pub old_prediction: f64,
    /// Prediction at `x` after refitting on the poisoned labels.
    pub new_prediction: f64,
    pub old_class: u8,
    pub new_class: u8,
    pub decision_changed: bool,
    /// `contains(spec, y, ỹ)` for the cap equal to `flips`.
    pub within_bias_set: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Attack {
    pub poisoned: Vec<f64>,
    pub summary: AttackSummary,
}

fn class_of(p: f64) -> u8 {
    u8::from(p >= 0.5)
}

/// Builds poisoned training labels for the test point `x` and checks them by refitting.
pub fn export_attack(
    x: &[f64],
    dataset: &Dataset<f64>,
    delta: &PerturbationVector<f64>,
    lambda: f64,
    mode: AttackMode,
) -> Result<Attack> {
    let y = dataset.y().as_slice().expect("contiguous labels");
    check_binary(y)?;
    let old_prediction = predict(&solve_ridge(dataset, lambda)?, x)?;
    let poisoned = match mode {
        AttackMode::Minimal => {
            min_flips_classification(x, dataset, delta, lambda)?
                .ok_or(Error::NoAttackExists)?
                .witness
        }
        AttackMode::Count(k) => {
            let c = influence_matrix(dataset, lambda)?;
            let z = influence_vector(x, &c)?;
            let impacts = potential_impacts(&z, delta)?;
            let downward = class_of(old_prediction) == 1;
            let side = if downward { &impacts.rho_minus } else { &impacts.rho_plus };
            let available = side.iter().filter(|v| **v != 0.0).count();
            if available < k {
                return Err(Error::InsufficientImpact { requested: k, available });
            }
            let range = prediction_range(&z, y, &BiasSpec::new(delta.clone(), k)?)?;
            if downward {
                range.y_lower
            } else {
                range.y_upper
            }
        }
    };
    let flipped_rows: Vec<usize> = (0..y.len()).filter(|&i| poisoned[i] != y[i]).collect();
    let flips = flipped_rows.len();
    let refit = dataset.with_labels(poisoned.clone().into())?;
    let new_prediction = predict(&solve_ridge(&refit, lambda)?, x)?;
    let within_bias_set = contains(&BiasSpec::new(delta.clone(), flips)?, y, &poisoned)?;
    Ok(Attack {
        summary: AttackSummary {
            mode,
            lambda,
            flips,
            flipped_rows,
            old_prediction,
            new_prediction,
            old_class: class_of(old_prediction),
            new_class: class_of(new_prediction),
            decision_changed: class_of(old_prediction) != class_of(new_prediction),
            within_bias_set,
        },
        poisoned,
    })
}

/// CSV with columns `row,original,poisoned,flipped`.
pub fn write_poisoned_labels<W: Write>(writer: W, original: &[f64], attack: &Attack) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["row", "original", "poisoned", "flipped"])?;
    for (i, (o, p)) in original.iter().zip(&attack.poisoned).enumerate() {
        w.write_record(&[i.to_string(), o.to_string(), p.to_string(), u8::from(o != p).to_string()])?;
    }
    w.flush()?;
    Ok(())
}
