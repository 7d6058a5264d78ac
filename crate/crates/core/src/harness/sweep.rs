use serde::{Deserialize, Serialize};

use super::config::{Method, Task};
use super::rates::{robustness_rate, Certifier};
use crate::bias::BiasSpec;
use crate::error::{Error, Result};
use crate::linalg::Dataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub lambda: f64,
    pub validation_accuracy: f64,
    /// Exact certified fraction of the validation rows at the reference cap.
    pub reference_rate: f64,
    pub admissible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub chosen: usize,
    pub best_accuracy: f64,
}

impl SweepResult {
    pub fn chosen_lambda(&self) -> f64 {
        self.entries[self.chosen].lambda
    }

    pub fn chosen_entry(&self) -> &SweepEntry {
        &self.entries[self.chosen]
    }
}

/// Picks λ: among grid values whose validation accuracy is within
/// `tolerance` of the best, the one certifying the most validation rows at
/// `spec`; ties go to the larger λ.
pub fn lambda_sweep(
    train: &Dataset<f64>,
    val: &Dataset<f64>,
    spec: &BiasSpec<f64>,
    lambdas: &[f64],
    tolerance: f64,
    task: Task,
    epsilon: Option<f64>,
) -> Result<SweepResult> {
    if lambdas.is_empty() {
        return Err(Error::EmptyGrid("lambda"));
    }
    let mut entries = lambdas
        .iter()
        .map(|&lambda| {
            let cert = Certifier::fit(train, lambda, task, epsilon)?;
            Ok(SweepEntry {
                lambda,
                validation_accuracy: cert.accuracy(val)?,
                reference_rate: robustness_rate(&cert, val, spec, Method::Exact)?.fraction,
                admissible: false,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best_accuracy = entries
        .iter()
        .map(|e| e.validation_accuracy)
        .fold(f64::NEG_INFINITY, f64::max);
    for e in &mut entries {
        e.admissible = e.validation_accuracy >= best_accuracy - tolerance;
    }
    let chosen = (0..entries.len())
        .filter(|&i| entries[i].admissible)
        .max_by(|&a, &b| {
            let (ea, eb) = (&entries[a], &entries[b]);
            ea.reference_rate
                .total_cmp(&eb.reference_rate)
                .then(ea.lambda.total_cmp(&eb.lambda))
        })
        .expect("the most accurate λ is always admissible");
    Ok(SweepResult {
        entries,
        chosen,
        best_accuracy,
    })
}
