//! Probabilistic neural network: one Gaussian kernel per stored training case,
//! class densities averaged over each class's cases.
//!
//! Densities are compared in log space so tiny bandwidths degrade gracefully
//! into nearest-neighbour behaviour instead of underflowing to 0/0.

use serde::{Deserialize, Serialize};

use super::{sigmoid, LabeledSet, TrainingInfo};
use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PnnParams {
    /// Kernel bandwidth in scaled feature units.
    pub sigma: f64,
}

impl Default for PnnParams {
    fn default() -> Self {
        Self { sigma: 0.1 }
    }
}

impl PnnParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidHyperparameter {
                name: "sigma",
                reason: format!("{} must be positive", self.sigma),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PnnModel {
    pub sigma: f64,
    /// Pattern layer: one neuron per training case.
    pub cases: FeatureMatrix,
    pub labels: Vec<bool>,
    pub info: TrainingInfo,
}

pub fn train_pnn(train: &LabeledSet, params: &PnnParams) -> Result<PnnModel> {
    params.validate()?;
    train.require_both_labels(2)?;
    Ok(PnnModel {
        sigma: params.sigma,
        cases: train.x.clone(),
        labels: train.y.clone(),
        info: TrainingInfo {
            iterations: 1,
            ..Default::default()
        },
    })
}

/// Running log-sum-exp accumulator.
#[derive(Clone, Copy)]
struct LogSum {
    max: f64,
    sum: f64,
    count: usize,
}

impl LogSum {
    fn new() -> Self {
        Self {
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.count += 1;
        if v > self.max {
            self.sum = self.sum * (self.max - v).exp() + 1.0;
            self.max = v;
        } else {
            self.sum += (v - self.max).exp();
        }
    }

    /// log of the mean of exp(values).
    fn log_mean(&self) -> f64 {
        if self.count == 0 {
            return f64::NEG_INFINITY;
        }
        self.max + self.sum.ln() - (self.count as f64).ln()
    }
}

impl PnnModel {
    pub fn hidden_layer_size(&self) -> usize {
        self.labels.len()
    }

    pub fn arity(&self) -> usize {
        self.cases.cols()
    }

    /// Log class densities `(wrong, correct)` at `x`.
    pub fn log_densities(&self, x: &[f64]) -> (f64, f64) {
        let inv = 1.0 / (2.0 * self.sigma * self.sigma);
        let mut acc = [LogSum::new(), LogSum::new()];
        for (case, &label) in self.cases.iter_rows().zip(&self.labels) {
            let d2: f64 = case.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            acc[usize::from(label)].push(-d2 * inv);
        }
        (acc[0].log_mean(), acc[1].log_mean())
    }

    /// Posterior of the target class under equal priors.
    pub fn score(&self, x: &[f64]) -> f64 {
        let (wrong, correct) = self.log_densities(x);
        if wrong == correct {
            return 0.5;
        }
        sigmoid(correct - wrong)
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        let (wrong, correct) = self.log_densities(x);
        correct > wrong
    }
}
