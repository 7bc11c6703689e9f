//! The classifier families, trained one-vs-rest on binary correct/wrong labels.
//!
//! Every family follows the same contract: [`train`] takes a training set, an
//! optional selection set (used by the network trainers to keep their best
//! weights) and a seed, and returns an immutable [`TrainedModel`] whose
//! [`TrainedModel::predict_score`] / [`TrainedModel::predict`] are
//! deterministic.

pub mod cart;
pub mod hybrid;
pub mod linear;
pub mod mlp;
pub mod persist;
pub mod pnn;
pub mod svm;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use cart::{CartModel, CartParams, TreeNode};
pub use hybrid::{HybridModel, HybridParams};
pub use linear::{LinearModel, LinearParams};
pub use mlp::{MlpModel, MlpParams, Phase2};
pub use pnn::{PnnModel, PnnParams};
pub use svm::{SvmModel, SvmParams};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;

/// A binary training or evaluation set. `true` marks the target ("correct")
/// class, `false` all other classes ("wrong").
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    pub x: FeatureMatrix,
    pub y: Vec<bool>,
}

impl LabeledSet {
    pub fn new(x: FeatureMatrix, y: Vec<bool>) -> Self {
        assert_eq!(x.rows(), y.len(), "one label per row");
        Self { x, y }
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], y: Vec<bool>) -> Self {
        Self::new(FeatureMatrix::from_rows(rows), y)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.x.cols()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_rows(indices),
            y: indices.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn without_column(&self, col: usize) -> Self {
        Self {
            x: self.x.without_column(col),
            y: self.y.clone(),
        }
    }

    pub fn positives(&self) -> usize {
        self.y.iter().filter(|&&b| b).count()
    }

    pub(crate) fn require_both_labels(&self, min_len: usize) -> Result<()> {
        let pos = self.positives();
        if self.len() < min_len || pos == 0 || pos == self.len() {
            return Err(Error::InsufficientData(format!(
                "at least {min_len} records with both labels present ({} records, {pos} positive)",
                self.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ModelKind {
    Linear,
    MlpBp,
    MlpBpCg,
    Pnn,
    Cart,
    Hybrid,
    Svm,
}

impl ModelKind {
    /// Report column order.
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Linear,
        ModelKind::MlpBp,
        ModelKind::MlpBpCg,
        ModelKind::Pnn,
        ModelKind::Cart,
        ModelKind::Hybrid,
        ModelKind::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "Linear",
            ModelKind::MlpBp => "BP",
            ModelKind::MlpBpCg => "BP/CG",
            ModelKind::Pnn => "PNN",
            ModelKind::Cart => "CART",
            ModelKind::Hybrid => "Hybrid",
            ModelKind::Svm => "SVM",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        Some(match key.as_str() {
            "linear" | "lnn" => ModelKind::Linear,
            "bp" | "mlp" | "mlpbp" => ModelKind::MlpBp,
            "bpcg" | "mlpbpcg" | "cg" => ModelKind::MlpBpCg,
            "pnn" => ModelKind::Pnn,
            "cart" => ModelKind::Cart,
            "hybrid" => ModelKind::Hybrid,
            "svm" => ModelKind::Svm,
            _ => return None,
        })
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A model family plus its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassifierSpec {
    Linear(LinearParams),
    Mlp(MlpParams),
    Pnn(PnnParams),
    Cart(CartParams),
    Svm(SvmParams),
    Hybrid(HybridParams),
}

impl ClassifierSpec {
    /// Defaults for a kind.
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Linear => ClassifierSpec::Linear(LinearParams::default()),
            ModelKind::MlpBp => ClassifierSpec::Mlp(MlpParams::default()),
            ModelKind::MlpBpCg => ClassifierSpec::Mlp(MlpParams {
                phase2: Phase2::ConjugateGradient,
                ..MlpParams::default()
            }),
            ModelKind::Pnn => ClassifierSpec::Pnn(PnnParams::default()),
            ModelKind::Cart => ClassifierSpec::Cart(CartParams::default()),
            ModelKind::Hybrid => ClassifierSpec::Hybrid(HybridParams::default()),
            ModelKind::Svm => ClassifierSpec::Svm(SvmParams::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClassifierSpec::Linear(_) => ModelKind::Linear,
            ClassifierSpec::Mlp(p) => match p.phase2 {
                Phase2::None => ModelKind::MlpBp,
                Phase2::ConjugateGradient => ModelKind::MlpBpCg,
            },
            ClassifierSpec::Pnn(_) => ModelKind::Pnn,
            ClassifierSpec::Cart(_) => ModelKind::Cart,
            ClassifierSpec::Svm(_) => ModelKind::Svm,
            ClassifierSpec::Hybrid(_) => ModelKind::Hybrid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ClassifierSpec::Linear(_) => Ok(()),
            ClassifierSpec::Mlp(p) => p.validate(),
            ClassifierSpec::Pnn(p) => p.validate(),
            ClassifierSpec::Cart(p) => p.validate(),
            ClassifierSpec::Svm(p) => p.validate(),
            ClassifierSpec::Hybrid(p) => p.validate(),
        }
    }
}

/// Facts about a training run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// Epochs or optimizer iterations actually run.
    pub iterations: usize,
    /// Final training error in the trainer's own loss units.
    pub final_training_error: f64,
    /// Linear: the design matrix was rank deficient.
    pub degenerate_design: bool,
    /// SVM: iteration cap reached before the KKT conditions held.
    pub no_convergence: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TrainedModel {
    Linear(LinearModel),
    Mlp(MlpModel),
    Pnn(PnnModel),
    Cart(CartModel),
    Svm(SvmModel),
    Hybrid(HybridModel),
}

/// Trains `spec` on `train`. `selection`, when given and non-empty, picks the
/// best epoch for the network trainers; the other families ignore it.
pub fn train(
    spec: &ClassifierSpec,
    train: &LabeledSet,
    selection: Option<&LabeledSet>,
    seed: u64,
) -> Result<TrainedModel> {
    spec.validate()?;
    if let Some(sel) = selection {
        if !sel.is_empty() && sel.arity() != train.arity() {
            return Err(Error::ArityMismatch {
                expected: train.arity(),
                actual: sel.arity(),
            });
        }
    }
    Ok(match spec {
        ClassifierSpec::Linear(p) => TrainedModel::Linear(linear::train_linear(train, p)?),
        ClassifierSpec::Mlp(p) => TrainedModel::Mlp(mlp::train_mlp(train, selection, p, seed)?),
        ClassifierSpec::Pnn(p) => TrainedModel::Pnn(pnn::train_pnn(train, p)?),
        ClassifierSpec::Cart(p) => TrainedModel::Cart(cart::train_cart(train, p)?),
        ClassifierSpec::Svm(p) => TrainedModel::Svm(svm::train_svm(train, p)?),
        ClassifierSpec::Hybrid(p) => {
            TrainedModel::Hybrid(hybrid::train_hybrid(train, selection, p, seed)?)
        }
    })
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            TrainedModel::Linear(_) => ModelKind::Linear,
            TrainedModel::Mlp(m) => match m.phase2() {
                Phase2::None => ModelKind::MlpBp,
                Phase2::ConjugateGradient => ModelKind::MlpBpCg,
            },
            TrainedModel::Pnn(_) => ModelKind::Pnn,
            TrainedModel::Cart(_) => ModelKind::Cart,
            TrainedModel::Svm(_) => ModelKind::Svm,
            TrainedModel::Hybrid(_) => ModelKind::Hybrid,
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            TrainedModel::Linear(m) => m.arity(),
            TrainedModel::Mlp(m) => m.arity(),
            TrainedModel::Pnn(m) => m.arity(),
            TrainedModel::Cart(m) => m.arity(),
            TrainedModel::Svm(m) => m.arity(),
            TrainedModel::Hybrid(m) => m.arity(),
        }
    }

    pub fn info(&self) -> &TrainingInfo {
        match self {
            TrainedModel::Linear(m) => &m.info,
            TrainedModel::Mlp(m) => &m.info,
            TrainedModel::Pnn(m) => &m.info,
            TrainedModel::Cart(m) => &m.info,
            TrainedModel::Svm(m) => &m.info,
            TrainedModel::Hybrid(m) => &m.info,
        }
    }

    fn check_arity(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.arity() {
            return Err(Error::ArityMismatch {
                expected: self.arity(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    /// Raw model output: affine output (Linear), sigmoid output (MLP, Hybrid),
    /// posterior of the target class (PNN), leaf share of the target class
    /// (CART) or decision value (SVM).
    pub fn predict_score(&self, x: &[f64]) -> Result<f64> {
        self.check_arity(x)?;
        Ok(match self {
            TrainedModel::Linear(m) => m.score(x),
            TrainedModel::Mlp(m) => m.score(x),
            TrainedModel::Pnn(m) => m.score(x),
            TrainedModel::Cart(m) => m.score(x),
            TrainedModel::Svm(m) => m.decision(x),
            TrainedModel::Hybrid(m) => m.score(x),
        })
    }

    /// `true` = predicted member of the target class.
    pub fn predict(&self, x: &[f64]) -> Result<bool> {
        self.check_arity(x)?;
        Ok(match self {
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Mlp(m) => m.predict(x),
            TrainedModel::Pnn(m) => m.predict(x),
            TrainedModel::Cart(m) => m.predict(x),
            TrainedModel::Svm(m) => m.predict(x),
            TrainedModel::Hybrid(m) => m.predict(x),
        })
    }

    pub fn predict_all(&self, x: &FeatureMatrix) -> Result<Vec<bool>> {
        x.iter_rows().map(|r| self.predict(r)).collect()
    }

    /// CART leaf reached by `x`.
    pub fn leaf_id_of(&self, x: &[f64]) -> Result<usize> {
        match self {
            TrainedModel::Cart(m) => {
                self.check_arity(x)?;
                Ok(m.leaf_id_of(x))
            }
            other => Err(Error::WrongModelKind {
                expected: "CART",
                actual: other.kind().name(),
            }),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_parse_back() {
        for k in ModelKind::ALL {
            assert_eq!(ModelKind::parse(k.name()), Some(k));
            assert_eq!(ClassifierSpec::default_for(k).kind(), k);
        }
    }

    #[test]
    fn wrong_kind_and_arity_errors() {
        let data = LabeledSet::from_rows(&[[0.1], [0.9]], vec![false, true]);
        let m = train(
            &ClassifierSpec::Linear(LinearParams::default()),
            &data,
            None,
            0,
        )
        .unwrap();
        assert!(matches!(
            m.leaf_id_of(&[0.3]),
            Err(Error::WrongModelKind { .. })
        ));
        assert!(matches!(
            m.predict(&[0.3, 0.4]),
            Err(Error::ArityMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn spec_serializes_with_kind_tag() {
        let s = ClassifierSpec::default_for(ModelKind::MlpBpCg);
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.contains("\"kind\":\"mlp\""));
        let back: ClassifierSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
