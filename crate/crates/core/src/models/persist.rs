//! Versioned JSON model files.
//!
//! ```json
//! { "format": "csrminer-model", "version": 1, "kind": "CART",
//!   "class": "Met 1", "scaling_hash": "…", "model": { "kind": "cart", … } }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TrainedModel;
use crate::dataset::ScalingParams;
use crate::error::{Error, Result};

pub const FORMAT: &str = "csrminer-model";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    /// Report name of the model kind.
    pub kind: String,
    /// Target class the model was trained to recognise.
    pub class: Option<String>,
    /// Hash of the scaling parameters the inputs must be prepared with.
    pub scaling_hash: Option<String>,
    pub model: TrainedModel,
}

/// Stable SHA-256 of the scaling parameters' JSON form.
pub fn scaling_hash(params: &ScalingParams) -> String {
    let json = serde_json::to_vec(params).expect("scaling params serialize");
    hex::encode(Sha256::digest(&json))
}

impl ModelFile {
    pub fn new(
        model: TrainedModel,
        class: Option<String>,
        scaling: Option<&ScalingParams>,
    ) -> Self {
        Self {
            format: FORMAT.into(),
            version: VERSION,
            kind: model.kind().name().into(),
            class,
            scaling_hash: scaling.map(scaling_hash),
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != FORMAT {
            return Err(Error::ModelFormat(format!(
                "unknown format `{}`",
                file.format
            )));
        }
        if file.version != VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {} (expected {VERSION})",
                file.version
            )));
        }
        if file.kind != file.model.kind().name() {
            return Err(Error::ModelFormat(format!(
                "kind tag `{}` does not match the stored {} model",
                file.kind,
                file.model.kind()
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{train, ClassifierSpec, LabeledSet, ModelKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_kind_survives_a_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rows: Vec<[f64; 3]> = (0..40)
            .map(|_| std::array::from_fn(|_| rng.random()))
            .collect();
        let y: Vec<bool> = rows.iter().map(|r| r[0] + r[2] > 1.0).collect();
        let data = LabeledSet::from_rows(&rows, y);
        for kind in ModelKind::ALL {
            let spec = match ClassifierSpec::default_for(kind) {
                ClassifierSpec::Mlp(mut p) => {
                    p.hidden_neurons = 4;
                    p.epochs = 3;
                    ClassifierSpec::Mlp(p)
                }
                ClassifierSpec::Hybrid(mut p) => {
                    p.mlp.hidden_neurons = 4;
                    p.mlp.epochs = 3;
                    ClassifierSpec::Hybrid(p)
                }
                other => other,
            };
            let model = train(&spec, &data, None, 2).unwrap();
            let file = ModelFile::new(model.clone(), Some("Met 1".into()), None);
            let back = ModelFile::from_json(&file.to_json()).unwrap();
            assert_eq!(back.model.kind(), kind);
            for r in &rows {
                assert_eq!(
                    back.model.predict_score(r).unwrap(),
                    model.predict_score(r).unwrap()
                );
            }
        }
    }

    #[test]
    fn rejects_foreign_and_future_files() {
        let data = LabeledSet::from_rows(&[[0.0], [1.0]], vec![false, true]);
        let model = train(
            &ClassifierSpec::default_for(ModelKind::Linear),
            &data,
            None,
            0,
        )
        .unwrap();
        let mut file = ModelFile::new(model, None, None);
        file.version = 2;
        assert!(matches!(
            ModelFile::from_json(&file.to_json()),
            Err(Error::ModelFormat(_))
        ));
        file.version = VERSION;
        file.format = "other".into();
        assert!(matches!(
            ModelFile::from_json(&file.to_json()),
            Err(Error::ModelFormat(_))
        ));
        file.format = FORMAT.into();
        file.kind = "SVM".into();
        assert!(matches!(
            ModelFile::from_json(&file.to_json()),
            Err(Error::ModelFormat(_))
        ));
    }
}
