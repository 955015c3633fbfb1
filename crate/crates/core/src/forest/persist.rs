//! Versioned JSON text format for trained forests.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ForestModel;
use crate::error::{Error, Result};
use crate::signalprep::io::ensure_parent;

pub const MODEL_FORMAT: &str = "toolwear-forest";
pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelDocument<M> {
    format: String,
    version: u32,
    model: M,
}

impl ForestModel {
    pub fn to_text(&self) -> String {
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            model: self,
        };
        let mut text =
            serde_json::to_string_pretty(&doc).expect("forest serialization is infallible");
        text.push('\n');
        text
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let doc: ModelDocument<ForestModel> =
            serde_json::from_str(text).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if doc.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "unknown format `{}`",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::ModelFormat(format!(
                "version {} is not supported (expected {MODEL_VERSION})",
                doc.version
            )));
        }
        doc.model.validate()?;
        Ok(doc.model)
    }
}

pub fn save_model(path: &Path, model: &ForestModel) -> Result<()> {
    ensure_parent(path)?;
    fs::write(path, model.to_text()).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<ForestModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ForestModel::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::super::{train, Hyperparameters};
    use super::*;
    use crate::signalprep::LabeledDataset;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn text_round_trip_is_exact(
            values in prop::collection::vec((-1e6f64..1e6, -1e-3f64..1e-3), 4..40),
            seed in any::<u64>(),
        ) {
            let rows: Vec<Vec<f64>> = values.iter().map(|&(a, b)| vec![a, b]).collect();
            let mut labels: Vec<u8> = values.iter().map(|&(a, b)| u8::from(a * b > 0.0)).collect();
            labels[0] = 0;
            labels[1] = 1;
            let ds = LabeledDataset::from_rows(vec!["a".into(), "b".into()], rows, labels).unwrap();
            let params = Hyperparameters { tree_count: 5, ..Hyperparameters::default() };
            let model = train(&ds, &params, seed).unwrap();
            let text = model.to_text();
            let back = ForestModel::from_text(&text).unwrap();
            prop_assert_eq!(&back, &model);
            prop_assert_eq!(back.to_text(), text);
        }
    }

    #[test]
    fn rejects_foreign_documents() {
        assert!(ForestModel::from_text("{}").is_err());
        let bad = r#"{"format":"other","version":1,"model":{}}"#;
        assert!(matches!(
            ForestModel::from_text(bad),
            Err(Error::ModelFormat(_))
        ));
        let ds =
            LabeledDataset::from_rows(vec!["x".into()], vec![vec![0.0], vec![1.0]], vec![0, 1])
                .unwrap();
        let text = train(&ds, &Hyperparameters::default(), 1)
            .unwrap()
            .to_text()
            .replace("\"version\": 1", "\"version\": 9");
        assert!(ForestModel::from_text(&text).is_err());
    }

    #[test]
    fn document_is_self_describing() {
        let ds =
            LabeledDataset::from_rows(vec!["x".into()], vec![vec![0.0], vec![1.0]], vec![0, 1])
                .unwrap();
        let params = Hyperparameters {
            tree_count: 1,
            bootstrap: false,
            ..Hyperparameters::default()
        };
        let text = train(&ds, &params, 1).unwrap().to_text();
        for key in [
            "\"format\": \"toolwear-forest\"",
            "\"feature_names\"",
            "\"threshold\"",
            "\"class_counts\"",
            "\"tree_count\"",
            "\"seed\"",
        ] {
            assert!(text.contains(key), "missing {key}");
        }
    }
}
