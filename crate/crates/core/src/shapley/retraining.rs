use rayon::prelude::*;

use super::{check_feature_count, Backend, Coalition, ValueFunction};
use crate::error::{Error, Result};
use crate::forest::{self, ForestModel, Hyperparameters};
use crate::rng::derive_seed;
use crate::signalprep::LabeledDataset;

/// Model trained on one feature subset.
#[derive(Debug, Clone, PartialEq)]
pub enum SubsetModel {
    /// The empty subset: training-set prevalence of class 1.
    Prevalence(f64),
    Forest {
        /// Source feature indices, ascending; the model sees them in this order.
        columns: Vec<usize>,
        model: ForestModel,
    },
}

impl SubsetModel {
    fn score(&self, x: &[f64]) -> f64 {
        match self {
            SubsetModel::Prevalence(p) => *p,
            SubsetModel::Forest { columns, model } => {
                let restricted: Vec<f64> = columns.iter().map(|&c| x[c]).collect();
                model.score_unchecked(&restricted)
            }
        }
    }
}

/// One model per coalition mask, indexed by mask.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetModelTable {
    feature_count: usize,
    entries: Vec<Option<SubsetModel>>,
}

impl SubsetModelTable {
    pub fn from_entries(feature_count: usize, entries: Vec<Option<SubsetModel>>) -> Result<Self> {
        check_feature_count(feature_count)?;
        if entries.len() != 1 << feature_count {
            return Err(Error::LengthMismatch {
                what: "subset-model entries and 2^M",
                left: entries.len(),
                right: 1 << feature_count,
            });
        }
        Ok(SubsetModelTable {
            feature_count,
            entries,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, coalition: Coalition) -> Option<&SubsetModel> {
        self.entries
            .get(coalition.0 as usize)
            .and_then(Option::as_ref)
    }
}

impl ValueFunction for SubsetModelTable {
    fn feature_count(&self) -> usize {
        self.feature_count
    }

    fn value(&self, coalition: Coalition, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::FeatureMismatch {
                expected: self.feature_count,
                actual: x.len(),
            });
        }
        self.get(coalition)
            .map(|m| m.score(x))
            .ok_or(Error::MissingSubsetModel(coalition.0))
    }

    fn backend(&self) -> Backend {
        Backend::Retraining
    }
}

/// Class-1 vote fraction of the coalition's own model on `x` restricted to
/// the coalition's features.
pub fn value_retraining(table: &SubsetModelTable, x: &[f64], coalition: Coalition) -> Result<f64> {
    table.value(coalition, x)
}

/// Trains a forest for every non-empty feature subset on the matching
/// columns of `train_set`, seeding each from `(seed, mask)`.
pub fn train_subset_models(
    train_set: &LabeledDataset,
    params: &Hyperparameters,
    seed: u64,
) -> Result<SubsetModelTable> {
    let m = train_set.feature_count();
    check_feature_count(m)?;
    if train_set.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let prevalence = train_set.prevalence();

    let forests = (1..1u32 << m)
        .into_par_iter()
        .map(|mask| {
            let columns: Vec<usize> = Coalition(mask).members().collect();
            let data = train_set.select_features(&columns)?;
            let mut sub_params = params.clone();
            sub_params.features_per_split = params.features_per_split.map(|k| k.min(columns.len()));
            let model = forest::train(&data, &sub_params, derive_seed(seed, mask as u64))?;
            Ok(Some(SubsetModel::Forest { columns, model }))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut entries = Vec::with_capacity(1 << m);
    entries.push(Some(SubsetModel::Prevalence(prevalence)));
    entries.extend(forests);
    SubsetModelTable::from_entries(m, entries)
}
