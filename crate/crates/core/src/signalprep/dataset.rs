use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;

/// Feature rows paired with binary wear labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    feature_names: Vec<String>,
    features: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(feature_names: Vec<String>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::InvalidParameter(
                "a dataset needs at least one feature".into(),
            ));
        }
        Ok(LabeledDataset {
            feature_names,
            features: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn from_rows(
        feature_names: Vec<String>,
        features: Vec<Vec<f64>>,
        labels: Vec<u8>,
    ) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::LengthMismatch {
                what: "feature rows and labels",
                left: features.len(),
                right: labels.len(),
            });
        }
        let mut ds = LabeledDataset::new(feature_names)?;
        for (row, label) in features.into_iter().zip(labels) {
            ds.push(row, label)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, row: Vec<f64>, label: u8) -> Result<()> {
        if row.len() != self.feature_count() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_count(),
                actual: row.len(),
            });
        }
        if label > 1 {
            return Err(Error::InvalidLabel(label));
        }
        self.features.push(row);
        self.labels.push(label);
        Ok(())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// Row counts per class, `[unworn, worn]`.
    pub fn class_counts(&self) -> [usize; 2] {
        let worn = self.labels.iter().filter(|&&l| l == 1).count();
        [self.len() - worn, worn]
    }

    /// Fraction of rows labeled 1.
    pub fn prevalence(&self) -> f64 {
        self.class_counts()[1] as f64 / self.len() as f64
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledDataset {
        LabeledDataset {
            feature_names: self.feature_names.clone(),
            features: indices.iter().map(|&i| self.features[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Keeps only the listed feature columns, in the given order.
    pub fn select_features(&self, columns: &[usize]) -> Result<LabeledDataset> {
        if let Some(&bad) = columns.iter().find(|&&c| c >= self.feature_count()) {
            return Err(Error::FeatureMismatch {
                expected: self.feature_count(),
                actual: bad + 1,
            });
        }
        Ok(LabeledDataset {
            feature_names: columns
                .iter()
                .map(|&c| self.feature_names[c].clone())
                .collect(),
            features: self
                .features
                .iter()
                .map(|row| columns.iter().map(|&c| row[c]).collect())
                .collect(),
            labels: self.labels.clone(),
        })
    }
}

/// A stratified train/test partition together with the source row indices
/// of each side.
#[derive(Debug, Clone)]
pub struct SplitDataset {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub train_fraction: f64,
}

/// Row membership of a split, persisted so the partition can be replayed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub train_fraction: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitDataset {
    pub fn record(&self) -> SplitRecord {
        SplitRecord {
            seed: self.seed,
            train_fraction: self.train_fraction,
            train: self.train_indices.clone(),
            test: self.test_indices.clone(),
        }
    }

    /// Rebuilds a split from a persisted record.
    pub fn from_record(dataset: &LabeledDataset, record: &SplitRecord) -> Result<Self> {
        let n = dataset.len();
        let mut seen = vec![false; n];
        for &i in record.train.iter().chain(&record.test) {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "split record row {i} is out of range or duplicated for a dataset of {n} rows"
                )));
            }
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidParameter(
                "split record does not cover every dataset row".into(),
            ));
        }
        Ok(SplitDataset {
            train: dataset.subset(&record.train),
            test: dataset.subset(&record.test),
            train_indices: record.train.clone(),
            test_indices: record.test.clone(),
            seed: record.seed,
            train_fraction: record.train_fraction,
        })
    }
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

/// Stratified, seeded train/test split. The training side receives
/// `round(train_fraction * N)` rows (half rounds up); each class contributes
/// its proportional share, with leftover rows going to the classes with the
/// largest fractional remainders.
pub fn split(dataset: &LabeledDataset, train_fraction: f64, seed: u64) -> Result<SplitDataset> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if dataset.len() < 2 {
        return Err(Error::Empty("split needs at least two rows"));
    }
    let counts = dataset.class_counts();
    if let Some(class) = counts.iter().position(|&c| c == 0) {
        return Err(Error::SingleClass {
            class: 1 - class as u8,
        });
    }

    let n_train = round_half_up(train_fraction * dataset.len() as f64);
    let quotas: Vec<f64> = counts.iter().map(|&c| train_fraction * c as f64).collect();
    let mut per_class: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    let mut leftover = n_train.saturating_sub(per_class.iter().sum());
    for &class in order.iter().cycle().take(4) {
        if leftover == 0 {
            break;
        }
        if per_class[class] < counts[class] {
            per_class[class] += 1;
            leftover -= 1;
        }
    }

    let mut train_indices = Vec::with_capacity(n_train);
    let mut test_indices = Vec::with_capacity(dataset.len() - n_train);
    for class in 0..2u8 {
        let mut members: Vec<usize> = (0..dataset.len())
            .filter(|&i| dataset.labels()[i] == class)
            .collect();
        members.shuffle(&mut substream(seed, class as u64));
        let take = per_class[class as usize];
        train_indices.extend_from_slice(&members[..take]);
        test_indices.extend_from_slice(&members[take..]);
    }
    train_indices.sort_unstable();
    test_indices.sort_unstable();

    Ok(SplitDataset {
        train: dataset.subset(&train_indices),
        test: dataset.subset(&test_indices),
        train_indices,
        test_indices,
        seed,
        train_fraction,
    })
}
