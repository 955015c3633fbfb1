//! Random-forest binary classifier.
//!
//! Each tree is grown with CART-style Gini splits on a bootstrap resample
//! of the training set, drawn from its own `(seed, tree_index)` random
//! substream. Trees vote for their leaf's majority class and the forest
//! reports the fraction of class-1 votes.

mod persist;
mod tree;

pub use persist::{load_model, save_model, MODEL_FORMAT, MODEL_VERSION};
pub use tree::TreeNode;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::signalprep::LabeledDataset;
use tree::TreeBuilder;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub tree_count: usize,
    /// `None` grows until purity or `min_samples_leaf`.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `floor(sqrt(M))`.
    pub features_per_split: Option<usize>,
    /// Resample the training set per tree. Off only for testing.
    pub bootstrap: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            tree_count: 100,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: None,
            bootstrap: true,
        }
    }
}

impl Hyperparameters {
    pub fn resolved_features_per_split(&self, feature_count: usize) -> usize {
        self.features_per_split
            .unwrap_or_else(|| ((feature_count as f64).sqrt().floor() as usize).max(1))
    }

    fn validate(&self, feature_count: usize) -> Result<()> {
        if self.tree_count == 0 {
            return Err(Error::InvalidParameter("tree_count must be >= 1".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter(
                "min_samples_leaf must be >= 1".into(),
            ));
        }
        let k = self.resolved_features_per_split(feature_count);
        if k == 0 || k > feature_count {
            return Err(Error::InvalidParameter(format!(
                "features_per_split must be in 1..={feature_count}, got {k}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: u8,
    pub vote_fraction_class1: f64,
    pub votes_class1: usize,
    pub tree_count: usize,
}

impl Prediction {
    pub fn votes_class0(&self) -> usize {
        self.tree_count - self.votes_class1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    feature_names: Vec<String>,
    hyperparameters: Hyperparameters,
    seed: u64,
    trees: Vec<TreeNode>,
}

impl ForestModel {
    /// Assembles a model from explicit trees.
    pub fn from_trees(
        feature_names: Vec<String>,
        hyperparameters: Hyperparameters,
        seed: u64,
        trees: Vec<TreeNode>,
    ) -> Result<Self> {
        let model = ForestModel {
            feature_names,
            hyperparameters,
            seed,
            trees,
        };
        model.validate()?;
        Ok(model)
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.feature_names.is_empty() {
            return Err(Error::ModelFormat("model has no features".into()));
        }
        if self.trees.is_empty() {
            return Err(Error::ModelFormat("model has no trees".into()));
        }
        for (i, t) in self.trees.iter().enumerate() {
            t.validate(self.feature_count())
                .map_err(|e| Error::ModelFormat(format!("tree {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn hyperparameters(&self) -> &Hyperparameters {
        &self.hyperparameters
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    fn check_dims(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_count() {
            return Err(Error::FeatureMismatch {
                expected: self.feature_count(),
                actual: x.len(),
            });
        }
        Ok(())
    }

    pub(crate) fn votes_class1(&self, x: &[f64]) -> usize {
        self.trees.iter().filter(|t| t.vote(x) == 1).count()
    }

    /// Class-1 vote fraction without the dimension check.
    pub(crate) fn score_unchecked(&self, x: &[f64]) -> f64 {
        self.votes_class1(x) as f64 / self.trees.len() as f64
    }

    pub fn vote_fraction(&self, x: &[f64]) -> Result<f64> {
        self.check_dims(x)?;
        Ok(self.score_unchecked(x))
    }

    /// Majority vote; a tie predicts class 0.
    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_dims(x)?;
        let votes_class1 = self.votes_class1(x);
        let tree_count = self.trees.len();
        Ok(Prediction {
            label: u8::from(2 * votes_class1 > tree_count),
            vote_fraction_class1: votes_class1 as f64 / tree_count as f64,
            votes_class1,
            tree_count,
        })
    }

    pub fn predict_batch<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<Prediction>> {
        rows.iter().map(|r| self.predict(r.as_ref())).collect()
    }
}

/// Trains a forest. The result depends only on the data, the
/// hyperparameters and the seed, not on thread scheduling.
pub fn train(data: &LabeledDataset, params: &Hyperparameters, seed: u64) -> Result<ForestModel> {
    if data.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let counts = data.class_counts();
    if let Some(missing) = counts.iter().position(|&c| c == 0) {
        return Err(Error::SingleClass {
            class: 1 - missing as u8,
        });
    }
    params.validate(data.feature_count())?;
    let k = params.resolved_features_per_split(data.feature_count());

    let trees = (0..params.tree_count)
        .into_par_iter()
        .map(|i| TreeBuilder::new(data, params, k, substream(seed, i as u64)).build())
        .collect();

    Ok(ForestModel {
        feature_names: data.feature_names().to_vec(),
        hyperparameters: params.clone(),
        seed,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn leaf(c0: u32, c1: u32) -> TreeNode {
        TreeNode::Leaf {
            class_counts: [c0, c1],
        }
    }

    fn forest_of(trees: Vec<TreeNode>) -> ForestModel {
        ForestModel::from_trees(vec!["x".into()], Hyperparameters::default(), 0, trees).unwrap()
    }

    fn no_bootstrap() -> Hyperparameters {
        Hyperparameters {
            tree_count: 1,
            bootstrap: false,
            ..Hyperparameters::default()
        }
    }

    #[test]
    fn single_leaf_prediction() {
        let p = forest_of(vec![leaf(0, 7)]).predict(&[0.0]).unwrap();
        assert_eq!(p.label, 1);
        assert_eq!(p.vote_fraction_class1, 1.0);
    }

    #[test]
    fn vote_counting() {
        let six = forest_of(
            (0..10)
                .map(|i| if i < 6 { leaf(0, 1) } else { leaf(1, 0) })
                .collect(),
        );
        let p = six.predict(&[0.0]).unwrap();
        assert_eq!((p.label, p.vote_fraction_class1), (1, 0.6));
        let five = forest_of(
            (0..10)
                .map(|i| if i < 5 { leaf(0, 1) } else { leaf(1, 0) })
                .collect(),
        );
        let p = five.predict(&[0.0]).unwrap();
        assert_eq!((p.label, p.vote_fraction_class1), (0, 0.5));
        assert_eq!(p.votes_class0() + p.votes_class1, 10);
    }

    #[test]
    fn batch_and_dimension_errors() {
        let f = forest_of(vec![leaf(1, 0)]);
        let empty: Vec<Vec<f64>> = vec![];
        assert!(f.predict_batch(&empty).unwrap().is_empty());
        assert_eq!(
            f.predict_batch(&[vec![1.0]]).unwrap(),
            vec![f.predict(&[1.0]).unwrap()]
        );
        assert!(matches!(
            f.predict(&[1.0, 2.0]),
            Err(Error::FeatureMismatch {
                expected: 1,
                actual: 2
            })
        ));
    }

    #[test]
    fn two_row_stump() {
        let ds =
            LabeledDataset::from_rows(vec!["x".into()], vec![vec![1.0], vec![3.0]], vec![0, 1])
                .unwrap();
        let params = Hyperparameters {
            max_depth: Some(1),
            ..no_bootstrap()
        };
        let model = train(&ds, &params, 3).unwrap();
        match &model.trees()[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => {
                assert_eq!((*feature, *threshold), (0, 2.0));
            }
            t => panic!("expected a stump, got {t:?}"),
        }
        let preds = model.predict_batch(ds.rows()).unwrap();
        assert_eq!(
            preds.iter().map(|p| p.label).collect::<Vec<_>>(),
            ds.labels()
        );
    }

    #[test]
    fn separable_set_is_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for _ in 0..80 {
            let noise: f64 = rng.random_range(0.0..1.0);
            let theta: f64 = rng.random_range(0.0..100.0);
            rows.push(vec![noise, theta]);
            labels.push(u8::from(theta > 55.0));
        }
        let ds = LabeledDataset::from_rows(vec!["noise".into(), "theta_auc".into()], rows, labels)
            .unwrap();
        let params = Hyperparameters {
            tree_count: 50,
            ..Hyperparameters::default()
        };
        let model = train(&ds, &params, 5).unwrap();
        let preds = model.predict_batch(ds.rows()).unwrap();
        let correct = preds
            .iter()
            .zip(ds.labels())
            .filter(|(p, &l)| p.label == l)
            .count();
        assert_eq!(correct, ds.len());
    }

    #[test]
    fn training_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rows: Vec<Vec<f64>> = (0..60)
            .map(|_| (0..4).map(|_| rng.random()).collect())
            .collect();
        let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] + r[1] > 1.0)).collect();
        let ds = LabeledDataset::from_rows((0..4).map(|i| format!("f{i}")).collect(), rows, labels)
            .unwrap();
        let params = Hyperparameters {
            tree_count: 20,
            ..Hyperparameters::default()
        };
        let a = train(&ds, &params, 17).unwrap();
        let b = train(&ds, &params, 17).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, train(&ds, &params, 18).unwrap());
    }

    #[test]
    fn rejects_bad_training_input() {
        let ds =
            LabeledDataset::from_rows(vec!["x".into()], vec![vec![1.0], vec![2.0]], vec![1, 1])
                .unwrap();
        assert!(matches!(
            train(&ds, &Hyperparameters::default(), 0),
            Err(Error::SingleClass { class: 1 })
        ));
        let empty = LabeledDataset::new(vec!["x".into()]).unwrap();
        assert!(train(&empty, &Hyperparameters::default(), 0).is_err());
        let ok =
            LabeledDataset::from_rows(vec!["x".into()], vec![vec![1.0], vec![2.0]], vec![0, 1])
                .unwrap();
        let zero = Hyperparameters {
            tree_count: 0,
            ..Hyperparameters::default()
        };
        assert!(train(&ok, &zero, 0).is_err());
    }

    #[test]
    fn default_candidate_count() {
        assert_eq!(Hyperparameters::default().resolved_features_per_split(7), 2);
        assert_eq!(Hyperparameters::default().resolved_features_per_split(1), 1);
    }
}
