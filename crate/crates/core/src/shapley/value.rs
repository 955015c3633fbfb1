use super::{Backend, Coalition};
use crate::error::{Error, Result};
use crate::forest::ForestModel;

/// Expected class-1 vote fraction when only the features in a coalition
/// are known.
pub trait ValueFunction {
    fn feature_count(&self) -> usize;
    fn value(&self, coalition: Coalition, x: &[f64]) -> Result<f64>;
    fn backend(&self) -> Backend;
}

/// Single-model value function marginalizing absent features over a fully
/// enumerated background set.
#[derive(Debug, Clone)]
pub struct Interventional<'a> {
    model: &'a ForestModel,
    background: &'a [Vec<f64>],
}

impl<'a> Interventional<'a> {
    pub fn new(model: &'a ForestModel, background: &'a [Vec<f64>]) -> Result<Self> {
        if background.is_empty() {
            return Err(Error::Empty("background set"));
        }
        if let Some(row) = background.iter().find(|r| r.len() != model.feature_count()) {
            return Err(Error::FeatureMismatch {
                expected: model.feature_count(),
                actual: row.len(),
            });
        }
        Ok(Interventional { model, background })
    }
}

impl ValueFunction for Interventional<'_> {
    fn feature_count(&self) -> usize {
        self.model.feature_count()
    }

    fn value(&self, coalition: Coalition, x: &[f64]) -> Result<f64> {
        let m = self.feature_count();
        if x.len() != m {
            return Err(Error::FeatureMismatch {
                expected: m,
                actual: x.len(),
            });
        }
        if coalition == Coalition::full(m) {
            return Ok(self.model.score_unchecked(x));
        }
        // Integer vote totals and one division: identical hybrids give
        // bit-identical values, so dummy features get exactly zero.
        let mut hybrid = vec![0.0; m];
        let votes: u64 = self
            .background
            .iter()
            .map(|row| {
                for (j, h) in hybrid.iter_mut().enumerate() {
                    *h = if coalition.contains(j) { x[j] } else { row[j] };
                }
                self.model.votes_class1(&hybrid) as u64
            })
            .sum();
        let draws = self.background.len() as u64 * self.model.trees().len() as u64;
        Ok(votes as f64 / draws as f64)
    }

    fn backend(&self) -> Backend {
        Backend::Interventional
    }
}

/// Mean class-1 vote fraction over hybrids that take the coalition's
/// features from `x` and the rest from each background row.
pub fn value_interventional(
    model: &ForestModel,
    x: &[f64],
    coalition: Coalition,
    background: &[Vec<f64>],
) -> Result<f64> {
    Interventional::new(model, background)?.value(coalition, x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::{Hyperparameters, TreeNode};

    fn theta_stump() -> ForestModel {
        // Two features, split only on feature 1 at 50.
        let tree = TreeNode::Split {
            feature: 1,
            threshold: 50.0,
            left: Box::new(TreeNode::Leaf {
                class_counts: [4, 0],
            }),
            right: Box::new(TreeNode::Leaf {
                class_counts: [0, 4],
            }),
        };
        ForestModel::from_trees(
            vec!["acoustic".into(), "theta_auc".into()],
            Hyperparameters::default(),
            0,
            vec![tree],
        )
        .unwrap()
    }

    #[test]
    fn full_and_empty_coalitions() {
        let model = theta_stump();
        let bg = vec![vec![0.0, 10.0], vec![1.0, 90.0], vec![2.0, 95.0]];
        let x = [5.0, 20.0];
        let full = Coalition::full(2);
        assert_eq!(value_interventional(&model, &x, full, &bg).unwrap(), 0.0);
        let other_bg = vec![vec![9.0, 99.0]];
        assert_eq!(
            value_interventional(&model, &x, full, &other_bg).unwrap(),
            0.0
        );
        let empty = value_interventional(&model, &x, Coalition::EMPTY, &bg).unwrap();
        assert_eq!(empty, 2.0 / 3.0);
        assert_eq!(
            value_interventional(&model, &[100.0, 100.0], Coalition::EMPTY, &bg).unwrap(),
            empty
        );
    }

    #[test]
    fn stump_hybrids_by_hand() {
        let model = theta_stump();
        // Background straddles the threshold on theta.
        let bg = vec![vec![0.0, 10.0], vec![1.0, 90.0]];
        let x = [7.0, 80.0];
        let theta_only = Coalition::EMPTY.with(1);
        // Hybrids (0, 80) and (1, 80) both go right: votes 1 and 1.
        assert_eq!(
            value_interventional(&model, &x, theta_only, &bg).unwrap(),
            1.0
        );
        // Hybrids (7, 10) and (7, 90): votes 0 and 1.
        let acoustic_only = Coalition::EMPTY.with(0);
        assert_eq!(
            value_interventional(&model, &x, acoustic_only, &bg).unwrap(),
            0.5
        );
    }

    #[test]
    fn stump_attributes_everything_to_its_feature() {
        let model = theta_stump();
        let bg = vec![vec![0.0, 10.0], vec![1.0, 90.0], vec![3.0, 40.0]];
        let v = Interventional::new(&model, &bg).unwrap();
        let x = [7.0, 80.0];
        let e = super::super::explain(&v, &x).unwrap();
        let full = v.value(Coalition::full(2), &x).unwrap();
        let empty = v.value(Coalition::EMPTY, &x).unwrap();
        assert_eq!(e.phi[0], 0.0);
        assert!((e.phi[1] - (full - empty)).abs() < 1e-15);
    }

    #[test]
    fn empty_background_rejected() {
        let model = theta_stump();
        assert!(matches!(
            value_interventional(&model, &[0.0, 0.0], Coalition::EMPTY, &[]),
            Err(Error::Empty(_))
        ));
    }
}
