use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Hyperparameters;
use crate::signalprep::LabeledDataset;

/// Node of a binary classification tree. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        /// Training rows reaching this leaf, `[class 0, class 1]`.
        class_counts: [u32; 2],
    },
}

impl TreeNode {
    /// Majority class of the leaf reached by `x`; ties go to class 0.
    pub fn vote(&self, x: &[f64]) -> u8 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
                TreeNode::Leaf { class_counts } => {
                    return u8::from(class_counts[1] > class_counts[0]);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    /// Checks structural invariants against a feature count.
    pub fn validate(&self, feature_count: usize) -> Result<(), String> {
        match self {
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                if *feature >= feature_count {
                    return Err(format!(
                        "split on feature {feature} but the model has {feature_count}"
                    ));
                }
                if threshold.is_nan() {
                    return Err("NaN split threshold".into());
                }
                left.validate(feature_count)?;
                right.validate(feature_count)
            }
            TreeNode::Leaf { class_counts } => {
                if class_counts == &[0, 0] {
                    Err("leaf with no training rows".into())
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Weighted Gini score of a split, as an exact fraction
/// `(sum_L / n_L + sum_R / n_R)` where `sum` is the sum of squared class
/// counts. Larger is better; it is an affine image of the impurity decrease.
#[derive(Debug, Clone, Copy)]
struct SplitScore {
    num: u128,
    den: u128,
}

impl SplitScore {
    fn new(left: [u64; 2], right: [u64; 2]) -> Self {
        let n_l = (left[0] + left[1]) as u128;
        let n_r = (right[0] + right[1]) as u128;
        let sq = |c: [u64; 2]| (c[0] as u128).pow(2) + (c[1] as u128).pow(2);
        SplitScore {
            num: sq(left) * n_r + sq(right) * n_l,
            den: n_l * n_r,
        }
    }

    fn cmp(&self, other: &SplitScore) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: SplitScore,
    feature: usize,
    threshold: f64,
    /// Rows going left in the sorted order of `feature`.
    left_len: usize,
}

impl Candidate {
    /// Higher score wins; ties go to the lower feature index, then the
    /// lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        match self.score.cmp(&other.score) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => {
                (self.feature, self.threshold).partial_cmp(&(other.feature, other.threshold))
                    == Some(Ordering::Less)
            }
        }
    }
}

pub(crate) struct TreeBuilder<'a, R> {
    data: &'a LabeledDataset,
    params: &'a Hyperparameters,
    features_per_split: usize,
    rng: R,
}

impl<'a, R: Rng> TreeBuilder<'a, R> {
    pub(crate) fn new(
        data: &'a LabeledDataset,
        params: &'a Hyperparameters,
        features_per_split: usize,
        rng: R,
    ) -> Self {
        TreeBuilder {
            data,
            params,
            features_per_split,
            rng,
        }
    }

    pub(crate) fn build(mut self) -> TreeNode {
        let n = self.data.len();
        let rows: Vec<usize> = if self.params.bootstrap {
            (0..n).map(|_| self.rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        self.grow(rows, 0)
    }

    fn counts(&self, rows: &[usize]) -> [u64; 2] {
        let mut c = [0u64; 2];
        for &r in rows {
            c[self.data.labels()[r] as usize] += 1;
        }
        c
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> TreeNode {
        let counts = self.counts(&rows);
        let leaf = TreeNode::Leaf {
            class_counts: [counts[0] as u32, counts[1] as u32],
        };
        let min_leaf = self.params.min_samples_leaf;
        if counts[0] == 0
            || counts[1] == 0
            || self.params.max_depth.is_some_and(|d| depth >= d)
            || rows.len() < 2 * min_leaf
        {
            return leaf;
        }

        let Some((best, sorted)) = self.best_split(&rows) else {
            return leaf;
        };
        let (left, right) = sorted.split_at(best.left_len);
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            left: Box::new(self.grow(left.to_vec(), depth + 1)),
            right: Box::new(self.grow(right.to_vec(), depth + 1)),
        }
    }

    /// Visits features in random order until `features_per_split` of them
    /// have been found non-constant within the node.
    fn best_split(&mut self, rows: &[usize]) -> Option<(Candidate, Vec<usize>)> {
        let m = self.data.feature_count();
        let mut order: Vec<usize> = (0..m).collect();
        order.shuffle(&mut self.rng);

        let min_leaf = self.params.min_samples_leaf;
        let mut best: Option<(Candidate, Vec<usize>)> = None;
        let mut visited = 0;
        for feature in order {
            if visited == self.features_per_split {
                break;
            }
            let value = |r: usize| self.data.row(r)[feature];
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| value(a).total_cmp(&value(b)).then(a.cmp(&b)));
            if value(sorted[0]) == value(sorted[sorted.len() - 1]) {
                continue;
            }
            visited += 1;

            let total = self.counts(&sorted);
            let mut left = [0u64; 2];
            let mut feature_best: Option<Candidate> = None;
            for i in 0..sorted.len() - 1 {
                left[self.data.labels()[sorted[i]] as usize] += 1;
                let (lo, hi) = (value(sorted[i]), value(sorted[i + 1]));
                let left_len = i + 1;
                if lo == hi || left_len < min_leaf || sorted.len() - left_len < min_leaf {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let mid = lo + (hi - lo) / 2.0;
                let threshold = if mid < hi { mid } else { lo };
                let cand = Candidate {
                    score: SplitScore::new(left, right),
                    feature,
                    threshold,
                    left_len,
                };
                if feature_best.as_ref().is_none_or(|b| cand.beats(b)) {
                    feature_best = Some(cand);
                }
            }
            if let Some(cand) = feature_best {
                if best.as_ref().is_none_or(|(b, _)| cand.beats(b)) {
                    best = Some((cand, sorted));
                }
            }
        }
        best
    }
}
