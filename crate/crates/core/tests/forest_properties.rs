use num_rational::Ratio;
use proptest::prelude::*;

use toolwear_core::forest::{self, Hyperparameters, TreeNode};
use toolwear_core::signalprep::LabeledDataset;

fn dataset(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> LabeledDataset {
    let m = rows[0].len();
    LabeledDataset::from_rows((0..m).map(|j| format!("f{j}")).collect(), rows, labels).unwrap()
}

/// `sum over sides of (c0^2 + c1^2) / n`; larger means lower weighted Gini.
fn purity(sides: [[u64; 2]; 2]) -> Ratio<u64> {
    sides
        .iter()
        .map(|c| Ratio::new(c[0] * c[0] + c[1] * c[1], c[0] + c[1]))
        .sum()
}

/// Scans every midpoint between sorted unique values and returns the
/// lowest one with the best weighted Gini, or `None` if no split exists.
fn brute_force_stump(values: &[f64], labels: &[u8]) -> Option<f64> {
    let mut unique: Vec<f64> = values.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    if unique.len() < 2 {
        return None;
    }
    let mut best: Option<(Ratio<u64>, f64)> = None;
    for pair in unique.windows(2) {
        let t = (pair[0] + pair[1]) / 2.0;
        let mut sides = [[0u64; 2]; 2];
        for (&v, &l) in values.iter().zip(labels) {
            sides[usize::from(v > t)][l as usize] += 1;
        }
        let score = purity(sides);
        if best.is_none_or(|(b, _)| score > b) {
            best = Some((score, t));
        }
    }
    best.map(|(_, t)| t)
}

fn stump_params() -> Hyperparameters {
    Hyperparameters {
        tree_count: 1,
        max_depth: Some(1),
        min_samples_leaf: 1,
        features_per_split: Some(1),
        bootstrap: false,
    }
}

fn labeled_column() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec((0u32..12).prop_map(|v| v as f64 * 0.5), n),
            prop::collection::vec(0u8..=1, n),
        )
    })
}

proptest! {
    #[test]
    fn stump_matches_brute_force((values, labels) in labeled_column(), seed in any::<u64>()) {
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let rows = values.iter().map(|&v| vec![v]).collect();
        let model = forest::train(&dataset(rows, labels.clone()), &stump_params(), seed).unwrap();
        match (&model.trees()[0], brute_force_stump(&values, &labels)) {
            (TreeNode::Leaf { .. }, None) => {}
            (TreeNode::Split { feature, threshold, .. }, Some(t)) => {
                prop_assert_eq!(*feature, 0);
                // Same partition of the training values.
                for &v in &values {
                    prop_assert_eq!(v <= *threshold, v <= t);
                }
                prop_assert!((threshold - t).abs() <= 1e-9);
            }
            (tree, want) => prop_assert!(false, "tree {:?} vs brute force {:?}", tree, want),
        }
    }

    #[test]
    fn memorizes_distinct_rows(
        rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 3), 2..40),
        bits in any::<u64>(),
        trees in 1usize..4,
        seed in any::<u64>(),
    ) {
        let labels: Vec<u8> = (0..rows.len()).map(|i| ((bits >> (i % 64)) & 1) as u8).collect();
        prop_assume!(labels.contains(&0) && labels.contains(&1));
        let params = Hyperparameters {
            tree_count: trees,
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: Some(3),
            bootstrap: false,
        };
        let data = dataset(rows.clone(), labels.clone());
        let model = forest::train(&data, &params, seed).unwrap();
        for (row, &label) in rows.iter().zip(&labels) {
            prop_assert_eq!(model.predict(row).unwrap().label, label);
        }
    }

    #[test]
    fn votes_account_for_every_tree(
        rows in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 4..30),
        probe in prop::collection::vec(0.0f64..1.0, 4),
        seed in any::<u64>(),
    ) {
        let n = rows.len();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let params = Hyperparameters { tree_count: 9, ..Hyperparameters::default() };
        let model = forest::train(&dataset(rows, labels), &params, seed).unwrap();
        let p = model.predict(&probe).unwrap();
        let ones = model.trees().iter().filter(|t| t.vote(&probe) == 1).count();
        prop_assert_eq!(p.votes_class1, ones);
        prop_assert_eq!(p.votes_class0() + p.votes_class1, 9);
        prop_assert_eq!(p.vote_fraction_class1, ones as f64 / 9.0);
        prop_assert_eq!(p.label, u8::from(2 * ones > 9));
    }
}

#[test]
fn training_is_a_pure_function_of_inputs() {
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|i| vec![(i * 7 % 13) as f64, (i % 5) as f64])
        .collect();
    let labels: Vec<u8> = (0..40).map(|i| u8::from(i * 7 % 13 > 6)).collect();
    let data = dataset(rows, labels);
    let params = Hyperparameters::default();
    let a = forest::train(&data, &params, 5).unwrap();
    let b = forest::train(&data, &params, 5).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.trees(), forest::train(&data, &params, 6).unwrap().trees());
}
