use serde::{Deserialize, Serialize};

use super::{explain_class, ShapleyExplanation};
use crate::error::{Error, Result};

/// Mean absolute attribution per feature over a set of explanations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub feature_names: Vec<String>,
    /// `mean_abs_phi[class][feature]`.
    pub mean_abs_phi: [Vec<f64>; 2],
    /// Feature indices by descending class-1 mean |phi|, ties by index.
    pub ranking: Vec<usize>,
}

impl GlobalImportance {
    /// 1-based rank of each feature.
    pub fn rank_of(&self, feature: usize) -> usize {
        self.ranking
            .iter()
            .position(|&f| f == feature)
            .map_or(0, |p| p + 1)
    }
}

fn by_magnitude(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    order
}

/// Bar order for a waterfall chart: descending |phi|, ties by index.
pub fn waterfall_order(expl: &ShapleyExplanation) -> Vec<usize> {
    by_magnitude(&expl.phi)
}

pub fn global_importance(
    explanations: &[ShapleyExplanation],
    feature_names: &[String],
) -> Result<GlobalImportance> {
    let m = feature_names.len();
    if explanations.is_empty() {
        return Err(Error::Empty("no explanations to aggregate"));
    }
    if let Some(e) = explanations.iter().find(|e| e.phi.len() != m) {
        return Err(Error::FeatureMismatch {
            expected: m,
            actual: e.phi.len(),
        });
    }
    let n = explanations.len() as f64;
    let mean_abs = |class: u8| -> Vec<f64> {
        let mut sums = vec![0.0; m];
        for e in explanations {
            for (s, p) in sums.iter_mut().zip(&explain_class(e, class).phi) {
                *s += p.abs();
            }
        }
        sums.into_iter().map(|s| s / n).collect()
    };
    let class1 = mean_abs(1);
    Ok(GlobalImportance {
        feature_names: feature_names.to_vec(),
        ranking: by_magnitude(&class1),
        mean_abs_phi: [mean_abs(0), class1],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapley::Backend;
    use crate::signalprep::FEATURE_NAMES;

    fn expl(phi: Vec<f64>) -> ShapleyExplanation {
        ShapleyExplanation {
            base_value: 0.3,
            explained_output: 0.3 + phi.iter().sum::<f64>(),
            phi,
            target_class: 1,
            backend: Backend::Interventional,
        }
    }

    fn names() -> Vec<String> {
        FEATURE_NAMES.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_explanation_ranking() {
        let g =
            global_importance(&[expl(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0])], &names()).unwrap();
        assert_eq!(g.ranking[0], 5);
        assert_eq!(g.ranking[1..], [0, 1, 2, 3, 4, 6]);
        assert_eq!(g.rank_of(5), 1);
    }

    #[test]
    fn uses_absolute_values() {
        let a = expl(vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.3, 0.0]);
        let b = expl(vec![0.0, 0.0, 0.0, 0.0, 0.0, -0.3, 0.0]);
        let g = global_importance(&[a, b], &names()).unwrap();
        assert!((g.mean_abs_phi[1][5] - 0.3).abs() < 1e-15);
        assert_eq!(g.mean_abs_phi[0], g.mean_abs_phi[1]);
        let mut sorted = g.ranking.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn empty_input_rejected() {
        assert!(global_importance(&[], &names()).is_err());
        assert!(global_importance(&[expl(vec![0.1])], &names()).is_err());
    }

    #[test]
    fn waterfall_sorted_by_magnitude() {
        let e = expl(vec![0.1, -0.4, 0.4, 0.0]);
        assert_eq!(waterfall_order(&e), vec![1, 2, 0, 3]);
    }
}
