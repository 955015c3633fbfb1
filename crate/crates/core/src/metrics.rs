//! Confusion counts, ACC/TPR/FPR/MCC and ROC for binary wear predictions.
//!
//! The positive class is configurable. By default it is 0 (unworn): a true
//! positive is an unworn tool correctly reported as unworn.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_POSITIVE_CLASS: u8 = 0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// The same counts seen from the other class.
    pub fn swapped(&self) -> Self {
        ConfusionMatrix {
            tp: self.tn,
            fp: self.fn_,
            tn: self.tp,
            fn_: self.fp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    /// Percent.
    pub acc: f64,
    pub tpr: f64,
    pub fpr: f64,
    pub mcc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// `(fpr, tpr)` pairs from `(0, 0)` to `(1, 1)`.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

fn check_labels(labels: &[u8]) -> Result<()> {
    match labels.iter().find(|&&l| l > 1) {
        Some(&l) => Err(Error::InvalidLabel(l)),
        None => Ok(()),
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8], positive_class: u8) -> Result<ConfusionMatrix> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            what: "true and predicted labels",
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("no labels to compare"));
    }
    check_labels(&[positive_class])?;
    check_labels(y_true)?;
    check_labels(y_pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == positive_class, p == positive_class) {
            (true, true) => cm.tp += 1,
            (false, true) => cm.fp += 1,
            (false, false) => cm.tn += 1,
            (true, false) => cm.fn_ += 1,
        }
    }
    Ok(cm)
}

/// `100 (TP + TN) / total`, a single correctly rounded division.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Empty("confusion matrix has no observations"));
    }
    Ok((100 * (cm.tp + cm.tn)) as f64 / total as f64)
}

/// `(TP / (TP + FN), FP / (FP + TN))`.
pub fn tpr_fpr(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    if cm.tp + cm.fn_ == 0 {
        return Err(Error::EmptyClass {
            class: 0,
            rate: "the true positive rate",
        });
    }
    if cm.fp + cm.tn == 0 {
        return Err(Error::EmptyClass {
            class: 1,
            rate: "the false positive rate",
        });
    }
    Ok((
        cm.tp as f64 / (cm.tp + cm.fn_) as f64,
        cm.fp as f64 / (cm.fp + cm.tn) as f64,
    ))
}

/// Matthews correlation coefficient. Returns 0 when any marginal is empty.
pub fn mcc(cm: &ConfusionMatrix) -> Result<f64> {
    if cm.total() == 0 {
        return Err(Error::Empty("confusion matrix has no observations"));
    }
    let (tp, fp, tn, fn_) = (cm.tp as f64, cm.fp as f64, cm.tn as f64, cm.fn_ as f64);
    let den = (tp + fn_) * (tp + fp) * (tn + fn_) * (tn + fp);
    if den == 0.0 {
        return Ok(0.0);
    }
    let num = (cm.tp as i128 * cm.tn as i128 - cm.fp as i128 * cm.fn_ as i128) as f64;
    Ok((num / den.sqrt()).clamp(-1.0, 1.0))
}

pub fn metric_set(cm: &ConfusionMatrix) -> Result<MetricSet> {
    let (tpr, fpr) = tpr_fpr(cm)?;
    Ok(MetricSet {
        acc: accuracy(cm)?,
        tpr,
        fpr,
        mcc: mcc(cm)?,
    })
}

/// ROC of class-1 scores with respect to `positive_class`. When the
/// positive class is 0 the score is flipped to `1 - score`. Every distinct
/// score is used as a threshold (`score >= threshold` predicts positive);
/// the area is the trapezoidal integral over the resulting points.
pub fn roc(y_true: &[u8], scores: &[f64], positive_class: u8) -> Result<RocCurve> {
    if y_true.len() != scores.len() {
        return Err(Error::LengthMismatch {
            what: "labels and scores",
            left: y_true.len(),
            right: scores.len(),
        });
    }
    check_labels(y_true)?;
    check_labels(&[positive_class])?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let positives = y_true.iter().filter(|&&l| l == positive_class).count();
    let negatives = y_true.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass {
            class: if positives == 0 {
                1 - positive_class
            } else {
                positive_class
            },
        });
    }

    let mut ranked: Vec<(f64, bool)> = y_true
        .iter()
        .zip(scores)
        .map(|(&l, &s)| {
            let s = if positive_class == 1 { s } else { 1.0 - s };
            (s, l == positive_class)
        })
        .collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Lowering the threshold one distinct score at a time.
    let mut points = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < ranked.len() {
        let score = ranked[i].0;
        while i < ranked.len() && ranked[i].0 == score {
            if ranked[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    points.dedup();

    let auc = points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum();
    Ok(RocCurve { points, auc })
}
