//! Exact Shapley attribution by full coalition enumeration.
//!
//! For an instance `x` with `M` features, every coalition value `v(S, x)`
//! is evaluated once (`2^M` evaluations) and
//!
//! ```text
//! phi_i = sum_{S ⊆ N \ {i}} |S|! (M - |S| - 1)! / M! * (v(S ∪ {i}, x) - v(S, x))
//! ```
//!
//! Two value functions are provided: [`Interventional`], which averages a
//! single model over a background set with the absent features taken from
//! the background rows, and [`SubsetModelTable`], which holds one model per
//! feature subset trained on only those columns.

mod importance;
mod retraining;
mod value;

pub use importance::{global_importance, waterfall_order, GlobalImportance};
pub use retraining::{train_subset_models, value_retraining, SubsetModel, SubsetModelTable};
pub use value::{value_interventional, Interventional, ValueFunction};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest feature count accepted by the enumerating routines.
pub const MAX_FEATURES: usize = 16;

/// Tolerance for the efficiency check `phi_0 + sum(phi) == v(full)`.
pub const EFFICIENCY_TOLERANCE: f64 = 1e-9;

const FACTORIALS: [u64; MAX_FEATURES + 1] = {
    let mut f = [1u64; MAX_FEATURES + 1];
    let mut i = 1;
    while i <= MAX_FEATURES {
        f[i] = f[i - 1] * i as u64;
        i += 1;
    }
    f
};

/// Set of "present" features as a bitmask; bit `i` is feature `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Coalition(pub u32);

impl Coalition {
    pub const EMPTY: Coalition = Coalition(0);

    pub fn full(feature_count: usize) -> Coalition {
        Coalition(((1u64 << feature_count) - 1) as u32)
    }

    pub fn contains(self, feature: usize) -> bool {
        self.0 >> feature & 1 == 1
    }

    pub fn with(self, feature: usize) -> Coalition {
        Coalition(self.0 | 1 << feature)
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        (0..32).filter(move |&i| self.contains(i))
    }
}

pub(crate) fn check_feature_count(feature_count: usize) -> Result<()> {
    if feature_count == 0 {
        return Err(Error::InvalidParameter(
            "at least one feature is required".into(),
        ));
    }
    if feature_count > MAX_FEATURES {
        return Err(Error::TooManyFeatures {
            features: feature_count,
            cap: MAX_FEATURES,
        });
    }
    Ok(())
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `s! (M - 1 - s)! / M!` as a reduced fraction `(numerator, denominator)`.
pub fn shapley_weight_exact(feature_count: usize, size: usize) -> Result<(u64, u64)> {
    check_feature_count(feature_count)?;
    if size >= feature_count {
        return Err(Error::CoalitionSize {
            size,
            features: feature_count,
        });
    }
    let num = FACTORIALS[size] * FACTORIALS[feature_count - 1 - size];
    let den = FACTORIALS[feature_count];
    let g = gcd(num, den);
    Ok((num / g, den / g))
}

/// Shapley coalition weight for a coalition of `size` out of
/// `feature_count` features. Both factorial products are exact integers, so
/// the single division is correctly rounded.
pub fn shapley_weight(feature_count: usize, size: usize) -> Result<f64> {
    let (num, den) = shapley_weight_exact(feature_count, size)?;
    Ok(num as f64 / den as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Interventional,
    Retraining,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Backend::Interventional => "interventional",
            Backend::Retraining => "retraining",
        })
    }
}

impl std::str::FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interventional" => Ok(Backend::Interventional),
            "retraining" => Ok(Backend::Retraining),
            other => Err(Error::InvalidParameter(format!(
                "unknown Shapley backend `{other}` (expected interventional or retraining)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyExplanation {
    /// `v(∅)`, the output with no feature information.
    pub base_value: f64,
    pub phi: Vec<f64>,
    /// `v(full, x)`, the explained model output.
    pub explained_output: f64,
    pub target_class: u8,
    pub backend: Backend,
}

impl ShapleyExplanation {
    pub fn efficiency_gap(&self) -> f64 {
        (self.base_value + self.phi.iter().sum::<f64>() - self.explained_output).abs()
    }

    pub fn check_efficiency(&self) -> Result<()> {
        if self.efficiency_gap() <= EFFICIENCY_TOLERANCE {
            Ok(())
        } else {
            Err(Error::Efficiency {
                total: self.base_value + self.phi.iter().sum::<f64>(),
                output: self.explained_output,
            })
        }
    }
}

/// Evaluates every coalition once and returns `v` indexed by mask.
pub fn coalition_values<V: ValueFunction + ?Sized>(value_fn: &V, x: &[f64]) -> Result<Vec<f64>> {
    let m = value_fn.feature_count();
    check_feature_count(m)?;
    if x.len() != m {
        return Err(Error::FeatureMismatch {
            expected: m,
            actual: x.len(),
        });
    }
    (0..1u32 << m)
        .map(|mask| value_fn.value(Coalition(mask), x))
        .collect()
}

/// Shapley values from a complete table of coalition values.
pub fn shapley_from_values(values: &[f64], feature_count: usize) -> Result<Vec<f64>> {
    check_feature_count(feature_count)?;
    if values.len() != 1 << feature_count {
        return Err(Error::LengthMismatch {
            what: "coalition values and 2^M",
            left: values.len(),
            right: 1 << feature_count,
        });
    }
    let weights = (0..feature_count)
        .map(|s| shapley_weight(feature_count, s))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..feature_count)
        .map(|i| {
            let bit = 1u32 << i;
            (0..1u32 << feature_count)
                .filter(|mask| mask & bit == 0)
                .map(|mask| {
                    weights[mask.count_ones() as usize]
                        * (values[(mask | bit) as usize] - values[mask as usize])
                })
                .sum()
        })
        .collect())
}

/// Class-1 explanation of `x` under `value_fn`.
pub fn explain<V: ValueFunction + ?Sized>(value_fn: &V, x: &[f64]) -> Result<ShapleyExplanation> {
    let m = value_fn.feature_count();
    let values = coalition_values(value_fn, x)?;
    let phi = shapley_from_values(&values, m)?;
    Ok(ShapleyExplanation {
        base_value: values[0],
        phi,
        explained_output: values[Coalition::full(m).0 as usize],
        target_class: 1,
        backend: value_fn.backend(),
    })
}

/// Explains many instances in parallel; output order follows `rows`.
pub fn explain_batch<V, R>(value_fn: &V, rows: &[R]) -> Result<Vec<ShapleyExplanation>>
where
    V: ValueFunction + Sync + ?Sized,
    R: AsRef<[f64]> + Sync,
{
    rows.par_iter()
        .map(|r| explain(value_fn, r.as_ref()))
        .collect()
}

/// Re-expresses an explanation for `class`. The class-0 output is
/// `1 - class-1 output`, so attributions flip sign and the base value is
/// complemented. Converting back recovers the original up to rounding in
/// the complemented base value and output; `phi` round-trips exactly.
pub fn explain_class(expl: &ShapleyExplanation, class: u8) -> ShapleyExplanation {
    if class == expl.target_class {
        return expl.clone();
    }
    ShapleyExplanation {
        base_value: 1.0 - expl.base_value,
        phi: expl.phi.iter().map(|p| -p).collect(),
        explained_output: 1.0 - expl.explained_output,
        target_class: class,
        backend: expl.backend,
    }
}
