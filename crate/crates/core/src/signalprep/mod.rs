//! Windowing and feature reduction of raw turning-process sensor runs.
//!
//! A run is cut into `k` equal, non-overlapping windows. Each window is
//! reduced to seven scalars: the population variance of the three
//! acceleration axes and both microphones, the trapezoidal area under the
//! temperature trace, and the spindle speed of the run.

mod dataset;
pub mod io;

pub use dataset::{split, LabeledDataset, SplitDataset, SplitRecord};

use crate::error::{Error, Result};

/// Number of windows each run is divided into.
pub const WINDOWS_PER_RUN: usize = 7;
/// Windows kept from a run flagged as the first worn incident at its speed.
pub const TRANSITION_KEEP: usize = 2;

/// Column names of the featurized dataset, in feature-index order.
pub const FEATURE_NAMES: [&str; 7] = [
    "ax_var",
    "ay_var",
    "az_var",
    "s1_var",
    "s2_var",
    "theta_auc",
    "rpm",
];

/// One time-stamped record of all sensor channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    /// Seconds since the start of the run.
    pub t: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub s1: f64,
    pub s2: f64,
    /// Tool temperature, degrees C.
    pub theta: f64,
}

/// A complete recording of one cut.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorRun {
    pub run_id: String,
    /// Spindle speed in rpm.
    pub spindle_speed: f64,
    pub samples: Vec<Sample>,
    /// 0 = unworn, 1 = worn.
    pub label: u8,
    pub first_worn_incident: bool,
}

impl SensorRun {
    /// Builds a run, checking its invariants.
    pub fn new(
        run_id: impl Into<String>,
        spindle_speed: f64,
        samples: Vec<Sample>,
        label: u8,
        first_worn_incident: bool,
    ) -> Result<Self> {
        let run = SensorRun {
            run_id: run_id.into(),
            spindle_speed,
            samples,
            label,
            first_worn_incident,
        };
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |reason: String| Error::InvalidRun {
            run_id: self.run_id.clone(),
            reason,
        };
        if self.samples.is_empty() {
            return Err(invalid("no samples".into()));
        }
        if !(self.spindle_speed > 0.0 && self.spindle_speed.is_finite()) {
            return Err(invalid(format!(
                "spindle speed must be positive, got {}",
                self.spindle_speed
            )));
        }
        if self.label > 1 {
            return Err(invalid(format!("label must be 0 or 1, got {}", self.label)));
        }
        if let Some(i) = self
            .samples
            .windows(2)
            .position(|w| w[1].t.is_nan() || w[1].t <= w[0].t)
        {
            return Err(invalid(format!(
                "timestamps not strictly increasing at sample {}",
                i + 1
            )));
        }
        Ok(())
    }
}

/// A contiguous window of a run. Label and speed come from the parent run.
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a> {
    pub run: &'a SensorRun,
    pub index: usize,
    pub samples: &'a [Sample],
}

/// Per-window feature tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub ax_var: f64,
    pub ay_var: f64,
    pub az_var: f64,
    pub s1_var: f64,
    pub s2_var: f64,
    /// Temperature integrated over the window, degree-C seconds.
    pub theta_auc: f64,
    /// Spindle speed, rpm.
    pub rpm: f64,
}

impl FeatureVector {
    pub fn to_array(&self) -> [f64; 7] {
        [
            self.ax_var,
            self.ay_var,
            self.az_var,
            self.s1_var,
            self.s2_var,
            self.theta_auc,
            self.rpm,
        ]
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let [ax_var, ay_var, az_var, s1_var, s2_var, theta_auc, rpm]: [f64; 7] =
            values.try_into().map_err(|_| Error::FeatureMismatch {
                expected: 7,
                actual: values.len(),
            })?;
        Ok(FeatureVector {
            ax_var,
            ay_var,
            az_var,
            s1_var,
            s2_var,
            theta_auc,
            rpm,
        })
    }
}

/// Splits `run` into `k` contiguous windows of `floor(N / k)` samples each.
/// The trailing `N mod k` samples are dropped.
pub fn window(run: &SensorRun, k: usize) -> Result<Vec<Segment<'_>>> {
    if k == 0 {
        return Err(Error::InvalidParameter("window count must be >= 1".into()));
    }
    let n = run.samples.len();
    if n < k {
        return Err(Error::TooFewSamples {
            run_id: run.run_id.clone(),
            available: n,
            required: k,
        });
    }
    let len = n / k;
    Ok(run.samples[..len * k]
        .chunks_exact(len)
        .enumerate()
        .map(|(index, samples)| Segment {
            run,
            index,
            samples,
        })
        .collect())
}

/// Keeps only the last two windows of a run flagged as the first worn
/// incident; the earlier ones may still reflect the unworn-to-worn
/// transition.
pub fn drop_transition_windows<'a>(
    segments: Vec<Segment<'a>>,
    run: &SensorRun,
) -> Vec<Segment<'a>> {
    if run.first_worn_incident {
        let skip = segments.len().saturating_sub(TRANSITION_KEEP);
        segments.into_iter().skip(skip).collect()
    } else {
        segments
    }
}

/// Population variance, `(1/N) * sum((v - mean)^2)`.
pub fn population_variance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Empty("variance of an empty series"));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(ss / n)
}

/// Trapezoidal integral of `values` over `timestamps`.
pub fn area_under_curve(timestamps: &[f64], values: &[f64]) -> Result<f64> {
    if timestamps.len() != values.len() {
        return Err(Error::LengthMismatch {
            what: "timestamps and values",
            left: timestamps.len(),
            right: values.len(),
        });
    }
    if timestamps.len() < 2 {
        return Err(Error::Empty("area under curve needs at least two points"));
    }
    let mut area = 0.0;
    for i in 0..timestamps.len() - 1 {
        let dt = timestamps[i + 1] - timestamps[i];
        if dt.is_nan() || dt <= 0.0 {
            return Err(Error::NonMonotoneTime { index: i + 1 });
        }
        area += 0.5 * (values[i] + values[i + 1]) * dt;
    }
    Ok(area)
}

/// Reduces one window to its feature tuple.
pub fn featurize(segment: &Segment<'_>) -> Result<FeatureVector> {
    let channel = |f: fn(&Sample) -> f64| segment.samples.iter().map(f).collect::<Vec<_>>();
    let t = channel(|s| s.t);
    let theta = channel(|s| s.theta);
    Ok(FeatureVector {
        ax_var: population_variance(&channel(|s| s.ax))?,
        ay_var: population_variance(&channel(|s| s.ay))?,
        az_var: population_variance(&channel(|s| s.az))?,
        s1_var: population_variance(&channel(|s| s.s1))?,
        s2_var: population_variance(&channel(|s| s.s2))?,
        theta_auc: area_under_curve(&t, &theta)?,
        rpm: segment.run.spindle_speed,
    })
}

/// Windows, trims and featurizes every run, producing one labeled row per
/// surviving window.
pub fn featurize_runs(runs: &[SensorRun]) -> Result<LabeledDataset> {
    let mut dataset = LabeledDataset::new(FEATURE_NAMES.iter().map(|s| s.to_string()).collect())?;
    for run in runs {
        run.validate()?;
        let segments = drop_transition_windows(window(run, WINDOWS_PER_RUN)?, run);
        for segment in &segments {
            let fv = featurize(segment)?;
            dataset.push(fv.to_array().to_vec(), run.label)?;
        }
    }
    Ok(dataset)
}
