//! Seeded synthetic sensor runs shaped like a small turning campaign.
//!
//! Runs are assigned spindle speeds round-robin. Within each speed group
//! the later runs are worn, and the first worn run of each group is flagged
//! as the first worn incident. Channels are Gaussian with class-dependent
//! scale. Temperature is a class-dependent linear ramp plus white noise, a
//! per-run shift and a slow random-walk drift; `overlap` scales the run-level
//! terms, and at zero the classes separate cleanly on temperature.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::substream;
use crate::signalprep::io::{write_manifest, write_run_samples, ManifestEntry};
use crate::signalprep::{Sample, SensorRun};

pub const PAPER_PROFILE: &str = include_str!("../profiles/paper.toml");
pub const PROFILE_NAMES: [&str; 1] = ["paper"];
pub const MANIFEST_FILE: &str = "manifest.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassSignal {
    /// Temperature at t = 0, degrees C.
    pub temperature_offset: f64,
    /// Degrees C per second.
    pub temperature_ramp: f64,
    pub temperature_noise: f64,
    pub acoustic_scale: f64,
    pub acceleration_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSpread {
    /// Std. dev. of a per-run temperature shift, degrees C.
    pub temperature_shift: f64,
    /// Random-walk temperature drift, degrees C per sqrt(second).
    pub temperature_wander: f64,
    /// Std. dev. of a per-run log-multiplier on the acoustic scale.
    pub acoustic_log_scale: f64,
    /// Std. dev. of a per-run log-multiplier on the acceleration scale.
    pub acceleration_log_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub version: u32,
    pub run_count: usize,
    pub samples_per_run: usize,
    pub spindle_speeds: Vec<f64>,
    pub worn_fraction: f64,
    /// Nominal seconds between samples.
    pub sample_period: f64,
    /// Relative jitter on each sampling interval, in `[0, 1)`.
    pub sample_jitter: f64,
    /// Multiplies every run-to-run spread; 0 makes the classes separable.
    pub overlap: f64,
    pub seed: u64,
    pub unworn: ClassSignal,
    pub worn: ClassSignal,
    pub spread: RunSpread,
}

/// A generated campaign: runs plus the manifest describing them.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub runs: Vec<SensorRun>,
    pub manifest: Vec<ManifestEntry>,
}

pub fn default_paper_profile() -> SynthConfig {
    SynthConfig::from_toml(PAPER_PROFILE).expect("built-in profile parses")
}

pub fn profile_by_name(name: &str) -> Result<SynthConfig> {
    match name {
        "paper" => Ok(default_paper_profile()),
        other => Err(Error::Config(format!(
            "unknown synth profile `{other}` (available: {})",
            PROFILE_NAMES.join(", ")
        ))),
    }
}

impl SynthConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: SynthConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.run_count < 2 {
            return bad(format!("run_count must be >= 2, got {}", self.run_count));
        }
        if self.samples_per_run < 2 {
            return bad("samples_per_run must be >= 2".into());
        }
        if self.spindle_speeds.is_empty()
            || self.spindle_speeds.iter().any(|&s| s.is_nan() || s <= 0.0)
        {
            return bad("spindle_speeds must be a non-empty list of positive values".into());
        }
        if !(self.worn_fraction > 0.0 && self.worn_fraction < 1.0) {
            return bad(format!(
                "worn_fraction must be in (0, 1), got {}",
                self.worn_fraction
            ));
        }
        if self.sample_period.is_nan() || self.sample_period <= 0.0 {
            return bad("sample_period must be positive".into());
        }
        if !(0.0..1.0).contains(&self.sample_jitter) {
            return bad("sample_jitter must be in [0, 1)".into());
        }
        if self.overlap.is_nan() || self.overlap < 0.0 {
            return bad("overlap must be >= 0".into());
        }
        for (name, c) in [("unworn", &self.unworn), ("worn", &self.worn)] {
            if !(c.temperature_noise > 0.0 && c.acoustic_scale > 0.0 && c.acceleration_scale > 0.0)
            {
                return bad(format!("{name}: all noise scales must be positive"));
            }
        }
        let s = &self.spread;
        if !(s.temperature_shift >= 0.0
            && s.temperature_wander >= 0.0
            && s.acoustic_log_scale >= 0.0
            && s.acceleration_log_scale >= 0.0)
        {
            return bad("spread values must be >= 0".into());
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// `(spindle speed, label, first worn incident)` for each run.
    pub fn run_plan(&self) -> Vec<(f64, u8, bool)> {
        let speeds = self.spindle_speeds.len();
        let mut plan: Vec<(f64, u8, bool)> = (0..self.run_count)
            .map(|i| (self.spindle_speeds[i % speeds], 0, false))
            .collect();
        for g in 0..speeds {
            let members: Vec<usize> = (g..self.run_count).step_by(speeds).collect();
            if members.is_empty() {
                continue;
            }
            let worn = ((self.worn_fraction * members.len() as f64).round() as usize)
                .clamp(1, members.len().saturating_sub(1).max(1));
            let first = members.len() - worn;
            for (k, &run) in members.iter().enumerate().skip(first) {
                plan[run].1 = 1;
                plan[run].2 = k == first;
            }
        }
        plan
    }
}

fn generate_run(
    config: &SynthConfig,
    index: usize,
    speed: f64,
    label: u8,
    first_worn: bool,
) -> SensorRun {
    let mut rng = substream(config.seed, index as u64);
    let class = if label == 1 {
        &config.worn
    } else {
        &config.unworn
    };
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let spread = &config.spread;

    let temp_shift = config.overlap * spread.temperature_shift * std_normal.sample(&mut rng);
    let acoustic = class.acoustic_scale
        * (config.overlap * spread.acoustic_log_scale * std_normal.sample(&mut rng)).exp();
    let accel = class.acceleration_scale
        * (config.overlap * spread.acceleration_log_scale * std_normal.sample(&mut rng)).exp();

    let wander = config.overlap * spread.temperature_wander;
    let mut drift = 0.0;
    let mut t = 0.0;
    let samples = (0..config.samples_per_run)
        .map(|j| {
            if j > 0 {
                let jitter = if config.sample_jitter > 0.0 {
                    rng.random_range(-config.sample_jitter..config.sample_jitter)
                } else {
                    0.0
                };
                let dt = config.sample_period * (1.0 + jitter);
                t += dt;
                drift += wander * dt.sqrt() * std_normal.sample(&mut rng);
            }
            let mut n = || std_normal.sample(&mut rng);
            Sample {
                t,
                ax: accel * n(),
                ay: accel * n(),
                az: 1.0 + accel * n(),
                s1: acoustic * n(),
                s2: acoustic * n(),
                theta: class.temperature_offset
                    + temp_shift
                    + drift
                    + class.temperature_ramp * t
                    + class.temperature_noise * n(),
            }
        })
        .collect();

    SensorRun {
        run_id: run_id(index),
        spindle_speed: speed,
        samples,
        label,
        first_worn_incident: first_worn,
    }
}

fn run_id(index: usize) -> String {
    format!("run_{:02}", index + 1)
}

/// Generates the corpus. Each run draws from its own `(seed, run index)`
/// substream, so the output does not depend on thread scheduling.
pub fn generate(config: &SynthConfig) -> Result<Corpus> {
    config.validate()?;
    let plan = config.run_plan();
    let runs: Vec<SensorRun> = plan
        .par_iter()
        .enumerate()
        .map(|(i, &(speed, label, first))| generate_run(config, i, speed, label, first))
        .collect();
    let manifest = runs
        .iter()
        .map(|r| ManifestEntry {
            run_id: r.run_id.clone(),
            file: format!("{}.csv", r.run_id),
            rpm: r.spindle_speed,
            label: r.label,
            first_worn_incident: r.first_worn_incident,
        })
        .collect();
    Ok(Corpus { runs, manifest })
}

/// Writes one CSV per run plus `manifest.csv` into `dir`.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for (run, entry) in corpus.runs.iter().zip(&corpus.manifest) {
        write_run_samples(&dir.join(&entry.file), &run.samples)?;
    }
    write_manifest(&dir.join(MANIFEST_FILE), &corpus.manifest)
}
