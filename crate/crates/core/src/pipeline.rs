//! End-to-end stages: synthesize, featurize, train, evaluate, explain.
//!
//! Each stage reads and writes files so the CLI can run them one at a time;
//! [`run`] chains them into a single deterministic output tree.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::{self, ForestModel, Hyperparameters};
use crate::metrics::{self, ConfusionMatrix, MetricSet, RocCurve, DEFAULT_POSITIVE_CLASS};
use crate::report;
use crate::rng::substream;
use crate::shapley::{
    self, explain_class, global_importance, Backend, GlobalImportance, Interventional,
    ShapleyExplanation,
};
use crate::signalprep::{self, io, LabeledDataset, SplitDataset, SplitRecord};
use crate::synth::{self, Corpus, SynthConfig};

pub const DATA_DIR: &str = "data";
pub const FEATURES_FILE: &str = "features.csv";
pub const MODEL_FILE: &str = "model.json";
pub const SPLIT_FILE: &str = "split.json";
pub const EVALUATION_DIR: &str = "evaluation";
pub const EXPLANATIONS_DIR: &str = "explanations";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitOptions {
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            train_fraction: 0.6,
            seed: 11,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExplainOptions {
    pub backend: Backend,
    /// Subsample the interventional background to this many training rows.
    pub background_sample: Option<usize>,
    pub background_seed: u64,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            backend: Backend::Interventional,
            background_sample: None,
            background_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Built-in synth profile name, used unless `profile_file` is set.
    pub profile: String,
    pub profile_file: Option<PathBuf>,
    /// Overrides the profile's own seed.
    pub synth_seed: Option<u64>,
    /// Existing corpus manifest; skips synthesis when set.
    pub manifest: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Model location; defaults to `model.json` in the output directory.
    pub model: Option<PathBuf>,
    pub split: SplitOptions,
    pub forest: Hyperparameters,
    pub train_seed: u64,
    pub explain: ExplainOptions,
    pub positive_class: u8,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            profile: "paper".into(),
            profile_file: None,
            synth_seed: None,
            manifest: None,
            output_dir: PathBuf::from("out"),
            model: None,
            split: SplitOptions::default(),
            forest: Hyperparameters::default(),
            train_seed: 13,
            explain: ExplainOptions::default(),
            positive_class: DEFAULT_POSITIVE_CLASS,
        }
    }
}

fn merge(base: &mut toml::Table, overlay: toml::Table) {
    for (key, value) in overlay {
        match (base.get_mut(&key), value) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, value) => {
                base.insert(key, value);
            }
        }
    }
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: PipelineConfig =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Applies the keys present in `text` on top of `self`.
    pub fn overlay_toml(&self, text: &str) -> Result<Self> {
        let overlay: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut base = toml::Table::try_from(self).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, overlay);
        let config: PipelineConfig = base
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn overlay_file(&self, path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.overlay_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.split.train_fraction;
        if !(f > 0.0 && f < 1.0) {
            return Err(Error::Config(format!(
                "split.train_fraction must be in (0, 1), got {f}"
            )));
        }
        if self.positive_class > 1 {
            return Err(Error::Config(format!(
                "positive_class must be 0 or 1, got {}",
                self.positive_class
            )));
        }
        if self.explain.background_sample == Some(0) {
            return Err(Error::Config(
                "explain.background_sample must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Resolves the synth profile, applying `synth_seed` if set.
    pub fn synth_config(&self) -> Result<SynthConfig> {
        let mut config = match &self.profile_file {
            Some(path) => SynthConfig::load(path)?,
            None => synth::profile_by_name(&self.profile)?,
        };
        if let Some(seed) = self.synth_seed {
            config.seed = seed;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn model_path(&self) -> PathBuf {
        self.model
            .clone()
            .unwrap_or_else(|| self.output_dir.join(MODEL_FILE))
    }
}

pub fn synthesize(config: &SynthConfig, out_dir: &Path) -> Result<Corpus> {
    let corpus = synth::generate(config)?;
    synth::write_corpus(out_dir, &corpus)?;
    Ok(corpus)
}

/// Windows, trims and featurizes every run in the manifest, writing the
/// dataset CSV to `out`.
pub fn featurize(manifest: &Path, out: &Path) -> Result<LabeledDataset> {
    let runs = io::load_runs(manifest)?;
    let dataset = signalprep::featurize_runs(&runs)?;
    io::write_dataset(out, &dataset)?;
    Ok(dataset)
}

pub fn write_split(path: &Path, record: &SplitRecord) -> Result<()> {
    let text = serde_json::to_string_pretty(record).map_err(|e| Error::json(path, e))?;
    report::write_text(path, &(text + "\n"))
}

pub fn read_split(path: &Path) -> Result<SplitRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path, e))
}

/// Splits, trains and persists both the model and the split membership.
pub fn train(
    dataset: &LabeledDataset,
    split: &SplitOptions,
    params: &Hyperparameters,
    seed: u64,
    model_path: &Path,
    split_path: &Path,
) -> Result<(ForestModel, SplitDataset)> {
    let parts = signalprep::split(dataset, split.train_fraction, split.seed)?;
    let model = forest::train(&parts.train, params, seed)?;
    forest::save_model(model_path, &model)?;
    write_split(split_path, &parts.record())?;
    Ok((model, parts))
}

/// Reloads a persisted model, dataset and split, checking they agree.
pub fn load_trained(
    model_path: &Path,
    dataset_path: &Path,
    split_path: &Path,
) -> Result<(ForestModel, SplitDataset)> {
    let model = forest::load_model(model_path)?;
    let dataset = io::read_dataset(dataset_path)?;
    if dataset.feature_count() != model.feature_count() {
        return Err(Error::FeatureMismatch {
            expected: model.feature_count(),
            actual: dataset.feature_count(),
        });
    }
    let split = SplitDataset::from_record(&dataset, &read_split(split_path)?)?;
    Ok((model, split))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub positive_class: u8,
    pub test_rows: usize,
    pub confusion: ConfusionMatrix,
    pub metrics: MetricSet,
    pub roc: RocCurve,
}

/// Scores the test side of `split` and writes `metrics.csv`, `roc.csv`,
/// `confusion.csv`, `predictions.csv`, `roc.svg` and `evaluation.json`.
pub fn evaluate(
    model: &ForestModel,
    split: &SplitDataset,
    positive_class: u8,
    out_dir: &Path,
) -> Result<EvaluationReport> {
    let test = &split.test;
    let predictions = model.predict_batch(test.rows())?;
    let predicted: Vec<u8> = predictions.iter().map(|p| p.label).collect();
    let scores: Vec<f64> = predictions.iter().map(|p| p.vote_fraction_class1).collect();
    let confusion = metrics::confusion(test.labels(), &predicted, positive_class)?;
    let report = EvaluationReport {
        positive_class,
        test_rows: test.len(),
        confusion,
        metrics: metrics::metric_set(&confusion)?,
        roc: metrics::roc(test.labels(), &scores, positive_class)?,
    };

    let m = &report.metrics;
    report::write_text(
        &out_dir.join("metrics.csv"),
        &format!(
            "acc,tpr,fpr,mcc,auc\n{:?},{:?},{:?},{:?},{:?}\n",
            m.acc, m.tpr, m.fpr, m.mcc, report.roc.auc
        ),
    )?;
    report::write_text(
        &out_dir.join("confusion.csv"),
        &format!(
            "positive_class,tp,fp,tn,fn\n{},{},{},{},{}\n",
            positive_class, confusion.tp, confusion.fp, confusion.tn, confusion.fn_
        ),
    )?;
    report::write_text(&out_dir.join("roc.csv"), &report::roc_csv(&report.roc))?;
    report::write_text(
        &out_dir.join("roc.svg"),
        &report::roc_svg(&report.roc, "ROC (test set)"),
    )?;

    let mut rows = String::from("row,true_class,predicted_class,vote_fraction_class1\n");
    for ((idx, label), p) in split
        .test_indices
        .iter()
        .zip(test.labels())
        .zip(&predictions)
    {
        rows.push_str(&format!(
            "{idx},{label},{},{:?}\n",
            p.label, p.vote_fraction_class1
        ));
    }
    report::write_text(&out_dir.join("predictions.csv"), &rows)?;

    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::json(out_dir, e))?;
    report::write_text(&out_dir.join("evaluation.json"), &(json + "\n"))?;
    Ok(report)
}

/// The four prediction outcomes singled out for case study, worn = class 1.
pub const CASE_NAMES: [&str; 4] = ["true_worn", "true_unworn", "false_worn", "false_unworn"];

fn case_name(true_class: u8, predicted: u8) -> &'static str {
    match (true_class, predicted) {
        (1, 1) => CASE_NAMES[0],
        (0, 0) => CASE_NAMES[1],
        (0, _) => CASE_NAMES[2],
        _ => CASE_NAMES[3],
    }
}

#[derive(Debug, Clone)]
pub struct ExplainSummary {
    pub backend: Backend,
    /// Class-1 explanations of the test rows, in test order.
    pub explanations: Vec<ShapleyExplanation>,
    pub global: GlobalImportance,
    /// Highlighted cases as `(name, dataset row)`.
    pub cases: Vec<(&'static str, usize)>,
}

/// Background rows for the interventional backend: the whole training set,
/// or a seeded sample of `k` rows kept in original order.
pub fn background_rows(train: &LabeledDataset, options: &ExplainOptions) -> Vec<Vec<f64>> {
    match options.background_sample {
        Some(k) if k < train.len() => {
            let mut rng = substream(options.background_seed, 0);
            let mut picked = index::sample(&mut rng, train.len(), k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| train.row(i).to_vec()).collect()
        }
        _ => train.rows().to_vec(),
    }
}

/// Explains every test row and writes per-instance, case and global files.
///
/// Per-instance files explain the class-1 score; case files explain the
/// predicted class. The retraining backend trains its subset forests with
/// the model's own hyperparameters and seed.
pub fn explain(
    model: &ForestModel,
    split: &SplitDataset,
    options: &ExplainOptions,
    out_dir: &Path,
) -> Result<ExplainSummary> {
    let test = &split.test;
    let explanations = match options.backend {
        Backend::Interventional => {
            let background = background_rows(&split.train, options);
            let value_fn = Interventional::new(model, &background)?;
            shapley::explain_batch(&value_fn, test.rows())?
        }
        Backend::Retraining => {
            let table =
                shapley::train_subset_models(&split.train, model.hyperparameters(), model.seed())?;
            shapley::explain_batch(&table, test.rows())?
        }
    };
    let predictions = model.predict_batch(test.rows())?;
    let names = model.feature_names();

    let mut cases: Vec<(&'static str, usize)> = Vec::new();
    for (i, expl) in explanations.iter().enumerate() {
        expl.check_efficiency()?;
        let row = split.test_indices[i];
        let (truth, predicted) = (test.labels()[i], predictions[i].label);
        let values = test.row(i);
        let stem = format!("row_{row:03}");
        report::write_text(
            &out_dir.join("instances").join(format!("{stem}.csv")),
            &report::explanation_csv(expl, names, values, predicted, truth),
        )?;
        report::write_text(
            &out_dir.join("instances").join(format!("{stem}.svg")),
            &report::waterfall_svg(
                expl,
                names,
                values,
                &format!("Row {row}: worn score ({})", options.backend),
            ),
        )?;

        let case = case_name(truth, predicted);
        if cases.iter().all(|(name, _)| *name != case) {
            let view = explain_class(expl, predicted);
            view.check_efficiency()?;
            report::write_text(
                &out_dir.join("cases").join(format!("{case}.csv")),
                &report::explanation_csv(&view, names, values, predicted, truth),
            )?;
            let title = format!(
                "{case} (row {row}): class {predicted} score ({})",
                options.backend
            );
            report::write_text(
                &out_dir.join("cases").join(format!("{case}.svg")),
                &report::waterfall_svg(&view, names, values, &title),
            )?;
            cases.push((case, row));
        }
    }
    cases.sort_by_key(|(name, _)| CASE_NAMES.iter().position(|n| n == name));

    let global = global_importance(&explanations, names)?;
    report::write_text(&out_dir.join("global.csv"), &report::global_csv(&global))?;
    report::write_text(
        &out_dir.join("global.svg"),
        &report::importance_svg(
            &global,
            &format!("Mean |phi| for the worn score ({})", options.backend),
        ),
    )?;
    Ok(ExplainSummary {
        backend: options.backend,
        explanations,
        global,
        cases,
    })
}

#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub output_dir: PathBuf,
    pub dataset_rows: usize,
    pub train_rows: usize,
    pub test_rows: usize,
    pub evaluation: EvaluationReport,
    pub explanation: ExplainSummary,
}

/// Runs every stage into `config.output_dir`:
/// `data/`, `features.csv`, `model.json`, `split.json`, `evaluation/`
/// and `explanations/`.
pub fn run(config: &PipelineConfig) -> Result<PipelineSummary> {
    config.validate()?;
    let out = &config.output_dir;
    let manifest = match &config.manifest {
        Some(path) => path.clone(),
        None => {
            let data = out.join(DATA_DIR);
            synthesize(&config.synth_config()?, &data)?;
            data.join(synth::MANIFEST_FILE)
        }
    };
    let dataset = featurize(&manifest, &out.join(FEATURES_FILE))?;
    let (model, split) = train(
        &dataset,
        &config.split,
        &config.forest,
        config.train_seed,
        &config.model_path(),
        &out.join(SPLIT_FILE),
    )?;
    let evaluation = evaluate(
        &model,
        &split,
        config.positive_class,
        &out.join(EVALUATION_DIR),
    )?;
    let explanation = explain(&model, &split, &config.explain, &out.join(EXPLANATIONS_DIR))?;
    Ok(PipelineSummary {
        output_dir: out.clone(),
        dataset_rows: dataset.len(),
        train_rows: split.train.len(),
        test_rows: split.test.len(),
        evaluation,
        explanation,
    })
}
