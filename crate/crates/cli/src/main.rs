use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toolwear_core::pipeline::{self, EvaluationReport, ExplainSummary, PipelineConfig};
use toolwear_core::shapley::Backend;
use toolwear_core::signalprep::io::read_dataset;

/// Tool-wear classification with exact Shapley explanations.
#[derive(Parser)]
#[command(name = "toolwear", version)]
struct Cli {
    /// TOML pipeline config; keys present in the file override flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic sensor runs and a manifest.
    Synth {
        #[command(flatten)]
        synth: SynthArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Window and featurize the runs listed in a manifest.
    Featurize {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Split a feature dataset and train a forest.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        model: PathBuf,
        /// Where to record split membership.
        #[arg(long)]
        split: PathBuf,
        #[command(flatten)]
        train: TrainArgs,
    },
    /// Score the test split and write metrics and ROC data.
    Evaluate {
        #[command(flatten)]
        inputs: TrainedInputs,
        #[arg(long, default_value_t = 0)]
        positive_class: u8,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write Shapley explanations for every test row.
    Explain {
        #[command(flatten)]
        inputs: TrainedInputs,
        #[command(flatten)]
        explain: ExplainArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every stage into one output directory.
    Pipeline {
        #[command(flatten)]
        synth: SynthArgs,
        /// Use an existing corpus instead of synthesizing one.
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[command(flatten)]
        train: TrainArgs,
        #[command(flatten)]
        explain: ExplainArgs,
        #[arg(long, default_value_t = 0)]
        positive_class: u8,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Built-in profile name.
    #[arg(long, default_value = "paper")]
    profile: String,
    /// Profile TOML file, used instead of a built-in profile.
    #[arg(long)]
    profile_file: Option<PathBuf>,
    /// Overrides the profile seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0.6)]
    train_fraction: f64,
    #[arg(long, default_value_t = 11)]
    split_seed: u64,
    #[arg(long, default_value_t = 13)]
    train_seed: u64,
    #[arg(long, default_value_t = 100)]
    trees: usize,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    /// Defaults to floor(sqrt(feature count)).
    #[arg(long)]
    features_per_split: Option<usize>,
}

#[derive(Args)]
struct ExplainArgs {
    /// interventional or retraining.
    #[arg(long, default_value = "interventional")]
    backend: Backend,
    /// Sample this many training rows as the interventional background.
    #[arg(long)]
    background_sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    background_seed: u64,
}

#[derive(Args)]
struct TrainedInputs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    split: PathBuf,
}

impl SynthArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        config.profile = self.profile.clone();
        config.profile_file = self.profile_file.clone();
        config.synth_seed = self.seed;
    }
}

impl TrainArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        config.split.train_fraction = self.train_fraction;
        config.split.seed = self.split_seed;
        config.train_seed = self.train_seed;
        config.forest.tree_count = self.trees;
        config.forest.max_depth = self.max_depth;
        config.forest.min_samples_leaf = self.min_samples_leaf;
        config.forest.features_per_split = self.features_per_split;
    }
}

impl ExplainArgs {
    fn apply(&self, config: &mut PipelineConfig) {
        config.explain.backend = self.backend;
        config.explain.background_sample = self.background_sample;
        config.explain.background_seed = self.background_seed;
    }
}

struct Failure {
    stage: &'static str,
    message: String,
}

trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, Failure>;
}

impl<T, E: std::fmt::Display> Stage<T> for Result<T, E> {
    fn stage(self, stage: &'static str) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            message: e.to_string(),
        })
    }
}

fn resolve(cli_config: Option<&Path>, config: PipelineConfig) -> Result<PipelineConfig, Failure> {
    match cli_config {
        Some(path) => config.overlay_file(path).stage("config"),
        None => config.validate().map(|_| config).stage("config"),
    }
}

fn write_evaluation(out: &mut String, report: &EvaluationReport) {
    let m = &report.metrics;
    let cm = &report.confusion;
    let _ = writeln!(
        out,
        "test rows: {} (positive class {})",
        report.test_rows, report.positive_class
    );
    let _ = writeln!(
        out,
        "confusion: tp {} fp {} tn {} fn {}",
        cm.tp, cm.fp, cm.tn, cm.fn_
    );
    let _ = writeln!(
        out,
        "ACC {:.3}%  TPR {:.3}  FPR {:.3}  MCC {:.3}",
        m.acc, m.tpr, m.fpr, m.mcc
    );
    let _ = writeln!(out, "ROC AUC {:.4}", report.roc.auc);
}

fn write_explanation(out: &mut String, summary: &ExplainSummary) {
    let _ = writeln!(
        out,
        "explained {} rows with the {} backend",
        summary.explanations.len(),
        summary.backend
    );
    let _ = writeln!(out, "global importance (mean |phi|, worn score):");
    let g = &summary.global;
    for (rank, &i) in g.ranking.iter().enumerate() {
        let _ = writeln!(
            out,
            "  {:>2}. {:<10} {:.4}",
            rank + 1,
            g.feature_names[i],
            g.mean_abs_phi[1][i]
        );
    }
    for (name, row) in &summary.cases {
        let _ = writeln!(out, "case {name}: row {row}");
    }
}

fn execute(cli: Cli) -> Result<String, Failure> {
    let mut text = String::new();
    let file = cli.config.as_deref();
    let mut config = PipelineConfig::default();
    match cli.command {
        Command::Synth { synth, out } => {
            synth.apply(&mut config);
            config.output_dir = out;
            let config = resolve(file, config)?;
            let profile = config.synth_config().stage("synth")?;
            let corpus = pipeline::synthesize(&profile, &config.output_dir).stage("synth")?;
            let _ = writeln!(
                text,
                "wrote {} runs and {} to {}",
                corpus.runs.len(),
                toolwear_core::synth::MANIFEST_FILE,
                config.output_dir.display()
            );
        }
        Command::Featurize { manifest, out } => {
            config.manifest = Some(manifest);
            let config = resolve(file, config)?;
            let manifest = config.manifest.as_deref().unwrap_or(Path::new(""));
            let dataset = pipeline::featurize(manifest, &out).stage("featurize")?;
            let _ = writeln!(text, "rows: {}", dataset.len());
        }
        Command::Train {
            dataset,
            model,
            split,
            train,
        } => {
            train.apply(&mut config);
            config.model = Some(model);
            let config = resolve(file, config)?;
            let data = read_dataset(&dataset).stage("train")?;
            let (_, parts) = pipeline::train(
                &data,
                &config.split,
                &config.forest,
                config.train_seed,
                &config.model_path(),
                &split,
            )
            .stage("train")?;
            let _ = writeln!(
                text,
                "train {} rows, test {} rows; model written to {}",
                parts.train.len(),
                parts.test.len(),
                config.model_path().display()
            );
        }
        Command::Evaluate {
            inputs,
            positive_class,
            out,
        } => {
            config.positive_class = positive_class;
            let config = resolve(file, config)?;
            let (model, split) =
                pipeline::load_trained(&inputs.model, &inputs.dataset, &inputs.split)
                    .stage("evaluate")?;
            let report = pipeline::evaluate(&model, &split, config.positive_class, &out)
                .stage("evaluate")?;
            write_evaluation(&mut text, &report);
        }
        Command::Explain {
            inputs,
            explain,
            out,
        } => {
            explain.apply(&mut config);
            let config = resolve(file, config)?;
            let (model, split) =
                pipeline::load_trained(&inputs.model, &inputs.dataset, &inputs.split)
                    .stage("explain")?;
            let summary =
                pipeline::explain(&model, &split, &config.explain, &out).stage("explain")?;
            write_explanation(&mut text, &summary);
        }
        Command::Pipeline {
            synth,
            manifest,
            train,
            explain,
            positive_class,
            out,
        } => {
            synth.apply(&mut config);
            train.apply(&mut config);
            explain.apply(&mut config);
            config.manifest = manifest;
            config.positive_class = positive_class;
            config.output_dir = out;
            let config = resolve(file, config)?;
            let summary = pipeline::run(&config).stage("pipeline")?;
            let _ = writeln!(
                text,
                "rows: {} (train {}, test {})",
                summary.dataset_rows, summary.train_rows, summary.test_rows
            );
            write_evaluation(&mut text, &summary.evaluation);
            write_explanation(&mut text, &summary.explanation);
            let _ = writeln!(text, "outputs in {}", summary.output_dir.display());
        }
    }
    Ok(text)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.render().to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("error[args]: {}", first.trim_start_matches("error: "));
            return ExitCode::FAILURE;
        }
    };
    match execute(cli) {
        Ok(text) => match io::stdout().write_all(text.as_bytes()) {
            Err(e) if e.kind() != io::ErrorKind::BrokenPipe => {
                eprintln!("error[output]: {e}");
                ExitCode::FAILURE
            }
            _ => ExitCode::SUCCESS,
        },
        Err(f) => {
            eprintln!("error[{}]: {}", f.stage, f.message.replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
