//! Command-line front end: `synth`, `train`, `evaluate`, `explain`, `stats`.
//!
//! [`run`] never panics on bad input and never exits the process itself;
//! it returns the exit code (0 ok, 1 runtime failure, 2 usage error).

use std::collections::HashSet;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use prospect_explain::dataset::{class_feature_stats, fit_scaler, load_dataset, split_train_test};
use prospect_explain::explain::{explain_instance, ExplainConfig, Explanation, DEFAULT_SIGMA};
use prospect_explain::models::{
    self, load_model, save_model, ModelFile, ModelKind, SplitRecord, TrainConfig,
};
use prospect_explain::numfmt::format_sig;
use prospect_explain::report::{
    render_distribution_report, render_explanation_svg, render_explanation_text,
    render_train_report,
};
use prospect_explain::synthgen::{generate, GeneratorParams, DEFAULT_N};
use prospect_explain::Dataset;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const SVG_WIDTH: u32 = 640;
const SVG_HEIGHT: u32 = 320;

#[derive(Debug, Parser)]
#[command(
    name = "prospect-explain",
    version,
    about = "Local explanations for prospect risking models"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic prospect dataset.
    Synth(SynthArgs),
    /// Split a dataset, train a classifier and save it with its scaler.
    Train(TrainArgs),
    /// Print the accuracy of a saved model on a dataset.
    Evaluate(EvaluateArgs),
    /// Explain one record or every test-split record.
    Explain(ExplainArgs),
    /// Write per-class feature statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, default_value_t = DEFAULT_N)]
    n: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum KindArg {
    Logreg,
    Svm,
    Mlp,
}

impl From<KindArg> for ModelKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Logreg => ModelKind::LogReg,
            KindArg::Svm => ModelKind::Svm,
            KindArg::Mlp => ModelKind::Mlp,
        }
    }
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum)]
    model: KindArg,
    #[arg(long, default_value_t = 0.5)]
    test_fraction: f64,
    #[arg(long)]
    split_seed: u64,
    #[arg(long)]
    train_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["index", "all_test"])))]
struct ExplainArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Record id to explain.
    #[arg(long)]
    index: Option<u64>,
    /// Explain every record in the model's stored test split.
    #[arg(long)]
    all_test: bool,
    #[arg(long, default_value_t = 5000)]
    samples: usize,
    #[arg(long, default_value_t = DEFAULT_SIGMA)]
    sigma: f64,
    #[arg(long, default_value_t = 0.001)]
    lambda: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// A runtime failure tagged with the module that raised it.
#[derive(Debug)]
pub struct Failure {
    pub component: &'static str,
    pub message: String,
}

impl Failure {
    fn new(component: &'static str, e: impl Display) -> Self {
        Failure {
            component,
            message: e.to_string(),
        }
    }
}

impl Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error: {}: {}", self.component, one_line(&self.message))
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parses `argv` (including the program name) and executes the command,
/// writing results to stdout and a single `error:` line to stderr on failure.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => return report_clap_error(e),
    };
    match execute(cli.command) {
        Ok(summary) => {
            print!("{summary}");
            EXIT_OK
        }
        Err(f) => {
            eprintln!("{f}");
            EXIT_RUNTIME
        }
    }
}

fn report_clap_error(e: clap::Error) -> i32 {
    use clap::error::ErrorKind;
    if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
        print!("{e}");
        return EXIT_OK;
    }
    let rendered = e.render().to_string();
    let detail: Vec<&str> = rendered
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("For more information"))
        .map(|l| l.strip_prefix("error: ").unwrap_or(l))
        .collect();
    let mut msg = String::new();
    for (i, l) in detail.iter().enumerate() {
        if i > 0 {
            msg.push_str(if msg.ends_with(':') { " " } else { "; " });
        }
        msg.push_str(l);
    }
    eprintln!("error: usage: {}", one_line(&msg));
    EXIT_USAGE
}

fn execute(cmd: Command) -> Result<String, Failure> {
    match cmd {
        Command::Synth(a) => synth(&a),
        Command::Train(a) => train(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Explain(a) => explain(&a),
        Command::Stats(a) => stats(&a),
    }
}

fn load(path: &Path) -> Result<Dataset, Failure> {
    load_dataset(path).map_err(|e| Failure::new("dataset", e))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text)
        .map_err(|e| Failure::new("io", format!("cannot write {}: {e}", path.display())))
}

fn synth(a: &SynthArgs) -> Result<String, Failure> {
    let ds = generate(a.n, a.seed, &GeneratorParams::default())
        .map_err(|e| Failure::new("synthgen", e))?;
    ds.write(&a.out).map_err(|e| Failure::new("dataset", e))?;
    Ok(format!(
        "wrote {} records to {}\n",
        ds.len(),
        a.out.display()
    ))
}

fn train(a: &TrainArgs) -> Result<String, Failure> {
    let ds = load(&a.data)?;
    let (train, test) = split_train_test(&ds, a.test_fraction, a.split_seed)
        .map_err(|e| Failure::new("dataset", e))?;
    let scaler = fit_scaler(&train).map_err(|e| Failure::new("dataset", e))?;
    let (model, report) = models::fit(
        a.model.into(),
        &scaler.transform(&train),
        &scaler.transform(&test),
        &TrainConfig::default(),
        a.train_seed,
    )
    .map_err(|e| Failure::new("models", e))?;
    let file = ModelFile {
        model,
        scaler,
        split: Some(SplitRecord {
            seed: a.split_seed,
            test_fraction: a.test_fraction,
            test_ids: test.ids(),
        }),
    };
    save_model(&file, &a.out).map_err(|e| Failure::new("models", e))?;
    Ok(render_train_report(&report))
}

fn evaluate(a: &EvaluateArgs) -> Result<String, Failure> {
    let file = load_model(&a.model).map_err(|e| Failure::new("models", e))?;
    let ds = load(&a.data)?;
    let acc = models::accuracy(&file.model, &file.scaler.transform(&ds))
        .map_err(|e| Failure::new("models", e))?;
    Ok(format!("accuracy\t{}\n", format_sig(acc, 6)))
}

fn explain(a: &ExplainArgs) -> Result<String, Failure> {
    let file = load_model(&a.model).map_err(|e| Failure::new("models", e))?;
    let ds = load(&a.data)?;
    let ids = match a.index {
        Some(id) => vec![id],
        None => stored_test_ids(&file, &ds)?,
    };
    let base = ExplainConfig {
        n_samples: a.samples,
        sigma: a.sigma,
        l1: a.lambda,
        seed: a.seed,
    };
    base.validate().map_err(|e| Failure::new("explain", e))?;

    let explanations: Vec<Explanation> = ids
        .par_iter()
        .map(|&id| {
            let r = ds.get(id).ok_or_else(|| {
                Failure::new(
                    "dataset",
                    format!("no record with id {id} in {}", a.data.display()),
                )
            })?;
            explain_instance(
                &file.model,
                id,
                &r.features,
                &file.scaler,
                &base.for_instance(id),
            )
            .map_err(|e| Failure::new("explain", e))
        })
        .collect::<Result<_, _>>()?;

    fs::create_dir_all(&a.out_dir)
        .map_err(|e| Failure::new("io", format!("cannot create {}: {e}", a.out_dir.display())))?;
    for e in &explanations {
        let svg = render_explanation_svg(e, SVG_WIDTH, SVG_HEIGHT)
            .map_err(|e| Failure::new("report", e))?;
        write_file(
            &a.out_dir.join(format!("{}.tsv", e.instance_id)),
            &render_explanation_text(e),
        )?;
        write_file(&a.out_dir.join(format!("{}.svg", e.instance_id)), &svg)?;
    }
    Ok(format!(
        "explained {} instances into {}\n",
        explanations.len(),
        a.out_dir.display()
    ))
}

/// The stored test ids, after checking that re-splitting `ds` with the
/// stored seed and fraction reproduces them.
fn stored_test_ids(file: &ModelFile, ds: &Dataset) -> Result<Vec<u64>, Failure> {
    let split = file
        .split
        .as_ref()
        .ok_or_else(|| Failure::new("models", "model file has no stored split; use --index"))?;
    let (_, test) = split_train_test(ds, split.test_fraction, split.seed)
        .map_err(|e| Failure::new("dataset", e))?;
    let expected: HashSet<u64> = split.test_ids.iter().copied().collect();
    let actual: HashSet<u64> = test.ids().into_iter().collect();
    if expected != actual {
        return Err(Failure::new(
            "dataset",
            "stored test split does not match this dataset; was the model trained on it?",
        ));
    }
    Ok(split.test_ids.clone())
}

fn stats(a: &StatsArgs) -> Result<String, Failure> {
    let ds = load(&a.data)?;
    let s = class_feature_stats(&ds);
    write_file(&a.out, &render_distribution_report(&s))?;
    Ok(format!(
        "wrote statistics for {} records to {}\n",
        ds.len(),
        a.out.display()
    ))
}
