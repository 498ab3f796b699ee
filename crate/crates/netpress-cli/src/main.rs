//! Command line front end. Five verbs: `train` grid-searches one regularizer
//! combo and saves the winner, `prune` and `quantize` sweep a saved model,
//! `experiment` runs the whole pipeline from a flat config, and `report`
//! collates run reports into tables. Failures exit nonzero and the message
//! names the stage that died.

use std::fs::{self, File};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use netpress::dataio::Dataset;
use netpress::experiment::{
    resolve_source, run_experiment, select_bits, DataSource, ExperimentConfig,
};
use netpress::model_io::{load_model, save_model, Provenance};
use netpress::network::{accuracy, Mlp};
use netpress::objective::{PenaltyScope, RegularizerSpec};
use netpress::pruner::{sweep_and_select, PruneSweepConfig};
use netpress::quantizer::{bits_sweep, Rounding};
use netpress::report::{
    emit_tables, load_report, write_prune_curve, write_quant_curve, write_train_history,
};
use netpress::trainer::{grid_search, Combo, GridConfig};

#[derive(Parser)]
#[command(
    name = "netpress",
    version,
    about = "Train, prune, and quantize small feedforward classifiers"
)]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Grid-search one regularizer combo and save the best model
    Train(TrainArgs),
    /// Magnitude-prune a saved model against its validation split
    Prune(PruneArgs),
    /// Sweep fixed-point widths over a saved model
    Quantize(QuantArgs),
    /// Run the full train/prune/quantize pipeline from a config
    Experiment(ExperimentArgs),
    /// Collate run reports into accuracy and compression tables
    Report(ReportArgs),
}

/// Tag library errors with their pipeline stage for the exit message.
trait StageExt<V> {
    fn stage(self) -> Result<V>;
}

impl<V> StageExt<V> for netpress::Result<V> {
    fn stage(self) -> Result<V> {
        self.map_err(|e| anyhow::anyhow!("{} stage failed: {e}", e.stage()))
    }
}

fn f64_list(flag: &str, s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().with_context(|| format!("{flag}: bad number {t:?}")))
        .collect()
}

fn usize_list(flag: &str, s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<usize>().with_context(|| format!("{flag}: bad count {t:?}")))
        .collect()
}

/// Data source flags shared by train, prune, and quantize.
#[derive(Args)]
struct DataArgs {
    /// synth:TAG, one libsvm file to split, or train,val,test files
    #[arg(long)]
    data: String,
    /// Train,val,test fractions for single-file sources
    #[arg(long, default_value = "0.8,0.1,0.1")]
    splits: String,
    /// Root seed for splitting, init, and shuffling
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Standardize features to the train split's mean and variance
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    standardize: bool,
}

impl DataArgs {
    fn resolve(&self) -> Result<(Dataset<f64>, Dataset<f64>, Dataset<f64>)> {
        let fractions = f64_list("--splits", &self.splits)?;
        if fractions.len() != 3 {
            bail!("--splits: expected three fractions");
        }
        let source: DataSource = self.data.parse().stage()?;
        resolve_source(
            &source,
            [fractions[0], fractions[1], fractions[2]],
            self.seed,
            self.standardize,
        )
        .stage()
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Hidden layer widths, comma separated
    #[arg(long)]
    arch: String,
    /// Regularizer combo name (H, H+W1, H+W2+LCA, ...)
    #[arg(long)]
    combo: String,
    /// L2 coefficient grid
    #[arg(long = "grid-c", default_value = "1e-4,1e-3,1e-2,1e-1")]
    grid_c: String,
    /// Pre-activation coefficient grid
    #[arg(long = "grid-d", default_value = "1e-8,1e-7,1e-6,1e-5,1e-4")]
    grid_d: String,
    /// Initial learning rate grid
    #[arg(long = "grid-lr", default_value = "1e-2,1e-1")]
    grid_lr: String,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    /// Minibatch size
    #[arg(long, default_value_t = 128)]
    batch: usize,
    /// Directory for model.json and train_history.csv
    #[arg(long)]
    out: PathBuf,
}

fn run_train(args: &TrainArgs) -> Result<()> {
    let combo: Combo = args.combo.parse().stage()?;
    let widths = usize_list("--arch", &args.arch)?;
    let (train_set, val_set, test_set) = args.data.resolve()?;
    let grid = GridConfig {
        combo,
        grid_c: f64_list("--grid-c", &args.grid_c)?,
        grid_d: f64_list("--grid-d", &args.grid_d)?,
        grid_lr: f64_list("--grid-lr", &args.grid_lr)?,
        epochs: args.epochs,
        batch_size: args.batch,
        seed: args.data.seed,
    };
    let outcome = grid_search(&train_set, &val_set, &widths, &grid).stage()?;
    let test_acc = accuracy(&outcome.model, &test_set).stage()?;

    fs::create_dir_all(&args.out).context("io stage failed")?;
    let model_path = args.out.join("model.json");
    let provenance = Provenance {
        seed: Some(args.data.seed),
        combo: Some(combo.to_string()),
        c: Some(outcome.config.spec.c),
        d: Some(outcome.config.spec.d),
        l1: Some(outcome.config.spec.l1),
        scope: Some(outcome.config.spec.scope.as_str().to_string()),
        scaling: Some("mean".into()),
        config_hash: None,
        source: Some("train".into()),
    };
    save_model(&model_path, &outcome.model, &provenance).stage()?;
    let history_path = args.out.join("train_history.csv");
    File::create(&history_path)
        .map_err(netpress::Error::from)
        .and_then(|f| write_train_history(f, &outcome.history))
        .stage()?;

    let trained = outcome.cells.iter().filter(|c| c.error.is_none()).count();
    println!(
        "trained {trained} of {} grid cells, selected c={} l1={} d={} lr0={}",
        outcome.cells.len(),
        outcome.config.spec.c,
        outcome.config.spec.l1,
        outcome.config.spec.d,
        outcome.config.lr0
    );
    println!("val accuracy {:.4}, test accuracy {:.4}", outcome.val_acc, test_acc);
    println!("wrote {}", model_path.display());
    println!("wrote {}", history_path.display());
    Ok(())
}

#[derive(Args)]
struct PruneArgs {
    /// Model file produced by `netpress train`
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Allowed drop in validation accuracy
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Smallest magnitude threshold in the sweep
    #[arg(long = "prune-t-min", default_value_t = 1e-3)]
    t_min: f64,
    /// Number of sweep steps
    #[arg(long = "prune-steps", default_value_t = 50)]
    steps: usize,
    /// Directory for pruned.json and prune_curve.csv
    #[arg(long)]
    out: PathBuf,
}

fn run_prune(args: &PruneArgs) -> Result<()> {
    let (model, provenance): (Mlp<f64>, Provenance) = load_model(&args.model).stage()?;
    let (_, val_set, test_set) = args.data.resolve()?;
    let config =
        PruneSweepConfig { t_min: args.t_min, steps: args.steps, tolerance: args.tolerance };
    let result = sweep_and_select(&model, &val_set, &config).stage()?;

    fs::create_dir_all(&args.out).context("io stage failed")?;
    let pruned_path = args.out.join("pruned.json");
    let prov = Provenance {
        source: Some(format!(
            "prune step {} of {}",
            result.selected_step,
            args.model.display()
        )),
        ..provenance
    };
    save_model(&pruned_path, &result.pruned_model, &prov).stage()?;
    let curve_path = args.out.join("prune_curve.csv");
    File::create(&curve_path)
        .map_err(netpress::Error::from)
        .and_then(|f| write_prune_curve(f, &model, &result, &config, &test_set))
        .stage()?;

    let val_acc = accuracy(&result.pruned_model, &val_set).stage()?;
    let test_acc = accuracy(&result.pruned_model, &test_set).stage()?;
    println!(
        "kept step {} of {}: compression {:.1}x, val {:.4} (baseline {:.4}), test {:.4}",
        result.selected_step, args.steps, result.ratio, val_acc, result.base_val_acc, test_acc
    );
    if result.tolerance_failed {
        println!("warning: no step stayed within tolerance; kept the unpruned weights");
    }
    if result.ratio_flagged {
        println!("warning: compression ratio hit the empty-model guard");
    }
    println!("wrote {}", pruned_path.display());
    println!("wrote {}", curve_path.display());
    Ok(())
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSplit {
    Val,
    Test,
}

#[derive(Args)]
struct QuantArgs {
    /// Model file produced by `netpress train` or `netpress prune`
    #[arg(long)]
    model: PathBuf,
    #[command(flatten)]
    data: DataArgs,
    /// Accuracy drop allowed when picking the coarsest width
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    /// Split the sweep accuracy is measured on
    #[arg(long = "eval-split", value_enum, default_value_t = EvalSplit::Val)]
    eval_split: EvalSplit,
    /// toward_zero or nearest
    #[arg(long, default_value = "toward_zero")]
    rounding: String,
    /// Directory for quant_curve.csv
    #[arg(long)]
    out: PathBuf,
}

/// Rebuild the training regularizer from a stored model's provenance;
/// missing fields fall back to zero coefficients. The sweep's capacity
/// columns use this spec's C.
fn spec_from_provenance(p: &Provenance) -> Result<RegularizerSpec<f64>> {
    let scope = match &p.scope {
        Some(s) => s.parse::<PenaltyScope>().stage()?,
        None => PenaltyScope::None,
    };
    Ok(RegularizerSpec {
        c: p.c.unwrap_or(0.0),
        d: p.d.unwrap_or(0.0),
        l1: p.l1.unwrap_or(0.0),
        scope,
    })
}

fn run_quantize(args: &QuantArgs) -> Result<()> {
    let (model, provenance): (Mlp<f64>, Provenance) = load_model(&args.model).stage()?;
    let spec = spec_from_provenance(&provenance)?;
    let rounding: Rounding = args.rounding.parse().stage()?;
    let (_, val_set, test_set) = args.data.resolve()?;
    let eval = match args.eval_split {
        EvalSplit::Val => &val_set,
        EvalSplit::Test => &test_set,
    };
    let report = bits_sweep(&model, eval, &spec, args.tolerance, rounding).stage()?;

    fs::create_dir_all(&args.out).context("io stage failed")?;
    let curve_path = args.out.join("quant_curve.csv");
    File::create(&curve_path)
        .map_err(netpress::Error::from)
        .and_then(|f| write_quant_curve(f, &report))
        .stage()?;

    let baseline = report.rows.first().map(|r| r.accuracy).unwrap_or(0.0);
    match select_bits(&report, args.tolerance) {
        Some((bits, acc)) => println!(
            "coarsest width within {} of full precision: T={bits} at accuracy {acc:.4} (full {baseline:.4})",
            args.tolerance
        ),
        None => println!(
            "no width stayed within {} of full-precision accuracy {baseline:.4}",
            args.tolerance
        ),
    }
    println!("wrote {}", curve_path.display());
    Ok(())
}

#[derive(Args)]
struct ExperimentArgs {
    /// Flat key = value config file; exclusive with the inline flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// synth:TAG, one libsvm file, or train,val,test files
    #[arg(long)]
    data: Option<String>,
    /// Run label; defaults to the data file stem or synth tag
    #[arg(long)]
    label: Option<String>,
    /// Train,val,test fractions for single-file sources
    #[arg(long)]
    splits: Option<String>,
    /// Hidden layer widths, comma separated
    #[arg(long)]
    arch: Option<String>,
    /// Regularizer combos, comma separated
    #[arg(long)]
    combo: Option<String>,
    #[arg(long = "grid-c")]
    grid_c: Option<String>,
    #[arg(long = "grid-d")]
    grid_d: Option<String>,
    #[arg(long = "grid-lr")]
    grid_lr: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Accuracy-drop tolerance for prune and quantize selection
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long, action = clap::ArgAction::Set)]
    standardize: Option<bool>,
    /// toward_zero or nearest
    #[arg(long)]
    rounding: Option<String>,
    /// Split quantization sweeps evaluate on: val or test
    #[arg(long = "quant-eval")]
    quant_eval: Option<String>,
    /// Retraining epochs after pruning; 0 disables
    #[arg(long = "fine-tune-epochs")]
    fine_tune_epochs: Option<usize>,
    /// Smallest magnitude threshold in the prune sweep
    #[arg(long = "prune-t-min")]
    prune_t_min: Option<f64>,
    /// Prune sweep step count
    #[arg(long = "prune-steps")]
    prune_steps: Option<usize>,
    /// Output directory root
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Inline flags rendered as config lines, in the flat file format.
fn inline_lines(args: &ExperimentArgs) -> Vec<String> {
    let mut lines = Vec::new();
    let mut push = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            lines.push(format!("{key} = {v}"));
        }
    };
    push("data", args.data.clone());
    push("label", args.label.clone());
    push("splits", args.splits.clone());
    push("arch", args.arch.clone());
    push("combos", args.combo.clone());
    push("grid-c", args.grid_c.clone());
    push("grid-d", args.grid_d.clone());
    push("grid-lr", args.grid_lr.clone());
    push("epochs", args.epochs.map(|v| v.to_string()));
    push("batch", args.batch.map(|v| v.to_string()));
    push("seed", args.seed.map(|v| v.to_string()));
    push("tolerance", args.tolerance.map(|v| v.to_string()));
    push("standardize", args.standardize.map(|v| v.to_string()));
    push("rounding", args.rounding.clone());
    push("quant-eval", args.quant_eval.clone());
    push("fine-tune-epochs", args.fine_tune_epochs.map(|v| v.to_string()));
    push("prune-t-min", args.prune_t_min.map(|v| v.to_string()));
    push("prune-steps", args.prune_steps.map(|v| v.to_string()));
    push("out", args.out.as_ref().map(|p| p.display().to_string()));
    lines
}

fn run_experiment_verb(args: &ExperimentArgs) -> Result<()> {
    let lines = inline_lines(args);
    let config = match &args.config {
        Some(path) => {
            if !lines.is_empty() {
                bail!("config stage failed: pass either --config or inline flags, not both");
            }
            ExperimentConfig::from_file(path).stage()?
        }
        None => {
            if lines.is_empty() {
                bail!("config stage failed: need --config or at least --data, --arch, --combo");
            }
            ExperimentConfig::from_text(&(lines.join("\n") + "\n")).stage()?
        }
    };

    let report = run_experiment(&config).stage()?;
    for combo in &report.combos {
        let quant = match (combo.quant_selected_bits, combo.quant_accuracy) {
            (Some(t), Some(a)) => format!("T={t} at {a:.4}"),
            _ => "none within tolerance".into(),
        };
        println!(
            "{}: c={} d={} lr0={} | unpruned val {:.4} test {:.4} | pruned val {:.4} test {:.4} ({:.1}x) | quantized {quant}",
            combo.combo,
            combo.selected_c,
            combo.selected_d,
            combo.selected_lr,
            combo.unpruned.val,
            combo.unpruned.test,
            combo.pruned.val,
            combo.pruned.test,
            combo.prune_ratio
        );
    }
    let report_path = config.out.join(&config.label).join("report.json");
    println!("report written to {}", report_path.display());
    if let Some(f) = &report.failure {
        let combo = f.combo.as_ref().map(|c| format!(" (combo {c})")).unwrap_or_default();
        bail!("{} stage failed{combo}: {}", f.stage, f.message);
    }
    Ok(())
}

#[derive(Args)]
struct ReportArgs {
    /// report.json files or run directories containing one
    #[arg(required = true)]
    runs: Vec<PathBuf>,
    /// Directory the tables are written to
    #[arg(long)]
    out: PathBuf,
}

fn run_report(args: &ReportArgs) -> Result<()> {
    let mut reports = Vec::new();
    for path in &args.runs {
        let file = if path.is_dir() { path.join("report.json") } else { path.clone() };
        let report = load_report(&file)
            .map_err(|e| anyhow::anyhow!("report stage failed on {}: {e}", file.display()))?;
        reports.push(report);
    }
    let written = emit_tables(&reports, &args.out).stage()?;
    for p in &written {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.verb {
        Verb::Train(a) => run_train(a),
        Verb::Prune(a) => run_prune(a),
        Verb::Quantize(a) => run_quantize(a),
        Verb::Experiment(a) => run_experiment_verb(a),
        Verb::Report(a) => run_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("netpress: {e:#}");
            ExitCode::FAILURE
        }
    }
}
