//! Command-line front end: fitting, prediction, penalty selection,
//! benchmarking, and the synthetic shrinking-error study.

mod config;
mod io;

use clap::{Args, Parser, Subcommand};
use config::{parse_list, Settings};
use fsir::basis;
use fsir::edr::Downstream;
use fsir::estimators::{Response, Task};
use fsir::pipeline::{self, FitReport, FitSpec, Method, PipelineModel};
use fsir::synth::{self, Link, StudyConfig, SynthSpec};
use fsir::{Error, Result};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Penalty grid offered when none is given: spans six decades and includes
/// the values the reference experiments settled on (0.5, 5, 10).
const DEFAULT_ALPHA_GRID: &[f64] = &[0.01, 0.1, 0.5, 1.0, 5.0, 10.0, 100.0];

#[derive(Parser)]
#[command(
    name = "fsir",
    version,
    about = "Functional sliced inverse regression with perceptron, linear, and kernel predictors"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a model on a dataset CSV and write <out>.model.json + <out>.report.txt
    Fit(CommonArgs),
    /// Predict with a saved model and write a predictions CSV
    Predict(CommonArgs),
    /// Pick the penalty weight on a validation split; writes <out>.alphas.csv + <out>.selection.json
    SelectAlpha(CommonArgs),
    /// Compare methods over repeated learn/test splits; writes <out>.splits.csv + <out>.summary.json
    Benchmark(CommonArgs),
    /// Synthetic study of the direction error as the sample grows; writes <out>.study.csv + <out>.summary.json
    SynthStudy(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Dataset CSV: first row = grid, then rows of curve values + response
    #[arg(long)]
    data: Option<String>,
    /// Saved model JSON (predict)
    #[arg(long)]
    model: Option<String>,
    /// Method name: SIR-NNr, SIR-NNp, PCA-NN, SIR-L, SIR-K (comma-separated for benchmark)
    #[arg(long)]
    method: Option<String>,
    /// Penalty weight; a comma-separated grid for select-alpha; the c of alpha = c*N^(-1/3) for synth-study
    #[arg(long)]
    alpha: Option<String>,
    /// Number of estimated directions (fit_q for synth-study)
    #[arg(long)]
    q: Option<String>,
    /// Hidden neurons of the perceptron
    #[arg(long)]
    q2: Option<String>,
    /// Kept components for the truncated methods (SIR-NNp, PCA-NN)
    #[arg(long)]
    kn: Option<String>,
    /// Kernel bandwidth (SIR-K)
    #[arg(long)]
    bandwidth: Option<String>,
    /// Number of response slices H
    #[arg(long)]
    slices: Option<String>,
    /// Number of benchmark splits
    #[arg(long)]
    splits: Option<String>,
    /// Learning-sample size per benchmark split
    #[arg(long)]
    learn_size: Option<String>,
    /// Test-sample size per benchmark split
    #[arg(long)]
    test_size: Option<String>,
    /// Base seed for every random choice
    #[arg(long)]
    seed: Option<String>,
    /// Output path prefix (or file for predict)
    #[arg(long)]
    out: Option<String>,
    /// Response kind: regression (default) or classification
    #[arg(long)]
    task: Option<String>,
    /// Sample sizes for synth-study, e.g. 100,400,1600
    #[arg(long)]
    n_list: Option<String>,
    /// Replicates per sample size for synth-study
    #[arg(long)]
    replicates: Option<String>,
    /// Flat key=value config file; command-line flags win
    #[arg(long)]
    config: Option<PathBuf>,
}

fn settings_from(args: &CommonArgs) -> Result<Settings> {
    let mut s = Settings::load(args.config.as_deref())?;
    s.set_flag("data", args.data.clone());
    s.set_flag("model", args.model.clone());
    s.set_flag("method", args.method.clone());
    s.set_flag("alpha", args.alpha.clone());
    s.set_flag("q", args.q.clone());
    s.set_flag("q2", args.q2.clone());
    s.set_flag("kn", args.kn.clone());
    s.set_flag("bandwidth", args.bandwidth.clone());
    s.set_flag("slices", args.slices.clone());
    s.set_flag("splits", args.splits.clone());
    s.set_flag("learn-size", args.learn_size.clone());
    s.set_flag("test-size", args.test_size.clone());
    s.set_flag("seed", args.seed.clone());
    s.set_flag("out", args.out.clone());
    s.set_flag("task", args.task.clone());
    s.set_flag("n-list", args.n_list.clone());
    s.set_flag("replicates", args.replicates.clone());
    Ok(s)
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests are not errors.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let outcome = match &cli.command {
        Command::Fit(a) => settings_from(a).and_then(run_fit),
        Command::Predict(a) => settings_from(a).and_then(run_predict),
        Command::SelectAlpha(a) => settings_from(a).and_then(run_select_alpha),
        Command::Benchmark(a) => settings_from(a).and_then(run_benchmark),
        Command::SynthStudy(a) => settings_from(a).and_then(run_synth_study),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

/// 1 for usage/config problems, 2 for data problems, 3 for numerical ones.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidArgument(_) => 1,
        Error::Numerical(_) => 3,
        Error::PointOutsideDomain { .. }
        | Error::DimensionMismatch(_)
        | Error::Data(_)
        | Error::Serialization(_) => 2,
    }
}

fn parse_task(settings: &Settings) -> Result<Task> {
    match settings.get("task").unwrap_or("regression") {
        "regression" => Ok(Task::Regression),
        "classification" => Ok(Task::Classification),
        other => Err(Error::InvalidArgument(format!(
            "field `task`: expected `regression` or `classification`, got `{other}`"
        ))),
    }
}

/// Canonical method name, case-insensitively.
fn canonical_method(name: &str) -> Result<&'static str> {
    match name.trim().to_lowercase().as_str() {
        "sir-nnr" => Ok("SIR-NNr"),
        "sir-nnp" => Ok("SIR-NNp"),
        "pca-nn" => Ok("PCA-NN"),
        "sir-l" => Ok("SIR-L"),
        "sir-k" => Ok("SIR-K"),
        other => Err(Error::InvalidArgument(format!(
            "unknown method `{other}`; valid methods: SIR-NNr, SIR-NNp, PCA-NN, SIR-L, SIR-K"
        ))),
    }
}

/// Build a method from its scoped parameters, naming any missing one.
fn parse_method(settings: &Settings, name: &str) -> Result<Method> {
    let canon = canonical_method(name)?;
    Ok(match canon {
        "SIR-NNr" => Method::SirNnr {
            alpha: settings.require_scoped(canon, "alpha")?,
            q: settings.require_scoped(canon, "q")?,
            q2: settings.require_scoped(canon, "q2")?,
        },
        "SIR-NNp" => Method::SirNnp {
            k_n: settings.require_scoped(canon, "kn")?,
            q: settings.require_scoped(canon, "q")?,
            q2: settings.require_scoped(canon, "q2")?,
        },
        "PCA-NN" => Method::PcaNn {
            k_n: settings.require_scoped(canon, "kn")?,
            q2: settings.require_scoped(canon, "q2")?,
        },
        "SIR-L" => Method::SirL {
            alpha: settings.require_scoped(canon, "alpha")?,
            q: settings.require_scoped(canon, "q")?,
        },
        "SIR-K" => Method::SirK {
            alpha: settings.require_scoped(canon, "alpha")?,
            q: settings.require_scoped(canon, "q")?,
            bandwidth: settings.require_scoped(canon, "bandwidth")?,
        },
        _ => unreachable!(),
    })
}

fn fill_spec(settings: &Settings, method: Method) -> Result<FitSpec> {
    let mut spec = FitSpec::new(method);
    if let Some(k) = settings.parsed::<usize>("knots")? {
        spec.n_interior_knots = Some(k);
    }
    spec.order = settings.parsed_or("order", spec.order)?;
    spec.n_slices = settings.parsed_or("slices", spec.n_slices)?;
    Ok(spec)
}

fn run_fit(settings: Settings) -> Result<()> {
    let data_path: String = settings.require("data")?;
    let task = parse_task(&settings)?;
    let method = parse_method(&settings, &settings.require::<String>("method")?)?;
    let spec = fill_spec(&settings, method)?;
    let seed: u64 = settings.parsed_or("seed", 0)?;
    let data = io::read_dataset(Path::new(&data_path), task)?;
    let out = settings.get("out").unwrap_or("fit").to_string();
    let (model, report) = pipeline::fit_pipeline(&data, &spec, seed)?;
    let model_path = format!("{out}.model.json");
    let report_path = format!("{out}.report.txt");
    pipeline::save_model(&model, Path::new(&model_path))?;
    io::write_text(Path::new(&report_path), &render_report(&model, &report, data.n()))?;
    println!("wrote {model_path}");
    println!("wrote {report_path}");
    Ok(())
}

fn render_report(model: &PipelineModel, report: &FitReport, n: usize) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "method: {}", report.method);
    let _ = writeln!(
        s,
        "task: {}",
        match model.task {
            Task::Regression => "regression",
            Task::Classification => "classification",
        }
    );
    let _ = writeln!(s, "observations: {n}");
    let _ = writeln!(s, "grid points: {}", model.grid.len());
    let _ = writeln!(s, "basis dimension: {}", model.edr.basis.dim());
    let _ = writeln!(s, "slices: {}", model.n_slices);
    let _ = writeln!(s, "seed: {}", model.seed);
    let _ = writeln!(s, "penalty weight: {}", model.edr.alpha);
    let _ = writeln!(s, "eigenvalues:");
    for (i, l) in report.eigenvalues.iter().enumerate() {
        let _ = writeln!(s, "  {}: {}", i + 1, l);
    }
    let _ = writeln!(
        s,
        "train error: {} ({})",
        report.train_error,
        match model.task {
            Task::Regression => "root mean squared error",
            Task::Classification => "misclassification rate",
        }
    );
    if let Some(h) = &report.mlp {
        let _ = writeln!(s, "perceptron restarts: {} (selected {})", h.records.len(), h.selected);
        let _ = writeln!(s, "  restart  epochs  best_epoch  best_val  test_loss  diverged");
        for (i, r) in h.records.iter().enumerate() {
            let _ = writeln!(
                s,
                "  {}  {}  {}  {}  {}  {}",
                i,
                r.train_curve.len().saturating_sub(1),
                r.best_epoch,
                r.best_val,
                r.test_loss,
                r.diverged
            );
        }
    }
    s
}

fn run_predict(settings: Settings) -> Result<()> {
    let model_path: String = settings.require("model")?;
    let model = pipeline::load_model(Path::new(&model_path))?;
    let data_path: String = settings.require("data")?;
    let (grid, curves) = io::read_curves(Path::new(&data_path))?;
    let mismatch = grid.len() != model.grid.len()
        || grid
            .iter()
            .zip(&model.grid)
            .any(|(a, b)| (a - b).abs() > 1e-9 * b.abs().max(1.0));
    if mismatch {
        return Err(Error::Data(format!(
            "the input grid does not match the grid the model was fitted on\n  model grid \
             ({} points): {}\n  input grid ({} points): {}",
            model.grid.len(),
            join_numbers(&model.grid),
            grid.len(),
            join_numbers(&grid)
        )));
    }
    let out = settings.get("out").unwrap_or("predictions.csv").to_string();
    let mut text = String::new();
    match pipeline::predict(&model, &grid, &curves)? {
        Response::Regression(preds) => {
            text.push_str("prediction\n");
            for p in preds {
                let _ = writeln!(text, "{p}");
            }
        }
        Response::Classification(labels) => {
            let scores = pipeline::predict_scores(&model, &grid, &curves)?;
            text.push_str("label");
            for j in 0..scores.ncols() {
                let _ = write!(text, ",score_{}", j + 1);
            }
            text.push('\n');
            for (i, label) in labels.iter().enumerate() {
                let _ = write!(text, "{label}");
                for j in 0..scores.ncols() {
                    let _ = write!(text, ",{}", scores[(i, j)]);
                }
                text.push('\n');
            }
        }
    }
    io::write_text(Path::new(&out), &text)?;
    println!("wrote {out}");
    Ok(())
}

fn join_numbers(values: &[f64]) -> String {
    let pieces: Vec<String> = values.iter().map(|v| v.to_string()).collect();
    pieces.join(",")
}

fn run_select_alpha(settings: Settings) -> Result<()> {
    let data_path: String = settings.require("data")?;
    let task = parse_task(&settings)?;
    let canon = canonical_method(&settings.require::<String>("method")?)?;
    let q: usize = settings.require_scoped(canon, "q")?;
    let downstream = match canon {
        "SIR-NNr" => Downstream::Mlp { q2: settings.require_scoped(canon, "q2")? },
        "SIR-L" => Downstream::Linear,
        "SIR-K" => Downstream::Kernel { bandwidth: settings.require_scoped(canon, "bandwidth")? },
        other => {
            return Err(Error::InvalidArgument(format!(
                "alpha selection applies to the penalized methods SIR-NNr, SIR-L, and SIR-K, \
                 not {other}"
            )))
        }
    };
    let alphas: Vec<f64> = match settings.get_scoped(canon, "alpha") {
        Some(raw) => parse_list("alpha", raw)?,
        None => DEFAULT_ALPHA_GRID.to_vec(),
    };
    let split_fraction: f64 = settings.parsed_or("split-fraction", 0.75)?;
    let n_slices: usize = settings.parsed_or("slices", 10)?;
    let seed: u64 = settings.parsed_or("seed", 0)?;
    let order: usize = settings.parsed_or("order", 4)?;
    let data = io::read_dataset(Path::new(&data_path), task)?;
    let interior = match settings.parsed::<usize>("knots")? {
        Some(k) => k,
        None => 40.min(data.d().saturating_sub(order)),
    };
    let grid = data.grid();
    let sbasis = basis::make_basis((grid[0], grid[grid.len() - 1]), interior, order)?;
    let (best, table) =
        fsir::edr::select_alpha(&data, &sbasis, &alphas, q, &downstream, split_fraction, n_slices, seed)?;
    let out = settings.get("out").unwrap_or("alpha").to_string();
    let mut csv = String::from("alpha,validation_error\n");
    for t in &table {
        let _ = writeln!(csv, "{},{}", t.alpha, t.validation_error);
    }
    let csv_path = format!("{out}.alphas.csv");
    io::write_text(Path::new(&csv_path), &csv)?;
    let json = serde_json::json!({
        "method": canon,
        "q": q,
        "split_fraction": split_fraction,
        "best_alpha": best,
        "trials": table,
    });
    let json_path = format!("{out}.selection.json");
    io::write_text(Path::new(&json_path), &format!("{:#}\n", json))?;
    println!("best alpha: {best}");
    println!("wrote {csv_path}");
    println!("wrote {json_path}");
    Ok(())
}

fn run_benchmark(settings: Settings) -> Result<()> {
    let data_path: String = settings.require("data")?;
    let task = parse_task(&settings)?;
    let method_list: String = settings.require("method")?;
    let mut specs = Vec::new();
    for name in method_list.split(',') {
        let method = parse_method(&settings, name)?;
        specs.push(fill_spec(&settings, method)?);
    }
    let n_splits: usize = settings.require("splits")?;
    let learn: usize = settings.require("learn-size")?;
    let test: usize = settings.require("test-size")?;
    let seed: u64 = settings.parsed_or("seed", 0)?;
    let data = io::read_dataset(Path::new(&data_path), task)?;
    let results = pipeline::benchmark(&data, &specs, n_splits, learn, test, seed)?;
    let out = settings.get("out").unwrap_or("benchmark").to_string();
    let csv_path = format!("{out}.splits.csv");
    let json_path = format!("{out}.summary.json");
    io::write_text(Path::new(&csv_path), &results.to_csv_string())?;
    io::write_text(Path::new(&json_path), &results.summary_json()?)?;
    for s in &results.summaries {
        println!(
            "{}: mean {} sd {} (min {}, max {})",
            s.method, s.mean, s.sd, s.min, s.max
        );
    }
    println!("wrote {csv_path}");
    println!("wrote {json_path}");
    Ok(())
}

fn parse_link(raw: &str) -> Result<Link> {
    match raw.trim().to_lowercase().as_str() {
        "linear" => Ok(Link::Linear),
        "sine" => Ok(Link::SineOfScore),
        "product" => Ok(Link::ProductOfScores),
        other => Err(Error::InvalidArgument(format!(
            "field `link`: expected linear, sine, or product, got `{other}`"
        ))),
    }
}

fn run_synth_study(settings: Settings) -> Result<()> {
    let n_list: Vec<usize> = parse_list("n-list", &settings.require::<String>("n-list")?)?;
    let replicates: usize = settings.require("replicates")?;
    let order: usize = settings.parsed_or("order", 4)?;
    let knots: usize = settings.parsed_or("knots", 6)?;
    let lo: f64 = settings.parsed_or("domain-lo", 0.0)?;
    let hi: f64 = settings.parsed_or("domain-hi", 1.0)?;
    let sbasis = basis::make_basis((lo, hi), knots, order)?;
    let q_star: usize = settings.parsed_or("q-star", 1)?;
    let eps: f64 = settings.parsed_or("direction-eps", 1.0)?;
    let dir_seed: u64 = settings.parsed_or("direction-seed", 77)?;
    let directions = synth::smooth_directions(&sbasis, q_star, eps, dir_seed)?;
    let spectrum: Vec<f64> = match settings.get("spectrum") {
        Some(raw) => parse_list("spectrum", raw)?,
        None => (0..sbasis.dim()).map(|i| 1.0 / ((i + 1) * (i + 1)) as f64).collect(),
    };
    let spec = SynthSpec {
        basis: sbasis,
        true_directions: directions,
        link: parse_link(settings.get("link").unwrap_or("linear"))?,
        noise_sd: settings.parsed_or("noise-sd", 0.1)?,
        covariance_spectrum: spectrum,
        n: 0,
        grid_size: settings.parsed_or("grid-size", 50)?,
        n_classes: settings.parsed::<usize>("n-classes")?,
        seed: 0,
    };
    let cfg = StudyConfig {
        spec,
        fit_q: settings.parsed_or("q", 1)?,
        n_slices: settings.parsed_or("slices", 10)?,
        alpha_c: settings.parsed_or("alpha", 0.5)?,
    };
    let seed: u64 = settings.parsed_or("seed", 0)?;
    let table = synth::consistency_study(&cfg, &n_list, replicates, seed)?;
    let out = settings.get("out").unwrap_or("study").to_string();
    let csv_path = format!("{out}.study.csv");
    let json_path = format!("{out}.summary.json");
    io::write_text(Path::new(&csv_path), &table.to_csv_string())?;
    io::write_text(Path::new(&json_path), &table.summary_json()?)?;
    for (n, median) in &table.medians {
        println!("n = {n}: median error {median}");
    }
    println!("wrote {csv_path}");
    println!("wrote {json_path}");
    Ok(())
}
