use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use artq::model_file::resolve_models;
use artq::report::{compare, write_comparisons};
use artq::simulation::{
    measure, FailureModel, MeasureKind, SimConfig, SimStrategy, StringGenerator, DEFAULT_ALPHABET,
    DEFAULT_F_CAP, DEFAULT_P_TESTS, DEFAULT_RSE_THRESHOLD,
};
use artq::webgen::{
    read_summary, run_campaign, write_campaign, Budget, CampaignConfig, Technique, DEFAULT_MAX_EXECUTIONS,
    DEFAULT_Q, DEFAULT_REPS, DEFAULT_W,
};
use artq_core::nav::DEFAULT_MAX_WALK_LEN;
use artq_core::{breakeven_factor, Algorithm, RunOptions, TokenMode};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "artq", version, about = "Adaptive random testing with q-gram aggregation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// String-input simulation: P-, F- or T-measure of one strategy.
    Simulate(SimulateArgs),
    /// Coverage campaign over navigation models.
    Webgen(WebgenArgs),
    /// Pairwise Wilcoxon p-values and Vargha-Delaney effect sizes from a
    /// campaign summary.
    Report(ReportArgs),
    /// Minimum execution-to-selection time ratio for ART to pay off.
    Breakeven(BreakevenArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    SequenceOnly,
    SequencePlusInputs,
    Characters,
}

impl From<ModeArg> for TokenMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::SequenceOnly => TokenMode::SequenceOnly,
            ModeArg::SequencePlusInputs => TokenMode::SequencePlusInputs,
            ModeArg::Characters => TokenMode::Characters,
        }
    }
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Maximum string length.
    #[arg(long = "L", default_value_t = 100)]
    max_len: usize,
    #[arg(long, default_value = "rand")]
    strategy: SimStrategy,
    /// P, F or T.
    #[arg(long, default_value = "F")]
    measure: MeasureKind,
    /// Delay injected into every execution, in milliseconds.
    #[arg(long, default_value_t = 0.0)]
    delay_ms: f64,
    /// Candidate-set size.
    #[arg(long = "W", default_value_t = 10)]
    w: usize,
    /// q-gram length.
    #[arg(long = "Q", default_value_t = 2)]
    q: usize,
    #[arg(long, value_enum, default_value = "characters")]
    mode: ModeArg,
    /// `length1` or `qgram-region:<prefix>:<maxlen>`.
    #[arg(long, default_value = "length1")]
    failure_model: FailureModel,
    #[arg(long, default_value = DEFAULT_ALPHABET)]
    alphabet: String,
    #[arg(long, default_value_t = DEFAULT_RSE_THRESHOLD)]
    rse_threshold: f64,
    /// Repetitions added per round of the RSE stopping rule.
    #[arg(long, default_value_t = 30)]
    batch: u64,
    #[arg(long, default_value_t = 2_000)]
    max_reps: u64,
    /// Tests per repetition of the P-measure.
    #[arg(long, default_value_t = DEFAULT_P_TESTS)]
    p_tests: u64,
    /// Execution cap per repetition of the F- and T-measures.
    #[arg(long, default_value_t = DEFAULT_F_CAP)]
    cap: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Run T-measure repetitions in parallel instead of one at a time.
    #[arg(long)]
    parallel_t: bool,
    /// Output file; `.json` writes JSON, anything else CSV. Defaults to CSV
    /// on standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the full record of the first repetition as JSON.
    #[arg(long)]
    run_json: Option<PathBuf>,
}

#[derive(clap::Args)]
struct WebgenArgs {
    /// `bundled`, bundled model names, model files or directories of them.
    #[arg(long, num_args = 1.., default_value = "bundled")]
    models: Vec<String>,
    /// Comma-separated; `dist` must be named explicitly.
    #[arg(long, value_delimiter = ',', default_value = "rand,qgrams_s,qgrams_si")]
    techniques: Vec<Technique>,
    #[arg(long, default_value_t = DEFAULT_REPS)]
    reps: usize,
    #[arg(long, conflicts_with = "budget_secs")]
    max_executions: Option<u64>,
    /// Wall-clock budget per run instead of an execution budget.
    #[arg(long)]
    budget_secs: Option<f64>,
    #[arg(long = "W", default_value_t = DEFAULT_W)]
    w: usize,
    #[arg(long = "Q", default_value_t = DEFAULT_Q)]
    q: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_WALK_LEN)]
    max_walk_len: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "webgen-out")]
    out_dir: PathBuf,
}

#[derive(clap::Args)]
struct ReportArgs {
    /// A `summary.csv` file or the campaign output directory.
    input: PathBuf,
    /// Output CSV; standard output by default.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct BreakevenArgs {
    #[arg(long)]
    theta: f64,
    #[arg(long = "W", default_value_t = 10)]
    w: usize,
}

#[derive(Serialize)]
struct SimulateRow {
    strategy: String,
    #[serde(rename = "L")]
    max_len: usize,
    theta_nominal: f64,
    measure: String,
    value: f64,
    rse: Option<f64>,
    reps: usize,
    seed: u64,
    distance_calls: u64,
    diversity_evals: u64,
}

fn simulate(args: SimulateArgs) -> Result<()> {
    let mut generator = StringGenerator::new(args.max_len, &args.alphabet)?;
    generator.allow_empty = false;
    let config = SimConfig {
        strategy: args.strategy,
        generator,
        failure: args.failure_model.clone(),
        w: args.w,
        q: args.q,
        mode: args.mode.into(),
        delay: Duration::from_secs_f64(args.delay_ms / 1000.0),
        p_tests: args.p_tests,
        cap: args.cap,
    };
    if let Some(path) = &args.run_json {
        let (record, _) = config.run_once(args.measure, args.seed, RunOptions::default())?;
        fs::write(path, serde_json::to_string_pretty(&record)?).with_context(|| path.display().to_string())?;
    }
    let record = measure(
        &config,
        args.measure,
        args.seed,
        args.rse_threshold,
        args.batch,
        args.max_reps,
        args.parallel_t,
    )?;
    if record.flagged {
        eprintln!(
            "warning: relative standard error {:?} did not reach {} after {} repetitions",
            record.rse, args.rse_threshold, record.repetitions
        );
    }
    if record.censored > 0 {
        eprintln!("warning: {} repetition(s) hit the execution cap", record.censored);
    }
    let row = SimulateRow {
        strategy: args.strategy.to_string(),
        max_len: args.max_len,
        theta_nominal: config.nominal_theta(),
        measure: args.measure.to_string(),
        value: record.value,
        rse: record.rse,
        reps: record.repetitions,
        seed: args.seed,
        distance_calls: record.distance_calls,
        diversity_evals: record.diversity_evals,
    };
    match &args.out {
        Some(path) if path.extension().is_some_and(|e| e == "json") => {
            #[derive(Serialize)]
            struct Doc<'a> {
                config: &'a SimConfig,
                summary: &'a SimulateRow,
                record: &'a artq::simulation::MeasureRecord,
            }
            let doc = Doc {
                config: &config,
                summary: &row,
                record: &record,
            };
            fs::write(path, serde_json::to_string_pretty(&doc)?).with_context(|| path.display().to_string())?;
        }
        Some(path) => {
            let mut w = csv::Writer::from_path(path).with_context(|| path.display().to_string())?;
            w.serialize(&row)?;
            w.flush()?;
        }
        None => {
            let mut w = csv::Writer::from_writer(io::stdout().lock());
            w.serialize(&row)?;
            w.flush()?;
        }
    }
    Ok(())
}

fn webgen(args: WebgenArgs) -> Result<()> {
    let budget = match (args.max_executions, args.budget_secs) {
        (_, Some(secs)) if secs > 0.0 => Budget::Wall(Duration::from_secs_f64(secs)),
        (_, Some(_)) => bail!("--budget-secs must be positive"),
        (Some(n), None) => Budget::Executions(n),
        (None, None) => Budget::Executions(DEFAULT_MAX_EXECUTIONS),
    };
    let config = CampaignConfig {
        techniques: args.techniques,
        w: args.w,
        q: args.q,
        reps: args.reps,
        budget,
        seed: args.seed,
        max_walk_len: args.max_walk_len,
    };
    let models = args.models.iter().flat_map(|m| resolve_models(m)).collect();
    let campaign = run_campaign(models, &config)?;
    for (model, err) in &campaign.model_errors {
        eprintln!("skipped model {model}: {err}");
    }
    write_campaign(&campaign, &args.out_dir)?;

    let mut out = io::stdout().lock();
    writeln!(out, "model,technique,coverage_pct,auc,auc_at_20,unique_targets,exec_tests,mean_length")?;
    let mut keys: Vec<(&str, Technique)> = campaign.rows.iter().map(|r| (r.model.as_str(), r.technique)).collect();
    keys.dedup();
    for (model, t) in keys {
        let m = |f: fn(&artq::webgen::SummaryRow) -> f64| campaign.mean_of(model, t, f).unwrap_or(f64::NAN);
        writeln!(
            out,
            "{model},{t},{:.2},{:.4},{:.4},{:.2},{:.1},{:.2}",
            m(|r| r.coverage_pct),
            m(|r| r.auc),
            m(|r| r.auc_at_20),
            m(|r| r.unique_targets as f64),
            m(|r| r.exec_tests as f64),
            m(|r| r.mean_length),
        )?;
    }
    if !campaign.model_errors.is_empty() && campaign.rows.is_empty() {
        bail!("no model could be loaded");
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    let input = if args.input.is_dir() {
        args.input.join("summary.csv")
    } else {
        args.input.clone()
    };
    let rows = read_summary(Path::new(&input))?;
    let comparisons = compare(&rows)?;
    match &args.out {
        Some(path) => {
            let f = fs::File::create(path).with_context(|| path.display().to_string())?;
            write_comparisons(f, &comparisons)?;
        }
        None => write_comparisons(io::stdout().lock(), &comparisons)?,
    }
    Ok(())
}

fn breakeven(args: BreakevenArgs) -> Result<()> {
    println!("algorithm,theta,W,factor");
    for (name, algo) in [("dist", Algorithm::Dist), ("qgram", Algorithm::QGram)] {
        let f = breakeven_factor(args.theta, args.w, algo)?;
        println!("{name},{},{},{f:.6e}", args.theta, args.w);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Webgen(a) => webgen(a),
        Command::Report(a) => report(a),
        Command::Breakeven(a) => breakeven(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
