//! Pipeline driver: synth -> qrm -> features -> train -> tune -> evaluate,
//! plus the estimate-only baseline and report printing. Every subcommand is
//! deterministic given the same inputs, config, and seeds.

use clap::{Parser, Subcommand};
use optcast_core::cnn::{self, CnnConfig, TrainingTrace};
use optcast_core::config::{ConfigError, PipelineConfig};
use optcast_core::features::{self, FeatureError, LabeledExample, Partition};
use optcast_core::market::{self, MarketError, OptionQuoteRow};
use optcast_core::pipeline;
use optcast_core::strategy::{self, StrategyError};
use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "optcast", version, about = "Next-day option-direction forecasting pipeline")]
struct Cli {
    /// Config file of `dotted.key = value` lines; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides every stage seed (market generation, split, model init).
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads for the per-option solver stage.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,
    /// Overwrite existing report outputs.
    #[arg(long, global = true)]
    force: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic quotes CSV.
    Synth {
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Solve per-option estimates and append them to the quotes CSV.
    Qrm {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Build the labeled, partitioned feature set from solved quotes.
    Features {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
    /// Train the classifier on the train partition.
    Train {
        #[arg(long, value_name = "FILE")]
        features: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        /// Loss-trace CSV; defaults to `<model>.trace.csv`.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Pick the decision threshold on the validation partition and store it
    /// in the model file.
    Tune {
        #[arg(long, value_name = "FILE")]
        features: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
    },
    /// Score the trained model on the test partition and write report files.
    /// Refuses to overwrite an existing report without --force.
    Evaluate {
        #[arg(long, value_name = "FILE")]
        features: PathBuf,
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
        /// Training trace to copy into the report, as written by train.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Score the estimate-only buy rule on solved quotes.
    Baseline {
        #[arg(long, value_name = "FILE")]
        input: PathBuf,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
    /// Print the tables of an existing report directory.
    Report {
        #[arg(long, value_name = "DIR")]
        dir: PathBuf,
    },
}

/// Exit-code contract: 0 success, 2 config error, 3 input error, 4 missing
/// prerequisite column.
#[derive(Debug)]
enum CliError {
    Config(String),
    Input(String),
    MissingPrereq(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Input(_) => 3,
            CliError::MissingPrereq(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Input(m) | CliError::MissingPrereq(m) => m,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<MarketError> for CliError {
    fn from(e: MarketError) -> Self {
        match e {
            MarketError::MissingColumn(_) => CliError::MissingPrereq(e.to_string()),
            MarketError::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        match e {
            FeatureError::MissingField(_) | FeatureError::MissingQuotes => {
                CliError::MissingPrereq(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<cnn::CnnError> for CliError {
    fn from(e: cnn::CnnError) -> Self {
        match e {
            cnn::CnnError::InvalidConfig(_) => CliError::Config(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::MissingEstimate | StrategyError::MissingQuotes => {
                CliError::MissingPrereq(e.to_string())
            }
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn load_config(cli: &Cli) -> Result<PipelineConfig, CliError> {
    let mut config = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.synth.seed = seed;
        config.features.split_seed = seed;
        config.cnn.seed = seed;
    }
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("workers must be positive".to_string()));
        }
        config.qrm.workers = workers;
    }
    Ok(config)
}

fn open_input(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn create_output(path: &Path) -> Result<File, CliError> {
    File::create(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Parses a quotes CSV, logging parse-level rejects to stderr; errors when
/// no data rows survive.
fn read_quotes(path: &Path) -> Result<Vec<OptionQuoteRow>, CliError> {
    let outcome = market::parse_quotes(open_input(path)?)?;
    for r in &outcome.rejected {
        eprintln!("skipping row {} ({}): {}", r.row, r.option_name, r.reason);
    }
    if outcome.accepted.is_empty() {
        return Err(CliError::Input(format!("{}: no usable data rows", path.display())));
    }
    Ok(outcome.accepted)
}

fn cmd_synth(config: &PipelineConfig, out: &Path) -> Result<(), CliError> {
    let rows = market::generate_synthetic(&config.synth)?;
    market::write_quotes(&rows, create_output(out)?)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn cmd_qrm(config: &PipelineConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let rows = read_quotes(input)?;
    let (rows, skipped) = pipeline::fill_estimates(rows, &config.qrm.solver, config.qrm.workers)
        .map_err(|e| CliError::Input(e.to_string()))?;
    for s in &skipped {
        eprintln!("no estimate for {}: {}", s.option_name, s.reason);
    }
    market::write_quotes_extended(&rows, create_output(out)?)?;
    eprintln!("solved {} of {} rows", rows.len() - skipped.len(), rows.len());
    Ok(())
}

fn cmd_features(config: &PipelineConfig, input: &Path, out: &Path) -> Result<(), CliError> {
    let rows = read_quotes(input)?;
    let examples = rows
        .iter()
        .map(features::build_example)
        .collect::<Result<Vec<_>, _>>()?;
    let examples =
        features::split(examples, config.features.split_seed, config.features.split_mode)?;
    features::write_features(&examples, create_output(out)?)?;
    eprintln!("wrote {} examples to {}", examples.len(), out.display());
    Ok(())
}

fn partition(examples: &[LabeledExample], which: Partition) -> Vec<cnn::Sample> {
    examples
        .iter()
        .filter(|e| e.group == which)
        .map(|e| (e.features.values, e.label))
        .collect()
}

fn cnn_config(config: &PipelineConfig) -> CnnConfig {
    let mut c = CnnConfig::new(config.cnn.variant);
    if let Some(channels) = &config.cnn.channels {
        c.channels = channels.clone();
    }
    c.learning_rate = config.cnn.lr;
    c.epochs = config.cnn.epochs;
    c.seed = config.cnn.seed;
    c
}

fn write_trace(trace: &TrainingTrace, path: &Path) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(create_output(path)?);
    w.write_record(["epoch", "train_loss", "validation_loss"])
        .map_err(|e| CliError::Input(e.to_string()))?;
    for (i, l) in trace.train_loss.iter().enumerate() {
        let val = trace.validation_loss.get(i).map(|v| format!("{v}")).unwrap_or_default();
        w.write_record([format!("{i}"), format!("{l}"), val])
            .map_err(|e| CliError::Input(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn read_trace(path: &Path) -> Result<TrainingTrace, CliError> {
    let mut r = csv::Reader::from_reader(open_input(path)?);
    let mut trace = TrainingTrace::default();
    for record in r.records() {
        let record = record.map_err(|e| CliError::Input(e.to_string()))?;
        let train: f64 = record
            .get(1)
            .unwrap_or("")
            .parse()
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        trace.train_loss.push(train);
        if let Some(v) = record.get(2).filter(|v| !v.is_empty()) {
            trace.validation_loss.push(
                v.parse().map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?,
            );
        }
    }
    Ok(trace)
}

fn cmd_train(
    config: &PipelineConfig,
    features_path: &Path,
    model_path: &Path,
    trace_path: Option<&Path>,
) -> Result<(), CliError> {
    let examples = features::read_features(open_input(features_path)?)?;
    let train_set = partition(&examples, Partition::Train);
    let validation = partition(&examples, Partition::Validation);
    if train_set.is_empty() {
        return Err(CliError::Input("no training examples in features file".to_string()));
    }
    let cnn_config = cnn_config(config);
    let model = cnn::init(&cnn_config, cnn_config.seed)?;
    let validation_ref = (!validation.is_empty()).then_some(validation.as_slice());
    let (model, trace) = cnn::train(model, &train_set, validation_ref, cnn_config.epochs)?;
    cnn::save_model(&model, create_output(model_path)?)?;
    let default_trace = PathBuf::from(format!("{}.trace.csv", model_path.display()));
    write_trace(&trace, trace_path.unwrap_or(&default_trace))?;
    if let Some(last) = trace.train_loss.last() {
        eprintln!("trained {} epochs, final train loss {last}", trace.train_loss.len());
    }
    Ok(())
}

fn cmd_tune(features_path: &Path, model_path: &Path) -> Result<(), CliError> {
    let mut model = cnn::load_model(open_input(model_path)?)?;
    let examples = features::read_features(open_input(features_path)?)?;
    let validation = partition(&examples, Partition::Validation);
    if validation.is_empty() {
        return Err(CliError::Input("no validation examples in features file".to_string()));
    }
    let threshold = cnn::tune_threshold(&model, &validation);
    model.threshold = Some(threshold);
    cnn::save_model(&model, create_output(model_path)?)?;
    println!("threshold = {threshold}");
    Ok(())
}

/// The test-once discipline: an existing report blocks re-evaluation unless
/// the caller forces it.
fn check_report_dir(out: &Path, force: bool) -> Result<(), CliError> {
    if !force && out.join("metrics.csv").exists() {
        return Err(CliError::Input(format!(
            "report already exists in {}; pass --force to overwrite",
            out.display()
        )));
    }
    Ok(())
}

fn cmd_evaluate(
    features_path: &Path,
    model_path: &Path,
    out: &Path,
    trace_path: Option<&Path>,
    force: bool,
) -> Result<(), CliError> {
    check_report_dir(out, force)?;
    let model = cnn::load_model(open_input(model_path)?)?;
    let examples = features::read_features(open_input(features_path)?)?;
    let test_set = partition(&examples, Partition::Test);
    if test_set.is_empty() {
        return Err(CliError::Input("no test examples in features file".to_string()));
    }
    let threshold = model.threshold.unwrap_or(0.5);
    let decisions: Vec<u8> =
        test_set.iter().map(|(x, _)| cnn::predict(&model, x, threshold)).collect();
    let labels: Vec<u8> = test_set.iter().map(|&(_, y)| y).collect();
    let report = strategy::evaluate("CNN Approach", &decisions, &labels, threshold)?;
    let trace = match trace_path {
        Some(p) => read_trace(p)?,
        None => TrainingTrace::default(),
    };
    strategy::report_tables(&[report], &trace, out, std::io::stdout().lock())?;
    Ok(())
}

fn cmd_baseline(input: &Path, out: &Path, force: bool) -> Result<(), CliError> {
    check_report_dir(out, force)?;
    let rows = read_quotes(input)?;
    let mut decisions = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for row in &rows {
        let mean_0 = row.option_mean_0();
        decisions.push(strategy::qrm_decision(row.est_p1, mean_0)?);
        let mean_p1 = row
            .option_mean_p1
            .ok_or_else(|| CliError::MissingPrereq("missing option_mean_p1 value".to_string()))?;
        let mean_0 =
            mean_0.ok_or_else(|| CliError::MissingPrereq("missing day-0 quotes".to_string()))?;
        labels.push(u8::from(mean_p1 > mean_0));
    }
    let report = strategy::evaluate("QRM", &decisions, &labels, 0.5)?;
    strategy::report_tables(&[report], &TrainingTrace::default(), out, std::io::stdout().lock())?;
    Ok(())
}

fn cmd_report(dir: &Path) -> Result<(), CliError> {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    for name in ["metrics.csv", "profits.csv", "confusion.csv", "loss_trace.csv"] {
        let path = dir.join(name);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        // tolerate a closed pipe on the reading side
        if writeln!(out, "# {name}\n{text}").is_err() {
            return Ok(());
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config = load_config(cli)?;
    match &cli.command {
        Command::Synth { out } => cmd_synth(&config, out),
        Command::Qrm { input, out } => cmd_qrm(&config, input, out),
        Command::Features { input, out } => cmd_features(&config, input, out),
        Command::Train { features, model, trace } => {
            cmd_train(&config, features, model, trace.as_deref())
        }
        Command::Tune { features, model } => cmd_tune(features, model),
        Command::Evaluate { features, model, out, trace } => {
            cmd_evaluate(features, model, out, trace.as_deref(), cli.force)
        }
        Command::Baseline { input, out } => cmd_baseline(input, out, cli.force),
        Command::Report { dir } => cmd_report(dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
