//! `loadfeat`: the feature discovery pipeline as a command-line tool.
//!
//! Exit codes: 0 success, 1 validation error, 2 runtime error, 64 usage.

mod commands;
mod config;
mod report;

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use loadfeat_core::artifact::TOOL_VERSION;

use config::RunConfig;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "validation error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<loadfeat_core::Error> for CliError {
    fn from(e: loadfeat_core::Error) -> Self {
        if e.is_validation() {
            CliError::Validation(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "loadfeat", version, about = "Feature discovery, identification and analysis for power demand forecasting")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set identify.kbest_threshold=12`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,
    /// Run seed for synthesis, imputation, sampling, and model fits.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Text corpus stages.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Feature store stages.
    #[command(subcommand)]
    Db(DbCmd),
    /// Dominant dimension and feature identification.
    #[command(subcommand)]
    Identify(IdentifyCmd),
    /// Feature scheme benchmarks.
    #[command(subcommand)]
    Forecast(ForecastCmd),
    /// Sensitivity, partial dependence, and lag analysis.
    #[command(subcommand)]
    Analyze(AnalyzeCmd),
    /// Bundle every artifact under the output directory into report/index.html.
    Report,
    /// Run every stage in order, then the report.
    Pipeline,
    /// Print the effective configuration as JSON.
    Config,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum CorpusCmd {
    /// Rank corpus words against the anchor word (dcw_ranking.csv).
    Score,
    /// Cluster the kept words into dimensions (clusters.csv).
    Cluster,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum DbCmd {
    /// Read the manifest and per-feature CSVs into 4dmstd_raw.csv.
    Ingest,
    /// Fill missing cells of the raw store into 4dmstd.csv.
    Impute,
    /// Generate the synthetic per-feature CSVs, manifest, and ground truth.
    Synth,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum IdentifyCmd {
    /// Grouped Shapley attribution per dimension.
    Dims,
    /// Variance filter plus F-score selection.
    Features,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum ForecastCmd {
    /// Fit every model on every scheme and compare test metrics.
    Compare,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum AnalyzeCmd {
    /// Sobol indices over dimension aggregates.
    Sobol,
    /// Partial dependence curves.
    Pdp,
    /// Lagged correlation against the target.
    Lag,
}

impl Command {
    fn label(&self) -> String {
        match self {
            Command::Corpus(c) => format!("corpus {}", format!("{c:?}").to_lowercase()),
            Command::Db(c) => format!("db {}", format!("{c:?}").to_lowercase()),
            Command::Identify(c) => format!("identify {}", format!("{c:?}").to_lowercase()),
            Command::Forecast(c) => format!("forecast {}", format!("{c:?}").to_lowercase()),
            Command::Analyze(c) => format!("analyze {}", format!("{c:?}").to_lowercase()),
            Command::Report => "report".into(),
            Command::Pipeline => "pipeline".into(),
            Command::Config => "config".into(),
        }
    }
}

fn effective_config(g: &GlobalArgs) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(g.config.as_deref())?.with_overrides(&g.sets)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(t) = g.threads {
        cfg.threads = t;
    }
    if let Some(o) = &g.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cmd: &Command, ctx: &commands::Ctx) -> Result<Vec<PathBuf>, CliError> {
    use commands as c;
    match cmd {
        Command::Corpus(CorpusCmd::Score) => c::corpus_score(ctx),
        Command::Corpus(CorpusCmd::Cluster) => c::corpus_cluster(ctx),
        Command::Db(DbCmd::Synth) => c::db_synth(ctx),
        Command::Db(DbCmd::Ingest) => c::db_ingest(ctx),
        Command::Db(DbCmd::Impute) => c::db_impute(ctx),
        Command::Identify(IdentifyCmd::Features) => c::identify_features(ctx),
        Command::Identify(IdentifyCmd::Dims) => c::identify_dims(ctx),
        Command::Forecast(ForecastCmd::Compare) => c::forecast_compare(ctx),
        Command::Analyze(AnalyzeCmd::Sobol) => c::analyze_sobol(ctx),
        Command::Analyze(AnalyzeCmd::Pdp) => c::analyze_pdp(ctx),
        Command::Analyze(AnalyzeCmd::Lag) => c::analyze_lag(ctx),
        Command::Report => report::write_report(ctx),
        Command::Pipeline => c::pipeline(ctx),
        Command::Config => {
            let text = serde_json::to_string_pretty(&ctx.cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
            // A closed pipe (e.g. `| head`) is not an error.
            let _ = writeln!(std::io::stdout(), "{text}");
            Ok(Vec::new())
        }
    }
}

fn append_runlog(out: &Path, entry: serde_json::Value) -> std::io::Result<()> {
    std::fs::create_dir_all(out)?;
    let mut f = OpenOptions::new().create(true).append(true).open(out.join("runlog.jsonl"))?;
    writeln!(f, "{entry}")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(64),
            };
        }
    };
    let cfg = match effective_config(&cli.global) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("loadfeat: {e}");
            return ExitCode::from(e.code());
        }
    };
    if cfg.threads > 0 {
        // Fails only if a pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    let label = cli.command.label();
    let ctx = commands::Ctx::new(cfg);
    let started = Instant::now();
    let result = dispatch(&cli.command, &ctx);
    let code = result.as_ref().map_or_else(CliError::code, |_| 0);
    if !matches!(cli.command, Command::Config) {
        let artifacts: Vec<String> = result
            .as_ref()
            .map(|paths| paths.iter().map(|p| ctx.relative(p)).collect())
            .unwrap_or_default();
        let entry = serde_json::json!({
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "tool": TOOL_VERSION,
            "command": label,
            "config_hash": ctx.cfg.hash(),
            "seed": ctx.cfg.seed,
            "exit_code": code,
            "elapsed_ms": started.elapsed().as_millis() as u64,
            "artifacts": artifacts,
            "error": result.as_ref().err().map(|e| e.to_string()),
        });
        if let Err(e) = append_runlog(&ctx.cfg.out_dir, entry) {
            eprintln!("loadfeat: cannot append runlog: {e}");
        }
    }
    match result {
        Ok(paths) => {
            let mut stdout = std::io::stdout().lock();
            for p in &paths {
                let _ = writeln!(stdout, "wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("loadfeat {label}: {e}");
            ExitCode::from(code)
        }
    }
}
