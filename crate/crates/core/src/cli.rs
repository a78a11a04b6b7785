//! Command-line front end.
//!
//! Every subcommand also reads `--config FILE`: one `key = value` per line,
//! keys spelled like the long flags (`max-tokens` or `max_tokens`). Flags
//! given on the command line win over the file.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::campaign::{
    make_provider, run_ablation, run_campaign, run_sweep, Baseline, CampaignConfig, CampaignError, Clock, SweepConfig,
};
use crate::corpus::{read_dir_sorted, CorpusError, STATS_FILE};
use crate::coverage::cmin;
use crate::harness::{self, HarnessError};
use crate::metrics::{CampaignTable, RankTable, SweepReport};
use crate::mutate::chat::{ChatRequestConfig, Endpoint, PromptVariant};
use crate::providers::http::default_model;
use crate::providers::ProviderKind;

#[derive(Debug, Parser)]
#[command(name = "chatfuzz", version, about = "Coverage-guided fuzzing with a chat-model mutator")]
pub struct Cli {
    /// Flat `key = value` file supplying defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one fuzzing campaign
    Fuzz(FuzzArgs),
    /// Minimize a corpus to a subset with the same edge coverage
    Cmin(CminArgs),
    /// Chat mutator alone across a temperature grid
    Sweep(SweepArgs),
    /// Compare the three prompt variants on one endpoint
    Ablate(AblateArgs),
    /// Collect stats.json files under a directory into campaign.csv
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClockArg {
    /// Real time
    Wall,
    /// Deterministic simulated time
    Virtual,
}

impl ClockArg {
    fn clock(self) -> Clock {
        match self {
            ClockArg::Wall => Clock::Wall,
            ClockArg::Virtual => Clock::default(),
        }
    }
}

#[derive(Debug, Args)]
pub struct ProviderArgs {
    /// Generation backend: mock or http
    #[arg(long, default_value = "mock", value_parser = clap::value_parser!(ProviderKind))]
    pub provider: ProviderKind,
    /// HTTP request timeout in seconds
    #[arg(long, default_value_t = 30.0, value_name = "S")]
    pub provider_timeout: f64,
}

#[derive(Debug, Args)]
pub struct RequestArgs {
    /// Sampling temperature in [0, 2] (default depends on the endpoint)
    #[arg(long, value_name = "F")]
    pub temperature: Option<f64>,
    /// Completions requested per call
    #[arg(long, default_value_t = ChatRequestConfig::DEFAULT_N, value_name = "K")]
    pub n: u32,
    /// Token budget per completion
    #[arg(long, default_value_t = ChatRequestConfig::DEFAULT_MAX_TOKENS, value_name = "M")]
    pub max_tokens: u32,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Campaign length in seconds
    #[arg(long, default_value_t = 60.0, value_name = "S")]
    pub duration: f64,
    /// Seconds between AI queue imports
    #[arg(long, default_value_t = crate::campaign::DEFAULT_SYNC_INTERVAL_S, value_name = "S")]
    pub sync_interval: f64,
    /// RNG seed
    #[arg(long, default_value_t = 0, value_name = "R")]
    pub seed: u64,
    /// AFL-style dictionary file
    #[arg(long, value_name = "PATH")]
    pub dict: Option<PathBuf>,
    /// Format name used in prompts (defaults to the target's)
    #[arg(long, value_name = "NAME")]
    pub format: Option<String>,
    /// Maximum provider calls per second
    #[arg(long, value_name = "CALLS")]
    pub chat_rate_limit: Option<f64>,
    /// Time source
    #[arg(long, value_enum, default_value_t = ClockArg::Wall)]
    pub clock: ClockArg,
}

#[derive(Debug, Args)]
pub struct FuzzArgs {
    /// toy-xml, toy-json, toy-script, toy-checksum or cmd:<path>
    #[arg(long, value_name = "T")]
    pub target: String,
    /// Initial seed directory
    #[arg(long = "in", value_name = "DIR")]
    pub input: PathBuf,
    /// Output directory
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// afl, chatfuzz, chatfuzz-f, chatfuzz-c or chatfuzz-cf
    #[arg(long, default_value = "chatfuzz", value_parser = clap::value_parser!(Baseline))]
    pub baseline: Baseline,
    /// Override the baseline's prompt variant: ai, ai_noinput or ai_noform
    #[arg(long, value_parser = clap::value_parser!(PromptVariant))]
    pub variant: Option<PromptVariant>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub request: RequestArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct CminArgs {
    /// Input corpus directory
    #[arg(short = 'i', long, value_name = "DIR")]
    pub input: PathBuf,
    /// Directory receiving the kept files
    #[arg(short = 'o', long, value_name = "DIR")]
    pub output: PathBuf,
    /// Target to measure coverage on
    #[arg(long, value_name = "T")]
    pub target: String,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Targets, repeated or comma separated
    #[arg(long, value_name = "T", value_delimiter = ',', required = true)]
    pub target: Vec<String>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    /// Model endpoint: chat or completion
    #[arg(long, default_value = "completion", value_parser = clap::value_parser!(Endpoint))]
    pub endpoint: Endpoint,
    /// Prompt variant: ai, ai_noinput or ai_noform
    #[arg(long, default_value = "ai", value_parser = clap::value_parser!(PromptVariant))]
    pub variant: PromptVariant,
    /// Temperature step over [0, 2]
    #[arg(long, default_value_t = 0.25, value_name = "F")]
    pub step: f64,
    /// Provider seconds per temperature
    #[arg(long, default_value_t = 60.0, value_name = "S")]
    pub per_point: f64,
    /// Generation cap per temperature
    #[arg(long, default_value_t = 1000, value_name = "N")]
    pub max_generations: usize,
    /// Completions requested per call
    #[arg(long, default_value_t = ChatRequestConfig::DEFAULT_N, value_name = "K")]
    pub n: u32,
    /// Token budget per completion
    #[arg(long, default_value_t = ChatRequestConfig::DEFAULT_MAX_TOKENS, value_name = "M")]
    pub max_tokens: u32,
    /// RNG seed
    #[arg(long, default_value_t = 0, value_name = "R")]
    pub seed: u64,
    /// Initial seed directory (defaults to the target's bundled seeds)
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    /// Format name used in prompts
    #[arg(long, value_name = "NAME")]
    pub format: Option<String>,
    /// Directory for sweep.csv and ranks.csv
    #[arg(long, default_value = ".", value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// Target to fuzz
    #[arg(long, value_name = "T")]
    pub target: String,
    /// Model endpoint: chat or completion
    #[arg(long, default_value = "completion", value_parser = clap::value_parser!(Endpoint))]
    pub endpoint: Endpoint,
    /// Output directory; one subdirectory per variant
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Initial seed directory (defaults to the target's bundled seeds)
    #[arg(long = "in", value_name = "DIR")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub provider: ProviderArgs,
    #[command(flatten)]
    pub request: RequestArgs,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory holding one or more campaign outputs
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug)]
pub enum CliError {
    /// Exit 2.
    Usage(String),
    /// Exit 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<CampaignError> for CliError {
    fn from(e: CampaignError) -> Self {
        match e {
            CampaignError::Config(_)
            | CampaignError::Request(_)
            | CampaignError::Dictionary(_)
            | CampaignError::Harness(HarnessError::UnknownTarget(_))
            | CampaignError::Corpus(CorpusError::EmptyPool) => CliError::Usage(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key = value", i + 1))?;
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        let v = v.trim();
        let v = v.strip_prefix('"').and_then(|s| s.strip_suffix('"')).unwrap_or(v);
        out.push((key, v.to_string()));
    }
    Ok(out)
}

/// Removes `--config FILE` from `args` and returns the file path.
fn take_config(args: &mut Vec<OsString>) -> Result<Option<PathBuf>, CliError> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        let a = args[i].to_string_lossy().into_owned();
        if a == "--" {
            break;
        }
        if a == "--config" {
            if i + 1 >= args.len() {
                return Err(CliError::Usage("--config needs a file".into()));
            }
            found = Some(PathBuf::from(args.remove(i + 1)));
            args.remove(i);
        } else if let Some(p) = a.strip_prefix("--config=") {
            found = Some(PathBuf::from(p));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    Ok(found)
}

/// Inserts file settings right after the subcommand name, skipping keys the
/// command line already sets.
fn splice_config(args: &mut Vec<OsString>, entries: &[(String, String)]) -> Result<(), CliError> {
    let Some(pos) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')).map(|p| p + 1) else {
        return Ok(());
    };
    let name = args[pos].to_string_lossy().into_owned();
    let root = Cli::command();
    let Some(sub) = root.find_subcommand(&name) else {
        return Ok(());
    };
    let longs: Vec<(String, Option<char>)> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(|l| (l.to_string(), a.get_short())))
        .collect();
    let mut given = BTreeSet::new();
    for a in &args[pos + 1..] {
        let a = a.to_string_lossy();
        if let Some(l) = a.strip_prefix("--") {
            given.insert(l.split('=').next().unwrap_or_default().to_string());
        } else if let Some(c) = a.strip_prefix('-').and_then(|s| s.chars().next()) {
            if let Some((l, _)) = longs.iter().find(|(_, s)| *s == Some(c)) {
                given.insert(l.clone());
            }
        }
    }
    let mut extra = Vec::new();
    for (key, value) in entries {
        if key == "config" {
            continue;
        }
        if !longs.iter().any(|(l, _)| l == key) {
            return Err(CliError::Usage(format!("config file: '{name}' has no option '{key}'")));
        }
        if given.contains(key) {
            continue;
        }
        extra.push(OsString::from(format!("--{key}")));
        extra.push(OsString::from(value));
    }
    args.splice(pos + 1..pos + 1, extra);
    Ok(())
}

fn request_config(r: &RequestArgs, endpoint: Endpoint) -> Result<ChatRequestConfig, CliError> {
    let t = r.temperature.unwrap_or_else(|| ChatRequestConfig::default_temperature(endpoint));
    ChatRequestConfig::new(r.max_tokens, r.n, t).map_err(|e| CliError::Usage(e.to_string()))
}

fn provider_timeout(p: &ProviderArgs) -> Result<Duration, CliError> {
    Duration::try_from_secs_f64(p.provider_timeout)
        .ok()
        .filter(|d| !d.is_zero())
        .ok_or_else(|| CliError::Usage(format!("--provider-timeout must be positive, got {}", p.provider_timeout)))
}

fn campaign_config(
    target: &str,
    out: &Path,
    input: Option<&Path>,
    endpoint: Endpoint,
    provider: &ProviderArgs,
    request: &RequestArgs,
    run: &RunArgs,
) -> Result<CampaignConfig, CliError> {
    let mut c = CampaignConfig::new(target, out);
    c.duration_s = run.duration;
    c.rng_seed = run.seed;
    c.provider = provider.provider;
    c.provider_timeout = provider_timeout(provider)?;
    c.request_cfg = request_config(request, endpoint)?;
    c.sync_interval_s = run.sync_interval;
    c.initial_corpus = input.map(Path::to_path_buf);
    c.dictionary = run.dict.clone();
    c.clock = run.clock.clock();
    c.chat_rate_limit = run.chat_rate_limit;
    c.format_name = run.format.clone();
    Ok(c)
}

fn check_dir(dir: &Path, flag: &str) -> Result<(), CliError> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{flag} {}: not a directory", dir.display())))
    }
}

fn cmd_fuzz(a: &FuzzArgs) -> Result<(), CliError> {
    check_dir(&a.input, "--in")?;
    let endpoint = a.baseline.chat().map_or(Endpoint::Completion, |(e, _)| e);
    let mut cfg = campaign_config(&a.target, &a.out, Some(&a.input), endpoint, &a.provider, &a.request, &a.run)?;
    cfg.baseline = a.baseline;
    cfg.variant = a.variant;
    let report = run_campaign(&cfg)?;
    if report.chat_degraded {
        log::warn!("provider unavailable; the campaign continued without the chat mutator");
    }
    let row = report.row();
    println!(
        "{} {}: {} edges ({} initial), queue {} ({} from AI, {:.2}%), valid {:.3}, {} crashes, {} execs, {} provider calls",
        row.target,
        row.config,
        row.edges,
        report.initial_edges,
        row.queue_len,
        row.imported_ai,
        row.import_ratio,
        row.valid_ratio_queue,
        report.crashes,
        report.execs,
        report.provider_calls,
    );
    Ok(())
}

fn cmd_cmin(a: &CminArgs) -> Result<(), CliError> {
    check_dir(&a.input, "-i")?;
    let harness = harness::lookup(&a.target).map_err(|e| match e {
        HarnessError::UnknownTarget(_) => CliError::Usage(e.to_string()),
        e => runtime(e),
    })?;
    let files = read_dir_sorted(&a.input).map_err(runtime)?;
    if files.is_empty() {
        return Err(CliError::Usage(format!("-i {}: no input files", a.input.display())));
    }
    let bytes: Vec<&[u8]> = files.iter().map(|(_, b)| b.as_slice()).collect();
    let kept = cmin(&bytes, &harness).map_err(runtime)?;
    std::fs::create_dir_all(&a.output).map_err(runtime)?;
    for &i in &kept {
        std::fs::write(a.output.join(&files[i].0), &files[i].1).map_err(runtime)?;
    }
    println!("kept {} of {} inputs in {}", kept.len(), files.len(), a.output.display());
    Ok(())
}

/// `0, step, 2*step, ...` up to 2.
pub fn temperature_steps(step: f64) -> Result<Vec<f64>, String> {
    if !(step > 0.0 && step <= 2.0) {
        return Err(format!("--step must be in (0, 2], got {step}"));
    }
    let count = (2.0 / step + 1e-9).floor() as usize;
    Ok((0..=count).map(|i| (i as f64 * step * 1e9).round() / 1e9).collect())
}

fn cmd_sweep(a: &SweepArgs) -> Result<(), CliError> {
    let temperatures = temperature_steps(a.step).map_err(CliError::Usage)?;
    if !(a.per_point >= 0.0) {
        return Err(CliError::Usage(format!("--per-point must be non-negative, got {}", a.per_point)));
    }
    ChatRequestConfig::new(a.max_tokens, a.n, 0.0).map_err(|e| CliError::Usage(e.to_string()))?;
    if let Some(d) = &a.input {
        check_dir(d, "--in")?;
    }
    let provider = make_provider(a.provider.provider, provider_timeout(&a.provider)?);
    let mut report = SweepReport::default();
    let mut matrix = Vec::new();
    for target in &a.target {
        let mut cfg = SweepConfig::new(target);
        cfg.temperatures = temperatures.clone();
        cfg.per_point_s = a.per_point;
        cfg.max_generations = a.max_generations;
        cfg.endpoint = a.endpoint;
        cfg.variant = a.variant;
        cfg.max_tokens = a.max_tokens;
        cfg.n = a.n;
        cfg.rng_seed = a.seed;
        cfg.initial_corpus = a.input.clone();
        cfg.format_name = a.format.clone();
        let r = run_sweep(&cfg, provider.as_ref())?;
        matrix.push(r.cells.iter().map(|c| c.cov_improvement).collect::<Vec<_>>());
        report.cells.extend(r.cells);
    }
    std::fs::create_dir_all(&a.out).map_err(runtime)?;
    report.emit(&a.out.join("sweep.csv")).map_err(runtime)?;
    let mut ranks = RankTable::new(temperatures);
    ranks.push(default_model(a.endpoint), &matrix).map_err(runtime)?;
    ranks.emit(&a.out.join("ranks.csv")).map_err(runtime)?;
    print!("{}", String::from_utf8_lossy(&report.to_csv().map_err(runtime)?));
    Ok(())
}

fn cmd_ablate(a: &AblateArgs) -> Result<(), CliError> {
    if let Some(d) = &a.input {
        check_dir(d, "--in")?;
    }
    let base = campaign_config(&a.target, &a.out, a.input.as_deref(), a.endpoint, &a.provider, &a.request, &a.run)?;
    let rows = run_ablation(&base, a.endpoint)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &rows {
        w.serialize(r).map_err(runtime)?;
    }
    let bytes = w.into_inner().map_err(|e| runtime(e.into_error()))?;
    crate::fsutil::write_atomic(&a.out.join("ablation.csv"), &bytes).map_err(runtime)?;
    print!("{}", String::from_utf8_lossy(&bytes));
    Ok(())
}

/// Campaign output directories under `root`, `root` included, sorted.
fn stats_dirs(root: &Path, depth: usize, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if root.join(STATS_FILE).is_file() {
        out.push(root.to_path_buf());
    }
    if depth == 0 {
        return Ok(());
    }
    let mut subdirs: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    for d in subdirs {
        stats_dirs(&d, depth - 1, out)?;
    }
    Ok(())
}

fn cmd_report(a: &ReportArgs) -> Result<(), CliError> {
    check_dir(&a.out, "--out")?;
    let mut dirs = Vec::new();
    stats_dirs(&a.out, 3, &mut dirs).map_err(runtime)?;
    if dirs.is_empty() {
        return Err(CliError::Usage(format!("no {STATS_FILE} found under {}", a.out.display())));
    }
    let mut table = CampaignTable::default();
    for d in &dirs {
        table.rows.push(crate::campaign::report_from_dir(d)?);
    }
    table.emit(&a.out.join("campaign.csv")).map_err(runtime)?;
    print!("{}", String::from_utf8_lossy(&table.to_csv().map_err(runtime)?));
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fuzz(a) => cmd_fuzz(a),
        Command::Cmin(a) => cmd_cmin(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `args` (program name first), applies the config file, runs the
/// subcommand and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let mut args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let prepared = take_config(&mut args).and_then(|path| {
        if let Some(path) = path {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("config file {}: {e}", path.display())))?;
            let entries = parse_config(&text).map_err(CliError::Usage)?;
            splice_config(&mut args, &entries)?;
        }
        Ok(())
    });
    if let Err(e) = prepared {
        eprintln!("error: {e}");
        return e.exit_code();
    }
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
