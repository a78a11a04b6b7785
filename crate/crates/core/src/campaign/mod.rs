//! The end-to-end loop: a havoc fuzzer owning the queue and coverage map,
//! and a chat worker feeding candidates through the AI queue directory.

mod sweep;

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{
    import_ratio, read_dir_sorted, Corpus, CorpusError, Digest, Importer, Origin, QueueStats, AI_QUEUE_DIR, CRASH_DIR,
    QUEUE_DIR, STATS_FILE,
};
use crate::coverage::{accumulate, CoverageMap};
use crate::fsutil::write_atomic;
use crate::harness::{self, external, HarnessError, TargetHarness, Verdict};
use crate::metrics::CampaignRow;
use crate::mutate::chat::{parse_ai_name, ChatMutator, ChatRequestConfig, ConfigError, Endpoint, PromptVariant, QueueDir};
use crate::mutate::{havoc, load_dictionary, DictionaryParseError};
use crate::providers::http::{default_model, HttpProvider};
use crate::providers::mock::MockProvider;
use crate::providers::{Provider, ProviderKind};

pub use sweep::{paired_trials, run_ablation, run_sweep, AblationRow, SweepConfig};

/// Virtual seconds charged per target execution.
pub const DEFAULT_EXEC_COST_S: f64 = 0.001;
pub const DEFAULT_SYNC_INTERVAL_S: f64 = 30.0;
/// Upper bound on havoc output.
pub const HAVOC_MAX_LEN: usize = 4096;
/// Keeps a zero-latency provider from stalling virtual time.
const MIN_CALL_GAP_S: f64 = 0.01;
const CHAT_STREAM: u64 = 0x6368_6174;

#[derive(Debug, Error)]
pub enum CampaignError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Request(#[from] ConfigError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Dictionary(#[from] DictionaryParseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error("the chat worker panicked")]
    WorkerPanic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Baseline {
    AflOnly,
    ChatFuzz,
    ChatFuzzF,
    ChatFuzzC,
    ChatFuzzCF,
}

impl Baseline {
    pub const ALL: [Baseline; 5] = [
        Baseline::AflOnly,
        Baseline::ChatFuzz,
        Baseline::ChatFuzzF,
        Baseline::ChatFuzzC,
        Baseline::ChatFuzzCF,
    ];

    /// Endpoint and prompt variant of the chat mutator, if any.
    pub fn chat(self) -> Option<(Endpoint, PromptVariant)> {
        match self {
            Baseline::AflOnly => None,
            Baseline::ChatFuzz => Some((Endpoint::Completion, PromptVariant::Ai)),
            Baseline::ChatFuzzF => Some((Endpoint::Completion, PromptVariant::AiNoForm)),
            Baseline::ChatFuzzC => Some((Endpoint::Chat, PromptVariant::Ai)),
            Baseline::ChatFuzzCF => Some((Endpoint::Chat, PromptVariant::AiNoForm)),
        }
    }

    pub fn cli_name(self) -> &'static str {
        match self {
            Baseline::AflOnly => "afl",
            Baseline::ChatFuzz => "chatfuzz",
            Baseline::ChatFuzzF => "chatfuzz-f",
            Baseline::ChatFuzzC => "chatfuzz-c",
            Baseline::ChatFuzzCF => "chatfuzz-cf",
        }
    }

    pub fn for_endpoint(endpoint: Endpoint) -> Baseline {
        match endpoint {
            Endpoint::Chat => Baseline::ChatFuzzC,
            Endpoint::Completion => Baseline::ChatFuzz,
        }
    }
}

impl fmt::Display for Baseline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Baseline::AflOnly => "AFL++",
            Baseline::ChatFuzz => "ChatFuzz",
            Baseline::ChatFuzzF => "ChatFuzz-F",
            Baseline::ChatFuzzC => "ChatFuzz-C",
            Baseline::ChatFuzzCF => "ChatFuzz-CF",
        })
    }
}

impl FromStr for Baseline {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.cli_name().eq_ignore_ascii_case(s) || b.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown baseline {s:?} (expected afl, chatfuzz, chatfuzz-f, chatfuzz-c or chatfuzz-cf)"))
    }
}

/// How the campaign measures time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Clock {
    /// Deterministic: each execution costs `exec_cost_s`, each provider call
    /// costs its reported latency.
    Virtual { exec_cost_s: f64 },
    Wall,
}

impl Default for Clock {
    fn default() -> Self {
        Clock::Virtual {
            exec_cost_s: DEFAULT_EXEC_COST_S,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignConfig {
    /// Bundled target name or `cmd:<path>`.
    pub target: String,
    pub duration_s: f64,
    pub rng_seed: u64,
    pub baseline: Baseline,
    /// Replaces the baseline's prompt variant (ablation runs).
    pub variant: Option<PromptVariant>,
    pub provider: ProviderKind,
    pub provider_timeout: Duration,
    pub request_cfg: ChatRequestConfig,
    pub sync_interval_s: f64,
    /// Seed directory; `None` uses the target's bundled seeds.
    pub initial_corpus: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub dictionary: Option<PathBuf>,
    pub clock: Clock,
    /// Maximum provider calls per second.
    pub chat_rate_limit: Option<f64>,
    /// Format named in prompts; defaults to the target's.
    pub format_name: Option<String>,
}

impl CampaignConfig {
    pub fn new(target: &str, out_dir: &Path) -> Self {
        Self {
            target: target.to_string(),
            duration_s: 60.0,
            rng_seed: 0,
            baseline: Baseline::ChatFuzz,
            variant: None,
            provider: ProviderKind::Mock,
            provider_timeout: crate::providers::http::DEFAULT_TIMEOUT,
            request_cfg: ChatRequestConfig::default_for(Endpoint::Completion),
            sync_interval_s: DEFAULT_SYNC_INTERVAL_S,
            initial_corpus: None,
            out_dir: out_dir.to_path_buf(),
            dictionary: None,
            clock: Clock::default(),
            chat_rate_limit: None,
            format_name: None,
        }
    }

    pub fn chat(&self) -> Option<(Endpoint, PromptVariant)> {
        self.baseline.chat().map(|(e, v)| (e, self.variant.unwrap_or(v)))
    }

    /// `ChatFuzz`, or `ChatFuzz/AI_noINPUT` when the variant is overridden.
    pub fn label(&self) -> String {
        match (self.variant, self.baseline.chat()) {
            (Some(v), Some(_)) => format!("{}/{v}", self.baseline),
            _ => self.baseline.to_string(),
        }
    }

    fn check(&self) -> Result<(), CampaignError> {
        self.request_cfg.check()?;
        if !(self.duration_s >= 0.0 && self.duration_s.is_finite()) {
            return Err(CampaignError::Config(format!("duration must be a non-negative number, got {}", self.duration_s)));
        }
        if !(self.sync_interval_s > 0.0) {
            return Err(CampaignError::Config("sync interval must be positive".into()));
        }
        if let Clock::Virtual { exec_cost_s } = self.clock {
            if !(exec_cost_s > 0.0) {
                return Err(CampaignError::Config("virtual execution cost must be positive".into()));
            }
        }
        if let Some(r) = self.chat_rate_limit {
            if !(r > 0.0) {
                return Err(CampaignError::Config("chat rate limit must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub target: String,
    pub config: String,
    pub duration_s: f64,
    pub initial_edges: usize,
    pub edges: usize,
    pub stats: QueueStats,
    pub valid_ratio_queue: f64,
    /// `(seconds, distinct edges)` at start, every sync and the deadline.
    pub timeline: Vec<(f64, usize)>,
    pub crashes: usize,
    pub execs: u64,
    pub provider_calls: u64,
    pub latencies: Vec<f64>,
    /// The provider became unavailable and the run continued without it.
    pub chat_degraded: bool,
}

impl CampaignReport {
    pub fn row(&self) -> CampaignRow {
        CampaignRow {
            target: self.target.clone(),
            config: self.config.clone(),
            duration_s: self.duration_s,
            edges: self.edges,
            queue_len: self.stats.queue_len,
            imported_ai: self.stats.imported_from_ai,
            import_ratio: import_ratio(self.stats).unwrap_or(0.0),
            valid_ratio_queue: self.valid_ratio_queue,
        }
    }

    /// md5 over the serialized report.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("reports serialize");
        Digest::of(&json).to_string()
    }
}

/// What `<out>/stats.json` holds; rewritten at every sync.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsSnapshot {
    pub target: String,
    pub config: String,
    pub elapsed_s: f64,
    pub initial_edges: usize,
    pub edges: usize,
    pub queue_len: usize,
    pub imported_ai: usize,
    pub execs: u64,
    pub crashes: usize,
    pub provider_calls: u64,
    pub timeline: Vec<(f64, usize)>,
}

impl StatsSnapshot {
    pub fn load(out_dir: &Path) -> Result<StatsSnapshot, CampaignError> {
        let text = std::fs::read(out_dir.join(STATS_FILE))?;
        Ok(serde_json::from_slice(&text)?)
    }
}

/// Builds the configured provider.
pub fn make_provider(kind: ProviderKind, timeout: Duration) -> Box<dyn Provider> {
    match kind {
        ProviderKind::Mock => Box::new(MockProvider::new()),
        ProviderKind::Http => Box::new(HttpProvider::from_env(timeout)),
    }
}

pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignReport, CampaignError> {
    let provider = make_provider(cfg.provider, cfg.provider_timeout);
    run_campaign_with(cfg, provider.as_ref())
}

/// Loads the configured seeds, or the target's bundled ones.
pub fn initial_seeds(dir: Option<&Path>, target: &str) -> Result<Vec<Vec<u8>>, CampaignError> {
    let seeds: Vec<Vec<u8>> = match dir {
        Some(d) => read_dir_sorted(d)?.into_iter().map(|(_, b)| b).collect(),
        None => harness::default_seeds(target)?,
    };
    if seeds.is_empty() {
        return Err(CampaignError::Corpus(CorpusError::EmptyPool));
    }
    Ok(seeds)
}

pub(crate) fn open_target(target: &str, format_name: Option<&str>) -> Result<TargetHarness, CampaignError> {
    Ok(harness::lookup_with(target, external::DEFAULT_TIMEOUT, format_name)?)
}

/// Share of `seeds` the target's format oracle accepts. Targets without a
/// known format are asked directly: anything past the parse stage counts.
pub fn queue_valid_ratio(seeds: &[Vec<u8>], harness: &TargetHarness) -> f64 {
    if seeds.is_empty() {
        return 0.0;
    }
    let valid = match harness.format() {
        Some(f) => crate::parallel::map(seeds, |s| f.validate(s).is_valid()),
        None => crate::parallel::map(seeds, |s| harness.run(s).is_ok_and(|r| r.verdict != Verdict::ParseError)),
    };
    valid.iter().filter(|v| **v).count() as f64 / seeds.len() as f64
}

/// Fuzzer-side state: the queue, the map and everything written under `out`.
struct Fuzzer<'a> {
    cfg: &'a CampaignConfig,
    harness: TargetHarness,
    pool: Corpus,
    map: CoverageMap,
    importer: Importer,
    rng: ChaCha8Rng,
    dict: Vec<Vec<u8>>,
    queue_dir: PathBuf,
    ai_dir: PathBuf,
    crash_dir: PathBuf,
    crashes: BTreeSet<Digest>,
    execs: u64,
    initial_edges: usize,
    timeline: Vec<(f64, usize)>,
}

impl<'a> Fuzzer<'a> {
    fn new(cfg: &'a CampaignConfig) -> Result<Self, CampaignError> {
        let harness = open_target(&cfg.target, cfg.format_name.as_deref())?;
        let seeds = initial_seeds(cfg.initial_corpus.as_deref(), &cfg.target)?;
        let dict = match &cfg.dictionary {
            Some(p) => load_dictionary(p)?,
            None => Vec::new(),
        };
        let queue_dir = cfg.out_dir.join(QUEUE_DIR);
        let ai_dir = cfg.out_dir.join(AI_QUEUE_DIR);
        let crash_dir = cfg.out_dir.join(CRASH_DIR);
        for d in [&queue_dir, &ai_dir] {
            if d.is_dir() && std::fs::read_dir(d)?.next().is_some() {
                return Err(CampaignError::Config(format!("{} is not empty; pick a fresh output directory", d.display())));
            }
        }
        for d in [&queue_dir, &ai_dir, &crash_dir] {
            std::fs::create_dir_all(d)?;
        }
        let mut f = Fuzzer {
            cfg,
            harness,
            pool: Corpus::new(),
            map: CoverageMap::new(),
            importer: Importer::new(),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
            dict,
            queue_dir,
            ai_dir,
            crash_dir,
            crashes: BTreeSet::new(),
            execs: 0,
            initial_edges: 0,
            timeline: Vec::new(),
        };
        let results = crate::parallel::map(&seeds, |s| f.harness.run(s));
        for (bytes, r) in seeds.into_iter().zip(results) {
            let r = r?;
            f.execs += 1;
            accumulate(&mut f.map, &r.trace);
            if r.verdict == Verdict::Crash {
                f.save_crash(&bytes)?;
            }
            if let Some(seed) = f.pool.push(bytes, Origin::Initial, None, 0.0) {
                Corpus::write_seed(&f.queue_dir, seed)?;
            }
        }
        f.initial_edges = f.map.edge_count();
        f.timeline.push((0.0, f.initial_edges));
        Ok(f)
    }

    fn save_crash(&mut self, bytes: &[u8]) -> std::io::Result<()> {
        let d = Digest::of(bytes);
        if self.crashes.insert(d) {
            write_atomic(&self.crash_dir.join(format!("crash:{d}")), bytes)?;
        }
        Ok(())
    }

    /// One havoc mutant of the next queue entry.
    fn fuzz_one(&mut self, now: f64) -> Result<(), CampaignError> {
        let (parent, bytes) = {
            let s = self.pool.next_round_robin()?;
            (s.id, s.bytes.clone())
        };
        let other = (self.pool.len() > 1).then(|| {
            let i = self.rng.random_range(0..self.pool.len());
            self.pool.seeds()[i].bytes.clone()
        });
        let max_len = HAVOC_MAX_LEN.min(self.harness.max_input_len());
        let mutant = havoc(&bytes, &mut self.rng, &self.dict, other.as_deref(), max_len);
        let r = self.harness.run(&mutant)?;
        self.execs += 1;
        let delta = accumulate(&mut self.map, &r.trace);
        if r.verdict == Verdict::Crash {
            self.save_crash(&mutant)?;
        } else if let Some(seed) = self.pool.add_if_interesting(mutant, Origin::Fuzzer, Some(parent), now, &delta) {
            Corpus::write_seed(&self.queue_dir, seed)?;
        }
        Ok(())
    }

    /// Imports visible AI files; returns how many executions it cost.
    fn sync(&mut self, now: f64, visible: impl Fn(&str) -> bool) -> Result<usize, CampaignError> {
        let before = self.pool.len();
        let outcome = self.importer.scan(&mut self.pool, &self.ai_dir, &self.harness, &mut self.map, now, visible)?;
        for seed in &self.pool.seeds()[before..] {
            Corpus::write_seed(&self.queue_dir, seed)?;
        }
        for (_, bytes) in &outcome.crashes {
            self.save_crash(bytes)?;
        }
        self.execs += outcome.executed as u64;
        if outcome.imported > 0 {
            log::debug!("t={now:.1}s imported {} AI seeds", outcome.imported);
        }
        Ok(outcome.executed)
    }

    fn snapshot(&mut self, now: f64, provider_calls: u64) -> Result<(), CampaignError> {
        if self.timeline.last().is_none_or(|&(t, _)| t < now) {
            self.timeline.push((now, self.map.edge_count()));
        }
        let stats = self.pool.stats();
        let snap = StatsSnapshot {
            target: self.harness.name().to_string(),
            config: self.cfg.label(),
            elapsed_s: now,
            initial_edges: self.initial_edges,
            edges: self.map.edge_count(),
            queue_len: stats.queue_len,
            imported_ai: stats.imported_from_ai,
            execs: self.execs,
            crashes: self.crashes.len(),
            provider_calls,
            timeline: self.timeline.clone(),
        };
        write_atomic(&self.cfg.out_dir.join(STATS_FILE), &serde_json::to_vec_pretty(&snap)?)?;
        Ok(())
    }

    fn report(self, elapsed: f64, provider_calls: u64, latencies: Vec<f64>, chat_degraded: bool) -> CampaignReport {
        let seeds: Vec<Vec<u8>> = self.pool.seeds().iter().map(|s| s.bytes.clone()).collect();
        CampaignReport {
            target: self.harness.name().to_string(),
            config: self.cfg.label(),
            duration_s: elapsed,
            initial_edges: self.initial_edges,
            edges: self.map.edge_count(),
            stats: self.pool.stats(),
            valid_ratio_queue: queue_valid_ratio(&seeds, &self.harness),
            timeline: self.timeline,
            crashes: self.crashes.len(),
            execs: self.execs,
            provider_calls,
            latencies,
            chat_degraded,
        }
    }
}

fn chat_mutator<'p>(cfg: &CampaignConfig, provider: &'p dyn Provider, harness: &TargetHarness, ai_dir: &Path) -> Option<ChatMutator<'p>> {
    let (endpoint, variant) = cfg.chat()?;
    let format_name = cfg.format_name.clone().unwrap_or_else(|| harness.format_name().to_string());
    Some(ChatMutator::new(provider, variant, endpoint, cfg.request_cfg, &format_name, ai_dir).with_model_name(default_model(endpoint)))
}

fn min_gap(cfg: &CampaignConfig) -> f64 {
    cfg.chat_rate_limit.map_or(0.0, |r| 1.0 / r)
}

/// Runs one campaign against `provider`.
pub fn run_campaign_with(cfg: &CampaignConfig, provider: &dyn Provider) -> Result<CampaignReport, CampaignError> {
    cfg.check()?;
    match cfg.clock {
        Clock::Virtual { exec_cost_s } => run_virtual(cfg, provider, exec_cost_s),
        Clock::Wall => run_wall(cfg, provider),
    }
}

/// Discrete-event schedule: the chat worker's calls start when the previous
/// one has landed, and their files become visible to the importer only at
/// `start + latency`.
fn run_virtual(cfg: &CampaignConfig, provider: &dyn Provider, exec_cost: f64) -> Result<CampaignReport, CampaignError> {
    let mut fz = Fuzzer::new(cfg)?;
    let mut chat = chat_mutator(cfg, provider, &fz.harness, &fz.ai_dir);
    let mut chat_rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ CHAT_STREAM);
    let mut latencies = Vec::new();
    let mut calls = 0u64;
    let mut degraded = false;
    let mut next_call = 0.0;
    // (visible_at, end of the file sequence range), in call order.
    let mut landed: Vec<(f64, u64)> = Vec::new();
    let visible_limit = |landed: &[(f64, u64)], now: f64| {
        landed.iter().take_while(|(at, _)| *at <= now).last().map_or(0, |&(_, end)| end)
    };

    let deadline = cfg.duration_s;
    let mut now = 0.0;
    let mut next_sync = cfg.sync_interval_s;
    while now < deadline {
        if let Some(m) = chat.as_mut() {
            while next_call <= now && next_call < deadline {
                let rec = m.mutate_once(&fz.pool, &mut chat_rng)?;
                calls += 1;
                latencies.push(rec.latency_s);
                let at = next_call + rec.latency_s.max(MIN_CALL_GAP_S);
                landed.push((at, rec.files.1));
                next_call = at.max(next_call + min_gap(cfg));
                if m.provider_down() {
                    log::warn!("continuing without the chat mutator");
                    degraded = true;
                    break;
                }
            }
            if degraded {
                chat = None;
            }
        }
        fz.fuzz_one(now)?;
        now += exec_cost;
        if now >= next_sync && now < deadline {
            let limit = visible_limit(&landed, now);
            let executed = fz.sync(now, |n| parse_ai_name(n).is_some_and(|a| a.seq < limit))?;
            now += executed as f64 * exec_cost;
            fz.snapshot(now.min(deadline), calls)?;
            next_sync += cfg.sync_interval_s;
        }
    }
    if deadline > 0.0 {
        let limit = visible_limit(&landed, deadline);
        fz.sync(deadline, |n| parse_ai_name(n).is_some_and(|a| a.seq < limit))?;
    }
    fz.snapshot(deadline, calls)?;
    Ok(fz.report(deadline, calls, latencies, degraded))
}

struct ChatOutcome {
    calls: u64,
    latencies: Vec<f64>,
    degraded: bool,
}

/// Real time: the chat worker runs on its own thread and reads seeds from the
/// persisted queue directory; the two sides share nothing else.
fn run_wall(cfg: &CampaignConfig, provider: &dyn Provider) -> Result<CampaignReport, CampaignError> {
    let mut fz = Fuzzer::new(cfg)?;
    let stop = AtomicBool::new(false);
    let start = Instant::now();
    let deadline = cfg.duration_s;
    let chat = chat_mutator(cfg, provider, &fz.harness, &fz.ai_dir);
    let source = QueueDir(fz.queue_dir.clone());

    let (fuzz_result, chat_result) = std::thread::scope(|scope| {
        let worker = chat.map(|mut m| {
            let stop = &stop;
            let source = &source;
            scope.spawn(move || -> Result<ChatOutcome, CampaignError> {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed ^ CHAT_STREAM);
                let mut out = ChatOutcome {
                    calls: 0,
                    latencies: Vec::new(),
                    degraded: false,
                };
                while !stop.load(Ordering::Relaxed) {
                    let began = Instant::now();
                    let rec = m.mutate_once(source, &mut rng)?;
                    out.calls += 1;
                    out.latencies.push(rec.latency_s);
                    if m.provider_down() {
                        log::warn!("continuing without the chat mutator");
                        out.degraded = true;
                        break;
                    }
                    // Honour simulated latency and the rate limit.
                    let wait = rec.latency_s.max(min_gap(cfg)) - began.elapsed().as_secs_f64();
                    sleep_unless_stopped(stop, wait);
                }
                Ok(out)
            })
        });
        let fuzz = (|| -> Result<(), CampaignError> {
            let mut next_sync = cfg.sync_interval_s;
            loop {
                let now = start.elapsed().as_secs_f64();
                if now >= deadline {
                    break;
                }
                fz.fuzz_one(now)?;
                if now >= next_sync {
                    fz.sync(now, |_| true)?;
                    fz.snapshot(now, 0)?;
                    next_sync += cfg.sync_interval_s;
                }
            }
            Ok(())
        })();
        stop.store(true, Ordering::Relaxed);
        let chat = worker.map(|h| h.join().map_err(|_| CampaignError::WorkerPanic).and_then(|r| r));
        (fuzz, chat)
    });
    fuzz_result?;
    let chat = chat_result.transpose()?;
    let elapsed = start.elapsed().as_secs_f64().max(deadline);
    if deadline > 0.0 {
        fz.sync(elapsed, |_| true)?;
    }
    let (calls, latencies, degraded) = chat.map_or((0, Vec::new(), false), |c| (c.calls, c.latencies, c.degraded));
    fz.snapshot(elapsed, calls)?;
    Ok(fz.report(elapsed, calls, latencies, degraded))
}

fn sleep_unless_stopped(stop: &AtomicBool, seconds: f64) {
    let until = Instant::now() + Duration::from_secs_f64(seconds.max(0.0));
    while !stop.load(Ordering::Relaxed) {
        let left = until.saturating_duration_since(Instant::now());
        if left.is_zero() {
            break;
        }
        std::thread::sleep(left.min(Duration::from_millis(50)));
    }
}

/// Rebuilds a campaign row from what a finished run left on disk.
pub fn report_from_dir(out_dir: &Path) -> Result<CampaignRow, CampaignError> {
    let snap = StatsSnapshot::load(out_dir)?;
    let queue = Corpus::load(&out_dir.join(QUEUE_DIR))?;
    let harness = open_target(&snap.target, None)?;
    let seeds: Vec<Vec<u8>> = queue.seeds().iter().map(|s| s.bytes.clone()).collect();
    let stats = queue.stats();
    Ok(CampaignRow {
        target: snap.target,
        config: snap.config,
        duration_s: snap.elapsed_s,
        edges: snap.edges,
        queue_len: stats.queue_len,
        imported_ai: stats.imported_from_ai,
        import_ratio: import_ratio(stats).unwrap_or(0.0),
        valid_ratio_queue: queue_valid_ratio(&seeds, &harness),
    })
}
