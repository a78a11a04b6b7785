//! Temperature sweeps, prompt ablations and paired baseline trials.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{initial_seeds, open_target, run_campaign, Baseline, CampaignConfig, CampaignError, CampaignReport};
use crate::corpus::{read_dir_sorted, Corpus, Origin};
use crate::coverage::{coverage_improvement, EdgeId};
use crate::harness::TargetHarness;
use crate::metrics::{relative_change, unique_ratio, SweepCell, SweepReport};
use crate::mutate::chat::{ChatMutator, ChatRequestConfig, Endpoint, PromptVariant};
use crate::providers::http::default_model;
use crate::providers::Provider;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub target: String,
    pub temperatures: Vec<f64>,
    /// Virtual seconds of provider time per temperature.
    pub per_point_s: f64,
    /// Generation cap per temperature.
    pub max_generations: usize,
    pub endpoint: Endpoint,
    pub variant: PromptVariant,
    pub max_tokens: u32,
    pub n: u32,
    pub rng_seed: u64,
    pub initial_corpus: Option<PathBuf>,
    pub format_name: Option<String>,
}

impl SweepConfig {
    pub fn new(target: &str) -> Self {
        Self {
            target: target.to_string(),
            temperatures: crate::metrics::temperature_grid(),
            per_point_s: 60.0,
            max_generations: 1000,
            endpoint: Endpoint::Completion,
            variant: PromptVariant::Ai,
            max_tokens: ChatRequestConfig::DEFAULT_MAX_TOKENS,
            n: ChatRequestConfig::DEFAULT_N,
            rng_seed: 0,
            initial_corpus: None,
            format_name: None,
        }
    }
}

fn edge_ids(harness: &TargetHarness, inputs: &[Vec<u8>]) -> Result<BTreeSet<EdgeId>, CampaignError> {
    let traces = crate::parallel::map(inputs, |s| harness.run(s));
    let mut ids = BTreeSet::new();
    for t in traces {
        ids.extend(t?.trace.edges());
    }
    Ok(ids)
}

/// Chat mutator only, against the static initial corpus. Each temperature
/// generates until the cap or the time budget is reached; the candidates are
/// then scored by uniqueness, validity and the distinct edge ids they add
/// on top of the initial corpus.
pub fn run_sweep(cfg: &SweepConfig, provider: &dyn Provider) -> Result<SweepReport, CampaignError> {
    let harness = open_target(&cfg.target, cfg.format_name.as_deref())?;
    let seeds = initial_seeds(cfg.initial_corpus.as_deref(), &cfg.target)?;
    let mut pool = Corpus::new();
    for s in &seeds {
        pool.push(s.clone(), Origin::Initial, None, 0.0);
    }
    let base_edges = edge_ids(&harness, &seeds)?;
    let format_name = cfg.format_name.clone().unwrap_or_else(|| harness.format_name().to_string());

    let points: Vec<(usize, f64)> = cfg.temperatures.iter().copied().enumerate().collect();
    let cells = crate::parallel::map(&points, |&(i, t)| -> Result<SweepCell, CampaignError> {
        let request = ChatRequestConfig::new(cfg.max_tokens, cfg.n, t)?;
        let dir = tempfile::tempdir()?;
        let mut m = ChatMutator::new(provider, cfg.variant, cfg.endpoint, request, &format_name, dir.path())
            .with_model_name(default_model(cfg.endpoint));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed.wrapping_add(i as u64));
        let (mut now, mut emitted) = (0.0, 0usize);
        while now < cfg.per_point_s && emitted < cfg.max_generations {
            let rec = m.mutate_once(&pool, &mut rng)?;
            now += rec.latency_s.max(super::MIN_CALL_GAP_S);
            emitted += rec.seeds_emitted;
            if m.provider_down() {
                break;
            }
        }
        let mut generated: Vec<Vec<u8>> = read_dir_sorted(dir.path())?.into_iter().map(|(_, b)| b).collect();
        generated.truncate(cfg.max_generations);
        let (unique, valid, improvement) = if generated.is_empty() {
            (0.0, 0.0, 0.0)
        } else {
            let mut all = base_edges.clone();
            all.extend(edge_ids(&harness, &generated)?);
            (
                unique_ratio(&generated).unwrap_or(0.0),
                super::queue_valid_ratio(&generated, &harness),
                coverage_improvement(base_edges.len(), all.len()).unwrap_or(0.0),
            )
        };
        Ok(SweepCell {
            program: harness.name().to_string(),
            temperature: t,
            unique_ratio: unique,
            valid_ratio: valid,
            cov_improvement: improvement,
        })
    });
    Ok(SweepReport {
        cells: cells.into_iter().collect::<Result<_, _>>()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub variant: PromptVariant,
    pub edges: usize,
    /// `(edges - edges_AI) / edges_AI`.
    pub vs_ai: f64,
}

/// Three campaigns identical but for the prompt variant. Each writes under
/// `<out_dir>/<variant>`.
pub fn run_ablation(base: &CampaignConfig, endpoint: Endpoint) -> Result<Vec<AblationRow>, CampaignError> {
    let variants = [PromptVariant::Ai, PromptVariant::AiNoInput, PromptVariant::AiNoForm];
    let configs: Vec<CampaignConfig> = variants
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            c.baseline = Baseline::for_endpoint(endpoint);
            c.variant = Some(v);
            c.out_dir = base.out_dir.join(v.to_string());
            c
        })
        .collect();
    let reports = crate::parallel::map(&configs, run_campaign);
    let edges: Vec<usize> = reports.into_iter().map(|r| r.map(|r| r.edges)).collect::<Result<_, _>>()?;
    let ai = edges[0];
    Ok(variants
        .iter()
        .zip(&edges)
        .map(|(&variant, &e)| AblationRow {
            variant,
            edges: e,
            vs_ai: relative_change(ai as f64, e as f64).unwrap_or(0.0),
        })
        .collect())
}

fn trial_dir(root: &Path, label: &str, seed: u64) -> PathBuf {
    let safe: String = label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
    root.join(format!("{safe}-seed{seed}"))
}

/// Runs every baseline once per rng seed. `result[i][j]` is trial `i` of
/// `baselines[j]`; paired runs share a seed.
pub fn paired_trials(base: &CampaignConfig, baselines: &[Baseline], seeds: &[u64]) -> Result<Vec<Vec<CampaignReport>>, CampaignError> {
    let configs: Vec<CampaignConfig> = seeds
        .iter()
        .flat_map(|&seed| {
            baselines.iter().map(move |&b| {
                let mut c = base.clone();
                c.baseline = b;
                c.rng_seed = seed;
                c.out_dir = trial_dir(&base.out_dir, &c.label(), seed);
                c
            })
        })
        .collect();
    let mut reports = crate::parallel::map(&configs, run_campaign).into_iter();
    let mut out = Vec::with_capacity(seeds.len());
    for _ in seeds {
        out.push(reports.by_ref().take(baselines.len()).collect::<Result<Vec<_>, _>>()?);
    }
    Ok(out)
}
