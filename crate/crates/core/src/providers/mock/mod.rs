//! Offline stand-in for a generative model.
//!
//! Each choice is the sample itself with probability `p_dup(t)`, otherwise
//! the sample after `1 + floor(4t)` structure-preserving edits drawn from
//! the format's grammar and vocabulary. The result is then corrupted token
//! by token with probability `p_corrupt(t)`. Low temperature therefore
//! means duplicates, high temperature means broken syntax.

mod edit;

use std::sync::atomic::{AtomicU64, Ordering};

use rand::{Rng, RngCore};

use super::{FinishReason, GenerationRequest, GenerationResponse, Provider, ProviderError};
use crate::mutate::chat::{ChatRequestConfig, Endpoint};
use crate::validate::Format;

pub use edit::{canonical_instance, corrupt, sniff_format, structural_edits};

/// Bytes per simulated token when enforcing `max_tokens`.
pub const BYTES_PER_TOKEN: usize = 4;

pub fn p_dup(t: f64) -> f64 {
    (1.0 - t / 1.25).clamp(0.0, 1.0)
}

pub fn p_corrupt(t: f64) -> f64 {
    ((t - 1.0) / 2.5).clamp(0.0, 0.4)
}

pub fn edit_count(t: f64) -> usize {
    1 + (4.0 * t).floor() as usize
}

/// Simulated round-trip time `c0 + c1 * max_tokens + c2 * n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyModel {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl LatencyModel {
    pub const CHAT: LatencyModel = LatencyModel { c0: 0.2, c1: 0.004, c2: 0.05 };
    pub const COMPLETION: LatencyModel = LatencyModel { c0: 0.1, c1: 0.002, c2: 0.02 };

    pub fn latency(&self, cfg: &ChatRequestConfig) -> f64 {
        self.c0 + self.c1 * cfg.max_tokens as f64 + self.c2 * cfg.n as f64
    }
}

#[derive(Debug)]
pub struct MockProvider {
    pub chat: LatencyModel,
    pub completion: LatencyModel,
    calls: AtomicU64,
}

impl Default for MockProvider {
    fn default() -> Self {
        Self {
            chat: LatencyModel::CHAT,
            completion: LatencyModel::COMPLETION,
            calls: AtomicU64::new(0),
        }
    }
}

impl MockProvider {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn latency(&self, endpoint: Endpoint, cfg: &ChatRequestConfig) -> f64 {
        match endpoint {
            Endpoint::Chat => self.chat.latency(cfg),
            Endpoint::Completion => self.completion.latency(cfg),
        }
    }
}

/// Generates `cfg.n` choices. `format` is the format named in the prompt;
/// when absent it is guessed from the sample.
pub fn mock_generate<R: Rng + ?Sized>(
    sample: Option<&[u8]>,
    format: Option<Format>,
    cfg: &ChatRequestConfig,
    rng: &mut R,
) -> (Vec<Vec<u8>>, Vec<FinishReason>) {
    let format = format.or_else(|| sample.and_then(sniff_format));
    let base: Vec<u8> = match sample {
        Some(s) => s.to_vec(),
        None => canonical_instance(format).to_vec(),
    };
    let t = cfg.temperature;
    let budget = cfg.max_tokens as usize * BYTES_PER_TOKEN;
    let mut choices = Vec::with_capacity(cfg.n as usize);
    let mut reasons = Vec::with_capacity(cfg.n as usize);
    for _ in 0..cfg.n {
        let mut out = if rng.random_bool(p_dup(t)) {
            base.clone()
        } else {
            structural_edits(&base, format, edit_count(t), budget, rng)
        };
        let pc = p_corrupt(t);
        if pc > 0.0 {
            out = corrupt(&out, pc, rng);
        }
        if out.len() > budget {
            out.truncate(budget);
            reasons.push(FinishReason::Length);
        } else {
            reasons.push(FinishReason::Stop);
        }
        choices.push(out);
    }
    (choices, reasons)
}

impl Provider for MockProvider {
    fn generate(&self, request: &GenerationRequest, rng: &mut dyn RngCore) -> Result<GenerationResponse, ProviderError> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let payload = &request.payload;
        let format = payload.format_name.as_deref().and_then(|f| f.parse::<Format>().ok());
        let (raw, finish_reasons) = mock_generate(payload.sample.as_deref(), format, &request.cfg, rng);
        let label = payload.format_name.as_deref().unwrap_or("");
        let choices = raw
            .into_iter()
            .map(|bytes| {
                let body = String::from_utf8_lossy(&bytes).into_owned();
                match request.endpoint {
                    // Chat models wrap payloads in a short reply with a fenced block.
                    Endpoint::Chat => format!("Sure, here is another one:\n```{label}\n{body}\n```"),
                    Endpoint::Completion => body,
                }
            })
            .collect();
        Ok(GenerationResponse {
            choices,
            latency_s: self.latency(request.endpoint, &request.cfg),
            finish_reasons,
        })
    }

    fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{temperature_grid, unique_ratio};
    use crate::mutate::chat::{build_prompt, parse_response, PromptVariant};
    use crate::validate::valid_ratio;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SAMPLE: &[u8] = b"<doc>\n    <clean> YES </clean>\n    <dirty> NO </dirty>\n    <mixed> YES </mixed>\n</doc>\n";

    fn cfg(n: u32, t: f64) -> ChatRequestConfig {
        ChatRequestConfig::new(256, n, t).unwrap()
    }

    fn sample_choices(format: Format, sample: &[u8], t: f64, count: usize, seed: u64) -> Vec<Vec<u8>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        while out.len() < count {
            out.extend(mock_generate(Some(sample), Some(format), &cfg(20, t), &mut rng).0);
        }
        out.truncate(count);
        out
    }

    #[test]
    fn functional_forms() {
        assert_eq!(p_dup(0.0), 1.0);
        assert_eq!(p_dup(1.25), 0.0);
        assert_eq!(p_corrupt(1.0), 0.0);
        assert_eq!(p_corrupt(2.0), 0.4);
        assert_eq!(edit_count(0.0), 1);
        assert_eq!(edit_count(1.25), 6);
    }

    #[test]
    fn zero_temperature_duplicates() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (c, _) = mock_generate(Some(SAMPLE), Some(Format::Xml), &cfg(5, 0.0), &mut rng);
        assert_eq!(c.len(), 5);
        assert!(c.iter().all(|x| x == SAMPLE));
        let hundred = sample_choices(Format::Xml, SAMPLE, 0.0, 100, 2);
        assert_eq!(unique_ratio(&hundred).unwrap(), 0.01);
    }

    #[test]
    fn temperature_one_stays_valid() {
        let choices = sample_choices(Format::Xml, SAMPLE, 1.0, 1000, 3);
        assert_eq!(valid_ratio(&choices, Format::Xml.validator()).unwrap(), 1.0);
    }

    #[test]
    fn hot_output_is_less_valid() {
        let warm = valid_ratio(&sample_choices(Format::Xml, SAMPLE, 1.0, 1000, 4), Format::Xml.validator()).unwrap();
        let hot = valid_ratio(&sample_choices(Format::Xml, SAMPLE, 2.0, 1000, 5), Format::Xml.validator()).unwrap();
        assert!(hot < warm, "{hot} vs {warm}");
    }

    #[test]
    fn ratios_are_monotone_in_temperature() {
        let samples: [(Format, &[u8]); 3] = [
            (Format::Xml, SAMPLE),
            (Format::Json, b"{\"name\": \"widget\", \"id\": 7, \"tags\": [\"a\", \"b\"]}"),
            (Format::Script, b"let x = 1; if (x) { x = x + 1; }"),
        ];
        for (format, sample) in samples {
            let mut prev_unique = 0.0;
            let mut prev_valid = 1.0;
            for (i, t) in temperature_grid().into_iter().enumerate() {
                let c = sample_choices(format, sample, t, 1000, 100 + i as u64);
                let u = unique_ratio(&c).unwrap();
                let v = valid_ratio(&c, format.validator()).unwrap();
                assert!(u >= prev_unique, "{format}: unique {u} < {prev_unique} at t={t}");
                assert!(v <= prev_valid, "{format}: valid {v} > {prev_valid} at t={t}");
                prev_unique = u;
                prev_valid = v;
            }
        }
    }

    #[test]
    fn deterministic_under_fixed_rng() {
        let req = GenerationRequest {
            payload: build_prompt(PromptVariant::Ai, Endpoint::Chat, "xml", Some(SAMPLE)).unwrap(),
            cfg: cfg(10, 1.5),
            endpoint: Endpoint::Chat,
            model_name: String::new(),
        };
        let p = MockProvider::new();
        let a = p.generate(&req, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = p.generate(&req, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_eq!(p.calls(), 2);
        assert_eq!(parse_response(&a.choices).len(), 10);
    }

    #[test]
    fn latency_model() {
        let p = MockProvider::new();
        let mut prev = 0.0;
        for max_tokens in [16, 64, 256, 1024, 4096] {
            let l = p.latency(Endpoint::Completion, &ChatRequestConfig::new(max_tokens, 20, 1.0).unwrap());
            assert!(l >= prev);
            prev = l;
        }
        let per_choice = |n| p.latency(Endpoint::Completion, &cfg(n, 1.0)) / n as f64;
        assert!(per_choice(1) > per_choice(20) && per_choice(20) > per_choice(128));
        assert!(p.latency(Endpoint::Chat, &cfg(20, 1.0)) > p.latency(Endpoint::Completion, &cfg(20, 1.0)));
    }

    #[test]
    fn truncation_reports_length() {
        let big = format!("<doc>{}</doc>", "<item>x</item>".repeat(200));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (c, r) = mock_generate(Some(big.as_bytes()), Some(Format::Xml), &ChatRequestConfig::new(16, 3, 0.0).unwrap(), &mut rng);
        assert!(c.iter().all(|x| x.len() == 16 * BYTES_PER_TOKEN));
        assert!(r.iter().all(|&f| f == FinishReason::Length));
    }
}
