//! The chat mutator: prompt rendering, request configuration, response
//! parsing and AI-queue emission.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError};
use crate::fsutil::write_atomic;
use crate::providers::{GenerationRequest, Provider, ProviderError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PromptVariant {
    #[serde(rename = "AI")]
    Ai,
    #[serde(rename = "AI_noINPUT")]
    AiNoInput,
    #[serde(rename = "AI_noFORM")]
    AiNoForm,
}

impl PromptVariant {
    pub const ALL: [PromptVariant; 3] = [PromptVariant::Ai, PromptVariant::AiNoInput, PromptVariant::AiNoForm];

    pub fn takes_sample(self) -> bool {
        self != PromptVariant::AiNoInput
    }
}

impl fmt::Display for PromptVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptVariant::Ai => "AI",
            PromptVariant::AiNoInput => "AI_noINPUT",
            PromptVariant::AiNoForm => "AI_noFORM",
        })
    }
}

impl FromStr for PromptVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "ai" => Ok(PromptVariant::Ai),
            "ai_noinput" => Ok(PromptVariant::AiNoInput),
            "ai_noform" => Ok(PromptVariant::AiNoForm),
            _ => Err(format!("unknown prompt variant '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Endpoint {
    Chat,
    Completion,
}

impl Endpoint {
    /// Short label used in report rows.
    pub fn short(self) -> &'static str {
        match self {
            Endpoint::Chat => "CT",
            Endpoint::Completion => "CP",
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Endpoint::Chat => "chat",
            Endpoint::Completion => "completion",
        })
    }
}

impl FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "chat" | "ct" => Ok(Endpoint::Chat),
            "completion" | "cp" => Ok(Endpoint::Completion),
            _ => Err(format!("unknown endpoint '{s}'")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("max_tokens must be positive")]
    MaxTokens,
    #[error("n must be between 1 and 128, got {0}")]
    N(u32),
    #[error("temperature must be between 0.0 and 2.0, got {0}")]
    Temperature(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChatRequestConfig {
    pub max_tokens: u32,
    pub n: u32,
    pub temperature: f64,
}

impl ChatRequestConfig {
    pub const DEFAULT_MAX_TOKENS: u32 = 256;
    pub const DEFAULT_N: u32 = 20;
    pub const MAX_N: u32 = 128;

    pub fn new(max_tokens: u32, n: u32, temperature: f64) -> Result<Self, ConfigError> {
        let cfg = Self { max_tokens, n, temperature };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        if self.max_tokens == 0 {
            return Err(ConfigError::MaxTokens);
        }
        if !(1..=Self::MAX_N).contains(&self.n) {
            return Err(ConfigError::N(self.n));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(ConfigError::Temperature(self.temperature));
        }
        Ok(())
    }

    pub fn default_temperature(endpoint: Endpoint) -> f64 {
        match endpoint {
            Endpoint::Completion => 1.25,
            Endpoint::Chat => 1.50,
        }
    }

    pub fn default_for(endpoint: Endpoint) -> Self {
        Self {
            max_tokens: Self::DEFAULT_MAX_TOKENS,
            n: Self::DEFAULT_N,
            temperature: Self::default_temperature(endpoint),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PromptText {
    Chat { system: String, user: String },
    Completion { prompt: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPayload {
    pub text: PromptText,
    /// Format named in the prompt; `None` for the format-agnostic variant.
    pub format_name: Option<String>,
    pub sample: Option<Vec<u8>>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt variant {0} needs a sample input")]
    MissingSample(PromptVariant),
    #[error("prompt variant {0} takes no sample input")]
    UnexpectedSample(PromptVariant),
}

pub fn build_prompt(
    variant: PromptVariant,
    endpoint: Endpoint,
    format_name: &str,
    sample: Option<&[u8]>,
) -> Result<PromptPayload, PromptError> {
    let sample_text = match (variant.takes_sample(), sample) {
        (true, Some(s)) => Some(String::from_utf8_lossy(s).into_owned()),
        (true, None) => return Err(PromptError::MissingSample(variant)),
        (false, Some(_)) => return Err(PromptError::UnexpectedSample(variant)),
        (false, None) => None,
    };
    let s = sample_text.as_deref().unwrap_or_default();
    let fmt = format_name;
    let text = match (variant, endpoint) {
        (PromptVariant::Ai, Endpoint::Chat) => PromptText::Chat {
            system: format!("You are a {fmt} file generator"),
            user: format!("Here is an example {fmt} file, generate another one.\n{s}"),
        },
        (PromptVariant::Ai, Endpoint::Completion) => PromptText::Completion {
            prompt: format!("{s}\nAnd here is another {fmt} file like above: "),
        },
        (PromptVariant::AiNoInput, Endpoint::Chat) => PromptText::Chat {
            system: format!("You are a {fmt} file generator"),
            user: format!("Generate a {fmt} file."),
        },
        (PromptVariant::AiNoInput, Endpoint::Completion) => PromptText::Completion {
            prompt: format!("Here is a {fmt} file: "),
        },
        (PromptVariant::AiNoForm, Endpoint::Chat) => PromptText::Chat {
            system: "You are a file generator".to_string(),
            user: format!("Here is an example file, generate another one.\n{s}"),
        },
        (PromptVariant::AiNoForm, Endpoint::Completion) => PromptText::Completion {
            prompt: format!("{s}\nAnd here is another one like above: "),
        },
    };
    Ok(PromptPayload {
        text,
        format_name: (variant != PromptVariant::AiNoForm).then(|| fmt.to_string()),
        sample: sample.map(<[u8]>::to_vec),
    })
}

/// One candidate per non-empty choice. A fenced block, when present,
/// replaces the choice with the interior of its first fence.
pub fn parse_response<S: AsRef<str>>(choices: &[S]) -> Vec<Vec<u8>> {
    choices
        .iter()
        .filter_map(|c| {
            let text = c.as_ref().trim();
            let body = match text.find("```") {
                Some(start) => {
                    let after = &text[start + 3..];
                    // Skip the info string (e.g. a language tag) on the opening line.
                    let inner = after.find('\n').map_or("", |nl| &after[nl + 1..]);
                    match inner.find("```") {
                        Some(end) => &inner[..end],
                        None => inner,
                    }
                }
                None => text,
            };
            let body = body.trim();
            (!body.is_empty()).then(|| body.as_bytes().to_vec())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationRecord {
    pub source_seed_id: u64,
    pub request_config: ChatRequestConfig,
    pub latency_s: f64,
    pub choices_returned: usize,
    pub seeds_emitted: usize,
    /// Provider failure, if the request did not complete.
    pub error: Option<String>,
    /// Sequence numbers of the files written, as a half-open range.
    pub files: (u64, u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AiName {
    pub seq: u64,
    pub source_id: u64,
    pub temperature: f64,
}

/// `ai:%08d,src:%06d,t:%.2f`
pub fn ai_file_name(seq: u64, source_id: u64, temperature: f64) -> String {
    format!("ai:{seq:08},src:{source_id:06},t:{temperature:.2}")
}

pub fn parse_ai_name(name: &str) -> Option<AiName> {
    let rest = name.strip_prefix("ai:")?;
    let (seq, rest) = rest.split_once(",src:")?;
    let (src, t) = rest.split_once(",t:")?;
    Some(AiName {
        seq: seq.parse().ok()?,
        source_id: src.parse().ok()?,
        temperature: t.parse().ok()?,
    })
}

/// Where the chat mutator draws its sample seeds from.
pub trait SeedSource {
    fn pick(&self, rng: &mut dyn RngCore) -> Result<(u64, Vec<u8>), CorpusError>;
}

impl SeedSource for Corpus {
    fn pick(&self, rng: &mut dyn RngCore) -> Result<(u64, Vec<u8>), CorpusError> {
        self.pick_random(rng).map(|s| (s.id, s.bytes.clone()))
    }
}

/// A persisted queue directory, read afresh on every pick.
pub struct QueueDir(pub PathBuf);

impl SeedSource for QueueDir {
    fn pick(&self, rng: &mut dyn RngCore) -> Result<(u64, Vec<u8>), CorpusError> {
        let mut entries: Vec<(u64, PathBuf)> = std::fs::read_dir(&self.0)?
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().into_owned();
                let id = name.strip_prefix("id:")?.split(',').next()?.parse().ok()?;
                Some((id, e.path()))
            })
            .collect();
        if entries.is_empty() {
            return Err(CorpusError::EmptyPool);
        }
        entries.sort();
        let (id, path) = &entries[rand::Rng::random_range(rng, 0..entries.len())];
        Ok((*id, std::fs::read(path)?))
    }
}

/// Holds everything a chat-mutation step needs besides the pool.
pub struct ChatMutator<'p> {
    pub provider: &'p dyn Provider,
    pub variant: PromptVariant,
    pub endpoint: Endpoint,
    pub cfg: ChatRequestConfig,
    pub format_name: String,
    pub model_name: String,
    pub ai_queue_dir: PathBuf,
    next_seq: u64,
    provider_down: bool,
}

impl<'p> ChatMutator<'p> {
    pub fn new(
        provider: &'p dyn Provider,
        variant: PromptVariant,
        endpoint: Endpoint,
        cfg: ChatRequestConfig,
        format_name: &str,
        ai_queue_dir: &Path,
    ) -> Self {
        Self {
            provider,
            variant,
            endpoint,
            cfg,
            format_name: format_name.to_string(),
            model_name: String::new(),
            ai_queue_dir: ai_queue_dir.to_path_buf(),
            next_seq: 0,
            provider_down: false,
        }
    }

    pub fn with_model_name(mut self, name: &str) -> Self {
        self.model_name = name.to_string();
        self
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    /// True once the provider has failed with retries exhausted.
    pub fn provider_down(&self) -> bool {
        self.provider_down
    }

    /// One round trip: pick a seed, prompt, parse, and write candidates.
    pub fn mutate_once(&mut self, pool: &dyn SeedSource, rng: &mut dyn RngCore) -> Result<MutationRecord, CorpusError> {
        let (source_id, bytes) = pool.pick(rng)?;
        let sample = self.variant.takes_sample().then_some(bytes.as_slice());
        let payload = build_prompt(self.variant, self.endpoint, &self.format_name, sample)
            .expect("sample presence follows the variant");
        let request = GenerationRequest {
            payload,
            cfg: self.cfg,
            endpoint: self.endpoint,
            model_name: self.model_name.clone(),
        };
        let first = self.next_seq;
        let start = Instant::now();
        let mut record = MutationRecord {
            source_seed_id: source_id,
            request_config: self.cfg,
            latency_s: 0.0,
            choices_returned: 0,
            seeds_emitted: 0,
            error: None,
            files: (first, first),
        };
        match self.provider.generate(&request, rng) {
            Ok(resp) => {
                record.latency_s = resp.latency_s;
                record.choices_returned = resp.choices.len();
                for candidate in parse_response(&resp.choices).into_iter().take(self.cfg.n as usize) {
                    let name = ai_file_name(self.next_seq, source_id, self.cfg.temperature);
                    write_atomic(&self.ai_queue_dir.join(name), &candidate)?;
                    self.next_seq += 1;
                    record.seeds_emitted += 1;
                }
            }
            Err(e) => {
                record.latency_s = start.elapsed().as_secs_f64();
                record.error = Some(e.to_string());
                if matches!(e, ProviderError::Unavailable { .. }) {
                    log::warn!("chat provider unavailable: {e}");
                    self.provider_down = true;
                }
            }
        }
        record.files.1 = self.next_seq;
        Ok(record)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &[u8] = b"<a>1</a>";

    fn chat(p: &PromptPayload) -> (&str, &str) {
        match &p.text {
            PromptText::Chat { system, user } => (system, user),
            _ => panic!("expected chat payload"),
        }
    }

    fn completion(p: &PromptPayload) -> &str {
        match &p.text {
            PromptText::Completion { prompt } => prompt,
            _ => panic!("expected completion payload"),
        }
    }

    #[test]
    fn all_six_renderings() {
        let p = build_prompt(PromptVariant::Ai, Endpoint::Chat, "xml", Some(SAMPLE)).unwrap();
        assert_eq!(chat(&p), ("You are a xml file generator", "Here is an example xml file, generate another one.\n<a>1</a>"));
        let p = build_prompt(PromptVariant::Ai, Endpoint::Completion, "xml", Some(SAMPLE)).unwrap();
        assert_eq!(completion(&p), "<a>1</a>\nAnd here is another xml file like above: ");
        let p = build_prompt(PromptVariant::AiNoInput, Endpoint::Chat, "xml", None).unwrap();
        assert_eq!(chat(&p), ("You are a xml file generator", "Generate a xml file."));
        let p = build_prompt(PromptVariant::AiNoInput, Endpoint::Completion, "json", None).unwrap();
        assert_eq!(completion(&p), "Here is a json file: ");
        let p = build_prompt(PromptVariant::AiNoForm, Endpoint::Chat, "xml", Some(SAMPLE)).unwrap();
        assert_eq!(chat(&p), ("You are a file generator", "Here is an example file, generate another one.\n<a>1</a>"));
        assert_eq!(p.format_name, None);
        let p = build_prompt(PromptVariant::AiNoForm, Endpoint::Completion, "xml", Some(SAMPLE)).unwrap();
        assert_eq!(completion(&p), "<a>1</a>\nAnd here is another one like above: ");
    }

    #[test]
    fn sample_presence_is_checked() {
        assert_eq!(
            build_prompt(PromptVariant::Ai, Endpoint::Chat, "xml", None),
            Err(PromptError::MissingSample(PromptVariant::Ai))
        );
        assert_eq!(
            build_prompt(PromptVariant::AiNoInput, Endpoint::Chat, "xml", Some(SAMPLE)),
            Err(PromptError::UnexpectedSample(PromptVariant::AiNoInput))
        );
    }

    #[test]
    fn response_parsing() {
        assert_eq!(parse_response(&["<doc>x</doc>"]), vec![b"<doc>x</doc>".to_vec()]);
        assert_eq!(parse_response(&["Here you go:\n```xml\n<a/>\n```"]), vec![b"<a/>".to_vec()]);
        assert_eq!(parse_response(&["```\n{}\n```\ntrailing ```x```"]), vec![b"{}".to_vec()]);
        assert_eq!(parse_response(&["open fence\n```json\n[1,\n"]), vec![b"[1,".to_vec()]);
        assert!(parse_response(&["", "  ", "```\n```"]).is_empty());
        assert_eq!(parse_response(&["b", "a"]), vec![b"b".to_vec(), b"a".to_vec()]);
    }

    #[test]
    fn request_config_ranges() {
        assert!(ChatRequestConfig::new(256, 20, 1.25).is_ok());
        assert_eq!(ChatRequestConfig::new(0, 20, 1.0), Err(ConfigError::MaxTokens));
        assert_eq!(ChatRequestConfig::new(256, 129, 1.0), Err(ConfigError::N(129)));
        assert_eq!(ChatRequestConfig::new(256, 0, 1.0), Err(ConfigError::N(0)));
        assert_eq!(ChatRequestConfig::new(256, 20, 3.0), Err(ConfigError::Temperature(3.0)));
        let cp = ChatRequestConfig::default_for(Endpoint::Completion);
        assert_eq!((cp.max_tokens, cp.n, cp.temperature), (256, 20, 1.25));
        assert_eq!(ChatRequestConfig::default_for(Endpoint::Chat).temperature, 1.50);
    }

    #[test]
    fn ai_names_round_trip() {
        let n = ai_file_name(7, 12, 1.25);
        assert_eq!(n, "ai:00000007,src:000012,t:1.25");
        assert_eq!(parse_ai_name(&n), Some(AiName { seq: 7, source_id: 12, temperature: 1.25 }));
        assert_eq!(parse_ai_name("id:000001,src:none,origin:ai"), None);
    }

    #[test]
    fn variant_names() {
        for v in PromptVariant::ALL {
            assert_eq!(v.to_string().parse::<PromptVariant>().unwrap(), v);
        }
    }
}
