//! The model boundary: an OpenAI-compatible HTTP client and an offline mock.

pub mod http;
pub mod mock;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mutate::chat::{ChatRequestConfig, Endpoint, PromptPayload};

pub use http::HttpProvider;
pub use mock::{LatencyModel, MockProvider};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub payload: PromptPayload,
    pub cfg: ChatRequestConfig,
    pub endpoint: Endpoint,
    pub model_name: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

impl FinishReason {
    pub fn from_wire(s: Option<&str>) -> Self {
        match s {
            Some("stop") => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            _ => FinishReason::Error,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationResponse {
    pub choices: Vec<String>,
    pub latency_s: f64,
    pub finish_reasons: Vec<FinishReason>,
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider unavailable after {attempts} attempts: {detail}")]
    Unavailable { attempts: u32, detail: String },
    #[error("provider protocol error: {0}")]
    Protocol(String),
    #[error("request rejected with HTTP {status}: {detail}")]
    Rejected { status: u16, detail: String },
}

pub trait Provider: Send + Sync {
    fn generate(&self, request: &GenerationRequest, rng: &mut dyn RngCore) -> Result<GenerationResponse, ProviderError>;

    /// Number of `generate` calls made so far.
    fn calls(&self) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    Mock,
    Http,
}

impl std::str::FromStr for ProviderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "mock" => Ok(ProviderKind::Mock),
            "http" => Ok(ProviderKind::Http),
            _ => Err(format!("unknown provider '{s}'")),
        }
    }
}

impl std::fmt::Display for ProviderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProviderKind::Mock => "mock",
            ProviderKind::Http => "http",
        })
    }
}
