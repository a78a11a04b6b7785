//! Target execution. Bundled targets run in-process and report edges through
//! explicit instrumentation points; external programs are adapted through a
//! trace file (see [`external`]).

pub mod external;
pub mod vocab;
mod toy_checksum;
mod toy_json;
mod toy_script;
mod toy_xml;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{EdgeId, EdgeTrace};
use crate::probe::Probe;
use crate::validate::Format;

pub use external::ExternalTarget;
pub use toy_checksum::ToyChecksum;
pub use toy_json::ToyJson;
pub use toy_script::ToyScript;
pub use toy_xml::ToyXml;

/// Default cap on input size.
pub const DEFAULT_MAX_INPUT: usize = 1 << 20;

/// Edge ids at or above this value belong to the post-parsing stage of
/// every bundled target.
pub const DEEP_STAGE_BASE: u16 = 1000;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unknown target '{0}'")]
    UnknownTarget(String),
    #[error("input of {len} bytes exceeds the {max}-byte limit")]
    InputTooLarge { len: usize, max: usize },
    #[error("failed to execute target: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed trace record on line {line}: {text:?}")]
    TraceFormat { line: usize, text: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Passed the format-parsing stage and ran the deep logic.
    Accepted,
    /// Rejected by the format-parsing stage.
    ParseError,
    Crash,
}

#[derive(Debug, Clone)]
pub struct ExecResult {
    pub verdict: Verdict,
    pub trace: EdgeTrace,
    pub wall_time: f64,
    pub timed_out: bool,
}

/// What a target reports for one input.
#[derive(Debug, Clone)]
pub struct Execution {
    pub verdict: Verdict,
    pub trace: EdgeTrace,
    pub timed_out: bool,
}

impl Execution {
    pub fn new(verdict: Verdict, trace: EdgeTrace) -> Self {
        Self {
            verdict,
            trace,
            timed_out: false,
        }
    }
}

pub trait Target: Send + Sync {
    fn name(&self) -> &str;

    /// Name substituted into prompt templates.
    fn format_name(&self) -> &str;

    /// Bundled grammar, when the target has one.
    fn format(&self) -> Option<Format>;

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError>;
}

impl Probe for EdgeTrace {
    #[inline]
    fn hit(&mut self, edge: u16) {
        EdgeTrace::hit(self, EdgeId(edge));
    }

    #[inline]
    fn hit_n(&mut self, edge: u16, n: u32) {
        EdgeTrace::hit_n(self, EdgeId(edge), n);
    }
}

/// Records parse-stage edges, leaving rejection paths uninstrumented so that
/// everything a rejected input touches is also reachable by a valid one.
pub(crate) struct ParseProbe<'a> {
    trace: &'a mut EdgeTrace,
    is_error: fn(u16) -> bool,
}

impl<'a> ParseProbe<'a> {
    pub(crate) fn new(trace: &'a mut EdgeTrace, is_error: fn(u16) -> bool) -> Self {
        Self { trace, is_error }
    }
}

impl Probe for ParseProbe<'_> {
    #[inline]
    fn hit(&mut self, edge: u16) {
        if !(self.is_error)(edge) {
            self.trace.hit(EdgeId(edge));
        }
    }

    #[inline]
    fn hit_n(&mut self, edge: u16, n: u32) {
        if !(self.is_error)(edge) {
            self.trace.hit_n(EdgeId(edge), n);
        }
    }
}

/// A target plus execution limits. Cheap to clone and share across threads.
#[derive(Clone)]
pub struct TargetHarness {
    target: Arc<dyn Target>,
    max_input_len: usize,
}

impl std::fmt::Debug for TargetHarness {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TargetHarness")
            .field("target", &self.target.name())
            .field("max_input_len", &self.max_input_len)
            .finish()
    }
}

impl TargetHarness {
    pub fn new(target: Arc<dyn Target>) -> Self {
        Self {
            target,
            max_input_len: DEFAULT_MAX_INPUT,
        }
    }

    pub fn with_max_input_len(mut self, max: usize) -> Self {
        self.max_input_len = max;
        self
    }

    pub fn max_input_len(&self) -> usize {
        self.max_input_len
    }

    pub fn name(&self) -> &str {
        self.target.name()
    }

    pub fn format_name(&self) -> &str {
        self.target.format_name()
    }

    pub fn format(&self) -> Option<Format> {
        self.target.format()
    }

    pub fn run(&self, input: &[u8]) -> Result<ExecResult, HarnessError> {
        if input.len() > self.max_input_len {
            return Err(HarnessError::InputTooLarge {
                len: input.len(),
                max: self.max_input_len,
            });
        }
        let start = Instant::now();
        let exec = self.target.execute(input)?;
        Ok(ExecResult {
            verdict: exec.verdict,
            trace: exec.trace,
            wall_time: start.elapsed().as_secs_f64(),
            timed_out: exec.timed_out,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TargetDescriptor {
    pub name: &'static str,
    pub format_name: &'static str,
}

const BUNDLED: [(&str, Format); 4] = [
    ("toy-json", Format::Json),
    ("toy-xml", Format::Xml),
    ("toy-script", Format::Script),
    ("toy-checksum", Format::Checksum),
];

/// The bundled target registry.
pub fn list_targets() -> Vec<TargetDescriptor> {
    BUNDLED
        .iter()
        .map(|&(name, format)| TargetDescriptor {
            name,
            format_name: format.name(),
        })
        .collect()
}

fn bundled(name: &str) -> Option<Arc<dyn Target>> {
    Some(match name {
        "toy-json" => Arc::new(ToyJson),
        "toy-xml" => Arc::new(ToyXml),
        "toy-script" => Arc::new(ToyScript),
        "toy-checksum" => Arc::new(ToyChecksum),
        _ => return None,
    })
}

/// Resolves a `--target` value: a bundled name or `cmd:<path>`.
pub fn lookup(spec: &str) -> Result<TargetHarness, HarnessError> {
    if let Some(path) = spec.strip_prefix("cmd:") {
        if path.is_empty() {
            return Err(HarnessError::UnknownTarget(spec.to_string()));
        }
        let ext = ExternalTarget::new(PathBuf::from(path), external::DEFAULT_TIMEOUT);
        return Ok(TargetHarness::new(Arc::new(ext)));
    }
    bundled(spec)
        .map(TargetHarness::new)
        .ok_or_else(|| HarnessError::UnknownTarget(spec.to_string()))
}

/// Like [`lookup`], with an explicit timeout and prompt format for external commands.
pub fn lookup_with(spec: &str, timeout: Duration, format_name: Option<&str>) -> Result<TargetHarness, HarnessError> {
    if let Some(path) = spec.strip_prefix("cmd:") {
        if path.is_empty() {
            return Err(HarnessError::UnknownTarget(spec.to_string()));
        }
        let mut ext = ExternalTarget::new(PathBuf::from(path), timeout);
        if let Some(f) = format_name {
            ext = ext.with_format_name(f);
        }
        return Ok(TargetHarness::new(Arc::new(ext)));
    }
    lookup(spec)
}

/// Built-in starting corpus for a bundled target.
pub fn default_seeds(name: &str) -> Result<Vec<Vec<u8>>, HarnessError> {
    let seeds: Vec<Vec<u8>> = match name {
        "toy-xml" => toy_xml::SEEDS.iter().map(|s| s.as_bytes().to_vec()).collect(),
        "toy-json" => toy_json::SEEDS.iter().map(|s| s.as_bytes().to_vec()).collect(),
        "toy-script" => toy_script::SEEDS.iter().map(|s| s.as_bytes().to_vec()).collect(),
        "toy-checksum" => toy_checksum::seeds(),
        _ => return Err(HarnessError::UnknownTarget(name.to_string())),
    };
    Ok(seeds)
}

/// Index of `word` in `vocab`, or `vocab.len()` when absent.
pub(crate) fn vocab_index(vocab: &[&str], word: &str) -> u16 {
    vocab.iter().position(|v| *v == word).unwrap_or(vocab.len()) as u16
}
