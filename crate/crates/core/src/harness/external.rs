//! Adapter for out-of-process targets.
//!
//! The command runs as `<path> <input-file>` with `TRACE_OUT` naming a file
//! it must fill with one `%06u:%u` record (edge id, hit count) per line.
//! Exit status 0 is Accepted, 1 is ParseError, death by signal is Crash.
//! Any other exit code counts as ParseError.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::Duration;

use wait_timeout::ChildExt;

use super::{Execution, HarnessError, Target, Verdict};
use crate::coverage::{EdgeId, EdgeTrace};
use crate::validate::Format;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(1);

pub const TRACE_ENV: &str = "TRACE_OUT";

#[derive(Debug, Clone)]
pub struct ExternalTarget {
    path: PathBuf,
    label: String,
    timeout: Duration,
    format_name: String,
}

impl ExternalTarget {
    pub fn new(path: PathBuf, timeout: Duration) -> Self {
        let label = format!("cmd:{}", path.display());
        Self {
            path,
            label,
            timeout,
            format_name: "text".to_string(),
        }
    }

    pub fn with_format_name(mut self, name: &str) -> Self {
        self.format_name = name.to_string();
        self
    }
}

impl Target for ExternalTarget {
    fn name(&self) -> &str {
        &self.label
    }

    fn format_name(&self) -> &str {
        &self.format_name
    }

    fn format(&self) -> Option<Format> {
        self.format_name.parse().ok()
    }

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError> {
        let mut input_file = tempfile::NamedTempFile::new()?;
        input_file.write_all(input)?;
        input_file.flush()?;
        let trace_file = tempfile::NamedTempFile::new()?;

        let mut child = Command::new(&self.path)
            .arg(input_file.path())
            .env(TRACE_ENV, trace_file.path())
            .stdin(Stdio::null())
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()?;
        let status = match child.wait_timeout(self.timeout)? {
            Some(status) => status,
            None => {
                let _ = child.kill();
                child.wait()?;
                let trace = parse_trace(&std::fs::read_to_string(trace_file.path()).unwrap_or_default())
                    .unwrap_or_default();
                return Ok(Execution {
                    verdict: Verdict::Crash,
                    trace,
                    timed_out: true,
                });
            }
        };
        let verdict = match status.code() {
            Some(0) => Verdict::Accepted,
            Some(_) => Verdict::ParseError,
            None => Verdict::Crash,
        };
        let trace = parse_trace(&std::fs::read_to_string(trace_file.path())?)?;
        Ok(Execution::new(verdict, trace))
    }
}

/// Parses the textual trace format. Blank lines are ignored.
pub fn parse_trace(text: &str) -> Result<EdgeTrace, HarnessError> {
    let mut trace = EdgeTrace::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = || HarnessError::TraceFormat {
            line: i + 1,
            text: line.to_string(),
        };
        let (id, count) = line.split_once(':').ok_or_else(bad)?;
        let digits = |s: &str| !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit());
        if !digits(id) || !digits(count) {
            return Err(bad());
        }
        let id: u16 = id.parse().map_err(|_| bad())?;
        let count: u32 = count.parse().map_err(|_| bad())?;
        trace.hit_n(EdgeId(id), count);
    }
    Ok(trace)
}

/// Renders a trace in the same format, ordered by edge id.
pub fn format_trace(trace: &EdgeTrace) -> String {
    let mut out = String::new();
    for (edge, count) in trace.iter() {
        let _ = writeln!(out, "{:06}:{}", edge.0, count);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_format_is_exact() {
        let t: EdgeTrace = [(EdgeId(5), 3), (EdgeId(65535), 1)].into_iter().collect();
        assert_eq!(format_trace(&t), "000005:3\n065535:1\n");
        assert_eq!(parse_trace(&format_trace(&t)).unwrap(), t);
    }

    #[test]
    fn malformed_traces() {
        assert!(matches!(parse_trace("12"), Err(HarnessError::TraceFormat { line: 1, .. })));
        assert!(matches!(parse_trace("000001:1\n65536:1\n"), Err(HarnessError::TraceFormat { line: 2, .. })));
        assert!(parse_trace("-1:2").is_err());
        assert!(parse_trace("1: 2").is_err());
    }
}
