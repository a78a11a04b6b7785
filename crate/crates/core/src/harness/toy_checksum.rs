//! Checksum-list target. Lines are checked against the md5 of their own file
//! name (the target has no filesystem); only matching lines reach the
//! per-file logic.

use md5::{Digest, Md5};

use super::vocab::FILE_EXTENSIONS;
use super::{ParseProbe, vocab_index, Execution, HarnessError, Target, Verdict};
use crate::coverage::EdgeTrace;
use crate::probe::Probe;
use crate::validate::checksum::{self, DigestLine};
use crate::validate::Format;

mod edge {
    pub const ENTRY: u16 = 1000;
    pub const MATCH: u16 = 1001;
    pub const MISMATCH: u16 = 1002;
    pub const EXTENSION: u16 = 1010;
    pub const PATH_DEPTH: u16 = 1030;
    pub const NAME_LEN: u16 = 1040;
    pub const BINARY: u16 = 1060;
    pub const TEXT: u16 = 1061;
    pub const UPPERCASE: u16 = 1062;
    pub const DUPLICATE: u16 = 1063;
}

pub(crate) fn md5_hex(data: &[u8]) -> String {
    hex::encode(Md5::digest(data))
}

pub(super) fn seeds() -> Vec<Vec<u8>> {
    let line = |name: &str, binary: bool| {
        let sep = if binary { " *" } else { "  " };
        format!("{}{}{}\n", md5_hex(name.as_bytes()), sep, name)
    };
    vec![
        format!("{}{}", line("hello.txt", false), line("src/main.c", false)).into_bytes(),
        line("image.iso", true).into_bytes(),
    ]
}

pub struct ToyChecksum;

impl Target for ToyChecksum {
    fn name(&self) -> &str {
        "toy-checksum"
    }

    fn format_name(&self) -> &str {
        Format::Checksum.name()
    }

    fn format(&self) -> Option<Format> {
        Some(Format::Checksum)
    }

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError> {
        let mut trace = EdgeTrace::new();
        let verdict = match checksum::parse_with(input, &mut ParseProbe::new(&mut trace, checksum::edge::is_error)) {
            Err(_) => Verdict::ParseError,
            Ok(lines) => {
                deep(&lines, &mut trace);
                Verdict::Accepted
            }
        };
        Ok(Execution::new(verdict, trace))
    }
}

fn deep<P: Probe>(lines: &[DigestLine], p: &mut P) {
    p.hit(edge::ENTRY);
    let mut verified: Vec<&[u8]> = Vec::new();
    for l in lines {
        if !l.digest.eq_ignore_ascii_case(&md5_hex(&l.name)) {
            p.hit(edge::MISMATCH);
            continue;
        }
        p.hit(edge::MATCH);
        let name = String::from_utf8_lossy(&l.name);
        let file = name.rsplit('/').next().unwrap_or("");
        let ext = file.rsplit_once('.').map(|(_, e)| e).unwrap_or("");
        p.hit(edge::EXTENSION + vocab_index(&FILE_EXTENSIONS, ext));
        p.hit(edge::PATH_DEPTH + name.matches('/').count().min(5) as u16);
        p.hit(edge::NAME_LEN + (l.name.len() / 4).min(10) as u16);
        p.hit(if l.binary { edge::BINARY } else { edge::TEXT });
        if l.digest.bytes().any(|b| b.is_ascii_uppercase()) {
            p.hit(edge::UPPERCASE);
        }
        if verified.contains(&l.name.as_slice()) {
            p.hit(edge::DUPLICATE);
        }
        verified.push(&l.name);
    }
}
