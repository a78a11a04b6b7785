//! `md5sum`-style digest lines: 32 hex digits, a space, a mode marker
//! (space for text, `*` for binary) and a non-empty file name.
//! Lines are separated by `\n`; a single trailing newline is allowed. A
//! leading backslash flags a line whose name uses escapes.

use std::fmt;

use crate::probe::Probe;

pub const DIGEST_HEX_LEN: usize = 32;

pub mod edge {
    pub const ENTRY: u16 = 1;
    pub const LINE: u16 = 2;
    pub const HEX_DIGIT: u16 = 3;
    pub const HEX_LOWER: u16 = 4;
    pub const HEX_UPPER: u16 = 5;
    pub const MODE_TEXT: u16 = 6;
    pub const MODE_BINARY: u16 = 7;
    pub const NAME_CHAR: u16 = 8;
    pub const TRAILING_NEWLINE: u16 = 9;
    pub const CRLF: u16 = 10;
    // Name byte classes.
    pub const NAME_ALPHA: u16 = 11;
    pub const NAME_DIGIT: u16 = 12;
    pub const NAME_DOT: u16 = 13;
    pub const NAME_SLASH: u16 = 14;
    pub const NAME_SPACE: u16 = 15;
    pub const NAME_PUNCT: u16 = 16;
    pub const NAME_HIGH: u16 = 17;
    pub const NAME_CONTROL: u16 = 18;
    pub const NAME_ESCAPE: u16 = 19;
    pub const ESCAPED_LINE: u16 = 20;
    pub const ERR_EMPTY: u16 = 40;
    pub const ERR_SHORT: u16 = 41;
    pub const ERR_NON_HEX: u16 = 42;
    pub const ERR_SEPARATOR: u16 = 43;
    pub const ERR_MODE: u16 = 44;
    pub const ERR_NO_NAME: u16 = 45;
    pub const ERR_BLANK_LINE: u16 = 46;
    pub const ERR_NUL: u16 = 47;
    pub const LAST: u16 = 99;

    /// Ids emitted only on rejection paths.
    pub fn is_error(id: u16) -> bool {
        (40..=47).contains(&id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChecksumError {
    pub line: usize,
    pub detail: &'static str,
}

impl fmt::Display for ChecksumError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.detail)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigestLine {
    /// Hex text exactly as written.
    pub digest: String,
    pub binary: bool,
    pub name: Vec<u8>,
}

pub fn parse_with<P: Probe>(src: &[u8], probe: &mut P) -> Result<Vec<DigestLine>, ChecksumError> {
    probe.hit(edge::ENTRY);
    let body = match src.strip_suffix(b"\n") {
        Some(b) => {
            probe.hit(edge::TRAILING_NEWLINE);
            b
        }
        None => src,
    };
    if body.is_empty() {
        probe.hit(edge::ERR_EMPTY);
        return Err(ChecksumError { line: 1, detail: "no digest lines" });
    }
    let mut lines = Vec::new();
    for (i, raw) in body.split(|&b| b == b'\n').enumerate() {
        let lineno = i + 1;
        let fail = |probe: &mut P, e: u16, detail| {
            probe.hit(e);
            Err(ChecksumError { line: lineno, detail })
        };
        let line = match raw.strip_suffix(b"\r") {
            Some(l) => {
                probe.hit(edge::CRLF);
                l
            }
            None => raw,
        };
        if line.is_empty() {
            return fail(probe, edge::ERR_BLANK_LINE, "blank line");
        }
        probe.hit(edge::LINE);
        // A leading backslash marks a name written with escapes.
        let (line, line_escaped) = match line.strip_prefix(b"\\") {
            Some(l) => (l, true),
            None => (line, false),
        };
        if line.len() < DIGEST_HEX_LEN {
            return fail(probe, edge::ERR_SHORT, "digest too short");
        }
        let (hex, rest) = line.split_at(DIGEST_HEX_LEN);
        for &b in hex {
            match b {
                b'0'..=b'9' => probe.hit(edge::HEX_DIGIT),
                b'a'..=b'f' => probe.hit(edge::HEX_LOWER),
                b'A'..=b'F' => probe.hit(edge::HEX_UPPER),
                _ => return fail(probe, edge::ERR_NON_HEX, "non-hex digit in digest"),
            }
        }
        if rest.first() != Some(&b' ') {
            return fail(probe, edge::ERR_SEPARATOR, "expected space after digest");
        }
        let binary = match rest.get(1) {
            Some(b' ') => {
                probe.hit(edge::MODE_TEXT);
                false
            }
            Some(b'*') => {
                probe.hit(edge::MODE_BINARY);
                true
            }
            _ => return fail(probe, edge::ERR_MODE, "expected mode marker"),
        };
        let name = &rest[2..];
        if name.is_empty() {
            return fail(probe, edge::ERR_NO_NAME, "missing file name");
        }
        if name.contains(&0) {
            return fail(probe, edge::ERR_NUL, "NUL in file name");
        }
        probe.hit_n(edge::NAME_CHAR, name.len() as u32);
        if line_escaped {
            probe.hit(edge::ESCAPED_LINE);
        }
        for &b in name {
            probe.hit(match b {
                b'a'..=b'z' | b'A'..=b'Z' => edge::NAME_ALPHA,
                b'0'..=b'9' => edge::NAME_DIGIT,
                b'.' => edge::NAME_DOT,
                b'/' => edge::NAME_SLASH,
                b' ' | b'\t' => edge::NAME_SPACE,
                b'\\' => edge::NAME_ESCAPE,
                0x80.. => edge::NAME_HIGH,
                0..0x20 | 0x7f => edge::NAME_CONTROL,
                _ => edge::NAME_PUNCT,
            });
        }
        lines.push(DigestLine {
            digest: String::from_utf8_lossy(hex).into_owned(),
            binary,
            name: name.to_vec(),
        });
    }
    Ok(lines)
}

pub fn parse(src: &[u8]) -> Result<Vec<DigestLine>, ChecksumError> {
    parse_with(src, &mut ())
}

pub fn render(lines: &[DigestLine]) -> Vec<u8> {
    let mut out = Vec::new();
    for l in lines {
        out.extend_from_slice(l.digest.as_bytes());
        out.extend_from_slice(if l.binary { b" *" } else { b"  " });
        out.extend_from_slice(&l.name);
        out.push(b'\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_md5sum_output() {
        let src = b"d41d8cd98f00b204e9800998ecf8427e  empty.txt\n0123456789ABCDEF0123456789abcdef *bin/x\n";
        let lines = parse(src).unwrap();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].binary);
        assert_eq!(render(&lines), src.to_vec());
    }

    #[test]
    fn rejects() {
        for bad in [
            &b""[..],
            b"\n",
            b"abc  x",
            b"g41d8cd98f00b204e9800998ecf8427e  x",
            b"d41d8cd98f00b204e9800998ecf8427e x",
            b"d41d8cd98f00b204e9800998ecf8427e  ",
            b"d41d8cd98f00b204e9800998ecf8427e  a\n\nd41d8cd98f00b204e9800998ecf8427e  b",
        ] {
            assert!(parse(bad).is_err(), "{:?}", String::from_utf8_lossy(bad));
        }
    }
}
