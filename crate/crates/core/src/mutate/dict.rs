//! AFL dictionary files: one `name="token"` entry per line (the name and an
//! optional `@level` suffix may be omitted), `#` comments, and `\\`, `\"`,
//! `\xNN` escapes inside the quotes.

use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DictionaryParseError {
    #[error("dictionary line {line}: {detail}")]
    Syntax { line: usize, detail: &'static str },
    #[error("cannot read dictionary: {0}")]
    Io(#[from] std::io::Error),
}

pub fn load_dictionary(path: &Path) -> Result<Vec<Vec<u8>>, DictionaryParseError> {
    parse_dictionary(&std::fs::read(path)?)
}

pub fn parse_dictionary(text: &[u8]) -> Result<Vec<Vec<u8>>, DictionaryParseError> {
    let mut tokens = Vec::new();
    for (i, raw) in text.split(|&b| b == b'\n').enumerate() {
        let line = raw.trim_ascii();
        if line.is_empty() || line[0] == b'#' {
            continue;
        }
        let err = |detail| DictionaryParseError::Syntax { line: i + 1, detail };
        let quoted = match line.iter().position(|&b| b == b'"') {
            Some(0) => line,
            Some(q) => {
                let name = line[..q].trim_ascii_end();
                let Some(name) = name.strip_suffix(b"=") else {
                    return Err(err("expected '=' before the token"));
                };
                let name = name.trim_ascii_end();
                let name = match name.iter().position(|&b| b == b'@') {
                    Some(at) if at + 1 < name.len() && name[at + 1..].iter().all(u8::is_ascii_digit) => &name[..at],
                    Some(_) => return Err(err("malformed @level suffix")),
                    None => name,
                };
                if !name.iter().all(|b| b.is_ascii_alphanumeric() || *b == b'_') {
                    return Err(err("invalid keyword name"));
                }
                &line[q..]
            }
            None => return Err(err("missing opening quote")),
        };
        tokens.push(unquote(quoted).map_err(err)?);
    }
    Ok(tokens)
}

fn unquote(q: &[u8]) -> Result<Vec<u8>, &'static str> {
    let body = &q[1..];
    let mut out = Vec::new();
    let mut i = 0;
    loop {
        match body.get(i) {
            None => return Err("unterminated quote"),
            Some(b'"') => {
                if i + 1 != body.len() {
                    return Err("trailing characters after the token");
                }
                return Ok(out);
            }
            Some(b'\\') => match body.get(i + 1) {
                Some(b'\\') => {
                    out.push(b'\\');
                    i += 2;
                }
                Some(b'"') => {
                    out.push(b'"');
                    i += 2;
                }
                Some(b'x') => {
                    let hex = body.get(i + 2..i + 4).ok_or("truncated \\x escape")?;
                    let s = std::str::from_utf8(hex).map_err(|_| "invalid \\x escape")?;
                    out.push(u8::from_str_radix(s, 16).map_err(|_| "invalid \\x escape")?);
                    i += 4;
                }
                _ => return Err("unknown escape"),
            },
            Some(&b) if b < 0x20 || b >= 0x7f => return Err("non-printable byte in token"),
            Some(&b) => {
                out.push(b);
                i += 1;
            }
        }
    }
}
