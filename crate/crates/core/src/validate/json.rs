//! Strict JSON: objects, arrays, strings with escapes, numbers, literals.
//! No trailing commas, no comments, no leading zeros. Strings must be UTF-8.

use std::fmt;

use crate::probe::Probe;

pub const MAX_DEPTH: usize = 256;

pub mod edge {
    pub const ENTRY: u16 = 1;
    pub const OBJECT: u16 = 2;
    pub const ARRAY: u16 = 3;
    pub const STRING: u16 = 4;
    pub const NUMBER: u16 = 5;
    pub const TRUE: u16 = 6;
    pub const FALSE: u16 = 7;
    pub const NULL: u16 = 8;
    pub const KEY: u16 = 9;
    pub const ESCAPE: u16 = 10;
    pub const UNICODE_ESCAPE: u16 = 11;
    pub const NUM_NEG: u16 = 12;
    pub const NUM_FRAC: u16 = 13;
    pub const NUM_EXP: u16 = 14;
    pub const STR_CHAR: u16 = 15;
    pub const WS: u16 = 16;
    pub const EMPTY_CONTAINER: u16 = 17;
    /// `DEPTH + min(depth, 15)` on every container entry.
    pub const DEPTH: u16 = 20;
    pub const ERR_EOF: u16 = 40;
    pub const ERR_UNEXPECTED: u16 = 41;
    pub const ERR_TRAILING: u16 = 42;
    pub const ERR_BAD_ESCAPE: u16 = 43;
    pub const ERR_CONTROL: u16 = 44;
    pub const ERR_NUMBER: u16 = 45;
    pub const ERR_KEY: u16 = 46;
    pub const ERR_COLON: u16 = 47;
    pub const ERR_SEPARATOR: u16 = 48;
    pub const ERR_TRAILING_COMMA: u16 = 49;
    pub const ERR_LITERAL: u16 = 50;
    pub const ERR_EMPTY: u16 = 51;
    pub const ERR_DEPTH: u16 = 52;
    pub const ERR_UTF8: u16 = 53;
    pub const LAST: u16 = 99;

    /// Ids emitted only on rejection paths.
    pub fn is_error(id: u16) -> bool {
        (40..=53).contains(&id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JsonError {
    pub offset: usize,
    pub detail: &'static str,
}

impl fmt::Display for JsonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.detail, self.offset)
    }
}

/// Parsed value. Strings and numbers keep their source lexeme (string
/// contents without quotes, escapes intact) so rendering is lossless.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Object(Vec<(Vec<u8>, Value)>),
    Array(Vec<Value>),
    String(Vec<u8>),
    Number(String),
    Bool(bool),
    Null,
}

impl Value {
    pub fn depth(&self) -> usize {
        match self {
            Value::Object(m) => 1 + m.iter().map(|(_, v)| v.depth()).max().unwrap_or(0),
            Value::Array(a) => 1 + a.iter().map(Value::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn kind(&self) -> ValueKind {
        match self {
            Value::Object(_) => ValueKind::Object,
            Value::Array(_) => ValueKind::Array,
            Value::String(_) => ValueKind::String,
            Value::Number(_) => ValueKind::Number,
            Value::Bool(_) => ValueKind::Bool,
            Value::Null => ValueKind::Null,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValueKind {
    Object = 0,
    Array = 1,
    String = 2,
    Number = 3,
    Bool = 4,
    Null = 5,
}

struct Parser<'a, P: Probe> {
    src: &'a [u8],
    pos: usize,
    probe: &'a mut P,
}

impl<P: Probe> Parser<'_, P> {
    fn err(&mut self, edge: u16, detail: &'static str) -> JsonError {
        self.probe.hit(edge);
        JsonError { offset: self.pos, detail }
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn ws(&mut self) {
        let start = self.pos;
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
        self.probe.hit_n(edge::WS, (self.pos - start) as u32);
    }

    fn value(&mut self, depth: usize) -> Result<Value, JsonError> {
        self.ws();
        match self.peek() {
            None => Err(self.err(edge::ERR_EOF, "unexpected end of input")),
            Some(b'{') => self.object(depth + 1),
            Some(b'[') => self.array(depth + 1),
            Some(b'"') => {
                self.probe.hit(edge::STRING);
                self.string().map(Value::String)
            }
            Some(b'-' | b'0'..=b'9') => self.number(),
            Some(b't') => self.literal(b"true", edge::TRUE, Value::Bool(true)),
            Some(b'f') => self.literal(b"false", edge::FALSE, Value::Bool(false)),
            Some(b'n') => self.literal(b"null", edge::NULL, Value::Null),
            Some(_) => Err(self.err(edge::ERR_UNEXPECTED, "unexpected character")),
        }
    }

    fn literal(&mut self, word: &[u8], e: u16, v: Value) -> Result<Value, JsonError> {
        if self.src[self.pos..].starts_with(word) {
            self.pos += word.len();
            self.probe.hit(e);
            Ok(v)
        } else {
            Err(self.err(edge::ERR_LITERAL, "invalid literal"))
        }
    }

    fn enter(&mut self, depth: usize) -> Result<(), JsonError> {
        self.probe.hit(edge::DEPTH + depth.min(15) as u16);
        if depth > MAX_DEPTH {
            return Err(self.err(edge::ERR_DEPTH, "nesting too deep"));
        }
        Ok(())
    }

    fn object(&mut self, depth: usize) -> Result<Value, JsonError> {
        self.enter(depth)?;
        self.probe.hit(edge::OBJECT);
        self.pos += 1;
        let mut members = Vec::new();
        self.ws();
        if self.peek() == Some(b'}') {
            self.pos += 1;
            self.probe.hit(edge::EMPTY_CONTAINER);
            return Ok(Value::Object(members));
        }
        loop {
            self.ws();
            match self.peek() {
                Some(b'"') => {}
                Some(b'}') if !members.is_empty() => {
                    return Err(self.err(edge::ERR_TRAILING_COMMA, "trailing comma in object"))
                }
                None => return Err(self.err(edge::ERR_EOF, "unexpected end of input")),
                Some(_) => return Err(self.err(edge::ERR_KEY, "object key must be a string")),
            }
            self.probe.hit(edge::KEY);
            let key = self.string()?;
            self.ws();
            if self.peek() != Some(b':') {
                return Err(self.err(edge::ERR_COLON, "expected ':'"));
            }
            self.pos += 1;
            let v = self.value(depth)?;
            members.push((key, v));
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b'}') => {
                    self.pos += 1;
                    return Ok(Value::Object(members));
                }
                None => return Err(self.err(edge::ERR_EOF, "unexpected end of input")),
                Some(_) => return Err(self.err(edge::ERR_SEPARATOR, "expected ',' or '}'")),
            }
        }
    }

    fn array(&mut self, depth: usize) -> Result<Value, JsonError> {
        self.enter(depth)?;
        self.probe.hit(edge::ARRAY);
        self.pos += 1;
        let mut items = Vec::new();
        self.ws();
        if self.peek() == Some(b']') {
            self.pos += 1;
            self.probe.hit(edge::EMPTY_CONTAINER);
            return Ok(Value::Array(items));
        }
        loop {
            self.ws();
            if self.peek() == Some(b']') {
                return Err(self.err(edge::ERR_TRAILING_COMMA, "trailing comma in array"));
            }
            items.push(self.value(depth)?);
            self.ws();
            match self.peek() {
                Some(b',') => self.pos += 1,
                Some(b']') => {
                    self.pos += 1;
                    return Ok(Value::Array(items));
                }
                None => return Err(self.err(edge::ERR_EOF, "unexpected end of input")),
                Some(_) => return Err(self.err(edge::ERR_SEPARATOR, "expected ',' or ']'")),
            }
        }
    }

    /// Parses a quoted string at `pos`, returning the raw contents.
    fn string(&mut self) -> Result<Vec<u8>, JsonError> {
        self.pos += 1;
        let start = self.pos;
        loop {
            match self.peek() {
                None => return Err(self.err(edge::ERR_EOF, "unterminated string")),
                Some(b'"') => break,
                Some(b'\\') => {
                    self.pos += 1;
                    match self.peek() {
                        Some(b'"' | b'\\' | b'/' | b'b' | b'f' | b'n' | b'r' | b't') => {
                            self.probe.hit(edge::ESCAPE);
                            self.pos += 1;
                        }
                        Some(b'u') => {
                            let hex = self.src.get(self.pos + 1..self.pos + 5);
                            if !hex.is_some_and(|h| h.iter().all(u8::is_ascii_hexdigit)) {
                                return Err(self.err(edge::ERR_BAD_ESCAPE, "invalid unicode escape"));
                            }
                            self.probe.hit(edge::UNICODE_ESCAPE);
                            self.pos += 5;
                        }
                        _ => return Err(self.err(edge::ERR_BAD_ESCAPE, "invalid escape")),
                    }
                }
                Some(b) if b < 0x20 => return Err(self.err(edge::ERR_CONTROL, "control character in string")),
                Some(_) => self.pos += 1,
            }
        }
        let raw = self.src[start..self.pos].to_vec();
        if std::str::from_utf8(&raw).is_err() {
            return Err(self.err(edge::ERR_UTF8, "string is not valid UTF-8"));
        }
        self.probe.hit_n(edge::STR_CHAR, raw.len() as u32);
        self.pos += 1;
        Ok(raw)
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Value, JsonError> {
        let start = self.pos;
        if self.peek() == Some(b'-') {
            self.probe.hit(edge::NUM_NEG);
            self.pos += 1;
        }
        match self.peek() {
            Some(b'0') => {
                self.pos += 1;
                if self.peek().is_some_and(|b| b.is_ascii_digit()) {
                    return Err(self.err(edge::ERR_NUMBER, "leading zero"));
                }
            }
            Some(b'1'..=b'9') => {
                self.digits();
            }
            _ => return Err(self.err(edge::ERR_NUMBER, "expected digit")),
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            if self.digits() == 0 {
                return Err(self.err(edge::ERR_NUMBER, "expected fraction digits"));
            }
            self.probe.hit(edge::NUM_FRAC);
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return Err(self.err(edge::ERR_NUMBER, "expected exponent digits"));
            }
            self.probe.hit(edge::NUM_EXP);
        }
        self.probe.hit(edge::NUMBER);
        Ok(Value::Number(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()))
    }

    fn parse(mut self) -> Result<Value, JsonError> {
        self.probe.hit(edge::ENTRY);
        self.ws();
        if self.peek().is_none() {
            return Err(self.err(edge::ERR_EMPTY, "empty document"));
        }
        let v = self.value(0)?;
        self.ws();
        if self.pos != self.src.len() {
            return Err(self.err(edge::ERR_TRAILING, "trailing characters"));
        }
        Ok(v)
    }
}

pub fn parse_with<P: Probe>(src: &[u8], probe: &mut P) -> Result<Value, JsonError> {
    Parser { src, pos: 0, probe }.parse()
}

pub fn parse(src: &[u8]) -> Result<Value, JsonError> {
    parse_with(src, &mut ())
}

/// Renders with two-space indentation.
pub fn render(v: &Value) -> Vec<u8> {
    let mut out = Vec::new();
    render_into(v, 0, &mut out);
    out
}

fn indent(level: usize, out: &mut Vec<u8>) {
    out.push(b'\n');
    out.extend(std::iter::repeat_n(b' ', level * 2));
}

fn render_into(v: &Value, level: usize, out: &mut Vec<u8>) {
    match v {
        Value::Object(m) if m.is_empty() => out.extend_from_slice(b"{}"),
        Value::Array(a) if a.is_empty() => out.extend_from_slice(b"[]"),
        Value::Object(m) => {
            out.push(b'{');
            for (i, (k, v)) in m.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                indent(level + 1, out);
                out.push(b'"');
                out.extend_from_slice(k);
                out.extend_from_slice(b"\": ");
                render_into(v, level + 1, out);
            }
            indent(level, out);
            out.push(b'}');
        }
        Value::Array(a) => {
            out.push(b'[');
            for (i, v) in a.iter().enumerate() {
                if i > 0 {
                    out.push(b',');
                }
                indent(level + 1, out);
                render_into(v, level + 1, out);
            }
            indent(level, out);
            out.push(b']');
        }
        Value::String(s) => {
            out.push(b'"');
            out.extend_from_slice(s);
            out.push(b'"');
        }
        Value::Number(n) => out.extend_from_slice(n.as_bytes()),
        Value::Bool(true) => out.extend_from_slice(b"true"),
        Value::Bool(false) => out.extend_from_slice(b"false"),
        Value::Null => out.extend_from_slice(b"null"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_and_rejects() {
        assert!(parse(br#"{"a":[1,2]}"#).is_ok());
        assert!(parse(br#"{a:1}"#).is_err());
        assert!(parse(b"").is_err());
        assert!(parse(b"[1,]").is_err());
        assert!(parse(br#"{"a":1,}"#).is_err());
        assert!(parse(b"01").is_err());
        assert!(parse(b"1.").is_err());
        assert!(parse(b"-").is_err());
        assert!(parse(br#""\x""#).is_err());
        assert!(parse(b"[1] 2").is_err());
        assert!(parse(b"/* c */ 1").is_err());
        assert!(parse("{\"k\": \"é\\n\", \"n\": -1.5e+3, \"t\": [true, false, null]}".as_bytes()).is_ok());
    }

    #[test]
    fn render_reparses() {
        let src = br#"{"a": {"b": [1, "x\"y", {}], "c": []}, "d": null}"#;
        let v = parse(src).unwrap();
        assert_eq!(parse(&render(&v)).unwrap(), v);
    }

    #[test]
    fn depth_limit() {
        let deep = "[".repeat(MAX_DEPTH + 1) + &"]".repeat(MAX_DEPTH + 1);
        assert!(parse(deep.as_bytes()).is_err());
        let ok = "[".repeat(MAX_DEPTH) + &"]".repeat(MAX_DEPTH);
        assert_eq!(parse(ok.as_bytes()).unwrap().depth(), MAX_DEPTH);
    }
}
