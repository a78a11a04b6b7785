//! JSON target. The deep stage walks the value tree and branches on key
//! vocabulary, key/value-type pairs, container sizes and scalar shape.

use super::vocab::JSON_KEYS;
use super::{ParseProbe, Execution, HarnessError, Target, Verdict};
use crate::coverage::EdgeTrace;
use crate::probe::Probe;
use crate::validate::json::{self, Value};
use crate::validate::Format;

pub(super) const SEEDS: [&str; 2] = [
    "{\"name\": \"widget\", \"id\": 7, \"tags\": [\"a\", \"b\"], \"active\": true}\n",
    "[1, 2.5, {\"x\": null}]\n",
];

mod edge {
    pub const ENTRY: u16 = 1000;
    pub const KIND_DEPTH: u16 = 1010;
    pub const KEY: u16 = 1200;
    pub const KEY_KIND: u16 = 1300;
    pub const ARRAY_LEN: u16 = 1600;
    pub const OBJECT_LEN: u16 = 1620;
    pub const NUMBER: u16 = 1640;
    pub const STRING: u16 = 1660;
    pub const HOMOGENEOUS: u16 = 1680;
    pub const HETEROGENEOUS: u16 = 1681;
    pub const DUP_KEY: u16 = 1682;
    pub const ROOT: u16 = 1690;
}

/// Number literals longer than this overflow the deep stage's conversion buffer.
const NUMBER_BUFFER: usize = 40;

pub struct ToyJson;

impl Target for ToyJson {
    fn name(&self) -> &str {
        "toy-json"
    }

    fn format_name(&self) -> &str {
        Format::Json.name()
    }

    fn format(&self) -> Option<Format> {
        Some(Format::Json)
    }

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError> {
        let mut trace = EdgeTrace::new();
        let verdict = match json::parse_with(input, &mut ParseProbe::new(&mut trace, json::edge::is_error)) {
            Err(_) => Verdict::ParseError,
            Ok(v) => {
                Probe::hit(&mut trace, edge::ENTRY);
                Probe::hit(&mut trace, edge::ROOT + v.kind() as u16);
                if walk(&v, 0, &mut trace) {
                    Verdict::Crash
                } else {
                    Verdict::Accepted
                }
            }
        };
        Ok(Execution::new(verdict, trace))
    }
}

fn number_class(n: &str) -> u16 {
    if n.len() > 15 {
        5
    } else if n.contains(['e', 'E']) {
        4
    } else if n.contains('.') {
        3
    } else if n.starts_with('-') {
        2
    } else if n == "0" {
        0
    } else {
        1
    }
}

fn string_class(s: &[u8]) -> u16 {
    if s.is_empty() {
        0
    } else if s.contains(&b'\\') {
        3
    } else if !s.is_ascii() {
        4
    } else if s.windows(3).any(|w| w == b"://") {
        5
    } else if s.len() >= 10 && s[4] == b'-' && s[..4].iter().all(u8::is_ascii_digit) {
        6
    } else if s.iter().all(|b| b.is_ascii_alphabetic() || *b == b' ') {
        1
    } else if s.iter().all(u8::is_ascii_digit) {
        2
    } else {
        7
    }
}

/// Returns true when the planted number overflow fires.
fn walk<P: Probe>(v: &Value, depth: usize, p: &mut P) -> bool {
    p.hit(edge::KIND_DEPTH + v.kind() as u16 * 16 + depth.min(15) as u16);
    match v {
        Value::Object(members) => {
            p.hit(edge::OBJECT_LEN + members.len().min(10) as u16);
            let mut crashed = false;
            for (i, (k, child)) in members.iter().enumerate() {
                let vid = JSON_KEYS
                    .iter()
                    .position(|w| w.as_bytes() == k.as_slice())
                    .unwrap_or(JSON_KEYS.len()) as u16;
                p.hit(edge::KEY + vid);
                p.hit(edge::KEY_KIND + vid * 6 + child.kind() as u16);
                if members[..i].iter().any(|(k2, _)| k2 == k) {
                    p.hit(edge::DUP_KEY);
                }
                crashed |= walk(child, depth + 1, p);
            }
            crashed
        }
        Value::Array(items) => {
            p.hit(edge::ARRAY_LEN + items.len().min(10) as u16);
            if let Some(first) = items.first() {
                if items.iter().all(|i| i.kind() == first.kind()) {
                    p.hit(edge::HOMOGENEOUS);
                } else {
                    p.hit(edge::HETEROGENEOUS);
                }
            }
            let mut crashed = false;
            for i in items {
                crashed |= walk(i, depth + 1, p);
            }
            crashed
        }
        Value::String(s) => {
            p.hit(edge::STRING + string_class(s));
            false
        }
        Value::Number(n) => {
            p.hit(edge::NUMBER + number_class(n));
            n.len() > NUMBER_BUFFER
        }
        Value::Bool(_) | Value::Null => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(src: &str) -> Execution {
        ToyJson.execute(src.as_bytes()).unwrap()
    }

    #[test]
    fn known_keys_have_own_edges() {
        let a = run("{\"name\": 1}");
        let b = run("{\"price\": 1}");
        assert_ne!(a.trace, b.trace);
        assert_eq!(run("{\"zq\": 1}").trace, run("{\"qz\": 1}").trace);
    }

    #[test]
    fn long_number_crashes() {
        let n = "9".repeat(NUMBER_BUFFER + 1);
        assert_eq!(run(&format!("[{n}]")).verdict, Verdict::Crash);
        assert_eq!(run("[99]").verdict, Verdict::Accepted);
    }

    #[test]
    fn classes() {
        assert_eq!(number_class("0"), 0);
        assert_eq!(number_class("-3"), 2);
        assert_eq!(number_class("1.5e3"), 4);
        assert_eq!(string_class(b"2024-01-01"), 6);
        assert_eq!(string_class(b"http://x"), 5);
    }
}
