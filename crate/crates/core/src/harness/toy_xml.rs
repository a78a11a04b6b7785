//! XML target. The deep stage walks the document tree and branches on tag
//! vocabulary, parent/child pairs, depth, fan-out, attributes and text shape.

use super::vocab::{XML_ATTRS, XML_TAGS};
use super::{ParseProbe, vocab_index, Execution, HarnessError, Target, Verdict};
use crate::coverage::EdgeTrace;
use crate::probe::Probe;
use crate::validate::xml::{self, Document, Element, Node};
use crate::validate::Format;

pub(super) const SEEDS: [&str; 2] = [
    "<doc>\n    <clean> YES </clean>\n    <dirty> NO </dirty>\n    <mixed> YES </mixed>\n</doc>\n",
    "<note>\n  <to>Tove</to>\n  <from>Jani</from>\n  <body>Don't forget me this weekend!</body>\n</note>\n",
];

mod edge {
    pub const ENTRY: u16 = 1000;
    pub const DECL: u16 = 1001;
    pub const DECL_VERSION: u16 = 1002;
    pub const DECL_ENCODING: u16 = 1003;
    pub const DECL_STANDALONE: u16 = 1004;
    pub const PROLOG: u16 = 1005;
    pub const EPILOG: u16 = 1006;
    pub const DEPTH: u16 = 1010;
    pub const FANOUT: u16 = 1040;
    pub const ATTR_COUNT: u16 = 1060;
    pub const TEXT_CLASS: u16 = 1070;
    pub const TEXT_WS: u16 = 1075;
    pub const MIXED: u16 = 1080;
    pub const SELF_CLOSING: u16 = 1081;
    pub const EMPTY: u16 = 1082;
    pub const INNER_COMMENT: u16 = 1083;
    pub const REPEATED_SIBLING: u16 = 1084;
    pub const DUP_ATTR: u16 = 1085;
    pub const ATTR_VALUE: u16 = 1090;
    pub const TAG: u16 = 1100;
    pub const ATTR: u16 = 1150;
    pub const ROOT: u16 = 1170;
    pub const PAIR: u16 = 2000;
}

/// Attribute values longer than this overflow a fixed buffer in the deep stage.
const ATTR_BUFFER: usize = 64;

const TAGS: u16 = XML_TAGS.len() as u16 + 1;

pub struct ToyXml;

impl Target for ToyXml {
    fn name(&self) -> &str {
        "toy-xml"
    }

    fn format_name(&self) -> &str {
        Format::Xml.name()
    }

    fn format(&self) -> Option<Format> {
        Some(Format::Xml)
    }

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError> {
        let mut trace = EdgeTrace::new();
        let verdict = match xml::parse_with(input, &mut ParseProbe::new(&mut trace, xml::edge::is_error)) {
            Err(_) => Verdict::ParseError,
            Ok(doc) => deep(&doc, &mut trace),
        };
        Ok(Execution::new(verdict, trace))
    }
}

fn text_class(t: &[u8]) -> Option<u16> {
    let t = t.trim_ascii();
    if t.is_empty() {
        return None;
    }
    Some(if t.iter().all(u8::is_ascii_digit) {
        0
    } else if t.iter().all(|b| b.is_ascii_alphabetic() || *b == b' ') {
        1
    } else if t.iter().all(|b| b.is_ascii_alphanumeric() || b.is_ascii_whitespace()) {
        2
    } else if t.is_ascii() {
        3
    } else {
        4
    })
}

fn attr_value_class(v: &[u8]) -> u16 {
    if v.is_empty() {
        0
    } else if v.iter().all(u8::is_ascii_digit) {
        1
    } else if v.iter().all(u8::is_ascii_alphabetic) {
        2
    } else if v.iter().all(u8::is_ascii_alphanumeric) {
        3
    } else if v.windows(3).any(|w| w == b"://") {
        4
    } else {
        5
    }
}

fn deep<P: Probe>(doc: &Document, p: &mut P) -> Verdict {
    p.hit(edge::ENTRY);
    if let Some(decl) = &doc.declaration {
        p.hit(edge::DECL);
        for (needle, e) in [
            (&b"version"[..], edge::DECL_VERSION),
            (b"encoding", edge::DECL_ENCODING),
            (b"standalone", edge::DECL_STANDALONE),
        ] {
            if decl.windows(needle.len()).any(|w| w == needle) {
                p.hit(e);
            }
        }
    }
    if !doc.prolog.trim_ascii().is_empty() {
        p.hit(edge::PROLOG);
    }
    if !doc.epilog.trim_ascii().is_empty() {
        p.hit(edge::EPILOG);
    }
    p.hit(edge::ROOT + vocab_index(&XML_TAGS, &doc.root.name));
    if walk(&doc.root, None, 1, p) {
        Verdict::Crash
    } else {
        Verdict::Accepted
    }
}

/// Returns true when the planted attribute overflow fires.
fn walk<P: Probe>(el: &Element, parent: Option<u16>, depth: usize, p: &mut P) -> bool {
    let tag = vocab_index(&XML_TAGS, &el.name);
    p.hit(edge::TAG + tag);
    if let Some(pv) = parent {
        p.hit(edge::PAIR + pv * TAGS + tag);
    }
    p.hit(edge::DEPTH + depth.min(20) as u16);
    p.hit(edge::ATTR_COUNT + el.attributes.len().min(5) as u16);
    let mut crashed = false;
    for (i, a) in el.attributes.iter().enumerate() {
        p.hit(edge::ATTR + vocab_index(&XML_ATTRS, &a.name));
        p.hit(edge::ATTR_VALUE + attr_value_class(&a.value));
        if el.attributes[..i].iter().any(|b| b.name == a.name) {
            p.hit(edge::DUP_ATTR);
        }
        crashed |= a.value.len() > ATTR_BUFFER;
    }
    if el.self_closing {
        p.hit(edge::SELF_CLOSING);
    } else if el.children.is_empty() {
        p.hit(edge::EMPTY);
    }
    let mut elements = 0;
    let mut has_text = false;
    let mut names: Vec<&str> = Vec::new();
    for c in &el.children {
        match c {
            Node::Element(child) => {
                elements += 1;
                if names.contains(&child.name.as_str()) {
                    p.hit(edge::REPEATED_SIBLING);
                } else {
                    names.push(&child.name);
                }
                crashed |= walk(child, Some(tag), depth + 1, p);
            }
            Node::Text(t) => match text_class(t) {
                Some(class) => {
                    has_text = true;
                    p.hit(edge::TEXT_CLASS + class);
                }
                None => p.hit(edge::TEXT_WS),
            },
            Node::Comment(_) => p.hit(edge::INNER_COMMENT),
        }
    }
    p.hit(edge::FANOUT + elements.min(10) as u16);
    if has_text && elements > 0 {
        p.hit(edge::MIXED);
    }
    crashed
}
