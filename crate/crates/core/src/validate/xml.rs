//! Well-formedness checker for the five XML syntax rules:
//! closing tags, case-sensitive names, proper nesting, a single root element
//! and quoted attribute values. An optional leading `<?xml ...?>` declaration
//! and `<!-- -->` comments are accepted; DTDs, processing instructions and
//! entity checking are not.
//!
//! The parser is iterative and caps nesting at [`MAX_DEPTH`]; it builds a
//! [`Document`] that can be rendered back to bytes.

use std::fmt;

use crate::probe::Probe;

/// Maximum element nesting accepted by the parser.
pub const MAX_DEPTH: usize = 256;

/// Parse-stage edge ids.
pub mod edge {
    pub const ENTRY: u16 = 1;
    pub const DECL: u16 = 2;
    pub const OPEN: u16 = 3;
    pub const CLOSE: u16 = 4;
    pub const SELF_CLOSE: u16 = 5;
    pub const ATTR_DQ: u16 = 6;
    pub const ATTR_SQ: u16 = 7;
    pub const COMMENT: u16 = 8;
    pub const TEXT_WS: u16 = 9;
    pub const TEXT_ALPHA: u16 = 10;
    pub const TEXT_DIGIT: u16 = 11;
    pub const TEXT_PUNCT: u16 = 12;
    pub const TEXT_OTHER: u16 = 13;
    pub const NAME_CHAR: u16 = 14;
    pub const LEADING_MISC: u16 = 16;
    pub const TRAILING_MISC: u16 = 17;
    pub const ROOT_DONE: u16 = 18;
    /// `DEPTH + min(depth, 15)` on every element push.
    pub const DEPTH: u16 = 20;
    pub const ERR_UNCLOSED: u16 = 40;
    pub const ERR_CASE: u16 = 41;
    pub const ERR_NEST: u16 = 42;
    pub const ERR_STRAY_CLOSE: u16 = 43;
    pub const ERR_NO_ROOT: u16 = 44;
    pub const ERR_SECOND_ROOT: u16 = 45;
    pub const ERR_TEXT_OUTSIDE: u16 = 46;
    pub const ERR_UNQUOTED: u16 = 47;
    pub const ERR_NO_EQ: u16 = 48;
    pub const ERR_BAD_NAME: u16 = 49;
    pub const ERR_EOF_TAG: u16 = 50;
    pub const ERR_COMMENT_EOF: u16 = 51;
    pub const ERR_DECL_EOF: u16 = 52;
    pub const ERR_PI: u16 = 53;
    pub const ERR_DOCTYPE: u16 = 54;
    pub const ERR_ATTR_EOF: u16 = 55;
    pub const ERR_ATTR_WS: u16 = 56;
    pub const ERR_CLOSE_SYNTAX: u16 = 57;
    pub const ERR_DEPTH: u16 = 58;
    /// Highest parse-stage id.
    pub const LAST: u16 = 99;

    /// Ids emitted only on rejection paths.
    pub fn is_error(id: u16) -> bool {
        (40..=58).contains(&id)
    }
}

/// The five syntax rules, numbered as commonly listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum XmlRule {
    ClosingTag = 1,
    CaseSensitive = 2,
    ProperNesting = 3,
    SingleRoot = 4,
    QuotedAttribute = 5,
}

/// Which check failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XmlViolation {
    Rule(XmlRule),
    /// Markup outside the five rules: malformed tag syntax, unterminated
    /// comments, unsupported constructs, or nesting past [`MAX_DEPTH`].
    Markup,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct XmlError {
    pub violation: XmlViolation,
    pub offset: usize,
    pub detail: &'static str,
}

impl fmt::Display for XmlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.violation {
            XmlViolation::Rule(r) => write!(f, "rule {} at byte {}: {}", r as u8, self.offset, self.detail),
            XmlViolation::Markup => write!(f, "malformed markup at byte {}: {}", self.offset, self.detail),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Attribute {
    pub name: String,
    pub value: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Node {
    Element(Element),
    Text(Vec<u8>),
    Comment(Vec<u8>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Element {
    pub name: String,
    pub attributes: Vec<Attribute>,
    pub children: Vec<Node>,
    pub self_closing: bool,
}

impl Element {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            attributes: Vec::new(),
            children: Vec::new(),
            self_closing: false,
        }
    }

    /// Nesting depth of the subtree rooted here (a leaf is 1).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(self, 1usize)];
        while let Some((el, d)) = stack.pop() {
            best = best.max(d);
            for c in &el.children {
                if let Node::Element(child) = c {
                    stack.push((child, d + 1));
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Raw `<?xml ...?>` text including delimiters.
    pub declaration: Option<Vec<u8>>,
    /// Raw bytes between the declaration and the root (whitespace, comments).
    pub prolog: Vec<u8>,
    pub root: Element,
    /// Raw bytes after the root (whitespace, comments).
    pub epilog: Vec<u8>,
}

pub fn is_name_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_' || b == b':'
}

pub fn is_name_char(b: u8) -> bool {
    is_name_start(b) || b.is_ascii_digit() || b == b'-' || b == b'.'
}

struct Parser<'a, P: Probe> {
    src: &'a [u8],
    pos: usize,
    probe: &'a mut P,
}

impl<P: Probe> Parser<'_, P> {
    fn fail(&mut self, edge: u16, violation: XmlViolation, detail: &'static str) -> XmlError {
        self.probe.hit(edge);
        XmlError {
            violation,
            offset: self.pos,
            detail,
        }
    }

    fn rule(&mut self, edge: u16, rule: XmlRule, detail: &'static str) -> XmlError {
        self.fail(edge, XmlViolation::Rule(rule), detail)
    }

    fn markup(&mut self, edge: u16, detail: &'static str) -> XmlError {
        self.fail(edge, XmlViolation::Markup, detail)
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn starts_with(&self, s: &[u8]) -> bool {
        self.src[self.pos..].starts_with(s)
    }

    fn skip_ws(&mut self) -> bool {
        let start = self.pos;
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\r' | b'\n')) {
            self.pos += 1;
        }
        self.pos > start
    }

    fn name(&mut self) -> Option<String> {
        let start = self.pos;
        if !self.peek().is_some_and(is_name_start) {
            return None;
        }
        while self.peek().is_some_and(is_name_char) {
            self.pos += 1;
        }
        self.probe.hit_n(edge::NAME_CHAR, (self.pos - start) as u32);
        Some(String::from_utf8_lossy(&self.src[start..self.pos]).into_owned())
    }

    fn find(&self, pat: &[u8]) -> Option<usize> {
        self.src[self.pos..]
            .windows(pat.len())
            .position(|w| w == pat)
            .map(|i| self.pos + i)
    }

    fn comment(&mut self) -> Result<Vec<u8>, XmlError> {
        self.pos += 4;
        match self.find(b"-->") {
            Some(end) => {
                let body = self.src[self.pos..end].to_vec();
                self.pos = end + 3;
                self.probe.hit(edge::COMMENT);
                Ok(body)
            }
            None => Err(self.markup(edge::ERR_COMMENT_EOF, "unterminated comment")),
        }
    }

    fn text_probe(&mut self, text: &[u8]) {
        let (mut ws, mut alpha, mut digit, mut punct, mut other) = (0u32, 0u32, 0u32, 0u32, 0u32);
        for &b in text {
            match b {
                b' ' | b'\t' | b'\r' | b'\n' => ws += 1,
                b if b.is_ascii_alphabetic() => alpha += 1,
                b if b.is_ascii_digit() => digit += 1,
                b if b.is_ascii_punctuation() => punct += 1,
                _ => other += 1,
            }
        }
        self.probe.hit_n(edge::TEXT_WS, ws);
        self.probe.hit_n(edge::TEXT_ALPHA, alpha);
        self.probe.hit_n(edge::TEXT_DIGIT, digit);
        self.probe.hit_n(edge::TEXT_PUNCT, punct);
        self.probe.hit_n(edge::TEXT_OTHER, other);
    }

    /// Parses a start tag after `<`.
    fn start_tag(&mut self) -> Result<Element, XmlError> {
        let Some(name) = self.name() else {
            return Err(self.markup(edge::ERR_BAD_NAME, "expected element name"));
        };
        let mut el = Element::new(name);
        loop {
            let had_ws = self.skip_ws();
            match self.peek() {
                None => return Err(self.markup(edge::ERR_EOF_TAG, "unterminated start tag")),
                Some(b'>') => {
                    self.pos += 1;
                    self.probe.hit(edge::OPEN);
                    return Ok(el);
                }
                Some(b'/') => {
                    if self.src.get(self.pos + 1) == Some(&b'>') {
                        self.pos += 2;
                        el.self_closing = true;
                        self.probe.hit(edge::SELF_CLOSE);
                        return Ok(el);
                    }
                    return Err(self.markup(edge::ERR_BAD_NAME, "stray '/' in start tag"));
                }
                Some(b) if is_name_start(b) => {
                    if !had_ws {
                        return Err(self.markup(edge::ERR_ATTR_WS, "missing whitespace before attribute"));
                    }
                    let attr_name = self.name().unwrap_or_default();
                    self.skip_ws();
                    if self.peek() != Some(b'=') {
                        return Err(self.rule(edge::ERR_NO_EQ, XmlRule::QuotedAttribute, "attribute without value"));
                    }
                    self.pos += 1;
                    self.skip_ws();
                    let quote = match self.peek() {
                        Some(q @ (b'"' | b'\'')) => q,
                        None => return Err(self.markup(edge::ERR_ATTR_EOF, "unterminated attribute")),
                        Some(_) => {
                            return Err(self.rule(edge::ERR_UNQUOTED, XmlRule::QuotedAttribute, "unquoted attribute value"))
                        }
                    };
                    self.pos += 1;
                    let Some(end) = self.src[self.pos..].iter().position(|&b| b == quote) else {
                        return Err(self.markup(edge::ERR_ATTR_EOF, "unterminated attribute value"));
                    };
                    let value = self.src[self.pos..self.pos + end].to_vec();
                    self.pos += end + 1;
                    self.probe.hit(if quote == b'"' { edge::ATTR_DQ } else { edge::ATTR_SQ });
                    el.attributes.push(Attribute { name: attr_name, value });
                }
                Some(_) => return Err(self.markup(edge::ERR_BAD_NAME, "unexpected byte in start tag")),
            }
        }
    }

    fn parse(mut self) -> Result<Document, XmlError> {
        self.probe.hit(edge::ENTRY);
        let mut declaration = None;
        if self.starts_with(b"<?xml") {
            match self.find(b"?>") {
                Some(end) => {
                    declaration = Some(self.src[..end + 2].to_vec());
                    self.pos = end + 2;
                    self.probe.hit(edge::DECL);
                }
                None => return Err(self.markup(edge::ERR_DECL_EOF, "unterminated declaration")),
            }
        }

        let mut stack: Vec<Element> = Vec::new();
        let mut root: Option<Element> = None;
        let mut prolog = Vec::new();
        let mut epilog = Vec::new();

        while self.pos < self.src.len() {
            let misc_start = self.pos;
            if self.starts_with(b"</") {
                self.pos += 2;
                let Some(name) = self.name() else {
                    return Err(self.markup(edge::ERR_CLOSE_SYNTAX, "expected name in end tag"));
                };
                self.skip_ws();
                if self.peek() != Some(b'>') {
                    return Err(self.markup(edge::ERR_CLOSE_SYNTAX, "unterminated end tag"));
                }
                self.pos += 1;
                let Some(top) = stack.last() else {
                    return Err(if root.is_some() {
                        self.rule(edge::ERR_SECOND_ROOT, XmlRule::SingleRoot, "end tag after root element")
                    } else {
                        self.rule(edge::ERR_STRAY_CLOSE, XmlRule::ProperNesting, "end tag without start tag")
                    });
                };
                if top.name != name {
                    return Err(if top.name.eq_ignore_ascii_case(&name) {
                        self.rule(edge::ERR_CASE, XmlRule::CaseSensitive, "end tag differs in case")
                    } else {
                        self.rule(edge::ERR_NEST, XmlRule::ProperNesting, "end tag does not match innermost element")
                    });
                }
                self.probe.hit(edge::CLOSE);
                let done = stack.pop().expect("non-empty");
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Element(done)),
                    None => {
                        self.probe.hit(edge::ROOT_DONE);
                        root = Some(done);
                    }
                }
            } else if self.starts_with(b"<!--") {
                let body = self.comment()?;
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Comment(body)),
                    None => {
                        let raw = &self.src[misc_start..self.pos];
                        if root.is_some() {
                            self.probe.hit(edge::TRAILING_MISC);
                            epilog.extend_from_slice(raw);
                        } else {
                            self.probe.hit(edge::LEADING_MISC);
                            prolog.extend_from_slice(raw);
                        }
                    }
                }
            } else if self.starts_with(b"<!") {
                return Err(self.markup(edge::ERR_DOCTYPE, "unsupported markup declaration"));
            } else if self.starts_with(b"<?") {
                return Err(self.markup(edge::ERR_PI, "processing instruction outside prolog"));
            } else if self.peek() == Some(b'<') {
                if root.is_some() && stack.is_empty() {
                    return Err(self.rule(edge::ERR_SECOND_ROOT, XmlRule::SingleRoot, "more than one root element"));
                }
                self.pos += 1;
                let el = self.start_tag()?;
                let depth = stack.len() + 1;
                self.probe.hit(edge::DEPTH + depth.min(15) as u16);
                if el.self_closing {
                    match stack.last_mut() {
                        Some(parent) => parent.children.push(Node::Element(el)),
                        None => {
                            self.probe.hit(edge::ROOT_DONE);
                            root = Some(el);
                        }
                    }
                } else {
                    if depth > MAX_DEPTH {
                        return Err(self.markup(edge::ERR_DEPTH, "nesting too deep"));
                    }
                    stack.push(el);
                }
            } else {
                let end = self.src[self.pos..]
                    .iter()
                    .position(|&b| b == b'<')
                    .map_or(self.src.len(), |i| self.pos + i);
                let text = &self.src[self.pos..end];
                self.text_probe(text);
                match stack.last_mut() {
                    Some(parent) => parent.children.push(Node::Text(text.to_vec())),
                    None => {
                        if !text.iter().all(u8::is_ascii_whitespace) {
                            return Err(self.rule(edge::ERR_TEXT_OUTSIDE, XmlRule::SingleRoot, "text outside the root element"));
                        }
                        if root.is_some() {
                            epilog.extend_from_slice(text);
                        } else {
                            prolog.extend_from_slice(text);
                        }
                    }
                }
                self.pos = end;
            }
        }

        if !stack.is_empty() {
            return Err(self.rule(edge::ERR_UNCLOSED, XmlRule::ClosingTag, "element is never closed"));
        }
        match root {
            Some(root) => Ok(Document {
                declaration,
                prolog,
                root,
                epilog,
            }),
            None => Err(self.rule(edge::ERR_NO_ROOT, XmlRule::SingleRoot, "document has no root element")),
        }
    }
}

/// Parses `src`, reporting instrumentation through `probe`.
pub fn parse_with<P: Probe>(src: &[u8], probe: &mut P) -> Result<Document, XmlError> {
    Parser { src, pos: 0, probe }.parse()
}

pub fn parse(src: &[u8]) -> Result<Document, XmlError> {
    parse_with(src, &mut ())
}

/// Serializes a document. Attribute values are always double-quoted; a value
/// containing `"` falls back to single quotes.
pub fn render(doc: &Document) -> Vec<u8> {
    let mut out = Vec::new();
    if let Some(decl) = &doc.declaration {
        out.extend_from_slice(decl);
    }
    out.extend_from_slice(&doc.prolog);
    render_element(&doc.root, &mut out);
    out.extend_from_slice(&doc.epilog);
    out
}

// Recursion depth is bounded by MAX_DEPTH for any parsed document.
fn render_element(el: &Element, out: &mut Vec<u8>) {
    out.push(b'<');
    out.extend_from_slice(el.name.as_bytes());
    for a in &el.attributes {
        let q = if a.value.contains(&b'"') { b'\'' } else { b'"' };
        out.push(b' ');
        out.extend_from_slice(a.name.as_bytes());
        out.push(b'=');
        out.push(q);
        out.extend_from_slice(&a.value);
        out.push(q);
    }
    if el.self_closing && el.children.is_empty() {
        out.extend_from_slice(b"/>");
        return;
    }
    out.push(b'>');
    for child in &el.children {
        match child {
            Node::Text(t) => out.extend_from_slice(t),
            Node::Comment(c) => {
                out.extend_from_slice(b"<!--");
                out.extend_from_slice(c);
                out.extend_from_slice(b"-->");
            }
            Node::Element(e) => render_element(e, out),
        }
    }
    out.extend_from_slice(b"</");
    out.extend_from_slice(el.name.as_bytes());
    out.push(b'>');
}
