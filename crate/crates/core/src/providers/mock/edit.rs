//! Grammar-aware edits used by the mock model.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::harness::vocab::{JSON_KEYS, SCRIPT_BUILTINS, SCRIPT_IDENTS, XML_ATTRS, XML_TAGS};
use crate::validate::json::{self, Value};
use crate::validate::script::{self, BinOp, Else, Expr, Stmt};
use crate::validate::xml::{self, Attribute, Element, Node};
use crate::validate::Format;

const WORDS: [&str; 24] = [
    "hello", "world", "YES", "NO", "alpha", "beta", "sample", "test", "Drama", "Romance", "Fiction", "London",
    "Paris", "Alice", "Bob", "active", "pending", "done", "red", "green", "blue", "north", "summer", "report",
];

/// Element nesting beyond which the mock stops inserting children.
const XML_DEPTH_CAP: usize = 20;
const JSON_DEPTH_CAP: usize = 10;

/// The document a model produces when asked for a format without an example.
pub fn canonical_instance(format: Option<Format>) -> &'static [u8] {
    match format {
        Some(Format::Xml) => b"<root>\n  <item>value</item>\n</root>\n",
        Some(Format::Json) => b"{\"name\": \"value\"}\n",
        Some(Format::Script) => b"let x = 1;\nprint(x);\n",
        Some(Format::Checksum) => b"d41d8cd98f00b204e9800998ecf8427e  file.txt\n",
        None => b"hello world\n",
    }
}

/// Guesses the format of an example document.
pub fn sniff_format(sample: &[u8]) -> Option<Format> {
    [Format::Xml, Format::Json, Format::Checksum, Format::Script]
        .into_iter()
        .find(|f| f.validate(sample).is_valid())
}

fn word<R: Rng + ?Sized>(rng: &mut R) -> &'static str {
    WORDS.choose(rng).expect("non-empty")
}

fn scalar_text<R: Rng + ?Sized>(rng: &mut R) -> String {
    match rng.random_range(0..6) {
        0 => rng.random_range(0..10_000).to_string(),
        1 => format!("{}.{:02}", rng.random_range(0..1000), rng.random_range(0..100)),
        2 => format!("{}-{:02}-{:02}", rng.random_range(1990..2030), rng.random_range(1..13), rng.random_range(1..29)),
        3 => format!("{} {}", word(rng), word(rng)),
        _ => word(rng).to_string(),
    }
}

/// Applies `k` edits that keep `base` well-formed in `format`. A `base` the
/// named grammar rejects is replaced by the format's canonical instance;
/// with no format, it gets token-level edits instead.
pub fn structural_edits<R: Rng + ?Sized>(base: &[u8], format: Option<Format>, k: usize, budget: usize, rng: &mut R) -> Vec<u8> {
    // Digest lists have no grammar a language model can exploit; they get
    // the same token edits as free text.
    if format == Some(Format::Checksum) {
        return raw_edits(base, k, rng);
    }
    let base = match format {
        Some(f) if !f.validate(base).is_valid() => canonical_instance(format),
        _ => base,
    };
    let edited = match format {
        Some(Format::Xml) => xml::parse(base).ok().map(|mut doc| {
            for _ in 0..k {
                let room = budget.saturating_sub(xml::render(&doc).len());
                xml_edit(&mut doc.root, room, rng);
            }
            xml::render(&doc)
        }),
        Some(Format::Json) => json::parse(base).ok().map(|mut v| {
            for _ in 0..k {
                let room = budget.saturating_sub(json::render(&v).len());
                json_edit(&mut v, room, rng);
            }
            json::render(&v)
        }),
        Some(Format::Script) => script::parse(base).ok().map(|mut prog| {
            for _ in 0..k {
                let room = budget.saturating_sub(script::render(&prog).len());
                script_edit(&mut prog, room, rng);
            }
            script::render(&prog)
        }),
        _ => None,
    };
    edited.unwrap_or_else(|| raw_edits(base, k, rng))
}

// ---- XML ----

fn element_paths(root: &Element) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut stack = vec![(root, Vec::new())];
    while let Some((el, path)) = stack.pop() {
        for (i, c) in el.children.iter().enumerate() {
            if let Node::Element(child) = c {
                let mut p = path.clone();
                p.push(i);
                stack.push((child, p));
            }
        }
        out.push(path);
    }
    out.sort();
    out
}

fn element_at<'a>(root: &'a mut Element, path: &[usize]) -> &'a mut Element {
    let mut el = root;
    for &i in path {
        el = match &mut el.children[i] {
            Node::Element(e) => e,
            _ => unreachable!("paths only address elements"),
        };
    }
    el
}

fn approx_len(el: &Element) -> usize {
    let own = 2 * el.name.len() + 5 + el.attributes.iter().map(|a| a.name.len() + a.value.len() + 4).sum::<usize>();
    own + el
        .children
        .iter()
        .map(|c| match c {
            Node::Element(e) => approx_len(e),
            Node::Text(t) | Node::Comment(t) => t.len() + 7,
        })
        .sum::<usize>()
}

fn leaf<R: Rng + ?Sized>(rng: &mut R) -> Element {
    let mut e = Element::new(*XML_TAGS.choose(rng).expect("non-empty"));
    e.children.push(Node::Text(scalar_text(rng).into_bytes()));
    e
}

fn xml_edit<R: Rng + ?Sized>(root: &mut Element, room: usize, rng: &mut R) {
    let paths = element_paths(root);
    let path = paths.choose(rng).expect("root is always present").clone();
    let op = rng.random_range(0..6);
    let is_root = path.is_empty();
    let el = element_at(root, &path);
    match op {
        0 => el.name = XML_TAGS.choose(rng).expect("non-empty").to_string(),
        1 => {
            let texts: Vec<usize> = el
                .children
                .iter()
                .enumerate()
                .filter(|(_, c)| matches!(c, Node::Text(t) if !t.trim_ascii().is_empty()))
                .map(|(i, _)| i)
                .collect();
            if let Some(&i) = texts.choose(rng) {
                el.children[i] = Node::Text(format!(" {} ", scalar_text(rng)).into_bytes());
            } else if el.children.is_empty() {
                el.self_closing = false;
                el.children.push(Node::Text(scalar_text(rng).into_bytes()));
            } else {
                el.name = XML_TAGS.choose(rng).expect("non-empty").to_string();
            }
        }
        2 => {
            let value = scalar_text(rng).into_bytes();
            if !el.attributes.is_empty() && rng.random() {
                let n = el.attributes.len();
                el.attributes[rng.random_range(0..n)].value = value;
            } else {
                let name = XML_ATTRS.choose(rng).expect("non-empty");
                match el.attributes.iter_mut().find(|a| a.name == *name) {
                    Some(a) => a.value = value,
                    None => el.attributes.push(Attribute {
                        name: name.to_string(),
                        value,
                    }),
                }
            }
        }
        3 if path.len() + 2 <= XML_DEPTH_CAP && room > 40 => {
            let child = leaf(rng);
            let at = rng.random_range(0..=el.children.len());
            el.self_closing = false;
            el.children.insert(at, Node::Element(child));
        }
        4 if !is_root && approx_len(el) < room => {
            let copy = el.clone();
            let (last, parent_path) = path.split_last().expect("non-root");
            let parent = element_at(root, parent_path);
            parent.children.insert(last + 1, Node::Element(copy));
        }
        5 if !is_root => {
            let (last, parent_path) = path.split_last().expect("non-root");
            element_at(root, parent_path).children.remove(*last);
        }
        _ => el.name = XML_TAGS.choose(rng).expect("non-empty").to_string(),
    }
}

// ---- JSON ----

fn value_paths(v: &Value, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    out.push(path.clone());
    match v {
        Value::Object(m) => {
            for (i, (_, c)) in m.iter().enumerate() {
                path.push(i);
                value_paths(c, path, out);
                path.pop();
            }
        }
        Value::Array(a) => {
            for (i, c) in a.iter().enumerate() {
                path.push(i);
                value_paths(c, path, out);
                path.pop();
            }
        }
        _ => {}
    }
}

fn value_at<'a>(v: &'a mut Value, path: &[usize]) -> &'a mut Value {
    let mut cur = v;
    for &i in path {
        cur = match cur {
            Value::Object(m) => &mut m[i].1,
            Value::Array(a) => &mut a[i],
            _ => unreachable!("paths only descend into containers"),
        };
    }
    cur
}

fn json_scalar<R: Rng + ?Sized>(rng: &mut R) -> Value {
    match rng.random_range(0..6) {
        0 => Value::Number(rng.random_range(0..10_000).to_string()),
        1 => Value::Number(format!("{}.{}", rng.random_range(-100..100), rng.random_range(0..100))),
        2 => Value::Bool(rng.random()),
        3 => Value::Null,
        _ => Value::String(scalar_text(rng).into_bytes()),
    }
}

fn json_key<R: Rng + ?Sized>(rng: &mut R) -> Vec<u8> {
    JSON_KEYS.choose(rng).expect("non-empty").as_bytes().to_vec()
}

fn json_edit<R: Rng + ?Sized>(root: &mut Value, room: usize, rng: &mut R) {
    let mut paths = Vec::new();
    value_paths(root, &mut Vec::new(), &mut paths);
    let path = paths.choose(rng).expect("root is always present").clone();
    let op = rng.random_range(0..6);
    if let Some((&last, parent_path)) = path.split_last() {
        let parent = value_at(root, parent_path);
        match (op, parent) {
            (0, Value::Object(m)) => {
                m[last].0 = json_key(rng);
                return;
            }
            (3, Value::Object(m)) if json::render(&m[last].1).len() < room => {
                let copy = m[last].1.clone();
                m.insert(last + 1, (json_key(rng), copy));
                return;
            }
            (3, Value::Array(a)) if json::render(&a[last]).len() < room => {
                let copy = a[last].clone();
                a.insert(last + 1, copy);
                return;
            }
            (4, Value::Object(m)) if m.len() > 1 => {
                m.remove(last);
                return;
            }
            (4, Value::Array(a)) if a.len() > 1 => {
                a.remove(last);
                return;
            }
            _ => {}
        }
    }
    let depth = path.len();
    let v = value_at(root, &path);
    match v {
        Value::Object(m) if room > 30 => {
            let at = rng.random_range(0..=m.len());
            m.insert(at, (json_key(rng), json_scalar(rng)));
        }
        Value::Array(a) if room > 30 => {
            let item = match a.first() {
                Some(Value::String(_)) => Value::String(scalar_text(rng).into_bytes()),
                Some(Value::Number(_)) => Value::Number(rng.random_range(0..1000).to_string()),
                _ => json_scalar(rng),
            };
            let at = rng.random_range(0..=a.len());
            a.insert(at, item);
        }
        Value::Object(_) | Value::Array(_) => {}
        _ if op == 5 && depth < JSON_DEPTH_CAP && room > 30 => {
            let inner = std::mem::replace(v, Value::Null);
            *v = if rng.random() {
                Value::Object(vec![(json_key(rng), inner)])
            } else {
                Value::Array(vec![inner, json_scalar(rng)])
            };
        }
        _ => *v = json_scalar(rng),
    }
}

// ---- script ----

fn child_blocks(s: &mut Stmt) -> Vec<&mut Vec<Stmt>> {
    match s {
        Stmt::If(_, then, els) => {
            let mut out = vec![then];
            let mut tail = els.as_mut();
            while let Some(e) = tail {
                match e {
                    Else::Block(b) => {
                        out.push(b);
                        tail = None;
                    }
                    Else::If(inner) => match inner.as_mut() {
                        Stmt::If(_, t, e2) => {
                            out.push(t);
                            tail = e2.as_mut();
                        }
                        _ => tail = None,
                    },
                }
            }
            out
        }
        Stmt::While(_, b) | Stmt::For(_, _, _, b) | Stmt::Fn(_, _, b) | Stmt::Block(b) => vec![b],
        _ => Vec::new(),
    }
}

fn count_blocks(stmts: &mut [Stmt]) -> usize {
    1 + stmts
        .iter_mut()
        .map(|s| child_blocks(s).into_iter().map(|b| count_blocks(b)).sum::<usize>())
        .sum::<usize>()
}

fn nth_block<'a>(stmts: &'a mut Vec<Stmt>, n: &mut usize) -> Option<&'a mut Vec<Stmt>> {
    if *n == 0 {
        return Some(stmts);
    }
    *n -= 1;
    for s in stmts.iter_mut() {
        for b in child_blocks(s) {
            if let Some(found) = nth_block(b, n) {
                return Some(found);
            }
        }
    }
    None
}

fn visit_expr(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(e);
    match e {
        Expr::Array(items) | Expr::Call(_, items) => items.iter_mut().for_each(|i| visit_expr(i, f)),
        Expr::Index(a, b) | Expr::Binary(_, a, b) => {
            visit_expr(a, f);
            visit_expr(b, f);
        }
        Expr::Unary(_, a) => visit_expr(a, f),
        _ => {}
    }
}

/// Calls `f` on every expression. Assignment targets are skipped unless
/// `lvalues` is set.
fn visit_stmts(stmts: &mut [Stmt], lvalues: bool, f: &mut dyn FnMut(&mut Expr)) {
    walk_stmts(stmts, &mut |s| match s {
        Stmt::Let(_, e) | Stmt::Expr(e) | Stmt::Return(Some(e)) | Stmt::If(e, ..) | Stmt::While(e, _) => visit_expr(e, f),
        Stmt::For(_, Some(c), ..) => visit_expr(c, f),
        Stmt::Assign(target, value) => {
            if lvalues {
                visit_expr(target, f);
            }
            visit_expr(value, f);
        }
        Stmt::Print(args) => args.iter_mut().for_each(|a| visit_expr(a, f)),
        _ => {}
    });
}

/// Calls `f` on every statement, nested ones included.
fn walk_stmts(stmts: &mut [Stmt], f: &mut dyn FnMut(&mut Stmt)) {
    for s in stmts {
        walk_stmt(s, f);
    }
}

fn walk_stmt(s: &mut Stmt, f: &mut dyn FnMut(&mut Stmt)) {
    f(s);
    match s {
        Stmt::If(_, then, els) => {
            walk_stmts(then, f);
            match els {
                Some(Else::Block(b)) => walk_stmts(b, f),
                Some(Else::If(inner)) => walk_stmt(inner, f),
                None => {}
            }
        }
        Stmt::For(init, _, step, b) => {
            if let Some(i) = init {
                walk_stmt(i, f);
            }
            if let Some(st) = step {
                walk_stmt(st, f);
            }
            walk_stmts(b, f);
        }
        Stmt::While(_, b) | Stmt::Fn(_, _, b) | Stmt::Block(b) => walk_stmts(b, f),
        _ => {}
    }
}

/// Renames every binding and use of `from`.
fn rename_ident(stmts: &mut [Stmt], from: &str, to: &str) {
    walk_stmts(stmts, &mut |s| match s {
        Stmt::Let(n, _) if n == from => *n = to.to_string(),
        Stmt::Fn(n, params, _) => {
            if n == from {
                *n = to.to_string();
            }
            for p in params.iter_mut().filter(|p| *p == from) {
                *p = to.to_string();
            }
        }
        _ => {}
    });
    visit_stmts(stmts, true, &mut |e| match e {
        Expr::Ident(n) | Expr::Call(n, _) if n == from => *n = to.to_string(),
        _ => {}
    });
}

fn ident_names(stmts: &mut [Stmt]) -> Vec<String> {
    let mut names = Vec::new();
    visit_stmts(stmts, true, &mut |e| {
        if let Expr::Ident(n) = e {
            names.push(n.clone());
        }
    });
    walk_stmts(stmts, &mut |s| match s {
        Stmt::Let(n, _) => names.push(n.clone()),
        Stmt::Fn(n, params, _) => {
            names.push(n.clone());
            names.extend(params.iter().cloned());
        }
        _ => {}
    });
    names.sort();
    names.dedup();
    names
}

fn statement_template<R: Rng + ?Sized>(rng: &mut R) -> Vec<Stmt> {
    let id = |rng: &mut R| *SCRIPT_IDENTS.choose(rng).expect("non-empty");
    let (a, b, i) = (id(rng), id(rng), id(rng));
    let f = if rng.random() { *SCRIPT_BUILTINS.choose(rng).expect("non-empty") } else { id(rng) };
    let (n, m) = (rng.random_range(0..100), rng.random_range(1..20));
    let w = word(rng);
    let src = match rng.random_range(0..14) {
        0 => format!("let {a} = {n};"),
        1 => format!("print({a});"),
        2 => format!("{a} = {a} + {n};"),
        3 => format!("if ({a} > {n}) {{ print({a}); }} else {{ {a} = 0; }}"),
        4 => format!("while ({a} < {n}) {{ {a} = {a} + {m}; }}"),
        5 => format!("for (let {i} = 0; {i} < {m}; {i} = {i} + 1) {{ print({i}); }}"),
        6 => format!("fn {b}({a}, {i}) {{ return {a} * {i}; }}"),
        7 => format!("let {a} = [{n}, {m}, \"{w}\"];"),
        8 => format!("print({f}({a}));"),
        9 => format!("let {a} = \"{w}\";"),
        10 => format!("{a} = {f}({n}, {m});"),
        11 => format!("if ({a} == {n}) {{ break; }} else if ({a} != {m}) {{ continue; }}"),
        12 => format!("let {a} = !({b} && {i}) || {n} % {m};"),
        _ => format!("return {a}[{n}];"),
    };
    script::parse(src.as_bytes()).expect("templates are well-formed")
}

fn random_binop<R: Rng + ?Sized>(rng: &mut R) -> BinOp {
    *BinOp::ALL.choose(rng).expect("non-empty")
}

fn script_edit<R: Rng + ?Sized>(prog: &mut Vec<Stmt>, room: usize, rng: &mut R) {
    match rng.random_range(0..6) {
        0 => {
            let names = ident_names(prog);
            if let Some(from) = names.choose(rng) {
                let to = SCRIPT_IDENTS.choose(rng).expect("non-empty");
                rename_ident(prog, from, to);
                return;
            }
        }
        1 | 5 => {
            let want_literal = rng.random_range(0..2) == 0;
            let mut count = 0;
            visit_stmts(prog, true, &mut |e| {
                if matches!(e, Expr::Number(_) | Expr::Str(_) | Expr::Bool(_)) || (!want_literal && matches!(e, Expr::Binary(..))) {
                    count += 1;
                }
            });
            if count > 0 {
                let mut target: usize = rng.random_range(0..count);
                let mut replacement_seed: u64 = rng.random();
                visit_stmts(prog, true, &mut |e| {
                    let hit = matches!(e, Expr::Number(_) | Expr::Str(_) | Expr::Bool(_))
                        || (!want_literal && matches!(e, Expr::Binary(..)));
                    if !hit {
                        return;
                    }
                    if target == 0 {
                        replacement_seed = replacement_seed.wrapping_mul(6364136223846793005).wrapping_add(1);
                        let pick = (replacement_seed >> 33) as usize;
                        *e = match e {
                            Expr::Binary(_, l, r) => Expr::Binary(BinOp::ALL[pick % BinOp::ALL.len()], l.clone(), r.clone()),
                            Expr::Number(_) => Expr::Number((pick % 1000).to_string()),
                            Expr::Str(_) => Expr::Str(WORDS[pick % WORDS.len()].to_string()),
                            _ => Expr::Bool(pick % 2 == 0),
                        };
                    }
                    target = target.wrapping_sub(1);
                });
                return;
            }
        }
        2 if room > 60 => {
            let blocks = count_blocks(prog);
            let mut n = rng.random_range(0..blocks);
            if let Some(block) = nth_block(prog, &mut n) {
                let at = rng.random_range(0..=block.len());
                for (j, s) in statement_template(rng).into_iter().enumerate() {
                    block.insert(at + j, s);
                }
                return;
            }
        }
        3 => {
            let blocks = count_blocks(prog);
            let mut n = rng.random_range(0..blocks);
            if let Some(block) = nth_block(prog, &mut n) {
                if !block.is_empty() {
                    let i = rng.random_range(0..block.len());
                    if script::render(&block[i..=i]).len() < room {
                        let copy = block[i].clone();
                        block.insert(i + 1, copy);
                        return;
                    }
                }
            }
        }
        4 => {
            let blocks = count_blocks(prog);
            let mut n = rng.random_range(0..blocks);
            if let Some(block) = nth_block(prog, &mut n) {
                if block.len() > 1 {
                    let i = rng.random_range(0..block.len());
                    block.remove(i);
                    return;
                }
            }
        }
        _ => {}
    }
    // Fallback: wrap some expression in a new binary operation.
    let mut count = 0;
    visit_stmts(prog, false, &mut |_| count += 1);
    if count == 0 {
        prog.extend(statement_template(rng));
        return;
    }
    let mut target: usize = rng.random_range(0..count);
    let op = random_binop(rng);
    let rhs = Expr::Number(rng.random_range(1..100).to_string());
    visit_stmts(prog, false, &mut |e| {
        if target == 0 {
            let inner = std::mem::replace(e, Expr::Null);
            *e = Expr::Binary(op, Box::new(inner), Box::new(rhs.clone()));
        }
        target = target.wrapping_sub(1);
    });
}

// ---- token level ----

fn tokenize(bytes: &[u8]) -> Vec<&[u8]> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let class = |b: u8| {
            if b.is_ascii_alphanumeric() || b == b'_' || b >= 0x80 {
                0
            } else if b.is_ascii_whitespace() {
                1
            } else {
                2
            }
        };
        let c = class(bytes[i]);
        let mut j = i + 1;
        if c != 2 {
            while j < bytes.len() && class(bytes[j]) == c {
                j += 1;
            }
        }
        out.push(&bytes[i..j]);
        i = j;
    }
    out
}

fn printable<R: Rng + ?Sized>(rng: &mut R) -> u8 {
    rng.random_range(0x21..0x7f)
}

/// Edits for input the grammar cannot parse: swap in vocabulary words,
/// drop, repeat or reorder tokens.
fn raw_edits<R: Rng + ?Sized>(base: &[u8], k: usize, rng: &mut R) -> Vec<u8> {
    let mut toks: Vec<Vec<u8>> = tokenize(base).into_iter().map(<[u8]>::to_vec).collect();
    for _ in 0..k {
        if toks.is_empty() {
            toks.push(word(rng).as_bytes().to_vec());
            continue;
        }
        let i = rng.random_range(0..toks.len());
        match rng.random_range(0..4) {
            0 => {
                let pool: [&[&str]; 3] = [&XML_TAGS, &JSON_KEYS, &WORDS];
                toks[i] = pool.choose(rng).expect("non-empty").choose(rng).expect("non-empty").as_bytes().to_vec();
            }
            1 => {
                toks.remove(i);
            }
            2 => {
                let t = toks[i].clone();
                toks.insert(i, t);
            }
            _ if i + 1 < toks.len() => toks.swap(i, i + 1),
            _ => {}
        }
    }
    toks.concat()
}

/// Damages each lexical token independently with probability `p`.
pub fn corrupt<R: Rng + ?Sized>(bytes: &[u8], p: f64, rng: &mut R) -> Vec<u8> {
    let mut out = Vec::with_capacity(bytes.len() + 8);
    for tok in tokenize(bytes) {
        if !rng.random_bool(p) {
            out.extend_from_slice(tok);
            continue;
        }
        match rng.random_range(0..4) {
            0 => {}
            1 => out.push(printable(rng)),
            2 => {
                out.extend_from_slice(tok);
                out.push(printable(rng));
            }
            _ => {
                out.extend_from_slice(tok);
                out.extend_from_slice(tok);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sniffing() {
        assert_eq!(sniff_format(b"<a/>"), Some(Format::Xml));
        assert_eq!(sniff_format(b"[1]"), Some(Format::Json));
        assert_eq!(sniff_format(b"let x = 1;"), Some(Format::Script));
        assert_eq!(sniff_format(b"d41d8cd98f00b204e9800998ecf8427e  a\n"), Some(Format::Checksum));
        assert_eq!(sniff_format(b"<a>"), None);
    }

    #[test]
    fn canonical_instances_are_valid() {
        for f in Format::ALL {
            assert!(f.validate(canonical_instance(Some(f))).is_valid(), "{f}");
        }
    }

    #[test]
    fn edits_preserve_validity() {
        let bases: [(Format, &[u8]); 3] = [
            (Format::Xml, b"<?xml version=\"1.0\"?>\n<doc a=\"1\"><x>t</x><!-- c --><y/></doc>\n"),
            (Format::Json, b"{\"a\": [1, \"s\", {\"b\": null}], \"c\": true}"),
            (Format::Script, b"fn f(a) { return a + 1; }\nlet x = [1, 2];\nwhile (x[0] < 3) { x[0] = f(x[0]); }\nif (x) { print(1); } else if (x) { print(2); } else { print(3); }\nfor (;;) { break; }\n"),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (format, base) in bases {
            for k in [1, 4, 9] {
                for _ in 0..300 {
                    let out = structural_edits(base, Some(format), k, 1024, &mut rng);
                    assert!(format.validate(&out).is_valid(), "{format}: {}", String::from_utf8_lossy(&out));
                }
            }
        }
    }

    #[test]
    fn edits_respect_budget_when_base_fits() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..300 {
            let out = structural_edits(b"<doc><a>x</a><b>y</b></doc>", Some(Format::Xml), 9, 200, &mut rng);
            assert!(out.len() <= 260, "{}", out.len());
        }
    }

    #[test]
    fn renaming_is_consistent() {
        let mut prog = script::parse(b"let total = 1; fn add(total) { return total; } print(add(total));").unwrap();
        rename_ident(&mut prog, "total", "sum");
        let text = String::from_utf8(script::render(&prog)).unwrap();
        assert!(!text.contains("total"), "{text}");
        assert_eq!(text.matches("sum").count(), 4);
    }

    #[test]
    fn broken_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let out = structural_edits(b"<doc", Some(Format::Xml), 3, 1024, &mut rng);
            assert!(Format::Xml.validate(&out).is_valid());
        }
        let out = structural_edits(b"<doc a", None, 1, 1024, &mut rng);
        assert_ne!(out, b"<doc a");
        assert_eq!(tokenize(b"<a b>x1 y").concat(), b"<a b>x1 y");
    }

    #[test]
    fn corruption_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(corrupt(b"<a>text</a>", 0.0, &mut rng), b"<a>text</a>");
        let damaged = (0..100).filter(|_| corrupt(b"<a>text</a>", 0.4, &mut rng) != b"<a>text</a>").count();
        assert!(damaged > 80);
    }
}
