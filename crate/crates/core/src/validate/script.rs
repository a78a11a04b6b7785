//! The bundled mini scripting language.
//!
//! ```text
//! program  := stmt*
//! stmt     := "let" IDENT "=" expr ";"
//!           | place "=" expr ";"
//!           | "if" "(" expr ")" block ("else" (block | if-stmt))?
//!           | "while" "(" expr ")" block
//!           | "for" "(" simple? ";" expr? ";" simple? ")" block
//!           | "fn" IDENT "(" (IDENT ("," IDENT)*)? ")" block
//!           | "return" expr? ";"
//!           | "print" "(" args? ")" ";"
//!           | "break" ";" | "continue" ";"
//!           | block | expr ";"
//! block    := "{" stmt* "}"
//! expr     := binary expression over || && == != < <= > >= + - * / %
//!             with unary ! -, calls, indexing, arrays and literals
//! ```
//! `//` starts a line comment.

use std::fmt;

use crate::probe::Probe;

pub const MAX_DEPTH: usize = 96;

pub const KEYWORDS: [&str; 13] = [
    "let", "if", "else", "while", "for", "fn", "return", "print", "break", "continue", "true", "false", "null",
];

pub mod edge {
    pub const ENTRY: u16 = 1;
    pub const TOK_IDENT: u16 = 2;
    pub const TOK_KEYWORD: u16 = 3;
    pub const TOK_NUMBER: u16 = 4;
    pub const TOK_STRING: u16 = 5;
    pub const TOK_PUNCT: u16 = 6;
    pub const TOK_OP: u16 = 7;
    pub const COMMENT: u16 = 8;
    pub const WS: u16 = 9;
    pub const LET: u16 = 10;
    pub const ASSIGN: u16 = 11;
    pub const IF: u16 = 12;
    pub const ELSE: u16 = 13;
    pub const WHILE: u16 = 14;
    pub const FOR: u16 = 15;
    pub const FN: u16 = 16;
    pub const RETURN: u16 = 17;
    pub const PRINT: u16 = 18;
    pub const BREAK: u16 = 19;
    pub const CONTINUE: u16 = 20;
    pub const EXPR_STMT: u16 = 21;
    pub const BLOCK: u16 = 22;
    pub const BINARY: u16 = 23;
    pub const CALL: u16 = 24;
    pub const INDEX: u16 = 25;
    pub const ARRAY: u16 = 26;
    pub const UNARY: u16 = 27;
    pub const PAREN: u16 = 28;
    pub const STR_ESCAPE: u16 = 29;
    /// `DEPTH + min(depth, 15)` on every nested block or parenthesis.
    pub const DEPTH: u16 = 40;
    pub const ERR_LEX: u16 = 60;
    pub const ERR_STRING: u16 = 61;
    pub const ERR_EXPR: u16 = 62;
    pub const ERR_SEMI: u16 = 63;
    pub const ERR_IDENT: u16 = 64;
    pub const ERR_LPAREN: u16 = 65;
    pub const ERR_RPAREN: u16 = 66;
    pub const ERR_LBRACE: u16 = 67;
    pub const ERR_STRAY_CLOSE: u16 = 68;
    pub const ERR_EOF_BLOCK: u16 = 69;
    pub const ERR_ASSIGN_TARGET: u16 = 70;
    pub const ERR_DEPTH: u16 = 71;
    pub const ERR_RBRACKET: u16 = 72;
    pub const ERR_NUMBER: u16 = 73;
    pub const ERR_KEYWORD: u16 = 74;
    pub const LAST: u16 = 99;

    /// Ids emitted only on rejection paths.
    pub fn is_error(id: u16) -> bool {
        (60..=74).contains(&id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScriptError {
    pub offset: usize,
    pub detail: &'static str,
}

impl fmt::Display for ScriptError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at byte {}", self.detail, self.offset)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Add,
    Sub,
    Mul,
    Div,
    Rem,
}

impl BinOp {
    pub const ALL: [BinOp; 13] = [
        BinOp::Or,
        BinOp::And,
        BinOp::Eq,
        BinOp::Ne,
        BinOp::Lt,
        BinOp::Le,
        BinOp::Gt,
        BinOp::Ge,
        BinOp::Add,
        BinOp::Sub,
        BinOp::Mul,
        BinOp::Div,
        BinOp::Rem,
    ];

    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Or => "||",
            BinOp::And => "&&",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
        }
    }

    fn from_symbol(s: &str) -> Option<BinOp> {
        BinOp::ALL.into_iter().find(|op| op.symbol() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Number(String),
    Str(String),
    Bool(bool),
    Null,
    Ident(String),
    Array(Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Else {
    Block(Vec<Stmt>),
    If(Box<Stmt>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Let(String, Expr),
    Assign(Expr, Expr),
    If(Expr, Vec<Stmt>, Option<Else>),
    While(Expr, Vec<Stmt>),
    For(Option<Box<Stmt>>, Option<Expr>, Option<Box<Stmt>>, Vec<Stmt>),
    Fn(String, Vec<String>, Vec<Stmt>),
    Return(Option<Expr>),
    Print(Vec<Expr>),
    Break,
    Continue,
    Block(Vec<Stmt>),
    Expr(Expr),
}

pub type Program = Vec<Stmt>;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Keyword(&'static str),
    Number(String),
    Str(String),
    Punct(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

const PUNCTS: [&str; 25] = [
    "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]", ",", ";", "=", "<", ">", "+", "-", "*", "/",
    "%", "!", ".", ":",
];

fn lex<P: Probe>(src: &[u8], probe: &mut P) -> Result<Vec<Token>, ScriptError> {
    let mut out = Vec::new();
    let mut pos = 0;
    let err = |probe: &mut P, e: u16, offset: usize, detail| {
        probe.hit(e);
        Err(ScriptError { offset, detail })
    };
    while pos < src.len() {
        let b = src[pos];
        if b.is_ascii_whitespace() {
            probe.hit(edge::WS);
            pos += 1;
            continue;
        }
        if src[pos..].starts_with(b"//") {
            probe.hit(edge::COMMENT);
            while pos < src.len() && src[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        if b.is_ascii_alphabetic() || b == b'_' {
            while pos < src.len() && (src[pos].is_ascii_alphanumeric() || src[pos] == b'_') {
                pos += 1;
            }
            let word = std::str::from_utf8(&src[start..pos]).expect("ascii");
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => {
                    probe.hit(edge::TOK_KEYWORD);
                    Tok::Keyword(k)
                }
                None => {
                    probe.hit(edge::TOK_IDENT);
                    Tok::Ident(word.to_string())
                }
            };
            out.push(Token { tok, offset: start });
            continue;
        }
        if b.is_ascii_digit() {
            while pos < src.len() && src[pos].is_ascii_digit() {
                pos += 1;
            }
            if pos < src.len() && src[pos] == b'.' {
                pos += 1;
                let frac = pos;
                while pos < src.len() && src[pos].is_ascii_digit() {
                    pos += 1;
                }
                if pos == frac {
                    return err(probe, edge::ERR_NUMBER, pos, "expected digits after '.'");
                }
            }
            if pos < src.len() && (src[pos].is_ascii_alphabetic() || src[pos] == b'_') {
                return err(probe, edge::ERR_NUMBER, pos, "identifier directly after number");
            }
            probe.hit(edge::TOK_NUMBER);
            let text = std::str::from_utf8(&src[start..pos]).expect("ascii").to_string();
            out.push(Token { tok: Tok::Number(text), offset: start });
            continue;
        }
        if b == b'"' {
            pos += 1;
            loop {
                match src.get(pos) {
                    None | Some(b'\n') => return err(probe, edge::ERR_STRING, pos, "unterminated string"),
                    Some(b'"') => break,
                    Some(b'\\') => {
                        probe.hit(edge::STR_ESCAPE);
                        if src.get(pos + 1).is_none_or(|&c| c == b'\n') {
                            return err(probe, edge::ERR_STRING, pos, "unterminated string");
                        }
                        pos += 2;
                    }
                    Some(_) => pos += 1,
                }
            }
            let body = &src[start + 1..pos];
            pos += 1;
            let Ok(body) = std::str::from_utf8(body) else {
                return err(probe, edge::ERR_STRING, start, "string is not valid UTF-8");
            };
            probe.hit(edge::TOK_STRING);
            out.push(Token { tok: Tok::Str(body.to_string()), offset: start });
            continue;
        }
        match PUNCTS.iter().find(|p| src[pos..].starts_with(p.as_bytes())) {
            Some(p) => {
                probe.hit(if p.len() == 1 && "(){}[],;".contains(*p) { edge::TOK_PUNCT } else { edge::TOK_OP });
                pos += p.len();
                out.push(Token { tok: Tok::Punct(p), offset: start });
            }
            None => return err(probe, edge::ERR_LEX, pos, "unexpected character"),
        }
    }
    Ok(out)
}

struct Parser<'a, P: Probe> {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
    depth: usize,
    probe: &'a mut P,
}

type PResult<T> = Result<T, ScriptError>;

impl<P: Probe> Parser<'_, P> {
    fn err<T>(&mut self, e: u16, detail: &'static str) -> PResult<T> {
        self.probe.hit(e);
        let offset = self.toks.get(self.pos).map_or(self.end, |t| t.offset);
        Err(ScriptError { offset, detail })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Some(Tok::Punct(q)) if *q == p)
    }

    fn is_keyword(&self, k: &str) -> bool {
        matches!(self.peek(), Some(Tok::Keyword(q)) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_punct(&mut self, p: &str, e: u16, detail: &'static str) -> PResult<()> {
        if self.eat_punct(p) {
            Ok(())
        } else {
            self.err(e, detail)
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().cloned() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(name)
            }
            Some(Tok::Keyword(_)) => self.err(edge::ERR_KEYWORD, "keyword used as identifier"),
            _ => self.err(edge::ERR_IDENT, "expected identifier"),
        }
    }

    fn nest(&mut self) -> PResult<()> {
        self.depth += 1;
        self.probe.hit(edge::DEPTH + self.depth.min(15) as u16);
        if self.depth > MAX_DEPTH {
            return self.err(edge::ERR_DEPTH, "nesting too deep");
        }
        Ok(())
    }

    fn program(&mut self) -> PResult<Program> {
        let mut stmts = Vec::new();
        while self.peek().is_some() {
            if self.is_punct("}") {
                return self.err(edge::ERR_STRAY_CLOSE, "unbalanced '}'");
            }
            stmts.push(self.stmt()?);
        }
        Ok(stmts)
    }

    fn block(&mut self) -> PResult<Vec<Stmt>> {
        self.expect_punct("{", edge::ERR_LBRACE, "expected '{'")?;
        self.nest()?;
        self.probe.hit(edge::BLOCK);
        let mut stmts = Vec::new();
        loop {
            match self.peek() {
                None => return self.err(edge::ERR_EOF_BLOCK, "unterminated block"),
                Some(Tok::Punct("}")) => {
                    self.pos += 1;
                    self.depth -= 1;
                    return Ok(stmts);
                }
                Some(_) => stmts.push(self.stmt()?),
            }
        }
    }

    fn semi(&mut self) -> PResult<()> {
        self.expect_punct(";", edge::ERR_SEMI, "expected ';'")
    }

    /// `let`, assignment, or expression without the trailing `;`.
    fn simple(&mut self) -> PResult<Stmt> {
        if self.is_keyword("let") {
            self.pos += 1;
            self.probe.hit(edge::LET);
            let name = self.ident()?;
            self.expect_punct("=", edge::ERR_EXPR, "expected '=' in let")?;
            let value = self.expr()?;
            return Ok(Stmt::Let(name, value));
        }
        let e = self.expr()?;
        if self.eat_punct("=") {
            if !matches!(e, Expr::Ident(_) | Expr::Index(..)) {
                return self.err(edge::ERR_ASSIGN_TARGET, "invalid assignment target");
            }
            self.probe.hit(edge::ASSIGN);
            let value = self.expr()?;
            return Ok(Stmt::Assign(e, value));
        }
        self.probe.hit(edge::EXPR_STMT);
        Ok(Stmt::Expr(e))
    }

    fn paren_expr(&mut self) -> PResult<Expr> {
        self.expect_punct("(", edge::ERR_LPAREN, "expected '('")?;
        let e = self.expr()?;
        self.expect_punct(")", edge::ERR_RPAREN, "expected ')'")?;
        Ok(e)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek().cloned() {
            Some(Tok::Keyword("if")) => {
                self.pos += 1;
                self.probe.hit(edge::IF);
                let cond = self.paren_expr()?;
                let then = self.block()?;
                let otherwise = if self.is_keyword("else") {
                    self.pos += 1;
                    self.probe.hit(edge::ELSE);
                    if self.is_keyword("if") {
                        self.nest()?;
                        let nested = self.stmt()?;
                        self.depth -= 1;
                        Some(Else::If(Box::new(nested)))
                    } else {
                        Some(Else::Block(self.block()?))
                    }
                } else {
                    None
                };
                Ok(Stmt::If(cond, then, otherwise))
            }
            Some(Tok::Keyword("while")) => {
                self.pos += 1;
                self.probe.hit(edge::WHILE);
                let cond = self.paren_expr()?;
                Ok(Stmt::While(cond, self.block()?))
            }
            Some(Tok::Keyword("for")) => {
                self.pos += 1;
                self.probe.hit(edge::FOR);
                self.expect_punct("(", edge::ERR_LPAREN, "expected '('")?;
                let init = if self.is_punct(";") { None } else { Some(Box::new(self.simple()?)) };
                self.semi()?;
                let cond = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.semi()?;
                let step = if self.is_punct(")") { None } else { Some(Box::new(self.simple()?)) };
                self.expect_punct(")", edge::ERR_RPAREN, "expected ')'")?;
                Ok(Stmt::For(init, cond, step, self.block()?))
            }
            Some(Tok::Keyword("fn")) => {
                self.pos += 1;
                self.probe.hit(edge::FN);
                let name = self.ident()?;
                self.expect_punct("(", edge::ERR_LPAREN, "expected '('")?;
                let mut params = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        params.push(self.ident()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect_punct(")", edge::ERR_RPAREN, "expected ')'")?;
                Ok(Stmt::Fn(name, params, self.block()?))
            }
            Some(Tok::Keyword("return")) => {
                self.pos += 1;
                self.probe.hit(edge::RETURN);
                let value = if self.is_punct(";") { None } else { Some(self.expr()?) };
                self.semi()?;
                Ok(Stmt::Return(value))
            }
            Some(Tok::Keyword("print")) => {
                self.pos += 1;
                self.probe.hit(edge::PRINT);
                self.expect_punct("(", edge::ERR_LPAREN, "expected '('")?;
                let args = self.args(")")?;
                self.semi()?;
                Ok(Stmt::Print(args))
            }
            Some(Tok::Keyword("break")) => {
                self.pos += 1;
                self.probe.hit(edge::BREAK);
                self.semi()?;
                Ok(Stmt::Break)
            }
            Some(Tok::Keyword("continue")) => {
                self.pos += 1;
                self.probe.hit(edge::CONTINUE);
                self.semi()?;
                Ok(Stmt::Continue)
            }
            Some(Tok::Punct("{")) => Ok(Stmt::Block(self.block()?)),
            _ => {
                let s = self.simple()?;
                self.semi()?;
                Ok(s)
            }
        }
    }

    /// Comma-separated expressions up to and including `close`.
    fn args(&mut self, close: &str) -> PResult<Vec<Expr>> {
        let mut args = Vec::new();
        if self.eat_punct(close) {
            return Ok(args);
        }
        loop {
            args.push(self.expr()?);
            if self.eat_punct(",") {
                continue;
            }
            if self.eat_punct(close) {
                return Ok(args);
            }
            return if close == ")" {
                self.err(edge::ERR_RPAREN, "expected ')'")
            } else {
                self.err(edge::ERR_RBRACKET, "expected ']'")
            };
        }
    }

    fn expr(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(Tok::Punct(p)) => BinOp::from_symbol(p),
                _ => None,
            };
            let Some(op) = op.filter(|op| op.precedence() >= min_prec) else {
                return Ok(lhs);
            };
            self.pos += 1;
            self.probe.hit(edge::BINARY);
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> PResult<Expr> {
        let op = if self.is_punct("!") {
            Some(UnOp::Not)
        } else if self.is_punct("-") {
            Some(UnOp::Neg)
        } else {
            None
        };
        if let Some(op) = op {
            self.pos += 1;
            self.probe.hit(edge::UNARY);
            self.nest()?;
            let inner = self.unary()?;
            self.depth -= 1;
            return Ok(Expr::Unary(op, Box::new(inner)));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        while self.is_punct("[") {
            self.pos += 1;
            self.probe.hit(edge::INDEX);
            self.nest()?;
            let idx = self.expr()?;
            self.depth -= 1;
            self.expect_punct("]", edge::ERR_RBRACKET, "expected ']'")?;
            e = Expr::Index(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn primary(&mut self) -> PResult<Expr> {
        match self.peek().cloned() {
            Some(Tok::Number(n)) => {
                self.pos += 1;
                Ok(Expr::Number(n))
            }
            Some(Tok::Str(s)) => {
                self.pos += 1;
                Ok(Expr::Str(s))
            }
            Some(Tok::Keyword("true")) => {
                self.pos += 1;
                Ok(Expr::Bool(true))
            }
            Some(Tok::Keyword("false")) => {
                self.pos += 1;
                Ok(Expr::Bool(false))
            }
            Some(Tok::Keyword("null")) => {
                self.pos += 1;
                Ok(Expr::Null)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.eat_punct("(") {
                    self.probe.hit(edge::CALL);
                    self.nest()?;
                    let args = self.args(")")?;
                    self.depth -= 1;
                    return Ok(Expr::Call(name, args));
                }
                Ok(Expr::Ident(name))
            }
            Some(Tok::Punct("(")) => {
                self.pos += 1;
                self.probe.hit(edge::PAREN);
                self.nest()?;
                let e = self.expr()?;
                self.depth -= 1;
                self.expect_punct(")", edge::ERR_RPAREN, "expected ')'")?;
                Ok(e)
            }
            Some(Tok::Punct("[")) => {
                self.pos += 1;
                self.probe.hit(edge::ARRAY);
                self.nest()?;
                let items = self.args("]")?;
                self.depth -= 1;
                Ok(Expr::Array(items))
            }
            _ => self.err(edge::ERR_EXPR, "expected expression"),
        }
    }
}

pub fn parse_with<P: Probe>(src: &[u8], probe: &mut P) -> Result<Program, ScriptError> {
    probe.hit(edge::ENTRY);
    let toks = lex(src, probe)?;
    Parser {
        toks,
        pos: 0,
        end: src.len(),
        depth: 0,
        probe,
    }
    .program()
}

pub fn parse(src: &[u8]) -> Result<Program, ScriptError> {
    parse_with(src, &mut ())
}

/// Pretty-prints a program with two-space indentation and minimal parentheses.
pub fn render(prog: &[Stmt]) -> Vec<u8> {
    let mut out = String::new();
    for s in prog {
        render_stmt(s, 0, &mut out);
    }
    out.into_bytes()
}

fn pad(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn render_block(body: &[Stmt], level: usize, out: &mut String) {
    out.push_str("{\n");
    for s in body {
        render_stmt(s, level + 1, out);
    }
    pad(level, out);
    out.push('}');
}

fn render_simple(s: &Stmt, out: &mut String) {
    match s {
        Stmt::Let(n, e) => {
            out.push_str("let ");
            out.push_str(n);
            out.push_str(" = ");
            render_expr(e, 0, out);
        }
        Stmt::Assign(t, e) => {
            render_expr(t, 0, out);
            out.push_str(" = ");
            render_expr(e, 0, out);
        }
        Stmt::Expr(e) => render_expr(e, 0, out),
        other => unreachable!("not a simple statement: {other:?}"),
    }
}

fn render_stmt(s: &Stmt, level: usize, out: &mut String) {
    pad(level, out);
    render_stmt_inline(s, level, out);
    out.push('\n');
}

fn render_stmt_inline(s: &Stmt, level: usize, out: &mut String) {
    match s {
        Stmt::Let(..) | Stmt::Assign(..) | Stmt::Expr(_) => {
            render_simple(s, out);
            out.push(';');
        }
        Stmt::If(c, then, otherwise) => {
            out.push_str("if (");
            render_expr(c, 0, out);
            out.push_str(") ");
            render_block(then, level, out);
            match otherwise {
                None => {}
                Some(Else::Block(b)) => {
                    out.push_str(" else ");
                    render_block(b, level, out);
                }
                Some(Else::If(nested)) => {
                    out.push_str(" else ");
                    render_stmt_inline(nested, level, out);
                }
            }
        }
        Stmt::While(c, body) => {
            out.push_str("while (");
            render_expr(c, 0, out);
            out.push_str(") ");
            render_block(body, level, out);
        }
        Stmt::For(init, cond, step, body) => {
            out.push_str("for (");
            if let Some(i) = init {
                render_simple(i, out);
            }
            out.push_str("; ");
            if let Some(c) = cond {
                render_expr(c, 0, out);
            }
            out.push_str("; ");
            if let Some(st) = step {
                render_simple(st, out);
            }
            out.push_str(") ");
            render_block(body, level, out);
        }
        Stmt::Fn(name, params, body) => {
            out.push_str("fn ");
            out.push_str(name);
            out.push('(');
            out.push_str(&params.join(", "));
            out.push_str(") ");
            render_block(body, level, out);
        }
        Stmt::Return(v) => {
            out.push_str("return");
            if let Some(v) = v {
                out.push(' ');
                render_expr(v, 0, out);
            }
            out.push(';');
        }
        Stmt::Print(args) => {
            out.push_str("print(");
            render_list(args, out);
            out.push_str(");");
        }
        Stmt::Break => out.push_str("break;"),
        Stmt::Continue => out.push_str("continue;"),
        Stmt::Block(b) => render_block(b, level, out),
    }
}

fn render_list(items: &[Expr], out: &mut String) {
    for (i, e) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render_expr(e, 0, out);
    }
}

/// `min_prec` is the binding strength required by the parent context.
fn render_expr(e: &Expr, min_prec: u8, out: &mut String) {
    match e {
        Expr::Number(n) => out.push_str(n),
        Expr::Str(s) => {
            out.push('"');
            out.push_str(s);
            out.push('"');
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Null => out.push_str("null"),
        Expr::Ident(n) => out.push_str(n),
        Expr::Array(items) => {
            out.push('[');
            render_list(items, out);
            out.push(']');
        }
        Expr::Index(base, idx) => {
            render_expr(base, 8, out);
            out.push('[');
            render_expr(idx, 0, out);
            out.push(']');
        }
        Expr::Call(name, args) => {
            out.push_str(name);
            out.push('(');
            render_list(args, out);
            out.push(')');
        }
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Not => '!',
                UnOp::Neg => '-',
            });
            render_expr(inner, 7, out);
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let wrap = p < min_prec;
            if wrap {
                out.push('(');
            }
            render_expr(l, p, out);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            render_expr(r, p + 1, out);
            if wrap {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!(parse(b"let x = 1; if (x) { x = x + 1; }").is_ok());
        assert!(parse(b"let x = ;").is_err());
        assert!(parse(b"}").is_err());
        assert!(parse(b"").is_ok());
    }

    #[test]
    fn statements_parse() {
        let src = br#"
            // comment
            fn add(a, b) { return a + b; }
            let xs = [1, 2.5, "s\"q", true, null];
            for (let i = 0; i < 3; i = i + 1) { xs[i] = -xs[i] * (2 + i) % 7; if (i == 2) { break; } else { continue; } }
            while (!done && count >= 0 || x != y) { print(add(1, 2), xs[0]); }
            if (a) { } else if (b) { } else { return; }
            { let z = add(1, add(2, 3)); }
        "#;
        let prog = parse(src).unwrap();
        assert_eq!(prog.len(), 6);
        let again = parse(&render(&prog)).unwrap();
        assert_eq!(again, prog);
    }

    #[test]
    fn precedence_survives_render() {
        let prog = parse(b"x = (a + b) * c - (d - e);").unwrap();
        let text = String::from_utf8(render(&prog)).unwrap();
        assert_eq!(text, "x = (a + b) * c - (d - e);\n");
    }

    #[test]
    fn rejects() {
        for bad in ["let = 1;", "if x { }", "while (1) x = 1;", "1 = 2;", "let let = 1;", "print(1", "x = \"abc", "a @ b;", "{"] {
            assert!(parse(bad.as_bytes()).is_err(), "{bad}");
        }
    }

    #[test]
    fn depth_limit() {
        let deep = "(".repeat(MAX_DEPTH + 2) + "1" + &")".repeat(MAX_DEPTH + 2) + ";";
        assert!(parse(deep.as_bytes()).is_err());
    }
}
