//! Script target. The deep stage is a static analyzer: scope resolution,
//! call checking, control-flow placement and operator/operand typing.

use std::collections::HashMap;

use super::vocab::{SCRIPT_BUILTINS, SCRIPT_IDENTS};
use super::{ParseProbe, vocab_index, Execution, HarnessError, Target, Verdict};
use crate::coverage::EdgeTrace;
use crate::probe::Probe;
use crate::validate::script::{self, BinOp, Else, Expr, Stmt, UnOp};
use crate::validate::Format;

pub(super) const SEEDS: [&str; 2] = [
    "let x = 1; if (x) { x = x + 1; }\n",
    "fn square(n) {\n  return n * n;\n}\nlet total = 0;\nfor (let i = 0; i < 10; i = i + 1) {\n  total = total + square(i);\n}\nprint(total);\n",
];

mod edge {
    pub const ENTRY: u16 = 1000;
    pub const STMT: u16 = 1010;
    pub const BIN_LEFT: u16 = 1110;
    pub const BIN_RIGHT: u16 = 1180;
    pub const UNARY: u16 = 1250;
    pub const BUILTIN: u16 = 1260;
    pub const ARGC: u16 = 1275;
    pub const USER_CALL: u16 = 1281;
    pub const UNDEFINED_FN: u16 = 1282;
    pub const ARITY: u16 = 1283;
    pub const RECURSION: u16 = 1284;
    pub const UNDEFINED_VAR: u16 = 1290;
    pub const SHADOW: u16 = 1291;
    pub const REDECLARE: u16 = 1292;
    pub const ASSIGN_UNDECLARED: u16 = 1293;
    pub const PARAM_USE: u16 = 1294;
    pub const GLOBAL_IN_FN: u16 = 1295;
    pub const BREAK_IN_LOOP: u16 = 1300;
    pub const BREAK_OUTSIDE: u16 = 1301;
    pub const CONTINUE_IN_LOOP: u16 = 1302;
    pub const CONTINUE_OUTSIDE: u16 = 1303;
    pub const RETURN_IN_FN: u16 = 1304;
    pub const RETURN_OUTSIDE: u16 = 1305;
    pub const RETURN_BARE: u16 = 1306;
    pub const NESTED_FN: u16 = 1307;
    pub const PARAMS: u16 = 1310;
    pub const ELSE_CHAIN: u16 = 1320;
    pub const FOR_PARTS: u16 = 1330;
    pub const WHILE_LITERAL: u16 = 1340;
    pub const IF_LITERAL: u16 = 1341;
    pub const EMPTY_BLOCK: u16 = 1342;
    pub const DEAD_CODE: u16 = 1343;
    pub const INDEX_LITERAL: u16 = 1344;
    pub const STRING_CONCAT: u16 = 1345;
    pub const INDEX_ASSIGN: u16 = 1346;
    pub const FN_REDEFINED: u16 = 1347;
    pub const DECL_NAME: u16 = 1350;
    pub const NUMBER: u16 = 1390;
    pub const STRING: u16 = 1395;
    pub const EXPR_DEPTH: u16 = 1400;
}

pub struct ToyScript;

impl Target for ToyScript {
    fn name(&self) -> &str {
        "toy-script"
    }

    fn format_name(&self) -> &str {
        Format::Script.name()
    }

    fn format(&self) -> Option<Format> {
        Some(Format::Script)
    }

    fn execute(&self, input: &[u8]) -> Result<Execution, HarnessError> {
        let mut trace = EdgeTrace::new();
        let verdict = match script::parse_with(input, &mut ParseProbe::new(&mut trace, script::edge::is_error)) {
            Err(_) => Verdict::ParseError,
            Ok(program) => {
                let mut a = Analyzer::new(&mut trace);
                Probe::hit(a.p, edge::ENTRY);
                a.block(&program, false);
                if a.crashed {
                    Verdict::Crash
                } else {
                    Verdict::Accepted
                }
            }
        };
        Ok(Execution::new(verdict, trace))
    }
}

fn stmt_kind(s: &Stmt) -> u16 {
    match s {
        Stmt::Let(..) => 0,
        Stmt::Assign(..) => 1,
        Stmt::If(..) => 2,
        Stmt::While(..) => 3,
        Stmt::For(..) => 4,
        Stmt::Fn(..) => 5,
        Stmt::Return(_) => 6,
        Stmt::Print(_) => 7,
        Stmt::Break => 8,
        Stmt::Continue => 9,
        Stmt::Block(_) => 10,
        Stmt::Expr(_) => 11,
    }
}

fn expr_class(e: &Expr) -> u16 {
    match e {
        Expr::Number(_) => 0,
        Expr::Str(_) => 1,
        Expr::Ident(_) => 2,
        Expr::Call(..) => 3,
        _ => 4,
    }
}

fn is_literal(e: &Expr) -> bool {
    matches!(e, Expr::Number(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Null)
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Number(n) if n.bytes().all(|b| b == b'0' || b == b'.'))
}

#[derive(Default)]
struct Scope {
    vars: Vec<String>,
    params: Vec<String>,
}

struct Analyzer<'a, P: Probe> {
    p: &'a mut P,
    scopes: Vec<Scope>,
    fns: HashMap<String, usize>,
    current_fn: Option<String>,
    loops: usize,
    nesting: usize,
    crashed: bool,
}

impl<'a, P: Probe> Analyzer<'a, P> {
    fn new(p: &'a mut P) -> Self {
        Self {
            p,
            scopes: vec![Scope::default()],
            fns: HashMap::new(),
            current_fn: None,
            loops: 0,
            nesting: 0,
            crashed: false,
        }
    }

    fn block(&mut self, stmts: &[Stmt], scoped: bool) {
        if stmts.is_empty() {
            self.p.hit(edge::EMPTY_BLOCK);
        }
        if scoped {
            self.scopes.push(Scope::default());
        }
        self.nesting += 1;
        let mut terminated = false;
        for s in stmts {
            if terminated {
                self.p.hit(edge::DEAD_CODE);
            }
            self.stmt(s);
            terminated = matches!(s, Stmt::Return(_) | Stmt::Break | Stmt::Continue);
        }
        self.nesting -= 1;
        if scoped {
            self.scopes.pop();
        }
    }

    fn declare(&mut self, name: &str) {
        self.p.hit(edge::DECL_NAME + vocab_index(&SCRIPT_IDENTS, name));
        let top = self.scopes.last().expect("global scope");
        if top.vars.iter().any(|v| v == name) {
            self.p.hit(edge::REDECLARE);
        } else if self.scopes.iter().rev().skip(1).any(|s| s.vars.iter().any(|v| v == name)) {
            self.p.hit(edge::SHADOW);
        }
        self.scopes.last_mut().expect("global scope").vars.push(name.to_string());
    }

    fn resolve(&mut self, name: &str) -> bool {
        for (depth, scope) in self.scopes.iter().enumerate().rev() {
            if scope.params.iter().any(|v| v == name) {
                self.p.hit(edge::PARAM_USE);
                return true;
            }
            if scope.vars.iter().any(|v| v == name) {
                if depth == 0 && self.current_fn.is_some() {
                    self.p.hit(edge::GLOBAL_IN_FN);
                }
                return true;
            }
        }
        false
    }

    fn stmt(&mut self, s: &Stmt) {
        self.p.hit(edge::STMT + stmt_kind(s) * 8 + self.nesting.min(7) as u16);
        match s {
            Stmt::Let(name, e) => {
                self.expr(e, 0);
                self.declare(name);
            }
            Stmt::Assign(target, e) => {
                match target {
                    Expr::Ident(name) => {
                        if !self.resolve(name) {
                            self.p.hit(edge::ASSIGN_UNDECLARED);
                        }
                    }
                    other => {
                        self.p.hit(edge::INDEX_ASSIGN);
                        self.expr(other, 0);
                    }
                }
                self.expr(e, 0);
            }
            Stmt::If(cond, then, els) => {
                if is_literal(cond) {
                    self.p.hit(edge::IF_LITERAL);
                }
                self.expr(cond, 0);
                self.block(then, true);
                let mut chain = 0;
                let mut tail = els.as_ref();
                while let Some(e) = tail {
                    match e {
                        Else::Block(b) => {
                            self.block(b, true);
                            tail = None;
                        }
                        Else::If(inner) => {
                            chain += 1;
                            if let Stmt::If(c, t, e2) = inner.as_ref() {
                                self.expr(c, 0);
                                self.block(t, true);
                                tail = e2.as_ref();
                            } else {
                                self.stmt(inner);
                                tail = None;
                            }
                        }
                    }
                }
                self.p.hit(edge::ELSE_CHAIN + chain.min(5));
            }
            Stmt::While(cond, body) => {
                if is_literal(cond) {
                    self.p.hit(edge::WHILE_LITERAL);
                }
                self.expr(cond, 0);
                self.loop_body(body);
            }
            Stmt::For(init, cond, step, body) => {
                let mask = init.is_some() as u16 | (cond.is_some() as u16) << 1 | (step.is_some() as u16) << 2;
                self.p.hit(edge::FOR_PARTS + mask);
                self.scopes.push(Scope::default());
                if let Some(i) = init {
                    self.stmt(i);
                }
                if let Some(c) = cond {
                    self.expr(c, 0);
                }
                if let Some(st) = step {
                    self.stmt(st);
                }
                self.loop_body(body);
                self.scopes.pop();
            }
            Stmt::Fn(name, params, body) => {
                self.p.hit(edge::DECL_NAME + vocab_index(&SCRIPT_IDENTS, name));
                self.p.hit(edge::PARAMS + params.len().min(5) as u16);
                if self.current_fn.is_some() {
                    self.p.hit(edge::NESTED_FN);
                }
                if self.fns.insert(name.clone(), params.len()).is_some() {
                    self.p.hit(edge::FN_REDEFINED);
                }
                let saved_fn = self.current_fn.replace(name.clone());
                let saved_loops = std::mem::take(&mut self.loops);
                self.scopes.push(Scope {
                    vars: Vec::new(),
                    params: params.clone(),
                });
                self.block(body, false);
                self.scopes.pop();
                self.loops = saved_loops;
                self.current_fn = saved_fn;
            }
            Stmt::Return(e) => {
                self.p.hit(if self.current_fn.is_some() {
                    edge::RETURN_IN_FN
                } else {
                    edge::RETURN_OUTSIDE
                });
                match e {
                    Some(e) => self.expr(e, 0),
                    None => self.p.hit(edge::RETURN_BARE),
                }
            }
            Stmt::Print(args) => {
                self.p.hit(edge::ARGC + args.len().min(5) as u16);
                for a in args {
                    self.expr(a, 0);
                }
            }
            Stmt::Break => self.p.hit(if self.loops > 0 {
                edge::BREAK_IN_LOOP
            } else {
                edge::BREAK_OUTSIDE
            }),
            Stmt::Continue => self.p.hit(if self.loops > 0 {
                edge::CONTINUE_IN_LOOP
            } else {
                edge::CONTINUE_OUTSIDE
            }),
            Stmt::Block(b) => self.block(b, true),
            Stmt::Expr(e) => self.expr(e, 0),
        }
    }

    fn loop_body(&mut self, body: &[Stmt]) {
        self.loops += 1;
        self.block(body, true);
        self.loops -= 1;
    }

    fn expr(&mut self, e: &Expr, depth: usize) {
        self.p.hit(edge::EXPR_DEPTH + depth.min(10) as u16);
        match e {
            Expr::Number(n) => {
                let class = if n.contains('.') {
                    3
                } else if n.len() > 6 {
                    2
                } else if is_zero(e) {
                    0
                } else {
                    1
                };
                self.p.hit(edge::NUMBER + class);
            }
            Expr::Str(s) => {
                let class = if s.is_empty() {
                    0
                } else if s.contains('\\') {
                    1
                } else {
                    2
                };
                self.p.hit(edge::STRING + class);
            }
            Expr::Bool(_) | Expr::Null => {}
            Expr::Ident(name) => {
                if !self.resolve(name) && !self.fns.contains_key(name) {
                    self.p.hit(edge::UNDEFINED_VAR);
                }
            }
            Expr::Array(items) => {
                for i in items {
                    self.expr(i, depth + 1);
                }
            }
            Expr::Index(base, idx) => {
                if matches!(base.as_ref(), Expr::Array(_)) {
                    self.p.hit(edge::INDEX_LITERAL);
                }
                self.expr(base, depth + 1);
                self.expr(idx, depth + 1);
            }
            Expr::Call(name, args) => {
                let builtin = vocab_index(&SCRIPT_BUILTINS, name);
                self.p.hit(edge::BUILTIN + builtin);
                self.p.hit(edge::ARGC + args.len().min(5) as u16);
                if (builtin as usize) == SCRIPT_BUILTINS.len() {
                    match self.fns.get(name) {
                        Some(&arity) => {
                            self.p.hit(edge::USER_CALL);
                            if arity != args.len() {
                                self.p.hit(edge::ARITY);
                            }
                            if self.current_fn.as_deref() == Some(name.as_str()) {
                                self.p.hit(edge::RECURSION);
                            }
                        }
                        None => self.p.hit(edge::UNDEFINED_FN),
                    }
                }
                for a in args {
                    self.expr(a, depth + 1);
                }
            }
            Expr::Unary(op, inner) => {
                let op = match op {
                    UnOp::Not => 0,
                    UnOp::Neg => 1,
                };
                self.p.hit(edge::UNARY + op * 5 + expr_class(inner));
                self.expr(inner, depth + 1);
            }
            Expr::Binary(op, l, r) => {
                let idx = BinOp::ALL.iter().position(|o| o == op).expect("listed operator") as u16;
                self.p.hit(edge::BIN_LEFT + idx * 5 + expr_class(l));
                self.p.hit(edge::BIN_RIGHT + idx * 5 + expr_class(r));
                if *op == BinOp::Add && (matches!(l.as_ref(), Expr::Str(_)) || matches!(r.as_ref(), Expr::Str(_))) {
                    self.p.hit(edge::STRING_CONCAT);
                }
                if matches!(op, BinOp::Div | BinOp::Rem) && is_zero(r) {
                    // Constant folding divides without a guard.
                    self.crashed = true;
                }
                self.expr(l, depth + 1);
                self.expr(r, depth + 1);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coverage::EdgeId;

    fn run(src: &str) -> Execution {
        ToyScript.execute(src.as_bytes()).unwrap()
    }

    fn has(src: &str, e: u16) -> bool {
        run(src).trace.edges().any(|x| x == EdgeId(e))
    }

    #[test]
    fn scope_and_flow_branches() {
        assert!(has("print(y);", edge::UNDEFINED_VAR));
        assert!(!has("let y = 1; print(y);", edge::UNDEFINED_VAR));
        assert!(has("let x = 1; { let x = 2; }", edge::SHADOW));
        assert!(has("let x = 1; let x = 2;", edge::REDECLARE));
        assert!(has("break;", edge::BREAK_OUTSIDE));
        assert!(has("while (true) { break; }", edge::BREAK_IN_LOOP));
        assert!(has("fn f(a) { return f(a); }", edge::RECURSION));
        assert!(has("fn f(a) { return a; } f(1, 2);", edge::ARITY));
        assert!(has("g();", edge::UNDEFINED_FN));
        assert!(has("fn f() { return; print(1); }", edge::DEAD_CODE));
    }

    #[test]
    fn deep_stage_has_many_branches() {
        let consts = [
            edge::USER_CALL, edge::UNDEFINED_FN, edge::ARITY, edge::RECURSION, edge::UNDEFINED_VAR,
            edge::SHADOW, edge::REDECLARE, edge::ASSIGN_UNDECLARED, edge::PARAM_USE, edge::GLOBAL_IN_FN,
            edge::BREAK_IN_LOOP, edge::BREAK_OUTSIDE, edge::CONTINUE_IN_LOOP, edge::CONTINUE_OUTSIDE,
            edge::RETURN_IN_FN, edge::RETURN_OUTSIDE, edge::RETURN_BARE, edge::NESTED_FN,
            edge::WHILE_LITERAL, edge::IF_LITERAL, edge::EMPTY_BLOCK, edge::DEAD_CODE,
            edge::INDEX_LITERAL, edge::STRING_CONCAT, edge::INDEX_ASSIGN, edge::FN_REDEFINED,
        ];
        // Plus the parameterized families (statement kinds, operators, calls, classes).
        assert!(consts.len() + 12 * 8 + 13 * 10 >= 40);
    }

    #[test]
    fn literal_division_by_zero_crashes() {
        assert_eq!(run("let x = 4 / 0;").verdict, Verdict::Crash);
        assert_eq!(run("let x = 4 % 0.0;").verdict, Verdict::Crash);
        assert_eq!(run("let x = 4 / 2;").verdict, Verdict::Accepted);
    }
}
