//! Hand-written lexer and recursive-descent parser for the loop DSL.
//! The grammar is given in `docs/grammar.ebnf`.

use std::collections::HashSet;

use thiserror::Error;

use super::ast::{Decl, LValue, Pos, Program, Role, Stmt, Type};
use crate::expr::{name, BinOp, Expr, Name, UnOp};
use crate::value::Int;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {msg}")]
    Syntax { pos: Pos, msg: String },
    #[error("{pos}: use of undeclared variable `{name}`")]
    Undeclared { pos: Pos, name: String },
    #[error("{pos}: write to input variable `{name}`")]
    WriteToInput { pos: Pos, name: String },
    #[error("{pos}: loop index `{name}` assigned inside its loop")]
    WriteToIndex { pos: Pos, name: String },
    #[error("{pos}: variable `{name}` declared twice")]
    Redeclared { pos: Pos, name: String },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(Int),
    Sym(&'static str),
    Eof,
}

const SYMS: [&str; 30] = [
    ":=", "..", "<=", ">=", "==", "!=", "&&", "||", ":", ";", "=", "(", ")", "{", "}", "[", "]", ",", "<", ">", "+",
    "-", "*", "/", "!", "?", "%", "&", "|", ".",
];

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let s: String = chars[start..i].iter().collect();
            let b: num_bigint::BigInt = s.parse().expect("digits");
            let v = match i64::try_from(&b) {
                Ok(v) => Int::Small(v),
                Err(_) => Int::Big(b),
            };
            col += i - start;
            out.push((Tok::Num(v), pos));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            col += i - start;
            out.push((Tok::Ident(chars[start..i].iter().collect()), pos));
            continue;
        }
        let rest: String = chars[i..(i + 2).min(chars.len())].iter().collect();
        let sym = SYMS.iter().find(|s| rest.starts_with(**s));
        match sym {
            Some(s) if !matches!(*s, "%" | "&" | "|" | ".") => {
                i += s.len();
                col += s.len();
                out.push((Tok::Sym(s), pos));
            }
            _ => return Err(ParseError::Syntax { pos, msg: format!("unexpected character `{c}`") }),
        }
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    decls: Vec<Decl>,
    indices: Vec<Name>,
}

const KEYWORDS: [&str; 14] =
    ["input", "state", "for", "in", "if", "else", "true", "false", "inf", "len", "min", "max", "int", "bool"];

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn is_kw(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == s)
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_sym(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn expect_kw(&mut self, s: &str) -> Result<(), ParseError> {
        if self.is_kw(s) {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected `{s}`, found {}", describe(self.peek())))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) && s != "seq" => {
                self.bump();
                Ok(s)
            }
            t => self.err(format!("expected identifier, found {}", describe(&t))),
        }
    }

    fn ty(&mut self) -> Result<Type, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "int" => {
                self.bump();
                Ok(Type::Int)
            }
            Tok::Ident(s) if s == "bool" => {
                self.bump();
                Ok(Type::Bool)
            }
            Tok::Ident(s) if s == "seq" => {
                self.bump();
                self.expect_sym("<")?;
                let t = self.ty()?;
                self.expect_sym(">")?;
                Ok(Type::Seq(Box::new(t)))
            }
            t => self.err(format!("expected a type, found {}", describe(&t))),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        while self.is_kw("input") || self.is_kw("state") {
            let pos = self.pos();
            let role = if self.is_kw("input") { Role::Input } else { Role::State };
            self.bump();
            let n = self.ident()?;
            self.expect_sym(":")?;
            let ty = self.ty()?;
            let init = if role == Role::State {
                self.expect_sym("=")?;
                Some(self.expr()?)
            } else {
                None
            };
            self.expect_sym(";")?;
            if self.decls.iter().any(|d| *d.name == *n) {
                return Err(ParseError::Redeclared { pos, name: n });
            }
            self.decls.push(Decl { name: name(&n), ty, role, init });
        }
        let body = self.stmts()?;
        if *self.peek() != Tok::Eof {
            return self.err(format!("unexpected {}", describe(self.peek())));
        }
        Ok(Program { decls: std::mem::take(&mut self.decls), body })
    }

    fn stmts(&mut self) -> Result<Vec<Stmt>, ParseError> {
        let mut out = Vec::new();
        while !self.is_sym("}") && *self.peek() != Tok::Eof {
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect_sym("{")?;
        let s = self.stmts()?;
        self.expect_sym("}")?;
        Ok(s)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let pos = self.pos();
        if self.is_kw("if") {
            self.bump();
            self.expect_sym("(")?;
            let cond = self.expr()?;
            self.expect_sym(")")?;
            let then_branch = self.block()?;
            let else_branch = if self.is_kw("else") {
                self.bump();
                if self.is_kw("if") {
                    vec![self.stmt()?]
                } else {
                    self.block()?
                }
            } else {
                vec![]
            };
            return Ok(Stmt::If { cond, then_branch, else_branch, pos });
        }
        if self.is_kw("for") {
            self.bump();
            let idx = self.ident()?;
            if self.decls.iter().any(|d| *d.name == *idx) || self.indices.iter().any(|i| **i == *idx) {
                return Err(ParseError::Redeclared { pos, name: idx });
            }
            self.expect_kw("in")?;
            let lo = self.expr()?;
            self.expect_sym("..")?;
            let hi = self.expr()?;
            self.indices.push(name(&idx));
            let body = self.block()?;
            self.indices.pop();
            return Ok(Stmt::For { index: name(&idx), lo, hi, body, pos });
        }
        let n = self.ident()?;
        let mut indices = Vec::new();
        while self.is_sym("[") {
            self.bump();
            indices.push(self.expr()?);
            self.expect_sym("]")?;
        }
        self.expect_sym(":=")?;
        let rhs = self.expr()?;
        self.expect_sym(";")?;
        if self.indices.iter().any(|i| **i == *n) {
            return Err(ParseError::WriteToIndex { pos, name: n });
        }
        match self.decls.iter().find(|d| *d.name == *n) {
            None => return Err(ParseError::Undeclared { pos, name: n }),
            Some(d) if d.role == Role::Input => return Err(ParseError::WriteToInput { pos, name: n }),
            _ => {}
        }
        Ok(Stmt::Assign { target: LValue { name: name(&n), indices }, rhs, pos })
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let c = self.binary(0)?;
        if self.is_sym("?") {
            self.bump();
            let t = self.binary(0)?;
            self.expect_sym(":")?;
            let e = self.expr()?;
            return Ok(Expr::ite(c, t, e));
        }
        Ok(c)
    }

    fn binop_here(&self) -> Option<(BinOp, u8)> {
        let Tok::Sym(s) = self.peek() else { return None };
        Some(match *s {
            "||" => (BinOp::Or, 1),
            "&&" => (BinOp::And, 2),
            "<" => (BinOp::Lt, 3),
            "<=" => (BinOp::Le, 3),
            ">" => (BinOp::Gt, 3),
            ">=" => (BinOp::Ge, 3),
            "==" => (BinOp::Eq, 3),
            "!=" => (BinOp::Ne, 3),
            "+" => (BinOp::Add, 4),
            "-" => (BinOp::Sub, 4),
            "*" => (BinOp::Mul, 5),
            "/" => (BinOp::Div, 5),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((op, p)) = self.binop_here() {
            if p < min_prec {
                break;
            }
            self.bump();
            // comparisons do not chain
            let rhs = self.binary(p + 1)?;
            lhs = Expr::bin(op, lhs, rhs);
            if op.is_cmp() && matches!(self.binop_here(), Some((o, _)) if o.is_cmp()) {
                return self.err("comparison operators do not chain");
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.is_sym("-") {
            self.bump();
            if self.is_kw("inf") {
                self.bump();
                return Ok(Expr::NegInf);
            }
            let e = self.unary()?;
            return Ok(match e {
                Expr::Int(i) => Expr::Int(i.neg()),
                e => Expr::un(UnOp::Neg, e),
            });
        }
        if self.is_sym("!") {
            self.bump();
            return Ok(Expr::un(UnOp::Not, self.unary()?));
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.atom()?;
        while self.is_sym("[") {
            self.bump();
            let i = self.expr()?;
            self.expect_sym("]")?;
            e = Expr::index(e, i);
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Int(v))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.expr()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            Tok::Sym("[") => {
                self.bump();
                let v = self.expr()?;
                self.expect_sym(";")?;
                let n = self.expr()?;
                self.expect_sym("]")?;
                Ok(Expr::Fill(Box::new(v), Box::new(n)))
            }
            Tok::Ident(s) => {
                self.bump();
                match s.as_str() {
                    "true" => Ok(Expr::Bool(true)),
                    "false" => Ok(Expr::Bool(false)),
                    "inf" => Ok(Expr::PosInf),
                    "min" | "max" => {
                        let op = if s == "min" { BinOp::Min } else { BinOp::Max };
                        self.expect_sym("(")?;
                        let a = self.expr()?;
                        self.expect_sym(",")?;
                        let b = self.expr()?;
                        self.expect_sym(")")?;
                        Ok(Expr::bin(op, a, b))
                    }
                    "len" => {
                        self.expect_sym("(")?;
                        let a = self.expr()?;
                        self.expect_sym(")")?;
                        Ok(Expr::Len(Box::new(a)))
                    }
                    _ if KEYWORDS.contains(&s.as_str()) || s == "seq" => {
                        Err(ParseError::Syntax { pos, msg: format!("unexpected keyword `{s}`") })
                    }
                    _ => {
                        let declared =
                            self.decls.iter().any(|d| *d.name == *s) || self.indices.iter().any(|i| **i == *s);
                        if !declared {
                            return Err(ParseError::Undeclared { pos, name: s });
                        }
                        Ok(Expr::Var(name(&s)))
                    }
                }
            }
            t => self.err(format!("unexpected {}", describe(&t))),
        }
    }
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Num(n) => format!("`{n}`"),
        Tok::Sym(s) => format!("`{s}`"),
        Tok::Eof => "end of input".into(),
    }
}

/// Parse a complete program.
pub fn parse(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0, decls: vec![], indices: vec![] };
    p.program()
}

/// Parse a standalone expression over the given free variables.
pub fn parse_expr(src: &str, vars: &HashSet<String>) -> Result<Expr, ParseError> {
    let decls = vars.iter().map(|v| Decl { name: name(v), ty: Type::Int, role: Role::State, init: None }).collect();
    let mut p = Parser { toks: lex(src)?, at: 0, decls, indices: vec![] };
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(e)
}

/// Parse a statement list over the given free variables (all writable).
pub fn parse_block(src: &str, vars: &HashSet<String>) -> Result<Vec<Stmt>, ParseError> {
    let decls = vars.iter().map(|v| Decl { name: name(v), ty: Type::Int, role: Role::State, init: None }).collect();
    let mut p = Parser { toks: lex(src)?, at: 0, decls, indices: vec![] };
    let body = p.stmts()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(body)
}

pub fn parse_type(src: &str) -> Result<Type, ParseError> {
    let mut p = Parser { toks: lex(src)?, at: 0, decls: vec![], indices: vec![] };
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("unexpected {}", describe(p.peek())));
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reports_line_and_column() {
        let e = parse("input n: int;\nstate s: int = 0;\nfor i in 0..n { s := s + ; }").unwrap_err();
        match e {
            ParseError::Syntax { pos, .. } => assert_eq!((pos.line, pos.col), (3, 26)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn undeclared_and_input_writes() {
        let e = parse("state s: int = 0; s := t;").unwrap_err();
        assert!(matches!(e, ParseError::Undeclared { ref name, .. } if name == "t"));
        let e = parse("input a: seq<int>; a[0] := 1;").unwrap_err();
        assert!(matches!(e, ParseError::WriteToInput { .. }));
        let e = parse("input n: int; state s: int = 0; for i in 0..n { i := 1; }").unwrap_err();
        assert!(matches!(e, ParseError::WriteToIndex { .. }));
    }

    #[test]
    fn expression_round_trip() {
        let vars: HashSet<String> = ["a", "b", "c", "x"].iter().map(|s| s.to_string()).collect();
        for src in [
            "a + b * c",
            "(a + b) * c",
            "a - (b - c)",
            "max(a, b + -1) <= c",
            "a < b ? a : b",
            "!(a > b) && x == 1 || c != -inf",
            "x[a + 1][b]",
            "[0; c]",
        ] {
            let e = parse_expr(src, &vars).unwrap();
            let again = parse_expr(&e.to_string(), &vars).unwrap();
            assert_eq!(e, again, "{src} printed as {e}");
        }
    }
}
