//! Recursive-descent parser for the textual formula syntax.
//!
//! ```text
//! phi    := atom '@' var | '!' phi | '(' phi '&' phi ')' | '(' phi '|' phi ')'
//!         | '(' phi '->' phi ')' | 'X' phi | '(' phi 'U<=' nat phi ')'
//!         | 'F<=' nat phi | 'G<=' nat phi | 'true' | prob
//! prob   := 'P' '{' interval (',' interval)* '}' '(' prarg (',' prarg)* ')'
//! prarg  := 'Pr' '[' var (',' var)* ']' '(' phi ')'
//! ```
//!
//! Two conveniences beyond the grammar: `(phi)` groups a single formula and
//! `(a & b & c)` / `(a | b | c)` chain one operator.

use super::{FormulaBuilder, HyperFormula, LogicError, NodeId};
use crate::stats::{BoxRegion, Interval};

pub fn parse_formula(text: &str) -> Result<HyperFormula, LogicError> {
    let mut p = Parser {
        src: text,
        pos: 0,
        b: FormulaBuilder::new(),
    };
    let root = p.phi()?;
    p.ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(p.b.finish(root))
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    b: FormulaBuilder,
}

fn is_ident(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn err(&self, message: impl Into<String>) -> LogicError {
        LogicError::Syntax {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn ws(&mut self) {
        let r = self.rest();
        self.pos += r.len() - r.trim_start().len();
    }

    fn peek(&mut self) -> Option<char> {
        self.ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.ws();
        if self.rest().starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<(), LogicError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{tok}'")))
        }
    }

    fn ident(&mut self) -> Result<&'a str, LogicError> {
        self.ws();
        let r = self.rest();
        let n = r.find(|c: char| !is_ident(c)).unwrap_or(r.len());
        if n == 0 {
            return Err(self.err("expected an identifier"));
        }
        self.pos += n;
        Ok(&r[..n])
    }

    fn nat(&mut self) -> Result<u32, LogicError> {
        self.ws();
        let start = self.pos;
        let r = self.rest();
        let n = r.find(|c: char| !is_ident(c)).unwrap_or(r.len());
        let word = &r[..n];
        if word.is_empty() || !word.bytes().all(|c| c.is_ascii_digit()) {
            return Err(LogicError::NonFiniteBound { pos: start });
        }
        self.pos += n;
        word.parse()
            .map_err(|_| LogicError::NonFiniteBound { pos: start })
    }

    fn decimal(&mut self) -> Result<f64, LogicError> {
        self.ws();
        let r = self.rest();
        let n = r
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')))
            .unwrap_or(r.len());
        let v: f64 = r[..n]
            .parse()
            .map_err(|_| self.err("expected a decimal number"))?;
        if !v.is_finite() {
            return Err(self.err("expected a finite decimal number"));
        }
        self.pos += n;
        Ok(v)
    }

    fn phi(&mut self) -> Result<NodeId, LogicError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some('!') => {
                self.pos += 1;
                let c = self.phi()?;
                Ok(self.b.not(c))
            }
            Some('(') => {
                self.pos += 1;
                self.group()
            }
            Some(c) if is_ident(c) => self.word(),
            Some(c) => Err(self.err(format!("unexpected character '{c}'"))),
        }
    }

    fn group(&mut self) -> Result<NodeId, LogicError> {
        let first = self.phi()?;
        if self.eat(")") {
            return Ok(first);
        }
        if self.eat("->") {
            let r = self.phi()?;
            self.expect(")")?;
            return Ok(self.b.implies(first, r));
        }
        if self.eat("U<=") {
            let k = self.nat()?;
            let r = self.phi()?;
            self.expect(")")?;
            return Ok(self.b.until(first, r, k));
        }
        for op in ["&", "|"] {
            if self.eat(op) {
                let mut items = vec![first, self.phi()?];
                while self.eat(op) {
                    items.push(self.phi()?);
                }
                self.expect(")")?;
                let node = if op == "&" {
                    items.into_iter().reduce(|l, r| self.b.and(l, r))
                } else {
                    items.into_iter().reduce(|l, r| self.b.or(l, r))
                };
                return Ok(node.expect("at least two operands"));
            }
        }
        Err(self.err("expected ')', '&', '|', '->' or 'U<='"))
    }

    fn word(&mut self) -> Result<NodeId, LogicError> {
        let start = self.pos;
        let w = self.ident()?;
        match w {
            "true" => Ok(self.b.tt()),
            "X" => {
                let c = self.phi()?;
                Ok(self.b.next(c))
            }
            "F" | "G" => {
                self.expect("<=")?;
                let k = self.nat()?;
                let c = self.phi()?;
                Ok(if w == "F" {
                    self.b.eventually(k, c)
                } else {
                    self.b.globally(k, c)
                })
            }
            "P" => self.prob(),
            "U" | "Pr" => {
                self.pos = start;
                Err(self.err(format!("'{w}' is reserved")))
            }
            atom => {
                self.expect("@")?;
                let var = self.ident()?;
                self.b.atom(atom, var)
            }
        }
    }

    fn prob(&mut self) -> Result<NodeId, LogicError> {
        self.expect("{")?;
        let mut intervals = Vec::new();
        loop {
            self.expect("[")?;
            let lo = self.decimal()?;
            self.expect(",")?;
            let hi = self.decimal()?;
            self.expect("]")?;
            intervals.push(Interval::new(lo, hi)?);
            if !self.eat(",") {
                break;
            }
        }
        self.expect("}")?;
        self.expect("(")?;
        let mut args = Vec::new();
        loop {
            self.expect("Pr")?;
            self.expect("[")?;
            let mut vars = vec![self.ident()?];
            while self.eat(",") {
                vars.push(self.ident()?);
            }
            self.expect("]")?;
            self.expect("(")?;
            let body = self.phi()?;
            self.expect(")")?;
            args.push((vars, body));
            if !self.eat(",") {
                break;
            }
        }
        self.expect(")")?;
        let region = BoxRegion::new(intervals)?;
        self.b.prob(region, args)
    }
}
