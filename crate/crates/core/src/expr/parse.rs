//! Recursive-descent parser for the expression grammar.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' exponent)?
//! atom   := number | 'x' | 'alt' | param | func '(' expr ')'
//!         | ('d' digits)? field '[' (order? ';')? int (',' int)* ']'
//!         | '(' expr ')'
//! ```

use super::{Expr, FieldVar, Shift, Signature};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
    End,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let c: Vec<(usize, char)> = src.chars().enumerate().map(|(i, c)| (i + 1, c)).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < c.len() {
        let (col, ch) = c[i];
        if ch.is_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < c.len() && (c[i].1.is_ascii_digit() || c[i].1 == '.') {
                i += 1;
            }
            if i < c.len() && (c[i].1 == 'e' || c[i].1 == 'E') {
                let mut k = i + 1;
                if k < c.len() && (c[k].1 == '+' || c[k].1 == '-') {
                    k += 1;
                }
                if k < c.len() && c[k].1.is_ascii_digit() {
                    i = k;
                    while i < c.len() && c[i].1.is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = c[start..i].iter().map(|p| p.1).collect();
            let v = text.parse::<f64>().map_err(|_| Error::Syntax { pos: col, msg: format!("bad number `{text}`") })?;
            out.push((col, Tok::Num(v)));
        } else if ch.is_alphabetic() || ch == '_' {
            let start = i;
            while i < c.len() && (c[i].1.is_alphanumeric() || c[i].1 == '_') {
                i += 1;
            }
            out.push((col, Tok::Ident(c[start..i].iter().map(|p| p.1).collect())));
        } else if "+-*/^()[],;".contains(ch) {
            out.push((col, Tok::Sym(ch)));
            i += 1;
        } else {
            return Err(Error::Syntax { pos: col, msg: format!("unexpected character `{ch}`") });
        }
    }
    out.push((c.last().map_or(1, |p| p.0 + 1), Tok::End));
    Ok(out)
}

struct Parser<'s> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    sig: &'s Signature,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn pos(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn fail<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), msg: msg.into() })
    }

    fn expect(&mut self, ch: char) -> Result<()> {
        if *self.peek() == Tok::Sym(ch) {
            self.bump();
            Ok(())
        } else {
            self.fail(format!("expected `{ch}`"))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Sym('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Sym('-') => {
                    self.bump();
                    terms.push(self.term()?.neg());
                }
                _ => return Ok(Expr::sum(terms)),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Sym('*') => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Sym('/') => {
                    self.bump();
                    acc = acc.quot(&self.unary()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if *self.peek() == Tok::Sym('-') {
            self.bump();
            return Ok(self.unary()?.neg());
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if *self.peek() != Tok::Sym('^') {
            return Ok(base);
        }
        self.bump();
        let open = *self.peek() == Tok::Sym('(');
        if open {
            self.bump();
        }
        let neg = *self.peek() == Tok::Sym('-');
        if neg {
            self.bump();
        }
        let n = self.integer("integer exponent")?;
        if open {
            self.expect(')')?;
        }
        Ok(base.pow(if neg { -n } else { n }))
    }

    fn integer(&mut self, what: &str) -> Result<i32> {
        match *self.peek() {
            Tok::Num(v) if v.fract() == 0.0 && v.abs() < 1e9 => {
                self.bump();
                Ok(v as i32)
            }
            _ => self.fail(format!("expected {what}")),
        }
    }

    fn signed(&mut self) -> Result<i32> {
        let neg = *self.peek() == Tok::Sym('-');
        if neg {
            self.bump();
        }
        let k = self.integer("integer index")?;
        Ok(if neg { -k } else { k })
    }

    fn field(&mut self, prefix: u8) -> Result<Expr> {
        let pos = self.pos();
        let name = match self.bump() {
            Tok::Ident(s) => s,
            _ => return Err(Error::Syntax { pos, msg: "expected field name".into() }),
        };
        let id = self.sig.field_or_err(&name)?;
        self.expect('[')?;
        let mut order = 0i32;
        let mut ks = Vec::new();
        if *self.peek() == Tok::Sym(';') {
            self.bump();
        } else if *self.peek() != Tok::Sym(']') {
            let first = self.signed()?;
            if *self.peek() == Tok::Sym(';') {
                self.bump();
                if first < 0 {
                    return Err(Error::Syntax { pos, msg: "negative derivative order".into() });
                }
                order = first;
            } else {
                ks.push(first);
            }
        }
        if ks.is_empty() || *self.peek() == Tok::Sym(',') {
            if !ks.is_empty() {
                self.bump();
            }
            ks.push(self.signed()?);
            while *self.peek() == Tok::Sym(',') {
                self.bump();
                ks.push(self.signed()?);
            }
        }
        self.expect(']')?;
        if ks.len() != self.sig.dim() {
            return Err(Error::IndexArity { expected: self.sig.dim(), found: ks.len() });
        }
        let total = order + prefix as i32;
        if total > u8::MAX as i32 {
            return Err(Error::DerivativeCap { cap: self.sig.caps.max_order });
        }
        let v = FieldVar::new(id, total as u8, Shift::from_slice(&ks));
        self.sig.check(&v)?;
        Ok(Expr::var(v))
    }

    fn atom(&mut self) -> Result<Expr> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::num(v))
            }
            Tok::Sym('(') => {
                self.bump();
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if let Some(order) = derivative_prefix(&name) {
                    self.bump();
                    return self.field(order);
                }
                match name.as_str() {
                    "x" => {
                        self.bump();
                        Ok(Expr::x())
                    }
                    "alt" => {
                        self.bump();
                        Ok(Expr::alt())
                    }
                    "ln" | "abs" | "sqrt" => {
                        self.bump();
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(match name.as_str() {
                            "ln" => arg.ln_abs(),
                            "abs" => arg.abs(),
                            _ => arg.sqrt(),
                        })
                    }
                    _ if self.sig.field(&name).is_some() => self.field(0),
                    _ if self.sig.has_param(&name) => {
                        self.bump();
                        Ok(Expr::param(&name))
                    }
                    _ => {
                        if self.toks.get(self.at + 1).map(|t| &t.1) == Some(&Tok::Sym('[')) {
                            Err(Error::UnknownField(name))
                        } else {
                            Err(Error::UnknownName(name))
                        }
                    }
                }
            }
            Tok::End => Err(Error::Syntax { pos, msg: "unexpected end of input".into() }),
            Tok::Sym(c) => Err(Error::Syntax { pos, msg: format!("unexpected `{c}`") }),
        }
    }
}

fn derivative_prefix(name: &str) -> Option<u8> {
    let digits = name.strip_prefix('d')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse::<u8>().ok().filter(|&j| j >= 1)
}

/// Parses `text` against the fields and parameters declared in `sig`.
pub fn parse(text: &str, sig: &Signature) -> Result<Expr> {
    let mut p = Parser { toks: tokenize(text)?, at: 0, sig };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.fail("trailing input");
    }
    Ok(e)
}
