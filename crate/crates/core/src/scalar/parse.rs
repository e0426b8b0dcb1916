//! Recursive-descent parser for the closed-form expression grammar.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | power
//! power   := atom ('^' unary)?
//! atom    := number | constant | variable | call | '(' expr ')'
//! call    := name '(' expr (',' expr)* ')'
//! ```
//!
//! Constants are `pi`, `e` and `inf` unless shadowed by a k-set variable.
//! Calls are the elementary functions of [`Func`] plus three special forms:
//! `tanroot(arg, seed)`, `diff(expr, var)` and `restrict(expr, var, lo, hi)`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::expr::{Func, Node};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v: f64 = text.parse().map_err(|_| Error::Parse {
                pos: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((start, Tok::Num(v)));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((start, Tok::Ident(chars[start..i].iter().collect())));
            continue;
        }
        let tok = match c {
            '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            ',' => Tok::Comma,
            _ => {
                return Err(Error::Parse {
                    pos: start,
                    msg: format!("unexpected character `{c}`"),
                })
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((chars.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    at: usize,
    names: &'a [String],
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

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expr(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    lhs = Node::add(lhs, self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    lhs = Node::sub(lhs, self.term()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Arc<Node>> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    lhs = Node::mul(lhs, self.unary()?);
                }
                Tok::Op('/') => {
                    self.bump();
                    lhs = Node::div(lhs, self.unary()?);
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Arc<Node>> {
        match self.peek() {
            Tok::Op('-') => {
                self.bump();
                Ok(Node::neg(self.unary()?))
            }
            Tok::Op('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Arc<Node>> {
        let base = self.atom()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::pow(base, exp));
        }
        Ok(base)
    }

    fn var_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn constant_arg(&mut self, what: &str) -> Result<f64> {
        let pos = self.pos();
        let node = self.expr()?;
        node.as_const().ok_or(Error::Parse {
            pos,
            msg: format!("{what} must be a constant expression"),
        })
    }

    fn variable_arg(&mut self) -> Result<usize> {
        let pos = self.pos();
        match self.bump() {
            Tok::Ident(name) => self.var_index(&name).ok_or(Error::Parse {
                pos,
                msg: format!("unknown variable `{name}`"),
            }),
            _ => Err(Error::Parse {
                pos,
                msg: "expected a variable name".into(),
            }),
        }
    }

    fn atom(&mut self) -> Result<Arc<Node>> {
        let pos = self.pos();
        match self.bump() {
            Tok::Num(v) => Ok(Arc::new(Node::Const(v))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let node = self.call(&name, pos)?;
                    self.expect(Tok::RParen, "`)` closing the argument list")?;
                    return Ok(node);
                }
                if let Some(i) = self.var_index(&name) {
                    return Ok(Arc::new(Node::Var(i)));
                }
                match name.as_str() {
                    "pi" => Ok(Arc::new(Node::Const(std::f64::consts::PI))),
                    "e" => Ok(Arc::new(Node::Const(std::f64::consts::E))),
                    "inf" => Ok(Arc::new(Node::Const(f64::INFINITY))),
                    _ => Err(Error::Parse {
                        pos,
                        msg: format!("unknown variable `{name}`"),
                    }),
                }
            }
            Tok::End => Err(Error::Parse {
                pos,
                msg: "unexpected end of expression".into(),
            }),
            t => Err(Error::Parse {
                pos,
                msg: format!("unexpected token {t:?}"),
            }),
        }
    }

    fn call(&mut self, name: &str, pos: usize) -> Result<Arc<Node>> {
        match name {
            "tanroot" => {
                let arg = self.expr()?;
                self.expect(Tok::Comma, "`,` before the seed")?;
                let seed = self.constant_arg("tanroot seed")?;
                Ok(Arc::new(Node::TanRoot { arg, seed }))
            }
            "diff" => {
                let inner = self.expr()?;
                self.expect(Tok::Comma, "`,` before the variable")?;
                let var = self.variable_arg()?;
                Ok(Node::partial(inner, var))
            }
            "restrict" => {
                let inner = self.expr()?;
                self.expect(Tok::Comma, "`,` before the variable")?;
                let var = self.variable_arg()?;
                self.expect(Tok::Comma, "`,` before the lower bound")?;
                let lo = self.constant_arg("lower bound")?;
                self.expect(Tok::Comma, "`,` before the upper bound")?;
                let hi = self.constant_arg("upper bound")?;
                if !(lo < hi) {
                    return Err(Error::Parse {
                        pos,
                        msg: format!("empty range ({lo}, {hi})"),
                    });
                }
                Ok(Arc::new(Node::Restrict { inner, var, lo, hi }))
            }
            _ => {
                let f = Func::from_name(name).ok_or(Error::Parse {
                    pos,
                    msg: format!("unknown function `{name}`"),
                })?;
                let arg = self.expr()?;
                Ok(Node::call(f, arg))
            }
        }
    }
}

pub(crate) fn parse(src: &str, names: &[String]) -> Result<Arc<Node>> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, names };
    let node = p.expr()?;
    if *p.peek() != Tok::End {
        return p.err("trailing input");
    }
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn precedence_and_associativity() {
        let n = names(&["x"]);
        let node = parse("-x^2 + 2*x/4 - 1", &n).unwrap();
        let v = node.eval(&[3.0], 0).unwrap().value();
        assert_eq!(v, -9.0 + 1.5 - 1.0);
        let node = parse("2^3^2", &n).unwrap();
        assert_eq!(node.as_const(), Some(512.0));
    }

    #[test]
    fn errors_are_positional() {
        let n = names(&["tau"]);
        match parse("tau + q", &n) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 6),
            other => panic!("{other:?}"),
        }
        match parse("exp(tau", &n) {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("foo(tau)", &n), Err(Error::Parse { pos: 0, .. })));
        assert!(parse("tau $ 2", &n).is_err());
    }

    #[test]
    fn scientific_literals_and_constants() {
        let n = names(&["x"]);
        assert_eq!(parse("1.5e-3", &n).unwrap().as_const(), Some(1.5e-3));
        assert_eq!(parse("pi", &n).unwrap().as_const(), Some(std::f64::consts::PI));
        // `e` followed by digits is not swallowed by a preceding identifier
        assert_eq!(parse("e^0", &n).unwrap().as_const(), Some(1.0));
    }
}
