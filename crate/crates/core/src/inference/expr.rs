//! Arithmetic for `eval/2`: either an expression string over numbers with
//! `+ - * / ( )`, or a term built from `add/2 sub/2 mul/2 div/2 neg/1
//! min/2 max/2 abs/1` with numbers and bound variables at the leaves.

use thiserror::Error;

use crate::kb::Term;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExprError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("syntax error at offset {0}: {1}")]
    Syntax(usize, String),
    #[error("unbound variable {0} in expression")]
    Unbound(String),
    #[error("not an arithmetic expression: {0}")]
    NotArithmetic(String),
    #[error("result is not finite")]
    NonFinite,
}

pub fn eval_expression(text: &str) -> Result<f64, ExprError> {
    let mut p = ExprParser {
        s: text.as_bytes(),
        pos: 0,
    };
    let v = p.sum()?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(ExprError::Syntax(p.pos, "unexpected trailing input".into()));
    }
    finite(v)
}

fn finite(v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(if v == 0.0 { 0.0 } else { v })
    } else {
        Err(ExprError::NonFinite)
    }
}

struct ExprParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.ws();
        self.s.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<f64, ExprError> {
        let mut v = self.product()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let r = self.product()?;
            v = if op == b'+' { v + r } else { v - r };
        }
        Ok(v)
    }

    fn product(&mut self) -> Result<f64, ExprError> {
        let mut v = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let r = self.unary()?;
            if op == b'*' {
                v *= r;
            } else {
                if r == 0.0 {
                    return Err(ExprError::DivisionByZero);
                }
                v /= r;
            }
        }
        Ok(v)
    }

    fn unary(&mut self) -> Result<f64, ExprError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            Some(b'(') => {
                let open = self.pos;
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Syntax(open, "unclosed '('".into()));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) => Err(ExprError::Syntax(self.pos, format!("unexpected '{}'", c as char))),
            None => Err(ExprError::Syntax(self.pos, "unexpected end of expression".into())),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < self.s.len() && matches!(self.s[self.pos], b'e' | b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < self.s.len() && matches!(self.s[self.pos], b'+' | b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).unwrap_or("");
        text.parse::<f64>()
            .map_err(|_| ExprError::Syntax(start, format!("bad number {text:?}")))
    }
}

/// Evaluates a numeric term, an expression string, or an operator term.
pub fn eval_term(t: &Term) -> Result<f64, ExprError> {
    match t {
        Term::Num(n) => finite(*n),
        Term::Str(s) => eval_expression(s),
        Term::Var(v) => Err(ExprError::Unbound(v.clone())),
        Term::Compound(f, args) => {
            let v = |i: usize| eval_term(&args[i]);
            let r = match (f.as_str(), args.len()) {
                ("add", 2) => v(0)? + v(1)?,
                ("sub", 2) => v(0)? - v(1)?,
                ("mul", 2) => v(0)? * v(1)?,
                ("div", 2) => {
                    let (a, b) = (v(0)?, v(1)?);
                    if b == 0.0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    a / b
                }
                ("neg", 1) => -v(0)?,
                ("abs", 1) => v(0)?.abs(),
                ("min", 2) => v(0)?.min(v(1)?),
                ("max", 2) => v(0)?.max(v(1)?),
                _ => return Err(ExprError::NotArithmetic(t.to_string())),
            };
            finite(r)
        }
        Term::Sym(_) => Err(ExprError::NotArithmetic(t.to_string())),
    }
}
