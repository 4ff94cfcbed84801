//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (("+"|"-") term)* ;
//! term   := factor (("*"|"/") factor)* ;
//! factor := ("-")? power ;
//! power  := atom ("^" INTEGER)? ;
//! atom   := NUMBER | IDENT | IDENT "(" expr ")" | "(" expr ")" ;
//! ```
//!
//! `pi` names the constant unless it is declared as a variable.
//!
//! The parser builds raw trees (no folding), so the result is the unique
//! parse tree of the input.

use thiserror::Error;

use super::{Expr, Func, Node};

/// Largest accepted absolute value of an integer exponent.
pub const MAX_EXPONENT: i64 = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown variable `{name}` at byte {offset}")]
    UnknownVariable { name: String, offset: usize },
    #[error("unknown function `{name}` at byte {offset}")]
    UnknownFunction { name: String, offset: usize },
    #[error("integer exponent {value} out of range at byte {offset}")]
    ExponentOutOfRange { value: String, offset: usize },
}

pub fn parse_expr<S: AsRef<str>>(text: &str, allowed_vars: &[S]) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: text.as_bytes(),
        text,
        pos: 0,
        allowed: allowed_vars,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a, S> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
    allowed: &'a [S],
}

impl<S: AsRef<str>> Parser<'_, S> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                lhs = Expr::raw(Node::Add(lhs, rhs));
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                lhs = Expr::raw(Node::Sub(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.factor()?;
                lhs = Expr::raw(Node::Mul(lhs, rhs));
            } else if self.eat(b'/') {
                let rhs = self.factor()?;
                lhs = Expr::raw(Node::Div(lhs, rhs));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            Ok(Expr::raw(Node::Neg(self.power()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        let digits_start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == digits_start {
            self.pos = start;
            return Err(self.syntax("expected integer exponent"));
        }
        let lexeme = &self.text[start..self.pos];
        match lexeme.parse::<i64>() {
            Ok(n) if n.abs() <= MAX_EXPONENT => Ok(Expr::raw(Node::Pow(base, n as i32))),
            _ => Err(ParseError::ExponentOutOfRange {
                value: lexeme.to_string(),
                offset: start,
            }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
            None => Err(self.syntax("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = mark;
            }
        }
        let lexeme = &self.text[start..self.pos];
        lexeme
            .parse::<f64>()
            .map(Expr::constant)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.text[start..self.pos];
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name).ok_or_else(|| ParseError::UnknownFunction {
                name: name.to_string(),
                offset: start,
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.syntax("expected `)` after function argument"));
            }
            return Ok(Expr::raw(Node::Call(func, arg)));
        }
        if self.allowed.iter().any(|v| v.as_ref() == name) {
            Ok(Expr::var(name))
        } else if name == "pi" {
            Ok(Expr::constant(std::f64::consts::PI))
        } else {
            Err(ParseError::UnknownVariable {
                name: name.to_string(),
                offset: start,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const XY: [&str; 2] = ["x1", "x2"];

    #[test]
    fn sum_of_power_and_call() {
        let e = parse_expr("x1^2 + sin(x2)", &XY).unwrap();
        let expected = Expr::raw(Node::Add(
            Expr::raw(Node::Pow(Expr::var("x1"), 2)),
            Expr::raw(Node::Call(Func::Sin, Expr::var("x2"))),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn unary_minus_binds_tighter_than_product() {
        let e = parse_expr("-x1*x2", &XY).unwrap();
        let expected = Expr::raw(Node::Mul(
            Expr::raw(Node::Neg(Expr::var("x1"))),
            Expr::var("x2"),
        ));
        assert_eq!(e, expected);
    }

    #[test]
    fn pi_is_a_constant_unless_declared() {
        assert_eq!(
            parse_expr("pi", &XY).unwrap(),
            Expr::constant(std::f64::consts::PI)
        );
        assert_eq!(parse_expr("pi", &["pi"]).unwrap(), Expr::var("pi"));
    }

    #[test]
    fn rejects_undeclared_variable() {
        assert_eq!(
            parse_expr("x3", &XY),
            Err(ParseError::UnknownVariable {
                name: "x3".into(),
                offset: 0
            })
        );
    }

    #[test]
    fn rejects_unknown_function_and_bad_exponent() {
        assert!(matches!(
            parse_expr("x1 + foo(x2)", &XY),
            Err(ParseError::UnknownFunction { offset: 5, .. })
        ));
        assert!(matches!(
            parse_expr("x1^1000", &XY),
            Err(ParseError::ExponentOutOfRange { offset: 3, .. })
        ));
        assert!(matches!(
            parse_expr("x1^99999999999999999999", &XY),
            Err(ParseError::ExponentOutOfRange { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_offsets() {
        assert_eq!(
            parse_expr("x1 + * x2", &XY),
            Err(ParseError::Syntax {
                offset: 5,
                message: "unexpected character".into()
            })
        );
        assert!(matches!(
            parse_expr("(x1 + x2", &XY),
            Err(ParseError::Syntax { offset: 8, .. })
        ));
        assert!(matches!(
            parse_expr("x1 x2", &XY),
            Err(ParseError::Syntax { offset: 3, .. })
        ));
        assert!(matches!(
            parse_expr("x1^", &XY),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_expr("", &XY),
            Err(ParseError::Syntax { offset: 0, .. })
        ));
    }

    #[test]
    fn numbers_with_exponents() {
        let e = parse_expr("1.5e-3*x1 + .5 + 2E2", &XY).unwrap();
        let v = e.eval(&[("x1", 1000.0)][..]).unwrap();
        assert!((v - (1.5 + 0.5 + 200.0)).abs() < 1e-12);
    }
}
