use std::fmt;

use super::{Expr, Node};

// Binding strength of each printed form, loosest first.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.node() {
        Node::Add(..) | Node::Sub(..) => SUM,
        Node::Mul(..) | Node::Div(..) => PRODUCT,
        Node::Neg(_) => UNARY,
        Node::Const(v) if v.is_sign_negative() => UNARY,
        Node::Pow(..) => POWER,
        Node::Const(_) | Node::Var(_) | Node::Call(..) => ATOM,
    }
}

fn child(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if precedence(e) < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(v) => {
                if v.is_sign_negative() {
                    write!(f, "-{}", -v)
                } else {
                    write!(f, "{v}")
                }
            }
            Node::Var(name) => f.write_str(name),
            Node::Add(a, b) => {
                child(f, a, SUM)?;
                f.write_str(" + ")?;
                child(f, b, PRODUCT)
            }
            Node::Sub(a, b) => {
                child(f, a, SUM)?;
                f.write_str(" - ")?;
                child(f, b, PRODUCT)
            }
            Node::Mul(a, b) => {
                child(f, a, PRODUCT)?;
                f.write_str("*")?;
                child(f, b, UNARY)
            }
            Node::Div(a, b) => {
                child(f, a, PRODUCT)?;
                f.write_str("/")?;
                child(f, b, UNARY)
            }
            Node::Neg(a) => {
                f.write_str("-")?;
                child(f, a, POWER)
            }
            Node::Pow(a, n) => {
                child(f, a, ATOM)?;
                write!(f, "^{n}")
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}
