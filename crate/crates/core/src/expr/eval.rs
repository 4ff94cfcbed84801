use std::collections::HashMap;

use thiserror::Error;

use super::{Expr, Func, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    Unbound(String),
    #[error("domain error: {reason} in `{expr}`")]
    Domain { reason: &'static str, expr: String },
}

/// Variable bindings used during evaluation.
pub trait Scope {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl<S: AsRef<str>> Scope for [(S, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter()
            .find(|(n, _)| n.as_ref() == name)
            .map(|(_, v)| *v)
    }
}

impl<S: AsRef<str>> Scope for Vec<(S, f64)> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

impl Scope for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

fn domain(reason: &'static str, e: &Expr) -> EvalError {
    EvalError::Domain {
        reason,
        expr: e.to_string(),
    }
}

/// `e^{-1/t} / t^k` for `t > 0`, zero otherwise.
pub(crate) fn psi(k: u32, t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else {
        (-1.0 / t - f64::from(k) * t.ln()).exp()
    }
}

pub(crate) fn bump(u: f64) -> f64 {
    if u <= 1.0 {
        1.0
    } else if u >= 2.0 {
        0.0
    } else {
        let a = psi(0, 2.0 - u);
        let b = psi(0, u - 1.0);
        a / (a + b)
    }
}

/// Applies `f` to a real argument. The error carries only the reason; the
/// caller attaches the offending subexpression.
pub(crate) fn apply_func(f: Func, x: f64) -> Result<f64, &'static str> {
    Ok(match f {
        Func::Sin => x.sin(),
        Func::Cos => x.cos(),
        Func::Tan => {
            if x.cos() == 0.0 {
                return Err("tan at a pole");
            }
            x.tan()
        }
        Func::Exp => x.exp(),
        Func::Log => {
            if x <= 0.0 {
                return Err("log of non-positive value");
            }
            x.ln()
        }
        Func::Sqrt => {
            if x < 0.0 {
                return Err("sqrt of negative value");
            }
            x.sqrt()
        }
        Func::Sinh => x.sinh(),
        Func::Cosh => x.cosh(),
        Func::Bump => bump(x),
        Func::Psi(k) => psi(k, x),
    })
}

pub(crate) fn eval<S: Scope + ?Sized>(e: &Expr, scope: &S) -> Result<f64, EvalError> {
    Ok(match e.node() {
        Node::Const(v) => *v,
        Node::Var(name) => scope
            .lookup(name)
            .ok_or_else(|| EvalError::Unbound(name.to_string()))?,
        Node::Add(a, b) => eval(a, scope)? + eval(b, scope)?,
        Node::Sub(a, b) => eval(a, scope)? - eval(b, scope)?,
        Node::Mul(a, b) => eval(a, scope)? * eval(b, scope)?,
        Node::Div(a, b) => {
            let num = eval(a, scope)?;
            let den = eval(b, scope)?;
            if den == 0.0 {
                return Err(domain("division by zero", e));
            }
            num / den
        }
        Node::Neg(a) => -eval(a, scope)?,
        Node::Pow(a, n) => {
            let base = eval(a, scope)?;
            if base == 0.0 && *n < 0 {
                return Err(domain("division by zero", e));
            }
            base.powi(*n)
        }
        Node::Call(f, a) => {
            let x = eval(a, scope)?;
            apply_func(*f, x).map_err(|reason| domain(reason, e))?
        }
    })
}
