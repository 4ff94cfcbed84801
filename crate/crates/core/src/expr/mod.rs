//! Symbolic scalar expressions over chart coordinates.
//!
//! An [`Expr`] is an immutable, reference-counted tree. Every operation on it
//! (differentiation, substitution, evaluation) is pure, so expressions can be
//! shared freely across threads.
//!
//! The smart constructors ([`Expr::add`], [`Expr::mul`], ...) perform only
//! conservative simplification: constant folding and the 0/1 identities.
//! Equality of two mathematically equal but structurally different
//! expressions is established by evaluation, not by canonical form.

mod diff;
mod display;
mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::ops;
use std::sync::Arc;

pub use eval::{EvalError, Scope};
pub use parse::{parse_expr, ParseError, MAX_EXPONENT};

/// Built-in unary functions.
///
/// `Psi(k)` is the smooth transition primitive `t ↦ e^{-1/t} / t^k` for
/// `t > 0` and `0` otherwise. It only appears in derivatives of `bump`, and is
/// spelled `psi<k>(..)` when printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    /// Smooth cutoff: 1 on `u <= 1`, 0 on `u >= 2`.
    Bump,
    Psi(u32),
}

impl Func {
    pub fn name(self) -> String {
        match self {
            Func::Sin => "sin".into(),
            Func::Cos => "cos".into(),
            Func::Tan => "tan".into(),
            Func::Exp => "exp".into(),
            Func::Log => "log".into(),
            Func::Sqrt => "sqrt".into(),
            Func::Sinh => "sinh".into(),
            Func::Cosh => "cosh".into(),
            Func::Bump => "bump".into(),
            Func::Psi(k) => format!("psi{k}"),
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "bump" => Func::Bump,
            _ => {
                let digits = name.strip_prefix("psi")?;
                if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                    return None;
                }
                Func::Psi(digits.parse().ok()?)
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Var(Arc<str>),
    Add(Expr, Expr),
    Sub(Expr, Expr),
    Mul(Expr, Expr),
    Div(Expr, Expr),
    Neg(Expr),
    Pow(Expr, i32),
    Call(Func, Expr),
}

#[derive(Clone)]
pub struct Expr(Arc<Node>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({self})")
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::constant(v)
    }
}

// The folding constructors share names with the operator traits, which delegate to them.
#[allow(clippy::should_implement_trait)]
impl Expr {
    /// Wraps a node without any simplification.
    pub fn raw(node: Node) -> Self {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn constant(v: f64) -> Self {
        Expr::raw(Node::Const(v))
    }

    pub fn zero() -> Self {
        Expr::constant(0.0)
    }

    pub fn one() -> Self {
        Expr::constant(1.0)
    }

    pub fn var(name: &str) -> Self {
        Expr::raw(Node::Var(Arc::from(name)))
    }

    pub fn as_const(&self) -> Option<f64> {
        match *self.0 {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn is_one(&self) -> bool {
        self.as_const() == Some(1.0)
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x + y),
            (Some(0.0), _) => b,
            (_, Some(0.0)) => a,
            _ => match b.node() {
                Node::Neg(inner) => Expr::raw(Node::Sub(a, inner.clone())),
                _ => Expr::raw(Node::Add(a, b)),
            },
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x - y),
            (Some(0.0), _) => Expr::neg(b),
            (_, Some(0.0)) => a,
            _ => Expr::raw(Node::Sub(a, b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) => Expr::constant(x * y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(0.0)) => Expr::zero(),
            (Some(1.0), _) => b,
            (_, Some(1.0)) => a,
            (Some(-1.0), _) => Expr::neg(b),
            (_, Some(-1.0)) => Expr::neg(a),
            _ => Expr::raw(Node::Mul(a, b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a.as_const(), b.as_const()) {
            (Some(x), Some(y)) if y != 0.0 => Expr::constant(x / y),
            (Some(0.0), _) => Expr::zero(),
            (_, Some(1.0)) => a,
            _ => Expr::raw(Node::Div(a, b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a.node() {
            Node::Const(v) => Expr::constant(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::raw(Node::Neg(a)),
        }
    }

    /// Integer power. Negative exponents become a reciprocal so that printed
    /// exponents are always non-negative integers.
    pub fn powi(base: Expr, n: i32) -> Expr {
        if n < 0 {
            return Expr::div(Expr::one(), Expr::powi(base, -n));
        }
        match (base.as_const(), n) {
            (_, 0) => Expr::one(),
            (_, 1) => base,
            (Some(v), _) => Expr::constant(v.powi(n)),
            _ => Expr::raw(Node::Pow(base, n)),
        }
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        if let Some(v) = arg.as_const() {
            if let Ok(r) = eval::apply_func(f, v) {
                if r.is_finite() {
                    return Expr::constant(r);
                }
            }
        }
        Expr::raw(Node::Call(f, arg))
    }

    pub fn sin(self) -> Expr {
        Expr::call(Func::Sin, self)
    }
    pub fn cos(self) -> Expr {
        Expr::call(Func::Cos, self)
    }
    pub fn exp(self) -> Expr {
        Expr::call(Func::Exp, self)
    }
    pub fn log(self) -> Expr {
        Expr::call(Func::Log, self)
    }
    pub fn sqrt(self) -> Expr {
        Expr::call(Func::Sqrt, self)
    }
    pub fn bump(self) -> Expr {
        Expr::call(Func::Bump, self)
    }

    /// Sum of an iterator of expressions; the empty sum is zero.
    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        terms.into_iter().fold(Expr::zero(), Expr::add)
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        factors.into_iter().fold(Expr::one(), Expr::mul)
    }

    pub fn diff(&self, var: &str) -> Expr {
        diff::diff(self, var)
    }

    pub fn eval<S: Scope + ?Sized>(&self, scope: &S) -> Result<f64, EvalError> {
        eval::eval(self, scope)
    }

    /// Replaces every occurrence of the variable `name` by `with`.
    pub fn subst(&self, name: &str, with: &Expr) -> Expr {
        self.subst_all(&[(name, with.clone())])
    }

    /// Simultaneous substitution of several variables.
    pub fn subst_all(&self, map: &[(&str, Expr)]) -> Expr {
        match self.node() {
            Node::Const(_) => self.clone(),
            Node::Var(v) => map
                .iter()
                .find(|(n, _)| *n == &**v)
                .map(|(_, e)| e.clone())
                .unwrap_or_else(|| self.clone()),
            Node::Add(a, b) => Expr::add(a.subst_all(map), b.subst_all(map)),
            Node::Sub(a, b) => Expr::sub(a.subst_all(map), b.subst_all(map)),
            Node::Mul(a, b) => Expr::mul(a.subst_all(map), b.subst_all(map)),
            Node::Div(a, b) => Expr::div(a.subst_all(map), b.subst_all(map)),
            Node::Neg(a) => Expr::neg(a.subst_all(map)),
            Node::Pow(a, n) => Expr::powi(a.subst_all(map), *n),
            Node::Call(f, a) => Expr::call(*f, a.subst_all(map)),
        }
    }

    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self.node() {
            Node::Const(_) => {}
            Node::Var(v) => {
                out.insert(v.to_string());
            }
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.collect_vars(out),
        }
    }

    /// Number of nodes when viewed as a tree.
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Const(_) | Node::Var(_) => 1,
            Node::Add(a, b) | Node::Sub(a, b) | Node::Mul(a, b) | Node::Div(a, b) => {
                1 + a.size() + b.size()
            }
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => 1 + a.size(),
        }
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl ops::$trait<Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
        impl ops::$trait<f64> for Expr {
            type Output = Expr;
            fn $method(self, rhs: f64) -> Expr {
                $ctor(self, Expr::constant(rhs))
            }
        }
        impl ops::$trait<Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(Expr::constant(self), rhs)
            }
        }
        impl ops::$trait<&Expr> for f64 {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(Expr::constant(self), rhs.clone())
            }
        }
    };
}

binop!(Add, add, Expr::add);
binop!(Sub, sub, Expr::sub);
binop!(Mul, mul, Expr::mul);
binop!(Div, div, Expr::div);

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self)
    }
}

impl ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg(self.clone())
    }
}
