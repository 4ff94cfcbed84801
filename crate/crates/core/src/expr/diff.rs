use super::{Expr, Func, Node};

pub(crate) fn diff(e: &Expr, var: &str) -> Expr {
    match e.node() {
        Node::Const(_) => Expr::zero(),
        Node::Var(v) => {
            if &**v == var {
                Expr::one()
            } else {
                Expr::zero()
            }
        }
        Node::Add(a, b) => Expr::add(diff(a, var), diff(b, var)),
        Node::Sub(a, b) => Expr::sub(diff(a, var), diff(b, var)),
        Node::Mul(a, b) => Expr::add(
            Expr::mul(diff(a, var), b.clone()),
            Expr::mul(a.clone(), diff(b, var)),
        ),
        Node::Div(a, b) => {
            let da = diff(a, var);
            let db = diff(b, var);
            if db.is_zero() {
                Expr::div(da, b.clone())
            } else {
                // (a' b - a b') / b^2
                Expr::div(
                    Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                    Expr::powi(b.clone(), 2),
                )
            }
        }
        Node::Neg(a) => Expr::neg(diff(a, var)),
        Node::Pow(a, n) => {
            let da = diff(a, var);
            if da.is_zero() {
                return Expr::zero();
            }
            Expr::mul(
                Expr::mul(Expr::constant(f64::from(*n)), Expr::powi(a.clone(), n - 1)),
                da,
            )
        }
        Node::Call(f, a) => {
            let da = diff(a, var);
            if da.is_zero() {
                return Expr::zero();
            }
            Expr::mul(outer_derivative(*f, a), da)
        }
    }
}

/// f'(u) for a built-in unary function.
fn outer_derivative(f: Func, u: &Expr) -> Expr {
    let u = u.clone();
    match f {
        Func::Sin => u.cos(),
        Func::Cos => Expr::neg(u.sin()),
        Func::Tan => Expr::div(Expr::one(), Expr::powi(u.cos(), 2)),
        Func::Exp => u.exp(),
        Func::Log => Expr::div(Expr::one(), u),
        Func::Sqrt => Expr::div(Expr::one(), Expr::mul(Expr::constant(2.0), u.sqrt())),
        Func::Sinh => Expr::call(Func::Cosh, u),
        Func::Cosh => Expr::call(Func::Sinh, u),
        Func::Bump => {
            // bump(u) = A / (A + B), A = psi0(2 - u), B = psi0(u - 1)
            let left = Expr::sub(Expr::constant(2.0), u.clone());
            let right = Expr::sub(u, Expr::one());
            let a = Expr::call(Func::Psi(0), left.clone());
            let b = Expr::call(Func::Psi(0), right.clone());
            let da = Expr::neg(Expr::call(Func::Psi(2), left));
            let db = Expr::call(Func::Psi(2), right);
            Expr::div(
                Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a.clone(), db)),
                Expr::powi(Expr::add(a, b), 2),
            )
        }
        // d/dt psi_k = psi_{k+2} - k psi_{k+1}
        Func::Psi(k) => Expr::sub(
            Expr::call(Func::Psi(k + 2), u.clone()),
            Expr::mul(
                Expr::constant(f64::from(k)),
                Expr::call(Func::Psi(k + 1), u),
            ),
        ),
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{parse_expr, Expr};

    fn at(e: &Expr, vals: &[(&str, f64)]) -> f64 {
        e.eval(vals).unwrap()
    }

    fn central(e: &Expr, var: &str, vals: &[(&str, f64)], h: f64) -> f64 {
        let shifted = |d: f64| -> f64 {
            let v: Vec<(&str, f64)> = vals
                .iter()
                .map(|&(n, x)| if n == var { (n, x + d) } else { (n, x) })
                .collect();
            e.eval(&v).unwrap()
        };
        (shifted(h) - shifted(-h)) / (2.0 * h)
    }

    #[test]
    fn square_at_three() {
        let e = parse_expr("x1^2", &["x1"]).unwrap();
        assert_eq!(at(&e.diff("x1"), &[("x1", 3.0)]), 6.0);
    }

    #[test]
    fn sine_to_cosine() {
        let e = parse_expr("sin(x1)", &["x1"]).unwrap();
        assert_eq!(e.diff("x1").to_string(), "cos(x1)");
    }

    #[test]
    fn mixed_product_matches_finite_difference() {
        let e = parse_expr("x1*x2 + exp(x2)", &["x1", "x2"]).unwrap();
        let p = [("x1", 1.0), ("x2", 0.0)];
        let fd = central(&e, "x2", &p, 1e-6);
        assert!((fd - 2.0).abs() < 1e-8);
        assert!((at(&e.diff("x2"), &p) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bump_derivative_vanishes_on_plateaus() {
        let e = parse_expr("bump(u)", &["u"]).unwrap();
        let d = e.diff("u");
        for u in [-3.0, 0.0, 1.0 - 1e-9, 2.0 + 1e-9, 5.0] {
            assert_eq!(at(&d, &[("u", u)]), 0.0, "u = {u}");
        }
        for u in [1.1, 1.3, 1.5, 1.7, 1.9] {
            let fd = central(&e, "u", &[("u", u)], 1e-6);
            let exact = at(&d, &[("u", u)]);
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "u = {u}");
            assert!(exact < 0.0);
        }
        // second derivative is also total and agrees with differences
        let dd = d.diff("u");
        for u in [1.2, 1.5, 1.8] {
            let fd = central(&d, "u", &[("u", u)], 1e-6);
            let exact = at(&dd, &[("u", u)]);
            assert!((fd - exact).abs() < 1e-5 * (1.0 + exact.abs()), "u = {u}");
        }
    }

    #[test]
    fn quotient_and_chain_rules() {
        let e = parse_expr("sqrt(x1)/cosh(x1) + tan(x1)*log(x1) - sinh(x1)^3", &["x1"]).unwrap();
        let d = e.diff("x1");
        for x in [0.3, 0.7, 1.1] {
            let fd = central(&e, "x1", &[("x1", x)], 1e-6);
            let exact = at(&d, &[("x1", x)]);
            assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()));
        }
    }
}
