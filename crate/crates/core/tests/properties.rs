//! Property tests over randomly generated expressions, tensors and fields.

use approx::relative_eq;
use proptest::prelude::*;

use leib_core::fields::{bump_field, lie_bracket};
use leib_core::leibniz::{apply_local, global_value, local_coboundary};
use leib_core::sampling::Sampler;
use leib_core::{parse_expr, Chart, Expr, Point, TensorField};

const VARS: [&str; 2] = ["x1", "x2"];

/// Expressions that are smooth and finite on the unit square.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (-3.0..3.0f64).prop_map(|c| Expr::constant((c * 8.0).round() / 8.0)),
        Just(Expr::var("x1")),
        Just(Expr::var("x2")),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), 0..4i32).prop_map(|(a, n)| Expr::powi(a, n)),
            inner.clone().prop_map(Expr::sin),
            inner.clone().prop_map(Expr::cos),
            inner.prop_map(|a| Expr::exp(Expr::sin(a))),
        ]
    })
}

fn scope(x: f64, y: f64) -> [(&'static str, f64); 2] {
    [("x1", x), ("x2", y)]
}

fn eval(e: &Expr, x: f64, y: f64) -> f64 {
    e.eval(&scope(x, y)[..])
        .expect("smooth expression evaluates")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn derivative_matches_central_difference(e in smooth_expr(), x in -0.9..0.9f64, y in -0.9..0.9f64) {
        let h = 1e-5;
        let exact = eval(&e.diff("x1"), x, y);
        let numeric = (eval(&e, x + h, y) - eval(&e, x - h, y)) / (2.0 * h);
        let scale = 1.0 + eval(&e, x, y).abs() + exact.abs();
        prop_assert!((exact - numeric).abs() <= 1e-5 * scale, "{e}: {exact} vs {numeric}");
    }

    #[test]
    fn display_parses_back_to_the_same_function(e in smooth_expr(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let text = e.to_string();
        let back = parse_expr(&text, &VARS).expect("display output parses");
        prop_assert_eq!(back.to_string(), text.clone());
        let (a, b) = (eval(&e, x, y), eval(&back, x, y));
        prop_assert!(relative_eq!(a, b, epsilon = 1e-12, max_relative = 1e-12), "{text}: {a} vs {b}");
    }

    #[test]
    fn derivatives_commute(e in smooth_expr(), x in -0.9..0.9f64, y in -0.9..0.9f64) {
        let a = eval(&e.diff("x1").diff("x2"), x, y);
        let b = eval(&e.diff("x2").diff("x1"), x, y);
        prop_assert!(relative_eq!(a, b, epsilon = 1e-9, max_relative = 1e-9));
    }

    #[test]
    fn coboundary_is_linear_in_the_tensor(seed in any::<u64>(), rank in 1..4usize, c in -2.0..2.0f64) {
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        let mut s = Sampler::new(seed);
        let (a, b) = (s.tensor(&chart, rank, 2), s.tensor(&chart, rank, 2));
        let combo = TensorField::new(
            &chart,
            rank,
            a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| c * x + y).collect(),
        ).unwrap();
        let fields = s.vector_fields(&chart, rank + 1, 2);
        let p = s.point(&chart, 0.1);
        let value = |t: &TensorField| apply_local(&local_coboundary(t).unwrap(), &fields, &p).unwrap();
        let (lhs, rhs) = (value(&combo), c * value(&a) + value(&b));
        prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs.abs()));
    }

    #[test]
    fn first_slot_is_function_linear(seed in any::<u64>(), rank in 1..3usize) {
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        let mut s = Sampler::new(seed);
        let omega = s.tensor(&chart, rank, 2);
        let mut fields = s.vector_fields(&chart, rank + 1, 1);
        let f = s.polynomial(&chart, 2, 3);
        let p = s.point(&chart, 0.1);
        let plain = global_value(&omega, &fields, &p).unwrap();
        fields[0] = fields[0].scaled(&f);
        let scaled = global_value(&omega, &fields, &p).unwrap();
        let fp = f.eval(&chart.scope(&p.0)).unwrap();
        prop_assert!((scaled - fp * plain).abs() <= 1e-9 * (1.0 + plain.abs() * fp.abs()));
    }

    #[test]
    fn lie_bracket_is_antisymmetric(seed in any::<u64>()) {
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        let mut s = Sampler::new(seed);
        let (x, y) = (s.vector_field(&chart, 2), s.vector_field(&chart, 2));
        let p = s.point(&chart, 0.0);
        let xy = lie_bracket(&x, &y).unwrap().eval(&p).unwrap();
        let yx = lie_bracket(&y, &x).unwrap().eval(&p).unwrap();
        for (a, b) in xy.iter().zip(&yx) {
            prop_assert!((a + b).abs() <= 1e-12 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn bump_is_one_inside_zero_outside_and_bounded(
        cx in -0.3..0.3f64, cy in -0.3..0.3f64, r1 in 0.05..0.2f64, gap in 0.05..0.3f64,
        dx in -1.0..1.0f64, dy in -1.0..1.0f64,
    ) {
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        let r2 = r1 + gap;
        let centre = chart.point(vec![cx, cy]).unwrap();
        let bump = bump_field(&chart, &centre, r1, r2).unwrap();
        let at = |x: f64, y: f64| bump.eval(&Point(vec![x, y])).unwrap();
        let r = (dx * dx + dy * dy).sqrt().max(1e-12);
        let along = |t: f64| at(cx + t * dx / r, cy + t * dy / r);
        prop_assert_eq!(along(0.5 * r1), 1.0);
        prop_assert_eq!(along(r2 + 0.01), 0.0);
        let mid = along(r1 + 0.5 * gap);
        prop_assert!((0.0..=1.0).contains(&mid));
        // Smooth gluing: every derivative vanishes at the outer radius.
        let dfdx = bump.partial(0);
        let near = Point(vec![cx + (r2 - 1e-3) * dx / r, cy + (r2 - 1e-3) * dy / r]);
        prop_assert!(dfdx.eval(&near).unwrap().abs() < 1e-6);
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>()) {
        let chart = Chart::cube(3, -1.0, 1.0).unwrap();
        let a = Sampler::new(seed).points(&chart, 4, 0.1);
        let b = Sampler::new(seed).points(&chart, 4, 0.1);
        prop_assert_eq!(a, b);
    }
}
