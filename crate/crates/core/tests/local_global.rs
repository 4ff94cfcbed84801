use leib_core::fields::{Chart, VectorField};
use leib_core::leibniz::{apply_local, global_value, local_coboundary};
use leib_core::riemann::{dr_formula, dr_global, Geometry, MetricTensor};
use leib_core::sampling::{Sampler, DEFAULT_INSET};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn local_formula_matches_global_up_to_rank_three() {
    for n in [2, 3] {
        let chart = Chart::cube(n, -1.0, 1.0).unwrap();
        for k in 1..=3 {
            let mut s = Sampler::for_stream(7, (10 * n + k) as u64);
            for _ in 0..10 {
                let omega = s.tensor(&chart, k, 2);
                let fields = s.vector_fields(&chart, k + 1, 2);
                let p = s.point(&chart, DEFAULT_INSET);
                let local = apply_local(&local_coboundary(&omega).unwrap(), &fields, &p).unwrap();
                let global = global_value(&omega, &fields, &p).unwrap();
                assert!(
                    close(local, global, 1e-9),
                    "n={n} k={k}: local {local} global {global}"
                );
            }
        }
    }
}

#[test]
fn dr_formula_matches_global_on_sphere() {
    let chart = Chart::new(
        vec!["x1".into(), "x2".into()],
        vec![(0.2, 2.9), (-0.5, 6.8)],
    )
    .unwrap();
    let g = MetricTensor::parse(&chart, &[vec!["1", "0"], vec!["0", "sin(x1)^2"]]).unwrap();
    let geo = Geometry::new(g).unwrap();
    let mut s = Sampler::new(3);
    for _ in 0..5 {
        let fields: Vec<VectorField> = (0..5)
            .map(|_| s.monomial_scaled_coordinate_field(&chart))
            .collect();
        let p = s.point(&chart, DEFAULT_INSET);
        let lhs = dr_formula(&geo, &fields, &p).unwrap();
        let rhs = dr_global(&geo, &fields, &p).unwrap();
        assert!(close(lhs, rhs, 1e-9), "formula {lhs} global {rhs}");
    }
}
