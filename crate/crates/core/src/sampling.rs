//! Seeded generators for verification sweeps: interior points, random
//! polynomial coefficients and random polynomial fields.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::Expr;
use crate::fields::{Chart, Point, TensorField, VectorField};

/// Default fraction of each interval trimmed from both ends before sampling.
pub const DEFAULT_INSET: f64 = 0.1;

pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// An independent stream for sub-task `stream` of a sweep seeded by `seed`.
    pub fn for_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Sampler { rng }
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    /// A point drawn uniformly from the box shrunk by `inset` on every side
    /// (as a fraction of the interval length).
    pub fn point(&mut self, chart: &Chart, inset: f64) -> Point {
        Point(
            chart
                .domain()
                .iter()
                .map(|&(lo, hi)| {
                    let pad = (hi - lo) * inset;
                    self.uniform(lo + pad, hi - pad)
                })
                .collect(),
        )
    }

    pub fn points(&mut self, chart: &Chart, count: usize, inset: f64) -> Vec<Point> {
        (0..count).map(|_| self.point(chart, inset)).collect()
    }

    /// A polynomial in the chart coordinates with at most `terms` monomials of
    /// total degree ≤ `max_degree` and coefficients in [-1, 1].
    pub fn polynomial(&mut self, chart: &Chart, max_degree: u32, terms: usize) -> Expr {
        let n = chart.dim();
        Expr::sum((0..terms).map(|_| {
            let coeff = (self.uniform(-1.0, 1.0) * 1000.0).round() / 1000.0;
            let mut budget = self.rng.random_range(0..=max_degree);
            let mut factors = vec![Expr::constant(coeff)];
            while budget > 0 {
                let var = self.index(n);
                let power = self.rng.random_range(1..=budget);
                budget -= power;
                factors.push(Expr::powi(chart.coordinate(var), power as i32));
            }
            Expr::product(factors)
        }))
    }

    pub fn vector_field(&mut self, chart: &Arc<Chart>, max_degree: u32) -> VectorField {
        let comps = (0..chart.dim())
            .map(|_| self.polynomial(chart, max_degree, 3))
            .collect();
        VectorField::new(chart, comps).expect("polynomial components live on the chart")
    }

    pub fn vector_fields(
        &mut self,
        chart: &Arc<Chart>,
        count: usize,
        max_degree: u32,
    ) -> Vec<VectorField> {
        (0..count)
            .map(|_| self.vector_field(chart, max_degree))
            .collect()
    }

    pub fn tensor(&mut self, chart: &Arc<Chart>, rank: usize, max_degree: u32) -> TensorField {
        TensorField::from_fn(chart, rank, |_| self.polynomial(chart, max_degree, 2))
    }

    /// A coordinate field `∂/∂x^i` scaled by a random monomial (possibly 1).
    pub fn monomial_scaled_coordinate_field(&mut self, chart: &Arc<Chart>) -> VectorField {
        let i = self.index(chart.dim());
        let var = self.index(chart.dim());
        let power = self.rng.random_range(0..=2);
        let scale = Expr::powi(chart.coordinate(var), power);
        VectorField::coordinate(chart, i).scaled(&scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn points_are_reproducible_and_inset() {
        let chart = Chart::cube(3, 0.0, 10.0).unwrap();
        let a = Sampler::new(7).points(&chart, 20, 0.1);
        let b = Sampler::new(7).points(&chart, 20, 0.1);
        assert_eq!(a, b);
        for p in &a {
            assert!(p.0.iter().all(|&x| (1.0..=9.0).contains(&x)));
        }
        let c = Sampler::for_stream(7, 1).points(&chart, 20, 0.1);
        assert_ne!(a, c);
    }

    #[test]
    fn polynomials_use_chart_coordinates() {
        let chart = Chart::cube(2, -1.0, 1.0).unwrap();
        let mut s = Sampler::new(3);
        for _ in 0..20 {
            let e = s.polynomial(&chart, 3, 3);
            assert!(e.free_vars().iter().all(|v| v == "x1" || v == "x2"));
        }
    }
}
