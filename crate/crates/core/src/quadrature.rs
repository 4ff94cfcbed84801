//! Gauss-Legendre quadrature on the unit interval and unit square.

use crate::error::{Error, Result};

/// Nodes and weights for `∫₀¹ f(t) dt`; exact for polynomials of degree
/// at most `2·nodes − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_NODES: usize = 32;

impl QuadratureRule {
    pub fn gauss_legendre(count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs at least 2 nodes, got {count}"
            )));
        }
        let n = count as f64;
        let mut nodes = vec![0.0; count];
        let mut weights = vec![0.0; count];
        // Roots are symmetric about 0; find the upper half by Newton's method.
        for i in 0..count.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            for _ in 0..100 {
                let (p, d) = legendre(count, x);
                let step = p / d;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(count, x);
            let w = 2.0 / ((1.0 - x * x) * d * d);
            // map [-1, 1] to [0, 1]
            nodes[i] = 0.5 * (1.0 - x);
            nodes[count - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[count - 1 - i] = 0.5 * w;
        }
        Ok(QuadratureRule { nodes, weights })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `∫₀¹ f`, summed in node order.
    pub fn integrate<E>(
        &self,
        mut f: impl FnMut(f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<f64, E> {
        let mut total = 0.0;
        for (t, w) in self.nodes.iter().zip(&self.weights) {
            total += w * f(*t)?;
        }
        Ok(total)
    }

    /// `∫₀¹∫₀¹ f(t₁, t₂)` by the tensor-product rule.
    pub fn integrate_square<E>(
        &self,
        mut f: impl FnMut(f64, f64) -> std::result::Result<f64, E>,
    ) -> std::result::Result<f64, E> {
        let mut total = 0.0;
        for (t1, w1) in self.nodes.iter().zip(&self.weights) {
            let mut row = 0.0;
            for (t2, w2) in self.nodes.iter().zip(&self.weights) {
                row += w2 * f(*t1, *t2)?;
            }
            total += w1 * row;
        }
        Ok(total)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate(rule: &QuadratureRule, f: impl Fn(f64) -> f64) -> f64 {
        rule.integrate::<()>(|t| Ok(f(t))).unwrap()
    }

    #[test]
    fn exact_to_degree_2n_minus_1() {
        for count in [2, 3, 5, 8, 32] {
            let rule = QuadratureRule::gauss_legendre(count).unwrap();
            for degree in 0..2 * count {
                let exact = 1.0 / (degree as f64 + 1.0);
                let got = integrate(&rule, |t| t.powi(degree as i32));
                assert!(
                    (got - exact).abs() < 1e-14,
                    "n={count} degree={degree}: {got} vs {exact}"
                );
            }
        }
        let rule = QuadratureRule::gauss_legendre(3).unwrap();
        assert!((integrate(&rule, |t| t.powi(6)) - 1.0 / 7.0).abs() > 1e-6);
    }

    #[test]
    fn weights_positive_and_sum_to_one() {
        let rule = QuadratureRule::gauss_legendre(DEFAULT_NODES).unwrap();
        assert!(rule.weights().iter().all(|&w| w > 0.0));
        assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!(rule.nodes().windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn square_rule_and_smooth_integrand() {
        let rule = QuadratureRule::gauss_legendre(DEFAULT_NODES).unwrap();
        let v = rule.integrate_square::<()>(|a, b| Ok(a * b * b)).unwrap();
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
        let c = integrate(&rule, |t| (2.0 * std::f64::consts::PI * t).cos().powi(2));
        assert!((c - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rejects_single_node() {
        assert!(QuadratureRule::gauss_legendre(1).is_err());
    }
}
