//! Metric geometry on a chart: Christoffel symbols, the Levi-Civita
//! connection, covariant derivatives of tensors and the curvature tensor.
//!
//! Curvature follows the convention
//! `R(X ⊗ Y ⊗ Z ⊗ W) = ⟨∇_X ∇_Y Z − ∇_Y ∇_X Z − ∇_{[X,Y]} Z, W⟩`,
//! so the unit sphere has `R(∂₁ ⊗ ∂₂ ⊗ ∂₂ ⊗ ∂₁) = sin²θ` (do Carmo's
//! ordering gives the opposite sign).

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{lie_bracket, Chart, MultiIndex, Point, ScalarField, TensorField, VectorField};
use crate::leibniz::{apply_local, global_coboundary, local_coboundary, Cochain};
use crate::sampling::Sampler;

/// Largest dimension for which the symbolic inverse is formed.
pub const MAX_METRIC_DIM: usize = 4;

const SYMMETRY_SAMPLES: usize = 16;

/// A symmetric, nondegenerate 2-tensor with its symbolic inverse.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    g: TensorField,
    det: Expr,
    inverse: Vec<Expr>,
}

fn determinant(m: &[Vec<Expr>]) -> Expr {
    match m.len() {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        2 => &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0],
        n => Expr::sum((0..n).filter(|&c| !m[0][c].is_zero()).map(|c| {
            let minor: Vec<Vec<Expr>> = m[1..]
                .iter()
                .map(|row| {
                    row.iter()
                        .enumerate()
                        .filter(|&(j, _)| j != c)
                        .map(|(_, e)| e.clone())
                        .collect()
                })
                .collect();
            let term = &m[0][c] * determinant(&minor);
            if c % 2 == 0 {
                term
            } else {
                -term
            }
        })),
    }
}

fn minor(m: &[Vec<Expr>], row: usize, col: usize) -> Vec<Vec<Expr>> {
    m.iter()
        .enumerate()
        .filter(|&(i, _)| i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|&(j, _)| j != col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect()
}

impl MetricTensor {
    /// Validates symmetry (structurally, or else at sampled points) and
    /// forms the inverse by adjugate over determinant.
    pub fn new(g: TensorField) -> Result<Self> {
        if g.rank() != 2 {
            return Err(Error::Rank {
                expected: "2".into(),
                got: g.rank(),
            });
        }
        let chart = g.chart().clone();
        let n = chart.dim();
        if n > MAX_METRIC_DIM {
            return Err(Error::InvalidArgument(format!(
                "metrics are supported up to dimension {MAX_METRIC_DIM}, got {n}"
            )));
        }
        let points = Sampler::new(0).points(&chart, SYMMETRY_SAMPLES, 0.0);
        for p in 0..n {
            for q in p + 1..n {
                let (a, b) = (g.get(&[p, q]), g.get(&[q, p]));
                if a == b {
                    continue;
                }
                for pt in &points {
                    let scope = chart.scope(&pt.0);
                    let (va, vb) = (a.eval(&scope)?, b.eval(&scope)?);
                    if (va - vb).abs() > 1e-12 * (1.0 + va.abs().max(vb.abs())) {
                        return Err(Error::AsymmetricMetric(format!(
                            "g[{}][{}] = {a} differs from g[{}][{}] = {b}",
                            p + 1,
                            q + 1,
                            q + 1,
                            p + 1
                        )));
                    }
                }
            }
        }
        let rows: Vec<Vec<Expr>> = (0..n)
            .map(|i| (0..n).map(|j| g.get(&[i, j]).clone()).collect())
            .collect();
        let det = determinant(&rows);
        let mut inverse = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                // adj(g)_{ij} = (−1)^{i+j} det(minor_{ji})
                let cof = determinant(&minor(&rows, j, i));
                let cof = if (i + j) % 2 == 0 { cof } else { -cof };
                inverse.push(Expr::div(cof, det.clone()));
            }
        }
        Ok(MetricTensor { g, det, inverse })
    }

    /// Parses an n×n grid of expression strings.
    pub fn parse<S: AsRef<str>>(chart: &Arc<Chart>, rows: &[Vec<S>]) -> Result<Self> {
        let n = chart.dim();
        if rows.len() != n || rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "metric must be a {n}×{n} grid"
            )));
        }
        let coeffs = rows
            .iter()
            .flatten()
            .map(|s| chart.parse(s.as_ref(), &[]))
            .collect::<Result<Vec<_>>>()?;
        MetricTensor::new(TensorField::new(chart, 2, coeffs)?)
    }

    /// Rejects the metric if its determinant is (numerically) zero at any of
    /// `points`.
    pub fn check_nondegenerate(&self, points: &[Point]) -> Result<()> {
        let chart = self.chart();
        for p in points {
            let d = self.det.eval(&chart.scope(&p.0))?;
            if d.is_nan() || d.abs() <= 1e-12 {
                return Err(Error::DegenerateMetric(format!("det g = {d} at {:?}", p.0)));
            }
        }
        Ok(())
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.g.chart()
    }

    pub fn dim(&self) -> usize {
        self.g.dim()
    }

    pub fn tensor(&self) -> &TensorField {
        &self.g
    }

    pub fn component(&self, p: usize, q: usize) -> &Expr {
        self.g.get(&[p, q])
    }

    pub fn inverse(&self, p: usize, q: usize) -> &Expr {
        &self.inverse[p * self.dim() + q]
    }

    pub fn determinant(&self) -> &Expr {
        &self.det
    }

    /// Symbolic `⟨X, Y⟩`.
    pub fn inner(&self, x: &VectorField, y: &VectorField) -> Result<ScalarField> {
        self.g.apply_symbolic(&[x.clone(), y.clone()])
    }

    pub fn inner_at(&self, x: &VectorField, y: &VectorField, p: &Point) -> Result<f64> {
        self.g.apply(&[x.clone(), y.clone()], p)
    }

    /// `⟨u, v⟩` for plain component vectors at `p`.
    pub fn inner_values(&self, u: &[f64], v: &[f64], p: &Point) -> Result<f64> {
        let coeffs = self.g.eval_coeffs(p)?;
        let n = self.dim();
        Ok((0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| coeffs[i * n + j] * u[i] * v[j])
            .sum())
    }
}

/// Christoffel symbols of the first kind,
/// `[ij, ℓ] = ½(∂g_{jℓ}/∂xⁱ + ∂g_{iℓ}/∂xʲ − ∂g_{ij}/∂xˡ)`, indexed `(i, j, ℓ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChristoffelFirst {
    n: usize,
    values: Vec<Expr>,
}

impl ChristoffelFirst {
    pub fn get(&self, i: usize, j: usize, l: usize) -> &Expr {
        &self.values[(i * self.n + j) * self.n + l]
    }

    pub fn values(&self) -> &[Expr] {
        &self.values
    }
}

pub fn christoffel_first(g: &MetricTensor) -> ChristoffelFirst {
    let n = g.dim();
    let names = g.chart().names().to_vec();
    let dg = |a: usize, b: usize, var: usize| g.component(a, b).diff(&names[var]);
    let mut values = Vec::with_capacity(n * n * n);
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                values.push(0.5 * (dg(j, l, i) + dg(i, l, j) - dg(i, j, l)));
            }
        }
    }
    ChristoffelFirst { n, values }
}

/// Connection coefficients `Γ^m_{ij}`, indexed `(m, i, j)`, so that
/// `∇_{∂_i} ∂_j = Σ_m Γ^m_{ij} ∂_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionCoefficients {
    chart: Arc<Chart>,
    values: Vec<Expr>,
}

impl ConnectionCoefficients {
    /// The Levi-Civita connection `Γ^m_{ij} = Σ_ℓ g^{mℓ} [ij, ℓ]`.
    pub fn levi_civita(g: &MetricTensor) -> Self {
        let first = christoffel_first(g);
        let n = g.dim();
        let mut values = Vec::with_capacity(n * n * n);
        for m in 0..n {
            for i in 0..n {
                for j in 0..n {
                    values.push(Expr::sum(
                        (0..n).map(|l| g.inverse(m, l) * first.get(i, j, l)),
                    ));
                }
            }
        }
        ConnectionCoefficients {
            chart: g.chart().clone(),
            values,
        }
    }

    /// Arbitrary coefficients; used to build non-Levi-Civita fixtures.
    pub fn from_values(chart: &Arc<Chart>, values: Vec<Expr>) -> Result<Self> {
        let n = chart.dim();
        if values.len() != n * n * n {
            return Err(Error::InvalidArgument(format!(
                "need {} connection coefficients",
                n * n * n
            )));
        }
        Ok(ConnectionCoefficients {
            chart: chart.clone(),
            values,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn get(&self, m: usize, i: usize, j: usize) -> &Expr {
        let n = self.chart.dim();
        &self.values[(m * n + i) * n + j]
    }

    pub fn values(&self) -> &[Expr] {
        &self.values
    }

    /// `(∇_X Y)^m = Σ_j X^j (∂_j Y^m + Σ_i Γ^m_{ji} Y^i)`.
    pub fn covariant_derivative(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        if **x.chart() != *self.chart || **y.chart() != *self.chart {
            return Err(Error::ChartMismatch);
        }
        let n = self.chart.dim();
        let names = self.chart.names();
        let comps = (0..n)
            .map(|m| {
                Expr::sum((0..n).filter(|&j| !x.component(j).is_zero()).map(|j| {
                    let inner = y.component(m).diff(&names[j])
                        + Expr::sum((0..n).map(|i| self.get(m, j, i) * y.component(i)));
                    x.component(j) * inner
                }))
            })
            .collect();
        VectorField::new(&self.chart, comps)
    }

    /// `∇ω(X_1 ⊗ … ⊗ X_k ⊗ Z) = Z(ω(X_1 ⊗ … ⊗ X_k)) − Σ_m ω(… ∇_Z X_m …)`,
    /// with the differentiation direction in the last slot. Components:
    /// `∂_z a_I − Σ_m Σ_p Γ^p_{z i_m} a_{I[i_m → p]}`.
    pub fn covariant_derivative_tensor(&self, omega: &TensorField) -> Result<TensorField> {
        if omega.rank() == 0 {
            return Err(Error::Rank {
                expected: "at least 1".into(),
                got: 0,
            });
        }
        let chart = omega.chart();
        let n = chart.dim();
        let k = omega.rank();
        Ok(TensorField::from_fn(chart, k + 1, |idx| {
            let (base, z) = (&idx[..k], idx[k]);
            let mut total = omega.get(base).diff(&chart.names()[z]);
            for m in 0..k {
                let mut moved = base.to_vec();
                let correction = Expr::sum((0..n).map(|p| {
                    moved[m] = p;
                    self.get(p, z, base[m]) * omega.get(&moved)
                }));
                total = total - correction;
            }
            total
        }))
    }

    /// `R_{ijkl} = Σ_m g_{ml} (∂_iΓ^m_{jk} − ∂_jΓ^m_{ik} + Σ_p (Γ^p_{jk}Γ^m_{ip} − Γ^p_{ik}Γ^m_{jp}))`.
    pub fn riemann_tensor(&self, g: &MetricTensor) -> TensorField {
        let chart = &self.chart;
        let n = chart.dim();
        let names = chart.names();
        // (∇_i ∇_j ∂_k − ∇_j ∇_i ∂_k)^m
        let mut curvature = vec![Expr::zero(); n * n * n * n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                for k in 0..n {
                    for m in 0..n {
                        let value = self.get(m, j, k).diff(&names[i])
                            - self.get(m, i, k).diff(&names[j])
                            + Expr::sum((0..n).map(|p| {
                                self.get(p, j, k) * self.get(m, i, p)
                                    - self.get(p, i, k) * self.get(m, j, p)
                            }));
                        curvature[((i * n + j) * n + k) * n + m] = value;
                    }
                }
            }
        }
        TensorField::from_fn(chart, 4, |idx| {
            let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
            Expr::sum((0..n).map(|m| g.component(m, l) * &curvature[((i * n + j) * n + k) * n + m]))
        })
    }
}

/// `∇_X Y` for the Levi-Civita connection of `g`.
pub fn levi_civita(g: &MetricTensor, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    ConnectionCoefficients::levi_civita(g).covariant_derivative(x, y)
}

/// Everything derived from one metric, computed once.
#[derive(Debug, Clone)]
pub struct Geometry {
    pub metric: MetricTensor,
    pub christoffel: ChristoffelFirst,
    pub connection: ConnectionCoefficients,
    pub riemann: TensorField,
    /// `∇R`, rank 5, direction last.
    pub nabla_riemann: TensorField,
}

impl Geometry {
    pub fn new(metric: MetricTensor) -> Result<Self> {
        let connection = ConnectionCoefficients::levi_civita(&metric);
        Geometry::with_connection(metric, connection)
    }

    /// Builds curvature from arbitrary connection coefficients.
    pub fn with_connection(
        metric: MetricTensor,
        connection: ConnectionCoefficients,
    ) -> Result<Self> {
        let christoffel = christoffel_first(&metric);
        let riemann = connection.riemann_tensor(&metric);
        let nabla_riemann = connection.covariant_derivative_tensor(&riemann)?;
        Ok(Geometry {
            metric,
            christoffel,
            connection,
            riemann,
            nabla_riemann,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric.chart()
    }

    pub fn nabla(&self, x: &VectorField, y: &VectorField) -> Result<VectorField> {
        self.connection.covariant_derivative(x, y)
    }

    /// `(∇_Z R)(A ⊗ B ⊗ C ⊗ D)` at `p`.
    pub fn nabla_r(&self, z: &VectorField, args: [&VectorField; 4], p: &Point) -> Result<f64> {
        let fields = [
            args[0].clone(),
            args[1].clone(),
            args[2].clone(),
            args[3].clone(),
            z.clone(),
        ];
        self.nabla_riemann.apply(&fields, p)
    }

    pub fn r(&self, args: [&VectorField; 4], p: &Point) -> Result<f64> {
        let fields = [
            args[0].clone(),
            args[1].clone(),
            args[2].clone(),
            args[3].clone(),
        ];
        self.riemann.apply(&fields, p)
    }

    /// `∇g` as a rank-3 tensor; zero for the Levi-Civita connection.
    pub fn nabla_metric(&self) -> Result<TensorField> {
        self.connection
            .covariant_derivative_tensor(self.metric.tensor())
    }
}

/// `dR(X ⊗ Y ⊗ Z ⊗ W ⊗ T)` from `∇R` and eight correction terms involving
/// `∇_X W`, `∇_X T`, `∇_Y W`, `∇_Y T`.
pub fn dr_formula(geo: &Geometry, fields: &[VectorField], p: &Point) -> Result<f64> {
    let [x, y, z, w, t] = fields else {
        return Err(Error::Arity {
            expected: 5,
            got: fields.len(),
        });
    };
    let xw = geo.nabla(x, w)?;
    let xt = geo.nabla(x, t)?;
    let yw = geo.nabla(y, w)?;
    let yt = geo.nabla(y, t)?;
    let r =
        |a: &VectorField, b: &VectorField, c: &VectorField, d: &VectorField| geo.r([a, b, c, d], p);
    Ok(
        -geo.nabla_r(z, [x, y, w, t], p)? + r(z, t, y, &xw)? - r(y, z, t, &xw)? - r(z, w, y, &xt)?
            + r(y, z, w, &xt)?
            - r(z, t, x, &yw)?
            + r(x, z, t, &yw)?
            + r(z, w, x, &yt)?
            - r(x, z, w, &yt)?,
    )
}

/// The cochain formula applied to `R` as a 4-cochain.
pub fn dr_global(geo: &Geometry, fields: &[VectorField], p: &Point) -> Result<f64> {
    global_coboundary(&Cochain::from_tensor(&geo.riemann)).apply_at(fields, p)
}

/// Residuals of the curvature identities at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CurvatureResiduals {
    /// `(∇_T R)(X,Y,Z,W) + (∇_Z R)(X,Y,W,T) + (∇_W R)(X,Y,T,Z)`
    pub bianchi_last_three: f64,
    /// `(∇_X R)(Y,Z,W,T) + (∇_Y R)(Z,X,W,T) + (∇_Z R)(X,Y,W,T)`
    pub bianchi_first_three: f64,
    /// `R(X,Y,Z,T) + R(Y,X,Z,T)`
    pub skew_first_pair: f64,
    /// `R(X,Y,Z,T) + R(X,Y,T,Z)`
    pub skew_last_pair: f64,
    /// `R(X,Y,Z,T) − R(Z,T,X,Y)`
    pub pair_symmetry: f64,
}

impl CurvatureResiduals {
    pub fn max_abs(&self) -> f64 {
        [
            self.bianchi_last_three,
            self.bianchi_first_three,
            self.skew_first_pair,
            self.skew_last_pair,
            self.pair_symmetry,
        ]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max_bianchi(&self) -> f64 {
        self.bianchi_last_three
            .abs()
            .max(self.bianchi_first_three.abs())
    }

    pub fn max_symmetry(&self) -> f64 {
        self.skew_first_pair
            .abs()
            .max(self.skew_last_pair.abs())
            .max(self.pair_symmetry.abs())
    }
}

/// Curvature identities evaluated on five fields `(X, Y, Z, W, T)` at `p`.
/// The symmetry residuals use `(X, Y, Z, T)`.
pub fn curvature_identity_residuals(
    geo: &Geometry,
    fields: &[VectorField],
    p: &Point,
) -> Result<CurvatureResiduals> {
    let [x, y, z, w, t] = fields else {
        return Err(Error::Arity {
            expected: 5,
            got: fields.len(),
        });
    };
    let nr = |dir: &VectorField, a, b, c, d| geo.nabla_r(dir, [a, b, c, d], p);
    let r = |a, b, c, d| geo.r([a, b, c, d], p);
    let base = r(x, y, z, t)?;
    Ok(CurvatureResiduals {
        bianchi_last_three: nr(t, x, y, z, w)? + nr(z, x, y, w, t)? + nr(w, x, y, t, z)?,
        bianchi_first_three: nr(x, y, z, w, t)? + nr(y, z, x, w, t)? + nr(z, x, y, w, t)?,
        skew_first_pair: base + r(y, x, z, t)?,
        skew_last_pair: base + r(x, y, t, z)?,
        pair_symmetry: base - r(z, t, x, y)?,
    })
}

/// Index form of [`curvature_identity_residuals`] on coordinate fields.
pub fn curvature_identity_residuals_at_indices(
    geo: &Geometry,
    indices: [usize; 5],
    p: &Point,
) -> Result<CurvatureResiduals> {
    let fields: Vec<VectorField> = indices
        .iter()
        .map(|&i| VectorField::coordinate(geo.chart(), i))
        .collect();
    curvature_identity_residuals(geo, &fields, p)
}

/// Both sides of `dg(X ⊗ Y ⊗ Z) = 2⟨Y, ∇_X Z⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricCoboundaryCheck {
    pub lhs_global: f64,
    pub lhs_local: f64,
    pub rhs: f64,
}

impl MetricCoboundaryCheck {
    pub fn residual(&self) -> f64 {
        (self.lhs_global - self.rhs)
            .abs()
            .max((self.lhs_local - self.rhs).abs())
    }
}

pub fn metric_coboundary_check(
    geo: &Geometry,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    p: &Point,
) -> Result<MetricCoboundaryCheck> {
    let g = geo.metric.tensor();
    let fields = [x.clone(), y.clone(), z.clone()];
    let lhs_global = global_coboundary(&Cochain::from_tensor(g)).apply_at(&fields, p)?;
    let lhs_local = apply_local(&local_coboundary(g)?, &fields, p)?;
    let rhs = 2.0 * geo.metric.inner_at(y, &geo.nabla(x, z)?, p)?;
    Ok(MetricCoboundaryCheck {
        lhs_global,
        lhs_local,
        rhs,
    })
}

/// `∇_X Y − ∇_Y X − [X, Y]`, zero for a torsion-free connection.
pub fn torsion(geo: &Geometry, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    geo.nabla(x, y)?
        .sub(&geo.nabla(y, x)?)?
        .sub(&lie_bracket(x, y)?)
}

/// `X⟨Y, Z⟩ − ⟨∇_X Y, Z⟩ − ⟨Y, ∇_X Z⟩` at `p`.
pub fn compatibility_residual(
    geo: &Geometry,
    x: &VectorField,
    y: &VectorField,
    z: &VectorField,
    p: &Point,
) -> Result<f64> {
    let g = &geo.metric;
    let lhs = crate::fields::lie_derivative(x, &g.inner(y, z)?)?.eval(p)?;
    Ok(lhs - g.inner_at(&geo.nabla(x, y)?, z, p)? - g.inner_at(y, &geo.nabla(x, z)?, p)?)
}

/// Components of `R` from nested covariant derivatives of coordinate fields.
/// Slow but independent of the component formula.
pub fn riemann_by_nesting(geo: &Geometry, idx: [usize; 4]) -> Result<ScalarField> {
    let chart = geo.chart();
    let e = |i| VectorField::coordinate(chart, i);
    let (x, y, z, w) = (e(idx[0]), e(idx[1]), e(idx[2]), e(idx[3]));
    let xyz = geo.nabla(&x, &geo.nabla(&y, &z)?)?;
    let yxz = geo.nabla(&y, &geo.nabla(&x, &z)?)?;
    let bracket = geo.nabla(&lie_bracket(&x, &y)?, &z)?;
    let v = xyz.sub(&yxz)?.sub(&bracket)?;
    geo.metric.inner(&v, &w)
}

/// All `R_{ijkl}` index tuples.
pub fn riemann_indices(n: usize) -> impl Iterator<Item = Vec<usize>> {
    MultiIndex::new(n, 4)
}
