//! Charts and the fields that live on them.

use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, Expr, Scope};

/// A coordinate chart `x : U -> R^n` represented by its coordinate names and
/// the closed box `x(U)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    names: Vec<String>,
    domain: Vec<(f64, f64)>,
}

impl Chart {
    pub fn new(names: Vec<String>, domain: Vec<(f64, f64)>) -> Result<Arc<Chart>> {
        if names.is_empty() {
            return Err(Error::InvalidChart("dimension must be at least 1".into()));
        }
        if names.len() != domain.len() {
            return Err(Error::InvalidChart(format!(
                "{} coordinates but {} domain intervals",
                names.len(),
                domain.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidChart(format!(
                    "duplicate coordinate `{name}`"
                )));
            }
        }
        for (i, &(lo, hi)) in domain.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo >= hi {
                return Err(Error::InvalidChart(format!("interval {i} is [{lo}, {hi}]")));
            }
        }
        Ok(Arc::new(Chart { names, domain }))
    }

    /// `x1, …, xn` on the cube `[lo, hi]^n`.
    pub fn cube(n: usize, lo: f64, hi: f64) -> Result<Arc<Chart>> {
        Chart::new(
            (1..=n).map(|i| format!("x{i}")).collect(),
            vec![(lo, hi); n],
        )
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        coords.len() == self.dim()
            && coords
                .iter()
                .zip(&self.domain)
                .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }

    pub fn point(&self, coords: Vec<f64>) -> Result<Point> {
        if coords.len() != self.dim() {
            return Err(Error::Arity {
                expected: self.dim(),
                got: coords.len(),
            });
        }
        if !self.contains(&coords) {
            return Err(Error::OutsideDomain(coords));
        }
        Ok(Point(coords))
    }

    /// Parses an expression over the chart coordinates plus `extra` names.
    pub fn parse(&self, text: &str, extra: &[&str]) -> Result<Expr> {
        let mut vars: Vec<&str> = self.names.iter().map(String::as_str).collect();
        vars.extend_from_slice(extra);
        Ok(parse_expr(text, &vars)?)
    }

    /// Bindings of the coordinate names to the entries of `coords`.
    pub fn scope<'a>(&'a self, coords: &'a [f64]) -> ChartScope<'a> {
        ChartScope {
            names: &self.names,
            coords,
        }
    }

    pub fn coordinate(&self, i: usize) -> Expr {
        Expr::var(&self.names[i])
    }
}

pub struct ChartScope<'a> {
    names: &'a [String],
    coords: &'a [f64],
}

impl Scope for ChartScope<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.coords[i])
    }
}

/// Coordinates of a point of the chart domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Point(pub Vec<f64>);

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

fn same_chart(a: &Arc<Chart>, b: &Arc<Chart>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ChartMismatch)
    }
}

fn check_vars(chart: &Chart, e: &Expr) -> Result<()> {
    for v in e.free_vars() {
        if !chart.names.contains(&v) {
            return Err(Error::InvalidArgument(format!(
                "`{v}` is not a coordinate of the chart"
            )));
        }
    }
    Ok(())
}

/// Iteration over `{0..n}^k` in row-major order, matching the flat storage
/// of [`TensorField`].
#[derive(Debug, Clone)]
pub struct MultiIndex {
    n: usize,
    current: Option<Vec<usize>>,
}

impl MultiIndex {
    pub fn new(n: usize, k: usize) -> Self {
        MultiIndex {
            n,
            current: if n == 0 && k > 0 {
                None
            } else {
                Some(vec![0; k])
            },
        }
    }

    pub fn flat(n: usize, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * n + i)
    }
}

impl Iterator for MultiIndex {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let mut next = out.clone();
        let mut slot = next.len();
        loop {
            if slot == 0 {
                self.current = None;
                break;
            }
            slot -= 1;
            next[slot] += 1;
            if next[slot] < self.n {
                self.current = Some(next);
                break;
            }
            next[slot] = 0;
        }
        Some(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    chart: Arc<Chart>,
    expr: Expr,
}

impl ScalarField {
    pub fn new(chart: &Arc<Chart>, expr: Expr) -> Result<Self> {
        check_vars(chart, &expr)?;
        Ok(ScalarField {
            chart: chart.clone(),
            expr,
        })
    }

    pub(crate) fn new_unchecked(chart: &Arc<Chart>, expr: Expr) -> Self {
        ScalarField {
            chart: chart.clone(),
            expr,
        }
    }

    pub fn parse(chart: &Arc<Chart>, text: &str) -> Result<Self> {
        Ok(ScalarField {
            chart: chart.clone(),
            expr: chart.parse(text, &[])?,
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn into_expr(self) -> Expr {
        self.expr
    }

    pub fn eval(&self, p: &Point) -> Result<f64> {
        Ok(self.expr.eval(&self.chart.scope(&p.0))?)
    }

    pub fn partial(&self, i: usize) -> ScalarField {
        ScalarField::new_unchecked(&self.chart, self.expr.diff(&self.chart.names[i]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    chart: Arc<Chart>,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>) -> Result<Self> {
        if components.len() != chart.dim() {
            return Err(Error::Arity {
                expected: chart.dim(),
                got: components.len(),
            });
        }
        for c in &components {
            check_vars(chart, c)?;
        }
        Ok(VectorField {
            chart: chart.clone(),
            components,
        })
    }

    pub(crate) fn new_unchecked(chart: &Arc<Chart>, components: Vec<Expr>) -> Self {
        VectorField {
            chart: chart.clone(),
            components,
        }
    }

    pub fn parse<S: AsRef<str>>(chart: &Arc<Chart>, components: &[S]) -> Result<Self> {
        let exprs = components
            .iter()
            .map(|c| chart.parse(c.as_ref(), &[]))
            .collect::<Result<Vec<_>>>()?;
        VectorField::new(chart, exprs)
    }

    /// The coordinate field `∂/∂x^i`.
    pub fn coordinate(chart: &Arc<Chart>, i: usize) -> Self {
        let components = (0..chart.dim())
            .map(|j| if i == j { Expr::one() } else { Expr::zero() })
            .collect();
        VectorField {
            chart: chart.clone(),
            components,
        }
    }

    pub fn constant(chart: &Arc<Chart>, values: &[f64]) -> Result<Self> {
        VectorField::new(chart, values.iter().map(|&v| Expr::constant(v)).collect())
    }

    pub fn zero(chart: &Arc<Chart>) -> Self {
        VectorField {
            chart: chart.clone(),
            components: vec![Expr::zero(); chart.dim()],
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }

    /// `f·X` for a scalar expression `f` on the same chart.
    pub fn scaled(&self, f: &Expr) -> VectorField {
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(|c| f * c).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        same_chart(&self.chart, &other.chart)?;
        Ok(VectorField {
            chart: self.chart.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn eval(&self, p: &Point) -> Result<Vec<f64>> {
        let scope = self.chart.scope(&p.0);
        self.components
            .iter()
            .map(|c| Ok(c.eval(&scope)?))
            .collect()
    }

    /// Derivative of every component along `∂/∂x^i`.
    pub fn partial(&self, i: usize) -> VectorField {
        let var = &self.chart.names[i];
        VectorField {
            chart: self.chart.clone(),
            components: self.components.iter().map(|c| c.diff(var)).collect(),
        }
    }
}

/// Lie derivative `X(f) = Σ_i X^i ∂f/∂x^i`, kept symbolic.
pub fn lie_derivative(x: &VectorField, f: &ScalarField) -> Result<ScalarField> {
    same_chart(&x.chart, &f.chart)?;
    Ok(ScalarField::new_unchecked(
        &x.chart,
        derive_along(x, &f.expr),
    ))
}

pub(crate) fn derive_along(x: &VectorField, f: &Expr) -> Expr {
    Expr::sum(
        x.components
            .iter()
            .zip(&x.chart.names)
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, name)| {
                let d = f.diff(name);
                c * d
            }),
    )
}

/// `[X, Y]^i = Σ_j (X^j ∂_j Y^i − Y^j ∂_j X^i)`.
pub fn lie_bracket(x: &VectorField, y: &VectorField) -> Result<VectorField> {
    same_chart(&x.chart, &y.chart)?;
    let components = x
        .components
        .iter()
        .zip(&y.components)
        .map(|(xi, yi)| derive_along(x, yi) - derive_along(y, xi))
        .collect();
    Ok(VectorField::new_unchecked(&x.chart, components))
}

/// A k-tensor `Σ_I a_I dx^{i_1} ⊗ … ⊗ dx^{i_k}` with dense coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorField {
    chart: Arc<Chart>,
    rank: usize,
    coeffs: Vec<Expr>,
}

impl TensorField {
    /// `coeffs` are in row-major multi-index order, `n^rank` entries.
    pub fn new(chart: &Arc<Chart>, rank: usize, coeffs: Vec<Expr>) -> Result<Self> {
        let expected = chart.dim().pow(rank as u32);
        if coeffs.len() != expected {
            return Err(Error::InvalidArgument(format!(
                "rank-{rank} tensor on a {}-dimensional chart needs {expected} coefficients, got {}",
                chart.dim(),
                coeffs.len()
            )));
        }
        for c in &coeffs {
            check_vars(chart, c)?;
        }
        Ok(TensorField {
            chart: chart.clone(),
            rank,
            coeffs,
        })
    }

    pub fn zeros(chart: &Arc<Chart>, rank: usize) -> Self {
        TensorField {
            chart: chart.clone(),
            rank,
            coeffs: vec![Expr::zero(); chart.dim().pow(rank as u32)],
        }
    }

    /// Builds a tensor from a coefficient function of the multi-index.
    pub fn from_fn(chart: &Arc<Chart>, rank: usize, mut f: impl FnMut(&[usize]) -> Expr) -> Self {
        let coeffs = MultiIndex::new(chart.dim(), rank)
            .map(|idx| f(&idx))
            .collect();
        TensorField {
            chart: chart.clone(),
            rank,
            coeffs,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn coeffs(&self) -> &[Expr] {
        &self.coeffs
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        &self.coeffs[MultiIndex::flat(self.dim(), idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: Expr) {
        let n = self.dim();
        self.coeffs[MultiIndex::flat(n, idx)] = value;
    }

    pub fn indices(&self) -> MultiIndex {
        MultiIndex::new(self.dim(), self.rank)
    }

    pub fn eval_coeffs(&self, p: &Point) -> Result<Vec<f64>> {
        let scope = self.chart.scope(&p.0);
        self.coeffs.iter().map(|c| Ok(c.eval(&scope)?)).collect()
    }

    fn check_args(&self, fields: &[VectorField]) -> Result<()> {
        if fields.len() != self.rank {
            return Err(Error::Arity {
                expected: self.rank,
                got: fields.len(),
            });
        }
        for f in fields {
            same_chart(&self.chart, &f.chart)?;
        }
        Ok(())
    }

    /// `ω(X_1(p) ⊗ … ⊗ X_k(p))`.
    pub fn apply(&self, fields: &[VectorField], p: &Point) -> Result<f64> {
        self.check_args(fields)?;
        let values = fields
            .iter()
            .map(|f| f.eval(p))
            .collect::<Result<Vec<_>>>()?;
        let scope = self.chart.scope(&p.0);
        let mut total = 0.0;
        for (idx, coeff) in self.indices().zip(&self.coeffs) {
            if coeff.is_zero() {
                continue;
            }
            let weight: f64 = idx.iter().zip(&values).map(|(&i, v)| v[i]).product();
            if weight != 0.0 {
                total += coeff.eval(&scope)? * weight;
            }
        }
        Ok(total)
    }

    /// Symbolic `ω(X_1 ⊗ … ⊗ X_k)` as a scalar field.
    pub fn apply_symbolic(&self, fields: &[VectorField]) -> Result<ScalarField> {
        self.check_args(fields)?;
        let terms = self.indices().zip(&self.coeffs).filter_map(|(idx, coeff)| {
            if coeff.is_zero() {
                return None;
            }
            let parts: Vec<&Expr> = idx
                .iter()
                .zip(fields)
                .map(|(&i, f)| &f.components[i])
                .collect();
            if parts.iter().any(|e| e.is_zero()) {
                return None;
            }
            Some(Expr::product(
                std::iter::once(coeff.clone()).chain(parts.into_iter().cloned()),
            ))
        });
        Ok(ScalarField::new_unchecked(&self.chart, Expr::sum(terms)))
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> TensorField {
        TensorField {
            chart: self.chart.clone(),
            rank: self.rank,
            coeffs: self.coeffs.iter().map(f).collect(),
        }
    }

    /// Largest absolute coefficient value at `p`.
    pub fn max_abs_at(&self, p: &Point) -> Result<f64> {
        Ok(self
            .eval_coeffs(p)?
            .into_iter()
            .fold(0.0, |m, v| m.max(v.abs())))
    }
}

/// Smooth cutoff equal to 1 on `‖x − center‖ ≤ r1` and 0 on `‖x − center‖ ≥ r2`.
///
/// The squared distance is mapped affinely so that `r1 ↦ 1` and `r2 ↦ 2`,
/// which keeps the field smooth at the center.
pub fn bump_field(chart: &Arc<Chart>, center: &Point, r1: f64, r2: f64) -> Result<ScalarField> {
    if !(0.0 < r1 && r1 < r2) {
        return Err(Error::InvalidArgument(format!(
            "bump radii must satisfy 0 < r1 < r2, got {r1}, {r2}"
        )));
    }
    if center.0.len() != chart.dim() {
        return Err(Error::Arity {
            expected: chart.dim(),
            got: center.0.len(),
        });
    }
    for (&c, &(lo, hi)) in center.0.iter().zip(&chart.domain) {
        if c - r2 < lo || c + r2 > hi {
            return Err(Error::InvalidArgument(format!(
                "ball of radius {r2} about {:?} leaves the chart domain",
                center.0
            )));
        }
    }
    let dist2 = Expr::sum(
        center
            .0
            .iter()
            .enumerate()
            .map(|(i, &c)| Expr::powi(chart.coordinate(i) - c, 2)),
    );
    let u = 1.0 + (dist2 - r1 * r1) / (r2 * r2 - r1 * r1);
    Ok(ScalarField::new_unchecked(chart, u.bump()))
}
