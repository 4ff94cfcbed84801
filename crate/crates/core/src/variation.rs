//! Functionals of tensors along curves and immersed squares, and their first
//! variations.
//!
//! A family `α(s, ·)` is a boundary-fixed deformation of `γ = α(0, ·)`. The
//! exact first variation integrates the Euler-Lagrange coefficients against
//! `V = ∂α/∂s|_{s=0}`; those coefficients are taken from the coboundary
//! (`L(ω)` and, for 2-tensors, the symmetric derivative-term coefficient).
//! The numeric route differentiates `s ↦ J(α(s))` by central differences.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{Chart, MultiIndex, Point, TensorField, VectorField};
use crate::leibniz::{coboundary_tensor_part, global_coboundary, local_coboundary, Cochain};
use crate::quadrature::QuadratureRule;
use crate::riemann::{ConnectionCoefficients, MetricTensor};
use crate::sampling::Sampler;

pub const S: &str = "s";
pub const T: &str = "t";
pub const T1: &str = "t1";
pub const T2: &str = "t2";

const BOUNDARY_TOL: f64 = 1e-12;
const CHECK_S: usize = 5;
const CHECK_T: usize = 17;

/// Components written in parameter variables, e.g. `γ(t)` or `γ(t1, t2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParametricField {
    params: Vec<&'static str>,
    components: Vec<Expr>,
}

impl ParametricField {
    pub fn params(&self) -> &[&'static str] {
        &self.params
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn eval(&self, values: &[f64]) -> Result<Vec<f64>> {
        let scope: Vec<(&str, f64)> = self
            .params
            .iter()
            .copied()
            .zip(values.iter().copied())
            .collect();
        self.components
            .iter()
            .map(|c| Ok(c.eval(&scope)?))
            .collect()
    }

    /// Largest component magnitude on a uniform grid of `per_axis` samples
    /// per parameter, endpoints included.
    pub fn max_abs_on_grid(&self, per_axis: usize) -> Result<f64> {
        let mut worst = 0.0f64;
        for values in grid(self.params.len(), per_axis) {
            for v in self.eval(&values)? {
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    }
}

fn grid(dims: usize, per_axis: usize) -> impl Iterator<Item = Vec<f64>> {
    let step = 1.0 / (per_axis.max(2) - 1) as f64;
    MultiIndex::new(per_axis.max(2), dims)
        .map(move |idx| idx.iter().map(|&i| i as f64 * step).collect())
}

fn check_params(chart: &Chart, components: &[Expr], allowed: &[&str]) -> Result<()> {
    if components.len() != chart.dim() {
        return Err(Error::Arity {
            expected: chart.dim(),
            got: components.len(),
        });
    }
    if let Some(clash) = chart
        .names()
        .iter()
        .find(|n| [S, T, T1, T2].contains(&n.as_str()))
    {
        return Err(Error::InvalidFamily(format!(
            "coordinate `{clash}` clashes with a family parameter"
        )));
    }
    for c in components {
        if let Some(v) = c
            .free_vars()
            .into_iter()
            .find(|v| !allowed.contains(&v.as_str()))
        {
            return Err(Error::InvalidFamily(format!(
                "unexpected variable `{v}` in `{c}`"
            )));
        }
    }
    Ok(())
}

fn check_image(chart: &Chart, image: &ParametricField, per_axis: usize) -> Result<()> {
    for values in grid(image.params.len(), per_axis) {
        let p = image.eval(&values)?;
        if !chart.contains(&p) {
            return Err(Error::OutsideDomain(p));
        }
    }
    Ok(())
}

/// A parameterized curve `t ↦ γ(t)`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    chart: Arc<Chart>,
    position: ParametricField,
    velocity: ParametricField,
    acceleration: ParametricField,
}

impl Curve {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>) -> Result<Self> {
        check_params(chart, &components, &[T])?;
        let curve = Curve::build(chart, components);
        check_image(chart, &curve.position, CHECK_T)?;
        Ok(curve)
    }

    pub fn parse<Str: AsRef<str>>(chart: &Arc<Chart>, components: &[Str]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| chart.parse(c.as_ref(), &[T]))
            .collect::<Result<Vec<_>>>()?;
        Curve::new(chart, comps)
    }

    fn build(chart: &Arc<Chart>, components: Vec<Expr>) -> Self {
        let velocity: Vec<Expr> = components.iter().map(|c| c.diff(T)).collect();
        let acceleration = velocity.iter().map(|c| c.diff(T)).collect();
        Curve {
            chart: chart.clone(),
            position: ParametricField {
                params: vec![T],
                components,
            },
            velocity: ParametricField {
                params: vec![T],
                components: velocity,
            },
            acceleration: ParametricField {
                params: vec![T],
                components: acceleration,
            },
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn position(&self) -> &ParametricField {
        &self.position
    }

    pub fn velocity(&self) -> &ParametricField {
        &self.velocity
    }

    pub fn acceleration(&self) -> &ParametricField {
        &self.acceleration
    }

    pub fn point(&self, t: f64) -> Result<Point> {
        self.chart.point(self.position.eval(&[t])?)
    }
}

/// A parameterized square `(t1, t2) ↦ γ(t1, t2)` on `[0, 1]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct Surface {
    chart: Arc<Chart>,
    position: ParametricField,
    d1: ParametricField,
    d2: ParametricField,
    d12: ParametricField,
}

impl Surface {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>) -> Result<Self> {
        check_params(chart, &components, &[T1, T2])?;
        let surface = Surface::build(chart, components);
        check_image(chart, &surface.position, CHECK_T)?;
        Ok(surface)
    }

    pub fn parse<Str: AsRef<str>>(chart: &Arc<Chart>, components: &[Str]) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| chart.parse(c.as_ref(), &[T1, T2]))
            .collect::<Result<Vec<_>>>()?;
        Surface::new(chart, comps)
    }

    fn build(chart: &Arc<Chart>, components: Vec<Expr>) -> Self {
        let params = vec![T1, T2];
        let d1: Vec<Expr> = components.iter().map(|c| c.diff(T1)).collect();
        let d2 = components.iter().map(|c| c.diff(T2)).collect();
        let d12 = d1.iter().map(|c| c.diff(T2)).collect();
        let field = |components| ParametricField {
            params: params.clone(),
            components,
        };
        Surface {
            chart: chart.clone(),
            position: field(components),
            d1: field(d1),
            d2: field(d2),
            d12: field(d12),
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn position(&self) -> &ParametricField {
        &self.position
    }

    /// `∂γ/∂t1`
    pub fn d1(&self) -> &ParametricField {
        &self.d1
    }

    /// `∂γ/∂t2`
    pub fn d2(&self) -> &ParametricField {
        &self.d2
    }

    /// `∂²γ/∂t1∂t2`
    pub fn d12(&self) -> &ParametricField {
        &self.d12
    }
}

fn at_s(components: &[Expr], s: f64) -> Vec<Expr> {
    let value = Expr::constant(s);
    components.iter().map(|c| c.subst(S, &value)).collect()
}

fn variation_field(components: &[Expr], params: Vec<&'static str>) -> ParametricField {
    ParametricField {
        params,
        components: at_s(
            &components.iter().map(|c| c.diff(S)).collect::<Vec<_>>(),
            0.0,
        ),
    }
}

/// Checks `∂α/∂s = 0` on the parameter boundary for sampled `s`.
fn check_fixed_boundary(components: &[Expr], params: &[&str], epsilon: f64) -> Result<()> {
    let ds: Vec<Expr> = components.iter().map(|c| c.diff(S)).collect();
    let dims = params.len();
    for si in 0..CHECK_S {
        let s = -epsilon + 2.0 * epsilon * si as f64 / (CHECK_S - 1) as f64;
        for values in grid(dims, CHECK_T) {
            let on_boundary = values.iter().any(|&v| v == 0.0 || v == 1.0);
            if !on_boundary {
                continue;
            }
            let mut scope: Vec<(&str, f64)> =
                params.iter().copied().zip(values.iter().copied()).collect();
            scope.push((S, s));
            for d in &ds {
                let v = d.eval(&scope)?;
                if v.abs() > BOUNDARY_TOL {
                    return Err(Error::InvalidFamily(format!(
                        "boundary moves: ∂α/∂s = {v} at s = {s}, {params:?} = {values:?}"
                    )));
                }
            }
        }
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidFamily(format!(
            "s-interval half-width must be positive, got {epsilon}"
        )));
    }
    Ok(())
}

/// A boundary-fixed variation `α(s, t)` of a curve, `s ∈ (−ε, ε)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveFamily {
    chart: Arc<Chart>,
    components: Vec<Expr>,
    epsilon: f64,
}

impl CurveFamily {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_params(chart, &components, &[S, T])?;
        check_fixed_boundary(&components, &[T], epsilon)?;
        let family = CurveFamily {
            chart: chart.clone(),
            components,
            epsilon,
        };
        for si in 0..CHECK_S {
            let s = -epsilon + 2.0 * epsilon * si as f64 / (CHECK_S - 1) as f64;
            family.at(s)?;
        }
        Ok(family)
    }

    pub fn parse<Str: AsRef<str>>(
        chart: &Arc<Chart>,
        components: &[Str],
        epsilon: f64,
    ) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| chart.parse(c.as_ref(), &[S, T]))
            .collect::<Result<Vec<_>>>()?;
        CurveFamily::new(chart, comps, epsilon)
    }

    /// A random boundary-fixed family inside the middle half of the chart box:
    /// a bent segment deformed by `s·t(1−t)·(c + d·t)`.
    pub fn random(sampler: &mut Sampler, chart: &Arc<Chart>, epsilon: f64) -> Result<Self> {
        let t = Expr::var(T);
        let bubble = &t * (1.0 - &t);
        let comps = chart
            .domain()
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                let mid = |s: &mut Sampler| s.uniform(lo + 0.3 * w, hi - 0.3 * w);
                let (a, b) = (mid(sampler), mid(sampler));
                let bend = sampler.uniform(-0.2, 0.2) * w;
                let c = sampler.uniform(-0.3, 0.3) * w / epsilon;
                let d = sampler.uniform(-0.3, 0.3) * w / epsilon;
                a + (b - a) * &t + bend * &bubble + Expr::var(S) * &bubble * (c + d * &t)
            })
            .collect();
        CurveFamily::new(chart, comps, epsilon)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    /// The member curve `α(s, ·)`.
    pub fn at(&self, s: f64) -> Result<Curve> {
        Curve::new(&self.chart, at_s(&self.components, s))
    }

    /// `V = ∂α/∂s` at `s = 0`, as a function of `t`.
    pub fn variation(&self) -> ParametricField {
        variation_field(&self.components, vec![T])
    }
}

/// A boundary-fixed variation `α(s, t1, t2)` of a square.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFamily {
    chart: Arc<Chart>,
    components: Vec<Expr>,
    epsilon: f64,
}

impl SurfaceFamily {
    pub fn new(chart: &Arc<Chart>, components: Vec<Expr>, epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        check_params(chart, &components, &[S, T1, T2])?;
        check_fixed_boundary(&components, &[T1, T2], epsilon)?;
        let family = SurfaceFamily {
            chart: chart.clone(),
            components,
            epsilon,
        };
        for si in 0..CHECK_S {
            let s = -epsilon + 2.0 * epsilon * si as f64 / (CHECK_S - 1) as f64;
            family.at(s)?;
        }
        Ok(family)
    }

    pub fn parse<Str: AsRef<str>>(
        chart: &Arc<Chart>,
        components: &[Str],
        epsilon: f64,
    ) -> Result<Self> {
        let comps = components
            .iter()
            .map(|c| chart.parse(c.as_ref(), &[S, T1, T2]))
            .collect::<Result<Vec<_>>>()?;
        SurfaceFamily::new(chart, comps, epsilon)
    }

    /// A random boundary-fixed family inside the middle of the chart box:
    /// a bilinear patch deformed by `s·t1(1−t1)t2(1−t2)·(f + g·t1 + h·t2)`.
    pub fn random(sampler: &mut Sampler, chart: &Arc<Chart>, epsilon: f64) -> Result<Self> {
        SurfaceFamily::random_with(sampler, chart, epsilon, true)
    }

    /// As [`SurfaceFamily::random`] over an affine square (`∂²γ/∂t1∂t2 = 0`).
    pub fn random_affine(sampler: &mut Sampler, chart: &Arc<Chart>, epsilon: f64) -> Result<Self> {
        SurfaceFamily::random_with(sampler, chart, epsilon, false)
    }

    fn random_with(
        sampler: &mut Sampler,
        chart: &Arc<Chart>,
        epsilon: f64,
        twisted: bool,
    ) -> Result<Self> {
        let (t1, t2) = (Expr::var(T1), Expr::var(T2));
        let bubble = &t1 * (1.0 - &t1) * &t2 * (1.0 - &t2);
        let comps = chart
            .domain()
            .iter()
            .map(|&(lo, hi)| {
                let w = hi - lo;
                let a = sampler.uniform(lo + 0.35 * w, hi - 0.35 * w);
                let mut coef = |scale: f64| sampler.uniform(-scale, scale) * w;
                let (b, c) = (coef(0.1), coef(0.1));
                let e = if twisted { coef(0.1) } else { 0.0 };
                let (f, g, h) = (
                    coef(1.0) / epsilon,
                    coef(1.0) / epsilon,
                    coef(1.0) / epsilon,
                );
                a + b * &t1
                    + c * &t2
                    + e * &t1 * &t2
                    + Expr::var(S) * &bubble * (f + g * &t1 + h * &t2)
            })
            .collect();
        SurfaceFamily::new(chart, comps, epsilon)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn components(&self) -> &[Expr] {
        &self.components
    }

    pub fn at(&self, s: f64) -> Result<Surface> {
        Surface::new(&self.chart, at_s(&self.components, s))
    }

    pub fn variation(&self) -> ParametricField {
        variation_field(&self.components, vec![T1, T2])
    }
}

/// Either kind of family.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Curve(CurveFamily),
    Surface(SurfaceFamily),
}

impl From<CurveFamily> for Family {
    fn from(f: CurveFamily) -> Self {
        Family::Curve(f)
    }
}

impl From<SurfaceFamily> for Family {
    fn from(f: SurfaceFamily) -> Self {
        Family::Surface(f)
    }
}

impl Family {
    pub fn epsilon(&self) -> f64 {
        match self {
            Family::Curve(f) => f.epsilon,
            Family::Surface(f) => f.epsilon,
        }
    }

    pub fn chart(&self) -> &Arc<Chart> {
        match self {
            Family::Curve(f) => &f.chart,
            Family::Surface(f) => &f.chart,
        }
    }
}

fn require_rank(omega: &TensorField, rank: usize) -> Result<()> {
    if omega.rank() != rank {
        return Err(Error::Rank {
            expected: rank.to_string(),
            got: omega.rank(),
        });
    }
    Ok(())
}

fn require_chart(omega: &TensorField, chart: &Arc<Chart>) -> Result<()> {
    if **omega.chart() != **chart {
        return Err(Error::ChartMismatch);
    }
    Ok(())
}

fn eval_at(coeffs: &[Expr], chart: &Chart, p: &[f64]) -> Result<Vec<f64>> {
    if !chart.contains(p) {
        return Err(Error::OutsideDomain(p.to_vec()));
    }
    let scope = chart.scope(p);
    coeffs.iter().map(|c| Ok(c.eval(&scope)?)).collect()
}

/// `J(γ) = ∫₀¹ ω(dγ/dt) dt`.
pub fn functional_curve(omega: &TensorField, curve: &Curve, rule: &QuadratureRule) -> Result<f64> {
    require_rank(omega, 1)?;
    require_chart(omega, curve.chart())?;
    let chart = curve.chart();
    rule.integrate(|t| {
        let a = eval_at(omega.coeffs(), chart, &curve.position.eval(&[t])?)?;
        let v = curve.velocity.eval(&[t])?;
        Ok(a.iter().zip(&v).map(|(a, v)| a * v).sum())
    })
}

/// `J(γ) = ∫∫ Σ a_{ij}(γ) ∂γ^i/∂t1 ∂γ^j/∂t2 dt1 dt2`.
pub fn functional_surface(
    omega: &TensorField,
    surface: &Surface,
    rule: &QuadratureRule,
) -> Result<f64> {
    require_rank(omega, 2)?;
    require_chart(omega, surface.chart())?;
    let chart = surface.chart();
    let n = chart.dim();
    rule.integrate_square(|t1, t2| {
        let a = eval_at(omega.coeffs(), chart, &surface.position.eval(&[t1, t2])?)?;
        let (u, v) = (surface.d1.eval(&[t1, t2])?, surface.d2.eval(&[t1, t2])?);
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total += a[i * n + j] * u[i] * v[j];
            }
        }
        Ok(total)
    })
}

/// Per-direction Euler-Lagrange coefficients of a 1-tensor as chart
/// expressions: `E_ℓ = Σ_i L(ω)_{ℓ i} γ̇^i`, with `L(ω)_{ℓi} = ∂a_i/∂x^ℓ − ∂a_ℓ/∂x^i`.
struct CurveCoefficients {
    tensor_part: Vec<Expr>,
}

impl CurveCoefficients {
    fn new(omega: &TensorField) -> Result<Self> {
        require_rank(omega, 1)?;
        Ok(CurveCoefficients {
            tensor_part: coboundary_tensor_part(omega)?.coeffs().to_vec(),
        })
    }

    fn residual(&self, n: usize, l: &[f64], velocity: &[f64], ell: usize) -> f64 {
        (0..n).map(|i| l[ell * n + i] * velocity[i]).sum()
    }
}

/// Euler-Lagrange coefficients of a 2-tensor:
/// `E_ℓ = −Σ_{ij} L(ω)_{iℓj} ∂₁γ^i ∂₂γ^j − Σ_j (a_{ℓj} + a_{jℓ}) ∂₁₂γ^j`.
struct SurfaceCoefficients {
    tensor_part: Vec<Expr>,
    symmetric: Vec<Expr>,
}

impl SurfaceCoefficients {
    fn new(omega: &TensorField) -> Result<Self> {
        require_rank(omega, 2)?;
        let n = omega.dim();
        let local = local_coboundary(omega)?;
        // a single derivative term: contraction slot 0, derivative slot 2
        let [deriv] = local.deriv_terms.as_slice() else {
            return Err(Error::InvalidArgument(
                "unexpected derivative-term structure".into(),
            ));
        };
        let sign = Expr::constant(deriv.sign as f64);
        let symmetric = MultiIndex::new(n, 2)
            .map(|idx| &sign * deriv.coeff(n, idx[0], &idx[1..]))
            .collect();
        Ok(SurfaceCoefficients {
            tensor_part: local.tensor_part.coeffs().to_vec(),
            symmetric,
        })
    }

    fn residual(&self, n: usize, l: &[f64], sym: &[f64], d: [&[f64]; 3], ell: usize) -> f64 {
        let [u, v, w] = d;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                total -= l[(i * n + ell) * n + j] * u[i] * v[j];
            }
        }
        for j in 0..n {
            total -= sym[ell * n + j] * w[j];
        }
        total
    }
}

/// `dJ(α(s))/ds` at `s = 0`, by quadrature of the Euler-Lagrange integrand
/// paired with the variation field.
pub fn first_variation_exact(
    omega: &TensorField,
    family: &Family,
    rule: &QuadratureRule,
) -> Result<f64> {
    require_chart(omega, family.chart())?;
    let chart = family.chart();
    let n = chart.dim();
    match family {
        Family::Curve(f) => {
            let coeffs = CurveCoefficients::new(omega)?;
            let curve = f.at(0.0)?;
            let v = f.variation();
            rule.integrate(|t| {
                let l = eval_at(&coeffs.tensor_part, chart, &curve.position.eval(&[t])?)?;
                let vel = curve.velocity.eval(&[t])?;
                let var = v.eval(&[t])?;
                Ok((0..n)
                    .map(|ell| var[ell] * coeffs.residual(n, &l, &vel, ell))
                    .sum())
            })
        }
        Family::Surface(f) => {
            let coeffs = SurfaceCoefficients::new(omega)?;
            let surface = f.at(0.0)?;
            let v = f.variation();
            rule.integrate_square(|t1, t2| {
                let at = [t1, t2];
                let p = surface.position.eval(&at)?;
                let l = eval_at(&coeffs.tensor_part, chart, &p)?;
                let sym = eval_at(&coeffs.symmetric, chart, &p)?;
                let (d1, d2, d12) = (
                    surface.d1.eval(&at)?,
                    surface.d2.eval(&at)?,
                    surface.d12.eval(&at)?,
                );
                let var = v.eval(&at)?;
                Ok((0..n)
                    .map(|ell| var[ell] * coeffs.residual(n, &l, &sym, [&d1, &d2, &d12], ell))
                    .sum())
            })
        }
    }
}

/// `J(α(s))` for one member of the family.
pub fn functional_at(
    omega: &TensorField,
    family: &Family,
    rule: &QuadratureRule,
    s: f64,
) -> Result<f64> {
    match family {
        Family::Curve(f) => functional_curve(omega, &f.at(s)?, rule),
        Family::Surface(f) => functional_surface(omega, &f.at(s)?, rule),
    }
}

/// `(J(α(h)) − J(α(−h))) / 2h`.
pub fn central_difference(
    omega: &TensorField,
    family: &Family,
    rule: &QuadratureRule,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h < family.epsilon()) {
        return Err(Error::InvalidArgument(format!(
            "step {h} outside the family's s-interval (0, {})",
            family.epsilon()
        )));
    }
    let plus = functional_at(omega, family, rule, h)?;
    let minus = functional_at(omega, family, rule, -h)?;
    Ok((plus - minus) / (2.0 * h))
}

/// Central difference with one Richardson step: `(4·D(h/2) − D(h)) / 3`.
pub fn first_variation_numeric(
    omega: &TensorField,
    family: &Family,
    rule: &QuadratureRule,
    h: f64,
) -> Result<f64> {
    let coarse = central_difference(omega, family, rule, h)?;
    let fine = central_difference(omega, family, rule, h / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// Substitutes the parameterization into chart expressions.
fn pull_back(exprs: &[Expr], chart: &Chart, position: &ParametricField) -> Vec<Expr> {
    let map: Vec<(&str, Expr)> = chart
        .names()
        .iter()
        .map(String::as_str)
        .zip(position.components.iter().cloned())
        .collect();
    exprs.iter().map(|e| e.subst_all(&map)).collect()
}

/// Euler-Lagrange residuals `E_ℓ` along a curve, as expressions in `t`.
/// The curve is extremal for every boundary-fixed variation iff all vanish.
pub fn euler_lagrange_residual_curve(
    omega: &TensorField,
    curve: &Curve,
) -> Result<ParametricField> {
    require_chart(omega, curve.chart())?;
    let coeffs = CurveCoefficients::new(omega)?;
    let n = curve.chart.dim();
    let l = pull_back(&coeffs.tensor_part, &curve.chart, &curve.position);
    let vel = &curve.velocity.components;
    let components = (0..n)
        .map(|ell| Expr::sum((0..n).map(|i| &l[ell * n + i] * &vel[i])))
        .collect();
    Ok(ParametricField {
        params: vec![T],
        components,
    })
}

/// Euler-Lagrange residuals `E_ℓ` over a square, as expressions in `t1, t2`.
pub fn euler_lagrange_residual_surface(
    omega: &TensorField,
    surface: &Surface,
) -> Result<ParametricField> {
    require_chart(omega, surface.chart())?;
    let coeffs = SurfaceCoefficients::new(omega)?;
    let n = surface.chart.dim();
    let l = pull_back(&coeffs.tensor_part, &surface.chart, &surface.position);
    let sym = pull_back(&coeffs.symmetric, &surface.chart, &surface.position);
    let (u, v, w) = (
        &surface.d1.components,
        &surface.d2.components,
        &surface.d12.components,
    );
    let components = (0..n)
        .map(|ell| {
            let tensor = Expr::sum(
                MultiIndex::new(n, 2)
                    .map(|ij| &l[(ij[0] * n + ell) * n + ij[1]] * &u[ij[0]] * &v[ij[1]]),
            );
            let symmetric = Expr::sum((0..n).map(|j| &sym[ell * n + j] * &w[j]));
            -tensor - symmetric
        })
        .collect();
    Ok(ParametricField {
        params: vec![T1, T2],
        components,
    })
}

/// Dispatches on the tensor rank: curves for 1-tensors, squares for 2-tensors.
pub enum Extremal<'a> {
    Curve(&'a Curve),
    Surface(&'a Surface),
}

pub fn euler_lagrange_residual(
    omega: &TensorField,
    gamma: Extremal<'_>,
) -> Result<ParametricField> {
    match (omega.rank(), gamma) {
        (1, Extremal::Curve(c)) => euler_lagrange_residual_curve(omega, c),
        (2, Extremal::Surface(s)) => euler_lagrange_residual_surface(omega, s),
        (k, _) => Err(Error::Rank {
            expected: "1 with a curve or 2 with a surface".into(),
            got: k,
        }),
    }
}

/// `(∇_{γ'}γ')^m = γ̈^m + Σ_{ij} Γ^m_{ij}(γ) γ̇^i γ̇^j`, as expressions in `t`.
pub fn geodesic_residual(g: &MetricTensor, curve: &Curve) -> Result<ParametricField> {
    if **g.chart() != *curve.chart {
        return Err(Error::ChartMismatch);
    }
    let n = g.dim();
    let conn = ConnectionCoefficients::levi_civita(g);
    let gamma = pull_back(conn.values(), &curve.chart, &curve.position);
    let (vel, acc) = (&curve.velocity.components, &curve.acceleration.components);
    let components = (0..n)
        .map(|m| {
            &acc[m]
                + Expr::sum(
                    MultiIndex::new(n, 2)
                        .map(|ij| &gamma[(m * n + ij[0]) * n + ij[1]] * &vel[ij[0]] * &vel[ij[1]]),
                )
        })
        .collect();
    Ok(ParametricField {
        params: vec![T],
        components,
    })
}

/// One sample of the arc-length pairing `½ dg(X ⊗ Y ⊗ X) = ⟨Y, ∇_X X⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairingSample {
    pub t: f64,
    /// `½ dg(X ⊗ Y ⊗ X)` at `γ(t)`
    pub coboundary: f64,
    /// `⟨Y, ∇_X X⟩` at `γ(t)`
    pub connection: f64,
    /// `⟨Y, ∇_{γ'}γ'⟩` from [`geodesic_residual`]
    pub along_curve: f64,
}

impl PairingSample {
    pub fn residual(&self) -> f64 {
        (self.coboundary - self.connection)
            .abs()
            .max((self.connection - self.along_curve).abs())
    }
}

/// Checks the arc-length pairing at `samples` interior values of `t`.
/// `velocity_extension` must restrict to `γ'` along the curve; it is the
/// caller's extension, never invented here.
pub fn arc_length_pairing(
    g: &MetricTensor,
    curve: &Curve,
    velocity_extension: &VectorField,
    y: &VectorField,
    samples: usize,
) -> Result<Vec<PairingSample>> {
    let conn = ConnectionCoefficients::levi_civita(g);
    let x = velocity_extension;
    let dg = global_coboundary(&Cochain::from_tensor(g.tensor())).apply(&[
        x.clone(),
        y.clone(),
        x.clone(),
    ])?;
    let accel_field = conn.covariant_derivative(x, x)?;
    let geodesic = geodesic_residual(g, curve)?;
    (1..=samples)
        .map(|i| {
            let t = i as f64 / (samples + 1) as f64;
            let p = curve.point(t)?;
            let xv = x.eval(&p)?;
            let vel = curve.velocity.eval(&[t])?;
            if xv
                .iter()
                .zip(&vel)
                .any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs()))
            {
                return Err(Error::InvalidArgument(format!(
                    "extension {xv:?} does not restrict to γ'(t) = {vel:?} at t = {t}"
                )));
            }
            let yv = y.eval(&p)?;
            Ok(PairingSample {
                t,
                coboundary: 0.5 * dg.eval(&p)?,
                connection: g.inner_at(y, &accel_field, &p)?,
                along_curve: g.inner_values(&yv, &geodesic.eval(&[t])?, &p)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn rule() -> QuadratureRule {
        QuadratureRule::gauss_legendre(32).unwrap()
    }

    fn plane(lo: f64, hi: f64) -> Arc<Chart> {
        Chart::cube(2, lo, hi).unwrap()
    }

    fn form(chart: &Arc<Chart>, coeffs: &[&str]) -> TensorField {
        let rank = if coeffs.len() == chart.dim() { 1 } else { 2 };
        let c = coeffs
            .iter()
            .map(|s| chart.parse(s, &[]).unwrap())
            .collect();
        TensorField::new(chart, rank, c).unwrap()
    }

    #[test]
    fn curve_functional_examples() {
        let chart = plane(-2.0, 2.0);
        let circle = Curve::parse(
            &chart,
            &["cos(2*3.141592653589793*t)", "sin(2*3.141592653589793*t)"],
        )
        .unwrap();
        let area = functional_curve(&form(&chart, &["0", "x1"]), &circle, &rule()).unwrap();
        assert!((area - PI).abs() < 1e-12);
        let segment = Curve::parse(&chart, &["t", "0"]).unwrap();
        assert!(
            (functional_curve(&form(&chart, &["1", "0"]), &segment, &rule()).unwrap() - 1.0).abs()
                < 1e-14
        );
        let exact = form(&chart, &["2*x1*x2", "x1^2"]);
        assert!(functional_curve(&exact, &circle, &rule()).unwrap().abs() < 1e-12);
    }

    #[test]
    fn surface_functional_examples() {
        let chart = plane(-2.0, 2.0);
        let id = Surface::parse(&chart, &["t1", "t2"]).unwrap();
        let swapped = Surface::parse(&chart, &["t2", "t1"]).unwrap();
        let dx1dx2 = form(&chart, &["0", "1", "0", "0"]);
        assert!((functional_surface(&dx1dx2, &id, &rule()).unwrap() - 1.0).abs() < 1e-14);
        assert!(
            functional_surface(&dx1dx2, &swapped, &rule())
                .unwrap()
                .abs()
                < 1e-14
        );
        let weighted = form(&chart, &["0", "x1", "0", "0"]);
        assert!((functional_surface(&weighted, &id, &rule()).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn rotation_form_first_variation() {
        let chart = plane(-2.0, 2.0);
        let omega = form(&chart, &["-x2", "x1"]);
        let family: Family = CurveFamily::parse(&chart, &["t", "s*sin(3.141592653589793*t)"], 0.5)
            .unwrap()
            .into();
        let exact = first_variation_exact(&omega, &family, &rule()).unwrap();
        assert!((exact + 4.0 / PI).abs() < 1e-12);
        let numeric = first_variation_numeric(&omega, &family, &rule(), 1e-3).unwrap();
        assert!((numeric - exact).abs() < 1e-8);
        assert!(matches!(
            central_difference(&omega, &family, &rule(), 0.6),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn families_validate_boundary_and_domain() {
        let chart = plane(-1.0, 1.0);
        assert!(matches!(
            CurveFamily::parse(&chart, &["t", "s"], 0.1),
            Err(Error::InvalidFamily(_))
        ));
        assert!(matches!(
            CurveFamily::parse(&chart, &["t", "s*t*(1 - t)"], 10.0),
            Err(Error::OutsideDomain(_))
        ));
        assert!(matches!(
            SurfaceFamily::parse(&chart, &["t1", "s*t1"], 0.1),
            Err(Error::InvalidFamily(_))
        ));
        assert!(
            SurfaceFamily::parse(&chart, &["t1", "t2 + s*t1*(1 - t1)*t2*(1 - t2)"], 0.1).is_ok()
        );
        assert!(matches!(
            CurveFamily::parse(&chart, &["t", "t1"], 0.1),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn circle_is_not_extremal_for_rotation_form() {
        let chart = plane(-2.0, 2.0);
        let omega = form(&chart, &["-x2", "x1"]);
        let circle = Curve::parse(
            &chart,
            &["cos(2*3.141592653589793*t)", "sin(2*3.141592653589793*t)"],
        )
        .unwrap();
        let r = euler_lagrange_residual(&omega, Extremal::Curve(&circle)).unwrap();
        for t in [0.0, 0.1, 0.37] {
            let v = r.eval(&[t]).unwrap();
            assert!((v[0] - 4.0 * PI * (2.0 * PI * t).cos()).abs() < 1e-12);
        }
        let closed = form(&chart, &["2*x1*x2", "x1^2"]);
        let r = euler_lagrange_residual(&closed, Extremal::Curve(&circle)).unwrap();
        assert!(r.max_abs_on_grid(21).unwrap() < 1e-12);
        let delta = form(&chart, &["1", "0", "0", "1"]);
        let square = Surface::parse(&chart, &["t1", "t2"]).unwrap();
        let r = euler_lagrange_residual(&delta, Extremal::Surface(&square)).unwrap();
        assert!(r.max_abs_on_grid(5).unwrap() == 0.0);
        assert!(euler_lagrange_residual(&delta, Extremal::Curve(&circle)).is_err());
    }

    #[test]
    fn geodesic_examples() {
        let half = Chart::new(
            vec!["x1".into(), "x2".into()],
            vec![(-2.0, 2.0), (0.2, 3.0)],
        )
        .unwrap();
        let g = MetricTensor::parse(&half, &[vec!["1/x2^2", "0"], vec!["0", "1/x2^2"]]).unwrap();
        let vertical = Curve::parse(&half, &["0", "exp(t)"]).unwrap();
        assert!(
            geodesic_residual(&g, &vertical)
                .unwrap()
                .max_abs_on_grid(21)
                .unwrap()
                < 1e-12
        );

        let sphere = Chart::new(
            vec!["x1".into(), "x2".into()],
            vec![(0.2, 2.9), (-0.5, 6.8)],
        )
        .unwrap();
        let g = MetricTensor::parse(&sphere, &[vec!["1", "0"], vec!["0", "sin(x1)^2"]]).unwrap();
        let latitude =
            Curve::parse(&sphere, &["0.7853981633974483", "2*3.141592653589793*t"]).unwrap();
        let r = geodesic_residual(&g, &latitude)
            .unwrap()
            .eval(&[0.3])
            .unwrap();
        let expected = -FRAC_PI_4.sin() * FRAC_PI_4.cos() * (2.0 * PI).powi(2);
        assert!((r[0] - expected).abs() < 1e-12);

        let x = VectorField::parse(&sphere, &["0", "2*3.141592653589793"]).unwrap();
        let y = VectorField::parse(&sphere, &["1 + x2", "x1"]).unwrap();
        for s in arc_length_pairing(&g, &latitude, &x, &y, 7).unwrap() {
            assert!(s.residual() < 1e-9, "{s:?}");
        }
        let wrong = VectorField::parse(&sphere, &["1", "0"]).unwrap();
        assert!(arc_length_pairing(&g, &latitude, &wrong, &y, 3).is_err());
    }
}
