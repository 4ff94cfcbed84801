//! Named verification checks. Each check draws its own seeded sample stream,
//! evaluates an identity on that sample and reports the worst residual.
//!
//! Checks never skip silently: an evaluation error fails the check and the
//! error text is kept in the record.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cli::Scene;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{bump_field, lie_derivative, Chart, ScalarField, TensorField, VectorField};
use crate::leibniz::{
    apply_local, coboundary_tensor_part, d_squared_residual, d_squared_residual_scalar,
    formula_terms, global_value, kform_obstructions, local_coboundary, Factor, FormulaTerm,
};
use crate::quadrature::QuadratureRule;
use crate::riemann::{
    christoffel_first, compatibility_residual, curvature_identity_residuals_at_indices, dr_formula,
    dr_global, metric_coboundary_check, riemann_by_nesting, torsion, ConnectionCoefficients,
    Geometry,
};
use crate::sampling::Sampler;
use crate::variation::{
    arc_length_pairing, euler_lagrange_residual_curve, first_variation_exact,
    first_variation_numeric, geodesic_residual, Curve, CurveFamily, Family, SurfaceFamily,
};

/// Knobs shared by all checks.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Cases for the sampled identity checks.
    pub samples: usize,
    /// Tolerance for exact identities.
    pub tol: f64,
    pub fd_step: f64,
    pub quad_nodes: usize,
    pub inset: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            seed: 42,
            samples: 50,
            tol: 1e-9,
            fd_step: 1e-3,
            quad_nodes: 32,
            inset: 0.1,
        }
    }
}

/// Tolerance for exact-versus-finite-difference first variations.
pub const FD_TOL: f64 = 1e-5;
/// Detectors must see a residual above this.
pub const DETECTION_FLOOR: f64 = 1e-3;
/// Cases for the first-variation sweeps.
pub const FAMILY_CASES: usize = 20;
/// Cases for the `d∘d = 0` sweep.
pub const D_SQUARED_CASES: usize = 30;
/// Cases for the locality sweep.
pub const LOCALITY_CASES: usize = 20;
/// Half-width of the `s`-interval of generated families.
pub const FAMILY_EPSILON: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Comparison {
    /// Pass when the residual is at most the tolerance.
    #[serde(rename = "<=")]
    AtMost,
    /// Pass when the measured value exceeds the threshold (detectors).
    #[serde(rename = ">")]
    Above,
}

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub name: String,
    pub anchor: String,
    pub max_residual: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

struct Check<'a> {
    name: String,
    anchor: &'a str,
    tolerance: f64,
    comparison: Comparison,
    samples: usize,
    seed: u64,
}

impl<'a> Check<'a> {
    fn new(
        name: impl Into<String>,
        anchor: &'a str,
        tolerance: f64,
        samples: usize,
        cfg: &VerifyConfig,
    ) -> Self {
        Check {
            name: name.into(),
            anchor,
            tolerance,
            comparison: Comparison::AtMost,
            samples,
            seed: cfg.seed,
        }
    }

    fn detector(mut self) -> Self {
        self.comparison = Comparison::Above;
        self
    }

    /// The sample stream for this check; depends only on the seed and name.
    fn sampler(&self) -> Sampler {
        let digest = Sha256::digest(self.name.as_bytes());
        let stream = u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"));
        Sampler::for_stream(self.seed, stream)
    }

    fn run(self, body: impl FnOnce(&mut Sampler) -> Result<f64>) -> CheckRecord {
        let mut sampler = self.sampler();
        let outcome = body(&mut sampler);
        let (residual, detail) = match outcome {
            Ok(r) => (r, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let pass = match self.comparison {
            Comparison::AtMost => residual <= self.tolerance,
            Comparison::Above => residual > self.tolerance,
        };
        CheckRecord {
            name: self.name,
            anchor: self.anchor.to_string(),
            max_residual: residual,
            tolerance: self.tolerance,
            comparison: self.comparison,
            pass,
            samples: self.samples,
            seed: self.seed,
            detail,
        }
    }
}

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Which group of checks to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Leibniz,
    Riemann,
    Variation,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

impl FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" => Ok(Suite::All),
            "leibniz" => Ok(Suite::Leibniz),
            "riemann" => Ok(Suite::Riemann),
            "variation" => Ok(Suite::Variation),
            other => Err(format!(
                "unknown suite `{other}` (expected all, leibniz, riemann or variation)"
            )),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::All => "all",
            Suite::Leibniz => "leibniz",
            Suite::Riemann => "riemann",
            Suite::Variation => "variation",
        })
    }
}

fn chart_label(chart: &Chart) -> String {
    format!("n{}", chart.dim())
}

// ---------------------------------------------------------------- leibniz

/// Local formula against the cochain formula on random polynomial data.
pub fn local_global(chart: &Arc<Chart>, k: usize, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.local_global.{}.k{k}", chart_label(chart));
    Check::new(
        name,
        "local L/S expansion equals the cochain formula",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let omega = s.tensor(chart, k, 2);
            let fields = s.vector_fields(chart, k + 1, 2);
            let p = s.point(chart, cfg.inset);
            let local = apply_local(&local_coboundary(&omega)?, &fields, &p)?;
            let global = global_value(&omega, &fields, &p)?;
            worst = worst.max(relative(local, global));
        }
        Ok(worst)
    })
}

/// The five-term local formula for a 2-tensor `Σ a_pq dx^p ⊗ dx^q`, written
/// out by hand (0-based slots).
pub fn two_tensor_reference_terms(n: usize) -> Vec<FormulaTerm> {
    let mut out = Vec::new();
    for p in 0..n {
        for q in 0..n {
            for l in 0..n {
                let src = vec![p, q];
                let d = |sign, factors: [Factor; 3]| FormulaTerm {
                    sign,
                    source: src.clone(),
                    coeff_derivative: Some(l),
                    factors: factors.to_vec(),
                };
                let a = |factors: [Factor; 3]| FormulaTerm {
                    sign: 1,
                    source: src.clone(),
                    coeff_derivative: None,
                    factors: factors.to_vec(),
                };
                use Factor::{DerivDx, Dx};
                out.push(d(1, [Dx(l), Dx(p), Dx(q)]));
                out.push(d(-1, [Dx(p), Dx(l), Dx(q)]));
                out.push(d(1, [Dx(p), Dx(q), Dx(l)]));
                out.push(a([Dx(l), Dx(p), DerivDx { ell: l, comp: q }]));
                out.push(a([Dx(l), Dx(q), DerivDx { ell: l, comp: p }]));
            }
        }
    }
    out
}

/// Size of the multiset difference between the generated k = 2 expansion
/// and the hand-written one.
pub fn two_tensor_structure(n: usize, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.two_tensor_structure.n{n}");
    Check::new(
        name,
        "k = 2 expansion equals the five-term formula",
        0.0,
        1,
        cfg,
    )
    .run(|_| {
        let mut got = formula_terms(n, 2);
        let mut want = two_tensor_reference_terms(n);
        got.sort();
        want.sort();
        let (mut i, mut j, mut mismatches) = (0, 0, 0usize);
        while i < got.len() && j < want.len() {
            match got[i].cmp(&want[j]) {
                std::cmp::Ordering::Equal => {
                    i += 1;
                    j += 1;
                }
                std::cmp::Ordering::Less => {
                    mismatches += 1;
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    mismatches += 1;
                    j += 1;
                }
            }
        }
        Ok((mismatches + (got.len() - i) + (want.len() - j)) as f64)
    })
}

fn random_scalar(s: &mut Sampler, chart: &Arc<Chart>, degree: u32) -> ScalarField {
    ScalarField::new(chart, s.polynomial(chart, degree, 4)).expect("polynomial lives on the chart")
}

/// The gradient of `f` as a 1-tensor.
fn exact_one_form(f: &ScalarField) -> TensorField {
    let chart = f.chart();
    TensorField::from_fn(chart, 1, |i| f.expr().diff(&chart.names()[i[0]]))
}

/// `L(α)` against the antisymmetrized partials of a random 1-form.
pub fn one_form_de_rham(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.one_form.de_rham.{}", chart_label(chart));
    Check::new(
        name,
        "k = 1 coboundary is the exterior derivative",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let n = chart.dim();
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let alpha = s.tensor(chart, 1, 3);
            let l = coboundary_tensor_part(&alpha)?;
            let p = s.point(chart, cfg.inset);
            let scope = chart.scope(&p.0);
            for a in 0..n {
                for b in 0..n {
                    let oracle = alpha.get(&[b]).diff(&chart.names()[a])
                        - alpha.get(&[a]).diff(&chart.names()[b]);
                    let v = l.get(&[a, b]).eval(&scope)? - oracle.eval(&scope)?;
                    worst = worst.max(v.abs());
                }
            }
        }
        Ok(worst)
    })
}

/// Exact 1-forms `df` have vanishing coboundary by both routes.
pub fn one_form_closed(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.one_form.closed.{}", chart_label(chart));
    Check::new(
        name,
        "closed 1-forms have zero coboundary",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let alpha = exact_one_form(&random_scalar(s, chart, 3));
            let fields = s.vector_fields(chart, 2, 2);
            let p = s.point(chart, cfg.inset);
            let local = local_coboundary(&alpha)?;
            worst = worst
                .max(local.tensor_part.max_abs_at(&p)?)
                .max(apply_local(&local, &fields, &p)?.abs())
                .max(global_value(&alpha, &fields, &p)?.abs());
        }
        Ok(worst)
    })
}

/// `d∘d = 0` through the cochain formula, cycling k over 0, 1, 2.
pub fn d_squared(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.d_squared.{}", chart_label(chart));
    Check::new(name, "d∘d = 0", cfg.tol, D_SQUARED_CASES, cfg).run(|s| {
        let mut worst = 0.0f64;
        for case in 0..D_SQUARED_CASES {
            let k = case % 3;
            let fields = s.vector_fields(chart, k + 2, 2);
            let p = s.point(chart, cfg.inset);
            let r = if k == 0 {
                d_squared_residual_scalar(&random_scalar(s, chart, 3), &fields, &p)?
            } else {
                d_squared_residual(&s.tensor(chart, k, 2), &fields, &p)?
            };
            worst = worst.max(r.abs());
        }
        Ok(worst)
    })
}

/// Cutting fields off with a bump equal to 1 near `p` leaves `dω(p)` unchanged.
pub fn locality(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.locality.{}", chart_label(chart));
    Check::new(name, "coboundary is local", cfg.tol, LOCALITY_CASES, cfg).run(|s| {
        let width = chart
            .domain()
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(f64::INFINITY, f64::min);
        let inset = cfg.inset.max(0.1);
        let mut worst = 0.0f64;
        for case in 0..LOCALITY_CASES {
            let k = 1 + case % 2;
            let omega = s.tensor(chart, k, 2);
            let fields = s.vector_fields(chart, k + 1, 2);
            let p = s.point(chart, inset);
            let bump = bump_field(chart, &p, 0.04 * width, 0.09 * width)?;
            let cut: Vec<VectorField> = fields.iter().map(|f| f.scaled(bump.expr())).collect();
            let before = global_value(&omega, &fields, &p)?;
            let after = global_value(&omega, &cut, &p)?;
            worst = worst.max(relative(after, before));
        }
        Ok(worst)
    })
}

/// For k = 2: slots 0 and 1 are C∞-linear; scaling slot 2 by `c` adds
/// `X(c)·(ω(Y ⊗ Z) + ω(Z ⊗ Y))`.
pub fn linearity_pattern(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("leibniz.linearity_pattern.{}", chart_label(chart));
    Check::new(
        name,
        "non-linearity sits in the last slot only",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let omega = s.tensor(chart, 2, 2);
            let fields = s.vector_fields(chart, 3, 2);
            let c = random_scalar(s, chart, 2);
            let p = s.point(chart, cfg.inset);
            let base = global_value(&omega, &fields, &p)?;
            let cp = c.eval(&p)?;
            for slot in 0..3 {
                let mut scaled = fields.clone();
                scaled[slot] = fields[slot].scaled(c.expr());
                let v = global_value(&omega, &scaled, &p)?;
                let mut expected = cp * base;
                if slot == 2 {
                    let xc = lie_derivative(&fields[0], &c)?.eval(&p)?;
                    let yz = omega.apply(&[fields[1].clone(), fields[2].clone()], &p)?;
                    let zy = omega.apply(&[fields[2].clone(), fields[1].clone()], &p)?;
                    expected += xc * (yz + zy);
                }
                worst = worst.max(relative(v, expected));
            }
        }
        Ok(worst)
    })
}

/// The identity 2-tensor is flagged as not a form.
pub fn symmetric_tensor_flagged(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!(
        "leibniz.obstruction.symmetric_flagged.{}",
        chart_label(chart)
    );
    Check::new(
        name,
        "symmetric tensors carry a skew obstruction",
        0.1,
        cfg.samples,
        cfg,
    )
    .detector()
    .run(|s| {
        let delta = TensorField::from_fn(chart, 2, |i| {
            if i[0] == i[1] {
                Expr::one()
            } else {
                Expr::zero()
            }
        });
        let points = s.points(chart, cfg.samples, cfg.inset);
        kform_obstructions(&delta)?.max_skew(chart, &points)
    })
}

/// Closed 2-forms `L(α)` pass every obstruction.
pub fn closed_forms_pass(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!(
        "leibniz.obstruction.closed_forms_pass.{}",
        chart_label(chart)
    );
    Check::new(
        name,
        "closed 2-forms have no obstruction",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples.div_ceil(10) {
            let beta = coboundary_tensor_part(&s.tensor(chart, 1, 3))?;
            let points = s.points(chart, 10, cfg.inset);
            let obs = kform_obstructions(&beta)?;
            worst = worst
                .max(obs.max_skew(chart, &points)?)
                .max(obs.max_closedness(&points)?);
        }
        Ok(worst)
    })
}

/// All chart-generic coboundary checks on `chart`.
pub fn leibniz_suite(chart: &Arc<Chart>, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let mut out: Vec<CheckRecord> = (1..=3).map(|k| local_global(chart, k, cfg)).collect();
    out.push(two_tensor_structure(chart.dim(), cfg));
    out.push(one_form_de_rham(chart, cfg));
    out.push(one_form_closed(chart, cfg));
    out.push(d_squared(chart, cfg));
    out.push(locality(chart, cfg));
    out.push(linearity_pattern(chart, cfg));
    out.push(symmetric_tensor_flagged(chart, cfg));
    out.push(closed_forms_pass(chart, cfg));
    out
}

// ---------------------------------------------------------------- riemann

fn random_field(s: &mut Sampler, chart: &Arc<Chart>) -> VectorField {
    if s.index(2) == 0 {
        s.vector_field(chart, 2)
    } else {
        s.monomial_scaled_coordinate_field(chart)
    }
}

/// `L(g)(∂_i ⊗ ∂_ℓ ⊗ ∂_j) = 2[ij, ℓ]`; when every Christoffel symbol is
/// structurally zero, so must be every coefficient of `L(g)`.
pub fn christoffel_identity(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.christoffel_identity");
    Check::new(
        name,
        "dg on coordinate fields is twice the Christoffel symbol",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let n = chart.dim();
        let l = coboundary_tensor_part(geo.metric.tensor())?;
        let first = christoffel_first(&geo.metric);
        let mut worst = 0.0f64;
        if first.values().iter().all(Expr::is_zero) {
            worst = l.coeffs().iter().filter(|e| !e.is_zero()).count() as f64;
        }
        for p in s.points(chart, cfg.samples, cfg.inset) {
            let scope = chart.scope(&p.0);
            for i in 0..n {
                for ell in 0..n {
                    for j in 0..n {
                        let lhs = l.get(&[i, ell, j]).eval(&scope)?;
                        let rhs = 2.0 * first.get(i, j, ell).eval(&scope)?;
                        worst = worst.max(relative(lhs, rhs));
                    }
                }
            }
        }
        Ok(worst)
    })
}

/// `dg(X ⊗ Y ⊗ Z) = 2⟨Y, ∇_X Z⟩` by both coboundary routes.
pub fn connection_identity(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.connection_identity");
    Check::new(
        name,
        "dg(X,Y,Z) = 2<Y, nabla_X Z>",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let (x, y, z) = (
                random_field(s, chart),
                random_field(s, chart),
                random_field(s, chart),
            );
            let p = s.point(chart, cfg.inset);
            let c = metric_coboundary_check(geo, &x, &y, &z, &p)?;
            worst = worst.max(c.residual() / (1.0 + c.rhs.abs()));
        }
        Ok(worst)
    })
}

/// Metric compatibility and torsion-freeness of the connection on random fields.
pub fn levi_civita_properties(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.levi_civita");
    Check::new(
        name,
        "connection is metric and torsion-free",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let (x, y, z) = (
                random_field(s, chart),
                random_field(s, chart),
                random_field(s, chart),
            );
            let p = s.point(chart, cfg.inset);
            worst = worst.max(compatibility_residual(geo, &x, &y, &z, &p)?.abs());
            for v in torsion(geo, &x, &y)?.eval(&p)? {
                worst = worst.max(v.abs());
            }
        }
        Ok(worst)
    })
}

/// `∇g = 0` componentwise.
pub fn parallel_metric(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.parallel_metric");
    Check::new(name, "nabla g = 0", cfg.tol, cfg.samples, cfg).run(|s| {
        let ng = geo.nabla_metric()?;
        let mut worst = 0.0f64;
        for p in s.points(geo.chart(), cfg.samples, cfg.inset) {
            worst = worst.max(ng.max_abs_at(&p)?);
        }
        Ok(worst)
    })
}

fn random_indices(s: &mut Sampler, n: usize) -> [usize; 5] {
    std::array::from_fn(|_| s.index(n))
}

fn curvature_sweep(
    geo: &Geometry,
    s: &mut Sampler,
    cases: usize,
    inset: f64,
    pick: impl Fn(&crate::riemann::CurvatureResiduals) -> f64,
) -> Result<f64> {
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let idx = random_indices(s, geo.chart().dim());
        let p = s.point(geo.chart(), inset);
        worst = worst.max(pick(&curvature_identity_residuals_at_indices(
            geo, idx, &p,
        )?));
    }
    Ok(worst)
}

/// Both cyclic sums of `∇R`.
pub fn bianchi(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.bianchi");
    Check::new(
        name,
        "second Bianchi identity, both arrangements",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| curvature_sweep(geo, s, cfg.samples, cfg.inset, |r| r.max_bianchi()))
}

/// The three swap symmetries of `R`.
pub fn curvature_symmetries(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.curvature_symmetries");
    Check::new(
        name,
        "R skew in each pair and symmetric under pair swap",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| curvature_sweep(geo, s, cfg.samples, cfg.inset, |r| r.max_symmetry()))
}

/// Component formula for `R` against nested covariant derivatives.
pub fn curvature_components(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.curvature_components");
    let cases = cfg.samples.min(10);
    Check::new(
        name,
        "R components equal nested connection evaluation",
        cfg.tol,
        cases,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let n = chart.dim();
        let mut worst = 0.0f64;
        for idx in crate::riemann::riemann_indices(n) {
            let idx: [usize; 4] = idx.try_into().expect("four indices");
            let nested = riemann_by_nesting(geo, idx)?;
            for p in s.points(chart, cases, cfg.inset) {
                let direct = geo.riemann.get(&idx).eval(&chart.scope(&p.0))?;
                worst = worst.max(relative(direct, nested.eval(&p)?));
            }
        }
        Ok(worst)
    })
}

/// The closed-form `dR` against the cochain formula on monomial-scaled
/// coordinate fields.
pub fn dr_identity(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.dr_formula");
    Check::new(
        name,
        "dR = -nabla_Z R + eight correction terms",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples {
            let fields: Vec<VectorField> = (0..5)
                .map(|_| s.monomial_scaled_coordinate_field(chart))
                .collect();
            let p = s.point(chart, cfg.inset);
            worst = worst.max(relative(
                dr_formula(geo, &fields, &p)?,
                dr_global(geo, &fields, &p)?,
            ));
        }
        Ok(worst)
    })
}

/// Levi-Civita coefficients with `Γ^0_{01} = Γ^0_{10}` shifted by `x^1`;
/// torsion-free but not metric.
pub fn corrupted_connection(geo: &Geometry) -> Result<ConnectionCoefficients> {
    let chart = geo.chart();
    let n = chart.dim();
    if n < 2 {
        return Err(Error::InvalidArgument(
            "corruption fixture needs dimension at least 2".into(),
        ));
    }
    let mut values = geo.connection.values().to_vec();
    let shift = chart.coordinate(0);
    for (i, j) in [(0, 1), (1, 0)] {
        let at = i * n + j;
        values[at] = &values[at] + &shift;
    }
    ConnectionCoefficients::from_values(chart, values)
}

/// The identity sweep must notice a corrupted connection.
pub fn corruption_detected(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("riemann.{label}.corruption_detected");
    Check::new(
        name,
        "identity residuals expose a non-Levi-Civita connection",
        DETECTION_FLOOR,
        cfg.samples,
        cfg,
    )
    .detector()
    .run(|s| {
        let bad = Geometry::with_connection(geo.metric.clone(), corrupted_connection(geo)?)?;
        curvature_sweep(&bad, s, cfg.samples, cfg.inset, |r| r.max_abs())
    })
}

/// `½dg(X ⊗ Y ⊗ X) = ⟨Y, ∇_X X⟩` along straight coordinate segments, with
/// the constant extension of the velocity.
pub fn arc_length_pairing_generic(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("variation.{label}.arc_length_pairing");
    Check::new(
        name,
        "half dg(X,Y,X) = <Y, nabla_X X>",
        cfg.tol,
        cfg.samples,
        cfg,
    )
    .run(|s| {
        let chart = geo.chart();
        let mut worst = 0.0f64;
        for _ in 0..cfg.samples.div_ceil(5) {
            let a = s.point(chart, 0.3);
            let b = s.point(chart, 0.3);
            let comps: Vec<Expr> =
                a.0.iter()
                    .zip(&b.0)
                    .map(|(&a, &b)| a + (b - a) * Expr::var(crate::variation::T))
                    .collect();
            let curve = Curve::new(chart, comps)?;
            let velocity: Vec<f64> = a.0.iter().zip(&b.0).map(|(a, b)| b - a).collect();
            let x = VectorField::constant(chart, &velocity)?;
            let y = s.vector_field(chart, 2);
            for sample in arc_length_pairing(&geo.metric, &curve, &x, &y, 5)? {
                worst = worst.max(sample.residual() / (1.0 + sample.connection.abs()));
            }
        }
        Ok(worst)
    })
}

/// All checks that depend on one metric.
pub fn riemann_suite(label: &str, geo: &Geometry, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    vec![
        christoffel_identity(label, geo, cfg),
        connection_identity(label, geo, cfg),
        levi_civita_properties(label, geo, cfg),
        parallel_metric(label, geo, cfg),
        bianchi(label, geo, cfg),
        curvature_symmetries(label, geo, cfg),
        curvature_components(label, geo, cfg),
        dr_identity(label, geo, cfg),
        corruption_detected(label, geo, cfg),
    ]
}

// ---------------------------------------------------------------- variation

fn quadrature(cfg: &VerifyConfig) -> Result<QuadratureRule> {
    QuadratureRule::gauss_legendre(cfg.quad_nodes)
}

/// Exact against finite-difference first variation for random families.
pub fn first_variation_agreement(
    chart: &Arc<Chart>,
    rank: usize,
    cfg: &VerifyConfig,
) -> CheckRecord {
    let name = format!(
        "variation.rank{rank}.exact_vs_numeric.{}",
        chart_label(chart)
    );
    Check::new(
        name,
        "first variation by Euler-Lagrange integrand and by differences",
        FD_TOL,
        FAMILY_CASES,
        cfg,
    )
    .run(|s| {
        let rule = quadrature(cfg)?;
        let mut worst = 0.0f64;
        for _ in 0..FAMILY_CASES {
            let omega = s.tensor(chart, rank, 2);
            let family: Family = match rank {
                1 => CurveFamily::random(s, chart, FAMILY_EPSILON)?.into(),
                _ => SurfaceFamily::random(s, chart, FAMILY_EPSILON)?.into(),
            };
            let exact = first_variation_exact(&omega, &family, &rule)?;
            let numeric = first_variation_numeric(&omega, &family, &rule, cfg.fd_step)?;
            worst = worst.max(relative(numeric, exact));
        }
        Ok(worst)
    })
}

/// Constant 2-tensors over affine squares have zero first variation.
pub fn constant_tensor_stationary(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("variation.rank2.constant_tensor.{}", chart_label(chart));
    Check::new(
        name,
        "constant 2-tensors are stationary on affine squares",
        1e-10,
        FAMILY_CASES,
        cfg,
    )
    .run(|s| {
        let rule = quadrature(cfg)?;
        let mut worst = 0.0f64;
        for _ in 0..FAMILY_CASES {
            let omega = TensorField::from_fn(chart, 2, |_| {
                Expr::constant((s.uniform(-1.0, 1.0) * 1e3).round() / 1e3)
            });
            let family: Family = SurfaceFamily::random_affine(s, chart, FAMILY_EPSILON)?.into();
            let exact = first_variation_exact(&omega, &family, &rule)?;
            let numeric = first_variation_numeric(&omega, &family, &rule, cfg.fd_step)?;
            worst = worst.max(exact.abs()).max(numeric.abs());
        }
        Ok(worst)
    })
}

/// Closed 1-forms: zero Euler-Lagrange residual and zero first variation.
pub fn closed_form_stationary(chart: &Arc<Chart>, cfg: &VerifyConfig) -> CheckRecord {
    let name = format!("variation.rank1.closed_form.{}", chart_label(chart));
    let cases = 10;
    Check::new(
        name,
        "extremal curves have zero first variation",
        1e-6,
        cases,
        cfg,
    )
    .run(|s| {
        let rule = quadrature(cfg)?;
        let mut worst = 0.0f64;
        for _ in 0..cases {
            let omega = exact_one_form(&random_scalar(s, chart, 3));
            let family = CurveFamily::random(s, chart, FAMILY_EPSILON)?;
            let el = euler_lagrange_residual_curve(&omega, &family.at(0.0)?)?;
            worst = worst.max(el.max_abs_on_grid(33)?);
            let family: Family = family.into();
            worst = worst
                .max(first_variation_exact(&omega, &family, &rule)?.abs())
                .max(first_variation_numeric(&omega, &family, &rule, cfg.fd_step)?.abs());
        }
        Ok(worst)
    })
}

pub fn variation_suite(chart: &Arc<Chart>, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    vec![
        first_variation_agreement(chart, 1, cfg),
        first_variation_agreement(chart, 2, cfg),
        constant_tensor_stationary(chart, cfg),
        closed_form_stationary(chart, cfg),
    ]
}

// ---------------------------------------------------------------- scenes

fn expectation_checks(scene: &Scene, suite: Suite, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    let expect = &scene.expect;
    if suite.includes(Suite::Riemann) {
        for e in &expect.curvature {
            let name = format!("riemann.{}.curvature_value.R{}", e.metric, join(&e.indices));
            out.push(
                Check::new(
                    name,
                    "|R| at a point matches a known value",
                    cfg.tol,
                    1,
                    cfg,
                )
                .run(|_| {
                    let geo = scene.geometry(&e.metric)?;
                    let idx: Vec<usize> = e.indices.iter().map(|i| i - 1).collect();
                    let p = scene.chart.point(e.point.clone())?;
                    let v = geo.riemann.get(&idx).eval(&scene.chart.scope(&p.0))?;
                    Ok((v.abs() - e.abs_value).abs())
                }),
            );
        }
    }
    if suite.includes(Suite::Variation) {
        for e in &expect.geodesics {
            let kind = if e.geodesic {
                "geodesic"
            } else {
                "non_geodesic"
            };
            let name = format!("variation.{}.{kind}.{}", e.metric, e.curve);
            let check = Check::new(
                name,
                "covariant acceleration along the curve",
                cfg.tol,
                33,
                cfg,
            );
            let check = if e.geodesic {
                check
            } else {
                Check {
                    tolerance: 0.1,
                    ..check
                }
                .detector()
            };
            out.push(check.run(|_| {
                let g = scene.metric(&e.metric)?;
                let curve = scene.curve(&e.curve)?.at(0.0)?;
                geodesic_residual(g, &curve)?.max_abs_on_grid(33)
            }));
        }
        for e in &expect.pairings {
            let name = format!("variation.{}.arc_length_pairing.{}", e.metric, e.curve);
            out.push(
                Check::new(name, "half dg(X,Y,X) = <Y, nabla_X X>", cfg.tol, 9, cfg).run(|_| {
                    let g = scene.metric(&e.metric)?;
                    let curve = scene.curve(&e.curve)?.at(0.0)?;
                    let (x, y) = (scene.field(&e.extension)?, scene.field(&e.field)?);
                    let samples = arc_length_pairing(g, &curve, x, y, 9)?;
                    Ok(samples.iter().fold(0.0f64, |m, s| m.max(s.residual())))
                }),
            );
        }
        for e in &expect.first_variation {
            let name = format!("variation.{}.{}.closed_form", e.tensor, e.family);
            out.push(
                Check::new(name, "first variation matches a closed form", 1e-6, 1, cfg).run(|_| {
                    let omega = scene.tensor(&e.tensor)?;
                    let family = scene.family(&e.family)?;
                    let rule = quadrature(cfg)?;
                    let exact = first_variation_exact(omega, &family, &rule)?;
                    let numeric = first_variation_numeric(omega, &family, &rule, cfg.fd_step)?;
                    Ok((exact - e.value).abs().max((numeric - e.value).abs()))
                }),
            );
        }
    }
    out
}

fn join(v: &[usize]) -> String {
    v.iter().map(usize::to_string).collect()
}

/// Every check applicable to `scene`: chart-generic sweeps on the scene chart
/// and on the 3-cube, per-metric sweeps, and the scene's declared expectations.
pub fn scene_suite(scene: &Scene, suite: Suite, cfg: &VerifyConfig) -> Vec<CheckRecord> {
    let mut out = Vec::new();
    if suite.includes(Suite::Leibniz) {
        out.extend(leibniz_suite(&scene.chart, cfg));
        if scene.chart.dim() != 3 {
            let cube = Chart::cube(3, -1.0, 1.0).expect("valid cube");
            out.extend((1..=3).map(|k| local_global(&cube, k, cfg)));
        }
    }
    if suite.includes(Suite::Riemann) {
        for name in scene.metrics.keys() {
            match scene.geometry(name) {
                Ok(geo) => out.extend(riemann_suite(name, &geo, cfg)),
                Err(e) => out.push(
                    Check::new(
                        format!("riemann.{name}.setup"),
                        "curvature setup",
                        cfg.tol,
                        0,
                        cfg,
                    )
                    .run(|_| Err(e)),
                ),
            }
        }
    }
    if suite.includes(Suite::Variation) {
        out.extend(variation_suite(&scene.chart, cfg));
        for name in scene.metrics.keys() {
            if let Ok(geo) = scene.geometry(name) {
                out.push(arc_length_pairing_generic(name, &geo, cfg));
            }
        }
    }
    out.extend(expectation_checks(scene, suite, cfg));
    out
}
