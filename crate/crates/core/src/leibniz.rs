//! The Leibniz coboundary of k-tensors.
//!
//! Two independent routes are provided:
//!
//! * [`global_coboundary`] implements the cochain formula on arbitrary
//!   cochains of vector fields, using only Lie derivatives and brackets. Its
//!   output is symbolic, so it can be applied twice.
//! * [`local_coboundary`] expands `dω` in a chart as a (k+1)-tensor part
//!   `L(ω)` plus derivative-insertion terms (the `S` blocks), which are
//!   evaluated pointwise by [`apply_local`].
//!
//! Slots are 0-based throughout this module.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{
    lie_bracket, lie_derivative, Chart, MultiIndex, Point, ScalarField, TensorField, VectorField,
};

type CochainFn = dyn Fn(&[VectorField]) -> Result<ScalarField> + Send + Sync;

/// A multilinear map from k vector fields to smooth functions.
#[derive(Clone)]
pub struct Cochain {
    chart: Arc<Chart>,
    arity: usize,
    eval: Arc<CochainFn>,
}

impl fmt::Debug for Cochain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Cochain")
            .field("arity", &self.arity)
            .finish_non_exhaustive()
    }
}

impl Cochain {
    pub fn from_fn(
        chart: &Arc<Chart>,
        arity: usize,
        eval: impl Fn(&[VectorField]) -> Result<ScalarField> + Send + Sync + 'static,
    ) -> Self {
        Cochain {
            chart: chart.clone(),
            arity,
            eval: Arc::new(eval),
        }
    }

    /// A k-tensor viewed as a k-cochain: `(X_1, …, X_k) ↦ ω(X_1 ⊗ … ⊗ X_k)`.
    pub fn from_tensor(omega: &TensorField) -> Self {
        let omega = omega.clone();
        Cochain::from_fn(&omega.chart().clone(), omega.rank(), move |xs| {
            omega.apply_symbolic(xs)
        })
    }

    /// A function viewed as a 0-cochain.
    pub fn from_scalar(f: &ScalarField) -> Self {
        let f = f.clone();
        Cochain::from_fn(&f.chart().clone(), 0, move |_| Ok(f.clone()))
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn apply(&self, fields: &[VectorField]) -> Result<ScalarField> {
        if fields.len() != self.arity {
            return Err(Error::Arity {
                expected: self.arity,
                got: fields.len(),
            });
        }
        (self.eval)(fields)
    }

    pub fn apply_at(&self, fields: &[VectorField], p: &Point) -> Result<f64> {
        self.apply(fields)?.eval(p)
    }
}

/// `dα(X_1 ⊗ … ⊗ X_{k+1}) = Σ_i (−1)^{i+1} X_i(α(… X̂_i …))
///   + Σ_{i<j} (−1)^{j+1} α(X_1 ⊗ … ⊗ [X_i, X_j] ⊗ … X̂_j …)`
/// with 1-based `i, j`; the bracket sits in slot `i` and `X_j` is dropped.
pub fn global_coboundary(alpha: &Cochain) -> Cochain {
    let inner = alpha.clone();
    let k = alpha.arity;
    Cochain::from_fn(&alpha.chart.clone(), k + 1, move |xs| {
        let chart = inner.chart.clone();
        let mut total = Expr::zero();
        for i in 0..=k {
            let rest: Vec<VectorField> = xs
                .iter()
                .enumerate()
                .filter(|&(s, _)| s != i)
                .map(|(_, x)| x.clone())
                .collect();
            let value = inner.apply(&rest)?;
            let term = lie_derivative(&xs[i], &value)?.into_expr();
            total = if i % 2 == 0 {
                total + term
            } else {
                total - term
            };
        }
        for j in 1..=k {
            for i in 0..j {
                let bracket = lie_bracket(&xs[i], &xs[j])?;
                let args: Vec<VectorField> = xs
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| s != j)
                    .map(|(s, x)| if s == i { bracket.clone() } else { x.clone() })
                    .collect();
                let term = inner.apply(&args)?.into_expr();
                // 1-based sign (−1)^{j+1} is (−1)^j for 0-based j
                total = if j % 2 == 0 {
                    total + term
                } else {
                    total - term
                };
            }
        }
        Ok(ScalarField::new_unchecked(&chart, total))
    })
}

/// Value of the global coboundary of a tensor on `fields` at `p`.
pub fn global_value(omega: &TensorField, fields: &[VectorField], p: &Point) -> Result<f64> {
    global_coboundary(&Cochain::from_tensor(omega)).apply_at(fields, p)
}

/// One tensor factor of a term in the local expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Factor {
    /// `dx^i`
    Dx(usize),
    /// The composition `∂/∂x^ell ∘ dx^comp`: the `ell`-derivative of the
    /// argument's `comp`-th component.
    DerivDx { ell: usize, comp: usize },
}

/// A single term of the local coboundary formula, before any collection.
///
/// The scalar coefficient is `∂a_source/∂x^ℓ` when `coeff_derivative` is
/// `Some(ℓ)` (the `L` part) and `a_source` otherwise (the `S` part).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FormulaTerm {
    pub sign: i8,
    pub source: Vec<usize>,
    pub coeff_derivative: Option<usize>,
    pub factors: Vec<Factor>,
}

/// Enumerates every term of `L(ω) + Σ_I a_I Σ_r (−1)^r dx^{i_1..i_r} ⊗ S(dx^{i_{r+1}} ⊗ …)`
/// for a k-tensor on an n-dimensional chart.
pub fn formula_terms(n: usize, k: usize) -> Vec<FormulaTerm> {
    expand(n, k).into_iter().map(|(term, _)| term).collect()
}

/// Terms of the expansion, each S term tagged with its (contraction, derivative) slots.
fn expand(n: usize, k: usize) -> Vec<(FormulaTerm, Option<(usize, usize)>)> {
    let mut out = Vec::new();
    for source in MultiIndex::new(n, k) {
        for ell in 0..n {
            // L: insert dx^ℓ at slot m with sign (−1)^m (0-based)
            for m in 0..=k {
                let mut factors: Vec<Factor> = source.iter().map(|&i| Factor::Dx(i)).collect();
                factors.insert(m, Factor::Dx(ell));
                let term = FormulaTerm {
                    sign: if m % 2 == 0 { 1 } else { -1 },
                    source: source.clone(),
                    coeff_derivative: Some(ell),
                    factors,
                };
                out.push((term, None));
            }
            if k < 2 {
                continue;
            }
            // S applied to the block i_{r+1..k} after a prefix of length r;
            // its output occupies slots r..=k with dx^ℓ in slot r.
            for r in 0..=k - 2 {
                let prefix_sign: i8 = if r % 2 == 0 { 1 } else { -1 };
                let block = &source[r..];
                let start = || -> Vec<Factor> {
                    let mut f: Vec<Factor> = source[..r].iter().map(|&i| Factor::Dx(i)).collect();
                    f.push(Factor::Dx(ell));
                    f
                };
                for t in 1..block.len() {
                    let m = r + 1 + t;
                    // derivative moved onto block factor t
                    let mut factors = start();
                    for (s, &i) in block.iter().enumerate() {
                        factors.push(if s == t {
                            Factor::DerivDx { ell, comp: i }
                        } else {
                            Factor::Dx(i)
                        });
                    }
                    let term = FormulaTerm {
                        sign: prefix_sign,
                        source: source.clone(),
                        coeff_derivative: None,
                        factors,
                    };
                    out.push((term, Some((r, m))));
                    // block's first factor pushed behind factor t; the signs run
                    // (−1)^4, (−1)^5, … in the 1-based count t + 3
                    let mut factors = start();
                    factors.extend(block[1..=t].iter().map(|&i| Factor::Dx(i)));
                    factors.push(Factor::DerivDx {
                        ell,
                        comp: block[0],
                    });
                    factors.extend(block[t + 1..].iter().map(|&i| Factor::Dx(i)));
                    let inner_sign: i8 = if (t + 3) % 2 == 0 { 1 } else { -1 };
                    let term = FormulaTerm {
                        sign: prefix_sign * inner_sign,
                        source: source.clone(),
                        coeff_derivative: None,
                        factors,
                    };
                    out.push((term, Some((r, m))));
                }
            }
        }
    }
    out
}

/// A derivative-insertion term of the local coboundary:
/// `sign · Σ_{ℓ,q,free} coeff(q, free) · X_a^ℓ · ∂X_m^q/∂x^ℓ · Π_{s∉{a,m}} X_s^{i_s}`.
///
/// `coeffs` is dense over `(q, i_s for s ∉ {a, m} in slot order)`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivTerm {
    pub contraction_slot: usize,
    pub derivative_slot: usize,
    pub sign: i8,
    pub coeffs: Vec<Expr>,
}

impl DerivTerm {
    pub fn coeff(&self, n: usize, q: usize, free: &[usize]) -> &Expr {
        let mut idx = Vec::with_capacity(free.len() + 1);
        idx.push(q);
        idx.extend_from_slice(free);
        &self.coeffs[MultiIndex::flat(n, &idx)]
    }
}

/// `dω = L(ω) + (derivative terms)` in the chart.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCoboundary {
    pub tensor_part: TensorField,
    pub deriv_terms: Vec<DerivTerm>,
}

impl LocalCoboundary {
    pub fn rank(&self) -> usize {
        self.tensor_part.rank()
    }
}

fn require_positive_rank(omega: &TensorField) -> Result<()> {
    if omega.rank() == 0 {
        return Err(Error::Rank {
            expected: "at least 1".into(),
            got: 0,
        });
    }
    Ok(())
}

/// `L(ω)`: the (k+1)-tensor obtained by signed insertion of `Σ_ℓ ∂a_I/∂x^ℓ dx^ℓ`.
/// Equals `dω` evaluated on coordinate fields.
pub fn coboundary_tensor_part(omega: &TensorField) -> Result<TensorField> {
    require_positive_rank(omega)?;
    let chart = omega.chart();
    let n = chart.dim();
    let k = omega.rank();
    let partials: Vec<Vec<Expr>> = omega
        .coeffs()
        .iter()
        .map(|a| chart.names().iter().map(|x| a.diff(x)).collect())
        .collect();
    Ok(TensorField::from_fn(chart, k + 1, |j| {
        // the slot m carries ℓ = j[m]; the remaining slots give I
        Expr::sum((0..=k).map(|m| {
            let mut source: Vec<usize> = j.to_vec();
            let ell = source.remove(m);
            let d = partials[MultiIndex::flat(n, &source)][ell].clone();
            if m % 2 == 0 {
                d
            } else {
                -d
            }
        }))
    }))
}

/// Builds the structured local coboundary of a k-tensor, k ≥ 1.
pub fn local_coboundary(omega: &TensorField) -> Result<LocalCoboundary> {
    require_positive_rank(omega)?;
    let chart = omega.chart();
    let n = chart.dim();
    let k = omega.rank();
    let tensor_part = coboundary_tensor_part(omega)?;

    // Derivative terms do not depend on ℓ; collect them from the ℓ = 0 copies.
    let mut grouped: BTreeMap<(usize, usize, i8), Vec<Vec<Expr>>> = BTreeMap::new();
    for (term, slots) in expand(n, k) {
        let Some((a, m)) = slots else { continue };
        let Factor::DerivDx { ell, comp } = term.factors[m] else {
            unreachable!()
        };
        if ell != 0 {
            continue;
        }
        let mut idx = vec![comp];
        for (s, f) in term.factors.iter().enumerate() {
            if s != a && s != m {
                let Factor::Dx(i) = *f else { unreachable!() };
                idx.push(i);
            }
        }
        let entry = grouped
            .entry((a, m, term.sign))
            .or_insert_with(|| vec![Vec::new(); n.pow(k as u32)]);
        entry[MultiIndex::flat(n, &idx)].push(omega.get(&term.source).clone());
    }
    let deriv_terms = grouped
        .into_iter()
        .map(|((a, m, sign), coeffs)| DerivTerm {
            contraction_slot: a,
            derivative_slot: m,
            sign,
            coeffs: coeffs.into_iter().map(Expr::sum).collect(),
        })
        .collect();
    Ok(LocalCoboundary {
        tensor_part,
        deriv_terms,
    })
}

/// Evaluates the local coboundary on `fields` at `p`.
pub fn apply_local(d_omega: &LocalCoboundary, fields: &[VectorField], p: &Point) -> Result<f64> {
    let tensor = &d_omega.tensor_part;
    let k1 = tensor.rank();
    if fields.len() != k1 {
        return Err(Error::Arity {
            expected: k1,
            got: fields.len(),
        });
    }
    let mut total = tensor.apply(fields, p)?;
    if d_omega.deriv_terms.is_empty() {
        return Ok(total);
    }
    let chart = tensor.chart();
    let n = chart.dim();
    let scope = chart.scope(&p.0);
    let values = fields
        .iter()
        .map(|f| f.eval(p))
        .collect::<Result<Vec<_>>>()?;
    for term in &d_omega.deriv_terms {
        let (a, m) = (term.contraction_slot, term.derivative_slot);
        // (X_a X_m^q)(p) for every component q
        let directional: Vec<f64> = (0..n)
            .map(|q| {
                let comp = fields[m].component(q);
                (0..n).try_fold(0.0, |acc, ell| {
                    let xa = values[a][ell];
                    if xa == 0.0 {
                        return Ok(acc);
                    }
                    Ok::<f64, Error>(acc + xa * comp.diff(&chart.names()[ell]).eval(&scope)?)
                })
            })
            .collect::<Result<_>>()?;
        let free_slots: Vec<usize> = (0..k1).filter(|&s| s != a && s != m).collect();
        let mut sum = 0.0;
        for idx in MultiIndex::new(n, k1 - 1) {
            let weight = directional[idx[0]]
                * free_slots
                    .iter()
                    .zip(&idx[1..])
                    .map(|(&s, &i)| values[s][i])
                    .product::<f64>();
            if weight == 0.0 {
                continue;
            }
            let c = &term.coeffs[MultiIndex::flat(n, &idx)];
            if !c.is_zero() {
                sum += c.eval(&scope)? * weight;
            }
        }
        total += f64::from(term.sign) * sum;
    }
    Ok(total)
}

/// `d(dω)` evaluated on k+2 fields at `p`; zero for a cochain complex.
pub fn d_squared_residual(omega: &TensorField, fields: &[VectorField], p: &Point) -> Result<f64> {
    let dd = global_coboundary(&global_coboundary(&Cochain::from_tensor(omega)));
    dd.apply_at(fields, p)
}

/// Same as [`d_squared_residual`] for a function (k = 0).
pub fn d_squared_residual_scalar(
    f: &ScalarField,
    fields: &[VectorField],
    p: &Point,
) -> Result<f64> {
    let dd = global_coboundary(&global_coboundary(&Cochain::from_scalar(f)));
    dd.apply_at(fields, p)
}

/// One antisymmetry condition `a_first + sign · a_second = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewResidual {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub sign: i8,
    pub residual: Expr,
}

/// What stands between a k-tensor and being a closed k-form.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstructions {
    /// `L(ω)`; must vanish for a cocycle.
    pub closedness: TensorField,
    pub skew: Vec<SkewResidual>,
}

/// Obstructions to `ω` being a Leibniz cocycle, hence a form.
///
/// For every `(j_1, …, j_{k+1})` and `p ≤ q − 2` (1-based) the residual pairs
/// the coefficient with `j_p` dropped against the one where `j_q` is moved
/// into position `p`, with sign `(−1)^{q−p}`. Requires `2 ≤ k ≤ n + 1`.
pub fn kform_obstructions(omega: &TensorField) -> Result<Obstructions> {
    let k = omega.rank();
    let n = omega.dim();
    if k < 2 {
        return Err(Error::Rank {
            expected: "at least 2".into(),
            got: k,
        });
    }
    if k > n + 1 {
        return Err(Error::InvalidArgument(format!(
            "the cocycle-implies-form pairing needs k ≤ n + 1, got k = {k}, n = {n}"
        )));
    }
    let closedness = coboundary_tensor_part(omega)?;
    let mut seen = HashSet::new();
    let mut skew = Vec::new();
    for j in MultiIndex::new(n, k + 1) {
        for q in 2..=k {
            for p in 0..=q - 2 {
                let first: Vec<usize> = j
                    .iter()
                    .enumerate()
                    .filter(|&(s, _)| s != p)
                    .map(|(_, &v)| v)
                    .collect();
                let mut second = Vec::with_capacity(k);
                for (s, &v) in j.iter().enumerate() {
                    if s == p {
                        second.push(j[q]);
                    } else if s != q {
                        second.push(v);
                    }
                }
                let sign: i8 = if (q - p) % 2 == 0 { 1 } else { -1 };
                if !seen.insert((first.clone(), second.clone(), sign)) {
                    continue;
                }
                let a = omega.get(&first).clone();
                let b = omega.get(&second).clone();
                let residual = if sign > 0 { a + b } else { a - b };
                skew.push(SkewResidual {
                    first,
                    second,
                    sign,
                    residual,
                });
            }
        }
    }
    Ok(Obstructions { closedness, skew })
}

impl Obstructions {
    /// Largest skew residual over the sample points.
    pub fn max_skew(&self, chart: &Chart, points: &[Point]) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in points {
            let scope = chart.scope(&p.0);
            for s in &self.skew {
                worst = worst.max(s.residual.eval(&scope)?.abs());
            }
        }
        Ok(worst)
    }

    pub fn max_closedness(&self, points: &[Point]) -> Result<f64> {
        points
            .iter()
            .try_fold(0.0f64, |m, p| Ok(m.max(self.closedness.max_abs_at(p)?)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Arc<Chart> {
        Chart::cube(2, -2.0, 2.0).unwrap()
    }

    fn tensor(chart: &Arc<Chart>, rank: usize, entries: &[&str]) -> TensorField {
        let coeffs = entries
            .iter()
            .map(|s| chart.parse(s, &[]).unwrap())
            .collect();
        TensorField::new(chart, rank, coeffs).unwrap()
    }

    fn coord(chart: &Arc<Chart>, i: usize) -> VectorField {
        VectorField::coordinate(chart, i)
    }

    #[test]
    fn zero_cochain_is_differential() {
        let c = plane();
        let p = c.point(vec![0.6, 0.1]).unwrap();
        let f = ScalarField::parse(&c, "x1^2").unwrap();
        let df = global_coboundary(&Cochain::from_scalar(&f));
        assert_eq!(df.apply_at(&[coord(&c, 0)], &p).unwrap(), 1.2);
    }

    #[test]
    fn rotation_form_has_constant_coboundary() {
        let c = plane();
        let omega = tensor(&c, 1, &["-x2", "x1"]);
        for coords in [[0.1, 0.2], [-1.3, 0.7]] {
            let p = c.point(coords.to_vec()).unwrap();
            let v = global_value(&omega, &[coord(&c, 0), coord(&c, 1)], &p).unwrap();
            assert_eq!(v, 2.0);
        }
        let l = coboundary_tensor_part(&omega).unwrap();
        let p = c.point(vec![0.3, 0.3]).unwrap();
        assert_eq!(l.eval_coeffs(&p).unwrap(), vec![0.0, 2.0, -2.0, 0.0]);
    }

    #[test]
    fn euclidean_metric_fails_linearity_in_last_slot() {
        let c = plane();
        let delta = tensor(&c, 2, &["1", "0", "0", "1"]);
        let x = VectorField::parse(&c, &["0", "x1"]).unwrap();
        let fields = [coord(&c, 0), coord(&c, 1), x];
        let p = c.point(vec![0.3, 0.7]).unwrap();
        assert_eq!(global_value(&delta, &fields, &p).unwrap(), 2.0);
        let local = local_coboundary(&delta).unwrap();
        assert_eq!(apply_local(&local, &fields, &p).unwrap(), 2.0);
        assert!(local.tensor_part.coeffs().iter().all(Expr::is_zero));
    }

    #[test]
    fn tensor_part_of_linear_coefficient() {
        let c = plane();
        // ω = x2 dx1⊗dx2
        let omega = tensor(&c, 2, &["0", "x2", "0", "0"]);
        let l = coboundary_tensor_part(&omega).unwrap();
        let p = c.point(vec![0.5, -0.5]).unwrap();
        let v = l
            .apply(&[coord(&c, 1), coord(&c, 0), coord(&c, 1)], &p)
            .unwrap();
        assert_eq!(v, 1.0);
    }

    #[test]
    fn k2_term_structure() {
        let local = local_coboundary(&tensor(&plane(), 2, &["x1", "x2", "x1*x2", "1"])).unwrap();
        assert_eq!(local.deriv_terms.len(), 1);
        let t = &local.deriv_terms[0];
        assert_eq!((t.contraction_slot, t.derivative_slot, t.sign), (0, 2, 1));
        // coefficient (q, s) = a_{s q} + a_{q s}
        assert_eq!(t.coeff(2, 0, &[1]).to_string(), "x2 + x1*x2");
    }

    #[test]
    fn one_form_local_is_tensor_only() {
        let local = local_coboundary(&tensor(&plane(), 1, &["x1*x2", "x2^2"])).unwrap();
        assert!(local.deriv_terms.is_empty());
        assert!(local_coboundary(&TensorField::zeros(&plane(), 0)).is_err());
    }

    #[test]
    fn obstruction_examples() {
        let c = plane();
        let pts = vec![c.point(vec![0.1, 0.2]).unwrap()];
        let delta = tensor(&c, 2, &["1", "0", "0", "1"]);
        let obs = kform_obstructions(&delta).unwrap();
        assert_eq!(obs.max_skew(&c, &pts).unwrap(), 2.0);
        let area = tensor(&c, 2, &["0", "1", "-1", "0"]);
        let obs = kform_obstructions(&area).unwrap();
        assert_eq!(obs.max_skew(&c, &pts).unwrap(), 0.0);
        assert_eq!(obs.max_closedness(&pts).unwrap(), 0.0);
        let lin = tensor(&c, 2, &["0", "x1", "0", "0"]);
        assert!(
            kform_obstructions(&lin)
                .unwrap()
                .max_closedness(&pts)
                .unwrap()
                > 0.5
        );
        let big = TensorField::zeros(&Chart::cube(1, 0.0, 1.0).unwrap(), 3);
        assert!(matches!(
            kform_obstructions(&big),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn scalar_d_squared_vanishes() {
        let c = plane();
        let f = ScalarField::parse(&c, "sin(x1)*x2^3").unwrap();
        let p = c.point(vec![0.4, -0.9]).unwrap();
        let fields = [
            VectorField::parse(&c, &["x2", "1"]).unwrap(),
            VectorField::parse(&c, &["x1^2", "x1*x2"]).unwrap(),
        ];
        assert!(d_squared_residual_scalar(&f, &fields, &p).unwrap().abs() < 1e-12);
    }
}
