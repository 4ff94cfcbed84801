//! Scene files, command dispatch and JSON reports for the `leib` binary.
//!
//! A scene is one JSON document holding a chart and named mathematical
//! objects, all written as expression strings. Reports go to stdout as JSON;
//! a human summary goes to stderr.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::fields::{Chart, MultiIndex, Point, TensorField, VectorField};
use crate::leibniz::{apply_local, global_value, local_coboundary};
use crate::quadrature::QuadratureRule;
use crate::riemann::{christoffel_first, Geometry, MetricTensor};
use crate::sampling::{Sampler, DEFAULT_INSET};
use crate::variation::{
    euler_lagrange_residual_curve, euler_lagrange_residual_surface, first_variation_exact,
    first_variation_numeric, functional_at, geodesic_residual, CurveFamily, Family, SurfaceFamily,
    S, T, T1, T2,
};
use crate::verify::{self, CheckRecord, Suite, VerifyConfig, FAMILY_EPSILON, FD_TOL};

// ---------------------------------------------------------------- scene file

/// A JSON object whose keys must be unique.
#[derive(Debug, Clone)]
struct UniqueMap<V>(BTreeMap<String, V>);

impl<V> Default for UniqueMap<V> {
    fn default() -> Self {
        UniqueMap(BTreeMap::new())
    }
}

impl<'de, V: Deserialize<'de>> Deserialize<'de> for UniqueMap<V> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct V_<V>(PhantomData<V>);
        impl<'de, V: Deserialize<'de>> Visitor<'de> for V_<V> {
            type Value = UniqueMap<V>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an object with unique keys")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> std::result::Result<Self::Value, A::Error> {
                let mut out = BTreeMap::new();
                while let Some((k, v)) = access.next_entry::<String, V>()? {
                    if out.contains_key(&k) {
                        return Err(de::Error::custom(format!("duplicate name `{k}`")));
                    }
                    out.insert(k, v);
                }
                Ok(UniqueMap(out))
            }
        }
        d.deserialize_map(V_(PhantomData))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TensorSpec {
    rank: usize,
    coefficients: Value,
}

/// Sampling defaults stored in the scene.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingSpec {
    pub seed: u64,
    pub count: usize,
    pub inset: f64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            seed: 42,
            count: 50,
            inset: DEFAULT_INSET,
        }
    }
}

/// `|R_{indices}|` at `point` (1-based indices).
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureExpectation {
    pub metric: String,
    pub indices: Vec<usize>,
    pub point: Vec<f64>,
    pub abs_value: f64,
}

/// Whether the `s = 0` member of a curve family is a geodesic of a metric.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeodesicExpectation {
    pub metric: String,
    pub curve: String,
    pub geodesic: bool,
}

/// Pairing check along a curve with a caller-supplied velocity extension.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairingExpectation {
    pub metric: String,
    pub curve: String,
    pub extension: String,
    pub field: String,
}

/// A known first variation.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationExpectation {
    pub tensor: String,
    pub family: String,
    pub value: f64,
}

/// Scene-specific facts checked by `verify`.
#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Expectations {
    pub curvature: Vec<CurvatureExpectation>,
    pub geodesics: Vec<GeodesicExpectation>,
    pub pairings: Vec<PairingExpectation>,
    pub first_variation: Vec<VariationExpectation>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    dimension: usize,
    coordinates: Vec<String>,
    domain: Vec<[f64; 2]>,
    #[serde(default)]
    metrics: UniqueMap<Vec<Vec<String>>>,
    #[serde(default)]
    tensors: UniqueMap<TensorSpec>,
    #[serde(default)]
    fields: UniqueMap<Vec<String>>,
    #[serde(default)]
    curves: UniqueMap<Vec<String>>,
    #[serde(default)]
    surfaces: UniqueMap<Vec<String>>,
    #[serde(default)]
    sampling: SamplingSpec,
    #[serde(default)]
    expect: Expectations,
}

/// A fully validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub chart: Arc<Chart>,
    pub metrics: BTreeMap<String, MetricTensor>,
    pub tensors: BTreeMap<String, TensorField>,
    pub fields: BTreeMap<String, VectorField>,
    pub curves: BTreeMap<String, CurveFamily>,
    pub surfaces: BTreeMap<String, SurfaceFamily>,
    pub sampling: SamplingSpec,
    pub expect: Expectations,
    /// Hex SHA-256 of the scene text.
    pub hash: String,
}

fn context(what: impl fmt::Display) -> impl FnOnce(Error) -> Error {
    move |e| Error::Scene(format!("{what}: {e}"))
}

fn parse_components(
    chart: &Arc<Chart>,
    what: &str,
    comps: &[String],
    extra: &[&str],
) -> Result<Vec<Expr>> {
    if comps.len() != chart.dim() {
        return Err(Error::Scene(format!(
            "{what}: expected {} components, got {}",
            chart.dim(),
            comps.len()
        )));
    }
    comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            chart
                .parse(c, extra)
                .map_err(context(format!("{what}[{i}]")))
        })
        .collect()
}

/// Flattens a nested `rank`-deep grid of side `n` in row-major order.
fn flatten_grid(
    value: &Value,
    n: usize,
    rank: usize,
    path: String,
    out: &mut Vec<(String, String)>,
) -> Result<()> {
    if rank == 0 {
        let text = match value {
            Value::String(s) => s.clone(),
            Value::Number(x) => x.to_string(),
            other => {
                return Err(Error::Scene(format!(
                    "{path}: expected an expression, got {other}"
                )))
            }
        };
        out.push((path, text));
        return Ok(());
    }
    let Value::Array(items) = value else {
        return Err(Error::Scene(format!(
            "{path}: expected an array of length {n}"
        )));
    };
    if items.len() != n {
        return Err(Error::Scene(format!(
            "{path}: expected {n} entries, got {}",
            items.len()
        )));
    }
    for (i, item) in items.iter().enumerate() {
        flatten_grid(item, n, rank - 1, format!("{path}[{i}]"), out)?;
    }
    Ok(())
}

impl Scene {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Scene(format!("cannot read {}: {e}", path.display())))?;
        Scene::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile =
            serde_json::from_str(text).map_err(|e| Error::Scene(e.to_string()))?;
        let n = file.dimension;
        if file.coordinates.len() != n || file.domain.len() != n {
            return Err(Error::Scene(format!(
                "dimension {n} disagrees with {} coordinates and {} domain intervals",
                file.coordinates.len(),
                file.domain.len()
            )));
        }
        let chart = Chart::new(
            file.coordinates.clone(),
            file.domain.iter().map(|[a, b]| (*a, *b)).collect(),
        )
        .map_err(context("chart"))?;

        let mut seen = BTreeSet::new();
        let all_names = file
            .metrics
            .0
            .keys()
            .chain(file.tensors.0.keys())
            .chain(file.fields.0.keys())
            .chain(file.curves.0.keys())
            .chain(file.surfaces.0.keys());
        for name in all_names {
            if !seen.insert(name.clone()) {
                return Err(Error::Scene(format!("name `{name}` is used twice")));
            }
        }

        let points = Sampler::new(file.sampling.seed).points(
            &chart,
            file.sampling.count,
            file.sampling.inset,
        );
        let mut metrics = BTreeMap::new();
        for (name, rows) in &file.metrics.0 {
            let what = format!("metrics.{name}");
            let g = MetricTensor::parse(&chart, rows).map_err(context(&what))?;
            g.check_nondegenerate(&points).map_err(context(&what))?;
            metrics.insert(name.clone(), g);
        }
        let mut tensors = BTreeMap::new();
        for (name, spec) in &file.tensors.0 {
            let mut entries = Vec::new();
            flatten_grid(
                &spec.coefficients,
                n,
                spec.rank,
                format!("tensors.{name}.coefficients"),
                &mut entries,
            )?;
            let coeffs = entries
                .iter()
                .map(|(path, text)| chart.parse(text, &[]).map_err(context(path)))
                .collect::<Result<Vec<_>>>()?;
            tensors.insert(name.clone(), TensorField::new(&chart, spec.rank, coeffs)?);
        }
        let mut fields = BTreeMap::new();
        for (name, comps) in &file.fields.0 {
            let comps = parse_components(&chart, &format!("fields.{name}"), comps, &[])?;
            fields.insert(name.clone(), VectorField::new(&chart, comps)?);
        }
        let mut curves = BTreeMap::new();
        for (name, comps) in &file.curves.0 {
            let what = format!("curves.{name}");
            let comps = parse_components(&chart, &what, comps, &[S, T])?;
            curves.insert(
                name.clone(),
                CurveFamily::new(&chart, comps, FAMILY_EPSILON).map_err(context(&what))?,
            );
        }
        let mut surfaces = BTreeMap::new();
        for (name, comps) in &file.surfaces.0 {
            let what = format!("surfaces.{name}");
            let comps = parse_components(&chart, &what, comps, &[S, T1, T2])?;
            surfaces.insert(
                name.clone(),
                SurfaceFamily::new(&chart, comps, FAMILY_EPSILON).map_err(context(&what))?,
            );
        }
        let hash = hex::encode(Sha256::digest(text.as_bytes()));
        Ok(Scene {
            chart,
            metrics,
            tensors,
            fields,
            curves,
            surfaces,
            sampling: file.sampling,
            expect: file.expect,
            hash,
        })
    }

    fn unknown(kind: &str, name: &str) -> Error {
        Error::InvalidArgument(format!("unknown {kind} `{name}`"))
    }

    pub fn metric(&self, name: &str) -> Result<&MetricTensor> {
        self.metrics
            .get(name)
            .ok_or_else(|| Scene::unknown("metric", name))
    }

    pub fn geometry(&self, name: &str) -> Result<Geometry> {
        Geometry::new(self.metric(name)?.clone())
    }

    /// Named tensors; metrics count as 2-tensors.
    pub fn tensor(&self, name: &str) -> Result<&TensorField> {
        self.tensors
            .get(name)
            .or_else(|| self.metrics.get(name).map(MetricTensor::tensor))
            .ok_or_else(|| Scene::unknown("tensor", name))
    }

    pub fn field(&self, name: &str) -> Result<&VectorField> {
        self.fields
            .get(name)
            .ok_or_else(|| Scene::unknown("field", name))
    }

    pub fn curve(&self, name: &str) -> Result<&CurveFamily> {
        self.curves
            .get(name)
            .ok_or_else(|| Scene::unknown("curve", name))
    }

    pub fn family(&self, name: &str) -> Result<Family> {
        if let Some(c) = self.curves.get(name) {
            return Ok(c.clone().into());
        }
        self.surfaces
            .get(name)
            .map(|s| s.clone().into())
            .ok_or_else(|| Scene::unknown("family", name))
    }
}

// ---------------------------------------------------------------- arguments

#[derive(Debug, Parser)]
#[command(
    name = "leib",
    version,
    about = "Leibniz coboundary, curvature and first-variation checks on a chart"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Christoffel symbols of both kinds.
    Christoffel(CommandArgs),
    /// Local structure of a tensor's coboundary, or its value on fields.
    Coboundary(CommandArgs),
    /// Curvature components and identity residuals.
    Curvature(CommandArgs),
    /// Functional value, first variations and Euler-Lagrange residuals.
    Variation(CommandArgs),
    /// Run the verification suites.
    Verify(CommandArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Christoffel(_) => "christoffel",
            Command::Coboundary(_) => "coboundary",
            Command::Curvature(_) => "curvature",
            Command::Variation(_) => "variation",
            Command::Verify(_) => "verify",
        }
    }

    fn args(&self) -> &CommandArgs {
        match self {
            Command::Christoffel(a)
            | Command::Coboundary(a)
            | Command::Curvature(a)
            | Command::Variation(a)
            | Command::Verify(a) => a,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommandArgs {
    #[arg(long)]
    pub scene: PathBuf,
    #[arg(long)]
    pub tensor: Option<String>,
    #[arg(long)]
    pub metric: Option<String>,
    /// Comma-separated field names.
    #[arg(long, value_delimiter = ',')]
    pub fields: Vec<String>,
    /// Comma-separated coordinates.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub point: Vec<f64>,
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value = "all")]
    pub suite: Suite,
    /// Sample count; defaults to the scene's.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Seed; defaults to the scene's.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long = "fd-step", default_value_t = 1e-3)]
    pub fd_step: f64,
    #[arg(long = "quad-nodes", default_value_t = 32)]
    pub quad_nodes: usize,
}

// ---------------------------------------------------------------- reports

/// Everything a command prints on stdout.
#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub command: String,
    pub scene: String,
    pub scene_hash: String,
    pub seed: u64,
    pub checks: Vec<CheckRecord>,
    pub results: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub wall_time: f64,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.checks.iter().all(|c| c.pass)
    }

    /// 0 when every check passes, 1 on a failed check, 2 on a usage or scene error.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            2
        } else if self.passed() {
            0
        } else {
            1
        }
    }

    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let op = match c.comparison {
                verify::Comparison::AtMost => "<=",
                verify::Comparison::Above => ">",
            };
            out.push_str(&format!(
                "{} {} residual {:.3e} (want {op} {:.1e}){}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.max_residual,
                c.tolerance,
                c.detail
                    .as_ref()
                    .map(|d| format!(" [{d}]"))
                    .unwrap_or_default()
            ));
        }
        if let Some(e) = &self.error {
            out.push_str(&format!("error: {e}\n"));
        }
        let failed = self.checks.iter().filter(|c| !c.pass).count();
        out.push_str(&format!(
            "{}: {} checks, {} failed, {:.2}s\n",
            self.command,
            self.checks.len(),
            failed,
            self.wall_time
        ));
        out
    }
}

fn config(args: &CommandArgs, scene: &Scene) -> VerifyConfig {
    VerifyConfig {
        seed: args.seed.unwrap_or(scene.sampling.seed),
        samples: args.samples.unwrap_or(scene.sampling.count),
        tol: args.tol,
        fd_step: args.fd_step,
        quad_nodes: args.quad_nodes,
        inset: scene.sampling.inset,
    }
}

fn pick<'a>(
    given: &'a Option<String>,
    available: impl Iterator<Item = &'a String>,
    what: &str,
) -> Result<&'a str> {
    if let Some(name) = given {
        return Ok(name);
    }
    let all: Vec<&String> = available.collect();
    match all.as_slice() {
        [only] => Ok(only),
        _ => Err(Error::InvalidArgument(format!(
            "--{what} is required (scene has {} candidates)",
            all.len()
        ))),
    }
}

fn requested_point(args: &CommandArgs, scene: &Scene) -> Result<Option<Point>> {
    if args.point.is_empty() {
        Ok(None)
    } else {
        scene.chart.point(args.point.clone()).map(Some)
    }
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

fn christoffel(
    scene: &Scene,
    args: &CommandArgs,
    cfg: &VerifyConfig,
) -> Result<(Value, Vec<CheckRecord>)> {
    let name = pick(&args.metric, scene.metrics.keys(), "metric")?;
    let geo = scene.geometry(name)?;
    let n = scene.chart.dim();
    let point = requested_point(args, scene)?;
    let value = |e: &Expr| -> Result<Option<f64>> {
        point
            .as_ref()
            .map(|p| Ok(e.eval(&scene.chart.scope(&p.0))?))
            .transpose()
    };
    let first = christoffel_first(&geo.metric);
    let mut first_rows = Vec::new();
    let mut second_rows = Vec::new();
    for idx in MultiIndex::new(n, 3) {
        let (a, b, c) = (idx[0], idx[1], idx[2]);
        let e = first.get(a, b, c);
        first_rows
            .push(json!({"indices": one_based(&idx), "expr": e.to_string(), "value": value(e)?}));
        let e = geo.connection.get(a, b, c);
        second_rows
            .push(json!({"indices": one_based(&idx), "expr": e.to_string(), "value": value(e)?}));
    }
    let results = json!({
        "metric": name,
        "point": point.as_ref().map(|p| p.0.clone()),
        "first_kind": first_rows,
        "second_kind": second_rows,
    });
    let checks = vec![
        verify::christoffel_identity(name, &geo, cfg),
        verify::levi_civita_properties(name, &geo, cfg),
    ];
    Ok((results, checks))
}

fn coboundary(
    scene: &Scene,
    args: &CommandArgs,
    cfg: &VerifyConfig,
) -> Result<(Value, Vec<CheckRecord>)> {
    let all_tensors = scene.tensors.keys().chain(scene.metrics.keys());
    let name = pick(&args.tensor, all_tensors, "tensor")?;
    let omega = scene.tensor(name)?;
    let n = scene.chart.dim();
    let point = requested_point(args, scene)?;
    if !args.fields.is_empty() {
        let fields = args
            .fields
            .iter()
            .map(|f| scene.field(f).cloned())
            .collect::<Result<Vec<_>>>()?;
        let p = point.ok_or_else(|| Error::InvalidArgument("--fields needs --point".into()))?;
        let local = apply_local(&local_coboundary(omega)?, &fields, &p)?;
        let global = global_value(omega, &fields, &p)?;
        let results = json!({"tensor": name, "fields": args.fields, "point": p.0, "local": local, "global": global});
        let residual = (local - global).abs() / (1.0 + global.abs());
        let check = CheckRecord {
            name: format!("coboundary.{name}.local_vs_global"),
            anchor: "local L/S expansion equals the cochain formula".into(),
            max_residual: residual,
            tolerance: cfg.tol,
            comparison: verify::Comparison::AtMost,
            pass: residual <= cfg.tol,
            samples: 1,
            seed: cfg.seed,
            detail: None,
        };
        return Ok((results, vec![check]));
    }
    let local = local_coboundary(omega)?;
    let scope_point = point.clone();
    let value = |e: &Expr| -> Result<Option<f64>> {
        scope_point
            .as_ref()
            .map(|p| Ok(e.eval(&scene.chart.scope(&p.0))?))
            .transpose()
    };
    let mut tensor_part = Vec::new();
    for (idx, e) in local.tensor_part.indices().zip(local.tensor_part.coeffs()) {
        if !e.is_zero() {
            tensor_part.push(
                json!({"indices": one_based(&idx), "expr": e.to_string(), "value": value(e)?}),
            );
        }
    }
    let mut deriv_terms = Vec::new();
    for term in &local.deriv_terms {
        let mut coeffs = Vec::new();
        for (idx, e) in MultiIndex::new(n, omega.rank()).zip(&term.coeffs) {
            if !e.is_zero() {
                coeffs.push(json!({
                    "component": idx[0] + 1,
                    "free": one_based(&idx[1..]),
                    "expr": e.to_string(),
                    "value": value(e)?,
                }));
            }
        }
        deriv_terms.push(json!({
            "contraction_slot": term.contraction_slot + 1,
            "derivative_slot": term.derivative_slot + 1,
            "sign": term.sign,
            "coefficients": coeffs,
        }));
    }
    let results = json!({
        "tensor": name,
        "rank": omega.rank() + 1,
        "point": point.map(|p| p.0),
        "tensor_part": tensor_part,
        "deriv_terms": deriv_terms,
    });
    let check = tensor_local_global(name, omega, cfg);
    Ok((results, vec![check]))
}

/// Local against global on random fields for one named tensor.
fn tensor_local_global(name: &str, omega: &TensorField, cfg: &VerifyConfig) -> CheckRecord {
    let chart = omega.chart();
    let mut s = Sampler::for_stream(cfg.seed, omega.rank() as u64);
    let mut worst = 0.0f64;
    let mut detail = None;
    for _ in 0..cfg.samples {
        let fields = s.vector_fields(chart, omega.rank() + 1, 2);
        let p = s.point(chart, cfg.inset);
        let outcome = local_coboundary(omega)
            .and_then(|l| apply_local(&l, &fields, &p))
            .and_then(|a| Ok((a, global_value(omega, &fields, &p)?)));
        match outcome {
            Ok((a, b)) => worst = worst.max((a - b).abs() / (1.0 + b.abs())),
            Err(e) => {
                worst = f64::NAN;
                detail = Some(e.to_string());
                break;
            }
        }
    }
    CheckRecord {
        name: format!("coboundary.{name}.local_vs_global"),
        anchor: "local L/S expansion equals the cochain formula".into(),
        max_residual: worst,
        tolerance: cfg.tol,
        comparison: verify::Comparison::AtMost,
        pass: worst <= cfg.tol,
        samples: cfg.samples,
        seed: cfg.seed,
        detail,
    }
}

fn curvature(
    scene: &Scene,
    args: &CommandArgs,
    cfg: &VerifyConfig,
) -> Result<(Value, Vec<CheckRecord>)> {
    let name = pick(&args.metric, scene.metrics.keys(), "metric")?;
    let geo = scene.geometry(name)?;
    let p = match requested_point(args, scene)? {
        Some(p) => p,
        None => Sampler::new(cfg.seed).point(&scene.chart, cfg.inset),
    };
    let scope = scene.chart.scope(&p.0);
    let mut components = Vec::new();
    for (idx, e) in geo.riemann.indices().zip(geo.riemann.coeffs()) {
        let v = e.eval(&scope)?;
        if v != 0.0 {
            components.push(json!({"indices": one_based(&idx), "value": v}));
        }
    }
    let results = json!({"metric": name, "point": p.0, "riemann": components});
    Ok((results, verify::riemann_suite(name, &geo, cfg)))
}

fn variation(
    scene: &Scene,
    args: &CommandArgs,
    cfg: &VerifyConfig,
) -> Result<(Value, Vec<CheckRecord>)> {
    let tensor = args
        .tensor
        .as_deref()
        .ok_or_else(|| Error::InvalidArgument("--tensor is required".into()))?;
    let families = scene.curves.keys().chain(scene.surfaces.keys());
    let family_name = pick(&args.family, families, "family")?;
    let omega = scene.tensor(tensor)?;
    let family = scene.family(family_name)?;
    let rule = QuadratureRule::gauss_legendre(cfg.quad_nodes)?;
    let value = functional_at(omega, &family, &rule, 0.0)?;
    let exact = first_variation_exact(omega, &family, &rule)?;
    let numeric = first_variation_numeric(omega, &family, &rule, cfg.fd_step)?;
    let el = match &family {
        Family::Curve(f) => {
            euler_lagrange_residual_curve(omega, &f.at(0.0)?)?.max_abs_on_grid(33)?
        }
        Family::Surface(f) => {
            euler_lagrange_residual_surface(omega, &f.at(0.0)?)?.max_abs_on_grid(17)?
        }
    };
    let geodesic = match (&args.metric, &family) {
        (Some(m), Family::Curve(f)) => {
            Some(geodesic_residual(scene.metric(m)?, &f.at(0.0)?)?.max_abs_on_grid(33)?)
        }
        (Some(_), Family::Surface(_)) => {
            return Err(Error::InvalidArgument(
                "geodesic residuals need a curve family".into(),
            ))
        }
        (None, _) => None,
    };
    let results = json!({
        "tensor": tensor,
        "family": family_name,
        "functional": value,
        "first_variation_exact": exact,
        "first_variation_numeric": numeric,
        "euler_lagrange_max": el,
        "geodesic_residual_max": geodesic,
    });
    let residual = (numeric - exact).abs() / (1.0 + exact.abs());
    let check = CheckRecord {
        name: format!("variation.{tensor}.{family_name}.exact_vs_numeric"),
        anchor: "first variation by Euler-Lagrange integrand and by differences".into(),
        max_residual: residual,
        tolerance: FD_TOL,
        comparison: verify::Comparison::AtMost,
        pass: residual <= FD_TOL,
        samples: 1,
        seed: cfg.seed,
        detail: None,
    };
    Ok((results, vec![check]))
}

fn verify_command(
    scene: &Scene,
    args: &CommandArgs,
    cfg: &VerifyConfig,
) -> Result<(Value, Vec<CheckRecord>)> {
    let checks = verify::scene_suite(scene, args.suite, cfg);
    let failed = checks.iter().filter(|c| !c.pass).count();
    let results =
        json!({"suite": args.suite.to_string(), "checks": checks.len(), "failed": failed});
    Ok((results, checks))
}

/// Runs one command. Scene and argument problems become `Report::error`.
pub fn run(command: &Command) -> Report {
    let started = Instant::now();
    let args = command.args();
    let mut report = Report {
        command: command.name().to_string(),
        scene: args
            .scene
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_default(),
        scene_hash: String::new(),
        seed: args.seed.unwrap_or(0),
        checks: Vec::new(),
        results: Value::Null,
        error: None,
        wall_time: 0.0,
    };
    let outcome = Scene::load(&args.scene).and_then(|scene| {
        let cfg = config(args, &scene);
        report.scene_hash = scene.hash.clone();
        report.seed = cfg.seed;
        match command {
            Command::Christoffel(a) => christoffel(&scene, a, &cfg),
            Command::Coboundary(a) => coboundary(&scene, a, &cfg),
            Command::Curvature(a) => curvature(&scene, a, &cfg),
            Command::Variation(a) => variation(&scene, a, &cfg),
            Command::Verify(a) => verify_command(&scene, a, &cfg),
        }
    });
    match outcome {
        Ok((results, checks)) => {
            report.results = results;
            report.checks = checks;
        }
        Err(e) => report.error = Some(e.to_string()),
    }
    report.wall_time = started.elapsed().as_secs_f64();
    report
}

/// Entry point of the binary; returns the process exit code.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let report = run(&cli.command);
    match serde_json::to_string_pretty(&report) {
        Ok(text) => println!("{text}"),
        Err(e) => {
            eprintln!("cannot serialize report: {e}");
            return 2;
        }
    }
    eprint!("{}", report.summary());
    report.exit_code()
}

#[cfg(test)]
mod tests {
    use super::*;

    const FLAT: &str = r#"{
        "dimension": 2,
        "coordinates": ["x1", "x2"],
        "domain": [[-1, 1], [-1, 1]],
        "metrics": {"metric": [["1", "0"], ["0", "1"]]},
        "tensors": {"w": {"rank": 2, "coefficients": [["0", "x2"], ["0", "0"]]}},
        "fields": {"d1": ["1", "0"], "d2": ["0", "1"], "xd2": ["0", "x1"]},
        "curves": {"bump": ["t", "s*t*(1 - t)"]}
    }"#;

    #[test]
    fn loads_and_resolves_names() {
        let scene = Scene::from_json(FLAT).unwrap();
        assert_eq!(scene.chart.dim(), 2);
        assert_eq!(scene.tensor("metric").unwrap().rank(), 2);
        assert_eq!(scene.tensor("w").unwrap().rank(), 2);
        assert!(scene.field("nope").is_err());
        assert_eq!(scene.hash.len(), 64);
        assert!(matches!(scene.family("bump").unwrap(), Family::Curve(_)));
    }

    #[test]
    fn rejects_bad_scenes() {
        let asym = FLAT.replace(
            r#"[["1", "0"], ["0", "1"]]"#,
            r#"[["1", "x1"], ["0", "1"]]"#,
        );
        let err = Scene::from_json(&asym).unwrap_err().to_string();
        assert!(err.contains("metric not symmetric"), "{err}");
        let arity = FLAT.replace(r#"[["0", "x2"], ["0", "0"]]"#, r#"[["0", "x2"], ["0"]]"#);
        assert!(Scene::from_json(&arity)
            .unwrap_err()
            .to_string()
            .contains("expected 2 entries"));
        let unknown = FLAT.replace(r#""xd2": ["0", "x1"]"#, r#""xd2": ["0", "x3"]"#);
        let err = Scene::from_json(&unknown).unwrap_err().to_string();
        assert!(err.contains("fields.xd2[1]") && err.contains("x3"), "{err}");
        let dup = FLAT.replace(r#""d2": ["0", "1"]"#, r#""d1": ["0", "1"]"#);
        assert!(Scene::from_json(&dup)
            .unwrap_err()
            .to_string()
            .contains("duplicate name"));
        let clash = FLAT.replace(r#""xd2": ["0", "x1"]"#, r#""w": ["0", "x1"]"#);
        assert!(Scene::from_json(&clash)
            .unwrap_err()
            .to_string()
            .contains("used twice"));
        let degenerate = FLAT.replace(r#"[["1", "0"], ["0", "1"]]"#, r#"[["1", "1"], ["1", "1"]]"#);
        assert!(Scene::from_json(&degenerate)
            .unwrap_err()
            .to_string()
            .contains("degenerate"));
    }

    #[test]
    fn flattens_nested_grids_row_major() {
        let v: Value = serde_json::from_str(r#"[["a", "b"], ["c", 1]]"#).unwrap();
        let mut out = Vec::new();
        flatten_grid(&v, 2, 2, "g".into(), &mut out).unwrap();
        let texts: Vec<&str> = out.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(texts, ["a", "b", "c", "1"]);
        assert_eq!(out[2].0, "g[1][0]");
    }
}
