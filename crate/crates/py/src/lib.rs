//! Python bindings: expressions, scenes and the verification suites.

use std::collections::HashMap;

use clap::Parser;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyTuple};

use leib_core::cli::{self, Cli, Scene};
use leib_core::leibniz::{apply_local, global_value, local_coboundary};
use leib_core::quadrature::QuadratureRule;
use leib_core::riemann::christoffel_first;
use leib_core::variation::{first_variation_exact, first_variation_numeric, functional_at};
use leib_core::verify::{self, CheckRecord, Suite, VerifyConfig};
use leib_core::{parse_expr, Expr, MultiIndex, Point};

fn py_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A symbolic expression over named variables.
#[pyclass(name = "Expr", frozen)]
struct PyExpr {
    inner: Expr,
}

#[pymethods]
impl PyExpr {
    #[new]
    fn new(text: &str, variables: Vec<String>) -> PyResult<Self> {
        parse_expr(text, &variables)
            .map(|inner| PyExpr { inner })
            .map_err(py_err)
    }

    fn diff(&self, variable: &str) -> PyExpr {
        PyExpr {
            inner: self.inner.diff(variable),
        }
    }

    fn eval(&self, values: HashMap<String, f64>) -> PyResult<f64> {
        self.inner.eval(&values).map_err(py_err)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Expr('{}')", self.inner)
    }
}

/// One verification outcome.
#[pyclass(name = "Check", frozen, get_all)]
struct PyCheck {
    name: String,
    anchor: String,
    max_residual: f64,
    tolerance: f64,
    passed: bool,
    samples: usize,
    seed: u64,
    detail: Option<String>,
}

impl From<CheckRecord> for PyCheck {
    fn from(c: CheckRecord) -> Self {
        PyCheck {
            name: c.name,
            anchor: c.anchor,
            max_residual: c.max_residual,
            tolerance: c.tolerance,
            passed: c.pass,
            samples: c.samples,
            seed: c.seed,
            detail: c.detail,
        }
    }
}

#[pymethods]
impl PyCheck {
    fn __repr__(&self) -> String {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        format!(
            "Check({} {verdict} residual={:e})",
            self.name, self.max_residual
        )
    }
}

/// A validated scene file.
#[pyclass(name = "Scene", frozen)]
struct PyScene {
    inner: Scene,
}

impl PyScene {
    fn point(&self, coords: Vec<f64>) -> PyResult<Point> {
        self.inner.chart.point(coords).map_err(py_err)
    }
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Scene::load(path)
            .map(|inner| PyScene { inner })
            .map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Scene::from_json(text)
            .map(|inner| PyScene { inner })
            .map_err(py_err)
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.chart.dim()
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash.clone()
    }

    #[getter]
    fn metrics(&self) -> Vec<String> {
        self.inner.metrics.keys().cloned().collect()
    }

    #[getter]
    fn tensors(&self) -> Vec<String> {
        self.inner.tensors.keys().cloned().collect()
    }

    #[getter]
    fn fields(&self) -> Vec<String> {
        self.inner.fields.keys().cloned().collect()
    }

    /// `(local, global)` values of the coboundary of `tensor` on named fields at `point`.
    fn coboundary(
        &self,
        tensor: &str,
        fields: Vec<String>,
        point: Vec<f64>,
    ) -> PyResult<(f64, f64)> {
        let omega = self.inner.tensor(tensor).map_err(py_err)?;
        let fields = fields
            .iter()
            .map(|f| self.inner.field(f).cloned())
            .collect::<Result<Vec<_>, _>>()
            .map_err(py_err)?;
        let p = self.point(point)?;
        let local = local_coboundary(omega)
            .and_then(|l| apply_local(&l, &fields, &p))
            .map_err(py_err)?;
        let global = global_value(omega, &fields, &p).map_err(py_err)?;
        Ok((local, global))
    }

    /// Christoffel symbols `([ij,l], Gamma^m_ij)` at `point`, keyed by 0-based indices.
    #[allow(clippy::type_complexity)]
    fn christoffel(
        &self,
        metric: &str,
        point: Vec<f64>,
    ) -> PyResult<(
        HashMap<(usize, usize, usize), f64>,
        HashMap<(usize, usize, usize), f64>,
    )> {
        let geo = self.inner.geometry(metric).map_err(py_err)?;
        let p = self.point(point)?;
        let scope = self.inner.chart.scope(&p.0);
        let first = christoffel_first(&geo.metric);
        let (mut lowered, mut raised) = (HashMap::new(), HashMap::new());
        for idx in MultiIndex::new(self.inner.chart.dim(), 3) {
            let key = (idx[0], idx[1], idx[2]);
            lowered.insert(
                key,
                first
                    .get(idx[0], idx[1], idx[2])
                    .eval(&scope)
                    .map_err(py_err)?,
            );
            raised.insert(
                key,
                geo.connection
                    .get(idx[0], idx[1], idx[2])
                    .eval(&scope)
                    .map_err(py_err)?,
            );
        }
        Ok((lowered, raised))
    }

    /// All components `R_{ijkl}` at `point`, keyed by 0-based index tuples.
    fn riemann<'py>(
        &self,
        py: Python<'py>,
        metric: &str,
        point: Vec<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let geo = self.inner.geometry(metric).map_err(py_err)?;
        let p = self.point(point)?;
        let scope = self.inner.chart.scope(&p.0);
        let out = PyDict::new(py);
        for (idx, e) in geo.riemann.indices().zip(geo.riemann.coeffs()) {
            out.set_item(PyTuple::new(py, idx)?, e.eval(&scope).map_err(py_err)?)?;
        }
        Ok(out)
    }

    /// `(J, exact dJ/ds, numeric dJ/ds)` for a tensor and a named family.
    #[pyo3(signature = (tensor, family, quad_nodes = 32, fd_step = 1e-3))]
    fn first_variation(
        &self,
        tensor: &str,
        family: &str,
        quad_nodes: usize,
        fd_step: f64,
    ) -> PyResult<(f64, f64, f64)> {
        let omega = self.inner.tensor(tensor).map_err(py_err)?;
        let family = self.inner.family(family).map_err(py_err)?;
        let rule = QuadratureRule::gauss_legendre(quad_nodes).map_err(py_err)?;
        let value = functional_at(omega, &family, &rule, 0.0).map_err(py_err)?;
        let exact = first_variation_exact(omega, &family, &rule).map_err(py_err)?;
        let numeric = first_variation_numeric(omega, &family, &rule, fd_step).map_err(py_err)?;
        Ok((value, exact, numeric))
    }

    /// Runs a verification suite; seed and sample count default to the scene's.
    #[pyo3(signature = (suite = "all", seed = None, samples = None, tol = 1e-9))]
    fn verify(
        &self,
        suite: &str,
        seed: Option<u64>,
        samples: Option<usize>,
        tol: f64,
    ) -> PyResult<Vec<PyCheck>> {
        let suite: Suite = suite.parse().map_err(py_err)?;
        let cfg = VerifyConfig {
            seed: seed.unwrap_or(self.inner.sampling.seed),
            samples: samples.unwrap_or(self.inner.sampling.count),
            tol,
            inset: self.inner.sampling.inset,
            ..VerifyConfig::default()
        };
        Ok(verify::scene_suite(&self.inner, suite, &cfg)
            .into_iter()
            .map(PyCheck::from)
            .collect())
    }
}

/// Runs a `leib` command line (without the program name) and returns `(exit_code, report_json)`.
#[pyfunction]
fn run_command(args: Vec<String>) -> PyResult<(i32, String)> {
    let cli =
        Cli::try_parse_from(std::iter::once("leib".to_string()).chain(args)).map_err(py_err)?;
    let report = cli::run(&cli.command);
    let json = serde_json::to_string_pretty(&report).map_err(py_err)?;
    Ok((report.exit_code(), json))
}

#[pymodule]
fn leibpy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyExpr>()?;
    m.add_class::<PyCheck>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    Ok(())
}
