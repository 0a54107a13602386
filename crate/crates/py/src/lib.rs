//! Python bindings: grids and delta calculus, expression partials, the IVP
//! solver, and the synthesize/verify pipeline.

use std::sync::Arc;

use deltavar_core::config::{self, LagrangianBundle, ProblemConfig, Synthesis};
use deltavar_core::{
    CoefficientPair, Error, GridFunction, IvpMethod, Lagrangian, Support, TimeScaleGrid, VariationalProblem,
};
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(deltavar, DeltavarError, PyValueError, "Malformed input or configuration.");
create_exception!(deltavar, ValidationError, DeltavarError, "Inputs violate a mathematical precondition.");
create_exception!(deltavar, BoundaryMismatchError, DeltavarError, "Trajectory does not meet the boundary values.");

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Validation(_) | Error::Eval { .. } => ValidationError::new_err(e.to_string()),
        Error::BoundaryMismatch(_) => BoundaryMismatchError::new_err(e.to_string()),
        _ => DeltavarError::new_err(e.to_string()),
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for deltavar_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

fn json_to_py<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// An isolated time scale given by its points.
#[pyclass(name = "Grid", module = "deltavar", frozen)]
struct PyGrid {
    inner: Arc<TimeScaleGrid>,
}

impl PyGrid {
    fn function(&self, values: Vec<f64>) -> PyResult<GridFunction> {
        let g = &self.inner;
        let support = [Support::Full, Support::Kappa, Support::Kappa2]
            .into_iter()
            .find(|s| s.len_on(g) == values.len())
            .ok_or_else(|| {
                DeltavarError::new_err(format!(
                    "{} values fit neither the grid ({}), its κ-domain nor its κ²-domain",
                    values.len(),
                    g.len()
                ))
            })?;
        GridFunction::new(g.clone(), support, values).py()
    }
}

#[pymethods]
impl PyGrid {
    #[staticmethod]
    fn uniform(a: f64, b: f64, h: f64) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(TimeScaleGrid::uniform(a, b, h).py()?) })
    }

    #[staticmethod]
    fn qpow(q: f64, kmin: i32, kmax: i32) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(TimeScaleGrid::qpow(q, kmin, kmax).py()?) })
    }

    #[staticmethod]
    fn explicit(points: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: Arc::new(TimeScaleGrid::from_points(points).py()?) })
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.inner.points().to_vec()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Grid({} points on [{}, {}])", self.inner.len(), self.inner.a(), self.inner.b())
    }

    fn sigma(&self, t: f64) -> PyResult<f64> {
        self.inner.sigma(t).py()
    }

    fn rho(&self, t: f64) -> PyResult<f64> {
        self.inner.rho(t).py()
    }

    fn mu(&self, t: f64) -> PyResult<f64> {
        self.inner.mu(t).py()
    }

    /// Forward quotient on the κ-domain of values given on every point.
    fn delta_derivative(&self, values: Vec<f64>) -> PyResult<Vec<f64>> {
        let f = self.function(values)?;
        Ok(deltavar_core::delta_derivative(&f).py()?.into_values())
    }

    /// `Σ_{t ∈ [lo, hi)} μ(t) f(t)`.
    fn delta_integral(&self, values: Vec<f64>, lo: f64, hi: f64) -> PyResult<f64> {
        let f = self.function(values)?;
        deltavar_core::delta_integral(&f, lo, hi).py()
    }

    /// `e_p(t, t0)` for `p` given on the κ- or κ²-domain.
    fn exp(&self, p: Vec<f64>, t: f64, t0: f64) -> PyResult<f64> {
        let p = self.function(p)?;
        deltavar_core::exp_ts(&p, t, t0).py()
    }

    /// Solves `y^Δ = p y + f`, `y(a) = y0`; `method` is `recurrence`,
    /// `var_of_constants` or `factored`.
    #[pyo3(signature = (p, f, y0, method = "recurrence"))]
    fn solve_ivp(&self, p: Vec<f64>, f: Vec<f64>, y0: f64, method: &str) -> PyResult<Vec<f64>> {
        let method = match method {
            "recurrence" => IvpMethod::Recurrence,
            "var_of_constants" => IvpMethod::VariationOfConstants,
            "factored" => IvpMethod::Factored,
            other => return Err(DeltavarError::new_err(format!("unknown method `{other}`"))),
        };
        let pair = CoefficientPair::new(self.function(p)?, self.function(f)?).py()?;
        Ok(deltavar_core::solve_ivp(&pair, self.inner.a(), y0, method).py()?.into_values())
    }
}

/// Parses an expression and returns it fully parenthesized.
#[pyfunction]
fn parse(src: &str) -> PyResult<String> {
    deltavar_core::parse(src).map(|e| e.to_string()).map_err(|e| py_err(e.into()))
}

/// Value and partials `d_x, d_v, d_xx, d_xv, d_vv` of an expression at `(t, x, v)`.
#[pyfunction]
fn eval2<'py>(py: Python<'py>, src: &str, t: f64, x: f64, v: f64) -> PyResult<Bound<'py, PyDict>> {
    let e = deltavar_core::parse(src).map_err(|e| py_err(e.into()))?;
    let d = deltavar_core::eval2(&e, t, x, v).py()?;
    let out = PyDict::new(py);
    for (k, val) in [("value", d.value), ("d_x", d.d_x), ("d_v", d.d_v), ("d_xx", d.d_xx), ("d_xv", d.d_xv), ("d_vv", d.d_vv)] {
        out.set_item(k, val)?;
    }
    Ok(out)
}

/// A synthesized Lagrangian.
#[pyclass(name = "Bundle", module = "deltavar", frozen)]
struct PyBundle {
    bundle: LagrangianBundle,
    synthesis: Synthesis,
}

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let bundle = LagrangianBundle::from_json(text).py()?;
        let synthesis = bundle.restore().py()?;
        Ok(Self { bundle, synthesis })
    }

    fn to_json(&self) -> String {
        self.bundle.to_json()
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.bundle.points.clone()
    }

    #[getter]
    fn offset_q(&self) -> Vec<f64> {
        self.bundle.offset_q.clone()
    }

    #[getter]
    fn r_profile(&self) -> Vec<f64> {
        self.bundle.r_profile.clone()
    }

    #[getter]
    fn extremal(&self) -> Vec<f64> {
        self.bundle.extremal.clone()
    }

    /// `L(t_i, x, v)` with its partials.
    fn lagrangian<'py>(&self, py: Python<'py>, i: usize, x: f64, v: f64) -> PyResult<Bound<'py, PyDict>> {
        let form = &self.synthesis.form;
        let d = form.eval(i, form.grid().t(i), x, v).py()?;
        let out = PyDict::new(py);
        for (k, val) in [("value", d.value), ("d_x", d.d_x), ("d_v", d.d_v), ("d_xx", d.d_xx), ("d_xv", d.d_xv), ("d_vv", d.d_vv)] {
            out.set_item(k, val)?;
        }
        Ok(out)
    }

    /// `𝓛(y)` for `y` given on every grid point, with the extremal's end values as boundary data.
    fn evaluate(&self, y: Vec<f64>) -> PyResult<f64> {
        let form = &self.synthesis.form;
        let g = form.grid().clone();
        let y = GridFunction::new(g.clone(), Support::Full, y).py()?;
        let y0 = form.extremal();
        let prob = VariationalProblem::new(g.clone(), form, y0.at(0), y0.at(g.last())).py()?;
        prob.evaluate_functional(&y).py()
    }

    /// Verification report at the extremal as a dict, with a `pass` flag.
    fn verify<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let options = &self.bundle.options;
        let (main, literal) = config::verify_synthesis(&self.synthesis, options).py()?;
        let scale = config::p_scale(&self.synthesis.form).py()?;
        let json = serde_json::json!({
            "pass": config::passes(&main, options, Some(scale)),
            "report": main,
            "literal": literal,
        });
        json_to_py(py, &json.to_string())
    }
}

/// Synthesizes the Lagrangian described by a JSON problem configuration.
#[pyfunction]
fn synthesize(config_json: &str) -> PyResult<PyBundle> {
    let cfg = ProblemConfig::from_json(config_json).py()?;
    let synthesis = config::synthesize(&cfg).py()?;
    let bundle = LagrangianBundle::new(&cfg.timescale, &synthesis, &cfg.options);
    Ok(PyBundle { bundle, synthesis })
}

/// JSON schema of problem configurations.
#[pyfunction]
fn config_schema() -> &'static str {
    config::PROBLEM_CONFIG_SCHEMA
}

#[pymodule]
fn deltavar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PyBundle>()?;
    m.add_function(wrap_pyfunction!(parse, m)?)?;
    m.add_function(wrap_pyfunction!(eval2, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(config_schema, m)?)?;
    let py = m.py();
    m.add("DeltavarError", py.get_type::<DeltavarError>())?;
    m.add("ValidationError", py.get_type::<ValidationError>())?;
    m.add("BoundaryMismatchError", py.get_type::<BoundaryMismatchError>())?;
    Ok(())
}
