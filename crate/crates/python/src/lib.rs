//! Python bindings: fBm sampling, lattice operators and a `System` object
//! that owns one noise realization and runs the pathwise experiments on it.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use slds_core::attractor::{contraction_experiment, random_equilibrium, EquilibriumOptions};
use slds_core::fbm::{fgn_autocovariance as core_autocovariance, HurstParameter, TimeGrid};
use slds_core::lattice::{Boundary, LatticeParams, LatticeVector, NonlinearitySpec};
use slds_core::noise::{build_noise_field, stationary_ou, NoiseField};
use slds_core::solver::{integrate, Scheme, SolverConfig};
use slds_core::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter { .. } | Error::DimensionMismatch { .. } | Error::OffGrid { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn hurst(h: f64) -> PyResult<HurstParameter> {
    HurstParameter::with_reference_mode(h, h == 0.5).map_err(to_py)
}

fn boundary(name: &str) -> PyResult<Boundary> {
    match name {
        "zero_padding" => Ok(Boundary::ZeroPadding),
        "periodic" => Ok(Boundary::Periodic),
        other => Err(PyValueError::new_err(format!(
            "boundary must be 'zero_padding' or 'periodic', got {other:?}"
        ))),
    }
}

/// A lattice vector given either as one value for every site or as the
/// full list of `2N+1` values.
#[derive(FromPyObject)]
enum VectorArg {
    Scalar(f64),
    List(Vec<f64>),
}

impl VectorArg {
    fn build(self, half_width: usize) -> PyResult<LatticeVector> {
        match self {
            Self::Scalar(c) => Ok(LatticeVector::constant(half_width, c)),
            Self::List(v) => {
                let v = LatticeVector::from_values(v).map_err(to_py)?;
                v.ensure_half_width(half_width).map_err(to_py)?;
                Ok(v)
            }
        }
    }
}

fn vector(values: Vec<f64>) -> PyResult<LatticeVector> {
    LatticeVector::from_values(values).map_err(to_py)
}

/// fBm path on `n_steps` steps of size `dt`; returns `(times, values)`.
#[pyfunction]
#[pyo3(signature = (n_steps, hurst_index, dt, seed))]
fn sample_fbm(n_steps: usize, hurst_index: f64, dt: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let path = slds_core::fbm::sample_fbm(n_steps, hurst(hurst_index)?, dt, seed).map_err(to_py)?;
    Ok((path.grid().times().collect(), path.values()))
}

/// Covariance of fGn increments `k` steps apart.
#[pyfunction]
fn fgn_autocovariance(k: u64, hurst_index: f64, dt: f64) -> PyResult<f64> {
    Ok(core_autocovariance(k, hurst(hurst_index)?, dt))
}

#[pyfunction]
#[pyo3(signature = (x, boundary_kind = "zero_padding"))]
fn apply_a(x: Vec<f64>, boundary_kind: &str) -> PyResult<Vec<f64>> {
    Ok(slds_core::apply_a(&vector(x)?, boundary(boundary_kind)?).into_values())
}

#[pyfunction]
#[pyo3(signature = (x, boundary_kind = "zero_padding"))]
fn apply_b(x: Vec<f64>, boundary_kind: &str) -> PyResult<Vec<f64>> {
    Ok(slds_core::apply_b(&vector(x)?, boundary(boundary_kind)?).into_values())
}

#[pyfunction]
#[pyo3(signature = (x, boundary_kind = "zero_padding"))]
fn apply_bstar(x: Vec<f64>, boundary_kind: &str) -> PyResult<Vec<f64>> {
    Ok(slds_core::apply_bstar(&vector(x)?, boundary(boundary_kind)?).into_values())
}

/// One lattice system together with a sampled two-sided noise realization.
#[pyclass(module = "slds", frozen)]
struct System {
    params: LatticeParams,
    f: NonlinearitySpec,
    solver: SolverConfig,
    field: NoiseField,
}

#[pymethods]
impl System {
    #[new]
    #[pyo3(signature = (
        half_width,
        *,
        kappa = 1.0,
        lambda_ = 1.0,
        forcing = VectorArg::Scalar(0.0),
        sigma = VectorArg::Scalar(1.0),
        boundary_kind = "zero_padding",
        nonlinearity = "cubic",
        a = 1.0,
        b = 1.0,
        hurst_index = 0.75,
        dt = 0.01,
        t_past = 32.0,
        t_end = 5.0,
        scheme = "heun",
        seed = 1,
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        half_width: usize,
        kappa: f64,
        lambda_: f64,
        forcing: VectorArg,
        sigma: VectorArg,
        boundary_kind: &str,
        nonlinearity: &str,
        a: f64,
        b: f64,
        hurst_index: f64,
        dt: f64,
        t_past: f64,
        t_end: f64,
        scheme: &str,
        seed: u64,
    ) -> PyResult<Self> {
        let params = LatticeParams::new(
            kappa,
            lambda_,
            forcing.build(half_width)?,
            sigma.build(half_width)?,
            boundary(boundary_kind)?,
        )
        .map_err(to_py)?;
        let f = match nonlinearity {
            "cubic" => NonlinearitySpec::cubic(a, b),
            "linear" => NonlinearitySpec::linear(a),
            other => {
                return Err(PyValueError::new_err(format!(
                    "nonlinearity must be 'cubic' or 'linear', got {other:?}"
                )))
            }
        }
        .map_err(to_py)?;
        let scheme = match scheme {
            "heun" => Scheme::Heun,
            "euler" => Scheme::Euler,
            other => return Err(PyValueError::new_err(format!("unknown scheme {other:?}"))),
        };
        let solver = SolverConfig::new(scheme, dt, t_end).map_err(to_py)?;
        let grid = TimeGrid::two_sided(t_past, t_end, dt).map_err(to_py)?;
        let field = build_noise_field(&params, grid, hurst(hurst_index)?, seed).map_err(to_py)?;
        Ok(Self {
            params,
            f,
            solver,
            field,
        })
    }

    #[getter]
    fn half_width(&self) -> usize {
        self.params.half_width()
    }

    /// `W(t)` at every site.
    fn noise(&self, t: f64) -> PyResult<Vec<f64>> {
        Ok(self.field.eval_w(t).map_err(to_py)?.into_values())
    }

    /// Solution from `u0` on `[0, t_end]`; returns `(times, states)`.
    fn integrate(&self, u0: VectorArg) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let u0 = u0.build(self.half_width())?;
        let traj = integrate(&u0, &self.field, &self.params, &self.f, &self.solver).map_err(to_py)?;
        let times = traj.times().collect();
        Ok((times, traj.states.into_iter().map(LatticeVector::into_values).collect()))
    }

    /// Stationary OU process `ū` on `[0, t_end]`; returns `(times, states)`.
    #[pyo3(signature = (tail_tol = 1e-6))]
    fn stationary_ou(&self, tail_tol: f64) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
        let steps = slds_core::fbm::grid_steps(self.solver.t_end, self.solver.dt).map_err(to_py)?;
        let eval = TimeGrid::from_origin(self.solver.dt, steps as usize).map_err(to_py)?;
        let ou = stationary_ou(self.params.lambda, &self.field, &eval, tail_tol).map_err(to_py)?;
        Ok((eval.times().collect(), ou.values.into_iter().map(LatticeVector::into_values).collect()))
    }

    /// Distance between the solutions from `u0` and `w0` with the fitted
    /// decay rate.
    fn contraction<'py>(&self, py: Python<'py>, u0: VectorArg, w0: VectorArg) -> PyResult<Bound<'py, PyDict>> {
        let n = self.half_width();
        let (u0, w0) = (u0.build(n)?, w0.build(n)?);
        let r = contraction_experiment(&u0, &w0, &self.field, &self.params, &self.f, &self.solver)
            .map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("times", r.times)?;
        d.set_item("distances", r.distances)?;
        d.set_item("fitted_slope", r.fitted_slope)?;
        d.set_item("claimed_rate", r.claimed_rate)?;
        d.set_item("worst_certificate_ratio", r.worst_certificate_ratio)?;
        d.set_item("degenerate", r.degenerate)?;
        d.set_item("pass", r.pass)?;
        Ok(d)
    }

    /// Random equilibrium at time 0 by pullback with doubling horizons.
    #[pyo3(signature = (tol = 1e-6, alt_start = None))]
    fn equilibrium<'py>(
        &self,
        py: Python<'py>,
        tol: f64,
        alt_start: Option<VectorArg>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let mut options = EquilibriumOptions::new(tol);
        if let Some(v) = alt_start {
            options = options.with_alt_start(v.build(self.half_width())?);
        }
        let eq = random_equilibrium(&self.field, &self.params, &self.f, &self.solver, &options).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("state", eq.state.into_values())?;
        d.set_item("horizon", eq.horizon)?;
        d.set_item("cauchy_gap", eq.cauchy_gap)?;
        d.set_item("alt_distance", eq.alt_distance)?;
        d.set_item("start_independent", eq.start_independent)?;
        Ok(d)
    }
}

#[pymodule]
fn slds(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_fbm, m)?)?;
    m.add_function(wrap_pyfunction!(fgn_autocovariance, m)?)?;
    m.add_function(wrap_pyfunction!(apply_a, m)?)?;
    m.add_function(wrap_pyfunction!(apply_b, m)?)?;
    m.add_function(wrap_pyfunction!(apply_bstar, m)?)?;
    m.add_class::<System>()?;
    Ok(())
}
