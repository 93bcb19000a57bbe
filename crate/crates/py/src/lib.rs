//! Python bindings: a `Model` built from a TOML config (or a named fixture)
//! with the stationary solver, simulation and experiment drivers.

use std::collections::BTreeMap;

use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use engine::boundary::BoundarySpec;
use engine::config::Config;
use engine::dynamics::{initial_state, mass, SimState};
use engine::experiment::{self, RunOptions, RunSummary};
use engine::fixtures;
use engine::stationary::{self, FixedPointOptions, StationaryProfile};
use engine::Network;

create_exception!(chemonet, ChemonetError, PyException);

fn err(e: engine::Error) -> PyErr {
    ChemonetError::new_err(e.to_string())
}

/// Stationary profile `(U, V, Psi)`; `U` and `Psi` at the grid vertices.
#[pyclass(name = "Profile", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyProfile {
    inner: StationaryProfile,
}

#[pymethods]
impl PyProfile {
    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.u.clone()
    }
    #[getter]
    fn v(&self) -> Vec<f64> {
        self.inner.v.clone()
    }
    #[getter]
    fn psi(&self) -> Vec<Vec<f64>> {
        self.inner.psi.clone()
    }
    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c.clone()
    }
    #[getter]
    fn mu_s(&self) -> f64 {
        self.inner.mu_s
    }
    #[getter]
    fn converged(&self) -> bool {
        self.inner.converged
    }
    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }
    #[getter]
    fn contraction(&self) -> Vec<f64> {
        self.inner.contraction.clone()
    }
    #[getter]
    fn nonnegative(&self) -> bool {
        self.inner.nonnegative
    }
    #[getter]
    fn residuals(&self) -> BTreeMap<&'static str, f64> {
        self.inner.residuals.summary().into_iter().collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Profile(mu_s={}, converged={}, iterations={}, max_residual={:e})",
            self.inner.mu_s,
            self.inner.converged,
            self.inner.iterations,
            self.inner.residuals.max()
        )
    }
}

/// Simulation state: `u`, `v` at cell centres, `psi` at vertices.
#[pyclass(name = "State", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyState {
    inner: SimState,
    mass: f64,
}

#[pymethods]
impl PyState {
    #[getter]
    fn t(&self) -> f64 {
        self.inner.t
    }
    #[getter]
    fn u(&self) -> Vec<Vec<f64>> {
        self.inner.u.clone()
    }
    #[getter]
    fn v(&self) -> Vec<Vec<f64>> {
        self.inner.v.clone()
    }
    #[getter]
    fn psi(&self) -> Vec<Vec<f64>> {
        self.inner.psi.clone()
    }
    #[getter]
    fn mass(&self) -> f64 {
        self.mass
    }

    fn __repr__(&self) -> String {
        format!("State(t={}, mass={:e})", self.inner.t, self.mass)
    }
}

/// Network, boundary data and experiment settings from one config.
#[pyclass(name = "Model", frozen)]
struct PyModel {
    cfg: Config,
    net: Network,
    spec: BoundarySpec,
}

impl PyModel {
    fn build(cfg: Config) -> PyResult<Self> {
        let net = Network::from_config(&cfg).map_err(err)?;
        let spec = BoundarySpec::from_config(&cfg, &net).map_err(err)?;
        Ok(Self { cfg, net, spec })
    }

    fn mu_s_or_config(&self, mu_s: Option<f64>) -> PyResult<f64> {
        mu_s.or_else(|| self.cfg.stationary.as_ref().map(|s| s.mu_s))
            .ok_or_else(|| ChemonetError::new_err("mu_s not given and config has no [stationary] section"))
    }

    fn state(&self, s: SimState) -> PyState {
        let mass = mass(&s, &self.net);
        PyState { inner: s, mass }
    }
}

fn series<'py>(py: Python<'py>, run: &RunSummary) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    let col = |f: &dyn Fn(&experiment::Sample) -> f64| -> Vec<f64> { run.samples.iter().map(f).collect() };
    d.set_item("t", col(&|s| s.t))?;
    d.set_item("mass", col(&|s| s.mass))?;
    d.set_item("mass_residual", col(&|s| s.mass_residual))?;
    d.set_item("max_node_flux_residual", col(&|s| s.max_node_flux_residual))?;
    d.set_item("sup_u", col(&|s| s.sup_u))?;
    d.set_item("bound_lhs", col(&|s| s.bound_lhs))?;
    d.set_item("bound_rhs", col(&|s| s.bound_rhs))?;
    d.set_item("dist_sup", col(&|s| s.distance.map_or(f64::NAN, |x| x.sup())))?;
    d.set_item("dist_h1", col(&|s| s.distance.map_or(f64::NAN, |x| x.h1())))?;
    d.set_item("steps", run.steps)?;
    d.set_item("dt", run.dt)?;
    Ok(d)
}

#[pymethods]
impl PyModel {
    /// Parses a TOML config.
    #[new]
    fn new(toml_text: &str) -> PyResult<Self> {
        Self::build(Config::from_toml(toml_text).map_err(err)?)
    }

    #[staticmethod]
    fn from_file(path: &str) -> PyResult<Self> {
        Self::build(Config::from_path(path).map_err(err)?)
    }

    /// Built-in network: `single_arc`, `star3`, `path2`, `path3`,
    /// `caterpillar`, `tree5` or `triangle_with_legs`.
    #[staticmethod]
    #[pyo3(signature = (name, cells = 100))]
    fn fixture(name: &str, cells: usize) -> PyResult<Self> {
        let cfg = match name {
            "single_arc" => fixtures::single_arc_config(1.0, cells),
            "star3" => fixtures::star3_config(1.0, 1.0, cells),
            "path2" => fixtures::path2_config(cells),
            "path3" => fixtures::path3_config(cells),
            "caterpillar" => fixtures::caterpillar_config(cells),
            "tree5" => fixtures::tree5_config(cells),
            "triangle_with_legs" => fixtures::triangle_with_legs_config(cells),
            _ => return Err(ChemonetError::new_err(format!("unknown fixture {name:?}"))),
        };
        Self::build(cfg)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.cfg.to_toml().map_err(err)
    }

    /// Validation report as printed by the CLI.
    fn validate(&self) -> String {
        self.net.report().to_string()
    }

    #[getter]
    fn arc_ids(&self) -> Vec<u32> {
        self.net.arcs().iter().map(|a| a.id).collect()
    }
    #[getter]
    fn is_acyclic(&self) -> bool {
        self.net.is_acyclic()
    }
    #[getter]
    fn nd_satisfied(&self) -> bool {
        self.net.nd_satisfied()
    }
    #[getter]
    fn total_length(&self) -> f64 {
        self.net.total_length()
    }

    /// Sets constant asymptotic boundary data `W`, `P` per exit.
    fn set_boundary(&self, w: Vec<f64>, p: Vec<f64>) -> PyResult<Self> {
        let spec = BoundarySpec::constant(&w, &p);
        if spec.exits.len() != self.net.external_nodes().len() || w.len() != p.len() {
            return Err(ChemonetError::new_err("one W and one P value per exit expected"));
        }
        Ok(Self {
            cfg: self.cfg.clone(),
            net: self.net.clone(),
            spec,
        })
    }

    /// Fixed-point stationary profile.
    #[pyo3(signature = (mu_s = None, tol = 1e-12, max_iter = 200))]
    fn stationary(&self, mu_s: Option<f64>, tol: f64, max_iter: usize) -> PyResult<PyProfile> {
        let mu_s = self.mu_s_or_config(mu_s)?;
        let inner = stationary::fixed_point(&self.net, &self.spec, mu_s, FixedPointOptions { tol, max_iter }).map_err(err)?;
        Ok(PyProfile { inner })
    }

    /// Initial state from the config's `[[initial]]` entries.
    fn initial_state(&self) -> PyResult<PyState> {
        Ok(self.state(initial_state(&self.net, &self.cfg.initial).map_err(err)?))
    }

    /// Runs to `t_final` from `state` (default: the config's initial data).
    /// Returns the time series and the final state.
    #[pyo3(signature = (t_final, cadence, state = None, dt = None, profile = None))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        t_final: f64,
        cadence: f64,
        state: Option<&PyState>,
        dt: Option<f64>,
        profile: Option<&PyProfile>,
    ) -> PyResult<(Bound<'py, PyDict>, PyState)> {
        let start = match state {
            Some(s) => s.inner.clone(),
            None => initial_state(&self.net, &self.cfg.initial).map_err(err)?,
        };
        let opts = RunOptions {
            dt,
            ..RunOptions::new(t_final, cadence)
        };
        let run = experiment::run(&self.net, &self.spec, start, &opts, profile.map(|p| &p.inner)).map_err(err)?;
        Ok((series(py, &run)?, self.state(run.final_state.clone())))
    }

    /// Perturbation-decay experiment around `profile`.
    #[pyo3(signature = (profile, amplitude, t_final, cadence, seed = 0))]
    fn perturb<'py>(
        &self,
        py: Python<'py>,
        profile: &PyProfile,
        amplitude: f64,
        t_final: f64,
        cadence: f64,
        seed: u64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let out = experiment::perturb(
            &self.net,
            &self.spec,
            &profile.inner,
            amplitude,
            seed,
            &RunOptions::new(t_final, cadence),
        )
        .map_err(err)?;
        let d = series(py, &out.run)?;
        d.set_item("ft", out.ft.prefix.clone())?;
        d.set_item("initial_distance", out.initial_distance)?;
        d.set_item("final_distance", out.final_distance)?;
        Ok(d)
    }

    /// Sup discrepancies between the fixed point and the shooting oracle.
    #[pyo3(signature = (mu_s = None, tol = 1e-6))]
    fn oracle_check<'py>(&self, py: Python<'py>, mu_s: Option<f64>, tol: f64) -> PyResult<Bound<'py, PyDict>> {
        let mu_s = self.mu_s_or_config(mu_s)?;
        let c = experiment::oracle_check(&self.net, &self.spec, mu_s, FixedPointOptions::default(), tol).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("u", c.u)?;
        d.set_item("v", c.v)?;
        d.set_item("psi", c.psi)?;
        d.set_item("passed", c.passed())?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!(
            "Model(arcs={}, internal={}, external={})",
            self.net.arcs().len(),
            self.net.internal_nodes().len(),
            self.net.external_nodes().len()
        )
    }
}

#[pymodule]
fn chemonet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyModel>()?;
    m.add_class::<PyProfile>()?;
    m.add_class::<PyState>()?;
    m.add("ChemonetError", m.py().get_type::<ChemonetError>())?;
    Ok(())
}
