//! Python bindings: instances, energies, generators, solvers and the
//! brute-force oracle.

use hubo_core::instance_gen::{self, Family};
use hubo_core::metrics;
use hubo_core::oracle;
use hubo_core::pipeline;
use hubo_core::solvers::{self, SaParams, SolverConfig};
use hubo_core::{evaluate_energy, HuboInstance, InstanceMetadata, SpinConfig, VariableIndexTable};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyModule};

create_exception!(
    hubo,
    HuboError,
    PyException,
    "Raised for any failure reported by the core library."
);

fn to_py(err: hubo_core::HuboError) -> PyErr {
    HuboError::new_err((err.category(), err.to_string()))
}

fn spins(values: Vec<i8>) -> PyResult<SpinConfig> {
    SpinConfig::new(values).map_err(to_py)
}

/// A higher-order Ising instance with terms of arity 1 to 3.
#[pyclass(name = "Instance", module = "hubo", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: HuboInstance,
}

#[pymethods]
impl PyInstance {
    /// Builds an instance from `(vars, coeff)` pairs; duplicates are merged.
    #[new]
    fn new(n_vars: usize, terms: Vec<(Vec<usize>, f64)>) -> PyResult<Self> {
        let inner = HuboInstance::new(n_vars, terms, InstanceMetadata::default()).map_err(to_py)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn read(path: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: instance_gen::read_instance(path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyInstance {
            inner: instance_gen::deserialize_instance(text).map_err(to_py)?,
        })
    }

    fn to_text(&self) -> String {
        instance_gen::serialize_instance(&self.inner)
    }

    fn write(&self, path: &str) -> PyResult<()> {
        instance_gen::write_instance(path, &self.inner).map_err(to_py)
    }

    #[getter]
    fn n_vars(&self) -> usize {
        self.inner.n_vars()
    }

    #[getter]
    fn terms(&self) -> Vec<(Vec<u32>, f64)> {
        self.inner
            .terms()
            .iter()
            .map(|t| (t.vars().to_vec(), t.coeff()))
            .collect()
    }

    #[getter]
    fn term_counts(&self) -> [usize; 3] {
        self.inner.term_counts()
    }

    #[getter]
    fn family(&self) -> Option<String> {
        self.inner.metadata().family.clone()
    }

    fn energy(&self, spins_: Vec<i8>) -> PyResult<f64> {
        evaluate_energy(&self.inner, &spins(spins_)?).map_err(to_py)
    }

    /// Energy change from flipping `var` in `spins`.
    fn delta_energy(&self, spins_: Vec<i8>, var: usize) -> PyResult<f64> {
        let table = VariableIndexTable::build(&self.inner, &spins(spins_)?).map_err(to_py)?;
        table.delta_energy(var).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.terms().len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        let [a, b, c] = self.inner.term_counts();
        format!("Instance(n_vars={}, terms={}+{}+{})", self.inner.n_vars(), a, b, c)
    }
}

#[pyclass(name = "RunResult", module = "hubo", frozen, get_all)]
struct PyRunResult {
    solver: String,
    best_energy: f64,
    best_config: Vec<i8>,
    trace: Vec<(f64, f64)>,
    attempted_flips: u64,
    accepted_flips: u64,
    elapsed: f64,
    /// Solver diagnostics as a JSON string.
    diagnostics: String,
}

#[pymethods]
impl PyRunResult {
    fn __repr__(&self) -> String {
        format!(
            "RunResult(solver={:?}, best_energy={}, elapsed={:.6})",
            self.solver, self.best_energy, self.elapsed
        )
    }
}

impl From<solvers::RunResult> for PyRunResult {
    fn from(r: solvers::RunResult) -> Self {
        PyRunResult {
            solver: r.solver,
            best_energy: r.best_energy,
            best_config: r.best_config.spins().to_vec(),
            trace: r.trace.iter().map(|p| (p.t, p.energy)).collect(),
            attempted_flips: r.attempted_flips,
            accepted_flips: r.accepted_flips,
            elapsed: r.elapsed_total,
            diagnostics: serde_json::to_string(&r.diagnostics).unwrap_or_default(),
        }
    }
}

#[pyclass(name = "GroundState", module = "hubo", frozen, get_all)]
struct PyGroundState {
    energy: f64,
    config: Vec<i8>,
    degeneracy: u64,
}

#[pymethods]
impl PyGroundState {
    fn __repr__(&self) -> String {
        format!("GroundState(energy={}, degeneracy={})", self.energy, self.degeneracy)
    }
}

fn family(name: &str) -> PyResult<Family> {
    name.parse().map_err(to_py)
}

/// Heavy-hex instance of family "3S" or "4S".
#[pyfunction]
fn generate(family_name: &str, seed: u64) -> PyResult<PyInstance> {
    let cfg = instance_gen::GenerationConfig::for_family(family(family_name)?, seed);
    Ok(PyInstance {
        inner: instance_gen::generate_instance(&cfg).map_err(to_py)?,
    })
}

#[pyfunction]
fn generate_family(family_name: &str, count: usize, seed: u64) -> PyResult<Vec<PyInstance>> {
    let out = instance_gen::generate_family(family(family_name)?, count, seed).map_err(to_py)?;
    Ok(out.into_iter().map(|inner| PyInstance { inner }).collect())
}

/// Random mixed-arity instance with Cauchy couplings, small enough for the oracle.
#[pyfunction]
fn random_instance(n_vars: usize, seed: u64) -> PyResult<PyInstance> {
    Ok(PyInstance {
        inner: instance_gen::random_instance(n_vars, seed).map_err(to_py)?,
    })
}

/// Runs "SA", "PT", "MTS" or "GREEDY". Extra keyword arguments are solver
/// parameters, e.g. `solve(inst, "SA", n_restarts=100, sweeps=500)`.
#[pyfunction]
#[pyo3(signature = (instance, solver = "SA", seed = 0, threads = 1, time_limit = None, **params))]
fn solve(
    py: Python<'_>,
    instance: &PyInstance,
    solver: &str,
    seed: u64,
    threads: usize,
    time_limit: Option<f64>,
    params: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyRunResult> {
    let mut cfg = serde_json::Map::new();
    if let Some(p) = params {
        let json: String = PyModule::import(py, "json")?.call_method1("dumps", (p,))?.extract()?;
        let value: serde_json::Value =
            serde_json::from_str(&json).map_err(|e| HuboError::new_err(("parse", e.to_string())))?;
        if let serde_json::Value::Object(m) = value {
            cfg = m;
        }
    }
    cfg.insert("solver".into(), solver.to_ascii_uppercase().into());
    cfg.insert("threads".into(), threads.into());
    if let Some(t) = time_limit {
        cfg.insert("time_limit".into(), t.into());
    }
    let cfg: SolverConfig = serde_json::from_value(serde_json::Value::Object(cfg))
        .map_err(|e| HuboError::new_err(("config", e.to_string())))?;
    cfg.validate().map_err(to_py)?;
    let inner = &instance.inner;
    let run = py.detach(|| solvers::run_solver(inner, &cfg, seed)).map_err(to_py)?;
    Ok(run.into())
}

/// SA warm start, identity surrogate and greedy refinement with per-stage
/// wall-clock budgets. Returns `(best_energy, best_config, stage_bests)`.
#[pyfunction]
#[pyo3(signature = (instance, seed = 0, budgets = vec![1.0, 1.0, 1.0], n_restarts = 100, sweeps = 1000))]
fn run_pipeline(
    py: Python<'_>,
    instance: &PyInstance,
    seed: u64,
    budgets: Vec<f64>,
    n_restarts: usize,
    sweeps: usize,
) -> PyResult<(f64, Vec<i8>, Vec<f64>)> {
    let sa = SaParams {
        n_restarts,
        sweeps,
        ..Default::default()
    };
    let inner = &instance.inner;
    let result = py
        .detach(|| pipeline::run_pipeline(inner, &pipeline::default_stages(sa, 1), seed, &budgets))
        .map_err(to_py)?;
    let stages = result.stages.iter().map(|s| s.best_energy).collect();
    Ok((result.best_energy, result.best_config.spins().to_vec(), stages))
}

/// Exhaustive ground state; limited to small instances.
#[pyfunction]
fn ground_state(py: Python<'_>, instance: &PyInstance) -> PyResult<PyGroundState> {
    let inner = &instance.inner;
    let gs = py.detach(|| oracle::brute_force_ground_state(inner)).map_err(to_py)?;
    Ok(PyGroundState {
        energy: gs.energy,
        config: gs.config.spins().to_vec(),
        degeneracy: gs.degeneracy,
    })
}

#[pyfunction]
fn relative_gap(candidate: f64, ground: f64) -> PyResult<f64> {
    oracle::relative_gap(candidate, ground).map_err(to_py)
}

/// Time to solution in the units of `t_run`; `inf` when `p_hit` is zero.
#[pyfunction]
#[pyo3(signature = (t_run, p_hit, p_target = 0.99))]
fn tts(t_run: f64, p_hit: f64, p_target: f64) -> PyResult<f64> {
    Ok(metrics::compute_tts(t_run, p_hit, p_target)
        .map_err(to_py)?
        .tts
        .as_f64())
}

#[pymodule]
fn hubo(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HuboError", m.py().get_type::<HuboError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRunResult>()?;
    m.add_class::<PyGroundState>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(generate_family, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(ground_state, m)?)?;
    m.add_function(wrap_pyfunction!(relative_gap, m)?)?;
    m.add_function(wrap_pyfunction!(tts, m)?)?;
    Ok(())
}
