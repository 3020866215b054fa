use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use jtcouple::coupling::{fixed_point_load, FixedPointReport, SolverOptions};
use jtcouple::experiment::{
    brute_force_optimum, demand_for_max_load, find_feasible_association, parse_objective, render_report,
    run_sweep, DemandSpec, ExperimentConfig, Method, ReportFormat,
};
use jtcouple::milp::{solve_pipeline, BnbOptions, PipelineOptions};
use jtcouple::minl::{minl_with, MinlOptions};
use jtcouple::netmodel::{build_sat_reduction, generate_hexnet, CnfFormula, NetworkInstance, ScenarioConfig};
use jtcouple::{approx, Association, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::NotConverged { .. } | Error::Infeasible => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for jtcouple::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A network scenario: cells, UEs, gains and demands.
#[pyclass(name = "Network", module = "jtcouple_py", frozen)]
struct PyNetwork {
    inner: NetworkInstance,
}

#[pymethods]
impl PyNetwork {
    /// Generates a hexagonal layout; `max_load` calibrates the uniform demand
    /// so the home-cell baseline peaks at that load.
    #[staticmethod]
    #[pyo3(signature = (seed=0, full_scale=false, demand=None, max_load=None))]
    fn generate(seed: u64, full_scale: bool, demand: Option<f64>, max_load: Option<f64>) -> PyResult<Self> {
        let config = if full_scale {
            ScenarioConfig::default()
        } else {
            ScenarioConfig::desk()
        };
        let net = generate_hexnet(&config, seed).py()?;
        let net = match (demand, max_load) {
            (Some(d), _) => net.with_uniform_demand(d).py()?,
            (None, Some(t)) => {
                let d = demand_for_max_load(&net, t).py()?;
                net.with_uniform_demand(d).py()?
            }
            (None, None) => net,
        };
        Ok(Self { inner: net })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: NetworkInstance::from_json(text).py()?,
        })
    }

    /// Builds the gadget network of a DIMACS 3-CNF formula.
    #[staticmethod]
    fn sat_gadget(dimacs: &str) -> PyResult<Self> {
        let f = CnfFormula::from_dimacs(dimacs).py()?;
        Ok(Self {
            inner: build_sat_reduction(&f).py()?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().py()
    }

    #[getter]
    fn n_cells(&self) -> usize {
        self.inner.n_cells()
    }

    #[getter]
    fn n_ues(&self) -> usize {
        self.inner.n_ues()
    }

    fn with_demand(&self, demand: f64) -> PyResult<Self> {
        Ok(Self {
            inner: self.inner.with_uniform_demand(demand).py()?,
        })
    }

    /// Uniform demand putting the home-cell baseline max load at `target`.
    fn demand_for_max_load(&self, target: f64) -> PyResult<f64> {
        demand_for_max_load(&self.inner, target).py()
    }

    fn home_only(&self) -> Vec<Vec<usize>> {
        Association::home_only(&self.inner).serving_sets().to_vec()
    }

    /// Serving sets a UE may use.
    fn options(&self, ue: usize) -> PyResult<Vec<Vec<usize>>> {
        if ue >= self.inner.n_ues() {
            return Err(PyValueError::new_err(format!("UE {ue} out of range")));
        }
        Ok(self.inner.options(ue))
    }

    fn __repr__(&self) -> String {
        format!("Network(cells={}, ues={})", self.inner.n_cells(), self.inner.n_ues())
    }
}

/// Load fixed point of one association.
#[pyclass(name = "FixedPoint", module = "jtcouple_py", frozen, get_all)]
struct PyFixedPoint {
    load: Vec<f64>,
    sinr: Vec<f64>,
    iterations: usize,
    converged: bool,
    feasible: bool,
}

impl From<FixedPointReport> for PyFixedPoint {
    fn from(r: FixedPointReport) -> Self {
        Self {
            converged: r.converged(),
            feasible: r.feasible,
            load: r.load,
            sinr: r.sinr,
            iterations: r.iterations,
        }
    }
}

#[pymethods]
impl PyFixedPoint {
    fn sum_load(&self) -> f64 {
        self.load.iter().sum()
    }

    fn max_load(&self) -> f64 {
        self.load.iter().copied().fold(0.0, f64::max)
    }
}

/// An optimized association with its fixed point.
#[pyclass(name = "Solution", module = "jtcouple_py", frozen, get_all)]
struct PySolution {
    serving: Vec<Vec<usize>>,
    objective: f64,
    load: Vec<f64>,
    bound: Option<f64>,
    status: String,
}

fn association(net: &NetworkInstance, serving: Option<Vec<Vec<usize>>>) -> PyResult<Association> {
    match serving {
        Some(s) => Association::new(net, s).py(),
        None => Ok(Association::home_only(net)),
    }
}

/// Fixed point of the load coupling for `serving` (home cells by default).
#[pyfunction]
#[pyo3(signature = (net, serving=None))]
fn fixed_point(net: &PyNetwork, serving: Option<Vec<Vec<usize>>>) -> PyResult<PyFixedPoint> {
    let a = association(&net.inner, serving)?;
    Ok(fixed_point_load(&a, &net.inner, &SolverOptions::default()).py()?.into())
}

/// Componentwise lower and upper bounds on every association's fixed point.
#[pyfunction]
fn load_bounds(net: &PyNetwork) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let b = approx::global_load_bounds(&net.inner, &SolverOptions::default()).py()?;
    Ok((b.lower, b.upper))
}

/// Solves the linearized association model and evaluates its answer.
#[pyfunction]
#[pyo3(signature = (net, objective="sum", lb=true, node_limit=1_000_000))]
fn solve_milp(net: &PyNetwork, objective: &str, lb: bool, node_limit: usize) -> PyResult<PySolution> {
    let objective = parse_objective(objective).py()?;
    let opts = PipelineOptions {
        lb_constraints: lb,
        bnb: BnbOptions {
            node_limit,
            ..BnbOptions::default()
        },
        ..PipelineOptions::default()
    };
    let (sol, report) = solve_pipeline(&net.inner, objective, &opts).py()?;
    Ok(PySolution {
        serving: sol.assignment.expect("pipeline assignment").serving_sets().to_vec(),
        objective: objective.of(&report.load),
        load: report.load,
        bound: Some(sol.bound),
        status: format!("{:?}", sol.status).to_lowercase(),
    })
}

/// Link-adjustment heuristic from `serving` (home cells by default).
#[pyfunction]
#[pyo3(signature = (net, serving=None, objective="sum", lam=3, tau=5))]
fn minl(
    net: &PyNetwork,
    serving: Option<Vec<Vec<usize>>>,
    objective: &str,
    lam: usize,
    tau: usize,
) -> PyResult<PySolution> {
    let objective = parse_objective(objective).py()?;
    let init = association(&net.inner, serving)?;
    let opts = MinlOptions {
        lambda: lam,
        tau,
        ..MinlOptions::default()
    };
    let out = minl_with(&net.inner, &init, &opts).py()?;
    Ok(PySolution {
        serving: out.assoc.serving_sets().to_vec(),
        objective: objective.of(&out.report.load),
        load: out.report.load,
        bound: None,
        status: format!("{} adjustments", out.trace.len()),
    })
}

/// Exhaustive optimum over all associations of a small network.
#[pyfunction]
#[pyo3(signature = (net, objective="sum"))]
fn brute_force(net: &PyNetwork, objective: &str) -> PyResult<PySolution> {
    let objective = parse_objective(objective).py()?;
    let (a, value) = brute_force_optimum(&net.inner, objective).py()?;
    let r = fixed_point_load(&a, &net.inner, &SolverOptions::default()).py()?;
    Ok(PySolution {
        serving: a.serving_sets().to_vec(),
        objective: value,
        load: r.load,
        bound: None,
        status: "optimal".into(),
    })
}

/// Serving sets keeping every load at most one, if any exist.
#[pyfunction]
fn find_feasible(net: &PyNetwork) -> PyResult<Option<Vec<Vec<usize>>>> {
    Ok(find_feasible_association(&net.inner)
        .py()?
        .map(|a| a.serving_sets().to_vec()))
}

/// Runs a demand sweep on desk-scale scenarios and returns the report text.
#[pyfunction]
#[pyo3(signature = (seeds, methods=None, objective="sum", demands=None, format="csv", node_limit=None))]
fn run_experiment(
    seeds: Vec<u64>,
    methods: Option<Vec<String>>,
    objective: &str,
    demands: Option<Vec<f64>>,
    format: &str,
    node_limit: Option<usize>,
) -> PyResult<String> {
    let mut config = ExperimentConfig {
        seeds,
        objective: parse_objective(objective).py()?,
        ..ExperimentConfig::default()
    };
    if let Some(m) = methods {
        config.methods = m.iter().map(|s| s.parse::<Method>()).collect::<Result<_, _>>().py()?;
    }
    if let Some(d) = demands {
        config.demand = DemandSpec::Values(d);
    }
    if let Some(n) = node_limit {
        config.pipeline.bnb.node_limit = n;
    }
    let format: ReportFormat = format.parse().py()?;
    render_report(&run_sweep(&config).py()?, format).py()
}

#[pymodule]
fn jtcouple_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyFixedPoint>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(fixed_point, m)?)?;
    m.add_function(wrap_pyfunction!(load_bounds, m)?)?;
    m.add_function(wrap_pyfunction!(solve_milp, m)?)?;
    m.add_function(wrap_pyfunction!(minl, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(find_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
