//! Python bindings. Structured results come back as plain dicts and lists.

use std::time::Duration;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use taskplan::automaton::{parse_hoa, to_hoa, translate, Nba};
use taskplan::fixtures;
use taskplan::ltl;
use taskplan::model::{Scenario, Team as CoreTeam};
use taskplan::planner::{self, gantt_rows, plan_json, LbMode, PlanConfig, PlanError, PlanOutcome, PlanSource};
use taskplan::pruning;
use taskplan::sim::{self, SimConfig};

/// Raised when the mission cannot be planned; `args[1]` holds the CLI exit code.
fn plan_err(e: PlanError) -> PyErr {
    let code = match e {
        PlanError::Unsatisfiable => 2,
        PlanError::InfeasibleForTeam(_) => 3,
        PlanError::NoSolution => 4,
        _ => 1,
    };
    PyRuntimeError::new_err((e.to_string(), code))
}

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen)]
struct Formula {
    inner: ltl::Formula,
}

#[pymethods]
impl Formula {
    #[new]
    fn new(text: &str) -> PyResult<Self> {
        Ok(Formula { inner: ltl::parse(text).map_err(value_err)? })
    }

    fn atoms(&self) -> Vec<String> {
        self.inner.atoms().into_iter().collect()
    }

    fn translate(&self) -> PyResult<Automaton> {
        Ok(Automaton { inner: translate(&self.inner).map_err(value_err)? })
    }

    /// Truth of the formula on a finite word given as a list of atom sets.
    fn satisfies(&self, word: Vec<Vec<String>>) -> bool {
        let word: Vec<_> = word.into_iter().map(|l| l.into_iter().collect()).collect();
        ltl::satisfies(&self.inner, &word)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

#[pyclass(frozen)]
struct Automaton {
    inner: Nba,
}

#[pymethods]
impl Automaton {
    #[staticmethod]
    fn from_hoa(text: &str) -> PyResult<Self> {
        Ok(Automaton { inner: parse_hoa(text).map_err(value_err)? })
    }

    fn to_hoa(&self) -> String {
        to_hoa(&self.inner)
    }

    #[getter]
    fn num_states(&self) -> usize {
        self.inner.num_states()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    #[getter]
    fn atoms(&self) -> Vec<String> {
        self.inner.ap.clone()
    }

    fn accepts(&self, word: Vec<Vec<String>>) -> bool {
        let word: Vec<_> = word.into_iter().map(|l| l.into_iter().collect()).collect();
        self.inner.accepts_names(&word)
    }
}

#[pyclass(frozen)]
struct Team {
    scenario: Scenario,
    inner: CoreTeam,
}

#[pymethods]
impl Team {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let scenario = Scenario::from_json(text).map_err(value_err)?;
        let inner = CoreTeam::new(&scenario).map_err(value_err)?;
        Ok(Team { scenario, inner })
    }

    #[getter]
    fn agents(&self) -> Vec<String> {
        self.inner.agents.iter().map(|a| a.name.clone()).collect()
    }

    #[getter]
    fn regions(&self) -> Vec<String> {
        self.inner.regions.clone()
    }

    fn travel_time(&self, agent: &str, from: &str, to: &str) -> PyResult<f64> {
        let a = self.inner.agent_id(agent).ok_or_else(|| PyKeyError::new_err(agent.to_string()))?;
        let f = self.inner.region_id(from).ok_or_else(|| PyKeyError::new_err(from.to_string()))?;
        let t = self.inner.region_id(to).ok_or_else(|| PyKeyError::new_err(to.to_string()))?;
        Ok(self.inner.travel_time(a, f, t))
    }
}

/// Returns the pruned automaton and the reduction report.
#[pyfunction]
fn prune<'py>(py: Python<'py>, automaton: &Automaton, team: &Team) -> PyResult<(Automaton, Bound<'py, PyAny>)> {
    let infeasible = team.inner.infeasible_atoms(&automaton.inner.ap);
    let (nba, report) = pruning::prune(&automaton.inner, &infeasible).map_err(|_| plan_err(PlanError::Unsatisfiable))?;
    Ok((Automaton { inner: nba }, to_py(py, &report)?))
}

#[pyclass(frozen)]
struct Plan {
    team: Py<Team>,
    outcome: PlanOutcome,
}

#[pymethods]
impl Plan {
    #[getter]
    fn makespan(&self) -> f64 {
        self.outcome.makespan()
    }

    #[getter]
    fn proven(&self) -> bool {
        self.outcome.proven
    }

    #[getter]
    fn poset_dot(&self) -> String {
        self.outcome.poset.to_dot()
    }

    fn poset<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.outcome.poset)
    }

    /// Assignment, start times and incumbent history.
    fn summary<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let team = &self.team.get().inner;
        let inst = self.outcome.instance(team);
        to_py(py, &plan_json(self.outcome.poset.id, &inst, &self.outcome.node, &self.outcome.schedule, &self.outcome.history))
    }

    fn gantt<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let team = &self.team.get().inner;
        let inst = self.outcome.instance(team);
        to_py(py, &gantt_rows(&inst, &self.outcome.node, &self.outcome.schedule))
    }

    fn prune_report<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.outcome.prune_report)
    }

    /// Executes the plan. `failures` lists `(agent, time)` pairs; with
    /// `scenario_failures` the scenario's own list is used as well.
    #[pyo3(signature = (seed=0, noise=0.0, failures=Vec::new(), scenario_failures=false))]
    fn simulate<'py>(
        &self,
        py: Python<'py>,
        seed: u64,
        noise: f64,
        failures: Vec<(String, f64)>,
        scenario_failures: bool,
    ) -> PyResult<Bound<'py, PyAny>> {
        let team = self.team.get();
        let mut all = failures;
        if scenario_failures {
            all.extend(team.scenario.failures.iter().map(|f| (f.agent.clone(), f.time)));
        }
        let mut cfg = SimConfig { seed, noise, ..Default::default() };
        for (name, t) in all {
            let a = team.inner.agent_id(&name).ok_or_else(|| PyKeyError::new_err(name.clone()))?;
            cfg.failures.push((a, t));
        }
        let inst = self.outcome.instance(&team.inner);
        let o = &self.outcome;
        let trace = py
            .detach(|| sim::simulate(&inst, &o.poset, &o.node, &o.schedule, &cfg))
            .map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
        to_py(py, &trace)
    }
}

/// Runs the full pipeline. `mission` is formula text, or HOA text when `hoa` is set.
#[pyfunction]
#[pyo3(signature = (mission, team, budget_poset=5.0, budget_bnb=10.0, lb_mode="min", opposed_arity=3, jobs=1, hoa=false))]
#[allow(clippy::too_many_arguments)]
fn plan(
    py: Python<'_>,
    mission: &str,
    team: Py<Team>,
    budget_poset: f64,
    budget_bnb: f64,
    lb_mode: &str,
    opposed_arity: usize,
    jobs: usize,
    hoa: bool,
) -> PyResult<Plan> {
    if !(budget_poset > 0.0 && budget_bnb > 0.0) {
        return Err(PyValueError::new_err("budgets must be positive"));
    }
    let lb_mode = match lb_mode {
        "min" => LbMode::Min,
        "max" => LbMode::Max,
        other => return Err(PyValueError::new_err(format!("lb_mode must be 'min' or 'max', not {other:?}"))),
    };
    let cfg = PlanConfig {
        poset_budget: Duration::from_secs_f64(budget_poset),
        bnb_budget: Duration::from_secs_f64(budget_bnb),
        lb_mode,
        opposed_arity,
        jobs: jobs.max(1),
        ..Default::default()
    };
    let source = if hoa { PlanSource::Hoa(mission) } else { PlanSource::Formula(mission) };
    let t = team.get();
    let outcome = py.detach(|| planner::plan(source, &t.inner, &cfg, &|_| {})).map_err(plan_err)?;
    Ok(Plan { team, outcome })
}

#[pyfunction]
fn fixture_names() -> Vec<&'static str> {
    fixtures::names().collect()
}

/// The fixture's team and mission text.
#[pyfunction]
fn load_fixture(name: &str) -> PyResult<(Team, String)> {
    let f = fixtures::load_fixture(name).map_err(|e| PyKeyError::new_err(e.to_string()))?;
    Ok((Team { scenario: f.scenario, inner: f.team }, f.formula_text.to_string()))
}

#[pymodule]
fn taskplan_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Formula>()?;
    m.add_class::<Automaton>()?;
    m.add_class::<Team>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(prune, m)?)?;
    m.add_function(wrap_pyfunction!(plan, m)?)?;
    m.add_function(wrap_pyfunction!(fixture_names, m)?)?;
    m.add_function(wrap_pyfunction!(load_fixture, m)?)?;
    Ok(())
}
