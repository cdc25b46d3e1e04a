//! Python bindings: scenarios in, simulated traces and analyses out.
//!
//! Time values cross the boundary as exact strings (`"5"`, `"89/10"`) so
//! nothing is lost to floating point; `fractions.Fraction` parses both
//! forms directly.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use std::str::FromStr;
use suspsim::analysis::{
    scenario_rta, wcrt_bruteforce_special_case, wcrt_lock_bound, BruteForceResult, LockBoundMode,
};
use suspsim::cli_io::{export_trace, parse_scenario, render_gantt, scenario_to_json};
use suspsim::model::{validate_scenario, Enforcement, LockSemantics, Ratio};
use suspsim::repro::{builtin, fig6_with_epsilon, run_case};
use suspsim::sched::simulate;

fn err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn ratio(text: &str) -> PyResult<Ratio> {
    Ratio::from_str(text).map_err(err)
}

/// A validated task-set-plus-configuration, ready to simulate.
#[pyclass(frozen)]
struct Scenario {
    inner: suspsim::model::Scenario,
}

#[pymethods]
impl Scenario {
    /// Parses and validates scenario JSON.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = parse_scenario(text).map_err(err)?;
        let report = validate_scenario(&inner);
        if !report.is_ok() {
            return Err(err(format!("invalid scenario:\n{report}")));
        }
        Ok(Scenario { inner })
    }

    /// Loads one of the bundled reproduction scenarios by name.
    #[staticmethod]
    fn builtin(name: &str) -> PyResult<Self> {
        builtin(name)
            .map(|case| Scenario { inner: case.scenario })
            .ok_or_else(|| err(format!("unknown builtin `{name}`")))
    }

    fn to_json(&self) -> String {
        scenario_to_json(&self.inner)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    fn task_ids(&self) -> Vec<String> {
        self.inner.tasks.iter().map(|t| t.id.clone()).collect()
    }

    /// Copy with a different enforcement mode: `"off"`, `"on"`, or
    /// `"on_idle_eligible"`.
    fn with_enforcement(&self, mode: &str) -> PyResult<Self> {
        let enforcement = match mode {
            "off" => Enforcement::Off,
            "on" => Enforcement::On,
            "on_idle_eligible" | "on-idle-eligible" => Enforcement::OnIdleEligible,
            other => return Err(err(format!("unknown enforcement mode `{other}`"))),
        };
        let mut inner = self.inner.clone();
        inner.config.enforcement = enforcement;
        Ok(Scenario { inner })
    }

    /// Copy with different lock semantics: `"at_eligibility"`,
    /// `"immediate"`, `"exempt_cs"`, or `"distributed"`.
    fn with_lock_semantics(&self, mode: &str) -> PyResult<Self> {
        let semantics = match mode {
            "at_eligibility" | "at-eligibility" => LockSemantics::AtEligibility,
            "immediate" => LockSemantics::Immediate,
            "exempt_cs" | "exempt-cs" => LockSemantics::ExemptCs,
            "distributed" => LockSemantics::Distributed,
            other => return Err(err(format!("unknown lock semantics `{other}`"))),
        };
        let mut inner = self.inner.clone();
        inner.config.lock_semantics = semantics;
        Ok(Scenario { inner })
    }

    /// Copy with a different horizon, given as an exact rational string.
    fn with_horizon(&self, horizon: &str) -> PyResult<Self> {
        let mut inner = self.inner.clone();
        inner.config.horizon = ratio(horizon)?;
        Ok(Scenario { inner })
    }

    fn simulate(&self) -> PyResult<Trace> {
        simulate(&self.inner).map(|inner| Trace { inner }).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name='{}', tasks={})", self.inner.name, self.inner.tasks.len())
    }
}

/// The complete schedule produced by one simulation run.
#[pyclass(frozen)]
struct Trace {
    inner: suspsim::sched::ScheduleTrace,
}

#[pymethods]
impl Trace {
    /// Deadline misses as `(task, job, instant)` tuples.
    fn misses(&self) -> Vec<(String, u32, String)> {
        self.inner.misses().into_iter().map(|(t, j, at)| (t, j, at.to_string())).collect()
    }

    fn max_response(&self, task: &str) -> Option<String> {
        self.inner.max_response(task).map(|r| r.to_string())
    }

    fn response(&self, task: &str, job: u32) -> Option<String> {
        self.inner.job(task, job).and_then(|j| j.response).map(|r| r.to_string())
    }

    /// The stored eligibility time of the job's `index`-th enforced chunk.
    fn eligibility(&self, task: &str, job: u32, index: u32) -> Option<String> {
        self.inner.eligibility_of(task, job, index).map(|r| r.to_string())
    }

    fn first_dispatch(&self, task: &str, job: u32, seg: u32) -> Option<String> {
        self.inner.first_dispatch(task, job, seg).map(|r| r.to_string())
    }

    /// Lock grant instants for the job, in time order.
    fn grants(&self, task: &str, job: u32) -> Vec<String> {
        self.inner.grants_for(task, job).into_iter().map(|r| r.to_string()).collect()
    }

    /// The stable line-oriented trace export (byte-identical across runs).
    fn export(&self) -> String {
        export_trace(&self.inner)
    }

    /// ASCII schedule; `cell` is the column width as a rational string.
    #[pyo3(signature = (cell = "1"))]
    fn gantt(&self, cell: &str) -> PyResult<String> {
        render_gantt(&self.inner, ratio(cell)?).map_err(err)
    }

    /// Structural self-checks; an empty list means the trace is coherent.
    fn check_invariants(&self) -> Vec<String> {
        self.inner.check_invariants()
    }

    #[getter]
    fn event_count(&self) -> usize {
        self.inner.events.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Trace(scenario='{}', events={}, misses={})",
            self.inner.scenario,
            self.inner.events.len(),
            self.inner.misses().len()
        )
    }
}

/// Names of the bundled reproduction scenarios.
#[pyfunction]
fn builtin_names() -> Vec<&'static str> {
    suspsim::repro::builtin_names()
}

/// Runs a bundled case and returns `(passed, lines)` with one line per
/// assertion. `epsilon` tightens the execution-time slack of the
/// lock-parking case and applies only to it.
#[pyfunction]
#[pyo3(signature = (name, epsilon = None))]
fn run_builtin(name: &str, epsilon: Option<&str>) -> PyResult<(bool, Vec<String>)> {
    let case = match epsilon {
        Some(e) if name == "fig6_lock_immediate" => fig6_with_epsilon(ratio(e)?),
        Some(_) => return Err(err("epsilon only applies to fig6_lock_immediate")),
        None => builtin(name).ok_or_else(|| err(format!("unknown builtin `{name}`")))?,
    };
    let (_, report) = run_case(&case).map_err(err)?;
    let lines = report
        .outcomes
        .iter()
        .map(|o| {
            if o.passed {
                format!("PASS: {}", o.assertion)
            } else {
                format!("FAIL: {} ({})", o.assertion, o.detail)
            }
        })
        .collect();
    Ok((report.passed(), lines))
}

fn bruteforce_dict<'py>(py: Python<'py>, result: &BruteForceResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("task", &result.task)?;
    d.set_item("wcrt", result.wcrt.map(|w| w.to_string()))?;
    d.set_item("schedulable", result.schedulable)?;
    let segments = PyList::empty(py);
    for bound in &result.per_segment {
        let s = PyDict::new(py);
        s.set_item("segment", bound.segment)?;
        s.set_item("finish", bound.finish.map(|f| f.to_string()))?;
        s.set_item("latest_arrival", bound.latest_arrival.to_string())?;
        segments.append(s)?;
    }
    d.set_item("per_segment", segments)?;
    Ok(d)
}

/// Response-time analysis of the scenario's task set (single processor,
/// no resources). Returns method, per-task responses, and — when the
/// suspending task was split segment-wise — the exact search result.
#[pyfunction]
fn rta<'py>(py: Python<'py>, scenario: &Scenario) -> PyResult<Bound<'py, PyDict>> {
    let report = scenario_rta(&scenario.inner).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("method", report.method)?;
    d.set_item("schedulable", report.rta.schedulable)?;
    let tasks = PyList::empty(py);
    for t in &report.rta.per_task {
        let row = PyDict::new(py);
        row.set_item("id", &t.id)?;
        row.set_item("response", t.response.map(|r| r.to_string()))?;
        row.set_item("schedulable", t.schedulable)?;
        tasks.append(row)?;
    }
    d.set_item("per_task", tasks)?;
    if let Some(exact) = &report.exact {
        d.set_item("exact", bruteforce_dict(py, exact)?)?;
    }
    Ok(d)
}

/// Exact worst-case response time by exhaustive search (one suspending
/// lowest-priority task, one processor, no resources).
#[pyfunction]
fn bruteforce<'py>(py: Python<'py>, scenario: &Scenario) -> PyResult<Bound<'py, PyDict>> {
    let result = wcrt_bruteforce_special_case(&scenario.inner.tasks).map_err(err)?;
    bruteforce_dict(py, &result)
}

/// Coarse response-time bound for a task using shared resources:
/// execution plus suspension budget plus one maximal critical section per
/// remote task sharing a resource.
#[pyfunction]
#[pyo3(signature = (scenario, task, mode = None))]
fn lock_bound<'py>(
    py: Python<'py>,
    scenario: &Scenario,
    task: &str,
    mode: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let mode = match mode {
        Some("shared_memory" | "shared-memory") => LockBoundMode::SharedMemory,
        Some("distributed") => LockBoundMode::Distributed,
        Some(other) => return Err(err(format!("unknown mode `{other}`"))),
        None => match scenario.inner.config.lock_semantics {
            LockSemantics::Distributed => LockBoundMode::Distributed,
            _ => LockBoundMode::SharedMemory,
        },
    };
    let bound = wcrt_lock_bound(task, &scenario.inner.tasks, mode).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("task", task)?;
    d.set_item("bound", bound.to_string())?;
    d.set_item(
        "mode",
        match mode {
            LockBoundMode::SharedMemory => "shared_memory",
            LockBoundMode::Distributed => "distributed",
        },
    )?;
    Ok(d)
}

#[pymodule]
fn suspsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Scenario>()?;
    m.add_class::<Trace>()?;
    m.add_function(wrap_pyfunction!(builtin_names, m)?)?;
    m.add_function(wrap_pyfunction!(run_builtin, m)?)?;
    m.add_function(wrap_pyfunction!(rta, m)?)?;
    m.add_function(wrap_pyfunction!(bruteforce, m)?)?;
    m.add_function(wrap_pyfunction!(lock_bound, m)?)?;
    Ok(())
}
