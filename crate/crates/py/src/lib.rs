//! Python module `txlog`: load a program, run queries in either prover, and
//! inspect tables, states and counters.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use txlog::bench::{run_bench, to_csv, Mode};
use txlog::engine::{Answer, Engine, EngineError, EngineOptions};
use txlog::{parse_goal, parse_program, StateSignature, StoreOptions};

/// One answer as (variable name -> value text, final state signature).
type PyAnswer = (BTreeMap<String, String>, u32);

fn engine_error(e: EngineError) -> PyErr {
    if e.is_resource() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

fn convert(answers: Vec<Answer>) -> Vec<PyAnswer> {
    answers
        .into_iter()
        .map(|a| {
            let bindings = a.bindings.iter().map(|(v, t)| (v.to_string(), t.to_string())).collect();
            (bindings, a.final_state.0)
        })
        .collect()
}

#[pyclass(name = "Engine", module = "txlog")]
pub struct PyEngine {
    inner: Engine,
}

#[pymethods]
impl PyEngine {
    #[new]
    #[pyo3(signature = (source, tabling = true, incremental = true, max_steps = 1_000_000))]
    pub fn new(source: &str, tabling: bool, incremental: bool, max_steps: u64) -> PyResult<Self> {
        let program = parse_program(source).map_err(|e| PyValueError::new_err(e.to_string()))?;
        let options = EngineOptions {
            tabling,
            max_steps: max_steps.max(1),
            store: StoreOptions { incremental, ..StoreOptions::default() },
            ..EngineOptions::default()
        };
        let inner = Engine::new(program, options).map_err(engine_error)?;
        Ok(PyEngine { inner })
    }

    /// Answers of `goal` at `state` using the configured prover.
    #[pyo3(signature = (goal, state = 0))]
    pub fn query(&mut self, goal: &str, state: u32) -> PyResult<Vec<PyAnswer>> {
        let goal = parse_goal(goal).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.run(&goal, StateSignature(state)).map(convert).map_err(engine_error)
    }

    /// Answers from the depth-first prover within `budget` steps.
    #[pyo3(signature = (goal, budget, state = 0))]
    pub fn query_untabled(&mut self, goal: &str, budget: u64, state: u32) -> PyResult<Vec<PyAnswer>> {
        let goal = parse_goal(goal).map_err(|e| PyValueError::new_err(e.to_string()))?;
        self.inner.solve_untabled(&goal, StateSignature(state), budget).map(convert).map_err(engine_error)
    }

    #[getter]
    pub fn tabling(&self) -> bool {
        self.inner.options().tabling
    }

    #[setter]
    pub fn set_tabling(&mut self, on: bool) {
        self.inner.options_mut().tabling = on;
    }

    pub fn stats(&self) -> BTreeMap<&'static str, u64> {
        let s = self.inner.stats();
        BTreeMap::from([
            ("table_hits", s.table_hits),
            ("table_misses", s.table_misses),
            ("answers_produced", s.answers_produced),
            ("clause_resolutions", s.clause_resolutions),
            ("oracle_queries", s.oracle_queries),
            ("updates_applied", s.updates_applied),
            ("states_interned", s.states_interned),
        ])
    }

    /// The call-answer table, one row per answer.
    pub fn table(&self) -> String {
        self.inner.table_dump()
    }

    pub fn state_count(&self) -> usize {
        self.inner.store().state_count()
    }

    /// `ins[...]/del[...] @ sig` for a known state.
    pub fn state(&self, sig: u32) -> PyResult<String> {
        self.inner.store().render_state(StateSignature(sig)).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Every fact (base and derived) true in a state, sorted.
    pub fn facts(&self, sig: u32) -> PyResult<Vec<String>> {
        let facts = self.inner.store().facts_of(StateSignature(sig)).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(facts.iter().map(|f| f.to_string()).collect())
    }
}

/// Parses and pretty-prints a program.
#[pyfunction]
pub fn format_program(source: &str) -> PyResult<String> {
    parse_program(source).map(|p| p.to_string()).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Runs a generated benchmark and returns its CSV text.
#[pyfunction(name = "bench")]
#[pyo3(signature = (name, n, modes = vec!["tabled".to_string(), "untabled".to_string()], seed = 0, max_steps = 1_000_000))]
pub fn run_benchmark(name: &str, n: usize, modes: Vec<String>, seed: u64, max_steps: u64) -> PyResult<String> {
    let modes = modes.iter().map(|m| Mode::parse(m)).collect::<Result<Vec<_>, _>>();
    let rows = modes.and_then(|modes| run_bench(name, n, &modes, seed, max_steps));
    rows.map(|r| to_csv(&r)).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
#[pyo3(name = "txlog")]
fn txlog_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyEngine>()?;
    m.add_function(wrap_pyfunction!(format_program, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CONSUME_EDGE: &str = "edge(1,2).
reach(X,Y) <- edge(X,Y) * del(edge(X,Y)).
reach(X,Y) <- edge(X,Z) * del(edge(X,Z)) * reach(Z,Y).
";

    #[test]
    fn engine_round_trip() {
        let mut e = PyEngine::new(CONSUME_EDGE, true, true, 10_000).unwrap();
        let answers = e.query("reach(X,Y)", 0).unwrap();
        let expect = BTreeMap::from([("X".to_string(), "1".to_string()), ("Y".to_string(), "2".to_string())]);
        assert_eq!(answers, vec![(expect, 1)]);
        assert_eq!(e.stats()["updates_applied"], 1);
        assert_eq!(e.query_untabled("reach(X,Y)", 1000, 0).unwrap(), answers);
        assert_eq!(e.state(1).unwrap(), "ins[]/del[edge(1,2)] @ 1");
        assert!(e.facts(1).unwrap().is_empty());
        assert!(e.table().contains("reach(2,V0) | 1 | fail | -"));
    }

    #[test]
    fn errors_map_to_python_exceptions() {
        Python::initialize();
        Python::attach(|py| {
            let err = PyEngine::new("p(X).", true, true, 10).err().unwrap();
            assert!(err.is_instance_of::<PyValueError>(py));
            let mut e = PyEngine::new("e(a,b). e(b,a). r(X,Y) <- e(X,Y). r(X,Y) <- r(X,Z) * e(Z,Y).", false, true, 500).unwrap();
            let err = e.query("r(a,X)", 0).unwrap_err();
            assert!(err.is_instance_of::<PyRuntimeError>(py));
            e.set_tabling(true);
            assert_eq!(e.query("r(a,X)", 0).unwrap().len(), 2);
        });
    }

    #[test]
    fn module_is_importable_from_rust() {
        Python::initialize();
        Python::attach(|py| {
            let m = PyModule::new(py, "txlog").unwrap();
            txlog_py(&m).unwrap();
            assert!(m.getattr("Engine").is_ok());
            let csv: String = m.getattr("bench").unwrap().call1(("tc-chain", 3)).unwrap().extract().unwrap();
            assert!(csv.starts_with("benchmark,mode,n,"));
        });
    }
}
