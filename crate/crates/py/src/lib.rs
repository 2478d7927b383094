//! Python bindings. Structured values (task specs, episodes, reports) cross
//! the boundary as plain dicts built from their JSON form.

use std::path::PathBuf;

use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use serde::Serialize;

use quard_core::codec::CONTINUOUS_DIMS;
use quard_core::dataset::{self, GenerationPlan, PlanEntry};
use quard_core::eval::{self, EvalSuite, OraclePolicy, RandomPolicy};
use quard_core::{ActionCommand, ActionDim, ActionSpaceSpec, ActionTokens, QuardConfig, Skill, Split, TaskSpec};

create_exception!(quard, QuardError, PyException);

fn err(e: impl std::fmt::Display) -> PyErr {
    QuardError::new_err(e.to_string())
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(err)?;
    py.import("json")?.call_method1("loads", (text,))
}

fn from_py<T: serde::de::DeserializeOwned>(value: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = value.py().import("json")?.call_method1("dumps", (value,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn config(path: Option<PathBuf>) -> PyResult<QuardConfig> {
    match path {
        Some(p) => QuardConfig::load(&p).map_err(err),
        None => Ok(QuardConfig::default()),
    }
}

fn skill(name: &str) -> PyResult<Skill> {
    name.parse().map_err(PyValueError::new_err)
}

/// Maps action commands to discrete tokens and back.
#[pyclass(name = "ActionSpace", frozen)]
struct PyActionSpace(ActionSpaceSpec);

#[pymethods]
impl PyActionSpace {
    #[new]
    fn new() -> Self {
        PyActionSpace(ActionSpaceSpec::default())
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        toml::from_str::<ActionSpaceSpec>(text).map(PyActionSpace).map_err(err)
    }

    /// Continuous dimension names in token order.
    #[staticmethod]
    fn dims() -> Vec<&'static str> {
        ActionDim::ALL.iter().map(|d| d.name()).collect()
    }

    #[getter]
    fn bin_count(&self) -> u32 {
        self.0.bin_count()
    }

    #[getter]
    fn token_offset(&self) -> u32 {
        self.0.token_offset()
    }

    fn tokenize(&self, values: Vec<f64>, terminate: bool) -> PyResult<Vec<u32>> {
        let values: [f64; CONTINUOUS_DIMS] = values.try_into().map_err(|v: Vec<f64>| {
            PyValueError::new_err(format!("expected {CONTINUOUS_DIMS} values, got {}", v.len()))
        })?;
        let tokens = self
            .0
            .tokenize(&ActionCommand::from_values(values, terminate))
            .map_err(err)?;
        Ok(tokens.as_slice().to_vec())
    }

    /// Returns the bin-center values and the terminate flag.
    fn detokenize(&self, tokens: Vec<u32>) -> PyResult<(Vec<f64>, bool)> {
        let tokens = ActionTokens::from_slice(&tokens).map_err(err)?;
        let cmd = self.0.detokenize(&tokens).map_err(err)?;
        Ok((cmd.values().to_vec(), cmd.t))
    }

    fn to_toml(&self) -> PyResult<String> {
        toml::to_string(&self.0).map_err(err)
    }
}

/// Parses an instruction into a task spec dict.
#[pyfunction]
fn parse_instruction<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &quard_core::parse_instruction(text).map_err(err)?)
}

/// Renders the canonical instruction text for a task spec dict.
#[pyfunction]
fn render_instruction(spec: &Bound<'_, PyAny>) -> PyResult<String> {
    let spec: TaskSpec = from_py(spec)?;
    Ok(quard_core::render_instruction(&spec).map_err(err)?.text)
}

/// Every seen-catalog task spec for a skill.
#[pyfunction]
fn seen_tasks<'py>(py: Python<'py>, skill_name: &str) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &TaskSpec::seen_space(skill(skill_name)?))
}

/// Runs the expert on one task and returns the episode dict (frames are not included).
#[pyfunction]
#[pyo3(signature = (spec, seed, config_path=None))]
fn generate_episode<'py>(
    py: Python<'py>,
    spec: &Bound<'py, PyAny>,
    seed: u64,
    config_path: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let spec: TaskSpec = from_py(spec)?;
    let cfg = config(config_path)?;
    let g = py
        .detach(|| quard_core::expert::generate_episode(&spec, seed, &cfg))
        .map_err(err)?;
    to_py(py, &g.episode)
}

/// An on-disk episode store.
#[pyclass(name = "Store", frozen)]
struct PyStore(dataset::Store);

#[pymethods]
impl PyStore {
    #[staticmethod]
    fn create(path: PathBuf) -> PyResult<Self> {
        let cfg = QuardConfig::default();
        dataset::Store::create(&path, &cfg.action_space, cfg.sim.rates)
            .map(PyStore)
            .map_err(err)
    }

    #[staticmethod]
    fn open(path: PathBuf) -> PyResult<Self> {
        dataset::Store::open(&path).map(PyStore).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.manifest().episodes as usize
    }

    fn manifest<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.manifest())
    }

    fn episode_ids(&self) -> PyResult<Vec<String>> {
        Ok(self
            .0
            .episodes()
            .map_err(err)?
            .into_iter()
            .map(|e| e.episode_id)
            .collect())
    }

    fn episode<'py>(&self, py: Python<'py>, episode_id: &str) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &self.0.get(episode_id).map_err(err)?.0)
    }

    /// A stored frame as binary PPM bytes.
    fn frame_ppm<'py>(&self, py: Python<'py>, frame: &str) -> PyResult<Bound<'py, PyBytes>> {
        let obs = self.0.read_frame(frame).map_err(err)?;
        Ok(PyBytes::new(py, &obs.to_ppm()))
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &dataset::compute_stats(&self.0).map_err(err)?)
    }

    fn stats_table(&self) -> PyResult<String> {
        Ok(dataset::compute_stats(&self.0).map_err(err)?.to_table())
    }

    /// Imports real-robot episode folders; returns (imported, skipped).
    fn import_real(&self, py: Python<'_>, folder: PathBuf) -> PyResult<(usize, usize)> {
        let r = py.detach(|| dataset::import_real(&folder, &self.0)).map_err(err)?;
        Ok((r.count(), r.skipped.len()))
    }
}

/// Fills a new store. Without `skills` and `count` the corpus plan divided by
/// `scale` is used. Returns the number of episodes written.
#[pyfunction]
#[pyo3(signature = (out, seed, skills=None, count=None, real=false, scale=1000, config_path=None))]
#[allow(clippy::too_many_arguments)]
fn collect(
    py: Python<'_>,
    out: PathBuf,
    seed: u64,
    skills: Option<Vec<String>>,
    count: Option<usize>,
    real: bool,
    scale: usize,
    config_path: Option<PathBuf>,
) -> PyResult<usize> {
    let cfg = config(config_path)?;
    let plan = match (skills, count) {
        (None, None) if !real => GenerationPlan::scaled(scale.max(1)),
        (skills, Some(count)) => {
            let skills = match skills {
                Some(names) => names.iter().map(|n| skill(n)).collect::<PyResult<Vec<_>>>()?,
                None => Skill::ALL.to_vec(),
            };
            let split = if real { Split::SeenReal } else { Split::SeenSim };
            GenerationPlan {
                entries: skills
                    .into_iter()
                    .map(|skill| PlanEntry { skill, split, count })
                    .collect(),
            }
        }
        _ => return Err(PyValueError::new_err("skills and real need count")),
    };
    let store = dataset::Store::create(&out, &cfg.action_space, cfg.sim.rates).map_err(err)?;
    let summary = py.detach(|| dataset::collect(&store, &plan, seed, &cfg)).map_err(err)?;
    if let Some((id, e)) = summary.failures.first() {
        return Err(err(format!(
            "{} episodes failed; first {id}: {e}",
            summary.failures.len()
        )));
    }
    Ok(summary.written)
}

/// Suite definition as TOML, for a named suite.
#[pyfunction]
fn suite_toml(name: &str, seed: u64) -> PyResult<String> {
    Ok(EvalSuite::by_name(name, seed).map_err(err)?.to_toml())
}

/// Evaluates `oracle`, `random` or `knn:<store>` on a named suite and
/// returns the report dict.
#[pyfunction]
#[pyo3(signature = (policy, suite, seed, k=None, config_path=None))]
fn evaluate<'py>(
    py: Python<'py>,
    policy: &str,
    suite: &str,
    seed: u64,
    k: Option<usize>,
    config_path: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = config(config_path)?;
    let suite = EvalSuite::by_name(suite, seed).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let report = match policy {
        "oracle" => py.detach(|| eval::run_suite(&OraclePolicy::new(&cfg), &suite, &cfg)),
        "random" => py.detach(|| eval::run_suite(&RandomPolicy::new(seed), &suite, &cfg)),
        p => {
            let path = p
                .strip_prefix("knn:")
                .ok_or_else(|| PyValueError::new_err(format!("unknown policy `{p}`")))?;
            let store = dataset::Store::open(std::path::Path::new(path)).map_err(err)?;
            let knn = eval::knn_bc_policy(&store, k.unwrap_or(cfg.knn.k), &cfg.knn)
                .map_err(|e| PyValueError::new_err(e.to_string()))?;
            py.detach(|| eval::run_suite(&knn, &suite, &cfg))
        }
    };
    let out = to_py(py, &report)?;
    out.set_item("overall_success_rate", report.overall_success_rate())?;
    Ok(out)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("QuardError", m.py().get_type::<QuardError>())?;
    m.add_class::<PyActionSpace>()?;
    m.add_class::<PyStore>()?;
    m.add_function(wrap_pyfunction!(parse_instruction, m)?)?;
    m.add_function(wrap_pyfunction!(render_instruction, m)?)?;
    m.add_function(wrap_pyfunction!(seen_tasks, m)?)?;
    m.add_function(wrap_pyfunction!(generate_episode, m)?)?;
    m.add_function(wrap_pyfunction!(collect, m)?)?;
    m.add_function(wrap_pyfunction!(suite_toml, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("SKILLS", Skill::ALL.iter().map(|s| s.name()).collect::<Vec<_>>())?;
    Ok(())
}

#[pymodule]
fn quard(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dict_conversion_round_trips_task_specs() {
        Python::attach(|py| {
            for &s in Skill::ALL {
                for spec in TaskSpec::seen_space(s).into_iter().step_by(7) {
                    let d = to_py(py, &spec).unwrap();
                    assert_eq!(from_py::<TaskSpec>(&d).unwrap(), spec);
                }
            }
        });
    }

    #[test]
    fn unknown_skill_is_a_value_error() {
        Python::attach(|py| {
            let e = skill("fly").unwrap_err();
            assert!(e.is_instance_of::<PyValueError>(py));
        });
    }
}
