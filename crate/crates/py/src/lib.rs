//! Python bindings for the fairserve core: identity encoding, issue metrics,
//! reward shaping, the bias detector, and the training/evaluation commands.

use std::path::Path;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use fairserve::config::RunConfig;
use fairserve::detector::DetectorModel;
use fairserve::env::{run_episode, EpisodeRecord};
use fairserve::harness::{self, BoundNetworkPolicy, FairScripted};
use fairserve::metrics::{total_issue_scalar, total_issue_vector, IssueScoreVector, ScalarMode};
use fairserve::nn::{encode_state, ActorCriticParams};
use fairserve::population::{
    enumerate_groups, IdentityProfile, AGE_VALUES, GENDER_VALUES, RACE_VALUES, SKIN_VALUES,
};
use fairserve::shaping;
use fairserve::FairserveError;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py_err(e: FairserveError) -> PyErr {
    match e.exit_code() {
        2 | 3 => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_config(text: Option<&str>) -> PyResult<RunConfig> {
    match text {
        Some(t) => RunConfig::parse(t).map_err(to_py_err),
        None => Ok(RunConfig::default()),
    }
}

fn vec4(issue: [f64; 4]) -> IssueScoreVector {
    IssueScoreVector::from_array(issue)
}

fn lookup<T: Copy + std::fmt::Debug>(attr: &str, label: &str, values: &[T]) -> PyResult<T> {
    values
        .iter()
        .find(|v| format!("{v:?}").eq_ignore_ascii_case(label))
        .copied()
        .ok_or_else(|| {
            let options: Vec<String> = values.iter().map(|v| format!("{v:?}")).collect();
            PyValueError::new_err(format!(
                "unknown {attr} '{label}' (expected one of {})",
                options.join(", ")
            ))
        })
}

fn scalar_mode(mode: &str) -> PyResult<ScalarMode> {
    match mode {
        "mean" => Ok(ScalarMode::Mean),
        "sum" => Ok(ScalarMode::Sum),
        other => Err(PyValueError::new_err(format!(
            "unknown scalar mode '{other}' (expected 'mean' or 'sum')"
        ))),
    }
}

/// One requester identity; mirrors the core `IdentityProfile`.
#[pyclass(name = "Identity", from_py_object)]
#[derive(Clone)]
struct PyIdentity {
    inner: IdentityProfile,
}

#[pymethods]
impl PyIdentity {
    #[new]
    fn new(
        race: &str,
        gender: &str,
        age_band: &str,
        disabled: bool,
        skin_type: &str,
    ) -> PyResult<Self> {
        Ok(PyIdentity {
            inner: IdentityProfile {
                race: lookup("race", race, &RACE_VALUES)?,
                gender: lookup("gender", gender, &GENDER_VALUES)?,
                age_band: lookup("age band", age_band, &AGE_VALUES)?,
                disabled,
                skin_type: lookup("skin type", skin_type, &SKIN_VALUES)?,
            },
        })
    }

    /// 22-dimensional one-hot encoding across the five attributes.
    fn encode(&self) -> Vec<f64> {
        self.inner.encode().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// Trained bias detector (PCA + logistic regression) loaded from a checkpoint.
#[pyclass(name = "Detector")]
struct PyDetector {
    inner: DetectorModel,
}

#[pymethods]
impl PyDetector {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyDetector { inner: DetectorModel::load(Path::new(path)).map_err(to_py_err)? })
    }

    /// (biased probability, verdict) for a 4-component issue vector
    /// (willingness, quality, priority, risk).
    fn predict(&self, issue: [f64; 4]) -> (f64, bool) {
        self.inner.predict(&vec4(issue))
    }
}

/// Trained service policy loaded from a checkpoint.
#[pyclass(name = "Policy")]
struct PyPolicy {
    inner: ActorCriticParams,
}

#[pymethods]
impl PyPolicy {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyPolicy { inner: ActorCriticParams::load(Path::new(path)).map_err(to_py_err)? })
    }

    /// (walk probability, respond probability) for a requester at a given
    /// distance and step, under the default environment geometry.
    fn action_probabilities(
        &self,
        identity: &PyIdentity,
        distance_m: f64,
        step: usize,
    ) -> Vec<f64> {
        let cfg = RunConfig::default();
        let state = fairserve::env::EnvState { identity: identity.inner, distance_m, step };
        let x = encode_state(&state, &cfg.env);
        let (probs, _) = self.inner.actor_forward(&x);
        probs
    }
}

/// Mean or sum of the four issue components.
#[pyfunction]
#[pyo3(signature = (issue, mode="mean"))]
fn issue_scalar(issue: [f64; 4], mode: &str) -> PyResult<f64> {
    Ok(total_issue_scalar(&vec4(issue), scalar_mode(mode)?))
}

/// tau . (1 - issue): the epoch fairness reward.
#[pyfunction]
fn fairness_reward(issue: [f64; 4], tau: [f64; 4]) -> f64 {
    shaping::fairness_reward(&vec4(issue), &tau)
}

/// Multiplies the reward by lambda when the epoch was flagged as biased.
#[pyfunction]
fn apply_detection_penalty(reward: f64, biased: bool, lambda_penalty: f64) -> f64 {
    shaping::apply_detection_penalty(reward, biased, lambda_penalty)
}

fn records_report<'py>(
    py: Python<'py>,
    cfg: &RunConfig,
    records: &[EpisodeRecord],
) -> PyResult<Bound<'py, PyDict>> {
    let env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let groups = enumerate_groups();
    let total = total_issue_vector(&env, records, &groups).map_err(to_py_err)?;
    let out = PyDict::new(py);
    out.set_item("issue", total.vector.as_array())?;
    out.set_item("scalar", total_issue_scalar(&total.vector, cfg.scalar_mode))?;
    out.set_item("excluded_groups", total.excluded_groups)?;
    out.set_item("episodes", records.len())?;
    Ok(out)
}

/// Rolls out the always-fair scripted policy and reports its issue metrics.
#[pyfunction]
#[pyo3(signature = (episodes=1000, seed=0, config=None))]
fn evaluate_fair_scripted<'py>(
    py: Python<'py>,
    episodes: usize,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = parse_config(config)?;
    cfg.seed = seed;
    let mut env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let policy = FairScripted { respond_at_m: cfg.env.appropriate_max_m };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<EpisodeRecord> = (0..episodes)
        .map(|i| run_episode(&mut env, &policy, &mut rng, i))
        .collect::<Result<_, _>>()
        .map_err(to_py_err)?;
    records_report(py, &cfg, &records)
}

/// Rolls out a trained policy checkpoint and reports its issue metrics.
#[pyfunction]
#[pyo3(signature = (policy_path, episodes=1000, seed=0, config=None))]
fn evaluate_policy<'py>(
    py: Python<'py>,
    policy_path: &str,
    episodes: usize,
    seed: u64,
    config: Option<&str>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut cfg = parse_config(config)?;
    cfg.seed = seed;
    let params = ActorCriticParams::load(Path::new(policy_path)).map_err(to_py_err)?;
    let policy = BoundNetworkPolicy { params: &params, env_cfg: cfg.env.clone() };
    let mut env = fairserve::env::Environment::new(cfg.env.clone(), cfg.weights.clone());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let records: Vec<EpisodeRecord> = (0..episodes)
        .map(|i| run_episode(&mut env, &policy, &mut rng, i))
        .collect::<Result<_, _>>()
        .map_err(to_py_err)?;
    records_report(py, &cfg, &records)
}

/// Generates a labeled detector dataset file; returns the number of epochs.
#[pyfunction]
#[pyo3(signature = (out_path, seed=0, config=None))]
fn gen_detector_data(out_path: &str, seed: u64, config: Option<&str>) -> PyResult<usize> {
    let mut cfg = parse_config(config)?;
    cfg.seed = seed;
    harness::cmd_gen_detector_data(&cfg, Path::new(out_path)).map_err(to_py_err)
}

/// Fits the detector on a labeled dataset; returns held-out accuracy.
#[pyfunction]
#[pyo3(signature = (dataset_path, out_path, seed=0, config=None))]
fn train_detector(
    dataset_path: &str,
    out_path: &str,
    seed: u64,
    config: Option<&str>,
) -> PyResult<f64> {
    let mut cfg = parse_config(config)?;
    cfg.seed = seed;
    let fit = harness::cmd_train_detector(&cfg, Path::new(dataset_path), Path::new(out_path))
        .map_err(to_py_err)?;
    Ok(fit.holdout_accuracy)
}

/// Runs a full training run into `out_dir`; returns per-epoch issue scalars.
#[pyfunction]
#[pyo3(signature = (out_dir, seed=0, config=None, detector_path=None, guidance=None, epochs=None))]
fn train(
    out_dir: &str,
    seed: u64,
    config: Option<&str>,
    detector_path: Option<&str>,
    guidance: Option<bool>,
    epochs: Option<usize>,
) -> PyResult<Vec<f64>> {
    let mut cfg = parse_config(config)?;
    cfg.seed = seed;
    cfg.train.seed = seed;
    if let Some(g) = guidance {
        cfg.train.guidance = g;
    }
    if let Some(e) = epochs {
        cfg.train.total_epochs = e;
    }
    let run = harness::cmd_train(&cfg, detector_path.map(Path::new), Path::new(out_dir))
        .map_err(to_py_err)?;
    Ok(run.epoch_logs.iter().map(|l| l.scalar).collect())
}

#[pymodule]
fn fairserve_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyIdentity>()?;
    m.add_class::<PyDetector>()?;
    m.add_class::<PyPolicy>()?;
    m.add_function(wrap_pyfunction!(issue_scalar, m)?)?;
    m.add_function(wrap_pyfunction!(fairness_reward, m)?)?;
    m.add_function(wrap_pyfunction!(apply_detection_penalty, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_fair_scripted, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate_policy, m)?)?;
    m.add_function(wrap_pyfunction!(gen_detector_data, m)?)?;
    m.add_function(wrap_pyfunction!(train_detector, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
