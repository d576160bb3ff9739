//! Python bindings for the `cmab` constrained-bandit toolkit.

use std::collections::BTreeSet;

use cmab::{
    self as core, ArmSpec, BanditInstance, ComplexityReport, PolicyConfig, PolicySpec, Recording,
    SampleStream,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A validated bandit instance.
#[pyclass(name = "Instance", module = "pycmab", frozen)]
struct Instance {
    inner: BanditInstance,
}

#[pymethods]
impl Instance {
    /// Parses the JSON instance schema (`{"arms": [...], "constraint": C}`).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        BanditInstance::from_json(text)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Bernoulli reward and cost per arm.
    #[staticmethod]
    fn bernoulli(rewards: Vec<f64>, costs: Vec<f64>, constraint: f64) -> PyResult<Self> {
        if rewards.len() != costs.len() {
            return Err(PyValueError::new_err("rewards and costs differ in length"));
        }
        let arms = rewards
            .iter()
            .zip(&costs)
            .map(|(&r, &c)| ArmSpec::bernoulli(r, c))
            .collect();
        BanditInstance::new(arms, constraint)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    #[getter]
    fn num_arms(&self) -> usize {
        self.inner.num_arms()
    }

    #[getter]
    fn constraint(&self) -> f64 {
        self.inner.constraint()
    }

    #[getter]
    fn reward_means(&self) -> Vec<f64> {
        self.inner.reward_means()
    }

    #[getter]
    fn cost_means(&self) -> Vec<f64> {
        self.inner.cost_means()
    }

    #[getter]
    fn feasible_arms(&self) -> Vec<usize> {
        self.inner.feasible_arms()
    }

    #[getter]
    fn optimal_value(&self) -> f64 {
        self.inner.optimal_value()
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(num_arms={}, constraint={})",
            self.inner.num_arms(),
            self.inner.constraint()
        )
    }
}

/// Outcome of one policy run.
#[pyclass(name = "RunRecord", module = "pycmab", frozen)]
struct RunRecord {
    inner: core::RunRecord,
}

#[pymethods]
impl RunRecord {
    #[getter]
    fn policy(&self) -> &str {
        &self.inner.policy
    }

    #[getter]
    fn horizon(&self) -> u64 {
        self.inner.horizon
    }

    /// Arm played at each time 1..=T.
    #[getter]
    fn actions(&self) -> Vec<usize> {
        self.inner.trace.actions.clone()
    }

    #[getter]
    fn pull_counts(&self) -> Vec<u64> {
        self.inner.pull_counts()
    }

    #[getter]
    fn feasible(&self) -> Vec<usize> {
        self.inner.output.feasible.iter().copied().collect()
    }

    #[getter]
    fn competing(&self) -> Vec<usize> {
        self.inner.output.competing.iter().copied().collect()
    }

    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.inner.output.selected.iter().copied().collect()
    }

    #[getter]
    fn mu_star_used(&self) -> f64 {
        self.inner.mu_star_used
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunRecord(policy={:?}, horizon={}, selected={:?})",
            self.inner.policy, self.inner.horizon, self.inner.output.selected
        )
    }
}

#[allow(clippy::too_many_arguments)]
fn policy_config(
    instance: &BanditInstance,
    policy: &str,
    epsilon: f64,
    mu_star: Option<f64>,
    estimator: Option<&str>,
    fallback: Option<f64>,
    estimator_direction: Option<&str>,
) -> PyResult<PolicyConfig> {
    let spec: PolicySpec = serde_json::from_value(serde_json::json!({
        "policy": policy,
        "epsilon": epsilon,
        "mu_star": mu_star,
        "estimator": estimator,
        "fallback": fallback,
        "estimator_direction": estimator_direction,
    }))
    .map_err(value_err)?;
    spec.resolve(Some(instance.optimal_value()))
        .map_err(value_err)
}

/// Gap report, H(ε) and, given a horizon, the success bound.
#[pyfunction]
#[pyo3(signature = (instance, epsilon, horizon=None))]
fn complexity<'py>(
    py: Python<'py>,
    instance: &Instance,
    epsilon: f64,
    horizon: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut report = ComplexityReport::new(&instance.inner, epsilon).map_err(value_err)?;
    if let Some(t) = horizon {
        report = report.with_horizon(t);
    }
    let d = PyDict::new(py);
    d.set_item("epsilon", epsilon)?;
    d.set_item("mu_star", report.gaps.mu_star)?;
    d.set_item("delta", report.gaps.delta.clone())?;
    d.set_item("phi", report.gaps.phi.clone())?;
    d.set_item("h", report.h_epsilon)?;
    if let Some(b) = report.bound {
        d.set_item("horizon", report.horizon)?;
        d.set_item("bound_raw", b.raw)?;
        d.set_item("bound_clamped", b.clamped)?;
    }
    Ok(d)
}

/// `(raw, clamped)` value of 1 − 2|A|T·exp(−T/16H).
#[pyfunction]
fn theorem1_bound(num_arms: usize, horizon: u64, h: f64) -> (f64, f64) {
    let b = core::theorem1_bound(num_arms, horizon, h);
    (b.raw, b.clamped)
}

/// Smallest horizon at which the clamped bound reaches `target`.
#[pyfunction]
fn horizon_for_bound(num_arms: usize, h: f64, target: f64) -> Option<u64> {
    core::horizon_for_bound(num_arms, h, target)
}

#[pyfunction]
fn capt_index(
    mean_reward: f64,
    mean_cost: f64,
    pulls: u64,
    mu_star: f64,
    constraint: f64,
    epsilon: f64,
) -> f64 {
    core::capt_index(mean_reward, mean_cost, pulls, mu_star, constraint, epsilon)
}

/// `(feasible, competing)` arm sets at tolerance `kappa`.
#[pyfunction]
fn classify_sets(instance: &Instance, kappa: f64) -> (Vec<usize>, Vec<usize>) {
    let (f, c) = core::classify_sets(&instance.inner, kappa);
    (f.into_iter().collect(), c.into_iter().collect())
}

#[pyfunction]
fn is_epsilon_optimal(arms: Vec<usize>, instance: &Instance, epsilon: f64) -> bool {
    let set: BTreeSet<usize> = arms.into_iter().collect();
    core::is_epsilon_optimal(&set, &instance.inner, epsilon)
}

/// Single run with a full action trace.
#[pyfunction]
#[pyo3(signature = (
    instance, horizon, policy="capt", epsilon=0.1, mu_star=None, estimator=None,
    fallback=None, estimator_direction=None, seed=0, replication=0
))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    instance: &Instance,
    horizon: u64,
    policy: &str,
    epsilon: f64,
    mu_star: Option<f64>,
    estimator: Option<&str>,
    fallback: Option<f64>,
    estimator_direction: Option<&str>,
    seed: u64,
    replication: u64,
) -> PyResult<RunRecord> {
    let inst = &instance.inner;
    let cfg = policy_config(
        inst,
        policy,
        epsilon,
        mu_star,
        estimator,
        fallback,
        estimator_direction,
    )?;
    py.detach(|| {
        let mut stream = SampleStream::new(inst, seed, replication);
        core::run_policy(inst, &mut stream, &cfg, horizon, Recording::Full)
    })
    .map(|inner| RunRecord { inner })
    .map_err(value_err)
}

/// Seeded replications aggregated into the JSON written by `cmab run`.
#[pyfunction]
#[pyo3(signature = (
    instance, horizon, replications=100, policy="capt", epsilon=0.1, mu_star=None,
    estimator=None, fallback=None, estimator_direction=None, seed=0, checkpoints=None
))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    py: Python<'_>,
    instance: &Instance,
    horizon: u64,
    replications: u64,
    policy: &str,
    epsilon: f64,
    mu_star: Option<f64>,
    estimator: Option<&str>,
    fallback: Option<f64>,
    estimator_direction: Option<&str>,
    seed: u64,
    checkpoints: Option<Vec<u64>>,
) -> PyResult<String> {
    let inst = &instance.inner;
    let cfg = policy_config(
        inst,
        policy,
        epsilon,
        mu_star,
        estimator,
        fallback,
        estimator_direction,
    )?;
    let checkpoints =
        checkpoints.unwrap_or_else(|| core::log_checkpoints(inst.num_arms(), horizon));
    let agg = py
        .detach(|| core::run_experiment(inst, &cfg, horizon, replications, seed, &checkpoints))
        .map_err(value_err)?;
    Ok(core::cli::aggregate_json(&agg))
}

#[pymodule]
fn pycmab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Instance>()?;
    m.add_class::<RunRecord>()?;
    m.add_function(wrap_pyfunction!(complexity, m)?)?;
    m.add_function(wrap_pyfunction!(theorem1_bound, m)?)?;
    m.add_function(wrap_pyfunction!(horizon_for_bound, m)?)?;
    m.add_function(wrap_pyfunction!(capt_index, m)?)?;
    m.add_function(wrap_pyfunction!(classify_sets, m)?)?;
    m.add_function(wrap_pyfunction!(is_epsilon_optimal, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
