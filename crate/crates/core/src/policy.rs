//! CAPT, CAPT-E and round-robin allocation as step-wise decision rules over
//! a [`StatisticsTable`].
//!
//! Every arm's index is `min(|X̄ − μ*| + ε, |Ȳ − C| + ε) · √pulls`; the arm with
//! the smallest index is played next. CAPT is given the optimal value μ*,
//! CAPT-E replaces it by an estimate recomputed at every step.

use serde::{Deserialize, Serialize};

use crate::complexity::ArmSet;
use crate::error::PolicyError;
use crate::instance::{BanditInstance, SampleStream};
use crate::record::{ActionTrace, OutputSets, RunFlags, RunRecord};
use crate::stats::StatisticsTable;

/// Which empirical cost comparison selects the arms an estimator averages over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeasibilityDirection {
    /// `Ȳ ≤ C`, the empirical feasibility test.
    #[default]
    Le,
    /// `Ȳ ≥ C`, the comparison as literally printed in the estimator formulas.
    Ge,
}

impl FeasibilityDirection {
    pub fn admits(self, mean_cost: f64, constraint: f64) -> bool {
        match self {
            FeasibilityDirection::Le => mean_cost <= constraint,
            FeasibilityDirection::Ge => mean_cost >= constraint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    /// Always returns the supplied value.
    Oracle { mu_star: f64 },
    /// Largest sample mean reward over the selected arms.
    FeasibleMax,
    /// Pull-share weighted sum of sample mean rewards over the selected arms.
    Occupancy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    /// Returned when no arm passes the cost comparison.
    pub fallback: f64,
    pub direction: FeasibilityDirection,
}

impl EstimatorConfig {
    pub const DEFAULT_FALLBACK: f64 = 1.0;

    pub fn new(kind: EstimatorKind) -> Self {
        Self {
            kind,
            fallback: Self::DEFAULT_FALLBACK,
            direction: FeasibilityDirection::Le,
        }
    }

    pub fn with_fallback(mut self, fallback: f64) -> Self {
        self.fallback = fallback;
        self
    }

    pub fn with_direction(mut self, direction: FeasibilityDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn estimate(&self, table: &StatisticsTable, constraint: f64) -> f64 {
        match self.kind {
            EstimatorKind::Oracle { mu_star } => mu_star,
            EstimatorKind::FeasibleMax => {
                estimate_mu_star_feasible_max(table, constraint, self.fallback, self.direction)
            }
            EstimatorKind::Occupancy => {
                estimate_mu_star_occupancy(table, constraint, self.fallback, self.direction)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Capt { mu_star: f64 },
    CaptE(EstimatorConfig),
    Uniform,
}

/// Serialized as the flat `{policy, epsilon, mu_star?, estimator?, fallback?,
/// estimator_direction?}` object used in experiment configs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolicySpec", into = "PolicySpec")]
pub struct PolicyConfig {
    pub epsilon: f64,
    pub kind: PolicyKind,
}

impl PolicyConfig {
    pub fn capt(epsilon: f64, mu_star: f64) -> Self {
        Self {
            epsilon,
            kind: PolicyKind::Capt { mu_star },
        }
    }

    pub fn capt_e(epsilon: f64, estimator: EstimatorConfig) -> Self {
        Self {
            epsilon,
            kind: PolicyKind::CaptE(estimator),
        }
    }

    pub fn uniform(epsilon: f64) -> Self {
        Self {
            epsilon,
            kind: PolicyKind::Uniform,
        }
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            PolicyKind::Capt { .. } => "capt",
            PolicyKind::CaptE(_) => "capt_e",
            PolicyKind::Uniform => "uniform",
        }
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(PolicyError::InvalidConfig(format!(
                "epsilon must be finite and >= 0, got {}",
                self.epsilon
            )));
        }
        match self.kind {
            PolicyKind::Capt { mu_star } if !unit(mu_star) => Err(PolicyError::InvalidConfig(
                format!("mu_star must lie in [0,1], got {mu_star}"),
            )),
            PolicyKind::CaptE(est) => {
                if !unit(est.fallback) {
                    return Err(PolicyError::InvalidConfig(format!(
                        "fallback must lie in [0,1], got {}",
                        est.fallback
                    )));
                }
                match est.kind {
                    EstimatorKind::Oracle { mu_star } if !unit(mu_star) => {
                        Err(PolicyError::InvalidConfig(format!(
                            "oracle mu_star must lie in [0,1], got {mu_star}"
                        )))
                    }
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Flat policy description as it appears in config and result files.
///
/// Optional fields may be left out; [`PolicySpec::resolve`] fills the optimal
/// value from the instance where a policy needs one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub policy: String,
    #[serde(default = "PolicySpec::default_epsilon")]
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu_star: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator_direction: Option<FeasibilityDirection>,
}

impl PolicySpec {
    pub const DEFAULT_EPSILON: f64 = 0.1;

    fn default_epsilon() -> f64 {
        Self::DEFAULT_EPSILON
    }

    /// Builds a config, taking any missing optimal value from `default_mu_star`.
    pub fn resolve(&self, default_mu_star: Option<f64>) -> Result<PolicyConfig, PolicyError> {
        let need_mu = |field: &str| {
            self.mu_star.or(default_mu_star).ok_or_else(|| {
                PolicyError::InvalidConfig(format!("`mu_star` is required for {field}"))
            })
        };
        let kind = match self.policy.as_str() {
            "capt" => PolicyKind::Capt {
                mu_star: need_mu("policy `capt`")?,
            },
            "capt_e" => {
                let kind = match self.estimator.as_deref().unwrap_or("feasible_max") {
                    "oracle" => EstimatorKind::Oracle {
                        mu_star: need_mu("estimator `oracle`")?,
                    },
                    "feasible_max" => EstimatorKind::FeasibleMax,
                    "occupancy" => EstimatorKind::Occupancy,
                    other => return Err(PolicyError::InvalidConfig(format!(
                        "unknown estimator `{other}` (expected oracle, feasible_max or occupancy)"
                    ))),
                };
                PolicyKind::CaptE(EstimatorConfig {
                    kind,
                    fallback: self.fallback.unwrap_or(EstimatorConfig::DEFAULT_FALLBACK),
                    direction: self.estimator_direction.unwrap_or_default(),
                })
            }
            "uniform" => PolicyKind::Uniform,
            other => {
                return Err(PolicyError::InvalidConfig(format!(
                    "unknown policy `{other}` (expected capt, capt_e or uniform)"
                )))
            }
        };
        let config = PolicyConfig {
            epsilon: self.epsilon,
            kind,
        };
        config.validate()?;
        Ok(config)
    }
}

impl TryFrom<PolicySpec> for PolicyConfig {
    type Error = PolicyError;

    fn try_from(spec: PolicySpec) -> Result<Self, Self::Error> {
        spec.resolve(None)
    }
}

impl From<PolicyConfig> for PolicySpec {
    fn from(config: PolicyConfig) -> Self {
        let mut spec = PolicySpec {
            policy: config.name().to_string(),
            epsilon: config.epsilon,
            mu_star: None,
            estimator: None,
            fallback: None,
            estimator_direction: None,
        };
        match config.kind {
            PolicyKind::Capt { mu_star } => spec.mu_star = Some(mu_star),
            PolicyKind::CaptE(est) => {
                let name = match est.kind {
                    EstimatorKind::Oracle { mu_star } => {
                        spec.mu_star = Some(mu_star);
                        "oracle"
                    }
                    EstimatorKind::FeasibleMax => "feasible_max",
                    EstimatorKind::Occupancy => "occupancy",
                };
                spec.estimator = Some(name.to_string());
                spec.fallback = Some(est.fallback);
                spec.estimator_direction = Some(est.direction);
            }
            PolicyKind::Uniform => {}
        }
        spec
    }
}

/// `min(|X̄ − μ*| + ε, |Ȳ − C| + ε) · √pulls`.
pub fn capt_index(
    mean_reward: f64,
    mean_cost: f64,
    pulls: u64,
    mu_star: f64,
    constraint: f64,
    epsilon: f64,
) -> f64 {
    let delta = (mean_reward - mu_star).abs() + epsilon;
    let phi = (mean_cost - constraint).abs() + epsilon;
    delta.min(phi) * (pulls as f64).sqrt()
}

/// One arm's index together with the terms it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub delta_hat: f64,
    pub phi_hat: f64,
    pub pulls: u64,
    pub index: f64,
}

pub fn index_vector(
    table: &StatisticsTable,
    mu_star: f64,
    constraint: f64,
    epsilon: f64,
) -> Vec<IndexEntry> {
    (0..table.num_arms())
        .map(|a| {
            let (x, y, pulls) = table.sample_means(a);
            let delta_hat = (x - mu_star).abs() + epsilon;
            let phi_hat = (y - constraint).abs() + epsilon;
            IndexEntry {
                delta_hat,
                phi_hat,
                pulls,
                index: capt_index(x, y, pulls, mu_star, constraint, epsilon),
            }
        })
        .collect()
}

/// Position of the smallest value; ties go to the lowest position.
pub fn argmin_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v < values[best] {
            best = i;
        }
    }
    best
}

/// Arm with the smallest index (lowest id on ties). Unpulled arms have index
/// 0, so they are chosen first, in id order.
pub fn capt_select(table: &StatisticsTable, mu_star: f64, constraint: f64, epsilon: f64) -> usize {
    let mut best = 0;
    let mut best_index = f64::INFINITY;
    for a in 0..table.num_arms() {
        let (x, y, pulls) = table.sample_means(a);
        let k = capt_index(x, y, pulls, mu_star, constraint, epsilon);
        if k < best_index {
            best = a;
            best_index = k;
        }
    }
    best
}

/// Output step: `{a : Ȳ ≤ C}`, `{a : X̄ ≥ μ*}` and their intersection.
pub fn capt_output(table: &StatisticsTable, mu_star: f64, constraint: f64) -> OutputSets {
    let mut feasible = ArmSet::new();
    let mut competing = ArmSet::new();
    for a in 0..table.num_arms() {
        let (x, y, _) = table.sample_means(a);
        if y <= constraint {
            feasible.insert(a);
        }
        if x >= mu_star {
            competing.insert(a);
        }
    }
    let selected = feasible.intersection(&competing).copied().collect();
    OutputSets {
        feasible,
        competing,
        selected,
    }
}

pub fn estimate_mu_star_feasible_max(
    table: &StatisticsTable,
    constraint: f64,
    fallback: f64,
    direction: FeasibilityDirection,
) -> f64 {
    (0..table.num_arms())
        .map(|a| table.sample_means(a))
        .filter(|&(_, y, _)| direction.admits(y, constraint))
        .map(|(x, _, _)| x)
        .reduce(f64::max)
        .unwrap_or(fallback)
}

pub fn estimate_mu_star_occupancy(
    table: &StatisticsTable,
    constraint: f64,
    fallback: f64,
    direction: FeasibilityDirection,
) -> f64 {
    let total = table.total();
    if total == 0 {
        return fallback;
    }
    let mut any = false;
    let mut acc = 0.0;
    for a in 0..table.num_arms() {
        let (x, y, pulls) = table.sample_means(a);
        if direction.admits(y, constraint) {
            any = true;
            acc += x * (pulls as f64 / total as f64);
        }
    }
    if any {
        acc
    } else {
        fallback
    }
}

/// How much of the action sequence a run keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Recording {
    Full,
    /// Sorted, distinct times in `1..=horizon`.
    Checkpoints(Vec<u64>),
}

struct Recorder {
    checkpoints: Option<Vec<u64>>,
    next: usize,
    actions: Vec<usize>,
}

impl Recorder {
    fn new(recording: Recording, horizon: u64) -> Result<Self, PolicyError> {
        match recording {
            Recording::Full => Ok(Self {
                checkpoints: None,
                next: 0,
                actions: Vec::with_capacity(horizon as usize),
            }),
            Recording::Checkpoints(cps) => {
                if cps.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(PolicyError::InvalidConfig(
                        "checkpoints must be strictly increasing".into(),
                    ));
                }
                if cps.first().is_some_and(|&t| t == 0) || cps.last().is_some_and(|&t| t > horizon)
                {
                    return Err(PolicyError::InvalidConfig(format!(
                        "checkpoints must lie in 1..={horizon}"
                    )));
                }
                Ok(Self {
                    actions: Vec::with_capacity(cps.len()),
                    checkpoints: Some(cps),
                    next: 0,
                })
            }
        }
    }

    fn wants(&self, t: u64) -> bool {
        match &self.checkpoints {
            None => true,
            Some(cps) => cps.get(self.next) == Some(&t),
        }
    }

    fn push(&mut self, t: u64, arm: usize) {
        if self.wants(t) {
            self.actions.push(arm);
            if self.checkpoints.is_some() {
                self.next += 1;
            }
        }
    }

    fn finish(self) -> ActionTrace {
        ActionTrace {
            checkpoints: self.checkpoints,
            actions: self.actions,
        }
    }
}

/// Runs `config` for `horizon` plays on `stream`.
///
/// Times are 1-based. The first `|A|` plays visit each arm once in id order;
/// every later decision at time `t` sees the statistics of plays `1..t`.
pub fn run_policy(
    instance: &BanditInstance,
    stream: &mut SampleStream,
    config: &PolicyConfig,
    horizon: u64,
    recording: Recording,
) -> Result<RunRecord, PolicyError> {
    let n = instance.num_arms();
    if horizon < n as u64 {
        return Err(PolicyError::HorizonTooShort { horizon, arms: n });
    }
    if stream.num_arms() != n {
        return Err(PolicyError::InvalidConfig(format!(
            "sample stream has {} arms, instance has {n}",
            stream.num_arms()
        )));
    }
    config.validate()?;

    let c = instance.constraint();
    let eps = config.epsilon;
    let mut table = StatisticsTable::new(n);
    let mut recorder = Recorder::new(recording, horizon)?;
    let mut mu_star_trace = Vec::new();
    // round-robin phase for the uniform baseline, fixed per replication
    let offset = stream.policy_offset(n) as u64;

    let mut play = |table: &mut StatisticsTable, recorder: &mut Recorder, t: u64, arm: usize| {
        let (x, y) = stream.draw(arm);
        table.update(arm, x, y);
        recorder.push(t, arm);
    };

    for arm in 0..n {
        play(&mut table, &mut recorder, arm as u64 + 1, arm);
    }
    for t in (n as u64 + 1)..=horizon {
        let arm = match config.kind {
            PolicyKind::Uniform => ((t - 1 + offset) % n as u64) as usize,
            PolicyKind::Capt { mu_star } => capt_select(&table, mu_star, c, eps),
            PolicyKind::CaptE(est) => {
                let mu_t = est.estimate(&table, c);
                if recorder.wants(t) {
                    mu_star_trace.push((t, mu_t));
                }
                capt_select(&table, mu_t, c, eps)
            }
        };
        play(&mut table, &mut recorder, t, arm);
    }

    let (mu_star_used, estimator_direction) = match config.kind {
        PolicyKind::Capt { mu_star } => (mu_star, None),
        PolicyKind::CaptE(est) => (est.estimate(&table, c), Some(est.direction)),
        PolicyKind::Uniform => (instance.optimal_value(), None),
    };
    let output = capt_output(&table, mu_star_used, c);

    Ok(RunRecord {
        policy: config.name().to_string(),
        replication: stream.replication(),
        horizon,
        trace: recorder.finish(),
        final_stats: table,
        output,
        mu_star_used,
        mu_star_trace,
        flags: RunFlags {
            bound_valid: horizon >= 2 * n as u64,
            estimator_direction,
        },
    })
}

pub fn capt_run(
    instance: &BanditInstance,
    stream: &mut SampleStream,
    epsilon: f64,
    mu_star: f64,
    horizon: u64,
) -> Result<RunRecord, PolicyError> {
    run_policy(
        instance,
        stream,
        &PolicyConfig::capt(epsilon, mu_star),
        horizon,
        Recording::Full,
    )
}

pub fn capt_e_run(
    instance: &BanditInstance,
    stream: &mut SampleStream,
    epsilon: f64,
    estimator: EstimatorConfig,
    horizon: u64,
) -> Result<RunRecord, PolicyError> {
    run_policy(
        instance,
        stream,
        &PolicyConfig::capt_e(epsilon, estimator),
        horizon,
        Recording::Full,
    )
}

pub fn uniform_run(
    instance: &BanditInstance,
    stream: &mut SampleStream,
    horizon: u64,
) -> Result<RunRecord, PolicyError> {
    run_policy(
        instance,
        stream,
        &PolicyConfig::uniform(0.0),
        horizon,
        Recording::Full,
    )
}
