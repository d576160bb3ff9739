//! Bandit instances: per-arm reward/cost distributions on [0,1], a cost
//! threshold, and seeded per-arm sample streams.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use serde::{Deserialize, Serialize};

use crate::error::InstanceError;

/// Bounded-support sampling distribution. Every variant lives on [0,1].
///
/// Serialized as `{"kind": "...", "params": {...}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Distribution {
    Bernoulli { p: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { lo: f64, hi: f64 },
    Constant { value: f64 },
}

impl Distribution {
    pub fn mean(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => p,
            Distribution::Beta { alpha, beta } => alpha / (alpha + beta),
            Distribution::Uniform { lo, hi } => 0.5 * (lo + hi),
            Distribution::Constant { value } => value,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => p * (1.0 - p),
            Distribution::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Distribution::Uniform { lo, hi } => (hi - lo) * (hi - lo) / 12.0,
            Distribution::Constant { .. } => 0.0,
        }
    }

    pub fn is_degenerate(&self) -> bool {
        self.variance() == 0.0
    }

    /// Checks parameters, returning the name and value of the first bad one.
    pub fn check(&self) -> Result<(), (&'static str, f64)> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        match *self {
            Distribution::Bernoulli { p } if !unit(p) => Err(("p", p)),
            Distribution::Beta { alpha, .. } if !(alpha.is_finite() && alpha > 0.0) => {
                Err(("alpha", alpha))
            }
            Distribution::Beta { beta, .. } if !(beta.is_finite() && beta > 0.0) => {
                Err(("beta", beta))
            }
            Distribution::Uniform { lo, .. } if !unit(lo) => Err(("lo", lo)),
            Distribution::Uniform { lo, hi } if !unit(hi) || hi < lo => Err(("hi", hi)),
            Distribution::Constant { value } if !unit(value) => Err(("value", value)),
            _ => Ok(()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Bernoulli { p } => {
                if rng.random::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
            Distribution::Beta { alpha, beta } => {
                // parameters are validated before any stream is built
                let d = rand_distr::Beta::new(alpha, beta).expect("validated beta parameters");
                d.sample(rng).clamp(0.0, 1.0)
            }
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * rng.random::<f64>(),
            Distribution::Constant { value } => value,
        }
    }
}

/// Which of an arm's two distributions a value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Reward,
    Cost,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Reward => f.write_str("reward"),
            Channel::Cost => f.write_str("cost"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmSpec {
    pub reward: Distribution,
    pub cost: Distribution,
}

impl ArmSpec {
    pub fn new(reward: Distribution, cost: Distribution) -> Self {
        Self { reward, cost }
    }

    pub fn bernoulli(reward_p: f64, cost_p: f64) -> Self {
        Self::new(
            Distribution::Bernoulli { p: reward_p },
            Distribution::Bernoulli { p: cost_p },
        )
    }

    pub fn constant(reward: f64, cost: f64) -> Self {
        Self::new(
            Distribution::Constant { value: reward },
            Distribution::Constant { value: cost },
        )
    }
}

/// Unvalidated instance description, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub arms: Vec<ArmSpec>,
    pub constraint: f64,
}

/// A validated constrained bandit: at least two arms, all distributions on
/// [0,1], and at least one arm whose mean cost is within the threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceSpec", into = "InstanceSpec")]
pub struct BanditInstance {
    arms: Vec<ArmSpec>,
    constraint: f64,
}

impl BanditInstance {
    pub fn new(arms: Vec<ArmSpec>, constraint: f64) -> Result<Self, InstanceError> {
        let instance = Self { arms, constraint };
        validate_instance(&instance)?;
        Ok(instance)
    }

    pub fn arms(&self) -> &[ArmSpec] {
        &self.arms
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    pub fn constraint(&self) -> f64 {
        self.constraint
    }

    pub fn reward_means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.reward.mean()).collect()
    }

    pub fn cost_means(&self) -> Vec<f64> {
        self.arms.iter().map(|a| a.cost.mean()).collect()
    }

    /// Arms whose true mean cost is at most the threshold.
    pub fn feasible_arms(&self) -> Vec<usize> {
        let c = self.constraint;
        (0..self.arms.len())
            .filter(|&a| self.arms[a].cost.mean() <= c)
            .collect()
    }

    /// Best true mean reward over the feasible arms.
    pub fn optimal_value(&self) -> f64 {
        self.feasible_arms()
            .into_iter()
            .map(|a| self.arms[a].reward.mean())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Feasible arms attaining the optimal value.
    pub fn optimal_feasible_arms(&self) -> Vec<usize> {
        let best = self.optimal_value();
        self.feasible_arms()
            .into_iter()
            .filter(|&a| self.arms[a].reward.mean() == best)
            .collect()
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let spec: InstanceSpec =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        Self::try_from(spec)
    }
}

impl TryFrom<InstanceSpec> for BanditInstance {
    type Error = InstanceError;

    fn try_from(spec: InstanceSpec) -> Result<Self, Self::Error> {
        Self::new(spec.arms, spec.constraint)
    }
}

impl From<BanditInstance> for InstanceSpec {
    fn from(instance: BanditInstance) -> Self {
        Self {
            arms: instance.arms,
            constraint: instance.constraint,
        }
    }
}

pub fn validate_instance(instance: &BanditInstance) -> Result<(), InstanceError> {
    if instance.arms.len() < 2 {
        return Err(InstanceError::TooFewArms {
            found: instance.arms.len(),
        });
    }
    if !instance.constraint.is_finite() {
        return Err(InstanceError::InvalidConstraint(instance.constraint));
    }
    for (arm, spec) in instance.arms.iter().enumerate() {
        for (channel, dist) in [(Channel::Reward, &spec.reward), (Channel::Cost, &spec.cost)] {
            if let Err((param, value)) = dist.check() {
                return Err(InstanceError::SupportViolation {
                    arm,
                    channel,
                    param,
                    value,
                });
            }
        }
    }
    let min_cost = instance
        .arms
        .iter()
        .map(|a| a.cost.mean())
        .fold(f64::INFINITY, f64::min);
    if !(min_cost <= instance.constraint) {
        return Err(InstanceError::EmptyFeasibleSet {
            constraint: instance.constraint,
            min_cost,
        });
    }
    Ok(())
}

/// Closed-form (reward mean, cost mean) per arm.
pub fn true_means(instance: &BanditInstance) -> (Vec<f64>, Vec<f64>) {
    (instance.reward_means(), instance.cost_means())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn substream(seed: u64, replication: u64, arm: usize, channel: Channel) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(replication)));
    let tag = match channel {
        Channel::Reward => 0u64,
        Channel::Cost => 1u64,
    };
    rng.set_stream(((arm as u64) << 1) | tag);
    rng
}

/// Reproducible sample source for one replication.
///
/// Each arm owns two independent ChaCha substreams (reward and cost) keyed by
/// `(seed, replication, arm, channel)`, so which arms a policy pulls never
/// changes the values any other arm will produce.
#[derive(Debug, Clone)]
pub struct SampleStream {
    seed: u64,
    replication: u64,
    arms: Vec<ArmSpec>,
    reward_rngs: Vec<ChaCha8Rng>,
    cost_rngs: Vec<ChaCha8Rng>,
    draws: Vec<u64>,
}

impl SampleStream {
    pub fn new(instance: &BanditInstance, seed: u64, replication: u64) -> Self {
        let n = instance.num_arms();
        Self {
            seed,
            replication,
            arms: instance.arms.clone(),
            reward_rngs: (0..n)
                .map(|a| substream(seed, replication, a, Channel::Reward))
                .collect(),
            cost_rngs: (0..n)
                .map(|a| substream(seed, replication, a, Channel::Cost))
                .collect(),
            draws: vec![0; n],
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replication(&self) -> u64 {
        self.replication
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Uniform draw from `0..n` on a substream reserved for policy
    /// randomisation, independent of every arm's samples.
    pub fn policy_offset(&self, n: usize) -> usize {
        let mut rng =
            ChaCha8Rng::seed_from_u64(splitmix64(self.seed ^ splitmix64(self.replication)));
        rng.set_stream(u64::MAX);
        rng.random_range(0..n)
    }

    /// Number of samples drawn so far from `arm`.
    pub fn draws(&self, arm: usize) -> u64 {
        self.draws[arm]
    }

    /// Next (reward, cost) pair for `arm`. Panics if `arm` is out of range.
    pub fn draw(&mut self, arm: usize) -> (f64, f64) {
        let spec = self.arms[arm];
        let x = spec.reward.sample(&mut self.reward_rngs[arm]);
        let y = spec.cost.sample(&mut self.cost_rngs[arm]);
        self.draws[arm] += 1;
        (x, y)
    }
}
