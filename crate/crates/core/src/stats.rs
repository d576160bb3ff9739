//! Per-arm empirical state: pull counts and running reward/cost sums.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ArmStatistics {
    pub pulls: u64,
    pub reward_sum: f64,
    pub cost_sum: f64,
}

impl ArmStatistics {
    /// Sample mean reward, 0 for an unpulled arm.
    pub fn mean_reward(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.reward_sum / self.pulls as f64
        }
    }

    /// Sample mean cost, 0 for an unpulled arm.
    pub fn mean_cost(&self) -> f64 {
        if self.pulls == 0 {
            0.0
        } else {
            self.cost_sum / self.pulls as f64
        }
    }

    fn record(&mut self, x: f64, y: f64) {
        self.pulls += 1;
        self.reward_sum += x;
        self.cost_sum += y;
    }
}

/// Statistics for every arm plus the total number of plays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticsTable {
    arms: Vec<ArmStatistics>,
    total: u64,
}

impl StatisticsTable {
    pub fn new(num_arms: usize) -> Self {
        Self {
            arms: vec![ArmStatistics::default(); num_arms],
            total: 0,
        }
    }

    /// Rebuilds a table from raw per-arm entries; the total is their pull sum.
    pub fn from_arms(arms: Vec<ArmStatistics>) -> Self {
        let total = arms.iter().map(|a| a.pulls).sum();
        Self { arms, total }
    }

    pub fn num_arms(&self) -> usize {
        self.arms.len()
    }

    /// Total plays so far.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn arm(&self, arm: usize) -> &ArmStatistics {
        &self.arms[arm]
    }

    pub fn arms(&self) -> &[ArmStatistics] {
        &self.arms
    }

    pub fn pulls(&self, arm: usize) -> u64 {
        self.arms[arm].pulls
    }

    pub fn pull_counts(&self) -> Vec<u64> {
        self.arms.iter().map(|a| a.pulls).collect()
    }

    pub fn all_pulled(&self) -> bool {
        self.arms.iter().all(|a| a.pulls > 0)
    }

    pub fn update(&mut self, arm: usize, x: f64, y: f64) {
        self.arms[arm].record(x, y);
        self.total += 1;
    }

    /// `(mean reward, mean cost, pulls)`; `(0, 0, 0)` for an unpulled arm.
    pub fn sample_means(&self, arm: usize) -> (f64, f64, u64) {
        let s = &self.arms[arm];
        (s.mean_reward(), s.mean_cost(), s.pulls)
    }
}
