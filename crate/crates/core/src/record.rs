use serde::{Deserialize, Serialize};

use crate::complexity::ArmSet;
use crate::policy::FeasibilityDirection;
use crate::stats::StatisticsTable;

/// Arms played over a run, either every step or only at chosen times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionTrace {
    /// `None` when `actions[t - 1]` is the arm played at time `t` for every t.
    pub checkpoints: Option<Vec<u64>>,
    pub actions: Vec<usize>,
}

impl ActionTrace {
    pub fn is_full(&self) -> bool {
        self.checkpoints.is_none()
    }

    /// Arm played at time `t` (1-based), if it was recorded.
    pub fn action_at(&self, t: u64) -> Option<usize> {
        match &self.checkpoints {
            None => t
                .checked_sub(1)
                .and_then(|i| self.actions.get(i as usize).copied()),
            Some(cps) => cps.binary_search(&t).ok().map(|i| self.actions[i]),
        }
    }
}

/// Output of the final step: empirically feasible arms, empirically
/// competing arms, and their intersection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSets {
    pub feasible: ArmSet,
    pub competing: ArmSet,
    pub selected: ArmSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunFlags {
    /// `horizon >= 2|A|`, the regime where the finite-horizon bound applies.
    pub bound_valid: bool,
    pub estimator_direction: Option<FeasibilityDirection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub policy: String,
    pub replication: u64,
    pub horizon: u64,
    pub trace: ActionTrace,
    pub final_stats: StatisticsTable,
    pub output: OutputSets,
    /// Optimal-value reference used by the output step.
    pub mu_star_used: f64,
    /// `(t, μ*(t))` for the estimating policy, empty otherwise.
    pub mu_star_trace: Vec<(u64, f64)>,
    pub flags: RunFlags,
}

impl RunRecord {
    pub fn num_arms(&self) -> usize {
        self.final_stats.num_arms()
    }

    pub fn pull_counts(&self) -> Vec<u64> {
        self.final_stats.pull_counts()
    }
}
