//! Ground-truth gaps, problem complexity H(ε), the finite-horizon success
//! bound, and ε-optimal set membership.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::ComplexityError;
use crate::instance::BanditInstance;

pub type ArmSet = BTreeSet<usize>;

/// True per-arm gaps at tolerance ε.
///
/// `delta[a] = |μ_a − μ*| + ε` measures how hard it is to tell whether `a`
/// competes with the optimum; `phi[a] = |C_a − C| + ε` how hard it is to
/// decide its feasibility.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub epsilon: f64,
    pub mu_star: f64,
    pub delta: Vec<f64>,
    pub phi: Vec<f64>,
}

impl GapReport {
    pub fn num_arms(&self) -> usize {
        self.delta.len()
    }

    /// `min(Δ_a, Φ_a)` per arm.
    pub fn hardness(&self) -> Vec<f64> {
        self.delta
            .iter()
            .zip(&self.phi)
            .map(|(d, p)| d.min(*p))
            .collect()
    }
}

pub fn compute_gaps(instance: &BanditInstance, epsilon: f64) -> Result<GapReport, ComplexityError> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(ComplexityError::InvalidTolerance(epsilon));
    }
    let mu_star = instance.optimal_value();
    let c = instance.constraint();
    let delta = instance
        .reward_means()
        .into_iter()
        .map(|mu| (mu - mu_star).abs() + epsilon)
        .collect();
    let phi = instance
        .cost_means()
        .into_iter()
        .map(|ca| (ca - c).abs() + epsilon)
        .collect();
    Ok(GapReport {
        epsilon,
        mu_star,
        delta,
        phi,
    })
}

/// `H(ε) = Σ_a min(Δ_a, Φ_a)^-2`.
pub fn compute_h(gaps: &GapReport) -> Result<f64, ComplexityError> {
    let mut h = 0.0;
    for (arm, m) in gaps.hardness().into_iter().enumerate() {
        if m <= 0.0 {
            return Err(ComplexityError::InfiniteComplexity { arm });
        }
        h += m.powi(-2);
    }
    if !h.is_finite() {
        return Err(ComplexityError::InfiniteComplexity { arm: 0 });
    }
    Ok(h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremBound {
    pub raw: f64,
    pub clamped: f64,
}

/// Lower bound on the probability that CAPT's output at horizon `horizon` is
/// ε-optimal: `1 − 2|A|·T·exp(−T / 16H)`. The raw value is negative (vacuous)
/// for short horizons; `clamped` is `max(0, raw)`.
pub fn theorem1_bound(num_arms: usize, horizon: u64, h: f64) -> TheoremBound {
    let t = horizon as f64;
    let raw = 1.0 - 2.0 * num_arms as f64 * t * (-t / (16.0 * h)).exp();
    TheoremBound {
        raw,
        clamped: raw.max(0.0),
    }
}

/// Smallest horizon `T ≥ 16H` with `theorem1_bound(..).raw ≥ target`.
///
/// The bound is increasing beyond `16H`, so this is the horizon a run needs
/// for the guarantee to reach `target`. `target` must be below 1.
pub fn horizon_for_bound(num_arms: usize, h: f64, target: f64) -> Option<u64> {
    if !(target < 1.0) || !(h > 0.0) || !h.is_finite() {
        return None;
    }
    let meets = |t: u64| theorem1_bound(num_arms, t, h).raw >= target;
    let mut lo = (16.0 * h).ceil().max(1.0) as u64;
    if meets(lo) {
        return Some(lo);
    }
    let mut hi = lo.checked_mul(2)?;
    while !meets(hi) {
        lo = hi;
        hi = hi.checked_mul(2)?;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if meets(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Gaps, H(ε) and the bound evaluated at one horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    pub gaps: GapReport,
    pub h_epsilon: f64,
    pub horizon: Option<u64>,
    pub bound: Option<TheoremBound>,
}

impl ComplexityReport {
    pub fn new(instance: &BanditInstance, epsilon: f64) -> Result<Self, ComplexityError> {
        let gaps = compute_gaps(instance, epsilon)?;
        let h_epsilon = compute_h(&gaps)?;
        Ok(Self {
            gaps,
            h_epsilon,
            horizon: None,
            bound: None,
        })
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self.bound = Some(self.bound_at(horizon));
        self
    }

    pub fn num_arms(&self) -> usize {
        self.gaps.num_arms()
    }

    pub fn bound_at(&self, horizon: u64) -> TheoremBound {
        theorem1_bound(self.num_arms(), horizon, self.h_epsilon)
    }
}

/// `(A_f^κ, A_*^κ)`: arms with `C_a ≤ C + κ`, and arms with `μ_a ≥ μ* + κ`.
pub fn classify_sets(instance: &BanditInstance, kappa: f64) -> (ArmSet, ArmSet) {
    let c = instance.constraint();
    let mu_star = instance.optimal_value();
    let feasible = instance
        .cost_means()
        .into_iter()
        .enumerate()
        .filter(|&(_, ca)| ca <= c + kappa)
        .map(|(a, _)| a)
        .collect();
    let competing = instance
        .reward_means()
        .into_iter()
        .enumerate()
        .filter(|&(_, mu)| mu >= mu_star + kappa)
        .map(|(a, _)| a)
        .collect();
    (feasible, competing)
}

/// The sandwich `A_*^ε ∩ A_f^-ε ⊆ S ⊆ A_*^-ε ∩ A_f^ε`.
pub fn epsilon_optimal_bounds(instance: &BanditInstance, epsilon: f64) -> (ArmSet, ArmSet) {
    let (f_lo, _) = classify_sets(instance, -epsilon);
    let (f_hi, _) = classify_sets(instance, epsilon);
    let (_, star_lo) = classify_sets(instance, epsilon);
    let (_, star_hi) = classify_sets(instance, -epsilon);
    let lower = star_lo.intersection(&f_lo).copied().collect();
    let upper = star_hi.intersection(&f_hi).copied().collect();
    (lower, upper)
}

pub fn is_epsilon_optimal(set: &ArmSet, instance: &BanditInstance, epsilon: f64) -> bool {
    let (lower, upper) = epsilon_optimal_bounds(instance, epsilon);
    lower.is_subset(set) && set.is_subset(&upper)
}
