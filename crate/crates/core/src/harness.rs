//! Replicated Monte-Carlo experiments and their aggregates.
//!
//! Replications run on the rayon pool, each with its own [`SampleStream`]
//! keyed by replication id. Results are collected and folded in replication
//! order, so aggregates do not depend on thread count or scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complexity::{is_epsilon_optimal, ComplexityReport, TheoremBound};
use crate::error::HarnessError;
use crate::instance::{BanditInstance, SampleStream};
use crate::policy::{run_policy, PolicyConfig, Recording};
use crate::record::RunRecord;

/// Selection frequency of the optimal feasible arms at one time step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub t: u64,
    pub p_optimal_selection: f64,
    pub p_instantaneous_regret: f64,
    pub stderr: f64,
}

/// Spread of the final optimal-value estimates around the true value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSummary {
    pub mean: f64,
    pub mean_abs_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub instance: BanditInstance,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub bound_valid: bool,
    pub success_count: u64,
    pub success_rate: f64,
    pub success_stderr: f64,
    pub mean_pulls: Vec<f64>,
    pub selection_curve: Vec<CurvePoint>,
    /// Present when ε > 0 (H(ε) finite).
    pub complexity: Option<ComplexityReport>,
    /// Replications whose pull counts pass [`pigeonhole_audit`].
    pub pigeonhole_passed: Option<u64>,
    pub mu_star_estimate: Option<EstimateSummary>,
}

impl AggregateResult {
    pub fn bound(&self) -> Option<TheoremBound> {
        self.complexity.as_ref().and_then(|c| c.bound)
    }

    pub fn audits_pass(&self) -> bool {
        self.pigeonhole_passed
            .is_none_or(|n| n == self.replications)
    }
}

fn stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

/// Sorts and deduplicates `checkpoints`, rejecting times outside `1..=horizon`.
pub fn normalize_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<Vec<u64>, HarnessError> {
    let mut cps = checkpoints.to_vec();
    cps.sort_unstable();
    cps.dedup();
    if let Some(&bad) = cps.iter().find(|&&t| t == 0 || t > horizon) {
        return Err(HarnessError::MismatchedRecords(format!(
            "checkpoint {bad} lies outside 1..={horizon}"
        )));
    }
    Ok(cps)
}

/// Geometric grid `{1, 2, 5} × 10^k` up to the horizon, plus `|A|`, `|A|+1`,
/// `2|A|` and the horizon itself.
pub fn log_checkpoints(num_arms: usize, horizon: u64) -> Vec<u64> {
    let n = num_arms as u64;
    let mut cps = vec![n, n + 1, 2 * n, horizon];
    let mut decade = 1u64;
    'outer: loop {
        for m in [1, 2, 5] {
            match decade.checked_mul(m) {
                Some(t) if t <= horizon => cps.push(t),
                _ => break 'outer,
            }
        }
        decade = match decade.checked_mul(10) {
            Some(d) => d,
            None => break,
        };
    }
    cps.retain(|&t| t >= 1 && t <= horizon);
    cps.sort_unstable();
    cps.dedup();
    cps
}

/// Runs `replications` independent copies of `config`, recording actions at
/// `checkpoints` only.
pub fn run_replications(
    instance: &BanditInstance,
    config: &PolicyConfig,
    horizon: u64,
    replications: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<Vec<RunRecord>, HarnessError> {
    if replications == 0 {
        return Err(HarnessError::NoReplications);
    }
    let cps = normalize_checkpoints(checkpoints, horizon)?;
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut stream = SampleStream::new(instance, seed, r);
            run_policy(
                instance,
                &mut stream,
                config,
                horizon,
                Recording::Checkpoints(cps.clone()),
            )
            .map_err(HarnessError::from)
        })
        .collect()
}

pub fn run_experiment(
    instance: &BanditInstance,
    config: &PolicyConfig,
    horizon: u64,
    replications: u64,
    seed: u64,
    checkpoints: &[u64],
) -> Result<AggregateResult, HarnessError> {
    let records = run_replications(instance, config, horizon, replications, seed, checkpoints)?;
    aggregate(instance, config, seed, &records)
}

/// Folds records (in the given order) into an [`AggregateResult`].
pub fn aggregate(
    instance: &BanditInstance,
    config: &PolicyConfig,
    seed: u64,
    records: &[RunRecord],
) -> Result<AggregateResult, HarnessError> {
    let first = records.first().ok_or(HarnessError::NoReplications)?;
    let horizon = first.horizon;
    let checkpoints = first
        .trace
        .checkpoints
        .clone()
        .unwrap_or_else(|| (1..=horizon).collect());
    let r = records.len() as u64;
    let n = instance.num_arms();

    let curve = selection_curve(records, instance, &checkpoints)?;

    let success_count = records
        .iter()
        .filter(|rec| is_epsilon_optimal(&rec.output.selected, instance, config.epsilon))
        .count() as u64;
    let success_rate = success_count as f64 / r as f64;

    let mut mean_pulls = vec![0.0; n];
    for rec in records {
        if rec.num_arms() != n {
            return Err(HarnessError::MismatchedRecords(format!(
                "replication {} has {} arms, instance has {n}",
                rec.replication,
                rec.num_arms()
            )));
        }
        for (m, p) in mean_pulls.iter_mut().zip(rec.pull_counts()) {
            *m += p as f64;
        }
    }
    for m in &mut mean_pulls {
        *m /= r as f64;
    }

    let complexity = ComplexityReport::new(instance, config.epsilon)
        .ok()
        .map(|c| c.with_horizon(horizon));
    let pigeonhole_passed = match &complexity {
        Some(c) => {
            let mut passed = 0;
            for rec in records {
                if pigeonhole_audit(rec, c)? {
                    passed += 1;
                }
            }
            Some(passed)
        }
        None => None,
    };

    let mu_star_estimate = if config.name() == "capt_e" {
        let truth = instance.optimal_value();
        let mut sum = 0.0;
        let mut abs_sum = 0.0;
        let mut max_abs = 0.0f64;
        for rec in records {
            let err = (rec.mu_star_used - truth).abs();
            sum += rec.mu_star_used;
            abs_sum += err;
            max_abs = max_abs.max(err);
        }
        Some(EstimateSummary {
            mean: sum / r as f64,
            mean_abs_error: abs_sum / r as f64,
            max_abs_error: max_abs,
        })
    } else {
        None
    };

    Ok(AggregateResult {
        instance: instance.clone(),
        policy: *config,
        horizon,
        replications: r,
        seed,
        checkpoints,
        bound_valid: horizon >= 2 * n as u64,
        success_count,
        success_rate,
        success_stderr: stderr(success_rate, r),
        mean_pulls,
        selection_curve: curve,
        complexity,
        pigeonhole_passed,
        mu_star_estimate,
    })
}

/// Fraction of records playing an optimal feasible arm at each checkpoint.
pub fn selection_curve(
    records: &[RunRecord],
    instance: &BanditInstance,
    checkpoints: &[u64],
) -> Result<Vec<CurvePoint>, HarnessError> {
    let first = records.first().ok_or(HarnessError::NoReplications)?;
    if let Some(rec) = records.iter().find(|rec| rec.horizon != first.horizon) {
        return Err(HarnessError::MismatchedRecords(format!(
            "replication {} has horizon {}, expected {}",
            rec.replication, rec.horizon, first.horizon
        )));
    }
    let optimal = instance.optimal_feasible_arms();
    let r = records.len() as u64;
    checkpoints
        .iter()
        .map(|&t| {
            let mut hits = 0u64;
            for rec in records {
                let arm = rec.trace.action_at(t).ok_or_else(|| {
                    HarnessError::MismatchedRecords(format!(
                        "replication {} did not record time {t}",
                        rec.replication
                    ))
                })?;
                if optimal.contains(&arm) {
                    hits += 1;
                }
            }
            let p = hits as f64 / r as f64;
            Ok(CurvePoint {
                t,
                p_optimal_selection: p,
                p_instantaneous_regret: (r - hits) as f64 / r as f64,
                stderr: stderr(p, r),
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub horizon: u64,
    pub empirical: f64,
    pub stderr: f64,
    pub raw_bound: f64,
    pub clamped_bound: f64,
    /// `empirical + 3·stderr ≥ clamped_bound`.
    pub satisfied: bool,
}

pub fn bound_comparison(aggregates: &[AggregateResult]) -> Result<Vec<BoundRow>, HarnessError> {
    aggregates
        .iter()
        .map(|agg| {
            let bound = agg.bound().ok_or_else(|| {
                HarnessError::BoundUnavailable(format!("epsilon = {}", agg.policy.epsilon))
            })?;
            if !agg.bound_valid {
                return Err(HarnessError::BoundUnavailable(format!(
                    "horizon = {}",
                    agg.horizon
                )));
            }
            Ok(BoundRow {
                horizon: agg.horizon,
                empirical: agg.success_rate,
                stderr: agg.success_stderr,
                raw_bound: bound.raw,
                clamped_bound: bound.clamped,
                satisfied: agg.success_rate + 3.0 * agg.success_stderr >= bound.clamped,
            })
        })
        .collect()
}

/// Checks that some arm has `T_a(T) − 1 ≥ (T − |A|) / (H(ε)·min(Δ_a, Φ_a)²)`.
///
/// The right-hand sides sum to `T − |A| = Σ_a (T_a(T) − 1)`, so at least one
/// arm always qualifies; `false` means the record or the run is broken.
/// Records whose pull counts do not add up to the horizon are rejected.
pub fn pigeonhole_audit(
    record: &RunRecord,
    complexity: &ComplexityReport,
) -> Result<bool, HarnessError> {
    let n = record.num_arms();
    if n != complexity.num_arms() {
        return Err(HarnessError::MalformedRecord(format!(
            "record has {n} arms, complexity report has {}",
            complexity.num_arms()
        )));
    }
    let pulls = record.pull_counts();
    let total: u64 = pulls.iter().sum();
    if total != record.horizon {
        return Err(HarnessError::MalformedRecord(format!(
            "pull counts sum to {total}, horizon is {}",
            record.horizon
        )));
    }
    if record.horizon < n as u64 || pulls.contains(&0) {
        return Err(HarnessError::MalformedRecord(
            "every arm must be pulled at least once".into(),
        ));
    }
    let excess = (record.horizon - n as u64) as f64;
    let h = complexity.h_epsilon;
    // relative slack for rounding in Σ_a 1/(H·m_a²) = 1
    let slack = 1e-9 * excess.max(1.0);
    Ok(pulls
        .iter()
        .zip(complexity.gaps.hardness())
        .any(|(&p, m)| (p - 1) as f64 + slack >= excess / (h * m * m)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ArmSpec;
    use crate::record::{ActionTrace, OutputSets, RunFlags};
    use crate::stats::{ArmStatistics, StatisticsTable};

    fn easy() -> BanditInstance {
        BanditInstance::new(
            vec![
                ArmSpec::bernoulli(0.9, 0.3),
                ArmSpec::bernoulli(0.5, 0.3),
                ArmSpec::bernoulli(0.7, 0.8),
            ],
            0.5,
        )
        .unwrap()
    }

    fn fake_record(pulls: &[u64], horizon: u64) -> RunRecord {
        let stats = StatisticsTable::from_arms(
            pulls
                .iter()
                .map(|&p| ArmStatistics {
                    pulls: p,
                    reward_sum: 0.0,
                    cost_sum: 0.0,
                })
                .collect(),
        );
        RunRecord {
            policy: "fake".into(),
            replication: 0,
            horizon,
            trace: ActionTrace {
                checkpoints: Some(vec![]),
                actions: vec![],
            },
            final_stats: stats,
            output: OutputSets {
                feasible: Default::default(),
                competing: Default::default(),
                selected: Default::default(),
            },
            mu_star_used: 0.0,
            mu_star_trace: vec![],
            flags: RunFlags {
                bound_valid: true,
                estimator_direction: None,
            },
        }
    }

    #[test]
    fn log_grid() {
        assert_eq!(
            log_checkpoints(3, 120),
            vec![1, 2, 3, 4, 5, 6, 10, 20, 50, 100, 120]
        );
        assert_eq!(log_checkpoints(2, 2), vec![1, 2]);
    }

    #[test]
    fn single_replication_rate_is_zero_or_one() {
        let inst = easy();
        let cfg = PolicyConfig::capt(0.1, 0.9);
        let agg = run_experiment(&inst, &cfg, 60, 1, 9, &[6, 60]).unwrap();
        assert!(agg.success_rate == 0.0 || agg.success_rate == 1.0);
        assert_eq!(agg.pigeonhole_passed, Some(1));
    }

    #[test]
    fn curve_complements_sum_to_one() {
        let inst = easy();
        let cfg = PolicyConfig::capt(0.1, 0.9);
        let agg = run_experiment(&inst, &cfg, 300, 40, 2, &log_checkpoints(3, 300)).unwrap();
        for p in &agg.selection_curve {
            assert!((p.p_optimal_selection + p.p_instantaneous_regret - 1.0).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&p.p_optimal_selection));
        }
        assert_eq!(agg.selection_curve[0].p_optimal_selection, 1.0); // t = 1 plays arm 0
        assert_eq!(agg.selection_curve[1].p_optimal_selection, 0.0); // t = 2 plays arm 1
    }

    #[test]
    fn curve_rejects_unrecorded_times_and_mixed_horizons() {
        let inst = easy();
        let cfg = PolicyConfig::uniform(0.1);
        let a = run_replications(&inst, &cfg, 30, 2, 1, &[10, 30]).unwrap();
        assert!(matches!(
            selection_curve(&a, &inst, &[11]),
            Err(HarnessError::MismatchedRecords(_))
        ));
        let mut mixed = a.clone();
        mixed.extend(run_replications(&inst, &cfg, 40, 1, 1, &[10, 30]).unwrap());
        assert!(matches!(
            selection_curve(&mixed, &inst, &[10]),
            Err(HarnessError::MismatchedRecords(_))
        ));
    }

    #[test]
    fn zero_replications_rejected() {
        let inst = easy();
        assert_eq!(
            run_experiment(&inst, &PolicyConfig::uniform(0.1), 10, 0, 1, &[]).unwrap_err(),
            HarnessError::NoReplications
        );
    }

    #[test]
    fn audit_rejects_malformed_records() {
        let c = ComplexityReport::new(&easy(), 0.1).unwrap();
        assert!(matches!(
            pigeonhole_audit(&fake_record(&[3, 3, 3], 10), &c),
            Err(HarnessError::MalformedRecord(_))
        ));
        assert!(matches!(
            pigeonhole_audit(&fake_record(&[10, 0, 0], 10), &c),
            Err(HarnessError::MalformedRecord(_))
        ));
        assert!(matches!(
            pigeonhole_audit(&fake_record(&[5, 5], 10), &c),
            Err(HarnessError::MalformedRecord(_))
        ));
    }

    #[test]
    fn audit_on_equal_counts_with_symmetric_gaps() {
        let inst = BanditInstance::new(
            vec![ArmSpec::constant(0.5, 0.2), ArmSpec::constant(0.5, 0.2)],
            0.5,
        )
        .unwrap();
        let c = ComplexityReport::new(&inst, 0.1).unwrap();
        assert!(pigeonhole_audit(&fake_record(&[5, 5], 10), &c).unwrap());
        assert!(pigeonhole_audit(&fake_record(&[50, 50], 100), &c).unwrap());
    }

    #[test]
    fn bound_rows() {
        let inst = easy();
        let cfg = PolicyConfig::capt(0.1, 0.9);
        let agg = run_experiment(&inst, &cfg, 100, 10, 3, &[100]).unwrap();
        let rows = bound_comparison(std::slice::from_ref(&agg)).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].raw_bound < 0.0);
        assert_eq!(rows[0].clamped_bound, 0.0);
        assert!(rows[0].satisfied);

        let no_eps =
            run_experiment(&inst, &PolicyConfig::capt(0.0, 0.9), 100, 2, 3, &[100]).unwrap();
        assert!(no_eps.complexity.is_none());
        assert!(bound_comparison(&[no_eps]).is_err());
    }
}
