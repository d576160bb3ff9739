use thiserror::Error;

use crate::instance::Channel;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("instance needs at least 2 arms, found {found}")]
    TooFewArms { found: usize },
    #[error("arm {arm}: {channel} distribution parameter `{param}` = {value} is invalid or leaves [0,1]")]
    SupportViolation {
        arm: usize,
        channel: Channel,
        param: &'static str,
        value: f64,
    },
    #[error("no arm has mean cost <= constraint {constraint} (smallest mean cost is {min_cost})")]
    EmptyFeasibleSet { constraint: f64, min_cost: f64 },
    #[error("constraint must be finite, got {0}")]
    InvalidConstraint(f64),
    #[error("malformed instance description: {0}")]
    Parse(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexityError {
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("problem complexity is infinite: arm {arm} has a zero gap (use epsilon > 0)")]
    InfiniteComplexity { arm: usize },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("horizon {horizon} is shorter than the number of arms {arms}")]
    HorizonTooShort { horizon: u64, arms: usize },
    #[error("invalid policy configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Complexity(#[from] ComplexityError),
    #[error("records disagree: {0}")]
    MismatchedRecords(String),
    #[error("malformed run record: {0}")]
    MalformedRecord(String),
    #[error("at least one replication is required")]
    NoReplications,
    #[error("bound comparison needs epsilon > 0 and horizon >= 2|A| ({0})")]
    BoundUnavailable(String),
}
