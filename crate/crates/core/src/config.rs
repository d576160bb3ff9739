//! Experiment configuration files.
//!
//! ```json
//! {
//!   "instance": "easy.json",
//!   "policy": {"policy": "capt_e", "epsilon": 0.1, "estimator": "feasible_max"},
//!   "T": 50000,
//!   "replications": 500,
//!   "seed": 7,
//!   "checkpoints": "log",
//!   "output_dir": "results/easy"
//! }
//! ```
//!
//! `instance` is either an inline instance object or a path relative to the
//! config file. `horizon` is accepted as an alias of `T`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::error::InstanceError;
use crate::harness::log_checkpoints;
use crate::instance::{BanditInstance, InstanceSpec};
use crate::policy::{PolicyConfig, PolicySpec};

pub const DEFAULT_REPLICATIONS: u64 = 100;
pub const DEFAULT_SEED: u64 = 0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error("parse error at `{field}`: {reason}")]
    Parse { field: String, reason: String },
    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

impl ConfigError {
    fn parse(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Parse {
            field: field.into(),
            reason: reason.into(),
        }
    }

    fn validation(field: impl Into<String>, reason: impl Into<String>) -> Self {
        ConfigError::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Io { .. } => None,
            ConfigError::Parse { field, .. } | ConfigError::Validation { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CheckpointSpec {
    #[default]
    #[serde(with = "log_tag")]
    Log,
    Explicit(Vec<u64>),
}

mod log_tag {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str("log")
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<(), D::Error> {
        match String::deserialize(d)?.as_str() {
            "log" => Ok(()),
            other => Err(D::Error::custom(format!(
                "expected \"log\", got \"{other}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub instance: BanditInstance,
    pub policy: PolicyConfig,
    pub horizon: u64,
    pub replications: u64,
    pub seed: u64,
    pub checkpoints: CheckpointSpec,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Concrete checkpoint times for this horizon.
    pub fn checkpoint_times(&self) -> Vec<u64> {
        match &self.checkpoints {
            CheckpointSpec::Log => log_checkpoints(self.instance.num_arms(), self.horizon),
            CheckpointSpec::Explicit(v) => {
                let mut v = v.clone();
                v.sort_unstable();
                v.dedup();
                v
            }
        }
    }

    /// Serializes with the instance inlined.
    pub fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert(
            "instance".into(),
            serde_json::to_value(&self.instance).expect("instance serializes"),
        );
        map.insert(
            "policy".into(),
            serde_json::to_value(self.policy).expect("policy serializes"),
        );
        map.insert("T".into(), self.horizon.into());
        map.insert("replications".into(), self.replications.into());
        map.insert("seed".into(), self.seed.into());
        map.insert(
            "checkpoints".into(),
            serde_json::to_value(&self.checkpoints).expect("checkpoints serialize"),
        );
        if let Some(dir) = &self.output_dir {
            map.insert(
                "output_dir".into(),
                dir.to_string_lossy().into_owned().into(),
            );
        }
        Value::Object(map)
    }
}

/// Reads and validates an experiment config file.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = read(path)?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config_str(&text, base)
}

/// Parses config text; relative instance paths resolve against `base`.
pub fn parse_config_str(text: &str, base: &Path) -> Result<ExperimentConfig, ConfigError> {
    let value: Value =
        serde_json::from_str(text).map_err(|e| ConfigError::parse("<root>", e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(ConfigError::parse("<root>", "expected a JSON object"));
    };

    let instance = match map.remove("instance") {
        None => return Err(ConfigError::parse("instance", "required")),
        Some(Value::String(p)) => {
            let p = base.join(p);
            parse_instance_str(&read(&p)?, "")?
        }
        Some(v @ Value::Object(_)) => parse_instance_value(v, "instance.")?,
        Some(_) => {
            return Err(ConfigError::parse(
                "instance",
                "expected a path or an instance object",
            ))
        }
    };

    let policy_spec: PolicySpec = match map.remove("policy") {
        None => return Err(ConfigError::parse("policy", "required")),
        Some(v) => {
            serde_json::from_value(v).map_err(|e| ConfigError::parse("policy", e.to_string()))?
        }
    };
    let policy = policy_spec
        .resolve(Some(instance.optimal_value()))
        .map_err(|e| ConfigError::validation("policy", e.to_string()))?;

    let horizon = match (map.remove("T"), map.remove("horizon")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::parse(
                "T",
                "give either `T` or `horizon`, not both",
            ))
        }
        (Some(v), None) | (None, Some(v)) => as_u64(v, "T")?,
        (None, None) => return Err(ConfigError::parse("T", "required")),
    };
    if horizon < instance.num_arms() as u64 {
        return Err(ConfigError::validation("T", "T >= |A| required"));
    }

    let replications = match map.remove("replications") {
        Some(v) => as_u64(v, "replications")?,
        None => DEFAULT_REPLICATIONS,
    };
    if replications == 0 {
        return Err(ConfigError::validation("replications", "R >= 1 required"));
    }
    let seed = match map.remove("seed") {
        Some(v) => as_u64(v, "seed")?,
        None => DEFAULT_SEED,
    };

    let checkpoints: CheckpointSpec = match map.remove("checkpoints") {
        Some(v) => serde_json::from_value(v).map_err(|_| {
            ConfigError::parse("checkpoints", "expected \"log\" or a list of times")
        })?,
        None => CheckpointSpec::Log,
    };
    if let CheckpointSpec::Explicit(ts) = &checkpoints {
        if let Some(bad) = ts.iter().find(|&&t| t == 0 || t > horizon) {
            return Err(ConfigError::validation(
                "checkpoints",
                format!("time {bad} lies outside 1..={horizon}"),
            ));
        }
    }

    let output_dir = match map.remove("output_dir") {
        Some(Value::String(s)) => Some(PathBuf::from(s)),
        Some(Value::Null) | None => None,
        Some(_) => return Err(ConfigError::parse("output_dir", "expected a string")),
    };

    if let Some(key) = map.keys().next() {
        return Err(ConfigError::parse(key.clone(), "unknown field"));
    }

    Ok(ExperimentConfig {
        instance,
        policy,
        horizon,
        replications,
        seed,
        checkpoints,
        output_dir,
    })
}

/// Reads and validates a standalone instance file.
pub fn parse_instance_file(path: &Path) -> Result<BanditInstance, ConfigError> {
    parse_instance_str(&read(path)?, "")
}

fn parse_instance_str(text: &str, prefix: &str) -> Result<BanditInstance, ConfigError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| ConfigError::parse(format!("{prefix}<root>"), e.to_string()))?;
    parse_instance_value(value, prefix)
}

fn parse_instance_value(value: Value, prefix: &str) -> Result<BanditInstance, ConfigError> {
    let Value::Object(map) = &value else {
        return Err(ConfigError::parse(
            format!("{prefix}<root>"),
            "expected an object",
        ));
    };
    for key in ["arms", "constraint"] {
        if !map.contains_key(key) {
            return Err(ConfigError::parse(format!("{prefix}{key}"), "required"));
        }
    }
    if let Some(key) = map.keys().find(|k| *k != "arms" && *k != "constraint") {
        return Err(ConfigError::parse(
            format!("{prefix}{key}"),
            "unknown field",
        ));
    }
    if let Some(Value::Array(arms)) = map.get("arms") {
        for (i, arm) in arms.iter().enumerate() {
            for side in ["reward", "cost"] {
                if let Some(d) = arm.get(side) {
                    serde_json::from_value::<crate::instance::Distribution>(d.clone()).map_err(
                        |e| ConfigError::parse(format!("{prefix}arms[{i}].{side}"), e.to_string()),
                    )?;
                }
            }
        }
    }
    let spec: InstanceSpec = serde_json::from_value(value)
        .map_err(|e| ConfigError::parse(format!("{prefix}<root>"), e.to_string()))?;
    BanditInstance::try_from(spec).map_err(|e| {
        let field = match &e {
            InstanceError::SupportViolation {
                arm,
                channel,
                param,
                ..
            } => {
                format!("{prefix}arms[{arm}].{channel}.params.{param}")
            }
            InstanceError::TooFewArms { .. } => format!("{prefix}arms"),
            InstanceError::EmptyFeasibleSet { .. } | InstanceError::InvalidConstraint(_) => {
                format!("{prefix}constraint")
            }
            InstanceError::Parse(_) => format!("{prefix}<root>"),
        };
        ConfigError::validation(field, e.to_string())
    })
}

fn as_u64(v: Value, field: &str) -> Result<u64, ConfigError> {
    v.as_u64()
        .ok_or_else(|| ConfigError::parse(field, "expected a non-negative integer"))
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|e| ConfigError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::policy::{EstimatorConfig, EstimatorKind, FeasibilityDirection, PolicyKind};

    const INSTANCE: &str = r#"{"arms":[
        {"reward":{"kind":"bernoulli","params":{"p":0.8}},"cost":{"kind":"bernoulli","params":{"p":0.4}}},
        {"reward":{"kind":"bernoulli","params":{"p":0.5}},"cost":{"kind":"bernoulli","params":{"p":0.6}}}
    ],"constraint":0.5}"#;

    fn parse(text: &str) -> Result<ExperimentConfig, ConfigError> {
        parse_config_str(text, Path::new("."))
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(&format!(
            r#"{{"instance":{INSTANCE},"policy":{{"policy":"capt_e"}},"T":100}}"#
        ))
        .unwrap();
        assert_eq!(cfg.policy.epsilon, 0.1);
        match cfg.policy.kind {
            PolicyKind::CaptE(EstimatorConfig {
                kind: EstimatorKind::FeasibleMax,
                fallback,
                direction,
            }) => {
                assert_eq!(fallback, 1.0);
                assert_eq!(direction, FeasibilityDirection::Le);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.checkpoints, CheckpointSpec::Log);
        assert_eq!(cfg.replications, DEFAULT_REPLICATIONS);
        assert_eq!(cfg.seed, DEFAULT_SEED);
    }

    #[test]
    fn capt_defaults_to_true_optimal_value() {
        let cfg = parse(&format!(
            r#"{{"instance":{INSTANCE},"policy":{{"policy":"capt"}},"T":100}}"#
        ))
        .unwrap();
        assert_eq!(cfg.policy, PolicyConfig::capt(0.1, 0.8));
    }

    #[test]
    fn missing_constraint_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let inst = dir.path().join("inst.json");
        fs::write(&inst, r#"{"arms":[]}"#).unwrap();
        let err = parse_instance_file(&inst).unwrap_err();
        assert_eq!(
            err,
            ConfigError::Parse {
                field: "constraint".into(),
                reason: "required".into()
            }
        );
        let cfg = dir.path().join("cfg.json");
        fs::write(
            &cfg,
            r#"{"instance":"inst.json","policy":{"policy":"uniform"},"T":4}"#,
        )
        .unwrap();
        assert_eq!(parse_config(&cfg).unwrap_err().field(), Some("constraint"));
    }

    #[test]
    fn short_horizon_is_a_validation_error() {
        let err = parse(&format!(
            r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}},"T":1}}"#
        ))
        .unwrap_err();
        assert_eq!(
            err,
            ConfigError::Validation {
                field: "T".into(),
                reason: "T >= |A| required".into()
            }
        );
    }

    #[test]
    fn field_errors() {
        let cases = [
            (r#"{"policy":{"policy":"uniform"},"T":4}"#.to_string(), "instance"),
            (format!(r#"{{"instance":{INSTANCE},"T":4}}"#), "policy"),
            (format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}}}}"#), "T"),
            (
                format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}},"T":4,"bogus":1}}"#),
                "bogus",
            ),
            (
                format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}},"T":4,"checkpoints":"lin"}}"#),
                "checkpoints",
            ),
            (
                format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}},"T":4,"checkpoints":[9]}}"#),
                "checkpoints",
            ),
            (
                format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"uniform"}},"T":4,"replications":0}}"#),
                "replications",
            ),
            (
                format!(r#"{{"instance":{INSTANCE},"policy":{{"policy":"capt","mu_star":3}},"T":4}}"#),
                "policy",
            ),
            (
                r#"{"instance":{"arms":[{"reward":{"kind":"poisson","params":{}},"cost":{"kind":"constant","params":{"value":0}}}],"constraint":0.5},"policy":{"policy":"uniform"},"T":4}"#.to_string(),
                "instance.arms[0].reward",
            ),
            (
                r#"{"instance":{"arms":[{"reward":{"kind":"constant","params":{"value":0}},"cost":{"kind":"constant","params":{"value":0}}}],"constraint":0.5},"policy":{"policy":"uniform"},"T":4}"#.to_string(),
                "instance.arms",
            ),
        ];
        for (text, field) in cases {
            let err = parse(&text).unwrap_err();
            assert_eq!(err.field(), Some(field), "{text}: {err}");
        }
    }

    #[test]
    fn write_then_parse_round_trips() {
        let text = format!(
            r#"{{"instance":{INSTANCE},"policy":{{"policy":"capt_e","epsilon":0.05,"estimator":"occupancy","fallback":0.4,"estimator_direction":"ge"}},
                "horizon":500,"replications":20,"seed":99,"checkpoints":[10,500],"output_dir":"out"}}"#
        );
        let cfg = parse(&text).unwrap();
        let again = parse(&cfg.to_json().to_string()).unwrap();
        assert_eq!(again, cfg);
        let log = parse(&format!(
            r#"{{"instance":{INSTANCE},"policy":{{"policy":"capt"}},"T":30}}"#
        ))
        .unwrap();
        assert_eq!(parse(&log.to_json().to_string()).unwrap(), log);
        assert_eq!(log.checkpoint_times(), vec![1, 2, 3, 4, 5, 10, 20, 30]);
    }
}
