use std::path::Path;

use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::game::InstanceSpace;
use crate::trainer::TrainConfig;

/// Parses a space name: `number-set-4`, `number-set-7`, `objects`, or
/// `number-set:V:MAX` for `V` symbols and at most `MAX` per instance.
pub fn parse_space(text: &str) -> Result<InstanceSpace> {
    let space = match text {
        "number-set-4" => InstanceSpace::number_set_4(),
        "number-set-7" => InstanceSpace::number_set_7(),
        "objects" => InstanceSpace::objects(),
        other => {
            let parts: Vec<&str> = other.split(':').collect();
            match parts.as_slice() {
                ["number-set", v, m] => InstanceSpace::NumberSet {
                    vocab: v.parse().map_err(|_| Error::Config(format!("bad vocabulary in {other:?}")))?,
                    max_attrs: m.parse().map_err(|_| Error::Config(format!("bad size in {other:?}")))?,
                },
                _ => return Err(Error::Config(format!("unknown instance space {other:?}"))),
            }
        }
    };
    space.validate()?;
    Ok(space)
}

fn parse_value(key: &str, current: &Value, raw: &str) -> Result<Value> {
    let bad = || Error::Config(format!("invalid value {raw:?} for {key}"));
    Ok(match current {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
        Value::Number(n) if n.is_u64() => Value::from(raw.replace('_', "").parse::<u64>().map_err(|_| bad())?),
        Value::Number(_) => Value::from(raw.parse::<f64>().map_err(|_| bad())?),
        Value::String(_) => Value::String(raw.to_string()),
        Value::Object(_) if key == "space" => serde_json::to_value(parse_space(raw)?).expect("space serializes"),
        _ => return Err(bad()),
    })
}

/// Applies `key = value` assignments on top of `base`. Blank lines and `#`
/// comments are ignored; unknown keys are rejected.
pub fn apply_overrides<'a>(base: &TrainConfig, lines: impl IntoIterator<Item = &'a str>) -> Result<TrainConfig> {
    let mut obj: Map<String, Value> = match serde_json::to_value(base).expect("config serializes") {
        Value::Object(m) => m,
        _ => unreachable!("config is a struct"),
    };
    for (i, line) in lines.into_iter().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (key, raw) = (key.trim(), raw.trim());
        let current = obj
            .get(key)
            .ok_or_else(|| Error::Config(format!("line {}: unknown key {key:?}", i + 1)))?;
        let value = parse_value(key, current, raw).map_err(|e| e.with_context(format!("line {}", i + 1)))?;
        obj.insert(key.to_string(), value);
    }
    let config: TrainConfig =
        serde_json::from_value(Value::Object(obj)).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

pub fn parse_config(text: &str) -> Result<TrainConfig> {
    apply_overrides(&TrainConfig::default(), text.lines())
}

pub fn load_config(path: &Path) -> Result<TrainConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| e.with_context(path.display().to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::OptimizerKind;

    #[test]
    fn parses_and_overrides() {
        let c = parse_config(
            "# desk run\nphases = 2\niterations_per_phase = 1_000\nteacher_iterations = 500\n\
             teacher_lr = 0.003  # comment\noptimizer = adam\nspace = objects\npretrain = false\n",
        )
        .unwrap();
        assert_eq!(c.phases, 2);
        assert_eq!(c.iterations_per_phase, 1000);
        assert_eq!(c.teacher_lr, 0.003);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!(c.space, InstanceSpace::objects());
        assert!(!c.pretrain);
        assert_eq!(parse_config("").unwrap(), TrainConfig::default());
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        for text in [
            "iteratons_per_phase = 10",
            "phases = -1",
            "pretrain = yes",
            "optimizer = rmsprop",
            "space = cubes",
            "phases",
            "teacher_iterations = 30000",
        ] {
            let err = parse_config(text).unwrap_err();
            assert!(matches!(err.root(), Error::Config(_)), "{text}: {err}");
        }
    }

    #[test]
    fn custom_number_set() {
        assert_eq!(
            parse_space("number-set:12:5").unwrap(),
            InstanceSpace::NumberSet { vocab: 12, max_attrs: 5 }
        );
        assert!(parse_space("number-set:3:5").is_err());
    }
}
