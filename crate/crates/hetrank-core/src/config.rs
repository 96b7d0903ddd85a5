//! Flat `key = value` experiment-config format.
//!
//! Lines hold one assignment each; `#` starts a comment anywhere, blank lines
//! are skipped, every key is optional and defaults to the standard grid, and
//! later assignments win. Syntax problems report their line number; the
//! assembled config is then validated as a whole.

use std::str::FromStr;

use crate::baselines::{AlgorithmKind, ArmRoutine};
use crate::error::{Error, Result};
use crate::harness::{ExperimentConfig, Fraction};

fn items<T>(key: &str, value: &str) -> std::result::Result<Vec<T>, String>
where
    T: FromStr,
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|part| !part.is_empty())
        .map(|part| {
            part.parse::<T>()
                .map_err(|e| format!("invalid value for {key}: '{part}' ({e})"))
        })
        .collect()
}

fn scalar<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse::<T>()
        .map_err(|_| format!("invalid value for {key}: '{value}'"))
}

fn flag(key: &str, value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!(
            "invalid value for {key}: '{value}' (use true or false)"
        )),
    }
}

/// Parse and validate a config, starting from [`ExperimentConfig::default`].
pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let fail = |message: String| Error::ConfigParse { line, message };
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(fail("expected `key = value`".into()));
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "algorithms" => {
                config.algorithms = items::<AlgorithmKind>(key, value).map_err(fail)?;
            }
            "n_grid" => config.n_grid = items::<usize>(key, value).map_err(fail)?,
            "m" => config.m = scalar(key, value).map_err(fail)?,
            "accurate_fraction" => {
                config.accurate_fraction = Fraction::from_str(value)
                    .map_err(|e| fail(format!("invalid value for {key}: {e}")))?;
            }
            "gamma_a" => config.gamma_a = scalar(key, value).map_err(fail)?,
            "gamma_b" => config.gamma_b = scalar(key, value).map_err(fail)?,
            "score_gap" => config.score_gap = scalar(key, value).map_err(fail)?,
            "delta" => config.delta = scalar(key, value).map_err(fail)?,
            "repeats" => config.repeats = scalar(key, value).map_err(fail)?,
            "base_seed" => config.base_seed = scalar(key, value).map_err(fail)?,
            "selector" => {
                config.selector.routine =
                    ArmRoutine::from_str(value).map_err(|e| fail(e.to_string()))?;
            }
            "se_epsilon" => config.selector.se_epsilon = scalar(key, value).map_err(fail)?,
            "me_alpha" => config.selector.me_alpha = scalar(key, value).map_err(fail)?,
            "subset_size" => config.selector.subset_size = scalar(key, value).map_err(fail)?,
            "dump_records" => config.dump_records = flag(key, value).map_err(fail)?,
            _ => return Err(fail(format!("unknown key '{key}'"))),
        }
    }
    config.validate()?;
    Ok(config)
}
