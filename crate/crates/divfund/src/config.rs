//! Flat `key = value` configuration files.
//!
//! One pair per line, `#` starts a comment, blank lines are ignored. Model keys
//! are `c lambda alpha beta delta phi`; `tol_root`, `tol_residual`, `paths`,
//! `horizon`, `seed` and `grid_step` are optional. Anything else is an error.

use std::path::Path;

use divfund_core::params::MODEL_KEYS;
use divfund_core::ModelParams;

use crate::error::CliError;

const OPTIONAL_KEYS: [&str; 6] = ["tol_root", "tol_residual", "paths", "horizon", "seed", "grid_step"];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// Simulation defaults that command-line flags override.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub paths: Option<u64>,
    pub horizon: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub params: ModelParams,
    pub sim: SimOptions,
    pub grid_step: Option<f64>,
}

/// Parses an integer written either plainly or as a float such as `1e5`.
pub fn parse_count(text: &str) -> Option<u64> {
    if let Ok(n) = text.parse::<u64>() {
        return Some(n);
    }
    let x: f64 = text.parse().ok()?;
    (x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64).then_some(x as u64)
}

impl Config {
    pub fn parse(text: &str) -> Result<Config, CliError> {
        let mut pairs: Vec<(&str, f64, usize)> = Vec::new();
        let mut sim = SimOptions::default();
        let mut grid_step = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| ParseError { line, message };
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(err(format!("expected key = value, found {body:?}")).into());
            };
            let (key, value) = (key.trim(), value.trim());
            if !MODEL_KEYS.contains(&key) && !OPTIONAL_KEYS.contains(&key) {
                return Err(err(format!("unknown key {key:?}")).into());
            }
            if pairs.iter().any(|p| p.0 == key) {
                return Err(err(format!("duplicate key {key:?}")).into());
            }
            let number: f64 = value.parse().map_err(|_| err(format!("{key}: not a number: {value:?}")))?;
            match key {
                "paths" | "seed" => {
                    let n = parse_count(value).ok_or_else(|| err(format!("{key}: not a non-negative integer: {value:?}")))?;
                    if key == "paths" {
                        sim.paths = Some(n);
                    } else {
                        sim.seed = Some(n);
                    }
                }
                "horizon" => sim.horizon = Some(number),
                "grid_step" => grid_step = Some(number),
                _ => {}
            }
            pairs.push((key, number, line));
        }
        let params = ModelParams::from_pairs(pairs.iter().map(|p| (p.0, p.1))).map_err(CliError::Invalid)?;
        Ok(Config { params, sim, grid_step })
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Config::parse(&text)
    }
}
