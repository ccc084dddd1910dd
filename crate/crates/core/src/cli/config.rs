//! Flat JSON configuration files.
//!
//! ```json
//! {"mu": 1, "lambda": 0.5, "gamma": 1, "r": 0.5, "c0": 0.1, "c": 0.4,
//!  "c1i": 1, "c2i": 1, "pi0": 0.3, "Pi0": 1, "Pi1": 0.4, "alpha": 0}
//! ```
//!
//! Every model parameter must be given; exactly one of `pi1` and `alpha`.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use super::CliError;
use crate::error::Error;
use crate::model::{CostModel, FirewallProfile, ModelParams, ThreatEnvironment};

/// Keys that name a scalar model parameter, in the canonical order.
pub const PARAMETER_KEYS: [&str; 13] = [
    "mu", "lambda", "gamma", "r", "c0", "c", "c1i", "c2i", "pi0", "pi1", "Pi0", "Pi1", "alpha",
];

/// Unvalidated parameter values as read from a file.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawParams {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub r: f64,
    pub c0: f64,
    pub c: f64,
    pub c1i: f64,
    pub c2i: f64,
    pub pi0: f64,
    pub pi1: Option<f64>,
    pub big_pi0: f64,
    pub big_pi1: f64,
    pub alpha: Option<f64>,
}

impl RawParams {
    pub fn build(&self) -> Result<ModelParams, Error> {
        let profile = match (self.pi1, self.alpha) {
            (Some(pi1), None) => FirewallProfile::new(self.pi0, pi1, self.big_pi0, self.big_pi1)?,
            (None, Some(alpha)) => FirewallProfile::coupled(self.pi0, self.big_pi0, self.big_pi1, alpha)?,
            _ => return Err(Error::invalid("pi1", "pi1/alpha mutually exclusive; give exactly one")),
        };
        ModelParams::new(
            profile,
            CostModel::new(self.c0, self.c, self.c1i, self.c2i, self.r)?,
            ThreatEnvironment::new(self.lambda, self.mu)?,
            self.gamma,
        )
    }

    /// Overwrites one parameter by its config key.
    pub fn set(&mut self, key: &str, value: f64) -> Result<(), CliError> {
        match canonical_key(key) {
            Some("mu") => self.mu = value,
            Some("lambda") => self.lambda = value,
            Some("gamma") => self.gamma = value,
            Some("r") => self.r = value,
            Some("c0") => self.c0 = value,
            Some("c") => self.c = value,
            Some("c1i") => self.c1i = value,
            Some("c2i") => self.c2i = value,
            Some("pi0") => self.pi0 = value,
            Some("Pi0") => self.big_pi0 = value,
            Some("Pi1") => self.big_pi1 = value,
            Some("pi1") => {
                if self.alpha.is_some() {
                    return Err(CliError::Usage(
                        "cannot vary pi1: the configuration derives it from alpha".into(),
                    ));
                }
                self.pi1 = Some(value);
            }
            Some("alpha") => {
                if self.pi1.is_some() {
                    return Err(CliError::Usage(
                        "cannot vary alpha: the configuration fixes pi1".into(),
                    ));
                }
                self.alpha = Some(value);
            }
            _ => return Err(CliError::Usage(format!("unknown parameter `{key}`"))),
        }
        Ok(())
    }
}

fn canonical_key(key: &str) -> Option<&'static str> {
    if key == "intensity" {
        return Some("lambda");
    }
    PARAMETER_KEYS.iter().copied().find(|k| *k == key)
}

/// Model parameters loaded from a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub path: PathBuf,
    pub raw: RawParams,
    pub params: ModelParams,
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let raw = parse_config(&text).map_err(|msg| CliError::Config {
        path: path.to_path_buf(),
        msg,
    })?;
    let params = raw.build().map_err(|e| CliError::Config {
        path: path.to_path_buf(),
        msg: e.to_string(),
    })?;
    Ok(RunConfig {
        path: path.to_path_buf(),
        raw,
        params,
    })
}

/// Parses the JSON text of a configuration; errors name the offending key.
pub fn parse_config(text: &str) -> Result<RawParams, String> {
    let value: Value = serde_json::from_str(text).map_err(|e| format!("invalid JSON: {e}"))?;
    let Value::Object(map) = value else {
        return Err("expected a JSON object at the top level".into());
    };
    let mut seen: Map<String, Value> = Map::new();
    for (key, v) in map {
        let Some(canon) = canonical_key(&key) else {
            return Err(format!("unknown key `{key}`"));
        };
        if seen.contains_key(canon) {
            return Err(format!("key `{key}` given twice (lambda and intensity are aliases)"));
        }
        seen.insert(canon.to_string(), v);
    }
    let number = |key: &str| -> Result<Option<f64>, String> {
        match seen.get(key) {
            None => Ok(None),
            Some(Value::Number(n)) => n
                .as_f64()
                .map(Some)
                .ok_or_else(|| format!("key `{key}`: not representable as a float")),
            Some(other) => Err(format!("key `{key}`: expected a number, found {other}")),
        }
    };
    let required = |key: &str| -> Result<f64, String> {
        number(key)?.ok_or_else(|| format!("missing key `{key}`"))
    };
    let pi1 = number("pi1")?;
    let alpha = number("alpha")?;
    match (pi1, alpha) {
        (Some(_), Some(_)) => return Err("keys `pi1` and `alpha`: pi1/alpha mutually exclusive".into()),
        (None, None) => return Err("missing key `pi1` or `alpha` (exactly one is required)".into()),
        _ => {}
    }
    Ok(RawParams {
        mu: required("mu")?,
        lambda: required("lambda")?,
        gamma: required("gamma")?,
        r: required("r")?,
        c0: required("c0")?,
        c: required("c")?,
        c1i: required("c1i")?,
        c2i: required("c2i")?,
        pi0: required("pi0")?,
        pi1,
        big_pi0: required("Pi0")?,
        big_pi1: required("Pi1")?,
        alpha,
    })
}
