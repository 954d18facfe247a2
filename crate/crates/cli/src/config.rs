//! Flat `key = value` config files. Command-line flags take precedence.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, Context, Result};

use crate::fail::Usage;

pub const KNOWN_KEYS: &[&str] = &[
    "kernel.family",
    "kernel.c1",
    "kernel.c2",
    "seed",
    "out_dir",
    "threads",
    "depth.method",
    "depth.h",
    "depth.h_rule",
    "depth.p",
    "depth.band_grid",
    "distance.method",
    "distance.grid",
    "center.method",
    "center.n_max",
    "center.anneal_c",
    "center.d_r",
    "center.move_sd",
    "sgd.batch",
    "sgd.rate",
    "sgd.epochs",
    "sgd.eps",
    "simulate.model",
    "simulate.lambda",
    "simulate.mixture",
    "simulate.T",
    "simulate.n",
    "classify.folds",
    "classify.segments",
];

#[derive(Debug, Clone, Default)]
pub struct Config {
    values: BTreeMap<String, String>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in config file {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected `key = value`", i + 1))?;
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(anyhow!("line {}: unknown key `{key}`", i + 1));
            }
            values.insert(key.to_string(), value.trim().to_string());
        }
        Ok(Self { values })
    }

    pub fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Flag if given, else the config value, else `default`.
    pub fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> Result<T>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(self.pick_opt(flag, key)?.unwrap_or(default))
    }

    pub fn pick_opt<T>(&self, flag: Option<T>, key: &str) -> Result<Option<T>>
    where
        T: FromStr,
        T::Err: std::fmt::Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| Usage(format!("config key `{key}`: cannot parse `{v}`: {e}")).into()),
        }
    }
}
