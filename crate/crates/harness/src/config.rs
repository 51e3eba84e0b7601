//! Experiment configuration.
//!
//! Files are UTF-8 text with one `key = value` pair per line; `#` starts a comment.
//! Keys are the long CLI flag names (`K`, `M`, `snr-db`, `trials`, `A`, `B`,
//! `target-ew`, `policy`, `no-early-stop`, `seed`, `out`, `threads`, `generator`),
//! case-insensitive, with `_` and `-` interchangeable. List-valued keys (`M`,
//! `snr-db`) take comma-separated values. Settings given on the command line are
//! applied after the file and win.

use std::path::{Path, PathBuf};

use pirec_core::calibration::{solve_threshold_a, stored_threshold, TABLE_RUN_LENGTH, TABLE_TARGET_EW};
use pirec_core::{CandidatePolicy, GeneratorSpec, ThresholdPair};

use crate::{Error, Result};

/// Early-stopping thresholds, possibly still to be derived from the calibration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdSetting {
    /// `None`: solve for `A` from `b` and `target_ew`.
    pub a: Option<f64>,
    pub b: usize,
    pub target_ew: f64,
}

impl Default for ThresholdSetting {
    fn default() -> Self {
        Self {
            a: None,
            b: TABLE_RUN_LENGTH,
            target_ew: TABLE_TARGET_EW,
        }
    }
}

impl ThresholdSetting {
    /// Concrete thresholds for interleaver length `k`. Automatic `A` comes from the
    /// stored table when the setting matches it, and from the calibration otherwise.
    pub fn resolve(&self, k: usize) -> Result<ThresholdPair> {
        let a = match self.a {
            Some(a) => a,
            None => {
                let tabled = self.b == TABLE_RUN_LENGTH && self.target_ew == TABLE_TARGET_EW;
                match stored_threshold(k).filter(|_| tabled) {
                    Some(a) => a,
                    None => solve_threshold_a(k, self.b, self.target_ew)?,
                }
            }
        };
        Ok(ThresholdPair::new(a, self.b)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub k: usize,
    pub m: Vec<usize>,
    pub generator: GeneratorSpec,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub thresholds: ThresholdSetting,
    pub policy: CandidatePolicy,
    pub early_stop: bool,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            k: 512,
            m: vec![25],
            generator: GeneratorSpec::memory4(),
            snr_db: vec![2.0],
            trials: 100,
            thresholds: ThresholdSetting::default(),
            policy: CandidatePolicy::AllPositions,
            early_stop: true,
            seed: 1,
            out: None,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    /// Defaults overridden by the settings in `path`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::default();
        config.apply_text(&text, path)?;
        Ok(config)
    }

    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: origin.to_path_buf(),
                line: n + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got {line:?}")))?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                Error::Config(m) => parse_err(m),
                other => other,
            })?;
        }
        Ok(())
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let norm = key.to_ascii_lowercase().replace('_', "-");
        match norm.as_str() {
            "k" => self.k = parse(key, value)?,
            "m" => self.m = parse_list(key, value)?,
            "generator" => {
                self.generator = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "snr-db" => self.snr_db = parse_list(key, value)?,
            "trials" => self.trials = parse(key, value)?,
            "a" => {
                self.thresholds.a = match value {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "b" => self.thresholds.b = parse(key, value)?,
            "target-ew" => self.thresholds.target_ew = parse(key, value)?,
            "policy" => {
                self.policy = value
                    .parse()
                    .map_err(|e| Error::Config(format!("{key}: {e}")))?
            }
            "no-early-stop" => self.early_stop = !parse::<bool>(key, value)?,
            "early-stop" => self.early_stop = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(parse(key, value)?),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.k < 2 {
            return fail("K must be at least 2");
        }
        if self.m.is_empty() || self.m.contains(&0) {
            return fail("M must list at least one positive block count");
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr-db must list at least one finite value");
        }
        if self.trials == 0 {
            return fail("trials must be positive");
        }
        if self.threads == Some(0) {
            return fail("threads must be positive");
        }
        if self.thresholds.b == 0 {
            return fail("B must be positive");
        }
        if let Some(a) = self.thresholds.a {
            if a.is_nan() || a <= 0.0 {
                return fail("A must be positive");
            }
        }
        if self.thresholds.target_ew.is_nan() || self.thresholds.target_ew <= 0.0 {
            return fail("target-ew must be positive");
        }
        Ok(())
    }

    /// Thresholds for this configuration's `K`.
    pub fn resolved_thresholds(&self) -> Result<ThresholdPair> {
        self.thresholds.resolve(self.k)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("{key}: cannot parse {value:?}: {e}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    value
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| parse(key, v))
        .collect()
}
