//! JSON run configurations for the command-line tool.
//!
//! Unknown keys are rejected everywhere so a typo cannot silently change a
//! threshold or a search parameter.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::criteria::{BalanceMode, CriteriaSet, CriterionSpec, MatchConfig, DEFAULT_BUDGET};
use crate::dataset::Schema;
use crate::error::{MatchError, Result};
use crate::search::{Algorithm, KeepSchedule, Variant, DEFAULT_REVERT_AT};
use crate::synthgen::{desk_grid, full_grid, SyntheticSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    /// CSV path, relative to the config file.
    pub path: PathBuf,
    pub id_column: String,
    pub group_column: String,
    pub covariates: Vec<String>,
    #[serde(default = "comma")]
    pub delimiter: char,
    /// Optional `id,intruder` sidecar used for intruder metrics.
    #[serde(default)]
    pub truth: Option<PathBuf>,
}

fn comma() -> char {
    ','
}

impl DatasetConfig {
    pub fn schema(&self) -> Result<Schema> {
        if !self.delimiter.is_ascii() {
            return Err(MatchError::InvalidConfig(format!(
                "delimiter {:?} is not a single ASCII character",
                self.delimiter
            )));
        }
        Ok(Schema::new(
            self.id_column.clone(),
            self.group_column.clone(),
            self.covariates.clone(),
        )
        .with_delimiter(self.delimiter as u8))
    }
}

/// A matching run: data, criteria, constraints and the algorithms to try.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: DatasetConfig,
    pub criteria: Vec<CriterionSpec>,
    #[serde(default)]
    pub balance: BalanceMode,
    #[serde(default)]
    pub locked_groups: Vec<String>,
    #[serde(default)]
    pub max_removals: Option<usize>,
    #[serde(default)]
    pub max_removals_per_group: BTreeMap<String, usize>,
    #[serde(default = "two")]
    pub min_group_size: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub timeout_secs: Option<f64>,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn two() -> usize {
    2
}
fn default_budget() -> u64 {
    DEFAULT_BUDGET
}
fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Greedy]
}
fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn timeout(secs: Option<f64>) -> Result<Option<Duration>> {
    match secs {
        None => Ok(None),
        Some(s) if s > 0.0 && s.is_finite() => Ok(Some(Duration::from_secs_f64(s))),
        Some(s) => Err(MatchError::InvalidConfig(format!(
            "timeout_secs must be positive, got {s}"
        ))),
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| MatchError::InvalidConfig(e.to_string()))
    }

    /// Reads a config and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MatchError::io(path, e))?;
        let mut cfg = Self::from_json(&text)
            .map_err(|e| MatchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.dataset.path = base.join(&cfg.dataset.path);
        cfg.dataset.truth = cfg.dataset.truth.map(|t| base.join(t));
        cfg.output_dir = base.join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn match_config(&self) -> Result<MatchConfig> {
        Ok(MatchConfig {
            criteria: CriteriaSet::new(self.criteria.clone()),
            balance: self.balance.clone(),
            locked_groups: self.locked_groups.clone(),
            max_removals: self.max_removals,
            max_removals_per_group: self.max_removals_per_group.clone(),
            min_group_size: self.min_group_size,
            seed: self.seed,
            budget: self.budget,
            threads: self.threads,
            timeout: timeout(self.timeout_secs)?,
        })
    }
}

/// Which parameter sets an evaluation grid runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridChoice {
    /// `"desk"` (12 sets at 100 items) or `"full"` (36 sets).
    Named(String),
    Specs(Vec<SyntheticSpec>),
}

/// An experiment grid over synthetic data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub grid: GridChoice,
    #[serde(default = "five")]
    pub replications: usize,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: u64,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub timeout_secs: Option<f64>,
    #[serde(default)]
    pub mean: bool,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
}

fn five() -> usize {
    5
}
fn default_alpha() -> f64 {
    0.2
}

impl GridConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| MatchError::io(path, e))?;
        let mut cfg: GridConfig = serde_json::from_str(&text)
            .map_err(|e| MatchError::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.output_dir = path.parent().unwrap_or(Path::new("")).join(&cfg.output_dir);
        Ok(cfg)
    }

    pub fn specs(&self) -> Result<Vec<SyntheticSpec>> {
        match &self.grid {
            GridChoice::Named(n) if n == "desk" => Ok(desk_grid(self.seed)),
            GridChoice::Named(n) if n == "full" => Ok(full_grid(self.seed)),
            GridChoice::Named(n) => Err(MatchError::InvalidConfig(format!(
                "unknown grid {n:?}; expected \"desk\", \"full\" or a list of specs"
            ))),
            GridChoice::Specs(s) if s.is_empty() => {
                Err(MatchError::InvalidConfig("grid has no specs".into()))
            }
            GridChoice::Specs(s) => {
                for spec in s {
                    spec.validate()?;
                }
                Ok(s.clone())
            }
        }
    }

    pub fn timeout(&self) -> Result<Option<Duration>> {
        timeout(self.timeout_secs)
    }
}

/// Short algorithm syntax used on the command line:
/// `greedy`, `random:I`, `h3:L`, `h4:L:rho`, `exhaustive:n`.
impl FromStr for Algorithm {
    type Err = MatchError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            MatchError::InvalidConfig(format!(
                "cannot parse algorithm {s:?}; expected greedy, random:I, h3:L[:rho], h4:L[:rho] or exhaustive:n"
            ))
        };
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |i: usize, default: Option<usize>| -> Result<usize> {
            match parts.get(i) {
                Some(p) => p.parse().map_err(|_| bad()),
                None => default.ok_or_else(bad),
            }
        };
        let alg = match parts[0] {
            "greedy" if parts.len() == 1 => Algorithm::Greedy,
            "random" if parts.len() <= 2 => Algorithm::Random {
                iterations: num(1, Some(1))?,
                schedule: KeepSchedule::Linear,
            },
            v @ ("h3" | "h4") if parts.len() <= 3 => Algorithm::Lookahead {
                variant: if v == "h3" { Variant::H3 } else { Variant::H4 },
                lookahead: num(1, Some(1))?,
                batch: num(2, Some(1))?,
                revert_at: DEFAULT_REVERT_AT,
            },
            "exhaustive" if parts.len() == 2 => Algorithm::Exhaustive {
                max_removed: num(1, None)?,
            },
            _ => return Err(bad()),
        };
        Ok(alg)
    }
}

/// Parses a comma-separated list in the short syntax.
pub fn parse_algorithms(list: &str) -> Result<Vec<Algorithm>> {
    let algs: Vec<Algorithm> = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<_>>()?;
    if algs.is_empty() {
        return Err(MatchError::InvalidConfig("no algorithms given".into()));
    }
    Ok(algs)
}
