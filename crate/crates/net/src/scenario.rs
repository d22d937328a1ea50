//! Scenario files: agents, program, placed goals and scheduling settings.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use crate::harness::{Policy, DEFAULT_FAIRNESS_BOUND};

pub const DEFAULT_MAX_STEPS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("reading {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("scenario syntax: {0}")]
    Syntax(#[from] toml::de::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Bootstrap,
    #[default]
    Direct,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
pub struct UserInput {
    pub agent: String,
    pub terms: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub agents: Vec<String>,
    /// Program text, or a path relative to the scenario file.
    pub program: String,
    #[serde(default)]
    pub goals: Vec<String>,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_bound")]
    pub fairness_bound: u64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default)]
    pub user_inputs: Vec<UserInput>,
    /// Agents the scheduler never runs.
    #[serde(default)]
    pub silent: Vec<String>,
}

fn default_bound() -> u64 {
    DEFAULT_FAIRNESS_BOUND
}

fn default_max_steps() -> usize {
    DEFAULT_MAX_STEPS
}

impl Scenario {
    /// Parses scenario text. A `program` naming an existing file under
    /// `base` is replaced by the file's contents.
    pub fn parse(text: &str, base: Option<&Path>) -> Result<Scenario, ScenarioError> {
        let mut s: Scenario = toml::from_str(text)?;
        if let Some(base) = base {
            let candidate = base.join(s.program.trim());
            if !s.program.contains('\n') && candidate.is_file() {
                s.program = std::fs::read_to_string(&candidate)
                    .map_err(|source| ScenarioError::Io { path: candidate.display().to_string(), source })?;
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
        Scenario::parse(&text, path.parent())
    }

    pub fn with_policy(mut self, policy: Policy, seed: u64) -> Scenario {
        self.policy = policy;
        self.seed = seed;
        self
    }
}
