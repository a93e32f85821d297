//! Experiment configuration files (JSON).

use std::path::{Path, PathBuf};

use genbound_core::entropy::Integration;
use genbound_core::linear::NormRegime;
use genbound_core::model::BuiltinSampler;
use genbound_core::Caps;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Rademacher,
    Deviation,
    Symmetrize,
    Tail,
    Linear,
    Dudley,
    Suite,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Rademacher => "rademacher",
            Command::Deviation => "deviation",
            Command::Symmetrize => "symmetrize",
            Command::Tail => "tail",
            Command::Linear => "linear",
            Command::Dudley => "dudley",
            Command::Suite => "suite",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Where the function class and the data come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum InstanceSpec {
    /// A class already evaluated on a sample.
    Inline {
        evals: Vec<Vec<f64>>,
        envelope: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        population_means: Option<Vec<f64>>,
    },
    /// A class tabulated on a finite support (`table[i][j] = f_i(x_j)`),
    /// sampled `n` times from `probs`.
    Table {
        table: Vec<Vec<f64>>,
        probs: Vec<f64>,
        envelope: f64,
        n: usize,
    },
    /// Linear functions `<w_i, x>` over a finite support.
    Linear {
        weights: Vec<Vec<f64>>,
        support: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        probs: Option<Vec<f64>>,
        envelope: f64,
        n: usize,
    },
    /// Linear functions over a continuous sampler; population means must be
    /// supplied.
    Sampled {
        weights: Vec<Vec<f64>>,
        sampler: BuiltinSampler,
        population_means: Vec<f64>,
        envelope: f64,
        n: usize,
    },
    /// Seeded random instances with sizes drawn up to the given maxima.
    Random {
        count: usize,
        max_m: usize,
        max_n: usize,
        #[serde(default = "default_support")]
        max_support: usize,
        #[serde(default = "default_envelope")]
        envelope: f64,
    },
    /// Linear instances with weights and inputs sampled from norm balls.
    LinearBall {
        regime: NormRegime,
        max_d: usize,
        max_m: usize,
        max_n: usize,
        count: usize,
    },
}

fn default_support() -> usize {
    3
}

fn default_envelope() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoverChoice {
    Exact,
    Greedy,
    #[default]
    Both,
}

/// Per-command knobs; everything has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Monte Carlo draws for complexity estimates.
    pub draws: usize,
    /// Absolute deviations for tail experiments.
    pub epsilons: Vec<f64>,
    pub trials: usize,
    /// Admissible radii per class for Dudley verification.
    pub epsilon_count: usize,
    pub cover_method: CoverChoice,
    pub integration: Integration,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            draws: 10_000,
            epsilons: vec![0.1, 0.25, 0.5],
            trials: 10_000,
            epsilon_count: 16,
            cover_method: CoverChoice::Both,
            integration: Integration::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceSpec>,
    #[serde(default)]
    pub params: Params,
    /// Sub-experiments of a suite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub runs: Vec<ExperimentConfig>,
    /// Config files (relative to this one) appended to `runs` on load.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub include: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads a config file and inlines every `include`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config: Self = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        for inc in std::mem::take(&mut config.include) {
            config.runs.push(Self::load(&base.join(inc))?);
        }
        Ok(config)
    }

    /// Applies a command-line seed to this config and every sub-run.
    pub fn override_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        for run in &mut self.runs {
            run.override_seed(seed);
        }
    }

    /// Static checks that need no computation.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.command == Command::Suite {
            if self.runs.is_empty() {
                return Err(CliError::Config("suite needs at least one run".into()));
            }
            if self.instance.is_some() {
                return Err(CliError::Config("suite takes runs, not an instance".into()));
            }
            for run in &self.runs {
                if run.command == Command::Suite {
                    return Err(CliError::Config("suites cannot be nested".into()));
                }
                run.validate()?;
            }
            return Ok(());
        }
        let instance = self
            .instance
            .as_ref()
            .ok_or_else(|| CliError::Config(format!("{} needs an instance", self.command.name())))?;
        if self.is_randomized() && self.seed.is_none() {
            return Err(CliError::Config(format!(
                "{} uses randomness; set \"seed\" or pass --seed",
                self.command.name()
            )));
        }
        let ok = match self.command {
            Command::Rademacher => !matches!(instance, InstanceSpec::LinearBall { .. }),
            Command::Deviation | Command::Symmetrize => matches!(
                instance,
                InstanceSpec::Table { .. }
                    | InstanceSpec::Linear { .. }
                    | InstanceSpec::Random { .. }
                    | InstanceSpec::Inline { .. }
            ),
            Command::Tail => !matches!(
                instance,
                InstanceSpec::Inline { .. } | InstanceSpec::LinearBall { .. }
            ),
            Command::Linear => matches!(instance, InstanceSpec::LinearBall { .. }),
            Command::Dudley => matches!(
                instance,
                InstanceSpec::Inline { .. } | InstanceSpec::Random { .. }
            ),
            Command::Suite => unreachable!(),
        };
        if !ok {
            return Err(CliError::Config(format!(
                "instance source is not supported by {}",
                self.command.name()
            )));
        }
        if self.command == Command::Symmetrize && matches!(instance, InstanceSpec::Inline { .. }) {
            return Err(CliError::Config("symmetrize needs a distribution, not an inline class".into()));
        }
        Ok(())
    }

    /// Whether any path of this run consumes random numbers.
    pub fn is_randomized(&self) -> bool {
        match (&self.instance, self.command) {
            (Some(InstanceSpec::Random { .. } | InstanceSpec::LinearBall { .. } | InstanceSpec::Sampled { .. }), _) => {
                true
            }
            (_, Command::Tail) => true,
            (Some(InstanceSpec::Inline { evals, .. }), Command::Rademacher) => evals
                .first()
                .is_some_and(|r| r.len() > self.caps.max_sign_len as usize),
            (Some(InstanceSpec::Table { n, .. } | InstanceSpec::Linear { n, .. }), Command::Rademacher) => {
                *n > self.caps.max_sign_len as usize
            }
            _ => false,
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}
