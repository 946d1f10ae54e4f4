//! Experiment configuration. The same structure is built from command-line
//! flags or read from a JSON file.

use std::fs;
use std::path::{Path, PathBuf};

use feedcap_core::{InputClass, OptimizerOptions};
use serde::{Deserialize, Serialize};

use crate::error::{config, CliError, Result};
use crate::reference::ChiSource;
use crate::spec::ChannelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Chi,
    EbTest,
    VerifyFeedback,
    VerifyEb,
    ExploreEntangled,
    AdditivityCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Chi => "chi",
            Command::EbTest => "eb-test",
            Command::VerifyFeedback => "verify-feedback",
            Command::VerifyEb => "verify-eb",
            Command::ExploreEntangled => "explore-entangled",
            Command::AdditivityCheck => "additivity-check",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub patience: usize,
    pub initial_step: f64,
    /// Defaults to `d_in^2`.
    pub ensemble_size: Option<usize>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        let o = OptimizerOptions::default();
        Self {
            restarts: o.restarts,
            max_iters: o.max_iters,
            tol: o.tol,
            patience: o.patience,
            initial_step: o.initial_step,
            ensemble_size: None,
        }
    }
}

impl OptimizerConfig {
    pub fn options(&self, seed: u64) -> OptimizerOptions {
        OptimizerOptions {
            restarts: self.restarts,
            max_iters: self.max_iters,
            tol: self.tol,
            patience: self.patience,
            seed,
            initial_step: self.initial_step,
            initial: None,
        }
    }
}

/// Bisection of a one-parameter zoo family for the EB threshold.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BisectConfig {
    pub family: String,
    #[serde(default = "two")]
    pub dim: usize,
    #[serde(default)]
    pub lo: f64,
    #[serde(default = "one")]
    pub hi: f64,
    #[serde(default = "bisect_tol")]
    pub tol: f64,
}

fn two() -> usize {
    2
}
fn one() -> f64 {
    1.0
}
fn bisect_tol() -> f64 {
    1e-9
}
fn default_trials() -> usize {
    100
}
fn default_messages() -> usize {
    4
}
fn default_tol() -> f64 {
    1e-6
}
fn default_resolution() -> usize {
    24
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Channel for single-channel commands, or both uses of a protocol.
    #[serde(default)]
    pub channel: Option<String>,
    #[serde(default)]
    pub omega: Option<String>,
    #[serde(default)]
    pub lambda: Option<String>,
    #[serde(default)]
    pub protocol: Option<PathBuf>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_messages")]
    pub messages: usize,
    #[serde(default)]
    pub seed: u64,
    /// Input classes for random protocols; empty means the command default.
    #[serde(default)]
    pub classes: Vec<String>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    /// Base tolerance of the bound checks.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Allowance for grid references; defaults to 2e-3.
    #[serde(default)]
    pub slack: Option<f64>,
    #[serde(default = "default_resolution")]
    pub grid_resolution: usize,
    #[serde(default)]
    pub chi_source: ChiSource,
    #[serde(default)]
    pub chi1: Option<f64>,
    #[serde(default)]
    pub chi2: Option<f64>,
    #[serde(default)]
    pub bisect: Option<BisectConfig>,
    /// Report directory; the summary goes to stdout when unset.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            channel: None,
            omega: None,
            lambda: None,
            protocol: None,
            trials: default_trials(),
            messages: default_messages(),
            seed: 0,
            classes: Vec::new(),
            optimizer: OptimizerConfig::default(),
            tol: default_tol(),
            slack: None,
            grid_resolution: default_resolution(),
            chi_source: ChiSource::Auto,
            chi1: None,
            chi2: None,
            bisect: None,
            out: None,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        serde_json::from_str(text).map_err(|e| e.to_string())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Parse {
            path: path.into(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|message| CliError::Parse {
            path: path.into(),
            message,
        })
    }

    pub fn channel_spec(&self) -> Result<ChannelSpec> {
        self.channel
            .as_deref()
            .ok_or_else(|| config(format!("{} needs a channel", self.command.name())))?
            .parse()
    }

    /// `(omega, lambda)`, each falling back to `channel`.
    pub fn protocol_specs(&self) -> Result<(ChannelSpec, ChannelSpec)> {
        let pick = |leg: &Option<String>, name: &str| -> Result<ChannelSpec> {
            leg.as_deref()
                .or(self.channel.as_deref())
                .ok_or_else(|| {
                    config(format!("{} needs {name} (or channel)", self.command.name()))
                })?
                .parse()
        };
        Ok((pick(&self.omega, "omega")?, pick(&self.lambda, "lambda")?))
    }

    pub fn input_classes(&self) -> Result<Vec<InputClass>> {
        if self.classes.is_empty() {
            return Ok(match self.command {
                Command::VerifyEb | Command::ExploreEntangled => vec![InputClass::Entangled],
                _ => vec![InputClass::Product, InputClass::Separable],
            });
        }
        self.classes
            .iter()
            .map(|c| c.parse().map_err(|e| config(format!("classes: {e}"))))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config(format!("{name} must be positive, got {v}")))
            }
        };
        if self.trials == 0 {
            return Err(config("trials must be at least 1"));
        }
        if self.messages < 2 {
            return Err(config("messages must be at least 2"));
        }
        positive("tol", self.tol)?;
        if let Some(s) = self.slack {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(config(format!("slack must be non-negative, got {s}")));
            }
        }
        if self.grid_resolution < 2 {
            return Err(config("grid_resolution must be at least 2"));
        }
        let o = &self.optimizer;
        if o.restarts == 0 || o.max_iters == 0 {
            return Err(config(
                "optimizer restarts and max_iters must be at least 1",
            ));
        }
        positive("optimizer.tol", o.tol)?;
        positive("optimizer.initial_step", o.initial_step)?;
        if o.ensemble_size.is_some_and(|n| n < 2) {
            return Err(config("optimizer.ensemble_size must be at least 2"));
        }
        if let Some(p) = &self.protocol {
            if !p.is_file() {
                return Err(CliError::Parse {
                    path: p.clone(),
                    message: "protocol file not found".into(),
                });
            }
        }
        if let Some(b) = &self.bisect {
            positive("bisect.tol", b.tol)?;
            if !(b.lo < b.hi) {
                return Err(config("bisect: lo must be below hi"));
            }
        }
        self.input_classes()?;
        match self.command {
            Command::Chi | Command::ExploreEntangled | Command::AdditivityCheck => {
                self.channel_spec()?;
            }
            Command::EbTest => {
                if self.channel.is_none() && self.bisect.is_none() {
                    return Err(config("eb-test needs a channel or a bisection family"));
                }
                if self.channel.is_some() {
                    self.channel_spec()?;
                }
            }
            Command::VerifyFeedback | Command::VerifyEb => {
                self.protocol_specs()?;
            }
        }
        Ok(())
    }
}
