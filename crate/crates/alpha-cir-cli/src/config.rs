//! Run configuration: one TOML file drives every subcommand.
//!
//! Layout (sections map one-to-one onto the library's parameter types):
//!
//! ```toml
//! [model]                      # SDE coefficients
//! a = 1.03
//! k = 4.0
//! sigma1 = 0.4
//! sigma2 = 0.5
//! alpha = 1.9
//! x0 = 0.03
//! # trunc_h = 10.0             # optional jump-coefficient cap
//!
//! [driver]                     # jump-driver law
//! kind = "stable"              # or "compensated-poisson" with `intensity`
//! alpha = 1.9
//!
//! [grid]                       # time grid for `simulate` and the probes
//! horizon = 1.0
//! n = 128
//!
//! [mc]                         # Monte Carlo shape for `strong-error`/`sweep`
//! num_paths = 65536
//! base_grids = [128, 256, 512, 1024]
//! seed = 42
//! parallel_workers = 1
//!
//! [probe]                      # only read by `probe`
//! kind = "mgf"                 # "dneg-probability" | "moment" | "mgf"
//!
//! [[sweep]]                    # only read by `sweep`
//! sigma2 = 0.1
//! ```
//!
//! `Deserialize` bypasses the library's checked constructors, so
//! [`RunConfig::parse`] re-validates everything before handing the
//! configuration to a command.

use serde::{Deserialize, Serialize};

use alpha_cir::experiments::{MCConfig, ProbeKind};
use alpha_cir::model::{validate, DriverSpec, GridSpec, ModelParams};

use crate::CliError;

/// Options for the `probe` subcommand. Fields irrelevant to the selected
/// probe kind are ignored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Which probe to run.
    pub kind: ProbeKind,
    /// Moment order for the `moment` probe.
    #[serde(default = "default_beta")]
    pub beta: f64,
    /// Laplace arguments for the `mgf` probe.
    #[serde(default = "default_q_list")]
    pub q_list: Vec<f64>,
    /// Step size for the `mgf` probe; defaults to the `[grid]` step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Path budget for the `dneg-probability` and `moment` probes.
    #[serde(default = "default_probe_paths")]
    pub num_paths: usize,
    /// Draw budget per Laplace argument for the `mgf` probe.
    #[serde(default = "default_probe_draws")]
    pub num_draws: usize,
}

fn default_beta() -> f64 {
    1.0
}

fn default_q_list() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_probe_paths() -> usize {
    1 << 16
}

fn default_probe_draws() -> usize {
    1_000_000
}

/// One sweep entry: the model coefficients it overrides. Unset fields keep
/// the `[model]` value (a base `trunc_h` can therefore be replaced but not
/// removed). `label` only affects file naming and console output.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_h: Option<f64>,
}

impl SweepEntry {
    /// The base model with this entry's overrides applied.
    pub fn apply(&self, base: &ModelParams) -> ModelParams {
        ModelParams {
            a: self.a.unwrap_or(base.a),
            k: self.k.unwrap_or(base.k),
            sigma1: self.sigma1.unwrap_or(base.sigma1),
            sigma2: self.sigma2.unwrap_or(base.sigma2),
            alpha: self.alpha.unwrap_or(base.alpha),
            x0: self.x0.unwrap_or(base.x0),
            trunc_h: self.trunc_h.or(base.trunc_h),
        }
    }
}

/// Everything a run needs, parsed from one TOML file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelParams,
    pub driver: DriverSpec,
    pub grid: GridSpec,
    pub mc: MCConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sweep: Vec<SweepEntry>,
}

impl RunConfig {
    /// Parses and validates a configuration file.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: RunConfig =
            toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Serializes back to TOML; `parse(emit(config))` reproduces `config`
    /// exactly.
    pub fn emit(&self) -> String {
        toml::to_string_pretty(self).expect("a validated config serializes")
    }

    /// Re-checks every model, grid, and driver invariant.
    pub fn validate(&self) -> Result<(), CliError> {
        validate(&self.model, &self.grid).into_result()?;
        if !self.driver.consistent_with(&self.model) {
            return Err(CliError::Config(format!(
                "a stable [driver] must share the model's alpha = {}",
                self.model.alpha
            )));
        }
        Ok(())
    }
}
