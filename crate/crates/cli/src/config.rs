//! Run configuration read from JSON.

use std::path::Path;

use chemoflow::domain::{
    validate_params, ConcentrationField, Confinement, Grid1D, ModelParams, ProbabilityDensity, ResponseFunction,
    SystemState, MIN_CELLS,
};
use chemoflow::stationary::{solve_stationary, StationaryResult};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: ParamsConfig,
    pub initial: InitialConfig,
    pub stepping: SteppingConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub half_width: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiName {
    Linear,
    Log,
    Rational,
}

impl PhiName {
    pub fn response(self) -> ResponseFunction {
        match self {
            Self::Linear => ResponseFunction::Linear,
            Self::Log => ResponseFunction::LogSaturation,
            Self::Rational => ResponseFunction::RationalSaturation,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub lambda0: f64,
    #[serde(default)]
    pub center: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    pub epsilon: f64,
    pub kappa: f64,
    pub phi: PhiName,
    pub potential: PotentialConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum UInit {
    GaussianMixture {
        weights: Vec<f64>,
        means: Vec<f64>,
        sigmas: Vec<f64>,
    },
    /// Density of the stationary pair for the configured parameters.
    Stationary {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum VInit {
    Gaussian {
        amplitude: f64,
        mean: f64,
        sigma: f64,
    },
    Zero {},
    Hat {
        amplitude: f64,
        center: f64,
        half_width: f64,
    },
    Stationary {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub u: UInit,
    pub v: VInit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SteppingConfig {
    pub tau: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_every")]
    pub every_k_steps: usize,
}

fn default_directory() -> String {
    "chemoflow_out".into()
}

fn default_every() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: default_directory(),
            every_k_steps: default_every(),
        }
    }
}

fn finite(path: &str, x: f64) -> Result<(), CliError> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: value {x} is not finite")))
    }
}

fn positive(path: &str, x: f64) -> Result<(), CliError> {
    finite(path, x)?;
    if x > 0.0 {
        Ok(())
    } else {
        Err(CliError::Config(format!("{path}: must be positive, got {x}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de)
            .map_err(|e| CliError::Config(format!("{}: {}", e.path(), e.inner())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        positive("grid.R", self.grid.half_width)?;
        if self.grid.n < MIN_CELLS {
            return Err(CliError::Config(format!(
                "grid.n: need at least {MIN_CELLS} cells, got {}",
                self.grid.n
            )));
        }
        finite("params.epsilon", self.params.epsilon)?;
        if self.params.epsilon < 0.0 {
            return Err(CliError::Config("params.epsilon: must be nonnegative".into()));
        }
        positive("params.kappa", self.params.kappa)?;
        positive("params.potential.lambda0", self.params.potential.lambda0)?;
        finite("params.potential.center", self.params.potential.center)?;
        positive("stepping.tau", self.stepping.tau)?;
        positive("stepping.t_end", self.stepping.t_end)?;
        if self.stepping.t_end < self.stepping.tau {
            return Err(CliError::Config("stepping.t_end: must be at least stepping.tau".into()));
        }
        if self.output.every_k_steps == 0 {
            return Err(CliError::Config("output.every_k_steps: must be at least 1".into()));
        }
        if let UInit::GaussianMixture { weights, means, sigmas } = &self.initial.u {
            if weights.is_empty() || weights.len() != means.len() || weights.len() != sigmas.len() {
                return Err(CliError::Config(
                    "initial.u: weights, means and sigmas must be nonempty lists of equal length".into(),
                ));
            }
            for (i, ((&w, &m), &s)) in weights.iter().zip(means).zip(sigmas).enumerate() {
                finite(&format!("initial.u.weights[{i}]"), w)?;
                if w < 0.0 {
                    return Err(CliError::Config(format!("initial.u.weights[{i}]: must be nonnegative")));
                }
                finite(&format!("initial.u.means[{i}]"), m)?;
                positive(&format!("initial.u.sigmas[{i}]"), s)?;
            }
            let total: f64 = weights.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(CliError::Config(format!(
                    "initial.u.weights: must sum to 1, got {total}"
                )));
            }
        }
        match &self.initial.v {
            VInit::Gaussian { amplitude, mean, sigma } => {
                finite("initial.v.amplitude", *amplitude)?;
                finite("initial.v.mean", *mean)?;
                positive("initial.v.sigma", *sigma)?;
            }
            VInit::Hat {
                amplitude,
                center,
                half_width,
            } => {
                finite("initial.v.amplitude", *amplitude)?;
                finite("initial.v.center", *center)?;
                positive("initial.v.half_width", *half_width)?;
            }
            VInit::Zero {} | VInit::Stationary {} => {}
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        ((self.stepping.t_end / self.stepping.tau).round() as usize).max(1)
    }

    pub fn grid(&self) -> Result<Grid1D<f64>, CliError> {
        Grid1D::new(self.grid.half_width, self.grid.n).map_err(|e| CliError::Config(format!("grid: {e}")))
    }

    /// Coefficients, rejected when a sampled standing assumption fails.
    pub fn params(&self, grid: &Grid1D<f64>) -> Result<ModelParams<f64>, CliError> {
        let pc = &self.params;
        let p = ModelParams::new(
            pc.epsilon,
            pc.kappa,
            pc.phi.response(),
            Confinement::quadratic(pc.potential.lambda0, pc.potential.center),
        )
        .map_err(|e| CliError::Config(format!("params: {e}")))?;
        let report = validate_params(&p, grid);
        if let Some(bad) = report.checks.iter().find(|c| !c.passed) {
            return Err(CliError::Config(format!(
                "params: assumption {} fails ({}) at {:?}",
                bad.name, bad.detail, bad.witness
            )));
        }
        Ok(p)
    }

    pub fn initial_state(
        &self,
        grid: Grid1D<f64>,
        stationary: &StationaryResult<f64>,
    ) -> Result<SystemState<f64>, CliError> {
        let u = match &self.initial.u {
            UInit::GaussianMixture { weights, means, sigmas } => ProbabilityDensity::from_function(grid, |x| {
                weights
                    .iter()
                    .zip(means)
                    .zip(sigmas)
                    .map(|((&w, &m), &s)| w * (-(x - m).powi(2) / (2.0 * s * s)).exp() / s)
                    .sum()
            })
            .map_err(|e| CliError::Config(format!("initial.u: {e}")))?,
            UInit::Stationary {} => stationary.state.u.clone(),
        };
        let v = match &self.initial.v {
            VInit::Gaussian { amplitude, mean, sigma } => ConcentrationField::from_function(grid, |x| {
                amplitude * (-(x - mean).powi(2) / (2.0 * sigma * sigma)).exp()
            }),
            VInit::Zero {} => Ok(ConcentrationField::zeros(grid)),
            VInit::Hat {
                amplitude,
                center,
                half_width,
            } => ConcentrationField::from_function(grid, |x| {
                amplitude * (1.0 - (x - center).abs() / half_width).max(0.0)
            }),
            VInit::Stationary {} => Ok(stationary.state.v.clone()),
        }
        .map_err(|e| CliError::Config(format!("initial.v: {e}")))?;
        SystemState::new(u, v).map_err(|e| CliError::Config(format!("initial: {e}")))
    }

    /// Stationary pair for the configured parameters.
    pub fn stationary(&self, p: &ModelParams<f64>, grid: &Grid1D<f64>) -> Result<StationaryResult<f64>, CliError> {
        solve_stationary(p, grid, 1e-12).map_err(|e| CliError::Solver(format!("stationary solve: {e}")))
    }

    /// Sets a swept parameter from its textual value.
    pub fn with_param(&self, name: &str, value: &str) -> Result<Self, CliError> {
        let mut cfg = self.clone();
        let bad = |e: String| CliError::Config(format!("--values: {value:?} for {name}: {e}"));
        match name {
            "epsilon" => cfg.params.epsilon = value.parse().map_err(|e| bad(format!("{e}")))?,
            "tau" => cfg.stepping.tau = value.parse().map_err(|e| bad(format!("{e}")))?,
            "n" => cfg.grid.n = value.parse().map_err(|e| bad(format!("{e}")))?,
            other => {
                return Err(CliError::Config(format!(
                    "--param: unknown parameter {other:?} (expected epsilon, tau or n)"
                )))
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
