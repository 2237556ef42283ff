//! The flat JSON run configuration and its resolution into model parameters.

use std::path::{Path, PathBuf};

use dualdiv::classical_exit::PremiumExtension;
use dualdiv::model::{TabulatedCost, TabulatedDensity};
use dualdiv::{CostFunction, JumpLaw, ModelParams, SimConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// Every knob of every command. Unused keys are kept so each output carries
/// the complete resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `p1`, `p2`, `p3`, `constant` or `file`.
    pub cost: String,
    pub c: f64,
    pub cost_file: Option<PathBuf>,
    pub cost_constant_extension: bool,
    pub lambda: f64,
    pub q: f64,
    /// Exponential gain rate; ignored when `density_file` is set.
    pub mu: f64,
    pub density_file: Option<PathBuf>,
    pub beta: Option<f64>,
    pub x0: Option<f64>,
    /// Grid step for the ODE and duality routes; `β / 2000` if absent.
    pub grid_step: Option<f64>,
    pub fredholm_nodes: usize,
    pub paths: usize,
    pub seed: u64,
    pub horizon: Option<f64>,
    pub clock_cells: usize,
    pub beta_max: Option<f64>,
    pub root_tol: f64,
    pub hjb_tol: f64,
    /// `constant` or `linear`.
    pub extension: String,
    pub extension_slope: Option<f64>,
    /// Exit level for the classical exit functions; `β` if absent.
    pub exit_level: Option<f64>,
    pub sweep_param: String,
    pub sweep_from: f64,
    pub sweep_to: f64,
    pub sweep_points: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            cost: "p1".into(),
            c: 2.0,
            cost_file: None,
            cost_constant_extension: true,
            lambda: 0.1,
            q: 0.1,
            mu: 0.01,
            density_file: None,
            beta: None,
            x0: None,
            grid_step: None,
            fredholm_nodes: dualdiv::barrier_value::DEFAULT_FREDHOLM_NODES,
            paths: 100_000,
            seed: 1,
            horizon: None,
            clock_cells: SimConfig::default().clock_cells,
            beta_max: None,
            root_tol: 1e-6,
            hjb_tol: 1e-3,
            extension: "constant".into(),
            extension_slope: None,
            exit_level: None,
            sweep_param: "q".into(),
            sweep_from: 0.08,
            sweep_to: 0.17,
            sweep_points: 10,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.display().to_string(), source })?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn cost_function(&self) -> CliResult<CostFunction> {
        Ok(match self.cost.as_str() {
            "p1" => CostFunction::p1(self.c),
            "p2" => CostFunction::p2(self.c),
            "p3" => CostFunction::p3(self.c),
            "constant" => CostFunction::constant(self.c),
            "file" => {
                let path = self.cost_file.as_ref().ok_or_else(|| CliError::Config("cost = file needs cost_file".into()))?;
                CostFunction::Tabulated(TabulatedCost::from_csv(path, self.cost_constant_extension)?)
            }
            other => return Err(CliError::Config(format!("unknown cost kind {other:?}"))),
        })
    }

    pub fn jump_law(&self) -> CliResult<JumpLaw> {
        Ok(match &self.density_file {
            Some(path) => JumpLaw::Tabulated(TabulatedDensity::from_csv(path)?),
            None => JumpLaw::exponential(self.mu),
        })
    }

    pub fn params(&self) -> CliResult<ModelParams> {
        Ok(ModelParams::new(self.lambda, self.q, self.cost_function()?, self.jump_law()?))
    }

    pub fn require_beta(&self) -> CliResult<f64> {
        self.beta.ok_or_else(|| CliError::Config("this command needs a barrier (--beta)".into()))
    }

    pub fn require_x0(&self) -> CliResult<f64> {
        self.x0.ok_or_else(|| CliError::Config("this command needs an initial surplus (--x0)".into()))
    }

    pub fn step_for(&self, beta: f64) -> f64 {
        self.grid_step.unwrap_or(beta / dualdiv::barrier_value::DEFAULT_GRID_INTERVALS as f64)
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig { n_paths: self.paths, seed: self.seed, horizon: self.horizon, clock_cells: self.clock_cells }
    }

    pub fn premium_extension(&self) -> CliResult<PremiumExtension> {
        match self.extension.as_str() {
            "constant" => Ok(PremiumExtension::Constant),
            "linear" => match self.extension_slope {
                Some(slope) => Ok(PremiumExtension::Linear { slope }),
                None => Ok(PremiumExtension::tangent(&self.cost_function()?)),
            },
            other => Err(CliError::Config(format!("unknown extension {other:?}"))),
        }
    }

    pub fn to_compact_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let mut cfg = RunConfig::default();
        cfg.beta = Some(37.1);
        cfg.cost_file = Some("knots.csv".into());
        cfg.grid_step = Some(0.1 + 0.2);
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"lamda": 0.1}"#).is_err());
    }

    #[test]
    fn partial_files_fill_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"c": 3.0}"#).unwrap();
        assert_eq!(cfg.c, 3.0);
        assert_eq!(cfg.lambda, 0.1);
    }
}
