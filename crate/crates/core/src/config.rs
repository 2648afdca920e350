//! The run configuration file: scenario, targets, constraints, optimizer
//! settings and an optional fixed placement, in TOML.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbsm::{ScenarioConfig, ScenarioTable};
use crate::optimizer::GaConfig;
use crate::placement::{ConstraintSet, RpPlacement};
use crate::targets::MeasuredTargets;

/// The commented default configuration.
pub const DEFAULT_RUN_TOML: &str = include_str!("../data/default_run.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSection {
    /// Name of a built-in table. Ignored when `table` is set.
    pub preset: String,
    /// Scenario table file, relative to the configuration file.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fc_ghz: Option<f64>,
    pub zenith_spread_enabled: bool,
    pub excess_delay_enabled: bool,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        Self {
            preset: "inh_nlos".into(),
            table: None,
            fc_ghz: Some(28.0),
            zenith_spread_enabled: false,
            excess_delay_enabled: false,
        }
    }
}

impl ScenarioSection {
    /// Loads the table, applies the overrides and resolves it.
    pub fn resolve(&self, base_dir: &Path) -> Result<ScenarioConfig> {
        let mut table = match &self.table {
            Some(rel) => {
                let path = base_dir.join(rel);
                let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
                toml::from_str::<ScenarioTable>(&text)?
            }
            None => match self.preset.as_str() {
                "inh_nlos" => ScenarioTable::inh_nlos(),
                other => return Err(Error::Config(format!("unknown scenario preset {other:?}"))),
            },
        };
        if let Some(fc) = self.fc_ghz {
            table.fc_ghz = fc;
        }
        table.zenith_spread_enabled = self.zenith_spread_enabled;
        table.excess_delay.enabled = self.excess_delay_enabled;
        table.resolve()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Monte Carlo realizations for `simulate` and the reproduction runs.
    pub realizations: usize,
    pub include_sf: bool,
    pub scenario: ScenarioSection,
    pub targets: MeasuredTargets,
    pub constraints: ConstraintSet,
    pub ga: GaConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub placement: Option<RpPlacement>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            realizations: 200,
            include_sf: false,
            scenario: ScenarioSection::default(),
            targets: MeasuredTargets::indoor_28ghz(),
            constraints: ConstraintSet::default(),
            ga: GaConfig::default(),
            placement: None,
        }
    }
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    /// Reads a configuration file. Relative scenario table paths are
    /// resolved against the file's directory by [`RunConfig::scenario`].
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn check(&self) -> Result<()> {
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        self.targets.check()?;
        self.ga_config().check()
    }

    pub fn scenario(&self, base_dir: &Path) -> Result<ScenarioConfig> {
        self.scenario.resolve(base_dir)
    }

    /// Optimizer settings with the run-level seed, constraints and SF flag.
    pub fn ga_config(&self) -> GaConfig {
        GaConfig {
            constraints: self.constraints.clone(),
            root_seed: self.seed,
            include_sf: self.include_sf,
            ..self.ga.clone()
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("run configuration serializes")
    }
}
