//! Scenario parameter tables and their resolution at a carrier frequency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Built-in Indoor Hotspot NLoS table.
pub const INH_NLOS_TOML: &str = include_str!("../../data/inh_nlos.toml");

/// A parameter that is either constant or linear in `log10(1 + fc)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FreqParam {
    Constant(f64),
    LogLinear { log_fc_coeff: f64, intercept: f64 },
}

impl FreqParam {
    pub fn at(&self, fc_ghz: f64) -> f64 {
        match *self {
            FreqParam::Constant(v) => v,
            FreqParam::LogLinear {
                log_fc_coeff,
                intercept,
            } => log_fc_coeff * (1.0 + fc_ghz).log10() + intercept,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcessDelay {
    pub enabled: bool,
    /// Mean of log10(delta_tau / 1 s).
    pub lg_mu: f64,
    pub lg_sigma: f64,
}

impl Default for ExcessDelay {
    fn default() -> Self {
        Self {
            enabled: false,
            lg_mu: -8.6,
            lg_sigma: 0.1,
        }
    }
}

/// Scenario table as written in the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioTable {
    pub name: String,
    pub fc_ghz: f64,
    #[serde(default)]
    pub fc_floor_ghz: f64,
    pub n_clusters: usize,
    pub m_rays: usize,
    pub r_tau: f64,
    pub cluster_shadow_db: f64,
    pub c_asd_deg: f64,
    pub c_zsd_deg: f64,
    pub c_phi: f64,
    pub c_theta: f64,
    #[serde(default)]
    pub zod_offset_deg: f64,
    pub lg_ds_mu: FreqParam,
    pub lg_ds_sigma: FreqParam,
    pub lg_asd_mu: FreqParam,
    pub lg_asd_sigma: FreqParam,
    pub lg_zsd_mu: FreqParam,
    pub lg_zsd_sigma: FreqParam,
    pub asd_max_deg: f64,
    pub zsd_max_deg: f64,
    pub sf_sigma_db: f64,
    pub xpr_mu_db: f64,
    pub xpr_sigma_db: f64,
    pub ray_offsets: Vec<f64>,
    #[serde(default = "default_true")]
    pub zenith_spread_enabled: bool,
    #[serde(default)]
    pub doppler_hz: f64,
    #[serde(default)]
    pub excess_delay: ExcessDelay,
}

fn default_true() -> bool {
    true
}

impl ScenarioTable {
    pub fn inh_nlos() -> Self {
        toml::from_str(INH_NLOS_TOML).expect("built-in scenario table parses")
    }

    /// Evaluates every frequency-dependent entry at the table's `fc_ghz`.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let fc_eval = self.fc_ghz.max(self.fc_floor_ghz);
        let sc = ScenarioConfig {
            name: self.name.clone(),
            fc_ghz: self.fc_ghz,
            n_clusters: self.n_clusters,
            m_rays: self.m_rays,
            r_tau: self.r_tau,
            cluster_shadow_db: self.cluster_shadow_db,
            c_asd_deg: self.c_asd_deg,
            c_zsd_deg: self.c_zsd_deg,
            c_phi: self.c_phi,
            c_theta: self.c_theta,
            zod_offset_deg: self.zod_offset_deg,
            lg_ds_mu: self.lg_ds_mu.at(fc_eval),
            lg_ds_sigma: self.lg_ds_sigma.at(fc_eval),
            lg_asd_mu: self.lg_asd_mu.at(fc_eval),
            lg_asd_sigma: self.lg_asd_sigma.at(fc_eval),
            lg_zsd_mu: self.lg_zsd_mu.at(fc_eval),
            lg_zsd_sigma: self.lg_zsd_sigma.at(fc_eval),
            asd_max_deg: self.asd_max_deg,
            zsd_max_deg: self.zsd_max_deg,
            sf_sigma_db: self.sf_sigma_db,
            xpr_mu_db: self.xpr_mu_db,
            xpr_sigma_db: self.xpr_sigma_db,
            ray_offsets: self.ray_offsets.clone(),
            zenith_spread_enabled: self.zenith_spread_enabled,
            doppler_hz: self.doppler_hz,
            excess_delay: self.excess_delay,
        };
        sc.check()?;
        Ok(sc)
    }
}

/// Scenario parameters resolved at one carrier frequency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub fc_ghz: f64,
    pub n_clusters: usize,
    pub m_rays: usize,
    /// Delay scaling factor.
    pub r_tau: f64,
    /// Per-cluster shadowing standard deviation [dB].
    pub cluster_shadow_db: f64,
    pub c_asd_deg: f64,
    pub c_zsd_deg: f64,
    pub c_phi: f64,
    pub c_theta: f64,
    pub zod_offset_deg: f64,
    pub lg_ds_mu: f64,
    pub lg_ds_sigma: f64,
    pub lg_asd_mu: f64,
    pub lg_asd_sigma: f64,
    pub lg_zsd_mu: f64,
    pub lg_zsd_sigma: f64,
    pub asd_max_deg: f64,
    pub zsd_max_deg: f64,
    pub sf_sigma_db: f64,
    pub xpr_mu_db: f64,
    pub xpr_sigma_db: f64,
    pub ray_offsets: Vec<f64>,
    /// When false every path keeps the RP's ZoD exactly.
    pub zenith_spread_enabled: bool,
    pub doppler_hz: f64,
    pub excess_delay: ExcessDelay,
}

impl ScenarioConfig {
    /// Built-in InH NLoS table at its default 28 GHz carrier.
    pub fn inh_nlos() -> Self {
        ScenarioTable::inh_nlos()
            .resolve()
            .expect("built-in scenario table is valid")
    }

    /// Median delay spread, `10^lg_ds_mu` [s].
    pub fn median_ds_s(&self) -> f64 {
        10f64.powf(self.lg_ds_mu)
    }

    /// Median azimuth departure spread, `10^lg_asd_mu` [deg].
    pub fn median_asd_deg(&self) -> f64 {
        10f64.powf(self.lg_asd_mu)
    }

    pub fn wavelength_m(&self) -> f64 {
        crate::geometry::SPEED_OF_LIGHT / (self.fc_ghz * 1e9)
    }

    pub fn paths_per_subchannel(&self) -> usize {
        self.n_clusters * self.m_rays
    }

    pub fn check(&self) -> Result<()> {
        let err = |m: String| Err(Error::Config(format!("scenario {}: {m}", self.name)));
        if !(self.fc_ghz.is_finite() && self.fc_ghz > 0.0) {
            return err("fc_ghz must be positive".into());
        }
        if self.n_clusters == 0 || self.m_rays == 0 {
            return err("n_clusters and m_rays must be at least 1".into());
        }
        if !(self.r_tau > 1.0) {
            return err(format!("r_tau must exceed 1, got {}", self.r_tau));
        }
        if self.ray_offsets.len() != self.m_rays {
            return err(format!(
                "{} ray offsets for {} rays",
                self.ray_offsets.len(),
                self.m_rays
            ));
        }
        let sigmas = [
            self.cluster_shadow_db,
            self.lg_ds_sigma,
            self.lg_asd_sigma,
            self.lg_zsd_sigma,
            self.sf_sigma_db,
            self.xpr_sigma_db,
            self.excess_delay.lg_sigma,
        ];
        if sigmas.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return err("standard deviations must be finite and nonnegative".into());
        }
        if !(self.c_phi > 0.0 && self.c_theta > 0.0) {
            return err("angle scaling factors must be positive".into());
        }
        Ok(())
    }
}
