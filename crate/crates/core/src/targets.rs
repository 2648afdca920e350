use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Measured statistics the model is calibrated against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasuredTargets {
    pub pl_db: f64,
    pub ds_s: f64,
    pub as_az_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub as_zen_deg: Option<f64>,
}

impl Default for MeasuredTargets {
    fn default() -> Self {
        Self::indoor_28ghz()
    }
}

/// Largest value a wrapped rms angular spread can take (360 / sqrt(3)).
pub const MAX_ANGULAR_SPREAD_DEG: f64 = 207.846_096_908_265_3;

impl MeasuredTargets {
    /// The indoor 28 GHz monostatic background measurement.
    pub fn indoor_28ghz() -> Self {
        Self {
            pl_db: -80.8125,
            ds_s: 32.92e-9,
            as_az_deg: 89.98,
            as_zen_deg: None,
        }
    }

    pub fn check(&self) -> Result<()> {
        let spread_ok = |v: f64| v.is_finite() && (0.0..=MAX_ANGULAR_SPREAD_DEG).contains(&v);
        if !self.pl_db.is_finite() {
            return Err(Error::Config("targets: pl_db must be finite".into()));
        }
        if !(self.ds_s.is_finite() && self.ds_s >= 0.0) {
            return Err(Error::Config("targets: ds_s must be nonnegative".into()));
        }
        if !spread_ok(self.as_az_deg) || !self.as_zen_deg.is_none_or(spread_ok) {
            return Err(Error::Config("targets: angular spread out of range".into()));
        }
        Ok(())
    }
}
