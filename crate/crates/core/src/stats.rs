//! Channel statistics: path loss, rms delay spread, circular angular spread,
//! power-angular-delay profiles, normal fits and a synthetic measurement
//! generator.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal as NormalDist};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::geometry::wrap360;
use crate::rng::RandomStream;

/// One effective path: delay, departure angles and linear power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathEntry {
    pub delay_s: f64,
    pub aod_deg: f64,
    pub zod_deg: Option<f64>,
    pub power_lin: f64,
}

/// A measured or modeled set of effective paths.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PathList {
    pub paths: Vec<PathEntry>,
}

impl PathList {
    pub fn new(paths: Vec<PathEntry>) -> Self {
        Self { paths }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.power_lin).sum()
    }

    /// Multiplies every power so the total equals `10^(pl_db / 10)`.
    pub fn rescale_to_pl(&mut self, pl_db: f64) -> Result<()> {
        let total = self.total_power();
        if !(total > 0.0) {
            return Err(Error::Domain(
                "cannot rescale a path list with zero power".into(),
            ));
        }
        let factor = 10f64.powf(pl_db / 10.0) / total;
        for p in &mut self.paths {
            p.power_lin *= factor;
        }
        Ok(())
    }

    fn powers(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.power_lin).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AngleAxis {
    Azimuth,
    Zenith,
}

/// PL, DS and angular spreads of a path set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub pl_db: f64,
    pub ds_s: f64,
    pub as_az_deg: f64,
    pub as_zen_deg: Option<f64>,
}

fn require_paths(paths: &PathList) -> Result<()> {
    if paths.is_empty() {
        return Err(Error::MalformedInput("path list is empty".into()));
    }
    if !(paths.total_power() > 0.0) {
        return Err(Error::Domain("path list has no power".into()));
    }
    Ok(())
}

/// `10 log10` of the summed linear path powers.
pub fn estimate_pl(paths: &PathList) -> Result<f64> {
    require_paths(paths)?;
    Ok(10.0 * paths.total_power().log10())
}

/// Power-weighted rms delay spread about the power-weighted mean delay [s].
pub fn rms_delay_spread(paths: &PathList) -> Result<f64> {
    require_paths(paths)?;
    let delays: Vec<f64> = paths.paths.iter().map(|p| p.delay_s).collect();
    Ok(weighted_rms(&delays, &paths.powers()))
}

/// Power-weighted rms spread of `values`.
pub fn weighted_rms(values: &[f64], powers: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    let mean = values.iter().zip(powers).map(|(v, p)| v * p).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(powers)
        .map(|(v, p)| (v - mean) * (v - mean) * p)
        .sum::<f64>()
        / total;
    var.max(0.0).sqrt()
}

/// Rotation-minimized, wrapped rms angular spread [deg].
///
/// For each trial reference rotation on a 1 degree grid, angles are wrapped
/// into [-180, 180) around the reference, their power-weighted mean is taken,
/// and the rms of the wrapped deviations about that mean is computed. The
/// smallest value over all rotations is returned. The grid is anchored at the
/// power-weighted circular mean direction, which makes the result invariant
/// to a global rotation of all angles.
pub fn angular_spread_deg(angles_deg: &[f64], powers: &[f64]) -> f64 {
    let total: f64 = powers.iter().sum();
    if angles_deg.len() < 2 || !(total > 0.0) {
        return 0.0;
    }
    let (mut s, mut c) = (0.0, 0.0);
    for (a, p) in angles_deg.iter().zip(powers) {
        let (sa, ca) = a.to_radians().sin_cos();
        s += p * sa;
        c += p * ca;
    }
    let anchor = s.atan2(c).to_degrees();
    let relative: Vec<f64> = angles_deg.iter().map(|a| wrap360(a - anchor)).collect();

    let wrap = |x: f64| {
        if x >= 180.0 {
            x - 360.0
        } else if x < -180.0 {
            x + 360.0
        } else {
            x
        }
    };
    let mut best = f64::INFINITY;
    for k in 0..360 {
        let shift = k as f64;
        let mean = relative
            .iter()
            .zip(powers)
            .map(|(r, p)| wrap(r - shift) * p)
            .sum::<f64>()
            / total;
        let var = relative
            .iter()
            .zip(powers)
            .map(|(r, p)| {
                let dev = wrap(wrap(r - shift) - mean);
                dev * dev * p
            })
            .sum::<f64>()
            / total;
        best = best.min(var);
    }
    best.max(0.0).sqrt()
}

/// Angular spread of a path list along one axis. Missing zenith angles
/// count as 90 degrees.
pub fn circular_angle_spread(paths: &PathList, axis: AngleAxis) -> Result<f64> {
    require_paths(paths)?;
    let angles: Vec<f64> = paths
        .paths
        .iter()
        .map(|p| match axis {
            AngleAxis::Azimuth => p.aod_deg,
            AngleAxis::Zenith => p.zod_deg.unwrap_or(90.0),
        })
        .collect();
    Ok(angular_spread_deg(&angles, &paths.powers()))
}

/// PL, DS, azimuth AS and (if every path has a zenith) zenith AS.
pub fn channel_stats(paths: &PathList) -> Result<ChannelStats> {
    let as_zen_deg = if paths.paths.iter().all(|p| p.zod_deg.is_some()) {
        Some(circular_angle_spread(paths, AngleAxis::Zenith)?)
    } else {
        None
    };
    Ok(ChannelStats {
        pl_db: estimate_pl(paths)?,
        ds_s: rms_delay_spread(paths)?,
        as_az_deg: circular_angle_spread(paths, AngleAxis::Azimuth)?,
        as_zen_deg,
    })
}

/// `|v0 - v| / v0` in percent.
pub fn normalized_error(v0: f64, v: f64) -> Result<f64> {
    if !(v0 > 0.0) {
        return Err(Error::Domain(format!(
            "reference value must be positive, got {v0}"
        )));
    }
    Ok((v0 - v).abs() / v0 * 100.0)
}

/// Moment fit of a normal distribution plus its Kolmogorov-Smirnov distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mu: f64,
    pub sigma: f64,
    pub ks_distance: f64,
}

pub const MIN_FIT_SAMPLES: usize = 8;

pub fn fit_normal(samples: &[f64]) -> Result<NormalFit> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(Error::MalformedInput(format!(
            "normal fit needs at least {MIN_FIT_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::MalformedInput("non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let mu = samples.iter().sum::<f64>() / n;
    let sigma = (samples.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / n).sqrt();

    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let ks_distance = if sigma > 0.0 {
        let dist = Normal::new(mu, sigma).map_err(|e| Error::Domain(e.to_string()))?;
        sorted
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = dist.cdf(x);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    } else {
        // Point mass fitted by a point mass.
        0.0
    };
    Ok(NormalFit {
        mu,
        sigma,
        ks_distance,
    })
}

/// Power-angular-delay profile on a uniform angle grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PadpGrid {
    pub angles_deg: Vec<f64>,
    pub delays_s: Vec<f64>,
    /// `power[angle][delay]`, linear.
    pub power: Vec<Vec<f64>>,
}

/// Squared magnitude of per-rotation CIRs. `cir[i][k]` is the tap at
/// `angles_deg[i]` and `delays_s[k]`.
pub fn padp(angles_deg: &[f64], delays_s: &[f64], cir: &[Vec<Complex64>]) -> Result<PadpGrid> {
    if cir.len() != angles_deg.len() {
        return Err(Error::MalformedInput(format!(
            "{} CIR rows for {} rotation angles",
            cir.len(),
            angles_deg.len()
        )));
    }
    if let Some(row) = cir.iter().position(|r| r.len() != delays_s.len()) {
        return Err(Error::MalformedInput(format!(
            "CIR row {row} has {} taps, expected {}",
            cir[row].len(),
            delays_s.len()
        )));
    }
    if angles_deg.len() > 2 {
        let step = angles_deg[1] - angles_deg[0];
        let uniform = angles_deg
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-9 * step.abs().max(1.0));
        if !uniform || step <= 0.0 {
            return Err(Error::MalformedInput(
                "rotation angles are not a uniform grid".into(),
            ));
        }
    }
    Ok(PadpGrid {
        angles_deg: angles_deg.to_vec(),
        delays_s: delays_s.to_vec(),
        power: cir
            .iter()
            .map(|row| row.iter().map(|h| h.norm_sqr()).collect())
            .collect(),
    })
}

impl PadpGrid {
    /// Bins path powers onto an angle/delay grid covering the path list.
    pub fn from_paths(paths: &PathList, angle_step_deg: f64, delay_step_s: f64) -> Result<Self> {
        require_paths(paths)?;
        if !(angle_step_deg > 0.0 && delay_step_s > 0.0) {
            return Err(Error::Domain("grid steps must be positive".into()));
        }
        let n_angles = (360.0 / angle_step_deg).round().max(1.0) as usize;
        let max_delay = paths.paths.iter().map(|p| p.delay_s).fold(0.0, f64::max);
        let n_delays = (max_delay / delay_step_s).floor() as usize + 1;
        let mut power = vec![vec![0.0; n_delays]; n_angles];
        for p in &paths.paths {
            let ai = ((wrap360(p.aod_deg) / angle_step_deg).round() as usize) % n_angles;
            let di = ((p.delay_s / delay_step_s).round() as usize).min(n_delays - 1);
            power[ai][di] += p.power_lin;
        }
        Ok(Self {
            angles_deg: (0..n_angles).map(|i| i as f64 * angle_step_deg).collect(),
            delays_s: (0..n_delays).map(|k| k as f64 * delay_step_s).collect(),
            power,
        })
    }
}

/// Parameters of the synthetic stand-in for a measured path list.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthMeasurementConfig {
    pub count: usize,
    pub delay_mean_s: f64,
    pub delay_std_s: f64,
    pub dynamic_range_db: f64,
    pub pl_db: f64,
}

impl Default for SynthMeasurementConfig {
    fn default() -> Self {
        Self {
            count: 302,
            delay_mean_s: 90.20e-9,
            delay_std_s: 36.39e-9,
            dynamic_range_db: 30.0,
            pl_db: -80.8125,
        }
    }
}

/// Draws a path list with normally distributed delays (negative draws
/// clamped to zero), uniform azimuths, log-uniform powers over the dynamic
/// range, rescaled to the requested PL.
pub fn synth_measurement(cfg: &SynthMeasurementConfig, stream: &RandomStream) -> Result<PathList> {
    if cfg.count == 0 {
        return Err(Error::MalformedInput(
            "synthetic measurement needs at least one path".into(),
        ));
    }
    let delay = NormalDist::new(cfg.delay_mean_s, cfg.delay_std_s)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = stream.rng();
    let paths = (0..cfg.count)
        .map(|_| {
            let delay_s = delay.sample(&mut rng).max(0.0);
            let aod_deg = rng.random::<f64>() * 360.0;
            let power_lin = 10f64.powf(-rng.random::<f64>() * cfg.dynamic_range_db / 10.0);
            PathEntry {
                delay_s,
                aod_deg,
                zod_deg: Some(90.0),
                power_lin,
            }
        })
        .collect();
    let mut list = PathList::new(paths);
    list.rescale_to_pl(cfg.pl_db)?;
    Ok(list)
}
