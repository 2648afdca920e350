//! Stochastic generation of one node-to-RP sub-channel.
//!
//! The flow follows the clustered GBSM used for communication links:
//! path loss from the RP distance, large-scale parameter draws, cluster
//! delays and powers, cluster angles, ray expansion, cross-polarization and
//! initial phases. Arrival angles are set equal to departure angles because
//! the monostatic paths are treated as single-hop echoes.

mod cir;
mod scenario;

pub use cir::{
    render_cir, render_cir_scaled, AntennaArray, AntennaElement, ChannelTaps, CirTap, FieldPattern,
};
pub use scenario::{ExcessDelay, FreqParam, ScenarioConfig, ScenarioTable, INH_NLOS_TOML};

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{wrap360, SPEED_OF_LIGHT};
use crate::placement::RpEntry;
use crate::rng::{DrawSite, RandomStream};

/// Large-scale parameters of one sub-channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LspDraw {
    pub ds_s: f64,
    pub asd_deg: f64,
    pub zsd_deg: f64,
    pub sf_linear: f64,
}

/// One ray of a sub-channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub abs_delay_s: f64,
    pub aod_deg: f64,
    pub zod_deg: f64,
    pub aoa_deg: f64,
    pub zoa_deg: f64,
    pub power_lin: f64,
    /// Cross-polarization power ratio (linear).
    pub xpr_lin: f64,
    /// Initial phases theta-theta, theta-phi, phi-theta, phi-phi [rad].
    pub phases: [f64; 4],
    pub doppler_hz: f64,
    pub rp_index: usize,
    pub cluster_index: usize,
    pub ray_index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubChannelRealization {
    pub rp_index: usize,
    pub rp: RpEntry,
    pub lsp: LspDraw,
    pub pl_db: f64,
    pub excess_delay_s: f64,
    /// `n_clusters * m_rays` rays, cluster-major.
    pub paths: Vec<PathRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleKind {
    Azimuth,
    Zenith,
}

/// Indoor Hotspot NLoS path gain [dB] at carrier `fc_ghz` and 3D distance
/// `d3d_m`. Negative: larger distance gives a smaller value.
pub fn pathloss_inh_nlos(fc_ghz: f64, d3d_m: f64) -> Result<f64> {
    if !(fc_ghz > 0.0 && fc_ghz.is_finite()) {
        return Err(Error::Domain(format!(
            "carrier frequency must be positive, got {fc_ghz}"
        )));
    }
    if !(d3d_m > 0.0 && d3d_m.is_finite()) {
        return Err(Error::Domain(format!(
            "3D distance must be positive, got {d3d_m}"
        )));
    }
    Ok(PL_INTERCEPT_DB + PL_FREQ_SLOPE_DB * fc_ghz.log10() + PL_DIST_SLOPE_DB * d3d_m.log10())
}

pub(crate) const PL_INTERCEPT_DB: f64 = -17.3;
pub(crate) const PL_FREQ_SLOPE_DB: f64 = -24.9;
/// dB per decade of distance; the distance exponent is `-PL_DIST_SLOPE_DB / 10`.
pub(crate) const PL_DIST_SLOPE_DB: f64 = -38.3;

/// Distance at which [`pathloss_inh_nlos`] equals `pl_db`.
pub fn distance_for_pathloss(fc_ghz: f64, pl_db: f64) -> Result<f64> {
    if !(fc_ghz > 0.0) || !pl_db.is_finite() {
        return Err(Error::Domain(format!(
            "cannot invert path loss {pl_db} dB at {fc_ghz} GHz"
        )));
    }
    let log_d = (pl_db - PL_INTERCEPT_DB - PL_FREQ_SLOPE_DB * fc_ghz.log10()) / PL_DIST_SLOPE_DB;
    let d = 10f64.powf(log_d);
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::Domain(format!(
            "path loss {pl_db} dB is unattainable"
        )));
    }
    Ok(d)
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Draws DS, ASD, ZSD and shadow fading as independent lognormals.
pub fn draw_lsps<R: Rng + ?Sized>(sc: &ScenarioConfig, rng: &mut R) -> LspDraw {
    let ds_s = 10f64.powf(sc.lg_ds_mu + sc.lg_ds_sigma * normal(rng));
    let asd_deg = 10f64
        .powf(sc.lg_asd_mu + sc.lg_asd_sigma * normal(rng))
        .min(sc.asd_max_deg);
    let zsd_deg = 10f64
        .powf(sc.lg_zsd_mu + sc.lg_zsd_sigma * normal(rng))
        .min(sc.zsd_max_deg);
    let sf_linear = 10f64.powf(sc.sf_sigma_db * normal(rng) / 10.0);
    LspDraw {
        ds_s,
        asd_deg,
        zsd_deg,
        sf_linear,
    }
}

/// Exponentially distributed cluster delays scaled by `r_tau * ds`, sorted
/// and shifted so the first is zero.
pub fn gen_cluster_delays<R: Rng + ?Sized>(
    ds_s: f64,
    sc: &ScenarioConfig,
    rng: &mut R,
) -> Vec<f64> {
    let mut delays: Vec<f64> = (0..sc.n_clusters)
        .map(|_| {
            // (0, 1]: avoids ln(0).
            let x: f64 = 1.0 - rng.random::<f64>();
            -sc.r_tau * ds_s * x.ln()
        })
        .collect();
    normalize_delays(&mut delays);
    delays
}

pub(crate) fn normalize_delays(delays: &mut [f64]) {
    delays.sort_by(f64::total_cmp);
    if let Some(&first) = delays.first() {
        for d in delays.iter_mut() {
            *d -= first;
        }
    }
}

/// Exponential power-delay decay with per-cluster lognormal shadowing,
/// normalized to unit sum.
pub fn gen_cluster_powers<R: Rng + ?Sized>(
    delays: &[f64],
    ds_s: f64,
    sc: &ScenarioConfig,
    rng: &mut R,
) -> Vec<f64> {
    let decay = (sc.r_tau - 1.0) / (sc.r_tau * ds_s);
    let mut powers: Vec<f64> = delays
        .iter()
        .map(|&tau| {
            let shadow_db = sc.cluster_shadow_db * normal(rng);
            (-tau * decay).exp() * 10f64.powf(-shadow_db / 10.0)
        })
        .collect();
    let total: f64 = powers.iter().sum();
    for p in &mut powers {
        *p /= total;
    }
    powers
}

/// Cluster angles around `center_deg`.
///
/// Azimuths use the inverse-Gaussian power mapping, zeniths the
/// inverse-Laplacian one, each with a random sign and a Gaussian
/// perturbation of one seventh of the spread.
pub fn gen_cluster_angles<R: Rng + ?Sized>(
    spread_deg: f64,
    powers: &[f64],
    center_deg: f64,
    kind: AngleKind,
    sc: &ScenarioConfig,
    rng: &mut R,
) -> Vec<f64> {
    let p_max = powers.iter().cloned().fold(f64::MIN_POSITIVE, f64::max);
    powers
        .iter()
        .map(|&p| {
            let rel = (p / p_max).max(f64::MIN_POSITIVE);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let jitter = normal(rng) * spread_deg / 7.0;
            match kind {
                AngleKind::Azimuth => {
                    let base = 2.0 * (spread_deg / 1.4) * (-rel.ln()).sqrt() / sc.c_phi;
                    wrap360(sign * base + jitter + center_deg)
                }
                AngleKind::Zenith => {
                    let base = -spread_deg * rel.ln() / sc.c_theta;
                    (sign * base + jitter + center_deg + sc.zod_offset_deg).clamp(0.0, 180.0)
                }
            }
        })
        .collect()
}

/// Generates the sub-channel between the node and RP `q`.
///
/// Every draw site uses its own substream of `stream`, so the result is a
/// pure function of `(q, rp, sc, stream)`.
pub fn assemble_subchannel(
    q: usize,
    rp: RpEntry,
    sc: &ScenarioConfig,
    stream: &RandomStream,
) -> Result<SubChannelRealization> {
    let pl_db = pathloss_inh_nlos(sc.fc_ghz, rp.distance_m)?;

    let lsp = draw_lsps(sc, &mut stream.site(DrawSite::LargeScale).rng());
    let delays = gen_cluster_delays(
        lsp.ds_s,
        sc,
        &mut stream.site(DrawSite::ClusterDelays).rng(),
    );
    let powers = gen_cluster_powers(
        &delays,
        lsp.ds_s,
        sc,
        &mut stream.site(DrawSite::ClusterPowers).rng(),
    );
    let aods = gen_cluster_angles(
        lsp.asd_deg,
        &powers,
        rp.aod_deg,
        AngleKind::Azimuth,
        sc,
        &mut stream.site(DrawSite::AzimuthAngles).rng(),
    );
    let zods = if sc.zenith_spread_enabled {
        gen_cluster_angles(
            lsp.zsd_deg,
            &powers,
            rp.zod_deg,
            AngleKind::Zenith,
            sc,
            &mut stream.site(DrawSite::ZenithAngles).rng(),
        )
    } else {
        vec![rp.zod_deg; sc.n_clusters]
    };

    let excess_delay_s = if sc.excess_delay.enabled {
        let mut rng = stream.site(DrawSite::ExcessDelay).rng();
        10f64.powf(sc.excess_delay.lg_mu + sc.excess_delay.lg_sigma * normal(&mut rng))
    } else {
        0.0
    };
    let los_delay = rp.distance_m / SPEED_OF_LIGHT;

    let mut xpr_rng = stream.site(DrawSite::CrossPolarization).rng();
    let mut phase_rng = stream.site(DrawSite::InitialPhases).rng();
    let m = sc.m_rays as f64;
    let mut paths = Vec::with_capacity(sc.paths_per_subchannel());
    for n in 0..sc.n_clusters {
        for (ray, &offset) in sc.ray_offsets.iter().enumerate() {
            let aod = wrap360(aods[n] + sc.c_asd_deg * offset);
            let zod = if sc.zenith_spread_enabled {
                (zods[n] + sc.c_zsd_deg * offset).clamp(0.0, 180.0)
            } else {
                zods[n]
            };
            let xpr_db = sc.xpr_mu_db + sc.xpr_sigma_db * normal(&mut xpr_rng);
            let phases = [(); 4].map(|_| phase_rng.random::<f64>() * 2.0 * PI);
            paths.push(PathRecord {
                abs_delay_s: delays[n] + los_delay + excess_delay_s,
                aod_deg: aod,
                zod_deg: zod,
                aoa_deg: aod,
                zoa_deg: zod,
                power_lin: powers[n] / m,
                xpr_lin: 10f64.powf(xpr_db / 10.0),
                phases,
                doppler_hz: sc.doppler_hz,
                rp_index: q,
                cluster_index: n,
                ray_index: ray,
            });
        }
    }

    Ok(SubChannelRealization {
        rp_index: q,
        rp,
        lsp,
        pl_db,
        excess_delay_s,
        paths,
    })
}
