use serde::{Deserialize, Serialize};

use super::{GaConfig, Individual, PlWeight};
use crate::error::{Error, Result};
use crate::gbsm::{pathloss_inh_nlos, ScenarioConfig};
use crate::monostatic::{aggregate_pl, compose_channel};
use crate::placement::RpPlacement;
use crate::rng::RandomStream;
use crate::stats::ChannelStats;
use crate::targets::MeasuredTargets;

/// Monte Carlo mean statistics of a placement and the resulting fitness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub fitness: f64,
    pub mean_stats: ChannelStats,
}

/// Mean composite statistics over `realizations` compositions, realization
/// `r` drawn from `stream.child(r)`.
pub fn mean_stats(
    placement: &RpPlacement,
    sc: &ScenarioConfig,
    stream: &RandomStream,
    realizations: usize,
    include_sf: bool,
    with_zenith: bool,
) -> Result<ChannelStats> {
    if realizations == 0 {
        return Err(Error::Domain("at least one realization is required".into()));
    }
    let (mut ds, mut az, mut zen) = (0.0, 0.0, 0.0);
    let mut pl = 0.0;
    for r in 0..realizations {
        let s =
            compose_channel(placement, sc, &stream.child(r as u64), include_sf)?.stats(with_zenith);
        pl = s.pl_db;
        ds += s.ds_s;
        az += s.as_az_deg;
        zen += s.as_zen_deg.unwrap_or(0.0);
    }
    let n = realizations as f64;
    Ok(ChannelStats {
        pl_db: pl,
        ds_s: ds / n,
        as_az_deg: az / n,
        as_zen_deg: with_zenith.then_some(zen / n),
    })
}

/// Weighted absolute mismatch between modeled and target statistics.
pub fn fitness_of_stats(modeled: &ChannelStats, targets: &MeasuredTargets, cfg: &GaConfig) -> f64 {
    let mut eta = cfg.w_ds * (modeled.ds_s - targets.ds_s).abs()
        + cfg.w_as_az * (modeled.as_az_deg - targets.as_az_deg).abs();
    if let (Some(m), Some(t)) = (modeled.as_zen_deg, targets.as_zen_deg) {
        eta += cfg.w_as_zen * (m - t).abs();
    }
    if let PlWeight::Finite(w) = cfg.w_pl {
        eta += w * (modeled.pl_db - targets.pl_db).abs();
    }
    eta
}

/// Evaluates a placement with the run's common random numbers.
pub fn evaluate_placement(
    placement: &RpPlacement,
    targets: &MeasuredTargets,
    sc: &ScenarioConfig,
    cfg: &GaConfig,
    stream: &RandomStream,
) -> Result<Evaluation> {
    let with_zenith = cfg.w_as_zen > 0.0 && targets.as_zen_deg.is_some();
    let mut mean_stats = mean_stats(
        placement,
        sc,
        stream,
        cfg.fitness_realizations,
        cfg.include_sf,
        with_zenith,
    )?;
    // Deterministic aggregate path loss, independent of shadow fading.
    let per_rp = placement
        .distances_m()
        .iter()
        .map(|&d| pathloss_inh_nlos(sc.fc_ghz, d))
        .collect::<Result<Vec<_>>>()?;
    mean_stats.pl_db = aggregate_pl(&per_rp)?;
    Ok(Evaluation {
        fitness: fitness_of_stats(&mean_stats, targets, cfg),
        mean_stats,
    })
}

/// Fitness of an individual; infeasible individuals score infinity.
pub fn fitness(
    ind: &Individual,
    targets: &MeasuredTargets,
    sc: &ScenarioConfig,
    cfg: &GaConfig,
    stream: &RandomStream,
) -> f64 {
    if !ind.is_valid(&cfg.constraints) {
        return f64::INFINITY;
    }
    ind.placement()
        .and_then(|p| evaluate_placement(&p, targets, sc, cfg, stream))
        .map_or(f64::INFINITY, |e| e.fitness)
}
