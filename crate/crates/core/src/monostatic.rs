//! Composition of the monostatic background channel from its RP sub-channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbsm::{
    assemble_subchannel, distance_for_pathloss, render_cir_scaled, AntennaArray, ChannelTaps,
    PathRecord, ScenarioConfig, SubChannelRealization,
};
use crate::placement::RpPlacement;
use crate::rng::RandomStream;
use crate::stats::{angular_spread_deg, weighted_rms, ChannelStats, PathEntry, PathList};

fn db_to_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Total path loss of parallel sub-channels: the dB value of the summed
/// linear gains.
pub fn aggregate_pl(per_rp_pl_db: &[f64]) -> Result<f64> {
    if per_rp_pl_db.is_empty() {
        return Err(Error::MalformedInput(
            "no sub-channel path losses to aggregate".into(),
        ));
    }
    Ok(10.0
        * per_rp_pl_db
            .iter()
            .map(|&pl| db_to_lin(pl))
            .sum::<f64>()
            .log10())
}

/// Total shadow fading [dB] of parallel sub-channels with linear factors.
pub fn aggregate_sf(per_rp_sf_linear: &[f64]) -> Result<f64> {
    if per_rp_sf_linear.is_empty() {
        return Err(Error::MalformedInput(
            "no shadow-fading factors to aggregate".into(),
        ));
    }
    if let Some(bad) = per_rp_sf_linear.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::Domain(format!(
            "shadow-fading factor must be positive, got {bad}"
        )));
    }
    Ok(10.0 * per_rp_sf_linear.iter().sum::<f64>().log10())
}

/// Common distance for `q` RPs such that their aggregate path loss equals
/// `pl_target_db`.
pub fn equal_distance_for_pl(q: usize, pl_target_db: f64, fc_ghz: f64) -> Result<f64> {
    if q == 0 {
        return Err(Error::Domain("RP count must be at least 1".into()));
    }
    distance_for_pathloss(fc_ghz, pl_target_db - 10.0 * (q as f64).log10())
}

/// A realization of the monostatic background channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelRealization {
    pub placement: RpPlacement,
    pub subchannels: Vec<SubChannelRealization>,
    pub pl_total_db: f64,
    pub sf_total_db: f64,
    pub include_sf: bool,
    /// Every ray of every sub-channel with its global power weight.
    pub weighted_paths: Vec<PathRecord>,
}

/// Global power weights: ray power times the sub-channel's share of the total
/// linear path gain, and optionally of the total shadow fading.
pub fn path_weights(
    subchannels: &[SubChannelRealization],
    include_sf: bool,
) -> Result<Vec<PathRecord>> {
    let pl_lin: Vec<f64> = subchannels.iter().map(|s| db_to_lin(s.pl_db)).collect();
    let pl_total: f64 = pl_lin.iter().sum();
    let sf_total: f64 = subchannels.iter().map(|s| s.lsp.sf_linear).sum();
    if subchannels.is_empty() || !(pl_total > 0.0) {
        return Err(Error::MalformedInput("no sub-channels to weight".into()));
    }
    let mut out = Vec::with_capacity(subchannels.iter().map(|s| s.paths.len()).sum());
    for (sub, pl) in subchannels.iter().zip(&pl_lin) {
        let mut share = pl / pl_total;
        if include_sf {
            share *= sub.lsp.sf_linear / sf_total;
        }
        out.extend(sub.paths.iter().map(|p| PathRecord {
            power_lin: p.power_lin * share,
            ..*p
        }));
    }
    Ok(out)
}

/// Generates every sub-channel of `placement` and composes them. RP `q`
/// draws from substream `stream.child(q)`.
pub fn compose_channel(
    placement: &RpPlacement,
    sc: &ScenarioConfig,
    stream: &RandomStream,
    include_sf: bool,
) -> Result<ChannelRealization> {
    let subchannels = placement
        .entries()
        .enumerate()
        .map(|(q, rp)| assemble_subchannel(q, rp, sc, &stream.child(q as u64)))
        .collect::<Result<Vec<_>>>()?;
    compose_subchannels(placement.clone(), subchannels, include_sf)
}

/// Composes already generated sub-channels.
pub fn compose_subchannels(
    placement: RpPlacement,
    subchannels: Vec<SubChannelRealization>,
    include_sf: bool,
) -> Result<ChannelRealization> {
    let pls: Vec<f64> = subchannels.iter().map(|s| s.pl_db).collect();
    let sfs: Vec<f64> = subchannels.iter().map(|s| s.lsp.sf_linear).collect();
    let pl_total_db = aggregate_pl(&pls)?;
    let sf_total_db = aggregate_sf(&sfs)?;
    let weighted_paths = path_weights(&subchannels, include_sf)?;
    Ok(ChannelRealization {
        placement,
        subchannels,
        pl_total_db,
        sf_total_db,
        include_sf,
        weighted_paths,
    })
}

impl ChannelRealization {
    /// Linear amplitude scale of each sub-channel, `sqrt(PL_q * SF_q)`.
    pub fn amplitude_scales(&self) -> Vec<f64> {
        self.subchannels
            .iter()
            .map(|s| (db_to_lin(s.pl_db) * s.lsp.sf_linear).sqrt())
            .collect()
    }

    /// Superposition of the sub-channel CIRs, each scaled by `sqrt(PL_q * SF_q)`.
    pub fn render_cir(
        &self,
        tx: &AntennaArray,
        rx: &AntennaArray,
        fc_ghz: f64,
        t_s: f64,
    ) -> Result<ChannelTaps> {
        render_cir_scaled(
            &self.subchannels,
            &self.amplitude_scales(),
            tx,
            rx,
            fc_ghz,
            t_s,
        )
    }

    /// Weighted paths as a statistics path list.
    pub fn path_list(&self) -> PathList {
        PathList::new(
            self.weighted_paths
                .iter()
                .map(|p| PathEntry {
                    delay_s: p.abs_delay_s,
                    aod_deg: p.aod_deg,
                    zod_deg: Some(p.zod_deg),
                    power_lin: p.power_lin,
                })
                .collect(),
        )
    }

    /// Composite statistics of the weighted path set. `pl_db` is the
    /// aggregate path loss, not the (normalized) weight sum.
    pub fn stats(&self, with_zenith: bool) -> ChannelStats {
        let powers: Vec<f64> = self.weighted_paths.iter().map(|p| p.power_lin).collect();
        let delays: Vec<f64> = self.weighted_paths.iter().map(|p| p.abs_delay_s).collect();
        let aods: Vec<f64> = self.weighted_paths.iter().map(|p| p.aod_deg).collect();
        let as_zen_deg = with_zenith.then(|| {
            let zods: Vec<f64> = self.weighted_paths.iter().map(|p| p.zod_deg).collect();
            angular_spread_deg(&zods, &powers)
        });
        ChannelStats {
            pl_db: self.pl_total_db,
            ds_s: weighted_rms(&delays, &powers),
            as_az_deg: angular_spread_deg(&aods, &powers),
            as_zen_deg,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbsm::pathloss_inh_nlos;
    use crate::geometry::SPEED_OF_LIGHT;
    use proptest::prelude::*;

    fn sc() -> ScenarioConfig {
        let mut sc = ScenarioConfig::inh_nlos();
        sc.zenith_spread_enabled = false;
        sc
    }

    #[test]
    fn pl_aggregation() {
        let three = aggregate_pl(&[-85.58; 3]).unwrap();
        assert!((three - (-85.58 + 10.0 * 3f64.log10())).abs() < 1e-12);
        assert!((three - (-80.81)).abs() < 0.005);
        assert_eq!(aggregate_pl(&[-72.0]).unwrap(), -72.0);
        assert!((aggregate_pl(&[-80.0, f64::NEG_INFINITY]).unwrap() - (-80.0)).abs() < 1e-12);
        assert!(aggregate_pl(&[]).is_err());
    }

    #[test]
    fn sf_aggregation() {
        assert!((aggregate_sf(&[1.0, 1.0, 1.0]).unwrap() - 4.771).abs() < 5e-4);
        assert_eq!(aggregate_sf(&[1.0]).unwrap(), 0.0);
        assert_eq!(aggregate_sf(&[0.5, 0.5]).unwrap(), 0.0);
        assert!(matches!(aggregate_sf(&[1.0, 0.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn equal_distances() {
        for (q, d) in [(1, 5.22), (3, 6.95), (5, 7.94)] {
            let got = equal_distance_for_pl(q, -80.8125, 28.0).unwrap();
            assert!((got - d).abs() < 0.005, "q={q}: {got}");
        }
        assert!(equal_distance_for_pl(0, -80.0, 28.0).is_err());
        assert!(equal_distance_for_pl(1, -1e6, 28.0).is_err());
    }

    #[test]
    fn weights_sum_to_one_without_sf() {
        let p = RpPlacement::new(
            vec![6.19, 6.50, 11.49],
            vec![0.0, 130.69, 243.28],
            vec![90.0; 3],
        )
        .unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(3), false).unwrap();
        assert_eq!(ch.weighted_paths.len(), 3 * 19 * 20);
        let total: f64 = ch.weighted_paths.iter().map(|w| w.power_lin).sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn single_rp_weights_are_ray_powers() {
        let p = RpPlacement::new(vec![5.22], vec![0.0], vec![90.0]).unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(3), false).unwrap();
        for (w, raw) in ch.weighted_paths.iter().zip(&ch.subchannels[0].paths) {
            assert!((w.power_lin - raw.power_lin).abs() < 1e-15);
        }
        assert!((ch.pl_total_db - (-80.8210)).abs() < 5e-4);
        assert!((ch.pl_total_db - (-80.8125)).abs() < 0.01);
    }

    #[test]
    fn equal_distance_rps_share_power_equally() {
        let p = RpPlacement::evenly_spaced(3, 6.95).unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(8), false).unwrap();
        for q in 0..3 {
            let share: f64 = ch
                .weighted_paths
                .iter()
                .filter(|w| w.rp_index == q)
                .map(|w| w.power_lin)
                .sum();
            assert!((share - 1.0 / 3.0).abs() < 1e-12);
        }
        let single = pathloss_inh_nlos(28.0, 6.95).unwrap();
        assert!((ch.pl_total_db - (single + 10.0 * 3f64.log10())).abs() < 1e-12);
    }

    #[test]
    fn sf_weights_follow_formula() {
        let p = RpPlacement::evenly_spaced(2, 6.25).unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(1), true).unwrap();
        let sf: Vec<f64> = ch.subchannels.iter().map(|s| s.lsp.sf_linear).collect();
        let expected: f64 = sf.iter().map(|s| 0.5 * s / (sf[0] + sf[1])).sum();
        let total: f64 = ch.weighted_paths.iter().map(|w| w.power_lin).sum();
        assert!((total - expected).abs() < 1e-12);
    }

    #[test]
    fn delay_floor_is_los_delay() {
        let p = RpPlacement::new(vec![6.0, 9.0], vec![0.0, 90.0], vec![90.0; 2]).unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(4), false).unwrap();
        for sub in &ch.subchannels {
            let min = sub
                .paths
                .iter()
                .map(|x| x.abs_delay_s)
                .fold(f64::INFINITY, f64::min);
            assert_eq!(min, sub.rp.distance_m / SPEED_OF_LIGHT);
        }
    }

    #[test]
    fn permutation_permutes_paths() {
        let p = RpPlacement::new(
            vec![6.19, 6.50, 11.49],
            vec![0.0, 130.69, 243.28],
            vec![90.0; 3],
        )
        .unwrap();
        let order = [2, 0, 1];
        let permuted = p.permuted(&order).unwrap();
        let stream = RandomStream::new(12);
        let a = compose_channel(&p, &sc(), &stream, false).unwrap();
        // RP i of the permuted placement gets the substream RP order[i] had.
        let subs = order
            .iter()
            .map(|&src| {
                let mut sub = crate::gbsm::assemble_subchannel(
                    src,
                    p.entry(src),
                    &sc(),
                    &stream.child(src as u64),
                )
                .unwrap();
                sub.rp_index = src;
                sub
            })
            .collect();
        let b = compose_subchannels(permuted, subs, false).unwrap();
        let key = |w: &PathRecord| (w.rp_index, w.cluster_index, w.ray_index);
        let mut wa = a.weighted_paths.clone();
        let mut wb = b.weighted_paths.clone();
        wa.sort_by_key(key);
        wb.sort_by_key(key);
        assert_eq!(wa.len(), wb.len());
        for (x, y) in wa.iter().zip(&wb) {
            assert!((x.power_lin - y.power_lin).abs() <= 1e-15 * x.power_lin);
            assert_eq!(
                PathRecord {
                    power_lin: 0.0,
                    ..*x
                },
                PathRecord {
                    power_lin: 0.0,
                    ..*y
                }
            );
        }
        assert!((a.pl_total_db - b.pl_total_db).abs() < 1e-12);
    }

    #[test]
    fn cir_uses_sqrt_pl_sf_scaling() {
        let p = RpPlacement::evenly_spaced(2, 6.25).unwrap();
        let ch = compose_channel(&p, &sc(), &RandomStream::new(2), false).unwrap();
        let arr = AntennaArray::single();
        let taps = ch.render_cir(&arr, &arr, 28.0, 0.0).unwrap();
        let scales = ch.amplitude_scales();
        let tap = taps.pair(0, 0)[0];
        let path = ch.subchannels[0].paths[0];
        // XPR finite: magnitude depends on phases, bounded by sqrt(P)(1 + kappa^-1/2).
        let bound = scales[0] * path.power_lin.sqrt() * (1.0 + (1.0 / path.xpr_lin).sqrt());
        assert!(tap.amplitude.norm() <= bound + 1e-18);
        assert_eq!(taps.pair(0, 0).len(), 2 * 380);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn q_copies_law(q in 1usize..8, d in 1.0f64..50.0) {
            let single = pathloss_inh_nlos(28.0, d).unwrap();
            let total = aggregate_pl(&vec![single; q]).unwrap();
            prop_assert!((total - (single + 10.0 * (q as f64).log10())).abs() < 1e-9);
        }

        #[test]
        fn normalization_holds(seed in any::<u64>(), ds in prop::collection::vec(1.0f64..60.0, 1..5)) {
            let q = ds.len();
            let p = RpPlacement::new(ds, (0..q).map(|i| 70.0 * i as f64).collect(), vec![90.0; q]).unwrap();
            let ch = compose_channel(&p, &sc(), &RandomStream::new(seed), false).unwrap();
            let total: f64 = ch.weighted_paths.iter().map(|w| w.power_lin).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }
    }
}
