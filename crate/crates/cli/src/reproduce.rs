//! Canned experiments: equal-distance placements, the RP-count sweep and the
//! spread CDFs of three representative placements.

use isac_mrp::gbsm::ScenarioConfig;
use isac_mrp::monostatic::{compose_channel, equal_distance_for_pl};
use isac_mrp::placement::RpPlacement;
use isac_mrp::rng::RandomStream;
use isac_mrp::stats::{fit_normal, normalized_error, NormalFit};
use isac_mrp::targets::MeasuredTargets;
use isac_mrp::Result;
use serde::Serialize;

/// Reference modeled means for Q = 1..5 evenly spaced RPs: (DS [ns], AS [deg]).
pub const REFERENCE_SWEEP: [(f64, f64); 5] = [
    (24.85, 42.00),
    (32.13, 86.80),
    (33.60, 91.05),
    (33.61, 92.94),
    (35.91, 93.22),
];

/// Reference modeled means of the optimized placement: (DS [ns], AS [deg]).
pub const REFERENCE_OPTIMAL: (f64, f64) = (32.96, 89.78);

/// Reference optimized placement for the indoor measurement.
pub fn reference_optimal_placement() -> RpPlacement {
    RpPlacement::new(
        vec![6.19, 6.50, 11.49],
        vec![0.0, 130.69, 243.28],
        vec![90.0; 3],
    )
    .expect("valid placement")
}

/// Evenly spaced RPs at the common distance that meets the PL target.
pub fn average_placement(q: usize, pl_target_db: f64, fc_ghz: f64) -> Result<RpPlacement> {
    RpPlacement::evenly_spaced(q, equal_distance_for_pl(q, pl_target_db, fc_ghz)?)
}

/// `(q, distance_m)` for q = 1..=q_max.
pub fn equal_distances(q_max: usize, pl_target_db: f64, fc_ghz: f64) -> Result<Vec<(usize, f64)>> {
    (1..=q_max)
        .map(|q| Ok((q, equal_distance_for_pl(q, pl_target_db, fc_ghz)?)))
        .collect()
}

/// DS and azimuth AS of each realization `r`, drawn from `root.child(r)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadSamples {
    pub ds_s: Vec<f64>,
    pub as_az_deg: Vec<f64>,
}

impl SpreadSamples {
    pub fn mean_ds_s(&self) -> f64 {
        mean(&self.ds_s)
    }

    pub fn mean_as_deg(&self) -> f64 {
        mean(&self.as_az_deg)
    }

    pub fn log10_ds(&self) -> Vec<f64> {
        self.ds_s.iter().map(|d| d.log10()).collect()
    }

    pub fn log10_as(&self) -> Vec<f64> {
        self.as_az_deg.iter().map(|a| a.log10()).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn spread_samples(
    placement: &RpPlacement,
    sc: &ScenarioConfig,
    root: &RandomStream,
    realizations: usize,
    include_sf: bool,
) -> Result<SpreadSamples> {
    let mut out = SpreadSamples {
        ds_s: Vec::with_capacity(realizations),
        as_az_deg: Vec::with_capacity(realizations),
    };
    for r in 0..realizations {
        let s = compose_channel(placement, sc, &root.child(r as u64), include_sf)?.stats(false);
        out.ds_s.push(s.ds_s);
        out.as_az_deg.push(s.as_az_deg);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub label: String,
    pub q: usize,
    pub distance_m: Vec<f64>,
    pub aod_deg: Vec<f64>,
    pub ds_ns: f64,
    pub as_az_deg: f64,
    /// Normalized error against the measured DS / AS [%].
    pub ds_err_pct: f64,
    pub as_err_pct: f64,
    pub reference_ds_ns: f64,
    pub reference_as_deg: f64,
}

/// Simulates the optimized placement and the Q = 1..5 averages. All
/// placements share common random numbers: realization `r` of each draws
/// from `root.child(r)`, so differences between rows reflect the placement
/// rather than the draws.
pub fn rp_count_sweep(
    sc: &ScenarioConfig,
    targets: &MeasuredTargets,
    root: &RandomStream,
    realizations: usize,
) -> Result<Vec<SweepRow>> {
    let mut cases = vec![(
        "optimal".to_string(),
        reference_optimal_placement(),
        REFERENCE_OPTIMAL,
    )];
    for (i, &reference) in REFERENCE_SWEEP.iter().enumerate() {
        let q = i + 1;
        let label = if q == 1 {
            "1".to_string()
        } else {
            format!("{q} average")
        };
        cases.push((
            label,
            average_placement(q, targets.pl_db, sc.fc_ghz)?,
            reference,
        ));
    }
    cases
        .into_iter()
        .map(|(label, placement, reference)| {
            let s = spread_samples(&placement, sc, root, realizations, false)?;
            let (ds, az) = (s.mean_ds_s(), s.mean_as_deg());
            Ok(SweepRow {
                label,
                q: placement.len(),
                distance_m: placement.distances_m().to_vec(),
                aod_deg: placement.aod_deg().to_vec(),
                ds_ns: ds * 1e9,
                as_az_deg: az,
                ds_err_pct: normalized_error(targets.ds_s, ds)?,
                as_err_pct: normalized_error(targets.as_az_deg, az)?,
                reference_ds_ns: reference.0,
                reference_as_deg: reference.1,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfSet {
    pub label: String,
    pub log10_ds: Vec<f64>,
    pub log10_as: Vec<f64>,
    pub ds_fit: NormalFit,
    pub as_fit: NormalFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpreadCdfs {
    pub sets: Vec<CdfSet>,
    /// Measured values on the same axes: log10(DS / 1 s), log10(AS / 1 deg).
    pub measured_log10_ds: f64,
    pub measured_log10_as: f64,
}

/// log10 DS and AS samples with normal fits for the optimized placement, the
/// 3-RP average and a single RP, with common random numbers as in
/// [`rp_count_sweep`].
pub fn spread_cdfs(
    sc: &ScenarioConfig,
    targets: &MeasuredTargets,
    optimal: &RpPlacement,
    root: &RandomStream,
    realizations: usize,
) -> Result<SpreadCdfs> {
    let cases = [
        ("optimal", optimal.clone()),
        ("3 average", average_placement(3, targets.pl_db, sc.fc_ghz)?),
        ("single", average_placement(1, targets.pl_db, sc.fc_ghz)?),
    ];
    let sets = cases
        .into_iter()
        .map(|(label, placement)| {
            let s = spread_samples(&placement, sc, root, realizations, false)?;
            let (log10_ds, log10_as) = (s.log10_ds(), s.log10_as());
            Ok(CdfSet {
                label: label.to_string(),
                ds_fit: fit_normal(&log10_ds)?,
                as_fit: fit_normal(&log10_as)?,
                log10_ds,
                log10_as,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpreadCdfs {
        sets,
        measured_log10_ds: targets.ds_s.log10(),
        measured_log10_as: targets.as_az_deg.log10(),
    })
}
