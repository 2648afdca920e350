use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gbsm::{pathloss_inh_nlos, PL_DIST_SLOPE_DB};
use crate::geometry::{circular_separation, wrap360};
use crate::monostatic::aggregate_pl;
use crate::placement::{validate_placement, ConstraintSet, RpEntry, RpPlacement};

/// Relative tolerance for snapping a rescaled distance back onto a bound it
/// overshot by rounding only.
const BOUND_SNAP_REL: f64 = 1e-12;

/// A fixed-length genome of `q_max` slots. `None` marks an inactive slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub slots: Vec<Option<RpEntry>>,
}

impl Individual {
    pub fn active_count(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    /// Active slots in slot order.
    pub fn placement(&self) -> Result<RpPlacement> {
        let entries: Vec<RpEntry> = self.slots.iter().flatten().copied().collect();
        RpPlacement::from_entries(&entries)
    }

    /// Slot-major flattening, three genes per slot, NaN for inactive slots.
    pub fn genes(&self) -> Vec<f64> {
        self.slots
            .iter()
            .flat_map(|s| match s {
                Some(rp) => [rp.distance_m, rp.aod_deg, rp.zod_deg],
                None => [f64::NAN; 3],
            })
            .collect()
    }

    /// Inverse of [`Individual::genes`]. A slot is active when its distance
    /// gene is a number; angle genes left as NaN stay NaN and are filled in by
    /// repair.
    pub fn from_genes(genes: &[f64]) -> Self {
        let slots = genes
            .chunks_exact(3)
            .map(|g| {
                (!g[0].is_nan()).then(|| RpEntry {
                    distance_m: g[0],
                    aod_deg: g[1],
                    zod_deg: g[2],
                })
            })
            .collect();
        Self { slots }
    }

    /// Bit pattern of the genome, for exact-equality lookups.
    pub(crate) fn key(&self) -> Vec<u64> {
        self.genes().iter().map(|g| g.to_bits()).collect()
    }

    pub(crate) fn is_valid(&self, c: &ConstraintSet) -> bool {
        self.slots
            .iter()
            .flatten()
            .all(|rp| rp.distance_m.is_finite() && rp.aod_deg.is_finite() && rp.zod_deg.is_finite())
            && self
                .placement()
                .and_then(|p| validate_placement(&p, c))
                .is_ok_and(|r| r.is_ok())
    }
}

/// Scales every distance by the common factor that makes the aggregate path
/// loss equal `pl_target_db`. Angles are not involved.
pub fn pl_repair(distances_m: &[f64], pl_target_db: f64, fc_ghz: f64) -> Result<Vec<f64>> {
    if distances_m.is_empty() {
        return Err(Error::MalformedInput("no distances to rescale".into()));
    }
    if !pl_target_db.is_finite() {
        return Err(Error::Domain(format!(
            "path-loss target must be finite, got {pl_target_db}"
        )));
    }
    let per_rp = distances_m
        .iter()
        .map(|&d| pathloss_inh_nlos(fc_ghz, d))
        .collect::<Result<Vec<_>>>()?;
    let current = aggregate_pl(&per_rp)?;
    // Linear gain goes as d^(-3.83), so s = (G_cur / G_target)^(1/3.83).
    let exponent = -PL_DIST_SLOPE_DB / 10.0;
    let s = 10f64.powf((current - pl_target_db) / 10.0 / exponent);
    Ok(distances_m.iter().map(|d| d * s).collect())
}

pub(crate) fn draw_entry(c: &ConstraintSet, rng: &mut impl Rng) -> RpEntry {
    RpEntry {
        distance_m: rng.random_range(c.d_min_m..=c.d_max_m),
        aod_deg: rng.random_range(c.aod_min_deg..=c.aod_max_deg),
        zod_deg: rng.random_range(c.zod_min_deg..=c.zod_max_deg),
    }
}

/// Everything repair needs besides the individual itself.
#[derive(Debug, Clone, Copy)]
pub(crate) struct RepairSpec<'a> {
    pub constraints: &'a ConstraintSet,
    /// Exact aggregate path loss to enforce, if any.
    pub pl_target_db: Option<f64>,
    pub fc_ghz: f64,
    pub pin_first_aod: bool,
    pub max_attempts: usize,
}

/// Brings an individual back into the feasible set: fixes the active count,
/// fills missing genes, resamples genes that break a spacing, applies
/// [`pl_repair`] and pins the first active AoD to 0. On failure returns the
/// identifier of the constraint that could not be met.
pub(crate) fn repair(
    ind: &mut Individual,
    spec: &RepairSpec<'_>,
    rng: &mut impl Rng,
) -> std::result::Result<(), &'static str> {
    let c = spec.constraints;
    fix_active_count(ind, c, rng);
    for rp in ind.slots.iter_mut().flatten() {
        if rp.aod_deg.is_nan() {
            rp.aod_deg = rng.random_range(c.aod_min_deg..=c.aod_max_deg);
        }
        if rp.zod_deg.is_nan() {
            rp.zod_deg = rng.random_range(c.zod_min_deg..=c.zod_max_deg);
        }
    }

    let mut last = "rp_count";
    for _ in 0..spec.max_attempts.max(1) {
        if let Some(failed) = resample_spacing(ind, c, rng) {
            last = failed;
            continue;
        }
        if let Some(target) = spec.pl_target_db {
            let active: Vec<usize> = (0..ind.slots.len())
                .filter(|&i| ind.slots[i].is_some())
                .collect();
            let distances: Vec<f64> = active
                .iter()
                .map(|&i| ind.slots[i].unwrap().distance_m)
                .collect();
            let scaled = match pl_repair(&distances, target, spec.fc_ghz) {
                Ok(s) => s,
                Err(_) => return Err("distance_bounds"),
            };
            let outside: Vec<usize> = (0..scaled.len())
                .filter(|&k| snap_to_bounds(scaled[k], c).is_none())
                .collect();
            if !outside.is_empty() {
                // Redraw the offending distances; the next pass rescales.
                for k in outside {
                    let rp = ind.slots[active[k]].as_mut().unwrap();
                    rp.distance_m = rng.random_range(c.d_min_m..=c.d_max_m);
                }
                last = "distance_bounds";
                continue;
            }
            for (k, &i) in active.iter().enumerate() {
                ind.slots[i].as_mut().unwrap().distance_m = snap_to_bounds(scaled[k], c).unwrap();
            }
        }
        if spec.pin_first_aod {
            pin_first_aod(ind);
        }
        let report = ind
            .placement()
            .and_then(|p| validate_placement(&p, c))
            .map_err(|_| "rp_count")?;
        match report.violations.first() {
            None => return Ok(()),
            Some(v) => last = v.constraint(),
        }
    }
    Err(last)
}

fn snap_to_bounds(d: f64, c: &ConstraintSet) -> Option<f64> {
    if (c.d_min_m..=c.d_max_m).contains(&d) {
        Some(d)
    } else if d < c.d_min_m && d >= c.d_min_m * (1.0 - BOUND_SNAP_REL) {
        Some(c.d_min_m)
    } else if d > c.d_max_m && d <= c.d_max_m * (1.0 + BOUND_SNAP_REL) {
        Some(c.d_max_m)
    } else {
        None
    }
}

fn fix_active_count(ind: &mut Individual, c: &ConstraintSet, rng: &mut impl Rng) {
    loop {
        let active: Vec<usize> = (0..ind.slots.len())
            .filter(|&i| ind.slots[i].is_some())
            .collect();
        if active.len() > c.q_max {
            let pick = active[rng.random_range(0..active.len())];
            ind.slots[pick] = None;
        } else if active.len() < c.q_min.min(ind.slots.len()) {
            let idle: Vec<usize> = (0..ind.slots.len())
                .filter(|&i| ind.slots[i].is_none())
                .collect();
            let pick = idle[rng.random_range(0..idle.len())];
            ind.slots[pick] = Some(draw_entry(c, rng));
        } else {
            return;
        }
    }
}

/// One pass over all active pairs; for each pair too close in some dimension
/// the later slot's gene in that dimension is redrawn. Returns the violated
/// constraint if any pair still clashes afterwards.
fn resample_spacing(
    ind: &mut Individual,
    c: &ConstraintSet,
    rng: &mut impl Rng,
) -> Option<&'static str> {
    let active: Vec<usize> = (0..ind.slots.len())
        .filter(|&i| ind.slots[i].is_some())
        .collect();
    let clash = |ind: &Individual| -> Option<(usize, &'static str)> {
        for (a, &i) in active.iter().enumerate() {
            for &j in &active[a + 1..] {
                let (p, q) = (ind.slots[i].unwrap(), ind.slots[j].unwrap());
                if circular_separation(p.aod_deg, q.aod_deg) < c.delta_phi_deg {
                    return Some((j, "azimuth_spacing"));
                }
                if (p.distance_m - q.distance_m).abs() < c.delta_d_m {
                    return Some((j, "distance_spacing"));
                }
                if (p.zod_deg - q.zod_deg).abs() < c.delta_theta_deg {
                    return Some((j, "zenith_spacing"));
                }
            }
        }
        None
    };
    for _ in 0..active.len() * active.len() {
        let (j, which) = clash(ind)?;
        let rp = ind.slots[j].as_mut().unwrap();
        match which {
            "azimuth_spacing" => rp.aod_deg = rng.random_range(c.aod_min_deg..=c.aod_max_deg),
            "distance_spacing" => rp.distance_m = rng.random_range(c.d_min_m..=c.d_max_m),
            _ => rp.zod_deg = rng.random_range(c.zod_min_deg..=c.zod_max_deg),
        }
    }
    clash(ind).map(|(_, which)| which)
}

/// Rotates all active AoDs so that the first active one is 0.
pub(crate) fn pin_first_aod(ind: &mut Individual) {
    let Some(first) = ind.slots.iter().flatten().next().map(|rp| rp.aod_deg) else {
        return;
    };
    for rp in ind.slots.iter_mut().flatten() {
        rp.aod_deg = wrap360(rp.aod_deg - first);
    }
}
