//! Reference-point placements and the constraint set they are validated against.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::circular_separation;

/// Slack applied to separation checks so that values produced by angle
/// pinning (a subtraction) are not rejected by rounding.
const SEPARATION_SLACK: f64 = 1e-9;

/// One reference point: 3D distance from the node and departure direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RpEntry {
    pub distance_m: f64,
    pub aod_deg: f64,
    pub zod_deg: f64,
}

/// The free parameters of the model: one (distance, AoD, ZoD) triple per RP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PlacementRepr", into = "PlacementRepr")]
pub struct RpPlacement {
    distances_m: Vec<f64>,
    aod_deg: Vec<f64>,
    zod_deg: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PlacementRepr {
    distances_m: Vec<f64>,
    aod_deg: Vec<f64>,
    zod_deg: Vec<f64>,
}

impl TryFrom<PlacementRepr> for RpPlacement {
    type Error = Error;

    fn try_from(r: PlacementRepr) -> Result<Self> {
        RpPlacement::new(r.distances_m, r.aod_deg, r.zod_deg)
    }
}

impl From<RpPlacement> for PlacementRepr {
    fn from(p: RpPlacement) -> Self {
        PlacementRepr {
            distances_m: p.distances_m,
            aod_deg: p.aod_deg,
            zod_deg: p.zod_deg,
        }
    }
}

impl RpPlacement {
    /// Builds a placement; the three sequences must be non-empty, of equal
    /// length and finite.
    pub fn new(distances_m: Vec<f64>, aod_deg: Vec<f64>, zod_deg: Vec<f64>) -> Result<Self> {
        if distances_m.is_empty() {
            return Err(Error::MalformedInput(
                "placement has no reference points".into(),
            ));
        }
        if aod_deg.len() != distances_m.len() || zod_deg.len() != distances_m.len() {
            return Err(Error::MalformedInput(format!(
                "placement sequences differ in length: {} distances, {} AoDs, {} ZoDs",
                distances_m.len(),
                aod_deg.len(),
                zod_deg.len()
            )));
        }
        let finite = distances_m
            .iter()
            .chain(&aod_deg)
            .chain(&zod_deg)
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::MalformedInput(
                "placement contains non-finite values".into(),
            ));
        }
        Ok(Self {
            distances_m,
            aod_deg,
            zod_deg,
        })
    }

    pub fn from_entries(entries: &[RpEntry]) -> Result<Self> {
        Self::new(
            entries.iter().map(|e| e.distance_m).collect(),
            entries.iter().map(|e| e.aod_deg).collect(),
            entries.iter().map(|e| e.zod_deg).collect(),
        )
    }

    /// `q` reference points at a common distance with evenly spaced azimuths
    /// starting at 0 degrees, all in the horizontal plane.
    pub fn evenly_spaced(q: usize, distance_m: f64) -> Result<Self> {
        let step = 360.0 / q.max(1) as f64;
        Self::new(
            vec![distance_m; q],
            (0..q).map(|i| i as f64 * step).collect(),
            vec![90.0; q],
        )
    }

    pub fn len(&self) -> usize {
        self.distances_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances_m.is_empty()
    }

    pub fn distances_m(&self) -> &[f64] {
        &self.distances_m
    }

    pub fn aod_deg(&self) -> &[f64] {
        &self.aod_deg
    }

    pub fn zod_deg(&self) -> &[f64] {
        &self.zod_deg
    }

    pub fn entry(&self, q: usize) -> RpEntry {
        RpEntry {
            distance_m: self.distances_m[q],
            aod_deg: self.aod_deg[q],
            zod_deg: self.zod_deg[q],
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = RpEntry> + '_ {
        (0..self.len()).map(|q| self.entry(q))
    }

    /// Same placement with the RP order permuted: entry `i` of the result is
    /// entry `order[i]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let entries: Vec<RpEntry> = order.iter().map(|&i| self.entry(i)).collect();
        Self::from_entries(&entries)
    }
}

/// Bounds and minimum spacings on the RP count, distances and angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstraintSet {
    pub q_min: usize,
    pub q_max: usize,
    pub d_min_m: f64,
    pub d_max_m: f64,
    pub aod_min_deg: f64,
    pub aod_max_deg: f64,
    pub zod_min_deg: f64,
    pub zod_max_deg: f64,
    pub delta_d_m: f64,
    pub delta_phi_deg: f64,
    pub delta_theta_deg: f64,
}

impl Default for ConstraintSet {
    /// Horizontal-plane search with 1 to 5 RPs between 1 m and 100 m and a
    /// 20 degree azimuth separation.
    fn default() -> Self {
        Self {
            q_min: 1,
            q_max: 5,
            d_min_m: 1.0,
            d_max_m: 100.0,
            aod_min_deg: 0.0,
            aod_max_deg: 360.0,
            zod_min_deg: 90.0,
            zod_max_deg: 90.0,
            delta_d_m: 0.0,
            delta_phi_deg: 20.0,
            delta_theta_deg: 0.0,
        }
    }
}

impl ConstraintSet {
    pub fn check(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(format!("constraint set: {msg}")));
        if self.q_min == 0 {
            return bad("q_min must be at least 1");
        }
        if self.q_min > self.q_max {
            return bad("q_min exceeds q_max");
        }
        let all = [
            self.d_min_m,
            self.d_max_m,
            self.aod_min_deg,
            self.aod_max_deg,
            self.zod_min_deg,
            self.zod_max_deg,
            self.delta_d_m,
            self.delta_phi_deg,
            self.delta_theta_deg,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return bad("non-finite bound");
        }
        if self.d_min_m > self.d_max_m
            || self.aod_min_deg > self.aod_max_deg
            || self.zod_min_deg > self.zod_max_deg
        {
            return bad("a minimum bound exceeds its maximum");
        }
        if self.d_min_m < 0.0 {
            return bad("d_min_m is negative");
        }
        if self.delta_d_m < 0.0 || self.delta_phi_deg < 0.0 || self.delta_theta_deg < 0.0 {
            return bad("negative separation");
        }
        Ok(())
    }
}

/// A single violated constraint, naming the offending RP indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    RpCount {
        q: usize,
        q_min: usize,
        q_max: usize,
    },
    DistanceBounds {
        index: usize,
        value: f64,
    },
    DistanceSpacing {
        i: usize,
        j: usize,
    },
    AzimuthBounds {
        index: usize,
        value: f64,
    },
    AzimuthSpacing {
        i: usize,
        j: usize,
    },
    ZenithBounds {
        index: usize,
        value: f64,
    },
    ZenithSpacing {
        i: usize,
        j: usize,
    },
}

impl Violation {
    /// Short identifier of the constraint family.
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::RpCount { .. } => "rp_count",
            Violation::DistanceBounds { .. } => "distance_bounds",
            Violation::DistanceSpacing { .. } => "distance_spacing",
            Violation::AzimuthBounds { .. } => "azimuth_bounds",
            Violation::AzimuthSpacing { .. } => "azimuth_spacing",
            Violation::ZenithBounds { .. } => "zenith_bounds",
            Violation::ZenithSpacing { .. } => "zenith_spacing",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RpCount { q, q_min, q_max } => {
                write!(f, "rp_count: {q} outside [{q_min}, {q_max}]")
            }
            Violation::DistanceBounds { index, value }
            | Violation::AzimuthBounds { index, value }
            | Violation::ZenithBounds { index, value } => {
                write!(f, "{}: RP {index} has value {value}", self.constraint())
            }
            Violation::DistanceSpacing { i, j }
            | Violation::AzimuthSpacing { i, j }
            | Violation::ZenithSpacing { i, j } => {
                write!(f, "{}: RPs {i} and {j} too close", self.constraint())
            }
        }
    }
}

/// Outcome of [`validate_placement`]: empty means the placement is feasible.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    /// Distinct constraint identifiers that were violated.
    pub fn violated_constraints(&self) -> Vec<&'static str> {
        let mut ids: Vec<_> = self.violations.iter().map(Violation::constraint).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

/// Checks a placement against every count, bound and spacing constraint.
pub fn validate_placement(p: &RpPlacement, c: &ConstraintSet) -> Result<ValidationReport> {
    if p.is_empty() {
        return Err(Error::MalformedInput(
            "placement has no reference points".into(),
        ));
    }
    let mut violations = Vec::new();
    let q = p.len();
    if q < c.q_min || q > c.q_max {
        violations.push(Violation::RpCount {
            q,
            q_min: c.q_min,
            q_max: c.q_max,
        });
    }
    for (index, rp) in p.entries().enumerate() {
        if rp.distance_m < c.d_min_m || rp.distance_m > c.d_max_m {
            violations.push(Violation::DistanceBounds {
                index,
                value: rp.distance_m,
            });
        }
        if rp.aod_deg < c.aod_min_deg || rp.aod_deg > c.aod_max_deg {
            violations.push(Violation::AzimuthBounds {
                index,
                value: rp.aod_deg,
            });
        }
        if rp.zod_deg < c.zod_min_deg || rp.zod_deg > c.zod_max_deg {
            violations.push(Violation::ZenithBounds {
                index,
                value: rp.zod_deg,
            });
        }
    }
    for i in 0..q {
        for j in i + 1..q {
            let (a, b) = (p.entry(i), p.entry(j));
            if (a.distance_m - b.distance_m).abs() + SEPARATION_SLACK < c.delta_d_m {
                violations.push(Violation::DistanceSpacing { i, j });
            }
            if circular_separation(a.aod_deg, b.aod_deg) + SEPARATION_SLACK < c.delta_phi_deg {
                violations.push(Violation::AzimuthSpacing { i, j });
            }
            if (a.zod_deg - b.zod_deg).abs() + SEPARATION_SLACK < c.delta_theta_deg {
                violations.push(Violation::ZenithSpacing { i, j });
            }
        }
    }
    Ok(ValidationReport { violations })
}
