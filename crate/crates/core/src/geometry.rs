//! Global-coordinate geometry of the monostatic node and its reference points.

use serde::{Deserialize, Serialize};

use crate::placement::RpPlacement;

/// Propagation speed used for every distance/delay conversion [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3D {
    pub const ORIGIN: Point3D = Point3D {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn sub(&self, other: &Point3D) -> Point3D {
        Point3D::new(self.x - other.x, self.y - other.y, self.z - other.z)
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Spherical unit vector for a zenith/azimuth direction given in degrees.
pub fn unit_vector(zenith_deg: f64, azimuth_deg: f64) -> [f64; 3] {
    let (st, ct) = zenith_deg.to_radians().sin_cos();
    let (sp, cp) = azimuth_deg.to_radians().sin_cos();
    [st * cp, st * sp, ct]
}

/// Wrap an angle into `[0, 360)`.
pub fn wrap360(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs.
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// Wrap an angle into `[-180, 180)`.
pub fn wrap180(deg: f64) -> f64 {
    wrap360(deg + 180.0) - 180.0
}

/// Circular separation of two azimuths, in `[0, 180]`.
pub fn circular_separation(a_deg: f64, b_deg: f64) -> f64 {
    wrap180(a_deg - b_deg).abs()
}

/// Positions of the reference points around a node at `tx`.
pub fn rp_coordinates(tx: Point3D, placement: &RpPlacement) -> Vec<Point3D> {
    placement
        .entries()
        .map(|rp| {
            let [ux, uy, uz] = unit_vector(rp.zod_deg, rp.aod_deg);
            Point3D::new(
                tx.x + rp.distance_m * ux,
                tx.y + rp.distance_m * uy,
                tx.z + rp.distance_m * uz,
            )
        })
        .collect()
}

/// Inverse of [`rp_coordinates`]: recover (distance, aod, zod) of `point` seen from `tx`.
///
/// The azimuth is returned in `[0, 360)`. Degenerate for a zero offset.
pub fn direction_to(tx: Point3D, point: Point3D) -> (f64, f64, f64) {
    let offset = point.sub(&tx);
    let d = offset.norm();
    let aod = wrap360(offset.y.atan2(offset.x).to_degrees());
    let zod = if d > 0.0 {
        (offset.z / d).clamp(-1.0, 1.0).acos().to_degrees()
    } else {
        0.0
    };
    (d, aod, zod)
}

/// Line-of-sight delay of every reference point, `d / c` [s].
pub fn delays_from_distances(placement: &RpPlacement) -> Vec<f64> {
    placement
        .distances_m()
        .iter()
        .map(|d| d / SPEED_OF_LIGHT)
        .collect()
}
