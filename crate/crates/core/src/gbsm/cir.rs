//! Rendering of path records into complex channel taps per antenna pair.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{PathRecord, SubChannelRealization};
use crate::error::{Error, Result};
use crate::geometry::{unit_vector, SPEED_OF_LIGHT};

/// Field pattern of an antenna element in the theta/phi polarization basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum FieldPattern {
    /// Unit gain in every direction, purely theta-polarized.
    #[default]
    Isotropic,
    /// Unit gain, polarization slanted by the given angle from theta.
    Slanted { slant_deg: f64 },
}

impl FieldPattern {
    /// `(F_theta, F_phi)` towards the given direction.
    pub fn field(&self, _zenith_deg: f64, _azimuth_deg: f64) -> (f64, f64) {
        match *self {
            FieldPattern::Isotropic => (1.0, 0.0),
            FieldPattern::Slanted { slant_deg } => {
                let (s, c) = slant_deg.to_radians().sin_cos();
                (c, s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AntennaElement {
    /// Element location relative to the array reference [m].
    pub position_m: [f64; 3],
    pub pattern: FieldPattern,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    elements: Vec<AntennaElement>,
}

impl AntennaArray {
    pub fn new(positions_m: Vec<[f64; 3]>, patterns: Vec<FieldPattern>) -> Result<Self> {
        if positions_m.len() != patterns.len() {
            return Err(Error::MalformedInput(format!(
                "{} element positions but {} field patterns",
                positions_m.len(),
                patterns.len()
            )));
        }
        if positions_m.is_empty() {
            return Err(Error::MalformedInput(
                "antenna array has no elements".into(),
            ));
        }
        Ok(Self {
            elements: positions_m
                .into_iter()
                .zip(patterns)
                .map(|(position_m, pattern)| AntennaElement {
                    position_m,
                    pattern,
                })
                .collect(),
        })
    }

    /// One isotropic element at the array origin.
    pub fn single() -> Self {
        Self {
            elements: vec![AntennaElement {
                position_m: [0.0; 3],
                pattern: FieldPattern::Isotropic,
            }],
        }
    }

    /// `n` isotropic elements along x with the given spacing.
    pub fn uniform_linear(n: usize, spacing_m: f64) -> Result<Self> {
        Self::new(
            (0..n).map(|i| [i as f64 * spacing_m, 0.0, 0.0]).collect(),
            vec![FieldPattern::Isotropic; n],
        )
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[AntennaElement] {
        &self.elements
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirTap {
    pub delay_s: f64,
    pub amplitude: Complex64,
    pub rp_index: usize,
    pub cluster_index: usize,
    pub ray_index: usize,
}

/// Taps for every (receive element u, transmit element s) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelTaps {
    pub n_rx: usize,
    pub n_tx: usize,
    taps: Vec<Vec<CirTap>>,
}

impl ChannelTaps {
    pub fn pair(&self, u: usize, s: usize) -> &[CirTap] {
        &self.taps[u * self.n_tx + s]
    }
}

fn tap_amplitude(
    path: &PathRecord,
    rx: &AntennaElement,
    tx: &AntennaElement,
    wavelength_m: f64,
    t_s: f64,
) -> Complex64 {
    let (rx_t, rx_p) = rx.pattern.field(path.zoa_deg, path.aoa_deg);
    let (tx_t, tx_p) = tx.pattern.field(path.zod_deg, path.aod_deg);
    let cross = (1.0 / path.xpr_lin).sqrt();
    let [tt, tp, pt, pp] = path.phases.map(|ph| Complex64::from_polar(1.0, ph));
    // rx^T * [[tt, cross*tp], [cross*pt, pp]] * tx
    let pol = rx_t * (tt * tx_t + tp * cross * tx_p) + rx_p * (pt * cross * tx_t + pp * tx_p);

    let dot = |r: [f64; 3], d: [f64; 3]| r[0] * d[0] + r[1] * d[1] + r[2] * d[2];
    let r_rx = unit_vector(path.zoa_deg, path.aoa_deg);
    let r_tx = unit_vector(path.zod_deg, path.aod_deg);
    let array_phase =
        2.0 * PI * (dot(r_rx, rx.position_m) + dot(r_tx, tx.position_m)) / wavelength_m;
    let doppler_phase = 2.0 * PI * path.doppler_hz * t_s;

    path.power_lin.sqrt() * pol * Complex64::from_polar(1.0, array_phase + doppler_phase)
}

/// Renders every path of every sub-channel with unit amplitude scaling.
pub fn render_cir(
    subchannels: &[SubChannelRealization],
    tx: &AntennaArray,
    rx: &AntennaArray,
    fc_ghz: f64,
    t_s: f64,
) -> Result<ChannelTaps> {
    render_cir_scaled(
        subchannels,
        &vec![1.0; subchannels.len()],
        tx,
        rx,
        fc_ghz,
        t_s,
    )
}

/// As [`render_cir`], multiplying sub-channel `q`'s taps by `scales[q]`.
pub fn render_cir_scaled(
    subchannels: &[SubChannelRealization],
    scales: &[f64],
    tx: &AntennaArray,
    rx: &AntennaArray,
    fc_ghz: f64,
    t_s: f64,
) -> Result<ChannelTaps> {
    if scales.len() != subchannels.len() {
        return Err(Error::MalformedInput(format!(
            "{} amplitude scales for {} sub-channels",
            scales.len(),
            subchannels.len()
        )));
    }
    if tx.is_empty() || rx.is_empty() {
        return Err(Error::MalformedInput(
            "antenna array has no elements".into(),
        ));
    }
    if !(fc_ghz > 0.0) {
        return Err(Error::Domain(format!(
            "carrier frequency must be positive, got {fc_ghz}"
        )));
    }
    let wavelength_m = SPEED_OF_LIGHT / (fc_ghz * 1e9);
    let mut taps = Vec::with_capacity(rx.len() * tx.len());
    for rx_el in rx.elements() {
        for tx_el in tx.elements() {
            let mut pair = Vec::new();
            for (sub, &scale) in subchannels.iter().zip(scales) {
                pair.extend(sub.paths.iter().map(|path| CirTap {
                    delay_s: path.abs_delay_s,
                    amplitude: scale * tap_amplitude(path, rx_el, tx_el, wavelength_m, t_s),
                    rp_index: path.rp_index,
                    cluster_index: path.cluster_index,
                    ray_index: path.ray_index,
                }));
            }
            taps.push(pair);
        }
    }
    Ok(ChannelTaps {
        n_rx: rx.len(),
        n_tx: tx.len(),
        taps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gbsm::LspDraw;
    use crate::placement::RpEntry;

    fn one_path(path: PathRecord) -> Vec<SubChannelRealization> {
        vec![SubChannelRealization {
            rp_index: 0,
            rp: RpEntry {
                distance_m: 5.0,
                aod_deg: 0.0,
                zod_deg: 90.0,
            },
            lsp: LspDraw {
                ds_s: 1e-8,
                asd_deg: 10.0,
                zsd_deg: 10.0,
                sf_linear: 1.0,
            },
            pl_db: -80.0,
            excess_delay_s: 0.0,
            paths: vec![path],
        }]
    }

    fn path() -> PathRecord {
        PathRecord {
            abs_delay_s: 2e-8,
            aod_deg: 0.0,
            zod_deg: 90.0,
            aoa_deg: 0.0,
            zoa_deg: 90.0,
            power_lin: 0.01,
            xpr_lin: f64::INFINITY,
            phases: [0.3, 1.1, 2.0, 4.0],
            doppler_hz: 0.0,
            rp_index: 0,
            cluster_index: 0,
            ray_index: 0,
        }
    }

    #[test]
    fn unit_modulus_factors() {
        let arr = AntennaArray::single();
        let taps = render_cir(&one_path(path()), &arr, &arr, 28.0, 0.0).unwrap();
        let tap = taps.pair(0, 0)[0];
        assert!((tap.amplitude.norm() - 0.1).abs() < 1e-15);
        assert_eq!(tap.delay_s, 2e-8);
    }

    #[test]
    fn doppler_phase_is_linear_in_time() {
        let mut p = path();
        p.doppler_hz = 37.0;
        let arr = AntennaArray::single();
        let subs = one_path(p);
        let at = |t: f64| render_cir(&subs, &arr, &arr, 28.0, t).unwrap().pair(0, 0)[0].amplitude;
        let base = at(0.0);
        let phase1 = (at(1e-3) / base).arg();
        let phase2 = (at(2e-3) / base).arg();
        let expected = (2.0 * phase1).rem_euclid(2.0 * PI);
        assert!((phase2.rem_euclid(2.0 * PI) - expected).abs() < 1e-9);
    }

    #[test]
    fn half_wavelength_array_gives_pi() {
        let lambda = SPEED_OF_LIGHT / 28e9;
        let rx = AntennaArray::uniform_linear(2, lambda / 2.0).unwrap();
        let tx = AntennaArray::single();
        let taps = render_cir(&one_path(path()), &tx, &rx, 28.0, 0.0).unwrap();
        let a0 = taps.pair(0, 0)[0].amplitude;
        let a1 = taps.pair(1, 0)[0].amplitude;
        assert!(((a1 / a0).arg().abs() - PI).abs() < 1e-9);
    }

    #[test]
    fn scale_multiplies_amplitude() {
        let arr = AntennaArray::single();
        let taps = render_cir_scaled(&one_path(path()), &[3.0], &arr, &arr, 28.0, 0.0).unwrap();
        assert!((taps.pair(0, 0)[0].amplitude.norm() - 0.3).abs() < 1e-14);
    }

    #[test]
    fn cross_polar_terms_use_xpr() {
        let mut p = path();
        p.xpr_lin = 4.0;
        p.phases = [0.0; 4];
        let slanted = AntennaArray::new(
            vec![[0.0; 3]],
            vec![FieldPattern::Slanted { slant_deg: 90.0 }],
        )
        .unwrap();
        let iso = AntennaArray::single();
        // theta-polarized tx into phi-polarized rx only couples via the cross term.
        let taps = render_cir(&one_path(p), &iso, &slanted, 28.0, 0.0).unwrap();
        assert!((taps.pair(0, 0)[0].amplitude.norm() - 0.1 * 0.5).abs() < 1e-12);
    }

    #[test]
    fn mismatched_geometry_rejected() {
        assert!(matches!(
            AntennaArray::new(vec![[0.0; 3]; 2], vec![FieldPattern::Isotropic]),
            Err(Error::MalformedInput(_))
        ));
        let arr = AntennaArray::single();
        assert!(render_cir_scaled(&one_path(path()), &[1.0, 2.0], &arr, &arr, 28.0, 0.0).is_err());
    }
}
