//! SNR link budget in the dB domain.
//!
//! `SNR = EIRP + G/T - 10 log10(k) - FSPL - SF - SL - AL - 10 log10(BW)`

use serde::{Deserialize, Serialize};

use crate::constants::BOLTZMANN_J_K;
use crate::error::LinkBudgetError;
use crate::geometry::slant_range;

/// Lowest downlink SNR NB-IoT tolerates, dB, at [`DL_REFERENCE_BW_HZ`].
pub const DL_SNR_FLOOR_DB: f64 = -14.5;
pub const DL_REFERENCE_BW_HZ: f64 = 180e3;
/// Lowest uplink SNR NB-IoT supports, dB, at [`UL_REFERENCE_BW_HZ`].
pub const UL_SNR_FLOOR_DB: f64 = -13.8;
pub const UL_REFERENCE_BW_HZ: f64 = 15e3;
pub const UL_MIN_BW_HZ: f64 = 3.75e3;
pub const MAX_COUPLING_LOSS_DB: f64 = 164.0;
pub const MAX_TTI_S: f64 = 20.0;

/// FSPL constant for km and GHz.
pub const FSPL_CONSTANT_DB: f64 = 92.45;

/// `-10 log10(k)`, dB.
pub fn boltzmann_term_db() -> f64 {
    -10.0 * BOLTZMANN_J_K.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkDirection {
    Downlink,
    Uplink,
}

impl LinkDirection {
    pub fn label(self) -> &'static str {
        match self {
            LinkDirection::Downlink => "DL",
            LinkDirection::Uplink => "UL",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetParams {
    pub eirp_dbw: f64,
    pub g_over_t_db_per_k: f64,
    pub bandwidth_hz: f64,
    pub fspl_db: f64,
    pub shadow_fading_db: f64,
    pub scintillation_loss_db: f64,
    pub atmospheric_loss_db: f64,
}

impl LinkBudgetParams {
    pub fn validate(&self) -> Result<(), LinkBudgetError> {
        let err = |m: &str| Err(LinkBudgetError::Domain(m.to_string()));
        if !(self.bandwidth_hz > 0.0) {
            return err("bandwidth must be positive");
        }
        if !(self.fspl_db > 0.0) {
            return err("FSPL must be positive");
        }
        if self.shadow_fading_db < 0.0 || self.scintillation_loss_db < 0.0 || self.atmospheric_loss_db < 0.0 {
            return err("SF, SL and AL must be non-negative");
        }
        Ok(())
    }
}

/// Free-space path loss, dB.
pub fn fspl(distance_km: f64, frequency_ghz: f64) -> Result<f64, LinkBudgetError> {
    if !(distance_km > 0.0) || !(frequency_ghz > 0.0) {
        return Err(LinkBudgetError::Domain(format!(
            "distance {distance_km} km and frequency {frequency_ghz} GHz must be positive"
        )));
    }
    Ok(FSPL_CONSTANT_DB + 20.0 * distance_km.log10() + 20.0 * frequency_ghz.log10())
}

pub fn snr(p: &LinkBudgetParams) -> f64 {
    p.eirp_dbw + p.g_over_t_db_per_k + boltzmann_term_db()
        - p.fspl_db
        - p.shadow_fading_db
        - p.scintillation_loss_db
        - p.atmospheric_loss_db
        - 10.0 * p.bandwidth_hz.log10()
}

/// SNR after moving the same power from `bw_old_hz` into `bw_new_hz`.
pub fn bandwidth_rescale(snr_db: f64, bw_old_hz: f64, bw_new_hz: f64) -> f64 {
    snr_db + 10.0 * (bw_old_hz / bw_new_hz).log10()
}

/// Slack absorbing floating-point rounding of the bandwidth rescale, dB.
const FLOOR_COMPARE_EPS_DB: f64 = 1e-9;

/// Whether `snr_db` at `bw_hz` meets the NB-IoT coverage floor for `dir`.
/// The SNR is first rescaled to the floor's reference bandwidth; the floor
/// itself is inclusive.
pub fn coverage_check(snr_db: f64, dir: LinkDirection, bw_hz: f64) -> bool {
    let (floor, reference) = coverage_floor(dir);
    bandwidth_rescale(snr_db, bw_hz, reference) >= floor - FLOOR_COMPARE_EPS_DB
}

/// `(floor_db, reference_bw_hz)` for a direction.
pub fn coverage_floor(dir: LinkDirection) -> (f64, f64) {
    match dir {
        LinkDirection::Downlink => (DL_SNR_FLOOR_DB, DL_REFERENCE_BW_HZ),
        LinkDirection::Uplink => (UL_SNR_FLOOR_DB, UL_REFERENCE_BW_HZ),
    }
}

/// Coverage floor translated to an arbitrary bandwidth.
pub fn snr_threshold_at(dir: LinkDirection, bw_hz: f64) -> f64 {
    let (floor, reference) = coverage_floor(dir);
    bandwidth_rescale(floor, reference, bw_hz)
}

/// Adds a directional device antenna gain to the transmit EIRP.
pub fn directional_antenna_adjust(
    params: &LinkBudgetParams,
    gain_dbi: f64,
) -> Result<LinkBudgetParams, LinkBudgetError> {
    if !(gain_dbi >= 0.0) {
        return Err(LinkBudgetError::Domain(format!("antenna gain {gain_dbi} dBi must be >= 0")));
    }
    Ok(LinkBudgetParams { eirp_dbw: params.eirp_dbw + gain_dbi, ..*params })
}

/// Link budget inputs without the geometry-dependent FSPL, with the
/// atmospheric loss given as a best/worst range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetTemplate {
    pub eirp_dbw: f64,
    pub g_over_t_db_per_k: f64,
    pub bandwidth_hz: f64,
    #[serde(default = "default_shadow_fading")]
    pub shadow_fading_db: f64,
    #[serde(default = "default_scintillation")]
    pub scintillation_loss_db: f64,
    #[serde(default = "default_al_min")]
    pub atmospheric_loss_min_db: f64,
    #[serde(default = "default_al_max")]
    pub atmospheric_loss_max_db: f64,
}

fn default_shadow_fading() -> f64 {
    3.0
}
fn default_scintillation() -> f64 {
    2.2
}
fn default_al_min() -> f64 {
    0.03
}
fn default_al_max() -> f64 {
    0.2
}

impl LinkBudgetTemplate {
    pub fn params(&self, fspl_db: f64, atmospheric_loss_db: f64) -> LinkBudgetParams {
        LinkBudgetParams {
            eirp_dbw: self.eirp_dbw,
            g_over_t_db_per_k: self.g_over_t_db_per_k,
            bandwidth_hz: self.bandwidth_hz,
            fspl_db,
            shadow_fading_db: self.shadow_fading_db,
            scintillation_loss_db: self.scintillation_loss_db,
            atmospheric_loss_db,
        }
    }

    pub const fn geo_downlink() -> Self {
        Self::table(51.6, -31.6)
    }
    pub const fn geo_uplink() -> Self {
        Self::table(-7.0, 19.0)
    }
    pub const fn leo_downlink() -> Self {
        Self::table(26.6, -31.6)
    }
    pub const fn leo_uplink() -> Self {
        Self::table(-7.0, 1.1)
    }

    const fn table(eirp_dbw: f64, g_over_t_db_per_k: f64) -> Self {
        Self {
            eirp_dbw,
            g_over_t_db_per_k,
            bandwidth_hz: 180e3,
            shadow_fading_db: 3.0,
            scintillation_loss_db: 2.2,
            atmospheric_loss_min_db: 0.03,
            atmospheric_loss_max_db: 0.2,
        }
    }
}

/// Best (zenith, lowest AL) and worst (minimum elevation, highest AL) SNR of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrBounds {
    pub fspl_min_db: f64,
    pub fspl_max_db: f64,
    pub snr_worst_db: f64,
    pub snr_best_db: f64,
}

pub fn snr_bounds(
    template: &LinkBudgetTemplate,
    altitude_km: f64,
    carrier_hz: f64,
    min_elevation_deg: f64,
) -> Result<SnrBounds, LinkBudgetError> {
    let geometry = |e: f64| slant_range(e, altitude_km).map_err(|e| LinkBudgetError::Domain(e.to_string()));
    let ghz = carrier_hz / 1e9;
    let fspl_min = fspl(geometry(90.0)?, ghz)?;
    let fspl_max = fspl(geometry(min_elevation_deg)?, ghz)?;
    let best = template.params(fspl_min, template.atmospheric_loss_min_db);
    let worst = template.params(fspl_max, template.atmospheric_loss_max_db);
    best.validate()?;
    worst.validate()?;
    Ok(SnrBounds { fspl_min_db: fspl_min, fspl_max_db: fspl_max, snr_worst_db: snr(&worst), snr_best_db: snr(&best) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn fspl_examples() {
        assert!(close(fspl(35_786.0, 2.0).unwrap(), 189.5, 0.1));
        assert!(close(fspl(600.0, 2.0).unwrap(), 154.0, 0.1));
        assert_eq!(fspl(1.0, 1.0).unwrap(), 92.45);
        assert!(fspl(0.0, 2.0).is_err());
        assert!(fspl(10.0, -1.0).is_err());
    }

    #[test]
    fn fspl_distance_doubling() {
        let a = fspl(1000.0, 2.0).unwrap();
        let b = fspl(2000.0, 2.0).unwrap();
        assert!(close(b - a, 6.0206, 1e-4));
    }

    #[test]
    fn boltzmann_term_value() {
        assert!(close(boltzmann_term_db(), 228.599, 5e-4));
    }

    #[test]
    fn snr_examples() {
        let geo_dl_best = LinkBudgetTemplate::geo_downlink().params(189.5, 0.03);
        assert!(close(snr(&geo_dl_best), 1.27, 0.15));
        let geo_ul_worst = LinkBudgetTemplate::geo_uplink().params(190.6, 0.2);
        assert!(close(snr(&geo_ul_worst), -7.96, 0.15));
        let leo_ul_best = LinkBudgetTemplate::leo_uplink().params(154.0, 0.03);
        assert!(close(snr(&leo_ul_best), 10.9, 0.15));
    }

    #[test]
    fn rescale_examples() {
        assert!(close(bandwidth_rescale(0.0, 180e3, 15e3), 10.79, 0.005));
        assert_eq!(bandwidth_rescale(-3.3, 15e3, 15e3), -3.3);
        assert!(close(bandwidth_rescale(1.0, 180e3, 3.75e3), 1.0 + 16.81, 0.005));
    }

    #[test]
    fn coverage_examples() {
        assert!(coverage_check(-14.5, LinkDirection::Downlink, 180e3));
        assert!(!coverage_check(-13.9, LinkDirection::Uplink, 15e3));
        assert!(coverage_check(-13.8, LinkDirection::Uplink, 15e3));
        assert!(coverage_check(0.0, LinkDirection::Downlink, 180e3));
        // The same power spread over 180 kHz reads 10.79 dB lower than at 15 kHz.
        assert!(coverage_check(-13.8 - 10.0 * 12f64.log10(), LinkDirection::Uplink, 180e3));
        assert!(!coverage_check(-13.9 - 10.0 * 12f64.log10(), LinkDirection::Uplink, 180e3));
    }

    #[test]
    fn antenna_adjust_examples() {
        let p = LinkBudgetTemplate::geo_uplink().params(190.6, 0.2);
        assert_eq!(directional_antenna_adjust(&p, 0.0).unwrap(), p);
        let adj = directional_antenna_adjust(&p, 10.0).unwrap();
        assert!(close(snr(&adj), 2.04, 0.15));
        assert_eq!(adj.g_over_t_db_per_k, p.g_over_t_db_per_k);
        assert!(directional_antenna_adjust(&p, -1.0).is_err());
        let narrow = bandwidth_rescale(snr(&p), 180e3, 15e3);
        assert!(close(narrow, 2.8, 0.2));
    }

    #[test]
    fn param_validation() {
        let mut p = LinkBudgetTemplate::geo_uplink().params(190.6, 0.2);
        assert!(p.validate().is_ok());
        p.bandwidth_hz = 0.0;
        assert!(p.validate().is_err());
        p.bandwidth_hz = 15e3;
        p.atmospheric_loss_db = -0.1;
        assert!(p.validate().is_err());
    }
}
