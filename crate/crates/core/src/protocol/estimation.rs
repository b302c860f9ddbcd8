//! Device-side delay, timing-advance and Doppler estimation from GNSS and
//! broadcast ephemeris.

use serde::{Deserialize, Serialize};

use crate::constants::SPEED_OF_LIGHT_KM_S;
use crate::error::ProtocolError;
use crate::geometry::{elevation_deg, geometry_sample, GeometrySample};
use crate::orbit::SatelliteState;

use super::types::{DeviceContext, Ephemeris, RrcState, TaConfig, TimingAdvanceCommand};

/// Slack for satellites sitting exactly at the minimum elevation, deg.
const ELEVATION_EPS_DEG: f64 = 1e-9;

/// Satellite the device would use at one instant, as seen through the ephemeris.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServingSatellite {
    pub index: usize,
    pub state: SatelliteState,
    pub elevation_deg: f64,
}

/// Highest satellite at or above the ephemeris minimum elevation, evaluated at
/// `t_s - staleness` (stale data is used as-is, without forward propagation).
pub fn serving_satellite(device: &DeviceContext, eph: &Ephemeris, t_s: f64) -> Result<ServingSatellite, ProtocolError> {
    let t_eval = t_s - eph.staleness_s;
    eph.satellites
        .iter()
        .enumerate()
        .map(|(index, o)| {
            let state = o.state_at(t_eval);
            ServingSatellite { index, state, elevation_deg: elevation_deg(&state, &device.gnss_position) }
        })
        .filter(|s| s.elevation_deg >= eph.min_elevation_deg - ELEVATION_EPS_DEG)
        .max_by(|a, b| a.elevation_deg.total_cmp(&b.elevation_deg).then(b.index.cmp(&a.index)))
        .ok_or(ProtocolError::NotReachable { min_elevation_deg: eph.min_elevation_deg })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceDelayEstimate {
    /// Estimated one-way service-link delay, ms.
    pub delay_ms: f64,
    pub satellite: usize,
    /// Geometry as estimated by the device.
    pub sample: GeometrySample,
    /// Worst-case estimation error from GNSS error and ephemeris age, ms.
    pub error_bound_ms: f64,
}

/// One-way service-link delay from the device's GNSS fix and the ephemeris.
pub fn estimate_service_delay(
    device: &DeviceContext,
    eph: &Ephemeris,
    t_s: f64,
) -> Result<ServiceDelayEstimate, ProtocolError> {
    estimate_at_carrier(device, eph, t_s, 1.0)
}

fn estimate_at_carrier(
    device: &DeviceContext,
    eph: &Ephemeris,
    t_s: f64,
    carrier_hz: f64,
) -> Result<ServiceDelayEstimate, ProtocolError> {
    let serving = serving_satellite(device, eph, t_s)?;
    let sample = geometry_sample(&serving.state, &device.gnss_position, carrier_hz)?;
    let error_km = device.gnss_error_radial_m / 1000.0 + eph.staleness_s * sample.range_rate_km_s.abs();
    Ok(ServiceDelayEstimate {
        delay_ms: sample.one_way_delay_ms,
        satellite: serving.index,
        sample,
        error_bound_ms: error_km / SPEED_OF_LIGHT_KM_S * 1e3,
    })
}

/// Transmit advance for the preamble: the estimated service-link round trip, ms.
pub fn precompensate_preamble(delay_est_ms: f64) -> Result<f64, ProtocolError> {
    if !(delay_est_ms >= 0.0) || !delay_est_ms.is_finite() {
        return Err(ProtocolError::Domain(format!("delay estimate {delay_est_ms} ms must be >= 0")));
    }
    Ok(2.0 * delay_est_ms)
}

/// Arrival misalignment at the receiver from a one-way estimation error, us.
/// Positive means the preamble arrives late.
pub fn preamble_residual_us(true_delay_ms: f64, estimated_delay_ms: f64) -> f64 {
    2.0 * (true_delay_ms - estimated_delay_ms) * 1e3
}

/// Quantize a measured residual into a bipolar TA command.
pub fn build_ta_command(residual_us: f64, ta: &TaConfig) -> Result<TimingAdvanceCommand, ProtocolError> {
    if !residual_us.is_finite() || residual_us.abs() > ta.max_residual_us() {
        return Err(ProtocolError::TaOutOfRange { residual_us, range_us: ta.bipolar_range_us });
    }
    let steps = ((residual_us / ta.step_us).round() as i32).clamp(-ta.max_steps(), ta.max_steps());
    Ok(TimingAdvanceCommand { steps, step_size_us: ta.step_us })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaUpdate {
    /// New aggregate timing advance, us.
    pub timing_advance_us: f64,
    pub delay_drift_us_per_s: f64,
    /// Worst-case alignment error before the next update, us.
    pub max_alignment_error_us: f64,
}

/// Connected-mode autonomous TA refresh.
///
/// The advance is set for the middle of the coming interval using the
/// ephemeris-predicted delay drift, so the alignment error stays within
/// `|drift| * interval` over the whole interval.
pub fn autonomous_ta_update(
    device: &DeviceContext,
    eph: &Ephemeris,
    t_s: f64,
    interval_ms: f64,
) -> Result<TaUpdate, ProtocolError> {
    if device.rrc_state != RrcState::Connected {
        return Err(ProtocolError::Domain("autonomous TA updates need a connected device".into()));
    }
    if !(interval_ms > 0.0) {
        return Err(ProtocolError::Domain("update interval must be positive".into()));
    }
    let est = estimate_service_delay(device, eph, t_s)?;
    let drift = est.sample.delay_drift_us_per_s;
    let mid_delay_us = est.delay_ms * 1e3 + drift * interval_ms * 1e-3 / 2.0;
    Ok(TaUpdate {
        timing_advance_us: (2.0 * mid_delay_us + device.ta_command_us).max(0.0),
        delay_drift_us_per_s: drift,
        max_alignment_error_us: drift.abs() * interval_ms * 1e-3,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DopplerCompensation {
    /// Frequency offset to apply, Hz (the negated predicted Doppler).
    pub offset_hz: f64,
    pub predicted_doppler_hz: f64,
    pub doppler_rate_hz_per_s: f64,
    /// Worst-case residual between re-evaluations at the given cadence, Hz.
    pub residual_bound_hz: f64,
}

/// Half-width of the central difference used for the Doppler rate, s.
const DOPPLER_RATE_STEP_S: f64 = 0.5;

/// Predicted Doppler at `fc` and the compensation re-evaluated every `cadence_ms`.
pub fn doppler_precompensation(
    device: &DeviceContext,
    eph: &Ephemeris,
    carrier_hz: f64,
    t_s: f64,
    cadence_ms: f64,
) -> Result<DopplerCompensation, ProtocolError> {
    if !(cadence_ms > 0.0) {
        return Err(ProtocolError::Domain("compensation cadence must be positive".into()));
    }
    let est = estimate_at_carrier(device, eph, t_s, carrier_hz)?;
    let orbit = &eph.satellites[est.satellite];
    let t_eval = t_s - eph.staleness_s;
    let doppler_at =
        |t: f64| geometry_sample(&orbit.state_at(t), &device.gnss_position, carrier_hz).map(|g| g.doppler_hz);
    let rate = (doppler_at(t_eval + DOPPLER_RATE_STEP_S)? - doppler_at(t_eval - DOPPLER_RATE_STEP_S)?)
        / (2.0 * DOPPLER_RATE_STEP_S);
    let doppler = est.sample.doppler_hz;
    Ok(DopplerCompensation {
        offset_hz: if doppler == 0.0 { 0.0 } else { -doppler },
        predicted_doppler_hz: doppler,
        doppler_rate_hz_per_s: rate,
        residual_bound_hz: doppler_residual_bound_hz(rate, cadence_ms),
    })
}

/// Frequency drift accumulated between compensation updates, Hz.
pub fn doppler_residual_bound_hz(doppler_rate_hz_per_s: f64, cadence_ms: f64) -> f64 {
    doppler_rate_hz_per_s.abs() * cadence_ms * 1e-3
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::GroundPosition;
    use crate::orbit::OrbitSpec;

    fn device_at(p: GroundPosition) -> DeviceContext {
        DeviceContext::new(p)
    }

    #[test]
    fn geo_zenith_delay_and_advance() {
        let d = device_at(GroundPosition::new(0.0, 20.0, 0.0));
        let eph = Ephemeris::new(vec![OrbitSpec::geostationary(20.0)]);
        let est = estimate_service_delay(&d, &eph, 0.0).unwrap();
        assert!((est.delay_ms - 119.37).abs() < 0.01, "{}", est.delay_ms);
        let adv = precompensate_preamble(est.delay_ms).unwrap();
        assert!((adv - 238.73).abs() < 0.02);
        assert!(precompensate_preamble(-1.0).is_err());
    }

    #[test]
    fn residual_doubles_one_way_error() {
        assert_eq!(preamble_residual_us(100.0, 100.0), 0.0);
        assert!((preamble_residual_us(1.0005, 1.0) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn ta_command_examples() {
        let ta = TaConfig::default();
        assert_eq!(build_ta_command(0.0, &ta).unwrap().steps, 0);
        assert_eq!(build_ta_command(1.04, &ta).unwrap().steps, 2);
        assert_eq!(build_ta_command(-0.52, &ta).unwrap().steps, -1);
        assert!(matches!(build_ta_command(40.0, &ta), Err(ProtocolError::TaOutOfRange { .. })));
        assert!(build_ta_command(f64::NAN, &ta).is_err());
    }

    #[test]
    fn unreachable_when_below_min_elevation() {
        let d = device_at(GroundPosition::new(0.0, 120.0, 0.0));
        let eph = Ephemeris::new(vec![OrbitSpec::geostationary(0.0)]);
        assert!(matches!(estimate_service_delay(&d, &eph, 0.0), Err(ProtocolError::NotReachable { .. })));
    }

    #[test]
    fn picks_highest_satellite() {
        let d = device_at(GroundPosition::new(0.0, 10.0, 0.0));
        let eph = Ephemeris::new(vec![OrbitSpec::geostationary(40.0), OrbitSpec::geostationary(12.0)]);
        assert_eq!(serving_satellite(&d, &eph, 0.0).unwrap().index, 1);
    }

    #[test]
    fn geo_autonomous_update_is_noop() {
        let mut d = device_at(GroundPosition::new(30.0, 5.0, 0.0));
        d.complete_random_access().unwrap();
        let eph = Ephemeris::new(vec![OrbitSpec::geostationary(0.0)]);
        let a = autonomous_ta_update(&d, &eph, 0.0, 100.0).unwrap();
        d.timing_advance_us = a.timing_advance_us;
        let b = autonomous_ta_update(&d, &eph, 3600.0, 100.0).unwrap();
        assert!((a.timing_advance_us - b.timing_advance_us).abs() < 1e-6);
        assert!(b.max_alignment_error_us < 1e-6);
        d.release().unwrap();
        assert!(autonomous_ta_update(&d, &eph, 0.0, 100.0).is_err());
    }

    #[test]
    fn geo_doppler_offset_is_zero() {
        let d = device_at(GroundPosition::new(45.0, 3.0, 0.0));
        let eph = Ephemeris::new(vec![OrbitSpec::geostationary(0.0)]);
        let c = doppler_precompensation(&d, &eph, 2e9, 100.0, 64.0).unwrap();
        assert!(c.offset_hz.abs() < 1e-3, "{}", c.offset_hz);
    }
}
