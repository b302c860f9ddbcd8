//! RRC-idle cell suitability, distance ranking and measurement-capability checks.

use serde::{Deserialize, Serialize};

use crate::error::{MobilityError, ProtocolError};
use crate::geo::GroundPosition;
use crate::geometry::{geometry_sample, BeamSpec};
use crate::link_budget::{fspl, snr, LinkBudgetTemplate};
use crate::orbit::SatelliteState;
use crate::protocol::{estimate_service_delay, serving_satellite, DeviceContext, SystemInformation};

/// Gain roll-off at the beam edge relative to the beam center, dB.
pub const BEAM_EDGE_ROLLOFF_DB: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellCandidate {
    pub cell_id: u32,
    pub si: SystemInformation,
    pub estimated_rtt_ms: f64,
    /// Great-circle distance from the device to the cell center, km.
    pub center_distance_km: f64,
}

/// Candidate as seen by a device from its GNSS fix and the broadcast ephemeris.
///
/// The RTT estimate covers the service link and, when the gateway location is
/// broadcast, the feeder link.
pub fn build_candidate(
    cell_id: u32,
    si: SystemInformation,
    device: &DeviceContext,
    t_s: f64,
) -> Result<CellCandidate, ProtocolError> {
    let est = estimate_service_delay(device, &si.ephemeris, t_s)?;
    let feeder_ms = match &si.gateway {
        Some(gw) => {
            let sat = serving_satellite(device, &si.ephemeris, t_s)?;
            geometry_sample(&sat.state, gw, 1.0)?.one_way_delay_ms
        }
        None => 0.0,
    };
    let center_distance_km = device.gnss_position.geodesic_distance_km(&si.cell_center);
    Ok(CellCandidate { cell_id, si, estimated_rtt_ms: 2.0 * (est.delay_ms + feeder_ms), center_distance_km })
}

/// A cell is suitable when the estimated RTT does not exceed the broadcast maximum.
pub fn cell_suitability(candidate: &CellCandidate) -> bool {
    candidate.estimated_rtt_ms <= candidate.si.max_rtt_ms
}

/// Orders candidates by great-circle distance to their centers, then by cell id.
/// Distances are recomputed from `device_pos`.
pub fn rank_cells(
    device_pos: &GroundPosition,
    candidates: &[CellCandidate],
) -> Result<Vec<CellCandidate>, MobilityError> {
    if candidates.is_empty() {
        return Err(MobilityError::NoCell);
    }
    let mut ranked: Vec<CellCandidate> = candidates
        .iter()
        .cloned()
        .map(|mut c| {
            c.center_distance_km = device_pos.geodesic_distance_km(&c.si.cell_center);
            c
        })
        .collect();
    ranked.sort_by(|a, b| a.center_distance_km.total_cmp(&b.center_distance_km).then(a.cell_id.cmp(&b.cell_id)));
    Ok(ranked)
}

/// Whether a device measuring `capability` frequencies supports reuse 1/`reuse_denominator`.
pub fn measurement_capability_check(capability: u32, reuse_denominator: u32) -> Result<bool, MobilityError> {
    if capability < 1 || reuse_denominator < 1 {
        return Err(MobilityError::Domain("capability and reuse denominator must be >= 1".into()));
    }
    Ok(capability >= reuse_denominator)
}

/// Downlink SNR a device would see from a spot beam of the given satellite:
/// the link budget at the device's slant range, less a quadratic gain roll-off
/// reaching [`BEAM_EDGE_ROLLOFF_DB`] at the beam edge.
pub fn model_snr(
    template: &LinkBudgetTemplate,
    carrier_hz: f64,
    sat: &SatelliteState,
    device: &GroundPosition,
    beam: &BeamSpec,
) -> Result<f64, MobilityError> {
    let g = geometry_sample(sat, device, carrier_hz).map_err(|e| MobilityError::Domain(e.to_string()))?;
    let loss = fspl(g.slant_range_km, carrier_hz / 1e9).map_err(|e| MobilityError::Domain(e.to_string()))?;
    let radius = beam.diameter_km / 2.0;
    if !(radius > 0.0) {
        return Err(MobilityError::Domain("beam diameter must be positive".into()));
    }
    let x = device.geodesic_distance_km(&beam.center) / radius;
    Ok(snr(&template.params(loss, template.atmospheric_loss_max_db)) - BEAM_EDGE_ROLLOFF_DB * x * x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::Ephemeris;

    fn si(center: GroundPosition, max_rtt_ms: f64) -> SystemInformation {
        SystemInformation {
            ephemeris: Ephemeris::new(vec![crate::orbit::OrbitSpec::geostationary(0.0)]),
            max_rtt_ms,
            cell_center: center,
            carrier_frequency_hz: 2e9,
            ul_bandwidths_hz: vec![15e3],
            measurement_frequencies: 3,
            gateway: None,
        }
    }

    fn cand(id: u32, rtt: f64, max: f64, center: GroundPosition) -> CellCandidate {
        CellCandidate { cell_id: id, si: si(center, max), estimated_rtt_ms: rtt, center_distance_km: 0.0 }
    }

    #[test]
    fn suitability_is_inclusive() {
        let c = GroundPosition::new(0.0, 0.0, 0.0);
        assert!(cell_suitability(&cand(1, 541.3, 541.3, c)));
        assert!(!cell_suitability(&cand(1, 560.0, 541.3, c)));
    }

    #[test]
    fn ranking_and_ties() {
        let dev = GroundPosition::new(10.0, 10.0, 0.0);
        let a = cand(7, 10.0, 20.0, dev.destination(0.0, 100.0));
        let b = cand(3, 10.0, 20.0, dev.destination(180.0, 100.0));
        let c = cand(5, 10.0, 20.0, dev);
        let r = rank_cells(&dev, &[a, b, c]).unwrap();
        let ids: Vec<u32> = r.iter().map(|c| c.cell_id).collect();
        assert_eq!(ids[0], 5);
        assert_eq!(&ids[1..], &[3, 7]);
        assert_eq!(rank_cells(&dev, &[]), Err(MobilityError::NoCell));
    }

    #[test]
    fn capability_examples() {
        assert!(measurement_capability_check(3, 3).unwrap());
        assert!(!measurement_capability_check(3, 4).unwrap());
        assert!(measurement_capability_check(4, 4).unwrap());
        assert!(measurement_capability_check(0, 3).is_err());
    }
}
