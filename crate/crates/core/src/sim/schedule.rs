//! Service intervals of earth-fixed beams and the resulting satellite switches.

use serde::{Deserialize, Serialize};

use crate::error::GeometryError;
use crate::geo::GroundPosition;
use crate::geometry::{bisect, elevation_deg};
use crate::orbit::{OrbitKind, OrbitSpec};

/// Coarse sweep step before bisection, s.
const LEO_STEP_S: f64 = 1.0;
const GEO_STEP_S: f64 = 60.0;

/// Time span during which one satellite sees the cell center at or above the
/// minimum elevation. `end_s = None` means service never ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ServiceInterval {
    pub satellite: usize,
    pub start_s: f64,
    pub end_s: Option<f64>,
}

/// Hand-over of the cell's service link from one satellite to another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub time_s: f64,
    pub from: usize,
    pub to: usize,
}

/// Intervals in `[start_s, start_s + horizon_s]` during which each satellite
/// serves `cell_center`, sorted by start time. Geosynchronous satellites that
/// stay visible for the whole horizon yield one unbounded interval; other
/// intervals still open at the horizon are truncated there.
pub fn earth_fixed_beam_schedule(
    orbits: &[OrbitSpec],
    cell_center: &GroundPosition,
    min_elevation_deg: f64,
    start_s: f64,
    horizon_s: f64,
) -> Result<Vec<ServiceInterval>, GeometryError> {
    if !(horizon_s > 0.0) || !(-90.0..=90.0).contains(&min_elevation_deg) {
        return Err(GeometryError::Domain("horizon must be positive and elevation within [-90, 90]".into()));
    }
    let end = start_s + horizon_s;
    let mut out = Vec::new();
    for (idx, orbit) in orbits.iter().enumerate() {
        orbit.validate()?;
        let elev = |t: f64| elevation_deg(&orbit.state_at(t), cell_center);
        let step = match orbit.kind {
            OrbitKind::Geosynchronous => GEO_STEP_S,
            OrbitKind::LeoCircular => LEO_STEP_S,
        };
        let n = (horizon_s / step).ceil() as usize;
        let mut open: Option<f64> = None;
        let mut prev = start_s;
        for k in 0..=n {
            let t = (start_s + k as f64 * step).min(end);
            let above = elev(t) >= min_elevation_deg;
            match (above, open) {
                (true, None) => open = Some(if k == 0 { t } else { bisect(&elev, min_elevation_deg, prev, t) }),
                (false, Some(s)) => {
                    out.push(ServiceInterval {
                        satellite: idx,
                        start_s: s,
                        end_s: Some(bisect(&elev, min_elevation_deg, prev, t)),
                    });
                    open = None;
                }
                _ => {}
            }
            prev = t;
        }
        if let Some(s) = open {
            let unbounded = orbit.kind == OrbitKind::Geosynchronous && s == start_s;
            out.push(ServiceInterval { satellite: idx, start_s: s, end_s: if unbounded { None } else { Some(end) } });
        }
    }
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then(a.satellite.cmp(&b.satellite)));
    Ok(out)
}

/// Switch events implied by consecutive intervals of different satellites.
/// With overlapping coverage the switch happens mid-overlap, otherwise when
/// the next satellite rises.
pub fn switch_events(intervals: &[ServiceInterval]) -> Vec<SwitchEvent> {
    intervals
        .windows(2)
        .filter(|w| w[0].satellite != w[1].satellite)
        .map(|w| {
            let (cur, next) = (w[0], w[1]);
            let time_s = match cur.end_s {
                Some(e) if e > next.start_s => 0.5 * (next.start_s + e),
                _ => next.start_s,
            };
            SwitchEvent { time_s, from: cur.satellite, to: next.satellite }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geostationary_is_unbounded() {
        let s = earth_fixed_beam_schedule(
            &[OrbitSpec::geostationary(0.0)],
            &GroundPosition::new(40.0, 10.0, 0.0),
            10.0,
            0.0,
            86_400.0,
        )
        .unwrap();
        assert_eq!(s, vec![ServiceInterval { satellite: 0, start_s: 0.0, end_s: None }]);
    }

    #[test]
    fn polar_pair_switches_every_half_period() {
        let a = OrbitSpec::leo(600.0, 90.0, 0.0, 0.0);
        let b = OrbitSpec::leo(600.0, 90.0, 0.0, 180.0);
        let pole = GroundPosition::new(90.0, 0.0, 0.0);
        let s = earth_fixed_beam_schedule(&[a, b], &pole, 10.0, 0.0, 4.0 * a.period_s()).unwrap();
        let sw = switch_events(&s);
        assert!(sw.len() >= 5);
        for w in sw.windows(2) {
            let gap = w[1].time_s - w[0].time_s;
            assert!((gap / (a.period_s() / 2.0) - 1.0).abs() < 1e-3, "{gap}");
        }
    }
}
