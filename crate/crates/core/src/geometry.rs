//! Service- and feeder-link geometry: elevation, slant range, delay, range
//! rate, Doppler, visibility and in-beam spreads.

use serde::{Deserialize, Serialize};

use crate::constants::{delay_ms, EARTH_RADIUS_KM, SPEED_OF_LIGHT_KM_S};
use crate::error::GeometryError;
use crate::geo::GroundPosition;
use crate::orbit::{OrbitSpec, SatelliteState};

/// Link geometry between a ground point and a satellite at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometrySample {
    pub elevation_deg: f64,
    pub slant_range_km: f64,
    pub one_way_delay_ms: f64,
    /// Positive when the satellite recedes.
    pub range_rate_km_s: f64,
    pub doppler_hz: f64,
    pub delay_drift_us_per_s: f64,
}

impl GeometrySample {
    /// Doppler as a fraction of the carrier, in ppm (signed).
    pub fn doppler_ppm(&self) -> f64 {
        -self.range_rate_km_s / SPEED_OF_LIGHT_KM_S * 1e6
    }
}

/// Earth-fixed spot beam footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub center: GroundPosition,
    pub diameter_km: f64,
}

/// Slant range from a ground terminal at `elevation_deg` to a satellite at `altitude_km`.
pub fn slant_range(elevation_deg: f64, altitude_km: f64) -> Result<f64, GeometryError> {
    if !(0.0..=90.0).contains(&elevation_deg) {
        return Err(GeometryError::Domain(format!("elevation {elevation_deg} deg outside [0, 90]")));
    }
    if !(altitude_km > 0.0) {
        return Err(GeometryError::Domain(format!("altitude {altitude_km} km must be positive")));
    }
    let re = EARTH_RADIUS_KM;
    let r = re + altitude_km;
    let e = elevation_deg.to_radians();
    Ok((r * r - (re * e.cos()).powi(2)).sqrt() - re * e.sin())
}

/// Earth central angle (radians) between the sub-satellite point and a
/// ground point that sees the satellite at `elevation_deg`.
pub fn central_angle_for_elevation(elevation_deg: f64, altitude_km: f64) -> f64 {
    let e = elevation_deg.to_radians();
    let nadir = (EARTH_RADIUS_KM * e.cos() / (EARTH_RADIUS_KM + altitude_km)).asin();
    std::f64::consts::FRAC_PI_2 - e - nadir
}

/// Ground point seeing a satellite above `sub_point` (at `altitude_km`) at
/// the given elevation, displaced from the sub-point along `azimuth_deg`.
pub fn point_at_elevation(
    sub_point: &GroundPosition,
    altitude_km: f64,
    elevation_deg: f64,
    azimuth_deg: f64,
) -> GroundPosition {
    let lambda = central_angle_for_elevation(elevation_deg, altitude_km);
    let mut p = *sub_point;
    p.altitude_m = 0.0;
    p.destination(azimuth_deg, lambda * EARTH_RADIUS_KM)
}

/// Elevation of the satellite above the local horizon of `ground`, degrees.
pub fn elevation_deg(sat: &SatelliteState, ground: &GroundPosition) -> f64 {
    let los = sat.position_km - ground.to_ecef();
    (los.dot(ground.up()) / los.norm()).clamp(-1.0, 1.0).asin().to_degrees()
}

pub fn geometry_sample(
    sat: &SatelliteState,
    ground: &GroundPosition,
    carrier_hz: f64,
) -> Result<GeometrySample, GeometryError> {
    if !(carrier_hz > 0.0) {
        return Err(GeometryError::Domain(format!("carrier {carrier_hz} Hz must be positive")));
    }
    let los = sat.position_km - ground.to_ecef();
    let range = los.norm();
    if range < 1e-9 {
        return Err(GeometryError::Domain("ground position coincides with satellite".into()));
    }
    let dir = los * (1.0 / range);
    let elevation = dir.dot(ground.up()).clamp(-1.0, 1.0).asin().to_degrees();
    let range_rate = sat.velocity_km_s.dot(dir);
    let beta = range_rate / SPEED_OF_LIGHT_KM_S;
    Ok(GeometrySample {
        elevation_deg: elevation,
        slant_range_km: range,
        one_way_delay_ms: delay_ms(range),
        range_rate_km_s: range_rate,
        doppler_hz: -beta * carrier_hz,
        delay_drift_us_per_s: beta * 1e6,
    })
}

/// Gateway -> satellite -> device -> satellite -> gateway round trip, ms.
pub fn bent_pipe_rtt(service: &GeometrySample, feeder: &GeometrySample) -> Result<f64, GeometryError> {
    if service.elevation_deg < 0.0 || feeder.elevation_deg < 0.0 {
        return Err(GeometryError::Domain("link below the horizon".into()));
    }
    Ok(2.0 * (service.one_way_delay_ms + feeder.one_way_delay_ms))
}

/// Sweep step for visibility searches, s.
pub const VISIBILITY_STEP_S: f64 = 0.5;

/// Longest contiguous time (s) within one orbital period, centred on the
/// highest-elevation instant, during which `ground` sees the satellite at or
/// above `min_elevation_deg`. Edges are refined by bisection.
pub fn visibility_duration(
    orbit: &OrbitSpec,
    ground: &GroundPosition,
    min_elevation_deg: f64,
) -> Result<f64, GeometryError> {
    orbit.validate()?;
    if !(min_elevation_deg > 0.0 && min_elevation_deg <= 90.0) {
        return Err(GeometryError::Domain(format!("minimum elevation {min_elevation_deg} deg outside (0, 90]")));
    }
    let period = orbit.period_s();
    let elev = |t: f64| elevation_deg(&orbit.state_at(t), ground);

    // Locate the peak within the first period, then analyse the period centred on it.
    let steps = (period / VISIBILITY_STEP_S).ceil() as usize;
    let t_peak = (0..=steps)
        .map(|k| orbit.epoch_s + k as f64 * VISIBILITY_STEP_S)
        .max_by(|a, b| elev(*a).total_cmp(&elev(*b)))
        .unwrap_or(orbit.epoch_s);
    let start = t_peak - period / 2.0;

    let mut best = 0.0_f64;
    let mut run_start: Option<f64> = None;
    let mut prev_t = start;
    for k in 0..=steps {
        let t = start + k as f64 * VISIBILITY_STEP_S;
        let above = elev(t) >= min_elevation_deg;
        match (above, run_start) {
            (true, None) => run_start = Some(if k == 0 { t } else { bisect(&elev, min_elevation_deg, prev_t, t) }),
            (false, Some(s)) => {
                let end = bisect(&elev, min_elevation_deg, prev_t, t);
                best = best.max(end - s);
                run_start = None;
            }
            _ => {}
        }
        prev_t = t;
    }
    if let Some(s) = run_start {
        best = best.max(prev_t - s);
    }
    Ok(best)
}

/// Crossing of `f = level` between `a` and `b`, assuming one sign change.
pub(crate) fn bisect(f: &impl Fn(f64) -> f64, level: f64, mut a: f64, mut b: f64) -> f64 {
    let fa_above = f(a) >= level;
    for _ in 0..60 {
        let m = 0.5 * (a + b);
        if (f(m) >= level) == fa_above {
            a = m;
        } else {
            b = m;
        }
        if b - a < 1e-7 {
            break;
        }
    }
    0.5 * (a + b)
}

/// Bearing (deg) of the ground-projected satellite velocity at `at`.
pub fn ground_track_bearing(sat: &SatelliteState, at: &GroundPosition) -> f64 {
    let (east, north) = at.east_north();
    sat.velocity_km_s.dot(east).atan2(sat.velocity_km_s.dot(north)).to_degrees()
}

/// Doppler across a beam, sampled along the satellite ground-track direction.
/// Returns `(offset_km, doppler_hz)` pairs; positive offsets lie ahead.
pub fn beam_doppler_profile(
    sat: &SatelliteState,
    beam: &BeamSpec,
    carrier_hz: f64,
    n: usize,
) -> Result<Vec<(f64, f64)>, GeometryError> {
    if n < 3 {
        return Err(GeometryError::Domain(format!("need at least 3 samples, got {n}")));
    }
    if !(beam.diameter_km >= 0.0) {
        return Err(GeometryError::Domain("beam diameter must be non-negative".into()));
    }
    let bearing = ground_track_bearing(sat, &beam.center);
    let half = beam.diameter_km / 2.0;
    (0..n)
        .map(|k| {
            let x = -half + beam.diameter_km * k as f64 / (n - 1) as f64;
            let p = beam.center.destination(bearing, x);
            geometry_sample(sat, &p, carrier_hz).map(|g| (x, g.doppler_hz))
        })
        .collect()
}

/// Grid resolution per axis for footprint sweeps.
pub const FOOTPRINT_GRID: usize = 65;
const FOOTPRINT_RIM: usize = 720;

/// Points covering a geodesic disc: a square grid clipped to the disc plus the rim.
pub fn footprint_points(beam: &BeamSpec) -> Vec<GroundPosition> {
    let r = beam.diameter_km / 2.0;
    if r == 0.0 {
        return vec![beam.center];
    }
    let mut pts = Vec::with_capacity(FOOTPRINT_GRID * FOOTPRINT_GRID + FOOTPRINT_RIM);
    for i in 0..FOOTPRINT_GRID {
        for j in 0..FOOTPRINT_GRID {
            let e = -r + 2.0 * r * i as f64 / (FOOTPRINT_GRID - 1) as f64;
            let nth = -r + 2.0 * r * j as f64 / (FOOTPRINT_GRID - 1) as f64;
            let d = e.hypot(nth);
            if d <= r {
                pts.push(beam.center.destination(e.atan2(nth).to_degrees(), d));
            }
        }
    }
    for k in 0..FOOTPRINT_RIM {
        pts.push(beam.center.destination(360.0 * k as f64 / FOOTPRINT_RIM as f64, r));
    }
    pts
}

/// Spread (max - min) of one-way service delay across the beam footprint, ms.
pub fn differential_delay(sat: &SatelliteState, beam: &BeamSpec) -> Result<f64, GeometryError> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for p in footprint_points(beam) {
        let g = geometry_sample(sat, &p, 1.0)?;
        if g.elevation_deg < 0.0 {
            return Err(GeometryError::Domain(format!(
                "footprint point ({:.3}, {:.3}) is below the horizon",
                p.latitude_deg, p.longitude_deg
            )));
        }
        lo = lo.min(g.one_way_delay_ms);
        hi = hi.max(g.one_way_delay_ms);
    }
    Ok(hi - lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit::propagate;

    #[test]
    fn slant_range_examples() {
        assert!((slant_range(90.0, 35_786.0).unwrap() - 35_786.0).abs() < 1e-6);
        assert!((slant_range(10.0, 35_786.0).unwrap() - 40_581.0).abs() < 1.0);
        assert!((slant_range(10.0, 600.0).unwrap() - 1932.0).abs() < 1.0);
    }

    #[test]
    fn slant_range_domain_errors() {
        assert!(slant_range(-1.0, 600.0).is_err());
        assert!(slant_range(91.0, 600.0).is_err());
        assert!(slant_range(45.0, 0.0).is_err());
    }

    #[test]
    fn point_at_elevation_sees_requested_elevation() {
        let geo = OrbitSpec::geostationary(0.0);
        let sat = propagate(&geo, 0.0).unwrap();
        for el in [10.0, 35.0, 80.0] {
            let p = point_at_elevation(&sat.sub_satellite_point(), geo.altitude_km, el, 30.0);
            assert!((elevation_deg(&sat, &p) - el).abs() < 1e-9);
            let s = geometry_sample(&sat, &p, 2e9).unwrap();
            assert!((s.slant_range_km - slant_range(el, geo.altitude_km).unwrap()).abs() < 1e-6);
        }
    }

    #[test]
    fn coincident_position_is_domain_error() {
        let sat = SatelliteState {
            t_s: 0.0,
            position_km: GroundPosition::new(0.0, 0.0, 0.0).to_ecef(),
            velocity_km_s: Default::default(),
        };
        assert!(geometry_sample(&sat, &GroundPosition::new(0.0, 0.0, 0.0), 2e9).is_err());
        let s = propagate(&OrbitSpec::geostationary(0.0), 0.0).unwrap();
        assert!(geometry_sample(&s, &GroundPosition::new(0.0, 0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn rtt_rejects_below_horizon() {
        let s = GeometrySample {
            elevation_deg: -1.0,
            slant_range_km: 1.0,
            one_way_delay_ms: 1.0,
            range_rate_km_s: 0.0,
            doppler_hz: 0.0,
            delay_drift_us_per_s: 0.0,
        };
        assert!(bent_pipe_rtt(&s, &s).is_err());
    }

    #[test]
    fn zero_diameter_beam() {
        let o = OrbitSpec::leo(600.0, 53.0, 0.0, 0.0);
        let sat = propagate(&o, 0.0).unwrap();
        let beam = BeamSpec { center: sat.sub_satellite_point(), diameter_km: 0.0 };
        let prof = beam_doppler_profile(&sat, &beam, 2e9, 5).unwrap();
        assert!(prof.iter().all(|(_, d)| (d - prof[0].1).abs() < 1e-9));
        assert_eq!(differential_delay(&sat, &beam).unwrap(), 0.0);
        assert!(beam_doppler_profile(&sat, &beam, 2e9, 2).is_err());
    }

    #[test]
    fn visibility_threshold_limits() {
        let o = OrbitSpec::leo(600.0, 90.0, 0.0, 0.0);
        let ground = GroundPosition::new(0.0, 0.0, 0.0);
        let at90 = visibility_duration(&o, &ground, 90.0).unwrap();
        assert!(at90 < 1.0, "{at90}");
        assert!(visibility_duration(&o, &ground, 0.0).is_err());
        // Antipodal observer of a geostationary satellite never sees it.
        let far = GroundPosition::new(0.0, 180.0, 0.0);
        assert_eq!(visibility_duration(&OrbitSpec::geostationary(0.0), &far, 10.0).unwrap(), 0.0);
    }
}
