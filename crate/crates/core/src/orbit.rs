//! Circular orbit propagation in an earth-fixed frame.
//!
//! The inertial frame coincides with the earth-fixed frame at t = 0 and the
//! earth-fixed frame rotates about +z at the earth rotation rate. Orbits are
//! circular: a satellite moves at constant angular rate along its orbital
//! plane, which is tilted by the inclination about the node line.

use serde::{Deserialize, Serialize};

use crate::constants::{EARTH_RADIUS_KM, GEO_ALTITUDE_KM, MU_EARTH_KM3_S2, OMEGA_EARTH_RAD_S};
use crate::error::GeometryError;
use crate::geo::{GroundPosition, Vec3};

pub const LEO_MIN_ALTITUDE_KM: f64 = 500.0;
pub const LEO_MAX_ALTITUDE_KM: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrbitKind {
    Geosynchronous,
    LeoCircular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitSpec {
    pub kind: OrbitKind,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    /// Earth-fixed longitude of the ascending node at epoch.
    #[serde(default)]
    pub raan_deg: f64,
    /// Argument of latitude at epoch.
    #[serde(default)]
    pub phase_deg: f64,
    #[serde(default)]
    pub epoch_s: f64,
}

impl OrbitSpec {
    pub fn geosynchronous(inclination_deg: f64, node_longitude_deg: f64, phase_deg: f64) -> Self {
        Self {
            kind: OrbitKind::Geosynchronous,
            altitude_km: GEO_ALTITUDE_KM,
            inclination_deg,
            raan_deg: node_longitude_deg,
            phase_deg,
            epoch_s: 0.0,
        }
    }

    /// Geostationary satellite parked over `longitude_deg`.
    pub fn geostationary(longitude_deg: f64) -> Self {
        Self::geosynchronous(0.0, longitude_deg, 0.0)
    }

    pub fn leo(altitude_km: f64, inclination_deg: f64, raan_deg: f64, phase_deg: f64) -> Self {
        Self { kind: OrbitKind::LeoCircular, altitude_km, inclination_deg, raan_deg, phase_deg, epoch_s: 0.0 }
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |m: String| Err(GeometryError::InvalidOrbit(m));
        if !(self.altitude_km > 0.0) {
            return bad(format!("altitude {} km must be positive", self.altitude_km));
        }
        if !(0.0..180.0).contains(&self.inclination_deg) {
            return bad(format!("inclination {} deg outside [0, 180)", self.inclination_deg));
        }
        if !self.raan_deg.is_finite() || !self.phase_deg.is_finite() || !self.epoch_s.is_finite() {
            return bad("non-finite orbit element".into());
        }
        match self.kind {
            OrbitKind::Geosynchronous if (self.altitude_km - GEO_ALTITUDE_KM).abs() > 1e-9 => {
                bad(format!("geosynchronous altitude must be {GEO_ALTITUDE_KM} km"))
            }
            OrbitKind::LeoCircular if !(LEO_MIN_ALTITUDE_KM..=LEO_MAX_ALTITUDE_KM).contains(&self.altitude_km) => bad(
                format!("LEO altitude {} km outside [{LEO_MIN_ALTITUDE_KM}, {LEO_MAX_ALTITUDE_KM}]", self.altitude_km),
            ),
            _ => Ok(()),
        }
    }

    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    /// Inertial angular rate, rad/s. Geosynchronous orbits turn with the earth.
    pub fn mean_motion_rad_s(&self) -> f64 {
        match self.kind {
            OrbitKind::Geosynchronous => OMEGA_EARTH_RAD_S,
            OrbitKind::LeoCircular => (MU_EARTH_KM3_S2 / self.radius_km().powi(3)).sqrt(),
        }
    }

    pub fn period_s(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.mean_motion_rad_s()
    }

    pub fn inertial_speed_km_s(&self) -> f64 {
        self.radius_km() * self.mean_motion_rad_s()
    }

    /// Position and velocity in the inertial frame.
    pub fn inertial_state(&self, t_s: f64) -> (Vec3, Vec3) {
        let a = self.radius_km();
        let n = self.mean_motion_rad_s();
        let u = self.phase_deg.to_radians() + n * (t_s - self.epoch_s);
        let node = self.raan_deg.to_radians() + OMEGA_EARTH_RAD_S * self.epoch_s;
        let inc = self.inclination_deg.to_radians();
        let r = Vec3::new(a * u.cos(), a * u.sin(), 0.0);
        let v = Vec3::new(-a * n * u.sin(), a * n * u.cos(), 0.0);
        let to_inertial = |p: Vec3| rot_z(rot_x(p, inc), node);
        (to_inertial(r), to_inertial(v))
    }

    /// Earth-fixed state at any time (circular motion extends before epoch).
    pub fn state_at(&self, t_s: f64) -> SatelliteState {
        let (r_in, v_in) = self.inertial_state(t_s);
        let theta = OMEGA_EARTH_RAD_S * t_s;
        let position = rot_z(r_in, -theta);
        let omega = Vec3::new(0.0, 0.0, OMEGA_EARTH_RAD_S);
        let velocity = rot_z(v_in, -theta) - omega.cross(position);
        SatelliteState { t_s, position_km: position, velocity_km_s: velocity }
    }
}

fn rot_x(p: Vec3, a: f64) -> Vec3 {
    let (s, c) = a.sin_cos();
    Vec3::new(p.x, c * p.y - s * p.z, s * p.y + c * p.z)
}

fn rot_z(p: Vec3, a: f64) -> Vec3 {
    let (s, c) = a.sin_cos();
    Vec3::new(c * p.x - s * p.y, s * p.x + c * p.y, p.z)
}

/// Satellite position (km) and velocity (km/s) in the earth-fixed frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SatelliteState {
    pub t_s: f64,
    pub position_km: Vec3,
    pub velocity_km_s: Vec3,
}

impl SatelliteState {
    pub fn sub_satellite_point(&self) -> GroundPosition {
        let mut p = GroundPosition::from_ecef(self.position_km);
        p.altitude_m = 0.0;
        p
    }

    pub fn altitude_km(&self) -> f64 {
        self.position_km.norm() - EARTH_RADIUS_KM
    }
}

/// Earth-fixed satellite state at `t_s`.
pub fn propagate(orbit: &OrbitSpec, t_s: f64) -> Result<SatelliteState, GeometryError> {
    orbit.validate()?;
    if !(t_s >= orbit.epoch_s) {
        return Err(GeometryError::Domain(format!("t = {t_s} s precedes orbit epoch {} s", orbit.epoch_s)));
    }
    Ok(orbit.state_at(t_s))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTrackPoint {
    pub t_s: f64,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
}

/// Sub-satellite points from epoch to epoch + `duration_s` (inclusive) every `step_s`.
pub fn ground_track(orbit: &OrbitSpec, duration_s: f64, step_s: f64) -> Result<Vec<GroundTrackPoint>, GeometryError> {
    orbit.validate()?;
    if !(duration_s > 0.0) || !(step_s > 0.0) {
        return Err(GeometryError::Domain("duration and step must be positive".into()));
    }
    let n = (duration_s / step_s).floor() as usize;
    Ok((0..=n)
        .map(|k| {
            let t = orbit.epoch_s + k as f64 * step_s;
            let p = orbit.state_at(t).sub_satellite_point();
            GroundTrackPoint { t_s: t, latitude_deg: p.latitude_deg, longitude_deg: p.longitude_deg }
        })
        .collect())
}
