//! Spherical-earth positions and small vector helpers.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::constants::EARTH_RADIUS_KM;

/// Cartesian 3-vector (km or km/s depending on context).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        Vec3::new(self.y * o.z - self.z * o.y, self.z * o.x - self.x * o.z, self.x * o.y - self.y * o.x)
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn unit(self) -> Vec3 {
        self * (1.0 / self.norm())
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        self * -1.0
    }
}

/// A point on (or above) the reference sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundPosition {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    #[serde(default)]
    pub altitude_m: f64,
}

impl GroundPosition {
    /// Builds a position, normalizing longitude into (-180, 180].
    /// Latitude is clamped into [-90, 90].
    pub fn new(latitude_deg: f64, longitude_deg: f64, altitude_m: f64) -> Self {
        Self {
            latitude_deg: latitude_deg.clamp(-90.0, 90.0),
            longitude_deg: normalize_longitude(longitude_deg),
            altitude_m,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.latitude_deg.is_finite()
            && self.longitude_deg.is_finite()
            && self.altitude_m.is_finite()
            && (-90.0..=90.0).contains(&self.latitude_deg)
            && self.longitude_deg > -180.0
            && self.longitude_deg <= 180.0
    }

    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_m / 1000.0
    }

    /// Earth-fixed cartesian position, km.
    pub fn to_ecef(&self) -> Vec3 {
        self.up() * self.radius_km()
    }

    /// Local vertical unit vector.
    pub fn up(&self) -> Vec3 {
        let (lat, lon) = (self.latitude_deg.to_radians(), self.longitude_deg.to_radians());
        Vec3::new(lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin())
    }

    /// Local east and north unit vectors. At the poles east is taken along +y
    /// (longitude 90 deg meridian) so the basis stays defined.
    pub fn east_north(&self) -> (Vec3, Vec3) {
        let lon = self.longitude_deg.to_radians();
        let lat = self.latitude_deg.to_radians();
        let east = Vec3::new(-lon.sin(), lon.cos(), 0.0);
        let north = Vec3::new(-lat.sin() * lon.cos(), -lat.sin() * lon.sin(), lat.cos());
        (east, north)
    }

    /// Sub-point of an arbitrary earth-fixed vector.
    pub fn from_ecef(v: Vec3) -> Self {
        let r = v.norm();
        let lat = (v.z / r).clamp(-1.0, 1.0).asin().to_degrees();
        let lon = v.y.atan2(v.x).to_degrees();
        GroundPosition::new(lat, lon, (r - EARTH_RADIUS_KM) * 1000.0)
    }

    /// Great-circle central angle to `other`, radians (haversine form).
    pub fn central_angle(&self, other: &GroundPosition) -> f64 {
        let (p1, p2) = (self.latitude_deg.to_radians(), other.latitude_deg.to_radians());
        let dphi = p2 - p1;
        let dl = (other.longitude_deg - self.longitude_deg).to_radians();
        let a = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
        2.0 * a.sqrt().min(1.0).asin()
    }

    /// Great-circle distance along the reference sphere, km.
    pub fn geodesic_distance_km(&self, other: &GroundPosition) -> f64 {
        EARTH_RADIUS_KM * self.central_angle(other)
    }

    /// Point reached by travelling `distance_km` along the great circle
    /// leaving at `bearing_deg` (clockwise from north). Altitude is kept.
    pub fn destination(&self, bearing_deg: f64, distance_km: f64) -> GroundPosition {
        let delta = distance_km / EARTH_RADIUS_KM;
        let (east, north) = self.east_north();
        let b = bearing_deg.to_radians();
        let dir = north * b.cos() + east * b.sin();
        let p = self.up() * delta.cos() + dir * delta.sin();
        let mut out = GroundPosition::from_ecef(p * EARTH_RADIUS_KM);
        out.altitude_m = self.altitude_m;
        out
    }
}

/// Normalizes a longitude in degrees into (-180, 180].
pub fn normalize_longitude(lon: f64) -> f64 {
    let mut l = lon.rem_euclid(360.0);
    if l > 180.0 {
        l -= 360.0;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn longitude_normalization() {
        assert_eq!(normalize_longitude(180.0), 180.0);
        assert_eq!(normalize_longitude(-180.0), 180.0);
        assert_eq!(normalize_longitude(190.0), -170.0);
        assert_eq!(normalize_longitude(-190.0), 170.0);
        assert_eq!(normalize_longitude(360.0), 0.0);
    }

    #[test]
    fn quarter_circle_distance() {
        let a = GroundPosition::new(0.0, 0.0, 0.0);
        let b = GroundPosition::new(0.0, 90.0, 0.0);
        let d = a.geodesic_distance_km(&b);
        assert!((d - EARTH_RADIUS_KM * std::f64::consts::FRAC_PI_2).abs() < 1e-6);
    }

    #[test]
    fn destination_roundtrips_distance() {
        let a = GroundPosition::new(59.0, 18.0, 0.0);
        for bearing in [0.0, 45.0, 137.0, 270.0] {
            let b = a.destination(bearing, 1234.5);
            assert!((a.geodesic_distance_km(&b) - 1234.5).abs() < 1e-6);
        }
    }

    #[test]
    fn ecef_roundtrip() {
        let a = GroundPosition::new(-33.5, 151.2, 120.0);
        let b = GroundPosition::from_ecef(a.to_ecef());
        assert!((a.latitude_deg - b.latitude_deg).abs() < 1e-9);
        assert!((a.longitude_deg - b.longitude_deg).abs() < 1e-9);
        assert!((a.altitude_m - b.altitude_m).abs() < 1e-6);
    }
}
