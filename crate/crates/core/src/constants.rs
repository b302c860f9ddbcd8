//! Physical constants shared by every module.

/// Read-only bundle of the constants used across the simulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// Mean earth radius, km (spherical earth).
    pub earth_radius_km: f64,
    /// Earth gravitational parameter, km^3/s^2.
    pub mu_earth_km3_s2: f64,
    /// Speed of light, m/s.
    pub speed_of_light_m_s: f64,
    /// Earth rotation rate, rad/s.
    pub omega_earth_rad_s: f64,
    /// Sidereal day, s.
    pub sidereal_day_s: f64,
    /// Boltzmann constant, J/K.
    pub boltzmann_j_k: f64,
}

pub const CONSTANTS: PhysicalConstants = PhysicalConstants {
    earth_radius_km: EARTH_RADIUS_KM,
    mu_earth_km3_s2: MU_EARTH_KM3_S2,
    speed_of_light_m_s: SPEED_OF_LIGHT_M_S,
    omega_earth_rad_s: OMEGA_EARTH_RAD_S,
    sidereal_day_s: SIDEREAL_DAY_S,
    boltzmann_j_k: BOLTZMANN_J_K,
};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
pub const MU_EARTH_KM3_S2: f64 = 398_600.441_8;
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;
pub const SPEED_OF_LIGHT_KM_S: f64 = SPEED_OF_LIGHT_M_S / 1000.0;
pub const OMEGA_EARTH_RAD_S: f64 = 7.292_115_9e-5;
pub const SIDEREAL_DAY_S: f64 = 86_164.090_5;
pub const BOLTZMANN_J_K: f64 = 1.380_649e-23;

/// Geosynchronous altitude above the reference sphere, km.
pub const GEO_ALTITUDE_KM: f64 = 35_786.0;

/// One-way propagation delay in ms over `distance_km`.
#[inline]
pub fn delay_ms(distance_km: f64) -> f64 {
    distance_km / SPEED_OF_LIGHT_KM_S * 1e3
}
