//! Geometry of one ground-satellite link sampled on a fixed grid and
//! linearized in between using the delay drift.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::time::SimTime;
use crate::error::GeometryError;
use crate::geo::GroundPosition;
use crate::geometry::{geometry_sample, GeometrySample};
use crate::orbit::OrbitSpec;

/// Default spacing of exact geometry samples, us.
pub const DEFAULT_GRID_US: i64 = 10_000;
const MAX_CACHED_SAMPLES: usize = 200_000;

/// Link geometry at an instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkState {
    pub delay_ms: f64,
    pub slant_range_km: f64,
    pub elevation_deg: f64,
    pub range_rate_km_s: f64,
}

pub struct LinkTimeline {
    orbit: OrbitSpec,
    ground: GroundPosition,
    /// Absolute orbit time of simulation time zero, s.
    t0_s: f64,
    grid_us: i64,
    cache: HashMap<i64, GeometrySample>,
}

impl LinkTimeline {
    pub fn new(orbit: OrbitSpec, ground: GroundPosition, t0_s: f64, grid_us: i64) -> Self {
        Self { orbit, ground, t0_s, grid_us: grid_us.max(1), cache: HashMap::new() }
    }

    fn grid_sample(&mut self, k: i64) -> Result<GeometrySample, GeometryError> {
        if let Some(s) = self.cache.get(&k) {
            return Ok(*s);
        }
        if self.cache.len() >= MAX_CACHED_SAMPLES {
            self.cache.clear();
        }
        let t = self.t0_s + (k * self.grid_us) as f64 * 1e-6;
        let s = geometry_sample(&self.orbit.state_at(t), &self.ground, 1.0)?;
        self.cache.insert(k, s);
        Ok(s)
    }

    /// Geometry at `t`, linear in time from the preceding grid sample.
    pub fn at(&mut self, t: SimTime) -> Result<LinkState, GeometryError> {
        let k = t.as_us().div_euclid(self.grid_us);
        let s = self.grid_sample(k)?;
        let dt_s = (t.as_us() - k * self.grid_us) as f64 * 1e-6;
        Ok(LinkState {
            delay_ms: s.one_way_delay_ms + s.delay_drift_us_per_s * dt_s * 1e-3,
            slant_range_km: s.slant_range_km + s.range_rate_km_s * dt_s,
            elevation_deg: s.elevation_deg,
            range_rate_km_s: s.range_rate_km_s,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linearization_tracks_exact_leo_delay() {
        let orbit = OrbitSpec::leo(600.0, 170.0, 0.0, 0.0);
        let ground = orbit.state_at(0.0).sub_satellite_point();
        let mut tl = LinkTimeline::new(orbit, ground, -120.0, DEFAULT_GRID_US);
        for us in [0i64, 3_333, 9_999, 1_234_567, 119_995_000, 150_000_001] {
            let t = SimTime(us);
            let lin = tl.at(t).unwrap().delay_ms;
            let exact =
                geometry_sample(&orbit.state_at(-120.0 + us as f64 * 1e-6), &ground, 1.0).unwrap().one_way_delay_ms;
            assert!((lin - exact).abs() < 1e-6, "{us}: {lin} vs {exact}");
        }
    }
}
