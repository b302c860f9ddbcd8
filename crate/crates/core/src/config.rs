//! JSON scenario configuration: schema, validation and resolution into a
//! runnable [`Scenario`].
//!
//! Field names carry their units and unknown fields are rejected.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::constants::{delay_ms, SIDEREAL_DAY_S};
use crate::error::{ConfigError, ValidationError};
use crate::geo::GroundPosition;
use crate::geometry::{point_at_elevation, slant_range, BeamSpec};
use crate::link_budget::LinkBudgetTemplate;
use crate::orbit::{OrbitKind, OrbitSpec};
use crate::protocol::{HarqConfig, ProtocolConfig, TimerConfig};
use crate::sim::{
    AccessConfig, Cell, ChannelModel, DataConfig, DeviceSpec, FaultSpec, ReceptionConfig, Scenario, TrafficConfig,
};

/// Seed-stream separation for scenario resolution draws.
const RESOLVE_STREAM: u64 = 0x005e_ed0f_9e55;

/// A ground location, given directly or relative to a satellite at the
/// scenario start time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GroundSpec {
    Fixed(GroundPosition),
    Relative(RelativePlacement),
}

/// Ground point seeing satellite `satellite` at the given elevation, offset
/// from its sub-satellite point along `azimuth_deg`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativePlacement {
    pub satellite: usize,
    pub elevation_deg: f64,
    #[serde(default)]
    pub azimuth_deg: f64,
    /// Additional ground offset along the azimuth towards the satellite, km
    /// (negative moves away).
    #[serde(default)]
    pub offset_toward_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamConfig {
    pub cell_id: u32,
    pub center: GroundSpec,
    pub diameter_km: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetSet {
    pub downlink: LinkBudgetTemplate,
    pub uplink: LinkBudgetTemplate,
}

/// Link budgets per orbit class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkBudgetSets {
    #[serde(default)]
    pub geosynchronous: Option<LinkBudgetSet>,
    #[serde(default)]
    pub leo_circular: Option<LinkBudgetSet>,
}

impl LinkBudgetSets {
    pub fn for_kind(&self, kind: OrbitKind) -> Option<&LinkBudgetSet> {
        match kind {
            OrbitKind::Geosynchronous => self.geosynchronous.as_ref(),
            OrbitKind::LeoCircular => self.leo_circular.as_ref(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub position: GroundSpec,
    /// Serving cell; the nearest beam center when absent.
    #[serde(default)]
    pub cell_id: Option<u32>,
    /// 1-sigma GNSS horizontal error, m. Applied as a random displacement
    /// unless `gnss_offset_m` fixes it.
    #[serde(default)]
    pub gnss_error_m: f64,
    /// Fixed GNSS displacement `[east, north]`, m.
    #[serde(default)]
    pub gnss_offset_m: Option<[f64; 2]>,
    #[serde(default)]
    pub start_ms: f64,
}

/// Devices placed uniformly at random inside a beam.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomDevices {
    pub count: u32,
    pub cell_id: u32,
    #[serde(default)]
    pub gnss_error_m: f64,
    /// Start times are drawn uniformly from `[0, start_spread_ms]`.
    #[serde(default)]
    pub start_spread_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerTraceMode {
    InclinedGeo,
    BeamProfile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DopplerTraceConfig {
    pub mode: DopplerTraceMode,
    #[serde(default)]
    pub satellite: usize,
    /// Observer for the time series; the sub-satellite point at start time when absent.
    #[serde(default)]
    pub observer: Option<GroundSpec>,
    #[serde(default = "default_trace_duration")]
    pub duration_s: f64,
    #[serde(default = "default_trace_step")]
    pub step_s: f64,
    /// Beam for the in-beam profile; the first configured beam when absent.
    #[serde(default)]
    pub beam_cell_id: Option<u32>,
    #[serde(default = "default_profile_samples")]
    pub samples: usize,
}

fn default_trace_duration() -> f64 {
    SIDEREAL_DAY_S
}
fn default_trace_step() -> f64 {
    60.0
}
fn default_profile_samples() -> usize {
    51
}
fn default_min_elevation() -> f64 {
    10.0
}
fn default_measurement_frequencies() -> u32 {
    3
}
fn default_reuse() -> u32 {
    1
}
fn default_max_sim_time() -> f64 {
    3600.0
}
fn default_grid_ms() -> f64 {
    10.0
}

/// Output file names, relative to the `--out` directory.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub report_file: Option<String>,
    #[serde(default)]
    pub trace_file: Option<String>,
    #[serde(default)]
    pub timeline_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(default)]
    pub seed: Option<u64>,
    pub carrier_frequency_hz: f64,
    #[serde(default = "default_min_elevation")]
    pub min_elevation_deg: f64,
    /// Orbit time at simulation start, s.
    #[serde(default)]
    pub start_time_s: f64,
    pub constellation: Vec<OrbitSpec>,
    /// Gateway location; the first satellite's sub-satellite point when absent.
    #[serde(default)]
    pub gateway: Option<GroundSpec>,
    #[serde(default)]
    pub beams: Vec<BeamConfig>,
    #[serde(default)]
    pub link_budgets: LinkBudgetSets,
    #[serde(default)]
    pub reception: ReceptionConfig,
    /// Broadcast maximum RTT; both links at the minimum elevation when absent.
    #[serde(default)]
    pub max_rtt_ms: Option<f64>,
    #[serde(default)]
    pub ephemeris_staleness_s: f64,
    #[serde(default)]
    pub timers: TimerConfig,
    #[serde(default)]
    pub harq: HarqConfig,
    #[serde(default)]
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub traffic: TrafficConfig,
    #[serde(default)]
    pub access: AccessConfig,
    #[serde(default)]
    pub devices: Vec<DeviceConfig>,
    #[serde(default)]
    pub random_devices: Option<RandomDevices>,
    #[serde(default)]
    pub faults: Vec<FaultSpec>,
    #[serde(default = "default_measurement_frequencies")]
    pub measurement_frequencies: u32,
    #[serde(default = "default_reuse")]
    pub reuse_denominator: u32,
    #[serde(default = "default_max_sim_time")]
    pub max_sim_time_s: f64,
    #[serde(default = "default_grid_ms")]
    pub geometry_grid_ms: f64,
    #[serde(default)]
    pub doppler_trace: Option<DopplerTraceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::from_json(&text)
    }

    /// Checks every field, collecting all problems.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut errs: Vec<String> = Vec::new();
        if self.name.trim().is_empty() {
            errs.push("name: must not be empty".into());
        }
        if !(self.carrier_frequency_hz > 0.0) {
            errs.push("carrier_frequency_hz: must be positive".into());
        }
        if !(self.min_elevation_deg > 0.0 && self.min_elevation_deg < 90.0) {
            errs.push("min_elevation_deg: must be in (0, 90)".into());
        }
        if !self.start_time_s.is_finite() {
            errs.push("start_time_s: must be finite".into());
        }
        if self.constellation.is_empty() {
            errs.push("constellation: at least one satellite is required".into());
        }
        for (i, o) in self.constellation.iter().enumerate() {
            if let Err(e) = o.validate() {
                errs.push(format!("constellation[{i}]: {e}"));
            }
        }
        for (kind, set) in
            [("geosynchronous", &self.link_budgets.geosynchronous), ("leo_circular", &self.link_budgets.leo_circular)]
        {
            if let Some(s) = set {
                for (dir, t) in [("downlink", &s.downlink), ("uplink", &s.uplink)] {
                    if !(t.bandwidth_hz > 0.0) {
                        errs.push(format!("link_budgets.{kind}.{dir}.bandwidth_hz: must be positive"));
                    }
                    if !(t.atmospheric_loss_min_db <= t.atmospheric_loss_max_db) {
                        errs.push(format!("link_budgets.{kind}.{dir}: atmospheric loss min exceeds max"));
                    }
                }
            }
        }
        let check_ground = |what: String, g: &GroundSpec, errs: &mut Vec<String>| match g {
            GroundSpec::Fixed(p) => {
                if !p.is_valid() {
                    errs.push(format!("{what}: latitude must be within [-90, 90] and coordinates finite"));
                }
            }
            GroundSpec::Relative(r) => {
                if r.satellite >= self.constellation.len() {
                    errs.push(format!("{what}.satellite: no satellite {}", r.satellite));
                }
                if !(r.elevation_deg > 0.0 && r.elevation_deg <= 90.0) {
                    errs.push(format!("{what}.elevation_deg: must be in (0, 90]"));
                }
            }
        };
        if let Some(g) = &self.gateway {
            check_ground("gateway".into(), g, &mut errs);
        }
        let mut ids = std::collections::BTreeSet::new();
        for (i, b) in self.beams.iter().enumerate() {
            check_ground(format!("beams[{i}].center"), &b.center, &mut errs);
            if !(b.diameter_km > 0.0) {
                errs.push(format!("beams[{i}].diameter_km: must be positive"));
            }
            if !ids.insert(b.cell_id) {
                errs.push(format!("beams[{i}].cell_id: duplicate id {}", b.cell_id));
            }
        }
        for (i, d) in self.devices.iter().enumerate() {
            check_ground(format!("devices[{i}].position"), &d.position, &mut errs);
            if let Some(c) = d.cell_id {
                if !ids.contains(&c) {
                    errs.push(format!("devices[{i}].cell_id: unknown cell {c}"));
                }
            } else if self.beams.is_empty() {
                errs.push(format!("devices[{i}].cell_id: no beams configured to pick from"));
            }
            if !(d.gnss_error_m >= 0.0) {
                errs.push(format!("devices[{i}].gnss_error_m: must be >= 0"));
            }
            if !(d.start_ms >= 0.0) {
                errs.push(format!("devices[{i}].start_ms: must be >= 0"));
            }
        }
        if let Some(r) = &self.random_devices {
            if !ids.contains(&r.cell_id) {
                errs.push(format!("random_devices.cell_id: unknown cell {}", r.cell_id));
            }
            if !(r.gnss_error_m >= 0.0) || !(r.start_spread_ms >= 0.0) {
                errs.push("random_devices: gnss_error_m and start_spread_ms must be >= 0".into());
            }
        }
        if matches!(self.max_rtt_ms, Some(r) if !(r > 0.0)) {
            errs.push("max_rtt_ms: must be positive".into());
        }
        if !(self.ephemeris_staleness_s >= 0.0) {
            errs.push("ephemeris_staleness_s: must be >= 0".into());
        }
        for (name, r) in
            [("timers", self.timers.validate()), ("harq", self.harq.validate()), ("protocol", self.protocol.validate())]
        {
            if let Err(e) = r {
                errs.push(format!("{name}: {e}"));
            }
        }
        if self.reception.ul_repetitions < 1 || self.reception.dl_repetitions < 1 {
            errs.push("reception: repetitions must be >= 1".into());
        }
        if matches!(self.reception.fading_sigma_db, Some(s) if !(s >= 0.0)) {
            errs.push("reception.fading_sigma_db: must be >= 0".into());
        }
        if self.data.tbs_bits == 0 || !(self.data.tti_ms > 0.0) || self.data.rlc_window == 0 {
            errs.push("data: tbs_bits, tti_ms and rlc_window must be positive".into());
        }
        if !(self.traffic.inter_arrival_ms >= 0.0) {
            errs.push("traffic.inter_arrival_ms: must be >= 0".into());
        }
        if self.access.max_attempts < 1 || !(self.access.backoff_ms >= 0.0) {
            errs.push("access: max_attempts must be >= 1 and backoff_ms >= 0".into());
        }
        let n_dev = self.devices.len() + self.random_devices.map_or(0, |r| r.count as usize);
        for (i, f) in self.faults.iter().enumerate() {
            if matches!(f.device, Some(d) if d >= n_dev) {
                errs.push(format!("faults[{i}].device: no such device"));
            }
            if f.attempt == Some(0) {
                errs.push(format!("faults[{i}].attempt: attempts count from 1"));
            }
        }
        if self.measurement_frequencies < 1 {
            errs.push("measurement_frequencies: must be >= 1".into());
        }
        if self.reuse_denominator < 1 {
            errs.push("reuse_denominator: must be >= 1".into());
        }
        if !(self.max_sim_time_s > 0.0) {
            errs.push("max_sim_time_s: must be positive".into());
        }
        if !(self.geometry_grid_ms >= 0.001) {
            errs.push("geometry_grid_ms: must be >= 0.001".into());
        }
        if let Some(t) = &self.doppler_trace {
            if t.satellite >= self.constellation.len() {
                errs.push("doppler_trace.satellite: no such satellite".into());
            }
            if let Some(o) = &t.observer {
                check_ground("doppler_trace.observer".into(), o, &mut errs);
            }
            if !(t.duration_s > 0.0 && t.step_s > 0.0) {
                errs.push("doppler_trace: duration_s and step_s must be positive".into());
            }
            if t.samples < 3 {
                errs.push("doppler_trace.samples: must be >= 3".into());
            }
            if let Some(c) = t.beam_cell_id {
                if !ids.contains(&c) {
                    errs.push(format!("doppler_trace.beam_cell_id: unknown cell {c}"));
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(errs))
        }
    }

    /// Concrete position for a ground spec.
    pub fn ground_position(&self, g: &GroundSpec) -> GroundPosition {
        match g {
            GroundSpec::Fixed(p) => *p,
            GroundSpec::Relative(r) => {
                let orbit = &self.constellation[r.satellite];
                let sub = orbit.state_at(self.start_time_s).sub_satellite_point();
                let p = point_at_elevation(&sub, orbit.altitude_km, r.elevation_deg, r.azimuth_deg);
                if r.offset_toward_km == 0.0 {
                    p
                } else {
                    p.destination(r.azimuth_deg + 180.0, r.offset_toward_km)
                }
            }
        }
    }

    pub fn gateway_position(&self) -> GroundPosition {
        match &self.gateway {
            Some(g) => self.ground_position(g),
            None => self.constellation[0].state_at(self.start_time_s).sub_satellite_point(),
        }
    }

    pub fn beam(&self, cell_id: u32) -> Option<BeamSpec> {
        self.beams
            .iter()
            .find(|b| b.cell_id == cell_id)
            .map(|b| BeamSpec { center: self.ground_position(&b.center), diameter_km: b.diameter_km })
    }

    /// Broadcast maximum RTT: configured, or both links at the minimum elevation.
    pub fn effective_max_rtt_ms(&self) -> f64 {
        self.max_rtt_ms.unwrap_or_else(|| {
            let alt = self.constellation[0].altitude_km;
            let one_way = slant_range(self.min_elevation_deg, alt).map(delay_ms).unwrap_or(f64::INFINITY);
            4.0 * one_way
        })
    }

    /// Resolves placements and random draws into a runnable scenario.
    pub fn resolve(&self, seed: u64) -> Result<Scenario, ValidationError> {
        self.validate()?;
        let kind = self.constellation[0].kind;
        if self.constellation.iter().any(|o| o.kind != kind) {
            return Err(ValidationError(vec![
                "constellation: simulation needs all satellites of one orbit kind".into()
            ]));
        }
        let Some(set) = self.link_budgets.for_kind(kind) else {
            return Err(ValidationError(vec![format!(
                "link_budgets: simulation needs an entry for {kind:?} satellites"
            )]));
        };
        let cells: Vec<Cell> = self
            .beams
            .iter()
            .map(|b| Cell {
                cell_id: b.cell_id,
                beam: BeamSpec { center: self.ground_position(&b.center), diameter_km: b.diameter_km },
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ RESOLVE_STREAM);
        let mut devices = Vec::new();
        for d in &self.devices {
            let true_position = self.ground_position(&d.position);
            let cell_id = d.cell_id.unwrap_or_else(|| nearest_cell(&cells, &true_position));
            let gnss_position = match d.gnss_offset_m {
                Some([e, n]) => displace(&true_position, e, n),
                None => random_displacement(&mut rng, &true_position, d.gnss_error_m),
            };
            devices.push(DeviceSpec {
                cell_id,
                true_position,
                gnss_position,
                gnss_error_radial_m: d.gnss_error_m,
                start_ms: d.start_ms,
            });
        }
        if let Some(r) = &self.random_devices {
            let beam = cells.iter().find(|c| c.cell_id == r.cell_id).expect("validated").beam;
            for _ in 0..r.count {
                let dist = beam.diameter_km / 2.0 * rng.random::<f64>().sqrt();
                let bearing = rng.random::<f64>() * 360.0;
                let true_position = beam.center.destination(bearing, dist);
                let gnss_position = random_displacement(&mut rng, &true_position, r.gnss_error_m);
                let start_ms = (rng.random::<f64>() * r.start_spread_ms * 1e3).round() / 1e3;
                devices.push(DeviceSpec {
                    cell_id: r.cell_id,
                    true_position,
                    gnss_position,
                    gnss_error_radial_m: r.gnss_error_m,
                    start_ms,
                });
            }
        }
        let sc = Scenario {
            name: self.name.clone(),
            start_time_s: self.start_time_s,
            satellites: self.constellation.clone(),
            min_elevation_deg: self.min_elevation_deg,
            ephemeris_staleness_s: self.ephemeris_staleness_s,
            max_rtt_ms: self.effective_max_rtt_ms(),
            gateway: self.gateway_position(),
            cells,
            channel: ChannelModel {
                carrier_hz: self.carrier_frequency_hz,
                uplink: set.uplink,
                downlink: set.downlink,
                reception: self.reception,
            },
            timers: self.timers,
            harq: self.harq,
            protocol: self.protocol,
            data: self.data,
            traffic: self.traffic,
            access: self.access,
            devices,
            faults: self.faults.clone(),
            measurement_frequencies: self.measurement_frequencies,
            max_sim_time_s: self.max_sim_time_s,
            geometry_grid_us: (self.geometry_grid_ms * 1e3).round() as i64,
        };
        sc.validate()?;
        Ok(sc)
    }
}

fn nearest_cell(cells: &[Cell], p: &GroundPosition) -> u32 {
    cells
        .iter()
        .min_by(|a, b| {
            p.geodesic_distance_km(&a.beam.center)
                .total_cmp(&p.geodesic_distance_km(&b.beam.center))
                .then(a.cell_id.cmp(&b.cell_id))
        })
        .map(|c| c.cell_id)
        .unwrap_or(0)
}

/// Moves `p` by `east_m` / `north_m` along the ground.
pub fn displace(p: &GroundPosition, east_m: f64, north_m: f64) -> GroundPosition {
    let d_km = east_m.hypot(north_m) / 1e3;
    if d_km == 0.0 {
        return *p;
    }
    let mut q = p.destination(east_m.atan2(north_m).to_degrees(), d_km);
    q.altitude_m = p.altitude_m;
    q
}

fn random_displacement<R: Rng>(rng: &mut R, p: &GroundPosition, sigma_m: f64) -> GroundPosition {
    if !(sigma_m > 0.0) {
        return *p;
    }
    let r = Normal::new(0.0, sigma_m).map(|n| n.sample(rng)).unwrap_or(0.0);
    let bearing = rng.random::<f64>() * std::f64::consts::TAU;
    displace(p, r * bearing.sin(), r * bearing.cos())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "name": "t",
        "carrier_frequency_hz": 2e9,
        "constellation": [{"kind": "geosynchronous", "altitude_km": 35786, "inclination_deg": 0,
                           "raan_deg": 0, "phase_deg": 0, "epoch_s": 0}],
        "link_budgets": {"geosynchronous": {
            "downlink": {"eirp_dbw": 51.6, "g_over_t_db_per_k": -31.6, "bandwidth_hz": 180000},
            "uplink": {"eirp_dbw": -7.0, "g_over_t_db_per_k": 19.0, "bandwidth_hz": 15000}}},
        "beams": [{"cell_id": 1, "center": {"satellite": 0, "elevation_deg": 45}, "diameter_km": 500}],
        "devices": [{"position": {"latitude_deg": 10.0, "longitude_deg": 0.0}}]
    }"#;

    #[test]
    fn parses_and_resolves() {
        let cfg = ScenarioConfig::from_json(MINIMAL).unwrap();
        let sc = cfg.resolve(1).unwrap();
        assert_eq!(sc.devices.len(), 1);
        assert_eq!(sc.devices[0].cell_id, 1);
        assert!((sc.max_rtt_ms - 541.45).abs() < 0.05, "{}", sc.max_rtt_ms);
        assert_eq!(sc.devices[0].gnss_position, sc.devices[0].true_position);
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = MINIMAL.replacen("\"name\": \"t\",", "\"name\": \"t\", \"colour\": 3,", 1);
        assert!(matches!(ScenarioConfig::from_json(&bad), Err(ConfigError::Parse(_))));
        let bad = MINIMAL.replacen("\"diameter_km\": 500", "\"diameter_km\": 500, \"radius\": 1", 1);
        assert!(ScenarioConfig::from_json(&bad).is_err());
    }

    #[test]
    fn collects_all_validation_errors() {
        let bad = MINIMAL
            .replace("\"carrier_frequency_hz\": 2e9", "\"carrier_frequency_hz\": -1")
            .replace("\"diameter_km\": 500", "\"diameter_km\": 0");
        match ScenarioConfig::from_json(&bad) {
            Err(ConfigError::Validation(ValidationError(v))) => assert_eq!(v.len(), 2, "{v:?}"),
            other => panic!("{other:?}"),
        }
        let empty = MINIMAL.replace(
            r#"[{"kind": "geosynchronous", "altitude_km": 35786, "inclination_deg": 0,
                           "raan_deg": 0, "phase_deg": 0, "epoch_s": 0}]"#,
            "[]",
        );
        assert!(matches!(ScenarioConfig::from_json(&empty), Err(ConfigError::Validation(_))));
    }

    #[test]
    fn fixed_gnss_offset() {
        let p = GroundPosition::new(10.0, 20.0, 0.0);
        let q = displace(&p, 300.0, 400.0);
        assert!((p.geodesic_distance_km(&q) - 0.5).abs() < 1e-9);
    }
}
