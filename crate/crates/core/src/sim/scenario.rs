//! Fully resolved simulation input: concrete positions, link models and
//! procedure parameters.

use serde::{Deserialize, Serialize};

use super::channel::ChannelModel;
use crate::error::ValidationError;
use crate::geo::GroundPosition;
use crate::geometry::BeamSpec;
use crate::orbit::OrbitSpec;
use crate::protocol::{Ephemeris, HarqConfig, ProtocolConfig, RaMessageKind, SystemInformation, TimerConfig};

/// Data-plane parameters shared by HARQ and RLC ARQ transfers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DataConfig {
    /// Transport block (HARQ) and RLC PDU payload size, bits.
    pub tbs_bits: u32,
    pub tti_ms: f64,
    /// RLC ARQ window in PDUs, used when HARQ is disabled.
    pub rlc_window: u32,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { tbs_bits: 1000, tti_ms: 4.0, rlc_window: 16 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrafficConfig {
    /// Uplink payload per message; 0 runs the access procedure only.
    pub message_bits: u64,
    /// Spacing of message arrivals per device, ms.
    pub inter_arrival_ms: f64,
    pub messages_per_device: u32,
}

impl Default for TrafficConfig {
    fn default() -> Self {
        Self { message_bits: 0, inter_arrival_ms: 60_000.0, messages_per_device: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AccessConfig {
    /// Random access attempts per message before the message is dropped.
    pub max_attempts: u32,
    pub backoff_ms: f64,
}

impl Default for AccessConfig {
    fn default() -> Self {
        Self { max_attempts: 3, backoff_ms: 20.0 }
    }
}

/// Forced loss of a random access message.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultSpec {
    pub message: RaMessageKind,
    /// Attempt number (1-based) to affect; every attempt when absent.
    #[serde(default)]
    pub attempt: Option<u32>,
    /// Device index to affect; every device when absent.
    #[serde(default)]
    pub device: Option<usize>,
}

impl FaultSpec {
    pub fn matches(&self, kind: RaMessageKind, attempt: u32, device: usize) -> bool {
        self.message == kind && self.attempt.is_none_or(|a| a == attempt) && self.device.is_none_or(|d| d == device)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub cell_id: u32,
    pub beam: BeamSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub cell_id: u32,
    pub true_position: GroundPosition,
    /// Position reported by the GNSS receiver.
    pub gnss_position: GroundPosition,
    pub gnss_error_radial_m: f64,
    pub start_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    /// Orbit time at simulation time zero, s.
    pub start_time_s: f64,
    pub satellites: Vec<OrbitSpec>,
    pub min_elevation_deg: f64,
    pub ephemeris_staleness_s: f64,
    pub max_rtt_ms: f64,
    pub gateway: GroundPosition,
    pub cells: Vec<Cell>,
    pub channel: ChannelModel,
    pub timers: TimerConfig,
    pub harq: HarqConfig,
    pub protocol: ProtocolConfig,
    pub data: DataConfig,
    pub traffic: TrafficConfig,
    pub access: AccessConfig,
    pub devices: Vec<DeviceSpec>,
    pub faults: Vec<FaultSpec>,
    pub measurement_frequencies: u32,
    /// Simulation stops once the next event lies beyond this time, s.
    pub max_sim_time_s: f64,
    pub geometry_grid_us: i64,
}

impl Scenario {
    pub fn ephemeris(&self) -> Ephemeris {
        Ephemeris {
            satellites: self.satellites.clone(),
            epoch_s: self.start_time_s,
            staleness_s: self.ephemeris_staleness_s,
            min_elevation_deg: self.min_elevation_deg,
        }
    }

    pub fn cell(&self, cell_id: u32) -> Option<&Cell> {
        self.cells.iter().find(|c| c.cell_id == cell_id)
    }

    /// Broadcast information of a cell.
    pub fn system_information(&self, cell_id: u32) -> Option<SystemInformation> {
        self.cell(cell_id).map(|c| SystemInformation {
            ephemeris: self.ephemeris(),
            max_rtt_ms: self.max_rtt_ms,
            cell_center: c.beam.center,
            carrier_frequency_hz: self.channel.carrier_hz,
            ul_bandwidths_hz: vec![self.channel.uplink.bandwidth_hz],
            measurement_frequencies: self.measurement_frequencies,
            gateway: Some(self.gateway),
        })
    }

    /// Checks every field, collecting all problems.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut errs = Vec::new();
        if self.satellites.is_empty() {
            errs.push("constellation: at least one satellite is required".to_string());
        }
        for (i, o) in self.satellites.iter().enumerate() {
            if let Err(e) = o.validate() {
                errs.push(format!("constellation[{i}]: {e}"));
            }
        }
        if !(self.channel.carrier_hz > 0.0) {
            errs.push("carrier_frequency_hz: must be positive".into());
        }
        if !(self.max_rtt_ms > 0.0) {
            errs.push("max_rtt_ms: must be positive".into());
        }
        if !(self.ephemeris_staleness_s >= 0.0) {
            errs.push("ephemeris_staleness_s: must be >= 0".into());
        }
        if !(0.0..90.0).contains(&self.min_elevation_deg) {
            errs.push("min_elevation_deg: must be in [0, 90)".into());
        }
        for (name, r) in
            [("timers", self.timers.validate()), ("harq", self.harq.validate()), ("protocol", self.protocol.validate())]
        {
            if let Err(e) = r {
                errs.push(format!("{name}: {e}"));
            }
        }
        if self.channel.reception.ul_repetitions < 1 || self.channel.reception.dl_repetitions < 1 {
            errs.push("reception: repetitions must be >= 1".into());
        }
        if matches!(self.channel.reception.fading_sigma_db, Some(s) if !(s >= 0.0)) {
            errs.push("reception.fading_sigma_db: must be >= 0".into());
        }
        for (dir, t) in [("downlink", &self.channel.downlink), ("uplink", &self.channel.uplink)] {
            if !(t.bandwidth_hz > 0.0) {
                errs.push(format!("link_budget.{dir}.bandwidth_hz: must be positive"));
            }
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
        if self.measurement_frequencies < 1 {
            errs.push("measurement_frequencies: must be >= 1".into());
        }
        if !(self.max_sim_time_s > 0.0) {
            errs.push("max_sim_time_s: must be positive".into());
        }
        if self.geometry_grid_us < 1 {
            errs.push("geometry grid must be >= 1 us".into());
        }
        if !self.gateway.is_valid() {
            errs.push("gateway: invalid ground position".into());
        }
        for (i, d) in self.devices.iter().enumerate() {
            if self.cell(d.cell_id).is_none() {
                errs.push(format!("devices[{i}].cell_id: unknown cell {}", d.cell_id));
            }
            if !d.true_position.is_valid() || !d.gnss_position.is_valid() {
                errs.push(format!("devices[{i}]: invalid position"));
            }
            if !(d.start_ms >= 0.0) || !(d.gnss_error_radial_m >= 0.0) {
                errs.push(format!("devices[{i}]: start_ms and gnss error must be >= 0"));
            }
        }
        for (i, f) in self.faults.iter().enumerate() {
            if matches!(f.device, Some(d) if d >= self.devices.len()) {
                errs.push(format!("faults[{i}].device: no such device"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ValidationError(errs))
        }
    }
}
