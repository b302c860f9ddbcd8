use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;
use crate::geo::GroundPosition;
use crate::orbit::OrbitSpec;

/// Contention-resolution timer ceiling, ms.
pub const MAX_CONTENTION_RESOLUTION_MS: f64 = 10_240.0;
/// Base t-reordering ceiling, ms.
pub const MAX_T_REORDERING_MS: f64 = 1_600.0;
pub const MAX_HARQ_PROCESSES: u8 = 2;

/// Satellite ephemeris as broadcast to devices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ephemeris {
    pub satellites: Vec<OrbitSpec>,
    pub epoch_s: f64,
    /// Age of the data at use time. A stale ephemeris is evaluated
    /// `staleness_s` in the past, i.e. without forward propagation.
    pub staleness_s: f64,
    /// Lowest elevation at which a satellite may serve, deg.
    pub min_elevation_deg: f64,
}

impl Ephemeris {
    pub fn new(satellites: Vec<OrbitSpec>) -> Self {
        Self { satellites, epoch_s: 0.0, staleness_s: 0.0, min_elevation_deg: 10.0 }
    }

    pub fn with_staleness(mut self, staleness_s: f64) -> Self {
        self.staleness_s = staleness_s;
        self
    }

    pub fn with_min_elevation(mut self, min_elevation_deg: f64) -> Self {
        self.min_elevation_deg = min_elevation_deg;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(self.staleness_s >= 0.0) {
            return Err(ProtocolError::InvalidConfig("ephemeris staleness must be >= 0".into()));
        }
        for o in &self.satellites {
            o.validate()?;
        }
        Ok(())
    }
}

/// NTN-specific cell broadcast.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemInformation {
    pub ephemeris: Ephemeris,
    pub max_rtt_ms: f64,
    pub cell_center: GroundPosition,
    pub carrier_frequency_hz: f64,
    pub ul_bandwidths_hz: Vec<f64>,
    pub measurement_frequencies: u32,
    /// Gateway location, letting devices estimate the feeder-link share of the RTT.
    pub gateway: Option<GroundPosition>,
}

impl SystemInformation {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::InvalidConfig(m.into()));
        if !(self.max_rtt_ms > 0.0) {
            return bad("max_rtt must be positive");
        }
        if !self.cell_center.is_valid() {
            return bad("cell center is not a valid ground position");
        }
        if !(self.carrier_frequency_hz > 0.0) {
            return bad("carrier frequency must be positive");
        }
        if self.measurement_frequencies < 1 {
            return bad("measurement_frequencies must be >= 1");
        }
        self.ephemeris.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RrcState {
    Idle,
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerKind {
    RarWindow,
    ContentionResolution,
    HarqRtt,
    TReordering,
}

impl TimerKind {
    pub fn label(self) -> &'static str {
        match self {
            TimerKind::RarWindow => "rar_window",
            TimerKind::ContentionResolution => "contention_resolution",
            TimerKind::HarqRtt => "harq_rtt",
            TimerKind::TReordering => "t_reordering",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActiveTimer {
    pub kind: TimerKind,
    pub start_ms: f64,
    pub expiry_ms: f64,
}

/// Device-side state the procedures read and update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceContext {
    pub gnss_position: GroundPosition,
    /// Configured 1-sigma GNSS position error, m.
    pub gnss_error_radial_m: f64,
    pub rrc_state: RrcState,
    /// Aggregate advance applied to uplink transmissions, us.
    pub timing_advance_us: f64,
    /// Closed-loop share of the advance accumulated from TA commands, us.
    pub ta_command_us: f64,
    pub frequency_offset_hz: f64,
    pub active_timers: Vec<ActiveTimer>,
}

impl DeviceContext {
    pub fn new(gnss_position: GroundPosition) -> Self {
        Self {
            gnss_position,
            gnss_error_radial_m: 0.0,
            rrc_state: RrcState::Idle,
            timing_advance_us: 0.0,
            ta_command_us: 0.0,
            frequency_offset_hz: 0.0,
            active_timers: Vec::new(),
        }
    }

    /// Open-loop pre-compensation plus accumulated commands, never negative.
    pub fn set_precompensation(&mut self, precompensation_us: f64) {
        self.timing_advance_us = (precompensation_us + self.ta_command_us).max(0.0);
    }

    pub fn apply_ta_command(&mut self, cmd: &TimingAdvanceCommand) {
        let open_loop = self.timing_advance_us - self.ta_command_us;
        self.ta_command_us += cmd.correction_us();
        self.set_precompensation(open_loop);
    }

    /// idle -> connected, only via a completed random access.
    pub fn complete_random_access(&mut self) -> Result<(), ProtocolError> {
        match self.rrc_state {
            RrcState::Idle => {
                self.rrc_state = RrcState::Connected;
                Ok(())
            }
            RrcState::Connected => Err(ProtocolError::Domain("device already connected".into())),
        }
    }

    /// connected -> idle. Clears timers and the closed-loop TA.
    pub fn release(&mut self) -> Result<(), ProtocolError> {
        match self.rrc_state {
            RrcState::Connected => {
                self.rrc_state = RrcState::Idle;
                self.active_timers.clear();
                self.ta_command_us = 0.0;
                Ok(())
            }
            RrcState::Idle => Err(ProtocolError::Domain("device is not connected".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaConfig {
    pub step_us: f64,
    pub bipolar_range_us: f64,
}

impl Default for TaConfig {
    fn default() -> Self {
        Self { step_us: 0.52, bipolar_range_us: 32.0 }
    }
}

impl TaConfig {
    pub fn max_steps(&self) -> i32 {
        (self.bipolar_range_us / self.step_us).floor() as i32
    }

    /// Largest residual the quantizer accepts, us.
    pub fn max_residual_us(&self) -> f64 {
        (self.max_steps() as f64 + 0.5) * self.step_us
    }
}

/// Signed timing-advance correction carried in the RAR.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingAdvanceCommand {
    pub steps: i32,
    pub step_size_us: f64,
}

impl TimingAdvanceCommand {
    pub fn correction_us(&self) -> f64 {
        self.steps as f64 * self.step_size_us
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimerConfig {
    pub contention_resolution_ms: f64,
    pub harq_rtt_ms: f64,
    pub t_reordering_ms: f64,
    /// Start offset for the contention-resolution and HARQ RTT timers (0 = legacy).
    pub ntn_start_offset_ms: f64,
    /// Extension of t-reordering; `None` uses the RTT rounded up to 10 ms.
    #[serde(default)]
    pub t_reordering_extension_ms: Option<f64>,
}

impl Default for TimerConfig {
    fn default() -> Self {
        Self {
            contention_resolution_ms: MAX_CONTENTION_RESOLUTION_MS,
            harq_rtt_ms: 4.0,
            t_reordering_ms: MAX_T_REORDERING_MS,
            ntn_start_offset_ms: 0.0,
            t_reordering_extension_ms: None,
        }
    }
}

impl TimerConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: String| Err(ProtocolError::InvalidConfig(m));
        if !(self.contention_resolution_ms > 0.0 && self.contention_resolution_ms <= MAX_CONTENTION_RESOLUTION_MS) {
            return bad(format!("contention_resolution must be in (0, {MAX_CONTENTION_RESOLUTION_MS}] ms"));
        }
        if !(self.t_reordering_ms >= 0.0 && self.t_reordering_ms <= MAX_T_REORDERING_MS) {
            return bad(format!("t_reordering base must be in [0, {MAX_T_REORDERING_MS}] ms"));
        }
        if !(self.harq_rtt_ms >= 0.0) || !(self.ntn_start_offset_ms >= 0.0) {
            return bad("harq_rtt and ntn_start_offset must be >= 0".into());
        }
        if matches!(self.t_reordering_extension_ms, Some(e) if !(e >= 0.0)) {
            return bad("t_reordering_extension must be >= 0".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarqConfig {
    pub n_processes: u8,
    pub enabled: bool,
    /// Defaults to 10% with HARQ, 1% without.
    #[serde(default)]
    pub target_bler: Option<f64>,
}

impl Default for HarqConfig {
    fn default() -> Self {
        Self { n_processes: 2, enabled: true, target_bler: None }
    }
}

impl HarqConfig {
    pub fn target_bler(&self) -> f64 {
        self.target_bler.unwrap_or(if self.enabled { 0.10 } else { 0.01 })
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if !(1..=MAX_HARQ_PROCESSES).contains(&self.n_processes) {
            return Err(ProtocolError::InvalidConfig(format!(
                "n_processes {} outside [1, {MAX_HARQ_PROCESSES}]",
                self.n_processes
            )));
        }
        let b = self.target_bler();
        if !(0.0..1.0).contains(&b) {
            return Err(ProtocolError::InvalidConfig(format!("target_bler {b} outside [0, 1)")));
        }
        Ok(())
    }
}

/// Fixed procedure parameters not covered by timers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub bs_processing_ms: f64,
    pub device_processing_ms: f64,
    /// RAR window length, ms.
    pub rar_window_ms: f64,
    pub prach_period_ms: f64,
    pub ta: TaConfig,
    pub msg3_delay_resolution_ms: f64,
    pub doppler_update_cadence_ms: f64,
    pub autonomous_ta_interval_ms: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            bs_processing_ms: 4.0,
            device_processing_ms: 8.0,
            rar_window_ms: MAX_CONTENTION_RESOLUTION_MS,
            prach_period_ms: 40.0,
            ta: TaConfig::default(),
            msg3_delay_resolution_ms: 0.1,
            doppler_update_cadence_ms: 64.0,
            autonomous_ta_interval_ms: 100.0,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let bad = |m: &str| Err(ProtocolError::InvalidConfig(m.into()));
        if !(self.bs_processing_ms >= 0.0 && self.device_processing_ms >= 0.0) {
            return bad("processing delays must be >= 0");
        }
        if !(self.rar_window_ms > 0.0 && self.rar_window_ms <= MAX_CONTENTION_RESOLUTION_MS) {
            return bad("rar_window must be in (0, 10240] ms");
        }
        if !(self.prach_period_ms > 0.0) {
            return bad("prach_period must be positive");
        }
        if !(self.ta.step_us > 0.0 && self.ta.bipolar_range_us >= self.ta.step_us) {
            return bad("TA step must be positive and not exceed the bipolar range");
        }
        if !(self.msg3_delay_resolution_ms > 0.0) {
            return bad("msg3 delay resolution must be positive");
        }
        if !(self.doppler_update_cadence_ms > 0.0 && self.autonomous_ta_interval_ms > 0.0) {
            return bad("update cadences must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RaMessageKind {
    Msg1Preamble,
    Msg2Rar,
    Msg3RrcConnectionRequest,
    Msg4ContentionResolution,
}

impl RaMessageKind {
    pub fn label(self) -> &'static str {
        match self {
            RaMessageKind::Msg1Preamble => "msg1_preamble",
            RaMessageKind::Msg2Rar => "msg2_rar",
            RaMessageKind::Msg3RrcConnectionRequest => "msg3_rrc_connection_request",
            RaMessageKind::Msg4ContentionResolution => "msg4_contention_resolution",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RaPayload {
    Preamble {
        precompensation_us: f64,
    },
    Rar {
        /// `None` when the measured residual falls outside the bipolar range.
        ta_command: Option<TimingAdvanceCommand>,
        ul_grant_ms: f64,
    },
    ConnectionRequest {
        reported_delay_ms: f64,
    },
    ContentionResolution {
        contention_id: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaMessage {
    pub kind: RaMessageKind,
    pub tx_time_ms: f64,
    pub payload: RaPayload,
}

impl RaMessage {
    pub fn detail(&self) -> String {
        match self.payload {
            RaPayload::Preamble { precompensation_us } => format!("precomp_us={precompensation_us:.3}"),
            RaPayload::Rar { ta_command: Some(c), ul_grant_ms } => {
                format!("ta_steps={} ul_grant_ms={ul_grant_ms:.3}", c.steps)
            }
            RaPayload::Rar { ta_command: None, ul_grant_ms } => {
                format!("ta_steps=out_of_range ul_grant_ms={ul_grant_ms:.3}")
            }
            RaPayload::ConnectionRequest { reported_delay_ms } => {
                format!("reported_delay_ms={reported_delay_ms:.1}")
            }
            RaPayload::ContentionResolution { contention_id } => format!("contention_id={contention_id}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rrc_transitions() {
        let mut d = DeviceContext::new(GroundPosition::new(0.0, 0.0, 0.0));
        assert!(d.release().is_err());
        d.complete_random_access().unwrap();
        assert_eq!(d.rrc_state, RrcState::Connected);
        assert!(d.complete_random_access().is_err());
        d.release().unwrap();
        assert_eq!(d.rrc_state, RrcState::Idle);
    }

    #[test]
    fn timing_advance_never_negative() {
        let mut d = DeviceContext::new(GroundPosition::new(0.0, 0.0, 0.0));
        d.set_precompensation(0.5);
        d.apply_ta_command(&TimingAdvanceCommand { steps: -5, step_size_us: 0.52 });
        assert_eq!(d.timing_advance_us, 0.0);
        d.set_precompensation(100.0);
        assert!((d.timing_advance_us - (100.0 - 2.6)).abs() < 1e-12);
    }

    #[test]
    fn timer_config_limits() {
        let mut t = TimerConfig::default();
        assert!(t.validate().is_ok());
        t.contention_resolution_ms = 10_241.0;
        assert!(t.validate().is_err());
        t = TimerConfig { t_reordering_ms: 1_601.0, ..Default::default() };
        assert!(t.validate().is_err());
        t = TimerConfig { t_reordering_extension_ms: Some(-1.0), ..Default::default() };
        assert!(t.validate().is_err());
    }

    #[test]
    fn harq_config_limits_and_bler_defaults() {
        assert!(HarqConfig { n_processes: 3, ..Default::default() }.validate().is_err());
        assert!(HarqConfig { n_processes: 0, ..Default::default() }.validate().is_err());
        assert_eq!(HarqConfig::default().target_bler(), 0.10);
        assert_eq!(HarqConfig { enabled: false, ..Default::default() }.target_bler(), 0.01);
    }

    #[test]
    fn ta_range_in_steps() {
        let ta = TaConfig::default();
        assert_eq!(ta.max_steps(), 61);
        assert!(ta.max_steps() as f64 * ta.step_us <= ta.bipolar_range_us);
    }
}
