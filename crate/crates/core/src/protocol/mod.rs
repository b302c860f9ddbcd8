//! NB-IoT device and base-station procedures adapted for satellite access.
//!
//! Covers GNSS/ephemeris-aided delay and Doppler pre-compensation, the
//! bipolar timing-advance command, RTT-offset timers and the HARQ / RLC ARQ
//! throughput ceilings. The four-message random access procedure itself runs
//! on the discrete-event engine, see [`access::run_random_access`].

pub mod access;
pub mod estimation;
pub mod throughput;
pub mod timing;
mod types;

pub use access::{run_random_access, AccessChannel, AccessOutcome, FailureCause};
pub use estimation::{
    autonomous_ta_update, build_ta_command, doppler_precompensation, doppler_residual_bound_hz, estimate_service_delay,
    preamble_residual_us, precompensate_preamble, serving_satellite, DopplerCompensation, ServiceDelayEstimate,
    ServingSatellite, TaUpdate,
};
pub use throughput::{harq_throughput, rlc_arq_throughput};
pub use timing::{apply_timer_rules, schedule_rar_window, TimerEvent, TimerPlan};
pub use types::*;
