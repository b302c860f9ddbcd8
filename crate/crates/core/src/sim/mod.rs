//! Deterministic discrete-event simulation of NB-IoT devices behind a
//! bent-pipe satellite.

pub mod channel;
pub mod engine;
pub mod link;
pub mod metrics;
pub mod parallel;
pub mod queue;
pub mod scenario;
pub mod schedule;
pub mod time;
pub mod trace;

pub use channel::{channel_apply, reception_success, repetition_gain_db, ChannelModel, Reception, ReceptionConfig};
pub use engine::{run_scenario, AccessRecord, SimOutput};
pub use link::{LinkState, LinkTimeline, DEFAULT_GRID_US};
pub use metrics::{Distribution, Metrics, MetricsReport};
pub use parallel::{aggregate_report, run_many};
pub use queue::{EventQueue, SimEvent, SimEventKind};
pub use scenario::{AccessConfig, Cell, DataConfig, DeviceSpec, FaultSpec, Scenario, TrafficConfig};
pub use schedule::{earth_fixed_beam_schedule, switch_events, ServiceInterval, SwitchEvent};
pub use time::SimTime;
pub use trace::{write_event_trace, write_timeline, TimelineEntry, TraceRecord};
