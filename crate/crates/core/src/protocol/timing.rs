//! RTT-aware scheduling windows and timer offsets.

use serde::{Deserialize, Serialize};

use crate::error::ProtocolError;

use super::types::{ProtocolConfig, TimerConfig, TimerKind};

/// RAR monitoring window `(start, end)` in ms for a preamble sent at
/// `preamble_ms`, offset by the round trip the receiver must allow for.
pub fn schedule_rar_window(
    preamble_ms: f64,
    rtt_offset_ms: f64,
    cfg: &ProtocolConfig,
) -> Result<(f64, f64), ProtocolError> {
    if !(rtt_offset_ms >= 0.0) {
        return Err(ProtocolError::Domain(format!("RTT offset {rtt_offset_ms} ms must be >= 0")));
    }
    let start = preamble_ms + rtt_offset_ms + cfg.bs_processing_ms;
    Ok((start, start + cfg.rar_window_ms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimerEvent {
    Msg3Sent,
    UlDataDone,
    RlcOutOfOrder,
}

/// Timer to arm in response to an event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimerPlan {
    pub kind: TimerKind,
    /// Delay from the triggering event to the timer start, ms.
    pub start_offset_ms: f64,
    pub duration_ms: f64,
}

/// Round up to the next multiple of 10 ms.
pub fn ceil_to_10ms(ms: f64) -> f64 {
    (ms / 10.0).ceil() * 10.0
}

/// Start offset and duration of the timer triggered by `event`.
///
/// Contention-resolution and HARQ RTT timers start `rtt_ms` after the event;
/// a zero RTT gives legacy timing. t-reordering starts immediately and is
/// extended by the configured amount or by the RTT rounded up to 10 ms.
pub fn apply_timer_rules(cfg: &TimerConfig, rtt_ms: f64, event: TimerEvent) -> Result<TimerPlan, ProtocolError> {
    if !(rtt_ms >= 0.0) {
        return Err(ProtocolError::Domain(format!("RTT {rtt_ms} ms must be >= 0")));
    }
    Ok(match event {
        TimerEvent::Msg3Sent => TimerPlan {
            kind: TimerKind::ContentionResolution,
            start_offset_ms: rtt_ms,
            duration_ms: cfg.contention_resolution_ms,
        },
        TimerEvent::UlDataDone => {
            TimerPlan { kind: TimerKind::HarqRtt, start_offset_ms: rtt_ms, duration_ms: cfg.harq_rtt_ms }
        }
        TimerEvent::RlcOutOfOrder => TimerPlan {
            kind: TimerKind::TReordering,
            start_offset_ms: 0.0,
            duration_ms: cfg.t_reordering_ms + cfg.t_reordering_extension_ms.unwrap_or(ceil_to_10ms(rtt_ms)),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rar_window_examples() {
        let cfg = ProtocolConfig::default();
        assert_eq!(schedule_rar_window(100.0, 0.0, &cfg).unwrap(), (104.0, 104.0 + 10_240.0));
        let (s, _) = schedule_rar_window(0.0, 541.3, &cfg).unwrap();
        assert!((s - 545.3).abs() < 1e-9);
        let (s, _) = schedule_rar_window(0.0, 25.8, &cfg).unwrap();
        assert!((s - 29.8).abs() < 1e-9);
        assert!(schedule_rar_window(0.0, -1.0, &cfg).is_err());
    }

    #[test]
    fn timer_examples() {
        let cfg = TimerConfig::default();
        let legacy = apply_timer_rules(&cfg, 0.0, TimerEvent::Msg3Sent).unwrap();
        assert_eq!(legacy.start_offset_ms, 0.0);
        assert_eq!(apply_timer_rules(&cfg, 0.0, TimerEvent::RlcOutOfOrder).unwrap().duration_ms, 1600.0);
        let cr = apply_timer_rules(&cfg, 541.0, TimerEvent::Msg3Sent).unwrap();
        assert_eq!((cr.start_offset_ms, cr.duration_ms), (541.0, 10_240.0));
        let harq = apply_timer_rules(&cfg, 541.0, TimerEvent::UlDataDone).unwrap();
        assert_eq!(harq.start_offset_ms, 541.0);
        let tr = apply_timer_rules(&cfg, 541.0, TimerEvent::RlcOutOfOrder).unwrap();
        assert_eq!(tr.duration_ms, 2150.0);
        let explicit = TimerConfig { t_reordering_extension_ms: Some(100.0), ..cfg };
        assert_eq!(apply_timer_rules(&explicit, 541.0, TimerEvent::RlcOutOfOrder).unwrap().duration_ms, 1700.0);
    }
}
