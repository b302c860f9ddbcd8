//! Raw run metrics and the JSON summary report.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Mergeable per-run counters and samples. Durations are integer microseconds
/// so that sums are exact.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub access_attempts: u64,
    pub access_successes: u64,
    pub failures: BTreeMap<String, u64>,
    pub access_latency_us: Vec<i64>,
    pub msg1_msg2_gap_us: Vec<i64>,
    pub messages_offered: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub delivered_bits: u64,
    pub transfer_time_us: i64,
    pub rar_monitoring_us: i64,
    pub cr_monitoring_us: i64,
    pub harq_monitoring_us: i64,
    pub max_preamble_misalignment_us: f64,
    pub max_ul_misalignment_us: f64,
    pub max_ta_alignment_bound_us: f64,
    pub max_outstanding_harq: u32,
    pub timer_violations: u64,
    pub tx_events: u64,
    pub rx_events: u64,
    pub events_processed: u64,
    pub sim_end_us: i64,
}

impl Metrics {
    pub fn record_failure(&mut self, cause: &str) {
        *self.failures.entry(cause.to_string()).or_default() += 1;
    }

    pub fn merge(&mut self, o: &Metrics) {
        self.access_attempts += o.access_attempts;
        self.access_successes += o.access_successes;
        for (k, v) in &o.failures {
            *self.failures.entry(k.clone()).or_default() += v;
        }
        self.access_latency_us.extend_from_slice(&o.access_latency_us);
        self.msg1_msg2_gap_us.extend_from_slice(&o.msg1_msg2_gap_us);
        self.messages_offered += o.messages_offered;
        self.messages_delivered += o.messages_delivered;
        self.messages_dropped += o.messages_dropped;
        self.delivered_bits += o.delivered_bits;
        self.transfer_time_us += o.transfer_time_us;
        self.rar_monitoring_us += o.rar_monitoring_us;
        self.cr_monitoring_us += o.cr_monitoring_us;
        self.harq_monitoring_us += o.harq_monitoring_us;
        self.max_preamble_misalignment_us = self.max_preamble_misalignment_us.max(o.max_preamble_misalignment_us);
        self.max_ul_misalignment_us = self.max_ul_misalignment_us.max(o.max_ul_misalignment_us);
        self.max_ta_alignment_bound_us = self.max_ta_alignment_bound_us.max(o.max_ta_alignment_bound_us);
        self.max_outstanding_harq = self.max_outstanding_harq.max(o.max_outstanding_harq);
        self.timer_violations += o.timer_violations;
        self.tx_events += o.tx_events;
        self.rx_events += o.rx_events;
        self.events_processed += o.events_processed;
        self.sim_end_us = self.sim_end_us.max(o.sim_end_us);
    }

    /// Device monitoring time for random access (RAR window plus contention
    /// resolution), us.
    pub fn access_monitoring_us(&self) -> i64 {
        self.rar_monitoring_us + self.cr_monitoring_us
    }
}

/// Order statistics of a sample set in ms (nearest-rank percentiles).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    pub count: u64,
    pub min: f64,
    pub mean: f64,
    pub p50: f64,
    pub p90: f64,
    pub p99: f64,
    pub max: f64,
}

impl Distribution {
    pub fn from_us(samples: &[i64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let mut s = samples.to_vec();
        s.sort_unstable();
        let n = s.len();
        let rank = |q: f64| s[((q * n as f64).ceil() as usize).clamp(1, n) - 1] as f64 / 1e3;
        let sum: i128 = s.iter().map(|&v| v as i128).sum();
        Self {
            count: n as u64,
            min: s[0] as f64 / 1e3,
            mean: sum as f64 / n as f64 / 1e3,
            p50: rank(0.5),
            p90: rank(0.9),
            p99: rank(0.99),
            max: s[n - 1] as f64 / 1e3,
        }
    }
}

/// Stable-schema summary of one or more runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub seeds: Vec<u64>,
    pub devices: u64,
    pub access_attempts: u64,
    pub access_successes: u64,
    pub access_failures: BTreeMap<String, u64>,
    pub access_latency_ms: Distribution,
    pub msg1_msg2_gap_ms: Distribution,
    pub messages_offered: u64,
    pub messages_delivered: u64,
    pub messages_dropped: u64,
    pub delivered_bits: u64,
    pub transfer_time_ms: f64,
    pub goodput_bps: f64,
    pub harq_enabled: bool,
    pub harq_processes: u8,
    pub max_outstanding_harq: u32,
    pub monitoring_time_ms: f64,
    pub rar_monitoring_ms: f64,
    pub cr_monitoring_ms: f64,
    pub harq_monitoring_ms: f64,
    pub max_preamble_misalignment_us: f64,
    pub max_ul_misalignment_us: f64,
    pub max_ta_alignment_bound_us: f64,
    pub timer_violations: u64,
    pub tx_events: u64,
    pub rx_events: u64,
    pub events_processed: u64,
    pub sim_end_ms: f64,
}

impl MetricsReport {
    pub fn build(
        scenario: &str,
        seeds: Vec<u64>,
        devices: u64,
        harq_enabled: bool,
        harq_processes: u8,
        m: &Metrics,
    ) -> Self {
        let ms = |us: i64| us as f64 / 1e3;
        Self {
            scenario: scenario.to_string(),
            seeds,
            devices,
            access_attempts: m.access_attempts,
            access_successes: m.access_successes,
            access_failures: m.failures.clone(),
            access_latency_ms: Distribution::from_us(&m.access_latency_us),
            msg1_msg2_gap_ms: Distribution::from_us(&m.msg1_msg2_gap_us),
            messages_offered: m.messages_offered,
            messages_delivered: m.messages_delivered,
            messages_dropped: m.messages_dropped,
            delivered_bits: m.delivered_bits,
            transfer_time_ms: ms(m.transfer_time_us),
            goodput_bps: if m.transfer_time_us > 0 {
                m.delivered_bits as f64 / (m.transfer_time_us as f64 * 1e-6)
            } else {
                0.0
            },
            harq_enabled,
            harq_processes,
            max_outstanding_harq: m.max_outstanding_harq,
            monitoring_time_ms: ms(m.access_monitoring_us()),
            rar_monitoring_ms: ms(m.rar_monitoring_us),
            cr_monitoring_ms: ms(m.cr_monitoring_us),
            harq_monitoring_ms: ms(m.harq_monitoring_us),
            max_preamble_misalignment_us: m.max_preamble_misalignment_us,
            max_ul_misalignment_us: m.max_ul_misalignment_us,
            max_ta_alignment_bound_us: m.max_ta_alignment_bound_us,
            timer_violations: m.timer_violations,
            tx_events: m.tx_events,
            rx_events: m.rx_events,
            events_processed: m.events_processed,
            sim_end_ms: ms(m.sim_end_us),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentiles_nearest_rank() {
        let d = Distribution::from_us(&[5_000, 1_000, 3_000, 2_000, 4_000]);
        assert_eq!((d.count, d.min, d.max, d.p50, d.mean), (5, 1.0, 5.0, 3.0, 3.0));
        assert_eq!(d.p90, 5.0);
        assert_eq!(Distribution::from_us(&[]), Distribution::default());
    }

    #[test]
    fn merge_adds_and_maxes() {
        let mut a = Metrics { access_attempts: 2, max_outstanding_harq: 1, ..Default::default() };
        a.record_failure("rar_timeout");
        let mut b = Metrics { access_attempts: 3, max_outstanding_harq: 2, ..Default::default() };
        b.record_failure("rar_timeout");
        a.merge(&b);
        assert_eq!(a.access_attempts, 5);
        assert_eq!(a.max_outstanding_harq, 2);
        assert_eq!(a.failures["rar_timeout"], 2);
    }
}
