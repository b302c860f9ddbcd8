//! Discrete-event execution of random access and uplink data transfer for a
//! set of devices behind one bent-pipe gateway.
//!
//! Each device and the base station exchange messages only through the event
//! queue. Propagation uses the true (linearized) link geometry; devices act on
//! their own GNSS/ephemeris estimates.

use std::collections::{BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::channel::channel_apply;
use super::link::{LinkState, LinkTimeline};
use super::metrics::{Metrics, MetricsReport};
use super::queue::{EventQueue, SimEventKind};
use super::scenario::Scenario;
use super::time::SimTime;
use super::trace::{TimelineEntry, TraceRecord};
use crate::error::{ProtocolError, SimError};
use crate::geometry::geometry_sample;
use crate::link_budget::LinkDirection;
use crate::protocol::{
    apply_timer_rules, autonomous_ta_update, build_ta_command, doppler_precompensation, estimate_service_delay,
    precompensate_preamble, schedule_rar_window, ActiveTimer, DeviceContext, Ephemeris, FailureCause, RaMessage,
    RaMessageKind, RaPayload, RrcState, TimerEvent, TimerKind, TimingAdvanceCommand,
};

/// Early margin of the RAR window ahead of the device's own RTT estimate, ms.
/// Covers residual estimation errors up to the bipolar TA range and beyond.
pub const RAR_WINDOW_GUARD_MS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Device,
    Bs,
}

#[derive(Debug, Clone, PartialEq)]
enum Packet {
    Ra(RaMessage),
    HarqBlock { process: usize, block: u32 },
    HarqFeedback { process: usize, ack: bool },
    RlcPdu { sn: u32, poll: bool },
    RlcStatus { acked: Vec<u32>, nacked: Vec<u32>, polled: bool },
}

impl Packet {
    fn label(&self) -> &'static str {
        match self {
            Packet::Ra(m) => m.kind.label(),
            Packet::HarqBlock { .. } => "harq_block",
            Packet::HarqFeedback { .. } => "harq_feedback",
            Packet::RlcPdu { .. } => "rlc_pdu",
            Packet::RlcStatus { .. } => "rlc_status",
        }
    }

    fn detail(&self) -> String {
        match self {
            Packet::Ra(m) => m.detail(),
            Packet::HarqBlock { process, block } => format!("process={process} block={block}"),
            Packet::HarqFeedback { process, ack } => format!("process={process} ack={ack}"),
            Packet::RlcPdu { sn, poll } => format!("sn={sn} poll={poll}"),
            Packet::RlcStatus { acked, nacked, polled } => {
                format!("acked={} nacked={} polled={polled}", acked.len(), nacked.len())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Payload {
    Access { dev: usize },
    TaRefresh { dev: usize, token: u64 },
    Tx { dev: usize, from: Node, packet: Packet },
    Rx { dev: usize, to: Node, packet: Packet, success: bool, snr_db: f64 },
    Timer { dev: usize, owner: Node, kind: TimerKind, token: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    AwaitRar,
    AwaitMsg3Tx,
    AwaitMsg4,
    Connected,
    Done,
}

/// Result of one random access attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessRecord {
    pub device: usize,
    pub message: u32,
    pub attempt: u32,
    pub time: SimTime,
    pub success: bool,
    pub cause: Option<FailureCause>,
    /// From the first preamble of the message to Msg4 reception, ms.
    pub latency_ms: Option<f64>,
    pub ta_command: Option<TimingAdvanceCommand>,
    /// Device-observed time from preamble transmission to RAR reception, ms.
    pub msg1_msg2_gap_ms: Option<f64>,
    /// Msg3 transmission minus Msg2 reception, ms.
    pub msg2_msg3_gap_ms: Option<f64>,
}

struct Transfer {
    start: SimTime,
    blocks: u32,
    next_block: u32,
    done_blocks: u32,
    tx_free: SimTime,
    procs: Vec<Option<u32>>,
    harq_monitor_from: Vec<SimTime>,
    rlc_acked: BTreeSet<u32>,
    rlc_retx: BTreeSet<u32>,
}

struct Dev {
    ctx: DeviceContext,
    phase: Phase,
    messages_started: u32,
    message_ready_at: SimTime,
    first_tx: Option<SimTime>,
    attempt: u32,
    sat: usize,
    est_rtt_ms: f64,
    t1: SimTime,
    rar_window: (SimTime, SimTime),
    cr_window: (SimTime, SimTime),
    timer_token: u64,
    ta_token: u64,
    ta_command: Option<TimingAdvanceCommand>,
    gap12: Option<SimTime>,
    gap23: Option<SimTime>,
    transfer: Option<Transfer>,
}

#[derive(Default)]
struct BsDev {
    reported_rtt_ms: Option<f64>,
    rx: BTreeSet<u32>,
    reorder_token: u64,
    reorder_running: bool,
}

/// Everything a run produces.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub report: MetricsReport,
    pub metrics: Metrics,
    pub trace: Vec<TraceRecord>,
    /// Protocol timeline per device.
    pub timelines: Vec<Vec<TimelineEntry>>,
    pub access_records: Vec<AccessRecord>,
    pub final_contexts: Vec<DeviceContext>,
}

struct Engine<'a> {
    sc: &'a Scenario,
    eph: Ephemeris,
    queue: EventQueue<Payload>,
    rng: ChaCha8Rng,
    devs: Vec<Dev>,
    bs: Vec<BsDev>,
    links: HashMap<(usize, usize), LinkTimeline>,
    metrics: Metrics,
    trace: Vec<TraceRecord>,
    timelines: Vec<Vec<TimelineEntry>>,
    records: Vec<AccessRecord>,
}

/// Runs a validated scenario to completion (or to its time limit).
pub fn run_scenario(sc: &Scenario, seed: u64) -> Result<SimOutput, SimError> {
    sc.validate()?;
    let mut e = Engine::new(sc, seed);
    e.run()?;
    Ok(e.finish(seed))
}

fn ms(t: SimTime) -> f64 {
    t.as_ms()
}

impl<'a> Engine<'a> {
    fn new(sc: &'a Scenario, seed: u64) -> Self {
        let devs = sc
            .devices
            .iter()
            .map(|d| {
                let mut ctx = DeviceContext::new(d.gnss_position);
                ctx.gnss_error_radial_m = d.gnss_error_radial_m;
                Dev {
                    ctx,
                    phase: Phase::Idle,
                    messages_started: 0,
                    message_ready_at: SimTime::from_ms(d.start_ms),
                    first_tx: None,
                    attempt: 0,
                    sat: 0,
                    est_rtt_ms: 0.0,
                    t1: SimTime::ZERO,
                    rar_window: (SimTime::ZERO, SimTime::ZERO),
                    cr_window: (SimTime::ZERO, SimTime::ZERO),
                    timer_token: 0,
                    ta_token: 0,
                    ta_command: None,
                    gap12: None,
                    gap23: None,
                    transfer: None,
                }
            })
            .collect::<Vec<_>>();
        let n = devs.len();
        Self {
            sc,
            eph: sc.ephemeris(),
            queue: EventQueue::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            devs,
            bs: (0..n).map(|_| BsDev::default()).collect(),
            links: HashMap::new(),
            metrics: Metrics::default(),
            trace: Vec::new(),
            timelines: vec![Vec::new(); n],
            records: Vec::new(),
        }
    }

    fn run(&mut self) -> Result<(), SimError> {
        for i in 0..self.devs.len() {
            if self.sc.traffic.messages_per_device > 0 {
                let at = self.devs[i].message_ready_at;
                self.queue.schedule(at, SimEventKind::Measurement, Payload::Access { dev: i })?;
            } else {
                self.devs[i].phase = Phase::Done;
            }
        }
        let limit = SimTime::from_ms(self.sc.max_sim_time_s * 1e3);
        let mut last = SimTime::ZERO;
        while let Some(t) = self.queue.peek_time() {
            if t > limit {
                break;
            }
            let ev = self.queue.pop().expect("peeked");
            if ev.time < last {
                return Err(SimError::Causality(format!("event at {} after {}", ev.time, last)));
            }
            last = ev.time;
            self.metrics.events_processed += 1;
            self.metrics.sim_end_us = ev.time.as_us();
            self.dispatch(ev.time, ev.seq, ev.kind, ev.payload)?;
        }
        Ok(())
    }

    fn finish(self, seed: u64) -> SimOutput {
        let report = MetricsReport::build(
            &self.sc.name,
            vec![seed],
            self.devs.len() as u64,
            self.sc.harq.enabled,
            self.sc.harq.n_processes,
            &self.metrics,
        );
        let final_contexts = self.devs.iter().map(|d| d.ctx.clone()).collect();
        SimOutput {
            report,
            metrics: self.metrics,
            trace: self.trace,
            timelines: self.timelines,
            access_records: self.records,
            final_contexts,
        }
    }

    // ----- helpers -------------------------------------------------------

    fn abs_s(&self, t: SimTime) -> f64 {
        self.sc.start_time_s + t.as_s()
    }

    fn link(&mut self, ground: usize, sat: usize, t: SimTime) -> Result<LinkState, SimError> {
        let sc = self.sc;
        let tl = self.links.entry((ground, sat)).or_insert_with(|| {
            let pos = if ground == 0 { sc.gateway } else { sc.devices[ground - 1].true_position };
            LinkTimeline::new(sc.satellites[sat], pos, sc.start_time_s, sc.geometry_grid_us)
        });
        Ok(tl.at(t)?)
    }

    fn service(&mut self, dev: usize, t: SimTime) -> Result<LinkState, SimError> {
        let sat = self.devs[dev].sat;
        self.link(dev + 1, sat, t)
    }

    fn feeder(&mut self, dev: usize, t: SimTime) -> Result<LinkState, SimError> {
        let sat = self.devs[dev].sat;
        self.link(0, sat, t)
    }

    fn entity(node: Node, dev: usize) -> String {
        match node {
            Node::Device => format!("device{dev}"),
            Node::Bs => "bs".to_string(),
        }
    }

    fn record_trace(&mut self, time: SimTime, seq: u64, kind: SimEventKind, entity: String, detail: String) {
        self.trace.push(TraceRecord { time, seq, entity, kind, detail });
    }

    fn timeline(&mut self, dev: usize, time: SimTime, node: Node, event: &str, kind: &str, detail: String) {
        self.timelines[dev].push(TimelineEntry {
            time,
            entity: Self::entity(node, dev),
            event: event.to_string(),
            message_kind: kind.to_string(),
            detail,
        });
    }

    fn schedule(&mut self, t: SimTime, kind: SimEventKind, p: Payload) -> Result<(), SimError> {
        self.queue.schedule(t, kind, p).map(|_| ())
    }

    /// Sends `packet` over the bent pipe: reception ends after `airtime` plus
    /// the gateway-satellite-device propagation delay sampled at `t`.
    fn deliver(
        &mut self,
        dev: usize,
        from: Node,
        packet: Packet,
        t: SimTime,
        airtime: SimTime,
        forced_loss: bool,
    ) -> Result<(), SimError> {
        let service = self.service(dev, t)?;
        let feeder = self.feeder(dev, t)?;
        let dir = if from == Node::Device { LinkDirection::Uplink } else { LinkDirection::Downlink };
        let ch = &self.sc.channel;
        let fading = ch.fading_db(&mut self.rng);
        let snr = ch.link_snr_db(dir, service.slant_range_km)? + fading;
        let visible = service.elevation_deg >= 0.0 && feeder.elevation_deg >= 0.0;
        let rx = channel_apply(
            t + airtime,
            service.delay_ms + feeder.delay_ms,
            snr,
            ch.repetitions(dir),
            ch.threshold_db(dir),
        )?;
        self.metrics.tx_events += 1;
        let to = if from == Node::Device { Node::Bs } else { Node::Device };
        let success = rx.success && visible && !forced_loss;
        self.schedule(
            rx.arrival,
            SimEventKind::RxArrival,
            Payload::Rx { dev, to, packet, success, snr_db: rx.effective_snr_db },
        )
    }

    fn fault(&self, kind: RaMessageKind, dev: usize) -> bool {
        let attempt = self.devs[dev].attempt;
        self.sc.faults.iter().any(|f| f.matches(kind, attempt, dev))
    }

    fn block_error(&mut self) -> bool {
        if !self.sc.channel.reception.block_errors {
            return false;
        }
        let p = self.sc.harq.target_bler();
        self.rng.random::<f64>() < p
    }

    fn note_ul_misalignment(&mut self, dev: usize, t: SimTime) -> Result<f64, SimError> {
        let s = self.service(dev, t)?;
        let mis = 2.0 * s.delay_ms * 1e3 - self.devs[dev].ctx.timing_advance_us;
        self.metrics.max_ul_misalignment_us = self.metrics.max_ul_misalignment_us.max(mis.abs());
        Ok(mis)
    }

    // ----- dispatch ------------------------------------------------------

    fn dispatch(&mut self, now: SimTime, seq: u64, kind: SimEventKind, p: Payload) -> Result<(), SimError> {
        match p {
            Payload::Access { dev } => {
                self.record_trace(now, seq, kind, Self::entity(Node::Device, dev), "access_attempt".into());
                self.on_access(dev, now)
            }
            Payload::TaRefresh { dev, token } => {
                if token != self.devs[dev].ta_token || self.devs[dev].phase != Phase::Connected {
                    return Ok(());
                }
                self.on_ta_refresh(dev, now, seq, kind)
            }
            Payload::Tx { dev, from, packet } => {
                let detail = format!("msg={} {}", packet.label(), packet.detail());
                self.record_trace(now, seq, kind, Self::entity(from, dev), detail);
                self.on_tx(dev, from, packet, now)
            }
            Payload::Rx { dev, to, packet, success, snr_db } => {
                self.metrics.rx_events += 1;
                let detail = format!("msg={} success={success} snr_db={snr_db:.3} {}", packet.label(), packet.detail());
                self.record_trace(now, seq, kind, Self::entity(to, dev), detail);
                match to {
                    Node::Bs => self.on_bs_rx(dev, packet, success, now),
                    Node::Device => self.on_device_rx(dev, packet, success, now),
                }
            }
            Payload::Timer { dev, owner, kind: timer, token } => {
                self.on_timer(dev, owner, timer, token, now, seq, kind)
            }
        }
    }

    // ----- random access -------------------------------------------------

    fn on_access(&mut self, dev: usize, now: SimTime) -> Result<(), SimError> {
        if self.devs[dev].phase != Phase::Idle {
            return Ok(());
        }
        if self.devs[dev].attempt == 0 {
            self.devs[dev].attempt = 1;
            self.devs[dev].messages_started += 1;
            self.devs[dev].first_tx = None;
            self.metrics.messages_offered += 1;
        }
        self.metrics.access_attempts += 1;
        self.devs[dev].ta_command = None;
        self.devs[dev].gap12 = None;
        self.devs[dev].gap23 = None;

        let t_s = self.abs_s(now);
        let est = match estimate_service_delay(&self.devs[dev].ctx, &self.eph, t_s) {
            Ok(e) => e,
            Err(ProtocolError::NotReachable { .. }) => return self.fail(dev, FailureCause::NotReachable, now),
            Err(e) => return Err(e.into()),
        };
        self.devs[dev].sat = est.satellite;
        // Feeder delay from the broadcast gateway location and the same ephemeris.
        let sat_est = self.eph.satellites[est.satellite].state_at(t_s - self.eph.staleness_s);
        let feeder_est = geometry_sample(&sat_est, &self.sc.gateway, 1.0)?.one_way_delay_ms;
        let est_rtt = 2.0 * (est.delay_ms + feeder_est);
        self.devs[dev].est_rtt_ms = est_rtt;
        if est_rtt > self.sc.max_rtt_ms {
            return self.fail(dev, FailureCause::Unsuitable, now);
        }
        let feeder = self.feeder(dev, now)?;
        let service = self.service(dev, now)?;
        if feeder.elevation_deg < 0.0 || service.elevation_deg < 0.0 {
            return self.fail(dev, FailureCause::NotReachable, now);
        }
        // Next PRACH occasion: BS slot S whose preamble, sent with the
        // estimated advance, leaves the device no earlier than now.
        let period = self.sc.protocol.prach_period_ms;
        let lead = feeder.delay_ms + service.delay_ms - 2.0 * est.delay_ms;
        let mut slot = ((ms(now) - lead) / period).ceil() * period;
        let mut t1 = SimTime::from_ms(slot + lead);
        while t1 < now {
            slot += period;
            t1 = SimTime::from_ms(slot + lead);
        }
        let at_t1 = estimate_service_delay(&self.devs[dev].ctx, &self.eph, self.abs_s(t1))?;
        let precomp_us = precompensate_preamble(at_t1.delay_ms)? * 1e3;
        let msg = RaMessage {
            kind: RaMessageKind::Msg1Preamble,
            tx_time_ms: ms(t1),
            payload: RaPayload::Preamble { precompensation_us: precomp_us },
        };
        self.timeline(
            dev,
            now,
            Node::Device,
            "measurement",
            "",
            format!("attempt={} est_rtt_ms={est_rtt:.3} prach_slot_ms={slot:.3}", self.devs[dev].attempt),
        );
        self.schedule(t1, SimEventKind::TxStart, Payload::Tx { dev, from: Node::Device, packet: Packet::Ra(msg) })
    }

    fn on_tx(&mut self, dev: usize, from: Node, packet: Packet, now: SimTime) -> Result<(), SimError> {
        let tti = SimTime::from_ms(self.sc.data.tti_ms);
        match (&packet, from) {
            (Packet::Ra(m), _) => {
                let m = *m;
                self.timeline(dev, now, from, "tx", m.kind.label(), m.detail());
                match m.payload {
                    RaPayload::Preamble { precompensation_us } => {
                        let d = &mut self.devs[dev];
                        d.t1 = now;
                        d.first_tx.get_or_insert(now);
                        d.ctx.set_precompensation(precompensation_us);
                        let t_s = self.abs_s(now);
                        let dop = doppler_precompensation(
                            &self.devs[dev].ctx,
                            &self.eph,
                            self.sc.channel.carrier_hz,
                            t_s,
                            self.sc.protocol.doppler_update_cadence_ms,
                        )?;
                        self.devs[dev].ctx.frequency_offset_hz = dop.offset_hz;
                        let mis = self.note_ul_misalignment(dev, now)?;
                        self.metrics.max_preamble_misalignment_us =
                            self.metrics.max_preamble_misalignment_us.max(mis.abs());
                        let lost = self.fault(m.kind, dev);
                        self.deliver(dev, from, packet, now, SimTime::ZERO, lost)?;
                        let offset = (self.devs[dev].est_rtt_ms - RAR_WINDOW_GUARD_MS).max(0.0);
                        let (ws, we) = schedule_rar_window(ms(now), offset, &self.sc.protocol)?;
                        let (ws, we) = (SimTime::from_ms(ws), SimTime::from_ms(we));
                        self.arm_timer(dev, TimerKind::RarWindow, ws, we)?;
                        self.devs[dev].rar_window = (ws, we);
                        self.devs[dev].phase = Phase::AwaitRar;
                        Ok(())
                    }
                    RaPayload::ConnectionRequest { .. } => {
                        let est = estimate_service_delay(&self.devs[dev].ctx, &self.eph, self.abs_s(now))?;
                        self.devs[dev].ctx.set_precompensation(precompensate_preamble(est.delay_ms)? * 1e3);
                        self.note_ul_misalignment(dev, now)?;
                        let lost = self.fault(m.kind, dev);
                        self.deliver(dev, from, packet, now, SimTime::ZERO, lost)?;
                        let plan = apply_timer_rules(
                            &self.sc.timers,
                            self.sc.timers.ntn_start_offset_ms,
                            TimerEvent::Msg3Sent,
                        )?;
                        let cs = now + SimTime::from_ms(plan.start_offset_ms);
                        let ce = cs + SimTime::from_ms(plan.duration_ms);
                        self.arm_timer(dev, TimerKind::ContentionResolution, cs, ce)?;
                        self.devs[dev].cr_window = (cs, ce);
                        self.devs[dev].phase = Phase::AwaitMsg4;
                        Ok(())
                    }
                    _ => {
                        let lost = self.fault(m.kind, dev);
                        self.deliver(dev, from, packet, now, SimTime::ZERO, lost)
                    }
                }
            }
            (Packet::HarqBlock { .. }, _) | (Packet::RlcPdu { .. }, _) => {
                self.note_ul_misalignment(dev, now)?;
                let err = self.block_error();
                if let Packet::HarqBlock { process, .. } = packet {
                    let plan =
                        apply_timer_rules(&self.sc.timers, self.sc.timers.ntn_start_offset_ms, TimerEvent::UlDataDone)?;
                    let start = now + tti + SimTime::from_ms(plan.start_offset_ms);
                    let expiry = start + SimTime::from_ms(plan.duration_ms);
                    if let Some(tr) = self.devs[dev].transfer.as_mut() {
                        tr.harq_monitor_from[process] = expiry;
                    }
                    let token = self.devs[dev].timer_token;
                    self.schedule(
                        expiry,
                        SimEventKind::TimerFire,
                        Payload::Timer { dev, owner: Node::Device, kind: TimerKind::HarqRtt, token },
                    )?;
                }
                self.deliver(dev, from, packet, now, tti, err)
            }
            _ => self.deliver(dev, from, packet, now, SimTime::ZERO, false),
        }
    }

    fn arm_timer(&mut self, dev: usize, kind: TimerKind, start: SimTime, expiry: SimTime) -> Result<(), SimError> {
        let d = &mut self.devs[dev];
        d.timer_token += 1;
        d.ctx.active_timers = vec![ActiveTimer { kind, start_ms: ms(start), expiry_ms: ms(expiry) }];
        let token = d.timer_token;
        self.timeline(dev, start, Node::Device, "timer_start", kind.label(), format!("expiry_ms={expiry}"));
        self.schedule(expiry, SimEventKind::TimerFire, Payload::Timer { dev, owner: Node::Device, kind, token })
    }

    fn on_bs_rx(&mut self, dev: usize, packet: Packet, success: bool, now: SimTime) -> Result<(), SimError> {
        let bs_proc = SimTime::from_ms(self.sc.protocol.bs_processing_ms);
        if let Packet::Ra(m) = &packet {
            self.timeline(dev, now, Node::Bs, if success { "rx" } else { "rx_failed" }, m.kind.label(), m.detail());
        }
        match packet {
            Packet::Ra(m) if success => match m.payload {
                RaPayload::Preamble { .. } => {
                    // The preamble timing error the BS measures.
                    let s = self.service(dev, m_time(&m))?;
                    let residual_us = 2.0 * s.delay_ms * 1e3 - precomp_of(&m);
                    let ta_command = build_ta_command(residual_us, &self.sc.protocol.ta).ok();
                    let rar_tx = now + bs_proc;
                    let grant = ms(rar_tx) + self.sc.max_rtt_ms + self.sc.protocol.device_processing_ms;
                    let rar = RaMessage {
                        kind: RaMessageKind::Msg2Rar,
                        tx_time_ms: ms(rar_tx),
                        payload: RaPayload::Rar { ta_command, ul_grant_ms: grant },
                    };
                    self.schedule(
                        rar_tx,
                        SimEventKind::TxStart,
                        Payload::Tx { dev, from: Node::Bs, packet: Packet::Ra(rar) },
                    )
                }
                RaPayload::ConnectionRequest { reported_delay_ms } => {
                    let f = self.feeder(dev, now)?;
                    self.bs[dev].reported_rtt_ms = Some(2.0 * (reported_delay_ms + f.delay_ms));
                    let tx = now + bs_proc;
                    let msg4 = RaMessage {
                        kind: RaMessageKind::Msg4ContentionResolution,
                        tx_time_ms: ms(tx),
                        payload: RaPayload::ContentionResolution { contention_id: dev as u64 },
                    };
                    self.schedule(
                        tx,
                        SimEventKind::TxStart,
                        Payload::Tx { dev, from: Node::Bs, packet: Packet::Ra(msg4) },
                    )
                }
                _ => Ok(()),
            },
            Packet::Ra(_) => Ok(()),
            Packet::HarqBlock { process, .. } => {
                let fb = Packet::HarqFeedback { process, ack: success };
                self.schedule(now + bs_proc, SimEventKind::TxStart, Payload::Tx { dev, from: Node::Bs, packet: fb })
            }
            Packet::RlcPdu { sn, poll } => {
                if success {
                    self.bs[dev].rx.insert(sn);
                }
                let has_gap =
                    |rx: &BTreeSet<u32>| rx.iter().next_back().is_some_and(|&hi| (0..hi).any(|x| !rx.contains(&x)));
                if success && has_gap(&self.bs[dev].rx) && !self.bs[dev].reorder_running {
                    let rtt = self.bs[dev].reported_rtt_ms.unwrap_or(self.sc.max_rtt_ms);
                    let plan = apply_timer_rules(&self.sc.timers, rtt, TimerEvent::RlcOutOfOrder)?;
                    let b = &mut self.bs[dev];
                    b.reorder_running = true;
                    b.reorder_token += 1;
                    let token = b.reorder_token;
                    let at = now + SimTime::from_ms(plan.duration_ms);
                    self.schedule(
                        at,
                        SimEventKind::TimerFire,
                        Payload::Timer { dev, owner: Node::Bs, kind: TimerKind::TReordering, token },
                    )?;
                }
                if poll {
                    let rx = &self.bs[dev].rx;
                    let acked: Vec<u32> = rx.iter().copied().collect();
                    let nacked: Vec<u32> = (0..=sn).filter(|x| !rx.contains(x)).collect();
                    if !has_gap(rx) {
                        let b = &mut self.bs[dev];
                        b.reorder_running = false;
                        b.reorder_token += 1;
                    }
                    let st = Packet::RlcStatus { acked, nacked, polled: true };
                    self.schedule(
                        now + bs_proc,
                        SimEventKind::TxStart,
                        Payload::Tx { dev, from: Node::Bs, packet: st },
                    )?;
                }
                Ok(())
            }
            Packet::HarqFeedback { .. } | Packet::RlcStatus { .. } => Ok(()),
        }
    }

    fn on_device_rx(&mut self, dev: usize, packet: Packet, success: bool, now: SimTime) -> Result<(), SimError> {
        if let Packet::Ra(m) = &packet {
            self.timeline(dev, now, Node::Device, if success { "rx" } else { "rx_failed" }, m.kind.label(), m.detail());
        }
        match packet {
            Packet::Ra(m) => match m.payload {
                RaPayload::Rar { ta_command, ul_grant_ms } => self.on_rar(dev, success, ta_command, ul_grant_ms, now),
                RaPayload::ContentionResolution { .. } => self.on_msg4(dev, success, now),
                _ => Ok(()),
            },
            Packet::HarqFeedback { process, ack } => self.on_harq_feedback(dev, process, success && ack, now),
            Packet::RlcStatus { acked, nacked, polled } => self.on_rlc_status(dev, success, acked, nacked, polled, now),
            _ => Ok(()),
        }
    }

    fn on_rar(
        &mut self,
        dev: usize,
        success: bool,
        ta_command: Option<TimingAdvanceCommand>,
        ul_grant_ms: f64,
        now: SimTime,
    ) -> Result<(), SimError> {
        let d = &self.devs[dev];
        let (ws, we) = d.rar_window;
        if !success || d.phase != Phase::AwaitRar || now < ws || now > we {
            self.timeline(
                dev,
                now,
                Node::Device,
                "ignored",
                RaMessageKind::Msg2Rar.label(),
                "outside RAR monitoring".into(),
            );
            return Ok(());
        }
        let d = &mut self.devs[dev];
        d.timer_token += 1;
        d.ctx.active_timers.clear();
        d.gap12 = Some(now - d.t1);
        self.metrics.rar_monitoring_us += (now - ws).as_us();
        self.metrics.msg1_msg2_gap_us.push((now - d.t1).as_us());
        let Some(cmd) = ta_command else {
            return self.fail(dev, FailureCause::TaRange, now);
        };
        d.ctx.apply_ta_command(&cmd);
        d.ta_command = Some(cmd);
        // Transmit so that Msg3 reaches the BS at the granted slot, using the
        // DL timing reference and the current advance.
        let s = self.service(dev, now)?;
        let f = self.feeder(dev, now)?;
        let advance_ms = self.devs[dev].ctx.timing_advance_us / 1e3;
        let tx3 = SimTime::from_ms(ul_grant_ms + f.delay_ms + s.delay_ms - advance_ms);
        if tx3 < now + SimTime::from_ms(self.sc.protocol.device_processing_ms) {
            return self.fail(dev, FailureCause::GrantMissed, now);
        }
        let est = estimate_service_delay(&self.devs[dev].ctx, &self.eph, self.abs_s(now))?;
        let res = self.sc.protocol.msg3_delay_resolution_ms;
        let reported = ((est.delay_ms / res).round() * res).max(0.0);
        let msg3 = RaMessage {
            kind: RaMessageKind::Msg3RrcConnectionRequest,
            tx_time_ms: ms(tx3),
            payload: RaPayload::ConnectionRequest { reported_delay_ms: reported },
        };
        self.devs[dev].gap23 = Some(tx3 - now);
        self.devs[dev].phase = Phase::AwaitMsg3Tx;
        self.schedule(tx3, SimEventKind::TxStart, Payload::Tx { dev, from: Node::Device, packet: Packet::Ra(msg3) })
    }

    fn on_msg4(&mut self, dev: usize, success: bool, now: SimTime) -> Result<(), SimError> {
        let (cs, ce) = self.devs[dev].cr_window;
        if !success || self.devs[dev].phase != Phase::AwaitMsg4 || now < cs || now > ce {
            self.timeline(
                dev,
                now,
                Node::Device,
                "ignored",
                RaMessageKind::Msg4ContentionResolution.label(),
                "outside contention resolution monitoring".into(),
            );
            return Ok(());
        }
        let d = &mut self.devs[dev];
        d.timer_token += 1;
        d.ctx.active_timers.clear();
        d.ctx.complete_random_access()?;
        d.phase = Phase::Connected;
        let latency = now - d.first_tx.unwrap_or(d.t1);
        self.metrics.cr_monitoring_us += (now - cs).as_us();
        self.metrics.access_successes += 1;
        self.metrics.access_latency_us.push(latency.as_us());
        self.push_record(dev, now, true, None, Some(latency.as_ms()));
        self.timeline(dev, now, Node::Device, "state", "", "rrc_connected".into());
        self.devs[dev].attempt = 0;
        self.devs[dev].ta_token += 1;
        let token = self.devs[dev].ta_token;
        let interval = SimTime::from_ms(self.sc.protocol.autonomous_ta_interval_ms);
        self.schedule(now + interval, SimEventKind::Measurement, Payload::TaRefresh { dev, token })?;
        if self.sc.traffic.message_bits > 0 {
            self.start_transfer(dev, now + SimTime::from_ms(self.sc.protocol.device_processing_ms))
        } else {
            self.finish_message(dev, now)
        }
    }

    fn push_record(
        &mut self,
        dev: usize,
        now: SimTime,
        success: bool,
        cause: Option<FailureCause>,
        latency_ms: Option<f64>,
    ) {
        let d = &self.devs[dev];
        self.records.push(AccessRecord {
            device: dev,
            message: d.messages_started,
            attempt: d.attempt,
            time: now,
            success,
            cause,
            latency_ms,
            ta_command: d.ta_command,
            msg1_msg2_gap_ms: d.gap12.map(|g| g.as_ms()),
            msg2_msg3_gap_ms: d.gap23.map(|g| g.as_ms()),
        });
    }

    fn fail(&mut self, dev: usize, cause: FailureCause, now: SimTime) -> Result<(), SimError> {
        self.metrics.record_failure(cause.label());
        self.push_record(dev, now, false, Some(cause), None);
        self.timeline(dev, now, Node::Device, "failure", "", cause.label().to_string());
        let d = &mut self.devs[dev];
        d.phase = Phase::Idle;
        d.timer_token += 1;
        d.ctx.active_timers.clear();
        // A new attempt starts from open-loop timing.
        d.ctx.ta_command_us = 0.0;
        if d.attempt < self.sc.access.max_attempts {
            d.attempt += 1;
            let at = now + SimTime::from_ms(self.sc.access.backoff_ms);
            self.schedule(at, SimEventKind::Measurement, Payload::Access { dev })
        } else {
            d.attempt = 0;
            self.metrics.messages_dropped += 1;
            self.next_message(dev, now)
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn on_timer(
        &mut self,
        dev: usize,
        owner: Node,
        timer: TimerKind,
        token: u64,
        now: SimTime,
        seq: u64,
        kind: SimEventKind,
    ) -> Result<(), SimError> {
        if owner == Node::Bs {
            if timer != TimerKind::TReordering || token != self.bs[dev].reorder_token {
                return Ok(());
            }
            self.record_trace(now, seq, kind, Self::entity(owner, dev), format!("timer={} expired", timer.label()));
            self.bs[dev].reorder_running = false;
            let rx = &self.bs[dev].rx;
            if let Some(&hi) = rx.iter().next_back() {
                let nacked: Vec<u32> = (0..hi).filter(|x| !rx.contains(x)).collect();
                if !nacked.is_empty() {
                    let st = Packet::RlcStatus { acked: rx.iter().copied().collect(), nacked, polled: false };
                    return self.schedule(now, SimEventKind::TxStart, Payload::Tx { dev, from: Node::Bs, packet: st });
                }
            }
            return Ok(());
        }
        if timer == TimerKind::HarqRtt {
            self.record_trace(now, seq, kind, Self::entity(owner, dev), format!("timer={} expired", timer.label()));
            return Ok(());
        }
        if token != self.devs[dev].timer_token {
            return Ok(());
        }
        self.record_trace(now, seq, kind, Self::entity(owner, dev), format!("timer={} expired", timer.label()));
        self.timeline(dev, now, Node::Device, "timer_expiry", timer.label(), String::new());
        match timer {
            TimerKind::RarWindow if self.devs[dev].phase == Phase::AwaitRar => {
                let (ws, we) = self.devs[dev].rar_window;
                if now < ws {
                    self.metrics.timer_violations += 1;
                }
                self.metrics.rar_monitoring_us += (we - ws).as_us();
                self.fail(dev, FailureCause::RarTimeout, now)
            }
            TimerKind::ContentionResolution if self.devs[dev].phase == Phase::AwaitMsg4 => {
                let (cs, ce) = self.devs[dev].cr_window;
                if now < cs {
                    self.metrics.timer_violations += 1;
                }
                self.metrics.cr_monitoring_us += (ce - cs).as_us();
                self.fail(dev, FailureCause::CrTimeout, now)
            }
            _ => Ok(()),
        }
    }

    fn on_ta_refresh(&mut self, dev: usize, now: SimTime, seq: u64, kind: SimEventKind) -> Result<(), SimError> {
        let interval = self.sc.protocol.autonomous_ta_interval_ms;
        let upd = autonomous_ta_update(&self.devs[dev].ctx, &self.eph, self.abs_s(now), interval)?;
        self.devs[dev].ctx.timing_advance_us = upd.timing_advance_us;
        self.metrics.max_ta_alignment_bound_us = self.metrics.max_ta_alignment_bound_us.max(upd.max_alignment_error_us);
        self.record_trace(
            now,
            seq,
            kind,
            Self::entity(Node::Device, dev),
            format!("ta_refresh ta_us={:.3}", upd.timing_advance_us),
        );
        let token = self.devs[dev].ta_token;
        self.schedule(now + SimTime::from_ms(interval), SimEventKind::Measurement, Payload::TaRefresh { dev, token })
    }

    fn finish_message(&mut self, dev: usize, now: SimTime) -> Result<(), SimError> {
        let d = &mut self.devs[dev];
        if d.ctx.rrc_state == RrcState::Connected {
            d.ctx.release()?;
            self.timeline(dev, now, Node::Device, "state", "", "rrc_idle".into());
        }
        let d = &mut self.devs[dev];
        d.ta_token += 1;
        d.phase = Phase::Idle;
        d.attempt = 0;
        self.bs[dev] = BsDev::default();
        self.next_message(dev, now)
    }

    fn next_message(&mut self, dev: usize, now: SimTime) -> Result<(), SimError> {
        let d = &mut self.devs[dev];
        if d.messages_started >= self.sc.traffic.messages_per_device {
            d.phase = Phase::Done;
            return Ok(());
        }
        d.phase = Phase::Idle;
        let ready = (d.message_ready_at + SimTime::from_ms(self.sc.traffic.inter_arrival_ms)).max(now);
        d.message_ready_at = ready;
        self.schedule(ready, SimEventKind::Measurement, Payload::Access { dev })
    }

    // ----- data transfer -------------------------------------------------

    fn start_transfer(&mut self, dev: usize, t0: SimTime) -> Result<(), SimError> {
        let tbs = self.sc.data.tbs_bits as u64;
        let blocks = self.sc.traffic.message_bits.div_ceil(tbs) as u32;
        let n = self.sc.harq.n_processes as usize;
        self.devs[dev].transfer = Some(Transfer {
            start: t0,
            blocks,
            next_block: 0,
            done_blocks: 0,
            tx_free: t0,
            procs: vec![None; n],
            harq_monitor_from: vec![t0; n],
            rlc_acked: BTreeSet::new(),
            rlc_retx: BTreeSet::new(),
        });
        if self.sc.harq.enabled {
            for p in 0..n {
                let tr = self.devs[dev].transfer.as_mut().expect("transfer");
                if tr.next_block < tr.blocks {
                    let b = tr.next_block;
                    tr.next_block += 1;
                    self.send_block(dev, p, b, t0)?;
                }
            }
            Ok(())
        } else {
            self.send_burst(dev, t0)
        }
    }

    fn send_block(&mut self, dev: usize, process: usize, block: u32, earliest: SimTime) -> Result<(), SimError> {
        let tti = SimTime::from_ms(self.sc.data.tti_ms);
        let tr = self.devs[dev].transfer.as_mut().expect("transfer");
        let s = earliest.max(tr.tx_free);
        tr.tx_free = s + tti;
        tr.procs[process] = Some(block);
        let outstanding = tr.procs.iter().filter(|p| p.is_some()).count() as u32;
        self.metrics.max_outstanding_harq = self.metrics.max_outstanding_harq.max(outstanding);
        self.schedule(
            s,
            SimEventKind::TxStart,
            Payload::Tx { dev, from: Node::Device, packet: Packet::HarqBlock { process, block } },
        )
    }

    fn on_harq_feedback(&mut self, dev: usize, process: usize, ack: bool, now: SimTime) -> Result<(), SimError> {
        let Some(tr) = self.devs[dev].transfer.as_mut() else {
            return Ok(());
        };
        let Some(block) = tr.procs[process].take() else {
            return Ok(());
        };
        self.metrics.harq_monitoring_us += (now - tr.harq_monitor_from[process]).as_us().max(0);
        if !ack {
            return self.send_block(dev, process, block, now);
        }
        tr.done_blocks += 1;
        if tr.done_blocks == tr.blocks {
            return self.complete_transfer(dev, now);
        }
        if tr.next_block < tr.blocks {
            let b = tr.next_block;
            tr.next_block += 1;
            return self.send_block(dev, process, b, now);
        }
        Ok(())
    }

    fn send_burst(&mut self, dev: usize, t: SimTime) -> Result<(), SimError> {
        let tti = SimTime::from_ms(self.sc.data.tti_ms);
        let window = self.sc.data.rlc_window as usize;
        let tr = self.devs[dev].transfer.as_mut().expect("transfer");
        let mut sns: Vec<u32> = std::mem::take(&mut tr.rlc_retx).into_iter().collect();
        if sns.len() > window {
            tr.rlc_retx = sns.split_off(window).into_iter().collect();
        }
        while sns.len() < window && tr.next_block < tr.blocks {
            sns.push(tr.next_block);
            tr.next_block += 1;
        }
        let mut plan = Vec::with_capacity(sns.len());
        for (i, sn) in sns.iter().enumerate() {
            let s = t.max(tr.tx_free);
            tr.tx_free = s + tti;
            plan.push((s, Packet::RlcPdu { sn: *sn, poll: i + 1 == sns.len() }));
        }
        for (s, packet) in plan {
            self.schedule(s, SimEventKind::TxStart, Payload::Tx { dev, from: Node::Device, packet })?;
        }
        Ok(())
    }

    fn on_rlc_status(
        &mut self,
        dev: usize,
        success: bool,
        acked: Vec<u32>,
        nacked: Vec<u32>,
        polled: bool,
        now: SimTime,
    ) -> Result<(), SimError> {
        let Some(tr) = self.devs[dev].transfer.as_mut() else {
            return Ok(());
        };
        if success {
            for sn in acked {
                tr.rlc_acked.insert(sn);
                tr.rlc_retx.remove(&sn);
            }
            if polled {
                tr.rlc_retx.extend(nacked.into_iter().filter(|sn| !tr.rlc_acked.contains(sn)));
            }
        } else if polled {
            // Lost status: recover as after a poll retransmission.
            let pending: Vec<u32> = (0..tr.next_block).filter(|sn| !tr.rlc_acked.contains(sn)).collect();
            tr.rlc_retx.extend(pending);
        }
        if tr.rlc_acked.len() as u32 == tr.blocks {
            return self.complete_transfer(dev, now);
        }
        if polled {
            self.send_burst(dev, now)
        } else {
            Ok(())
        }
    }

    fn complete_transfer(&mut self, dev: usize, now: SimTime) -> Result<(), SimError> {
        if let Some(tr) = self.devs[dev].transfer.take() {
            self.metrics.delivered_bits += self.sc.traffic.message_bits;
            self.metrics.messages_delivered += 1;
            self.metrics.transfer_time_us += (now - tr.start).as_us();
            self.timeline(
                dev,
                now,
                Node::Device,
                "transfer_complete",
                "",
                format!("bits={} duration_ms={}", self.sc.traffic.message_bits, now - tr.start),
            );
        }
        self.finish_message(dev, now)
    }
}

fn m_time(m: &RaMessage) -> SimTime {
    SimTime::from_ms(m.tx_time_ms)
}

fn precomp_of(m: &RaMessage) -> f64 {
    match m.payload {
        RaPayload::Preamble { precompensation_us } => precompensation_us,
        _ => 0.0,
    }
}
