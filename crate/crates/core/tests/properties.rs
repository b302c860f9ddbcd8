//! Property-based checks of the geometry, protocol, mobility and engine invariants.

use std::path::PathBuf;

use proptest::prelude::*;

use ntnsim::config::ScenarioConfig;
use ntnsim::constants::MU_EARTH_KM3_S2;
use ntnsim::geo::GroundPosition;
use ntnsim::geometry::{geometry_sample, slant_range};
use ntnsim::mobility::{cell_suitability, rank_cells, CellCandidate};
use ntnsim::orbit::OrbitSpec;
use ntnsim::protocol::{
    apply_timer_rules, build_ta_command, preamble_residual_us, precompensate_preamble, Ephemeris, SystemInformation,
    TaConfig, TimerConfig, TimerEvent,
};
use ntnsim::sim::{run_scenario, EventQueue, SimEventKind, SimTime};

fn load(name: &str) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ScenarioConfig::load(&p).unwrap()
}

fn candidate(cell_id: u32, center: GroundPosition, rtt: f64, max_rtt: f64) -> CellCandidate {
    CellCandidate {
        cell_id,
        si: SystemInformation {
            ephemeris: Ephemeris::new(vec![OrbitSpec::geostationary(0.0)]),
            max_rtt_ms: max_rtt,
            cell_center: center,
            carrier_frequency_hz: 2e9,
            ul_bandwidths_hz: vec![15e3],
            measurement_frequencies: 3,
            gateway: None,
        },
        estimated_rtt_ms: rtt,
        center_distance_km: 0.0,
    }
}

proptest! {
    #[test]
    fn ta_quantizer_error_within_half_step(frac in -1.0f64..=1.0, step in 0.1f64..2.0, steps in 1u32..100) {
        let ta = TaConfig { step_us: step, bipolar_range_us: step * steps as f64 };
        let r = frac * ta.max_residual_us();
        let c = build_ta_command(r, &ta).unwrap();
        prop_assert!(c.steps.abs() <= ta.max_steps());
        prop_assert!((r - c.correction_us()).abs() <= step / 2.0 + 1e-9);
    }

    #[test]
    fn ta_quantizer_rejects_out_of_range(excess in 1e-6f64..100.0, negative in any::<bool>()) {
        let ta = TaConfig::default();
        let r = (ta.max_residual_us() + excess) * if negative { -1.0 } else { 1.0 };
        prop_assert!(build_ta_command(r, &ta).is_err());
    }

    #[test]
    fn exact_precompensation_leaves_no_residual(d in 0.0f64..300.0) {
        let pre = precompensate_preamble(d).unwrap();
        prop_assert_eq!(pre, 2.0 * d);
        prop_assert_eq!(preamble_residual_us(d, pre / 2.0), 0.0);
    }

    #[test]
    fn residual_is_twice_the_one_way_error(d in 0.0f64..300.0, err in -1.0f64..1.0) {
        let r = preamble_residual_us(d + err, d);
        prop_assert!((r - 2e3 * err).abs() < 1e-6);
    }

    #[test]
    fn timer_offset_shifts_start_only(offset in 0.0f64..600.0, cr in 1.0f64..10_000.0) {
        let cfg = TimerConfig { contention_resolution_ms: cr, ntn_start_offset_ms: offset, ..TimerConfig::default() };
        let legacy = apply_timer_rules(&cfg, 0.0, TimerEvent::Msg3Sent).unwrap();
        let ntn = apply_timer_rules(&cfg, offset, TimerEvent::Msg3Sent).unwrap();
        prop_assert_eq!(ntn.start_offset_ms - legacy.start_offset_ms, offset);
        prop_assert_eq!(ntn.duration_ms, legacy.duration_ms);
    }

    #[test]
    fn suitability_is_monotone_in_rtt(max in 1.0f64..600.0, a in 0.0f64..700.0, b in 0.0f64..700.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let c = GroundPosition::new(0.0, 0.0, 0.0);
        if cell_suitability(&candidate(1, c, hi, max)) {
            prop_assert!(cell_suitability(&candidate(1, c, lo, max)));
        }
        prop_assert_eq!(cell_suitability(&candidate(1, c, max, max)), true);
    }

    #[test]
    fn ranking_ignores_input_order_and_breaks_ties_by_id(
        lat in -60.0f64..60.0,
        lon in -180.0f64..180.0,
        offsets in proptest::collection::vec((0.0f64..360.0, 0.0f64..2000.0), 1..8),
        rotate in 0usize..8,
    ) {
        let dev = GroundPosition::new(lat, lon, 0.0);
        let mut cands: Vec<CellCandidate> = offsets
            .iter()
            .enumerate()
            .map(|(i, (brg, d))| candidate(i as u32 + 1, dev.destination(*brg, *d), 0.0, 1.0))
            .collect();
        // Duplicate the first center under a higher id to force a tie.
        let twin = candidate(100, cands[0].si.cell_center, 0.0, 1.0);
        cands.push(twin);
        let a = rank_cells(&dev, &cands).unwrap();
        let k = rotate % cands.len();
        cands.rotate_left(k);
        let b = rank_cells(&dev, &cands).unwrap();
        let ids_a: Vec<u32> = a.iter().map(|c| c.cell_id).collect();
        let ids_b: Vec<u32> = b.iter().map(|c| c.cell_id).collect();
        prop_assert_eq!(&ids_a, &ids_b);
        for w in a.windows(2) {
            prop_assert!(w[0].center_distance_km <= w[1].center_distance_km);
        }
        let p1 = ids_a.iter().position(|&i| i == 1).unwrap();
        let p100 = ids_a.iter().position(|&i| i == 100).unwrap();
        prop_assert!(p1 < p100);
    }

    #[test]
    fn queue_pops_in_time_then_insertion_order(times in proptest::collection::vec(0i64..1000, 1..200)) {
        let mut q = EventQueue::new();
        for (i, t) in times.iter().enumerate() {
            q.schedule(SimTime::from_us(*t), SimEventKind::TimerFire, i).unwrap();
        }
        let mut last: Option<(SimTime, u64)> = None;
        let mut n = 0;
        while let Some(e) = q.pop() {
            if let Some((t, s)) = last {
                prop_assert!(e.time > t || (e.time == t && e.seq > s));
            }
            prop_assert_eq!(SimTime::from_us(times[e.payload]), e.time);
            last = Some((e.time, e.seq));
            n += 1;
        }
        prop_assert_eq!(n, times.len());
        prop_assert!(q.schedule(SimTime::from_us(-1), SimEventKind::TimerFire, 0).is_err() || times.iter().all(|&t| t < 0));
    }

    #[test]
    fn leo_orbit_conserves_energy(alt in 300.0f64..2000.0, inc in 0.0f64..180.0, t in 0.0f64..20_000.0) {
        let o = OrbitSpec::leo(alt, inc, 0.0, 0.0);
        let (r, v) = o.inertial_state(t);
        let (r0, v0) = o.inertial_state(0.0);
        let energy = |r: ntnsim::geo::Vec3, v: ntnsim::geo::Vec3| v.dot(v) / 2.0 - MU_EARTH_KM3_S2 / r.norm();
        prop_assert!((energy(r, v) - energy(r0, v0)).abs() < 1e-9);
        prop_assert!((r.norm() - o.radius_km()).abs() < 1e-6);
    }

    #[test]
    fn slant_range_decreases_with_elevation(alt in 300.0f64..40_000.0, e1 in 0.1f64..90.0, e2 in 0.1f64..90.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        prop_assert!(slant_range(hi, alt).unwrap() <= slant_range(lo, alt).unwrap() + 1e-9);
        prop_assert!((slant_range(90.0, alt).unwrap() - alt).abs() < 1e-6);
    }

    #[test]
    fn doppler_and_delay_drift_agree(
        alt in 400.0f64..2000.0,
        inc in 0.0f64..180.0,
        t in 0.0f64..6000.0,
        lat in -70.0f64..70.0,
        lon in -180.0f64..180.0,
    ) {
        let o = OrbitSpec::leo(alt, inc, 0.0, 0.0);
        let g = GroundPosition::new(lat, lon, 0.0);
        let s = geometry_sample(&o.state_at(t), &g, 2e9).unwrap();
        prop_assert!((s.doppler_ppm() + s.delay_drift_us_per_s).abs() < 1e-9);
        prop_assert!((s.doppler_hz - s.doppler_ppm() * 2e3).abs() < 1e-6);
        // Drift is the time derivative of the one-way delay.
        let h = 0.01;
        let d = |t: f64| geometry_sample(&o.state_at(t), &g, 2e9).unwrap().one_way_delay_ms * 1e3;
        let fd = (d(t + h) - d(t - h)) / (2.0 * h);
        prop_assert!((fd - s.delay_drift_us_per_s).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn harq_outstanding_never_exceeds_processes(seed in any::<u64>(), n in 1u8..=2, errors in any::<bool>()) {
        let mut cfg = load("leo600.json");
        cfg.harq.n_processes = n;
        cfg.reception.block_errors = errors;
        let sc = cfg.resolve(seed).unwrap();
        let out = run_scenario(&sc, seed).unwrap();
        prop_assert!(out.report.max_outstanding_harq <= n as u32);
    }

    #[test]
    fn simulation_is_deterministic(seed in any::<u64>()) {
        let cfg = load("leo600.json");
        let sc = cfg.resolve(seed).unwrap();
        let a = run_scenario(&sc, seed).unwrap();
        let b = run_scenario(&sc, seed).unwrap();
        prop_assert_eq!(a.report.to_json(), b.report.to_json());
        prop_assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn start_offset_cuts_cr_monitoring_per_msg3(seed in any::<u64>(), offset in 1u32..=8) {
        let mut legacy = load("leo600.json");
        legacy.timers.ntn_start_offset_ms = 0.0;
        legacy.faults.clear();
        let mut ntn = legacy.clone();
        ntn.timers.ntn_start_offset_ms = offset as f64;
        let a = run_scenario(&legacy.resolve(seed).unwrap(), seed).unwrap();
        let b = run_scenario(&ntn.resolve(seed).unwrap(), seed).unwrap();
        prop_assert_eq!(a.metrics.access_successes, b.metrics.access_successes);
        let msg3 = b.metrics.access_successes as i64;
        prop_assert_eq!(
            a.metrics.cr_monitoring_us - b.metrics.cr_monitoring_us,
            msg3 * offset as i64 * 1000
        );
    }
}
