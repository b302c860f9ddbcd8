//! Config-to-report pipeline: load bundled scenarios, resolve, simulate and
//! serialize, checking the cross-module consistency of the results.

use std::path::PathBuf;

use ntnsim::config::ScenarioConfig;
use ntnsim::report::{geometry_summary, linkbudget_table, rank_cells_report};
use ntnsim::sim::{aggregate_report, run_many, run_scenario, write_event_trace, write_timeline, MetricsReport};

fn load(name: &str) -> ScenarioConfig {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name);
    ScenarioConfig::load(&p).unwrap()
}

#[test]
fn bundled_configs_all_load() {
    for entry in std::fs::read_dir(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "json") {
            ScenarioConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
        }
    }
}

#[test]
fn geo_access_completes_and_report_round_trips() {
    let cfg = load("geo_access.json");
    let seed = cfg.seed.unwrap();
    let sc = cfg.resolve(seed).unwrap();
    let out = run_scenario(&sc, seed).unwrap();
    let r = &out.report;
    assert_eq!(r.devices as usize, sc.devices.len());
    assert_eq!(r.access_successes, r.devices);
    assert_eq!(r.messages_delivered, r.messages_offered);
    // Access takes at least two GEO round trips (Msg1/Msg2 and Msg3/Msg4).
    assert!(r.access_latency_ms.min > 2.0 * 477.0);
    assert!(r.timer_violations == 0);
    let back: MetricsReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(&back, r);

    let mut trace = Vec::new();
    write_event_trace(&out.trace, &mut trace).unwrap();
    let trace = String::from_utf8(trace).unwrap();
    assert_eq!(trace.lines().count(), out.trace.len() + 1);
    let mut tl = Vec::new();
    write_timeline(&out.timelines[0], &mut tl).unwrap();
    assert!(String::from_utf8(tl).unwrap().lines().count() > 4);
}

#[test]
fn leo_access_is_faster_than_geo() {
    let run = |name: &str| {
        let cfg = load(name);
        let seed = cfg.seed.unwrap();
        run_scenario(&cfg.resolve(seed).unwrap(), seed).unwrap().report
    };
    let geo = run("geo_access.json");
    let leo = run("leo600.json");
    assert!(leo.access_latency_ms.mean < geo.access_latency_ms.mean / 10.0);
    assert!(leo.max_ta_alignment_bound_us > geo.max_ta_alignment_bound_us);
}

#[test]
fn parallel_runs_match_sequential_runs() {
    let cfg = load("leo600.json");
    let sc = cfg.resolve(11).unwrap();
    let seeds = [11, 12, 13, 14];
    let par = run_many(&sc, &seeds, 4).unwrap();
    for (o, &s) in par.iter().zip(&seeds) {
        assert_eq!(o.report, run_scenario(&sc, s).unwrap().report);
    }
    let agg = aggregate_report(&sc, &par);
    assert_eq!(agg.seeds, seeds.to_vec());
    assert_eq!(agg.access_attempts, par.iter().map(|o| o.report.access_attempts).sum::<u64>());
}

#[test]
fn reports_agree_with_scenario_geometry() {
    let cfg = load("geo_access.json");
    let rows = geometry_summary(&cfg).unwrap();
    let max_rtt = cfg.effective_max_rtt_ms();
    assert!(rows[0].rtt_max_ms <= max_rtt + 1e-6);
    let budget = linkbudget_table(&cfg).unwrap();
    assert_eq!(budget.len(), 2);
    let ranks = rank_cells_report(&cfg, cfg.seed.unwrap()).unwrap();
    // Each device ranks every configured beam exactly once.
    let n_dev = ranks.rows.iter().map(|r| r.device).max().unwrap() + 1;
    assert_eq!(ranks.rows.len(), n_dev * cfg.beams.len());
    assert!(ranks.rows.iter().filter(|r| r.rank == 1).all(|r| r.suitable));
}
