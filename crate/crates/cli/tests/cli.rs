//! End-to-end tests of the `ntnsim` binary: exit codes, output files and
//! reproducibility.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn ntnsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ntnsim")).args(args).env("NTNSIM_LOG", "warn").output().unwrap()
}

fn run_ok(args: &[&str]) -> String {
    let out = ntnsim(args);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("scenario.json");
    fs::write(&p, body).unwrap();
    p
}

#[test]
fn linkbudget_prints_all_links() {
    let cfg = config("reference_budgets.json");
    let csv = run_ok(&["linkbudget", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("orbit,direction,"));
    assert_eq!(lines.count(), 4);
    let text = run_ok(&["linkbudget", "--config", cfg.to_str().unwrap()]);
    assert!(text.contains("GEO") && text.contains("LEO"));
}

#[test]
fn every_command_succeeds_and_writes_files() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let budgets = config("reference_budgets.json");
    let access = config("geo_access.json");
    run_ok(&["linkbudget", "--config", budgets.to_str().unwrap(), "--out", out]);
    run_ok(&["geometry", "--config", budgets.to_str().unwrap(), "--out", out]);
    run_ok(&["doppler-trace", "--config", config("inclined_geo_doppler.json").to_str().unwrap(), "--out", out]);
    let beam = run_ok(&["doppler-trace", "--config", config("leo_beam_doppler.json").to_str().unwrap(), "--out", out]);
    assert!(beam.contains("r_squared"));
    run_ok(&["rank-cells", "--config", access.to_str().unwrap(), "--out", out]);
    run_ok(&["simulate", "--config", access.to_str().unwrap(), "--out", out]);
    for f in [
        "linkbudget.csv",
        "geometry.csv",
        "doppler_inclined_geo.csv",
        "doppler_beam_profile.csv",
        "rank_cells.csv",
        "report.json",
        "trace.csv",
        "timeline.csv",
    ] {
        assert!(tmp.path().join(f).exists(), "missing {f}");
    }
    let trace = fs::read_to_string(tmp.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "time_ms,seq,entity,kind,detail");
    let timeline = fs::read_to_string(tmp.path().join("timeline.csv")).unwrap();
    assert_eq!(timeline.lines().next().unwrap(), "time_ms,entity,event,message_kind,detail");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert!(report["access_successes"].as_u64().unwrap() > 0);
}

#[test]
fn repeated_seed_gives_identical_files() {
    let cfg = config("leo600.json");
    let read = |dir: &Path| ["report.json", "trace.csv", "timeline.csv"].map(|f| fs::read(dir.join(f)).unwrap());
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "42", "--out", d.path().to_str().unwrap()]);
    }
    assert_eq!(read(a.path()), read(b.path()));
    let c = tempfile::tempdir().unwrap();
    run_ok(&["simulate", "--config", cfg.to_str().unwrap(), "--seed", "43", "--out", c.path().to_str().unwrap()]);
    assert_ne!(read(a.path())[1], read(c.path())[1]);
}

#[test]
fn multi_run_output_does_not_depend_on_jobs() {
    let cfg = config("leo600.json");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (d, jobs) in [(&a, "1"), (&b, "4")] {
        run_ok(&[
            "simulate",
            "--config",
            cfg.to_str().unwrap(),
            "--runs",
            "3",
            "--jobs",
            jobs,
            "--out",
            d.path().to_str().unwrap(),
        ]);
    }
    for f in ["report.json", "trace-seed11.csv", "trace-seed12.csv", "trace-seed13.csv"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(a.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["seeds"].as_array().unwrap().len(), 3);
}

#[test]
fn invalid_configs_exit_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let empty =
        write_config(tmp.path(), r#"{"name": "empty", "carrier_frequency_hz": 2e9, "constellation": [], "beams": []}"#);
    let out = ntnsim(&["simulate", "--config", empty.to_str().unwrap(), "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    let mut body = fs::read_to_string(config("leo600.json")).unwrap();
    body = body.replacen('{', r#"{"bogus_field_km": 1,"#, 1);
    let unknown = write_config(tmp.path(), &body);
    let out = ntnsim(&["geometry", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_field_km"));

    let out = ntnsim(&["linkbudget", "--config", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_with_code_3() {
    let tmp = tempfile::tempdir().unwrap();
    let blocker = tmp.path().join("not_a_dir");
    fs::write(&blocker, "x").unwrap();
    let cfg = config("leo600.json");
    let out = ntnsim(&["simulate", "--config", cfg.to_str().unwrap(), "--out", blocker.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}
