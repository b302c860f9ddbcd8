//! `ntnsim` command-line interface.
//!
//! Exit codes: 0 success, 2 configuration validation failure, 3 runtime failure.
//! Log verbosity is read from the `NTNSIM_LOG` environment variable.

mod table;

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use thiserror::Error;

use ntnsim::config::{DopplerTraceMode, ScenarioConfig};
use ntnsim::error::{ConfigError, ReportError, SimError};
use ntnsim::report::{
    doppler_trace, geometry_notes, geometry_summary, linear_fit, linkbudget_table, rank_cells_report,
};
use ntnsim::sim::{aggregate_report, run_many, write_event_trace, write_timeline, MetricsReport, SimOutput};

use table::{fixed, Table};

const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "ntnsim", version, about = "NB-IoT over bent-pipe GEO/LEO satellite simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceMode {
    InclinedGeo,
    BeamProfile,
}

#[derive(Debug, Args)]
struct Common {
    /// Scenario configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Worker threads for multi-seed runs.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best/worst SNR per orbit class and direction.
    Linkbudget(Common),
    /// RTT, Doppler, delay drift, visibility and differential delay per satellite.
    Geometry(Common),
    /// Doppler time series or in-beam Doppler profile as CSV.
    DopplerTrace {
        #[command(flatten)]
        common: Common,
        /// Trace mode; defaults to the configured mode.
        #[arg(long, value_enum)]
        mode: Option<TraceMode>,
    },
    /// Run the discrete-event simulation and write the metrics report.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of independent runs with consecutive seeds.
        #[arg(long, default_value_t = 1)]
        runs: u64,
    },
    /// Distance ranking and suitability of configured cells per device.
    RankCells(Common),
}

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Validation(_) | ReportError::Unsupported(_) => CliError::Invalid(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("cannot write {}: {e}", path.display()))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("NTNSIM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Linkbudget(c) => cmd_linkbudget(&c),
        Command::Geometry(c) => cmd_geometry(&c),
        Command::DopplerTrace { common, mode } => cmd_doppler_trace(&common, mode),
        Command::Simulate { common, runs } => cmd_simulate(&common, runs),
        Command::RankCells(c) => cmd_rank_cells(&c),
    }
}

fn load(c: &Common) -> Result<ScenarioConfig, CliError> {
    let cfg = ScenarioConfig::load(&c.config)?;
    info!("loaded scenario '{}' from {}", cfg.name, c.config.display());
    Ok(cfg)
}

fn seed_of(c: &Common, cfg: &ScenarioConfig) -> u64 {
    c.seed.or(cfg.seed).unwrap_or(0)
}

fn out_dir(c: &Common) -> Result<Option<PathBuf>, CliError> {
    match &c.out {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| io_err(d, e))?;
            Ok(Some(d.clone()))
        }
        None => Ok(None),
    }
}

/// Prints the table in the requested format and saves it as CSV under `--out`.
fn emit(c: &Common, t: &Table, file: &str) -> Result<(), CliError> {
    match c.format {
        Format::Csv => print!("{}", t.to_csv()),
        Format::Text => print!("{}", t.to_text()),
    }
    if let Some(dir) = out_dir(c)? {
        let path = dir.join(file);
        fs::write(&path, t.to_csv()).map_err(|e| io_err(&path, e))?;
        info!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_linkbudget(c: &Common) -> Result<(), CliError> {
    let cfg = load(c)?;
    let rows = linkbudget_table(&cfg)?;
    let mut t = Table::new(&[
        "orbit",
        "direction",
        "altitude_km",
        "bandwidth_hz",
        "fspl_min_db",
        "fspl_max_db",
        "snr_worst_db",
        "snr_best_db",
        "threshold_db",
        "worst_case_covered",
    ]);
    for r in &rows {
        t.push(vec![
            r.orbit.clone(),
            r.direction.label().to_string(),
            fixed(r.altitude_km, 1),
            fixed(r.bandwidth_hz, 0),
            fixed(r.fspl_min_db, 2),
            fixed(r.fspl_max_db, 2),
            fixed(r.snr_worst_db, 2),
            fixed(r.snr_best_db, 2),
            fixed(r.threshold_db, 2),
            r.worst_case_covered.to_string(),
        ]);
    }
    emit(c, &t, "linkbudget.csv")
}

fn cmd_geometry(c: &Common) -> Result<(), CliError> {
    let cfg = load(c)?;
    let rows = geometry_summary(&cfg)?;
    let mut t = Table::new(&[
        "satellite",
        "orbit",
        "altitude_km",
        "inclination_deg",
        "speed_km_s",
        "period_min",
        "rtt_min_ms",
        "rtt_max_ms",
        "max_doppler_ppm",
        "max_doppler_hz",
        "max_delay_drift_us_per_s",
        "visibility_s",
        "beam_diameter_km",
        "differential_delay_ms",
    ]);
    for r in &rows {
        t.push(vec![
            r.satellite.to_string(),
            r.orbit.clone(),
            fixed(r.altitude_km, 1),
            fixed(r.inclination_deg, 2),
            fixed(r.inertial_speed_km_s, 3),
            fixed(r.period_min, 2),
            fixed(r.rtt_min_ms, 2),
            fixed(r.rtt_max_ms, 2),
            fixed(r.max_doppler_ppm, 3),
            fixed(r.max_doppler_hz, 1),
            fixed(r.max_delay_drift_us_per_s, 3),
            r.visibility_s.map_or_else(|| "continuous".to_string(), |v| fixed(v, 1)),
            fixed(r.beam_diameter_km, 1),
            fixed(r.differential_delay_ms, 3),
        ]);
    }
    emit(c, &t, "geometry.csv")?;
    for n in geometry_notes(&rows) {
        match c.format {
            Format::Text => println!("note: {n}"),
            Format::Csv => eprintln!("note: {n}"),
        }
    }
    Ok(())
}

fn cmd_doppler_trace(c: &Common, mode: Option<TraceMode>) -> Result<(), CliError> {
    let cfg = load(c)?;
    let mode = mode.map(|m| match m {
        TraceMode::InclinedGeo => DopplerTraceMode::InclinedGeo,
        TraceMode::BeamProfile => DopplerTraceMode::BeamProfile,
    });
    let trace = doppler_trace(&cfg, mode)?;
    let mut t = Table::new(&[trace.x_label.as_str(), "doppler_hz"]);
    for &(x, d) in &trace.points {
        t.push(vec![fixed(x, 3), fixed(d, 3)]);
    }
    let file = match trace.mode {
        DopplerTraceMode::InclinedGeo => "doppler_inclined_geo.csv",
        DopplerTraceMode::BeamProfile => "doppler_beam_profile.csv",
    };
    match c.format {
        Format::Csv => emit(c, &t, file),
        Format::Text => {
            // The full series goes to the CSV file; the terminal gets a summary.
            let peak = trace.points.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
            println!("mode        {:?}", trace.mode);
            println!("points      {}", trace.points.len());
            println!("peak_abs_hz {}", fixed(peak, 3));
            if trace.mode == DopplerTraceMode::BeamProfile {
                let (slope, _, r2) = linear_fit(&trace.points);
                let span = trace.points.last().map_or(0.0, |l| l.1) - trace.points.first().map_or(0.0, |f| f.1);
                println!("span_hz     {}", fixed(span, 3));
                println!("slope_hz_km {}", fixed(slope, 6));
                println!("r_squared   {}", fixed(r2, 6));
            }
            if let Some(dir) = out_dir(c)? {
                let path = dir.join(file);
                fs::write(&path, t.to_csv()).map_err(|e| io_err(&path, e))?;
            }
            Ok(())
        }
    }
}

/// `name.ext` → `name-seed<N>.ext` for per-run files of multi-seed sweeps.
fn per_seed(file: &str, seed: u64, runs: u64) -> String {
    if runs <= 1 {
        return file.to_string();
    }
    match file.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}-seed{seed}.{ext}"),
        None => format!("{file}-seed{seed}"),
    }
}

fn write_run_files(cfg: &ScenarioConfig, dir: &Path, out: &SimOutput, runs: u64) -> Result<(), CliError> {
    let seed = out.report.seeds[0];
    if let Some(f) = &cfg.output.trace_file {
        let path = dir.join(per_seed(f, seed, runs));
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        write_event_trace(&out.trace, BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
    }
    if let Some(f) = &cfg.output.timeline_file {
        let path = dir.join(per_seed(f, seed, runs));
        let mut all: Vec<_> = out.timelines.iter().flatten().cloned().collect();
        all.sort_by_key(|e| e.time);
        let file = File::create(&path).map_err(|e| io_err(&path, e))?;
        write_timeline(&all, BufWriter::new(file)).map_err(|e| io_err(&path, e))?;
    }
    Ok(())
}

fn summary_table(r: &MetricsReport) -> Table {
    let mut t = Table::new(&["metric", "value"]);
    let mut row = |k: &str, v: String| t.push(vec![k.to_string(), v]);
    row("scenario", r.scenario.clone());
    row("seeds", r.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" "));
    row("devices", r.devices.to_string());
    row("access_attempts", r.access_attempts.to_string());
    row("access_successes", r.access_successes.to_string());
    for (k, v) in &r.access_failures {
        row(&format!("access_failures.{k}"), v.to_string());
    }
    row("access_latency_ms.min", fixed(r.access_latency_ms.min, 3));
    row("access_latency_ms.mean", fixed(r.access_latency_ms.mean, 3));
    row("access_latency_ms.p90", fixed(r.access_latency_ms.p90, 3));
    row("access_latency_ms.max", fixed(r.access_latency_ms.max, 3));
    row("msg1_msg2_gap_ms.mean", fixed(r.msg1_msg2_gap_ms.mean, 3));
    row("messages_offered", r.messages_offered.to_string());
    row("messages_delivered", r.messages_delivered.to_string());
    row("messages_dropped", r.messages_dropped.to_string());
    row("delivered_bits", r.delivered_bits.to_string());
    row("goodput_bps", fixed(r.goodput_bps, 1));
    row("harq_enabled", r.harq_enabled.to_string());
    row("max_outstanding_harq", r.max_outstanding_harq.to_string());
    row("monitoring_time_ms", fixed(r.monitoring_time_ms, 3));
    row("max_preamble_misalignment_us", fixed(r.max_preamble_misalignment_us, 3));
    row("max_ul_misalignment_us", fixed(r.max_ul_misalignment_us, 3));
    row("timer_violations", r.timer_violations.to_string());
    row("events_processed", r.events_processed.to_string());
    row("sim_end_ms", fixed(r.sim_end_ms, 3));
    t
}

fn cmd_simulate(c: &Common, runs: u64) -> Result<(), CliError> {
    let cfg = load(c)?;
    let base = seed_of(c, &cfg);
    let sc = cfg.resolve(base).map_err(|e| CliError::Invalid(e.to_string()))?;
    let seeds: Vec<u64> = (0..runs.max(1)).map(|i| base.wrapping_add(i)).collect();
    let dir = c.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    info!("simulating '{}' with {} run(s) on {} job(s)", sc.name, seeds.len(), c.jobs);
    let outputs = run_many(&sc, &seeds, c.jobs).map_err(|e: SimError| {
        let trace = cfg.output.trace_file.as_deref().map(|f| dir.join(f).display().to_string());
        CliError::Runtime(format!(
            "simulation failed: {e} (trace location: {})",
            trace.unwrap_or_else(|| "none configured".into())
        ))
    })?;
    for o in &outputs {
        write_run_files(&cfg, &dir, o, runs)?;
    }
    let report = if outputs.len() == 1 { outputs[0].report.clone() } else { aggregate_report(&sc, &outputs) };
    let report_path = dir.join(cfg.output.report_file.as_deref().unwrap_or("report.json"));
    fs::write(&report_path, report.to_json()).map_err(|e| io_err(&report_path, e))?;
    info!("wrote {}", report_path.display());
    let t = summary_table(&report);
    match c.format {
        Format::Csv => print!("{}", t.to_csv()),
        Format::Text => print!("{}", t.to_text()),
    }
    Ok(())
}

fn cmd_rank_cells(c: &Common) -> Result<(), CliError> {
    let cfg = load(c)?;
    let rep = rank_cells_report(&cfg, seed_of(c, &cfg))?;
    let mut t = Table::new(&[
        "device",
        "rank",
        "cell_id",
        "center_distance_km",
        "estimated_rtt_ms",
        "max_rtt_ms",
        "suitable",
        "model_snr_db",
    ]);
    for r in &rep.rows {
        t.push(vec![
            r.device.to_string(),
            r.rank.to_string(),
            r.cell_id.to_string(),
            fixed(r.center_distance_km, 3),
            fixed(r.estimated_rtt_ms, 3),
            fixed(r.max_rtt_ms, 3),
            r.suitable.to_string(),
            fixed(r.model_snr_db, 3),
        ]);
    }
    emit(c, &t, "rank_cells.csv")?;
    if !rep.measurement_capable {
        eprintln!(
            "warning: devices measure {} frequencies but the reuse pattern needs {}",
            cfg.measurement_frequencies, cfg.reuse_denominator
        );
    }
    Ok(())
}
