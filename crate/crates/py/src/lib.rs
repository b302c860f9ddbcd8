//! Python bindings: scalar link-budget, geometry and protocol helpers, plus
//! JSON-in/JSON-out access to the scenario reports and the simulator.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ntnsim::config::ScenarioConfig;
use ntnsim::error::{ConfigError, ReportError};
use ntnsim::geo::GroundPosition;
use ntnsim::geometry;
use ntnsim::link_budget::{self, LinkBudgetParams};
use ntnsim::orbit::OrbitSpec;
use ntnsim::protocol::{self, HarqConfig, TaConfig};
use ntnsim::report;
use ntnsim::sim::run_scenario;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config_err(e: ConfigError) -> PyErr {
    value_err(e)
}

fn report_err(e: ReportError) -> PyErr {
    match e {
        ReportError::Validation(_) | ReportError::Unsupported(_) => value_err(e),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

fn orbit(kind: &str, altitude_km: f64, inclination_deg: f64, raan_deg: f64, phase_deg: f64) -> PyResult<OrbitSpec> {
    let o = match kind {
        "geosynchronous" => {
            OrbitSpec { altitude_km, ..OrbitSpec::geosynchronous(inclination_deg, raan_deg, phase_deg) }
        }
        "leo_circular" => OrbitSpec::leo(altitude_km, inclination_deg, raan_deg, phase_deg),
        other => return Err(value_err(format!("unknown orbit kind '{other}'"))),
    };
    o.validate().map_err(value_err)?;
    Ok(o)
}

/// Free-space path loss in dB.
#[pyfunction]
fn fspl(distance_km: f64, frequency_ghz: f64) -> PyResult<f64> {
    link_budget::fspl(distance_km, frequency_ghz).map_err(value_err)
}

/// Link SNR in dB from the budget terms.
#[pyfunction]
#[pyo3(signature = (eirp_dbw, g_over_t_db_per_k, bandwidth_hz, fspl_db, shadow_fading_db=3.0, scintillation_loss_db=2.2, atmospheric_loss_db=0.2))]
fn snr(
    eirp_dbw: f64,
    g_over_t_db_per_k: f64,
    bandwidth_hz: f64,
    fspl_db: f64,
    shadow_fading_db: f64,
    scintillation_loss_db: f64,
    atmospheric_loss_db: f64,
) -> PyResult<f64> {
    let p = LinkBudgetParams {
        eirp_dbw,
        g_over_t_db_per_k,
        bandwidth_hz,
        fspl_db,
        shadow_fading_db,
        scintillation_loss_db,
        atmospheric_loss_db,
    };
    p.validate().map_err(value_err)?;
    Ok(link_budget::snr(&p))
}

/// SNR after moving the same power from `bw_old_hz` to `bw_new_hz`.
#[pyfunction]
fn bandwidth_rescale(snr_db: f64, bw_old_hz: f64, bw_new_hz: f64) -> f64 {
    link_budget::bandwidth_rescale(snr_db, bw_old_hz, bw_new_hz)
}

#[pyfunction]
fn slant_range(elevation_deg: f64, altitude_km: f64) -> PyResult<f64> {
    geometry::slant_range(elevation_deg, altitude_km).map_err(value_err)
}

/// Link geometry between a ground point and a satellite, as a JSON object.
#[pyfunction]
#[pyo3(signature = (kind, altitude_km, inclination_deg, t_s, latitude_deg, longitude_deg, carrier_hz=2e9, raan_deg=0.0, phase_deg=0.0))]
#[allow(clippy::too_many_arguments)]
fn geometry_sample(
    kind: &str,
    altitude_km: f64,
    inclination_deg: f64,
    t_s: f64,
    latitude_deg: f64,
    longitude_deg: f64,
    carrier_hz: f64,
    raan_deg: f64,
    phase_deg: f64,
) -> PyResult<String> {
    let o = orbit(kind, altitude_km, inclination_deg, raan_deg, phase_deg)?;
    let ground = GroundPosition::new(latitude_deg, longitude_deg, 0.0);
    let g = geometry::geometry_sample(&o.state_at(t_s), &ground, carrier_hz).map_err(value_err)?;
    to_json(&g)
}

/// Steps of the bipolar TA command for a measured residual.
#[pyfunction]
#[pyo3(signature = (residual_us, step_us=0.52, bipolar_range_us=32.0))]
fn ta_command_steps(residual_us: f64, step_us: f64, bipolar_range_us: f64) -> PyResult<i32> {
    let ta = TaConfig { step_us, bipolar_range_us };
    protocol::build_ta_command(residual_us, &ta).map(|c| c.steps).map_err(value_err)
}

/// Stop-and-wait HARQ goodput in bit/s.
#[pyfunction]
#[pyo3(signature = (rtt_ms, tbs_bits, n_processes=2, proc_delay_ms=8.0))]
fn harq_throughput(rtt_ms: f64, tbs_bits: f64, n_processes: u8, proc_delay_ms: f64) -> PyResult<f64> {
    let cfg = HarqConfig { n_processes, ..HarqConfig::default() };
    protocol::harq_throughput(rtt_ms, tbs_bits, &cfg, proc_delay_ms).map_err(value_err)
}

/// Windowed RLC ARQ goodput in bit/s.
#[pyfunction]
fn rlc_arq_throughput(rtt_ms: f64, window: u32, pdu_bits: f64, tti_ms: f64) -> PyResult<f64> {
    protocol::rlc_arq_throughput(rtt_ms, window, pdu_bits, tti_ms).map_err(value_err)
}

/// Link-budget rows of a scenario config, as a JSON array.
#[pyfunction]
fn linkbudget(config_json: &str) -> PyResult<String> {
    let cfg = ScenarioConfig::from_json(config_json).map_err(config_err)?;
    to_json(&report::linkbudget_table(&cfg).map_err(report_err)?)
}

/// Geometry summary rows of a scenario config, as a JSON array.
#[pyfunction]
fn geometry_summary(config_json: &str) -> PyResult<String> {
    let cfg = ScenarioConfig::from_json(config_json).map_err(config_err)?;
    to_json(&report::geometry_summary(&cfg).map_err(report_err)?)
}

/// Runs a scenario and returns the metrics report JSON.
#[pyfunction]
#[pyo3(signature = (config_json, seed=None))]
fn simulate(py: Python<'_>, config_json: &str, seed: Option<u64>) -> PyResult<String> {
    let cfg = ScenarioConfig::from_json(config_json).map_err(config_err)?;
    let seed = seed.or(cfg.seed).unwrap_or(0);
    let sc = cfg.resolve(seed).map_err(value_err)?;
    let out = py.detach(|| run_scenario(&sc, seed)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(out.report.to_json())
}

#[pymodule]
fn ntnsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(fspl, m)?)?;
    m.add_function(wrap_pyfunction!(snr, m)?)?;
    m.add_function(wrap_pyfunction!(bandwidth_rescale, m)?)?;
    m.add_function(wrap_pyfunction!(slant_range, m)?)?;
    m.add_function(wrap_pyfunction!(geometry_sample, m)?)?;
    m.add_function(wrap_pyfunction!(ta_command_steps, m)?)?;
    m.add_function(wrap_pyfunction!(harq_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(rlc_arq_throughput, m)?)?;
    m.add_function(wrap_pyfunction!(linkbudget, m)?)?;
    m.add_function(wrap_pyfunction!(geometry_summary, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_helpers_match_core() {
        assert!((fspl(35786.0, 2.0).unwrap() - 189.54).abs() < 0.01);
        assert!(fspl(-1.0, 2.0).is_err());
        assert!((bandwidth_rescale(0.0, 180e3, 15e3) - 10.792).abs() < 1e-3);
        assert_eq!(ta_command_steps(1.04, 0.52, 32.0).unwrap(), 2);
        assert!(orbit("elliptic", 500.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn geometry_json_has_fields() {
        let s = geometry_sample("geosynchronous", 35786.0, 0.0, 0.0, 0.0, 0.0, 2e9, 0.0, 0.0).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!((v["one_way_delay_ms"].as_f64().unwrap() - 119.37).abs() < 0.01);
    }
}
