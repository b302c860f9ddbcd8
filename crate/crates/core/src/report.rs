//! Derived tables and series behind the CLI commands: link budgets, system
//! geometry summary, Doppler traces and idle-mode cell ranking.

use serde::{Deserialize, Serialize};

use crate::config::{DopplerTraceMode, ScenarioConfig};
use crate::constants::{EARTH_RADIUS_KM, SIDEREAL_DAY_S};
use crate::error::{ProtocolError, ReportError};
use crate::geo::GroundPosition;
use crate::geometry::{
    beam_doppler_profile, bent_pipe_rtt, central_angle_for_elevation, differential_delay, geometry_sample,
    point_at_elevation, visibility_duration, BeamSpec,
};
use crate::link_budget::{coverage_check, snr_bounds, snr_threshold_at, LinkDirection};
use crate::mobility::{build_candidate, cell_suitability, measurement_capability_check, model_snr, rank_cells};
use crate::orbit::{OrbitKind, OrbitSpec};
use crate::protocol::{serving_satellite, DeviceContext};

/// Time step for LEO pass sweeps, s.
const LEO_SWEEP_STEP_S: f64 = 0.5;
/// Time step for geosynchronous daily sweeps, s.
const GEO_SWEEP_STEP_S: f64 = 60.0;
/// Reference beam diameters when no beam is configured, km.
const GEO_REFERENCE_BEAM_KM: f64 = 3500.0;
const LEO_REFERENCE_BEAM_KM: f64 = 1000.0;

pub fn kind_label(kind: OrbitKind) -> &'static str {
    match kind {
        OrbitKind::Geosynchronous => "GEO",
        OrbitKind::LeoCircular => "LEO",
    }
}

/// One link-budget row: best and worst SNR of one orbit class and direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetRow {
    pub orbit: String,
    pub altitude_km: f64,
    pub direction: LinkDirection,
    pub bandwidth_hz: f64,
    pub fspl_min_db: f64,
    pub fspl_max_db: f64,
    pub snr_worst_db: f64,
    pub snr_best_db: f64,
    /// Coverage threshold at this bandwidth, dB.
    pub threshold_db: f64,
    /// Whether the worst case still meets the threshold.
    pub worst_case_covered: bool,
}

/// Link-budget rows for every orbit class present in both the constellation
/// and the link-budget sets (GEO first, downlink before uplink).
pub fn linkbudget_table(cfg: &ScenarioConfig) -> Result<Vec<LinkBudgetRow>, ReportError> {
    let mut rows = Vec::new();
    for kind in [OrbitKind::Geosynchronous, OrbitKind::LeoCircular] {
        let (Some(orbit), Some(set)) =
            (cfg.constellation.iter().find(|o| o.kind == kind), cfg.link_budgets.for_kind(kind))
        else {
            continue;
        };
        for (direction, t) in [(LinkDirection::Downlink, &set.downlink), (LinkDirection::Uplink, &set.uplink)] {
            let b = snr_bounds(t, orbit.altitude_km, cfg.carrier_frequency_hz, cfg.min_elevation_deg)?;
            rows.push(LinkBudgetRow {
                orbit: kind_label(kind).to_string(),
                altitude_km: orbit.altitude_km,
                direction,
                bandwidth_hz: t.bandwidth_hz,
                fspl_min_db: b.fspl_min_db,
                fspl_max_db: b.fspl_max_db,
                snr_worst_db: b.snr_worst_db,
                snr_best_db: b.snr_best_db,
                threshold_db: snr_threshold_at(direction, t.bandwidth_hz),
                worst_case_covered: coverage_check(b.snr_worst_db, direction, t.bandwidth_hz),
            });
        }
    }
    if rows.is_empty() {
        return Err(ReportError::Unsupported("no orbit class has both a satellite and a link budget".into()));
    }
    Ok(rows)
}

/// Derived system characteristics of one satellite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    pub satellite: usize,
    pub orbit: String,
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub inertial_speed_km_s: f64,
    pub period_min: f64,
    /// Bent-pipe RTT with device and gateway at zenith, ms.
    pub rtt_min_ms: f64,
    /// Bent-pipe RTT with device and gateway at the minimum elevation, ms.
    pub rtt_max_ms: f64,
    pub max_doppler_ppm: f64,
    pub max_doppler_hz: f64,
    pub max_delay_drift_us_per_s: f64,
    /// Overhead-pass visibility, s; `None` when the satellite never sets.
    pub visibility_s: Option<f64>,
    pub beam_diameter_km: f64,
    /// Differential delay across the beam with its far edge at the minimum elevation, ms.
    pub differential_delay_ms: f64,
}

/// Ground point directly below the satellite at `t_s`.
fn sub_point(orbit: &OrbitSpec, t_s: f64) -> GroundPosition {
    let mut p = orbit.state_at(t_s).sub_satellite_point();
    p.altitude_m = 0.0;
    p
}

/// Largest |ppm| and |drift| seen from `observer` over `[t0, t1]` above `min_elev`.
fn sweep_extremes(
    orbit: &OrbitSpec,
    observer: &GroundPosition,
    min_elev: f64,
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<(f64, f64), ReportError> {
    let (mut ppm, mut drift) = (0.0f64, 0.0f64);
    let n = ((t1 - t0) / step).ceil() as usize;
    for i in 0..=n {
        let t = (t0 + i as f64 * step).min(t1);
        let g = geometry_sample(&orbit.state_at(t), observer, 1.0)?;
        if g.elevation_deg >= min_elev {
            ppm = ppm.max(g.doppler_ppm().abs());
            drift = drift.max(g.delay_drift_us_per_s.abs());
        }
    }
    Ok((ppm, drift))
}

/// RTT, Doppler, drift, visibility and differential-delay summary per satellite.
///
/// Passes are evaluated for an observer under the satellite at the scenario
/// start (an overhead pass); geosynchronous satellites are swept over one
/// sidereal day.
pub fn geometry_summary(cfg: &ScenarioConfig) -> Result<Vec<GeometrySummary>, ReportError> {
    let t0 = cfg.start_time_s;
    let beam_override = cfg.beams.iter().map(|b| b.diameter_km).reduce(f64::max);
    cfg.constellation
        .iter()
        .enumerate()
        .map(|(i, orbit)| {
            let sub = sub_point(orbit, t0);
            let state = orbit.state_at(t0);
            let sample_at = |elev: f64, az: f64| {
                geometry_sample(&state, &point_at_elevation(&sub, orbit.altitude_km, elev, az), 1.0)
            };
            let rtt_min_ms = bent_pipe_rtt(&sample_at(90.0, 0.0)?, &sample_at(90.0, 90.0)?)?;
            let rtt_max_ms =
                bent_pipe_rtt(&sample_at(cfg.min_elevation_deg, 0.0)?, &sample_at(cfg.min_elevation_deg, 90.0)?)?;
            let (max_ppm, max_drift, visibility_s) = match orbit.kind {
                OrbitKind::LeoCircular => {
                    let half = orbit.period_s() / 2.0;
                    let (p, d) =
                        sweep_extremes(orbit, &sub, cfg.min_elevation_deg, t0 - half, t0 + half, LEO_SWEEP_STEP_S)?;
                    (p, d, Some(visibility_duration(orbit, &sub, cfg.min_elevation_deg)?))
                }
                OrbitKind::Geosynchronous => {
                    let (p, d) =
                        sweep_extremes(orbit, &sub, cfg.min_elevation_deg, t0, t0 + SIDEREAL_DAY_S, GEO_SWEEP_STEP_S)?;
                    (p, d, None)
                }
            };
            let beam_diameter_km = beam_override.unwrap_or(match orbit.kind {
                OrbitKind::Geosynchronous => GEO_REFERENCE_BEAM_KM,
                OrbitKind::LeoCircular => LEO_REFERENCE_BEAM_KM,
            });
            let edge_km = central_angle_for_elevation(cfg.min_elevation_deg, orbit.altitude_km) * EARTH_RADIUS_KM;
            let center_km = edge_km - beam_diameter_km / 2.0;
            let center = if center_km >= 0.0 { sub.destination(0.0, center_km) } else { sub };
            let differential_delay_ms =
                differential_delay(&state, &BeamSpec { center, diameter_km: beam_diameter_km })?;
            Ok(GeometrySummary {
                satellite: i,
                orbit: kind_label(orbit.kind).to_string(),
                altitude_km: orbit.altitude_km,
                inclination_deg: orbit.inclination_deg,
                inertial_speed_km_s: orbit.inertial_speed_km_s(),
                period_min: orbit.period_s() / 60.0,
                rtt_min_ms,
                rtt_max_ms,
                max_doppler_ppm: max_ppm,
                max_doppler_hz: max_ppm * 1e-6 * cfg.carrier_frequency_hz,
                max_delay_drift_us_per_s: max_drift,
                visibility_s,
                beam_diameter_km,
                differential_delay_ms,
            })
        })
        .collect()
}

/// Explanatory notes on which orbit class has the larger differential delay
/// and Doppler, for comparison with GEO/LEO summary tables.
pub fn geometry_notes(rows: &[GeometrySummary]) -> Vec<String> {
    let geo = rows.iter().find(|r| r.orbit == "GEO");
    let leo = rows.iter().find(|r| r.orbit == "LEO" && (r.altitude_km - 600.0).abs() < 1.0);
    let mut notes = Vec::new();
    if let (Some(g), Some(l)) = (geo, leo) {
        if l.differential_delay_ms < g.differential_delay_ms {
            notes.push(format!(
                "differential delay: GEO {:.2} ms > LEO {:.2} ms; the wider GEO footprint dominates, so a \
                 summary listing the larger value under LEO has the columns swapped",
                g.differential_delay_ms, l.differential_delay_ms
            ));
        }
        if l.max_doppler_ppm > g.max_doppler_ppm {
            notes.push(format!(
                "max Doppler: LEO {:.2} ppm > GEO {:.2} ppm; only the LEO satellite moves relative to the \
                 ground, so a summary listing the larger value under GEO has the columns swapped",
                l.max_doppler_ppm, g.max_doppler_ppm
            ));
        }
    }
    notes
}

/// A Doppler series: `(x, doppler_hz)` with `x` in s (time of day) or km (beam offset).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DopplerTrace {
    pub mode: DopplerTraceMode,
    pub x_label: String,
    pub points: Vec<(f64, f64)>,
}

/// Doppler time series or in-beam profile per the scenario's trace settings.
pub fn doppler_trace(cfg: &ScenarioConfig, mode: Option<DopplerTraceMode>) -> Result<DopplerTrace, ReportError> {
    let tc = cfg.doppler_trace;
    let Some(mode) = mode.or(tc.map(|t| t.mode)) else {
        return Err(ReportError::Unsupported("no Doppler trace mode configured".into()));
    };
    let sat_idx = tc.map_or(0, |t| t.satellite);
    let orbit = &cfg.constellation[sat_idx];
    let fc = cfg.carrier_frequency_hz;
    match mode {
        DopplerTraceMode::InclinedGeo => {
            let observer = tc
                .and_then(|t| t.observer)
                .map(|o| cfg.ground_position(&o))
                .unwrap_or_else(|| sub_point(orbit, cfg.start_time_s));
            let duration = tc.map_or(SIDEREAL_DAY_S, |t| t.duration_s);
            let step = tc.map_or(GEO_SWEEP_STEP_S, |t| t.step_s);
            let n = (duration / step).floor() as usize;
            let points = (0..=n)
                .map(|i| {
                    let dt = i as f64 * step;
                    let g = geometry_sample(&orbit.state_at(cfg.start_time_s + dt), &observer, fc)?;
                    Ok((dt, g.doppler_hz))
                })
                .collect::<Result<_, ReportError>>()?;
            Ok(DopplerTrace { mode, x_label: "time_of_day_s".into(), points })
        }
        DopplerTraceMode::BeamProfile => {
            let cell = tc.and_then(|t| t.beam_cell_id).or(cfg.beams.first().map(|b| b.cell_id));
            let beam = cell
                .and_then(|c| cfg.beam(c))
                .ok_or_else(|| ReportError::Unsupported("beam profile needs a configured beam".into()))?;
            let samples = tc.map_or(51, |t| t.samples);
            let points = beam_doppler_profile(&orbit.state_at(cfg.start_time_s), &beam, fc, samples)?;
            Ok(DopplerTrace { mode, x_label: "offset_km".into(), points })
        }
    }
}

/// Least-squares line through the points: `(slope, intercept, r_squared)`.
/// A constant series counts as a perfect fit.
pub fn linear_fit(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let r2 = if syy > 0.0 && sxx > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}

/// One ranked cell for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub device: usize,
    pub rank: usize,
    pub cell_id: u32,
    pub center_distance_km: f64,
    pub estimated_rtt_ms: f64,
    pub max_rtt_ms: f64,
    pub suitable: bool,
    pub model_snr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rows: Vec<RankRow>,
    /// Whether devices can measure enough frequencies for the configured reuse.
    pub measurement_capable: bool,
}

/// Distance ranking of all configured cells for every device at scenario start.
/// Cells whose satellite the device cannot see are omitted.
pub fn rank_cells_report(cfg: &ScenarioConfig, seed: u64) -> Result<RankReport, ReportError> {
    let sc = cfg.resolve(seed)?;
    if sc.cells.is_empty() {
        return Err(ReportError::Unsupported("ranking needs at least one beam".into()));
    }
    let t_s = sc.start_time_s;
    let eph = sc.ephemeris();
    let mut rows = Vec::new();
    for (i, d) in sc.devices.iter().enumerate() {
        let mut ctx = DeviceContext::new(d.gnss_position);
        ctx.gnss_error_radial_m = d.gnss_error_radial_m;
        let mut cands = Vec::new();
        for cell in &sc.cells {
            let si = sc.system_information(cell.cell_id).expect("cell exists");
            match build_candidate(cell.cell_id, si, &ctx, t_s) {
                Ok(c) => cands.push(c),
                Err(ProtocolError::NotReachable { .. }) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if cands.is_empty() {
            continue;
        }
        let sat = serving_satellite(&ctx, &eph, t_s)?.state;
        for (rank, c) in rank_cells(&d.gnss_position, &cands)?.into_iter().enumerate() {
            let beam = sc.cell(c.cell_id).expect("cell exists").beam;
            rows.push(RankRow {
                device: i,
                rank: rank + 1,
                cell_id: c.cell_id,
                center_distance_km: c.center_distance_km,
                estimated_rtt_ms: c.estimated_rtt_ms,
                max_rtt_ms: c.si.max_rtt_ms,
                suitable: cell_suitability(&c),
                model_snr_db: model_snr(&sc.channel.downlink, sc.channel.carrier_hz, &sat, &d.true_position, &beam)?,
            });
        }
    }
    Ok(RankReport {
        rows,
        measurement_capable: measurement_capability_check(cfg.measurement_frequencies, cfg.reuse_denominator)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 3.0 * i as f64 - 2.0)).collect();
        let (m, b, r2) = linear_fit(&pts);
        assert!((m - 3.0).abs() < 1e-12 && (b + 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        let flat = [(0.0, 1.0), (1.0, 1.0), (2.0, 1.0)];
        assert_eq!(linear_fit(&flat).2, 1.0);
        let noisy = [(0.0, 0.0), (1.0, 1.0), (2.0, 0.0), (3.0, 1.0)];
        assert!(linear_fit(&noisy).2 < 0.5);
    }

    #[test]
    fn sweep_of_geostationary_is_static() {
        let o = OrbitSpec::geostationary(0.0);
        let obs = GroundPosition::new(30.0, 10.0, 0.0);
        let (p, d) = sweep_extremes(&o, &obs, 10.0, 0.0, 3600.0, 600.0).unwrap();
        assert!(p < 1e-6 && d < 1e-6);
    }
}
