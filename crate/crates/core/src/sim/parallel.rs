//! Independent seeds run concurrently, aggregated in seed order.

use rayon::prelude::*;

use crate::error::SimError;

use super::engine::{run_scenario, SimOutput};
use super::metrics::{Metrics, MetricsReport};
use super::scenario::Scenario;

/// Runs one simulation per seed on up to `jobs` worker threads.
///
/// Outputs are returned in `seeds` order, so results do not depend on `jobs`.
pub fn run_many(sc: &Scenario, seeds: &[u64], jobs: usize) -> Result<Vec<SimOutput>, SimError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SimError::Io(std::io::Error::other(e)))?;
    pool.install(|| seeds.par_iter().map(|&s| run_scenario(sc, s)).collect())
}

/// Merged report over several runs of the same scenario.
pub fn aggregate_report(sc: &Scenario, outputs: &[SimOutput]) -> MetricsReport {
    let mut m = Metrics::default();
    for o in outputs {
        m.merge(&o.metrics);
    }
    let seeds = outputs.iter().flat_map(|o| o.report.seeds.iter().copied()).collect();
    let devices = outputs.iter().map(|o| o.report.devices).sum();
    MetricsReport::build(&sc.name, seeds, devices, sc.harq.enabled, sc.harq.n_processes, &m)
}
