//! Hard-threshold reception model over bent-pipe links.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::time::SimTime;
use crate::error::SimError;
use crate::link_budget::{fspl, snr, snr_threshold_at, LinkBudgetTemplate, LinkDirection};

/// Receiver-side settings of the reception model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceptionConfig {
    pub ul_repetitions: u32,
    pub dl_repetitions: u32,
    /// Standard deviation of an optional log-normal fading term, dB.
    pub fading_sigma_db: Option<f64>,
    /// Draw data block errors at the HARQ target BLER.
    pub block_errors: bool,
}

impl Default for ReceptionConfig {
    fn default() -> Self {
        Self { ul_repetitions: 1, dl_repetitions: 1, fading_sigma_db: None, block_errors: false }
    }
}

/// Default spread of the optional fading term, dB.
pub const DEFAULT_FADING_SIGMA_DB: f64 = 3.0;

pub fn repetition_gain_db(repetitions: u32) -> f64 {
    10.0 * (repetitions as f64).log10()
}

/// Reception succeeds iff the SNR plus repetition gain reaches the threshold.
pub fn reception_success(snr_db: f64, repetitions: u32, threshold_db: f64) -> bool {
    snr_db + repetition_gain_db(repetitions) >= threshold_db
}

/// Outcome of a transmission over one link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reception {
    pub arrival: SimTime,
    pub success: bool,
    /// SNR including the repetition gain, dB.
    pub effective_snr_db: f64,
}

/// Arrival time and success of a transmission sent at `tx` over a path with
/// `one_way_delay_ms` total propagation delay.
pub fn channel_apply(
    tx: SimTime,
    one_way_delay_ms: f64,
    snr_db: f64,
    repetitions: u32,
    threshold_db: f64,
) -> Result<Reception, SimError> {
    if repetitions < 1 {
        return Err(SimError::Validation(crate::error::ValidationError(vec!["repetitions must be >= 1".into()])));
    }
    Ok(Reception {
        arrival: tx + SimTime::from_ms(one_way_delay_ms),
        success: reception_success(snr_db, repetitions, threshold_db),
        effective_snr_db: snr_db + repetition_gain_db(repetitions),
    })
}

/// Link budgets, thresholds and repetitions for both directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelModel {
    pub carrier_hz: f64,
    pub uplink: LinkBudgetTemplate,
    pub downlink: LinkBudgetTemplate,
    pub reception: ReceptionConfig,
}

impl ChannelModel {
    /// Service-link SNR at `slant_km` with the worst-case atmospheric loss, dB.
    pub fn link_snr_db(&self, dir: LinkDirection, slant_km: f64) -> Result<f64, SimError> {
        let t = self.template(dir);
        let loss = fspl(slant_km, self.carrier_hz / 1e9)
            .map_err(|e| SimError::Validation(crate::error::ValidationError(vec![e.to_string()])))?;
        Ok(snr(&t.params(loss, t.atmospheric_loss_max_db)))
    }

    pub fn template(&self, dir: LinkDirection) -> &LinkBudgetTemplate {
        match dir {
            LinkDirection::Uplink => &self.uplink,
            LinkDirection::Downlink => &self.downlink,
        }
    }

    /// Coverage floor translated to the link bandwidth, dB.
    pub fn threshold_db(&self, dir: LinkDirection) -> f64 {
        snr_threshold_at(dir, self.template(dir).bandwidth_hz)
    }

    pub fn repetitions(&self, dir: LinkDirection) -> u32 {
        match dir {
            LinkDirection::Uplink => self.reception.ul_repetitions,
            LinkDirection::Downlink => self.reception.dl_repetitions,
        }
    }

    /// Random fading term, 0 dB unless fading is configured.
    pub fn fading_db<R: Rng>(&self, rng: &mut R) -> f64 {
        match self.reception.fading_sigma_db {
            Some(sigma) if sigma > 0.0 => Normal::new(0.0, sigma).map(|n| n.sample(rng)).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::link_budget::bandwidth_rescale;

    #[test]
    fn threshold_boundary_and_repetitions() {
        assert!(reception_success(-13.8, 1, -13.8));
        assert!(!reception_success(-13.81, 1, -13.8));
        assert!(reception_success(-16.8, 2, -13.8));
        let r = channel_apply(SimTime(1000), 119.37, -16.8, 2, -13.8).unwrap();
        assert!(r.success);
        assert_eq!(r.arrival, SimTime(1000 + 119_370));
        assert!(channel_apply(SimTime(0), 1.0, 0.0, 0, -13.8).is_err());
    }

    #[test]
    fn geo_uplink_narrowband_closes() {
        let worst = snr(&LinkBudgetTemplate::geo_uplink().params(190.6, 0.2));
        let narrow = bandwidth_rescale(worst, 180e3, 15e3);
        assert!((narrow - 2.8).abs() < 0.2);
        assert!(channel_apply(SimTime(0), 120.0, narrow, 1, -13.8).unwrap().success);
    }
}
