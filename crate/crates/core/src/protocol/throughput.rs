//! Analytical throughput ceilings for HARQ stop-and-wait and RLC ARQ.

use crate::error::ProtocolError;

use super::types::HarqConfig;

/// RTT-limited HARQ ceiling: every process carries one block per cycle, bps.
pub fn harq_throughput(rtt_ms: f64, tbs_bits: f64, cfg: &HarqConfig, proc_delay_ms: f64) -> Result<f64, ProtocolError> {
    if !cfg.enabled {
        return Err(ProtocolError::Domain("HARQ is disabled".into()));
    }
    if cfg.n_processes == 0 {
        return Err(ProtocolError::Domain("no HARQ processes".into()));
    }
    if !(rtt_ms > 0.0) || !(proc_delay_ms >= 0.0) || !(tbs_bits > 0.0) {
        return Err(ProtocolError::Domain("rtt and tbs must be positive, processing delay >= 0".into()));
    }
    Ok(cfg.n_processes as f64 * tbs_bits / ((rtt_ms + proc_delay_ms) * 1e-3))
}

/// Sliding-window RLC ARQ throughput: pipeline- or link-limited, bps.
pub fn rlc_arq_throughput(rtt_ms: f64, window: u32, pdu_bits: f64, tti_ms: f64) -> Result<f64, ProtocolError> {
    if window < 1 || !(tti_ms > 0.0) || !(rtt_ms >= 0.0) || !(pdu_bits > 0.0) {
        return Err(ProtocolError::Domain("window >= 1, tti > 0, rtt >= 0 and pdu > 0 required".into()));
    }
    let w = window as f64;
    let pipeline = w * pdu_bits / ((rtt_ms + w * tti_ms) * 1e-3);
    let link = pdu_bits / (tti_ms * 1e-3);
    Ok(pipeline.min(link))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harq_examples() {
        let two = HarqConfig::default();
        let one = HarqConfig { n_processes: 1, ..two };
        assert!((harq_throughput(541.0, 1000.0, &two, 0.0).unwrap() - 3696.86).abs() < 1.0);
        assert!((harq_throughput(25.8, 1000.0, &two, 0.0).unwrap() - 77_519.4).abs() < 100.0);
        let h1 = harq_throughput(541.0, 1000.0, &one, 0.0).unwrap();
        let h2 = harq_throughput(541.0, 1000.0, &two, 0.0).unwrap();
        assert_eq!(h1 * 2.0, h2);
        assert!(harq_throughput(541.0, 1000.0, &HarqConfig { n_processes: 0, ..two }, 0.0).is_err());
        assert!(harq_throughput(541.0, 1000.0, &HarqConfig { enabled: false, ..two }, 0.0).is_err());
    }

    #[test]
    fn rlc_examples() {
        let r = rlc_arq_throughput(541.0, 16, 1000.0, 4.0).unwrap();
        assert!((r - 26_446.3).abs() < 0.5, "{r}");
        let one = HarqConfig { n_processes: 1, ..Default::default() };
        let sw = rlc_arq_throughput(541.0, 1, 1000.0, 4.0).unwrap();
        assert!((sw - harq_throughput(541.0, 1000.0, &one, 4.0).unwrap()).abs() < 1e-9);
        assert!(r > harq_throughput(541.0, 1000.0, &HarqConfig::default(), 0.0).unwrap());
        assert_eq!(rlc_arq_throughput(0.0, 8, 1000.0, 4.0).unwrap(), 250_000.0);
        assert!(rlc_arq_throughput(541.0, 0, 1000.0, 4.0).is_err());
    }
}
