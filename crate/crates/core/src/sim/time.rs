//! Fixed-point simulation clock with 1 us resolution.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

/// Simulation time in integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SimTime(pub i64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    /// Nearest microsecond to `ms`.
    pub fn from_ms(ms: f64) -> Self {
        SimTime((ms * 1e3).round() as i64)
    }

    pub fn from_us(us: i64) -> Self {
        SimTime(us)
    }

    pub fn as_us(self) -> i64 {
        self.0
    }

    pub fn as_ms(self) -> f64 {
        self.0 as f64 / 1e3
    }

    pub fn as_s(self) -> f64 {
        self.0 as f64 / 1e6
    }

    pub fn max(self, other: SimTime) -> SimTime {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, o: SimTime) -> SimTime {
        SimTime(self.0 + o.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, o: SimTime) -> SimTime {
        SimTime(self.0 - o.0)
    }
}

/// Fixed three-decimal milliseconds, exact for any microsecond value.
impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", a / 1000, a % 1000)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_and_formatting() {
        let t = SimTime::from_ms(541.2996);
        assert_eq!(t.as_us(), 541_300);
        assert_eq!(t.to_string(), "541.300");
        assert_eq!(SimTime(-1_500).to_string(), "-1.500");
        assert_eq!((t + SimTime(700)).as_ms(), 542.0);
        assert_eq!(SimTime(5).max(SimTime(3)), SimTime(5));
    }
}
