//! Measured SX1276 collision windows.
//!
//! A collision starting `lag` after the victim onset yields, per window:
//! `[0, w1]` collision frame received, `(w1, w2]` stealthy drop,
//! `(w2, w3]` bad-frame error, beyond `w3` both frames received.

use serde::{Deserialize, Serialize};

use super::{AttackError, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionWindows {
    pub w1_ms: f64,
    pub w2_ms: f64,
    pub w3_ms: f64,
}

impl CollisionWindows {
    pub fn new(w1_ms: f64, w2_ms: f64, w3_ms: f64) -> Result<Self, AttackError> {
        if !(0.0 < w1_ms && w1_ms < w2_ms && w2_ms < w3_ms && w3_ms.is_finite()) {
            return Err(AttackError::Parameter("windows must satisfy 0 < w1 < w2 < w3"));
        }
        Ok(Self { w1_ms, w2_ms, w3_ms })
    }
}

/// Rows keyed by `(S, payload bytes)`, sorted by key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowTable {
    pub rows: Vec<(u8, u32, CollisionWindows)>,
    /// Linear interpolation in payload size between rows of the same `S`.
    pub interpolate: bool,
}

impl WindowTable {
    /// SX1276 measurements at 125 kHz.
    pub fn sx1276() -> Self {
        let w = |a, b, c| CollisionWindows { w1_ms: a, w2_ms: b, w3_ms: c };
        Self {
            rows: vec![
                (7, 10, w(5.0, 28.0, 141.0)),
                (7, 20, w(5.0, 38.0, 156.0)),
                (7, 30, w(6.0, 41.0, 165.0)),
                (7, 40, w(6.0, 54.0, 178.0)),
                (8, 30, w(10.0, 82.0, 208.0)),
                (9, 30, w(22.0, 156.0, 274.0)),
            ],
            interpolate: false,
        }
    }

    pub fn with_interpolation(mut self) -> Self {
        self.interpolate = true;
        self
    }

    pub fn lookup(&self, sf: u8, payload: u32) -> Result<CollisionWindows, AttackError> {
        if let Some(&(_, _, w)) = self.rows.iter().find(|(s, p, _)| *s == sf && *p == payload) {
            return Ok(w);
        }
        let missing = AttackError::NoWindows { sf, payload };
        if !self.interpolate {
            return Err(missing);
        }
        let below = self.rows.iter().filter(|(s, p, _)| *s == sf && *p < payload).max_by_key(|(_, p, _)| *p);
        let above = self.rows.iter().filter(|(s, p, _)| *s == sf && *p > payload).min_by_key(|(_, p, _)| *p);
        match (below, above) {
            (Some(&(_, pa, a)), Some(&(_, pb, b))) => {
                let f = (payload - pa) as f64 / (pb - pa) as f64;
                let lerp = |x: f64, y: f64| x + f * (y - x);
                Ok(CollisionWindows {
                    w1_ms: lerp(a.w1_ms, b.w1_ms),
                    w2_ms: lerp(a.w2_ms, b.w2_ms),
                    w3_ms: lerp(a.w3_ms, b.w3_ms),
                })
            }
            _ => Err(missing),
        }
    }
}

/// Exact-match lookup in the SX1276 table.
pub fn lookup_windows(sf: u8, payload_bytes: u32) -> Result<CollisionWindows, AttackError> {
    WindowTable::sx1276().lookup(sf, payload_bytes)
}

/// Partitions `[0, inf)` into the four timing regions.
pub fn classify_by_timing(lag_ms: f64, w: &CollisionWindows) -> Result<Outcome, AttackError> {
    if !(lag_ms >= 0.0) {
        return Err(AttackError::Parameter("collision lag must be non-negative"));
    }
    Ok(if lag_ms <= w.w1_ms {
        Outcome::CollisionReceived
    } else if lag_ms <= w.w2_ms {
        Outcome::Stealthy
    } else if lag_ms <= w.w3_ms {
        Outcome::BadFrame
    } else {
        Outcome::BothReceived
    })
}
