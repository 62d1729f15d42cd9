use serde::{Deserialize, Serialize};

/// Stealthy collisions need `RTM < 0.4`.
pub const STEALTHY_RTM: f64 = 0.4;
/// Stealthy collisions need `|SCR| <= 6 dB` at the gateway.
pub const STEALTHY_SCR_DB: f64 = 6.0;
/// Eavesdropping needs `SCR >= 6 dB` at the eavesdropper.
pub const EAVESDROP_SCR_DB: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    CollisionReceived,
    Stealthy,
    BadFrame,
    BothReceived,
    VictimReceived,
}

impl std::fmt::Display for Outcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Debug::fmt(self, f)
    }
}

/// Demodulation outcome over `(rtm, scr)`.
///
/// ```text
/// rtm >= 1                          BothReceived
/// scr > 6                           VictimReceived
/// rtm < 0.4,  scr < -6              CollisionReceived
/// rtm < 0.4,  -6 <= scr <= 6        Stealthy
/// 0.4 <= rtm < 1,  -6 <= scr <= 6   VictimReceived
/// 0.4 <= rtm < 1,  scr < -6         BadFrame
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutcomeMap {
    pub stealthy_rtm: f64,
    pub scr_band_db: f64,
}

impl Default for OutcomeMap {
    fn default() -> Self {
        Self { stealthy_rtm: STEALTHY_RTM, scr_band_db: STEALTHY_SCR_DB }
    }
}

impl OutcomeMap {
    /// Total over `rtm >= 0` and every `scr`, including infinities.
    pub fn classify(&self, rtm: f64, scr_db: f64) -> Outcome {
        let band = self.scr_band_db;
        if rtm >= 1.0 {
            Outcome::BothReceived
        } else if scr_db > band {
            Outcome::VictimReceived
        } else if rtm < self.stealthy_rtm {
            if scr_db < -band {
                Outcome::CollisionReceived
            } else {
                Outcome::Stealthy
            }
        } else if scr_db < -band {
            Outcome::BadFrame
        } else {
            Outcome::VictimReceived
        }
    }

    /// The stealthy band on its own.
    pub fn is_stealthy(&self, rtm: f64, scr_db: f64) -> bool {
        rtm < self.stealthy_rtm && (-self.scr_band_db..=self.scr_band_db).contains(&scr_db)
    }
}
