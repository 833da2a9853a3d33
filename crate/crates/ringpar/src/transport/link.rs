use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Simulated link cost: a per-frame latency plus a per-byte transfer cost.
///
/// The delay is applied on the receive side, before a frame is handed to the
/// caller, so the same collective code can be benchmarked under any profile.
/// `(0, 0)` means frames are delivered as fast as the host allows.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkProfile {
    /// Seconds added per frame.
    pub per_message_delay: f64,
    /// Seconds added per wire byte (header included).
    pub per_byte_delay: f64,
}

impl LinkProfile {
    pub const ZERO: LinkProfile = LinkProfile {
        per_message_delay: 0.0,
        per_byte_delay: 0.0,
    };

    pub fn new(per_message_delay: f64, per_byte_delay: f64) -> Result<Self> {
        for (name, value) in [
            ("per_message_delay", per_message_delay),
            ("per_byte_delay", per_byte_delay),
        ] {
            if !value.is_finite() || value < 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {value}"
                )));
            }
        }
        Ok(LinkProfile {
            per_message_delay,
            per_byte_delay,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.per_message_delay == 0.0 && self.per_byte_delay == 0.0
    }

    /// Simulated transfer time of one frame of `wire_bytes` total size.
    pub fn delay_for(&self, wire_bytes: usize) -> Duration {
        Duration::from_secs_f64(self.per_message_delay + self.per_byte_delay * wire_bytes as f64)
    }

    pub(crate) fn apply(&self, wire_bytes: usize) {
        if !self.is_zero() {
            std::thread::sleep(self.delay_for(wire_bytes));
        }
    }
}

impl Default for LinkProfile {
    fn default() -> Self {
        LinkProfile::ZERO
    }
}
