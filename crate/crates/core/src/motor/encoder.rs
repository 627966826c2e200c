use serde::{Deserialize, Serialize};

use super::MotorError;
use crate::scalar::Real;

/// Position of each `(A << 1) | B` code in the forward cycle
/// `00 → 10 → 11 → 01`.
const CYCLE_INDEX: [u8; 4] = [0, 3, 1, 2];

/// Quadrature (A/B, 90° apart) decoder state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderModel {
    pub ppr: u32,
    /// Signed accumulated counts.
    pub count: i64,
    /// Last seen `(A << 1) | B`.
    pub phase_state: u8,
    /// Transitions that skipped a state (both channels changed at once).
    pub errors: u64,
}

impl EncoderModel {
    pub fn new(ppr: u32) -> Result<Self, MotorError> {
        if ppr == 0 {
            return Err(MotorError::InvalidParam { field: "ppr", reason: "must be > 0" });
        }
        Ok(Self {
            ppr,
            count: 0,
            phase_state: 0,
            errors: 0,
        })
    }

    /// Feeds one sample of the two channel levels.
    pub fn feed(&mut self, a: bool, b: bool) {
        let code = (u8::from(a) << 1) | u8::from(b);
        let from = CYCLE_INDEX[usize::from(self.phase_state)];
        let to = CYCLE_INDEX[usize::from(code)];
        match (to + 4 - from) % 4 {
            0 => {}
            1 => self.count += 1,
            3 => self.count -= 1,
            _ => self.errors += 1,
        }
        self.phase_state = code;
    }

    /// `P = N·360° / PPR`.
    pub fn position_deg<T: Real>(&self) -> T {
        T::lit(self.count as f64) * T::lit(360.0) / T::lit(f64::from(self.ppr))
    }
}

/// Decodes a sequence of `(A, B)` levels starting from `model`.
pub fn encoder_decode(model: &EncoderModel, edges: &[(bool, bool)]) -> EncoderModel {
    let mut m = *model;
    for &(a, b) in edges {
        m.feed(a, b);
    }
    m
}

/// `V = N / T` (counts/s).
pub fn encoder_speed<T: Real>(counts: i64, interval: T) -> Result<T, MotorError> {
    if !(interval > T::zero()) {
        return Err(MotorError::ZeroInterval);
    }
    Ok(T::lit(counts as f64) / interval)
}
