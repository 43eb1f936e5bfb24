use serde::{Deserialize, Serialize};

/// Largest offset norm an anchored point may carry, in anchor units.
pub const MAX_OFFSET: f64 = 4.0;

/// A point stored relative to a ball of the system.
///
/// The absolute position is `x^a + s * offset` where `s = R_a` for a ball
/// anchor `a >= 1` and `s = 1` with `x^0 = 0` for the domain frame. Points
/// inside balls whose radius is far below the resolution of absolute
/// coordinates keep full relative accuracy this way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnchoredPoint {
    pub anchor: usize,
    pub offset: Vec<f64>,
}

impl AnchoredPoint {
    /// A point given in absolute coordinates.
    pub fn absolute(x: Vec<f64>) -> Self {
        Self {
            anchor: 0,
            offset: x,
        }
    }

    pub fn new(anchor: usize, offset: Vec<f64>) -> Self {
        Self { anchor, offset }
    }

    pub fn offset_norm(&self) -> f64 {
        self.offset.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }
}
