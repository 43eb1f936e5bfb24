use serde::{Deserialize, Serialize};

use crate::dd::{self, DoubleDouble};
use crate::error::{Error, Result};

/// The open unit ball in `R^n`, `n >= 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Domain {
    dim: usize,
}

impl Domain {
    pub fn unit_ball(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::domain(
                "dimension",
                format!("n = {dim}, need n >= 2"),
            ));
        }
        if dim > 12 {
            return Err(Error::domain(
                "dimension",
                format!("n = {dim} exceeds supported 12"),
            ));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().map(|v| v * v).sum::<f64>() < 1.0
    }

    /// Distance from `x` to the unit sphere; negative outside.
    pub fn distance_to_boundary(&self, x: &[DoubleDouble]) -> f64 {
        1.0 - dd::norm_sq(x).to_f64().sqrt()
    }

    /// Volume of the unit `n`-ball.
    pub fn unit_volume(&self) -> f64 {
        unit_ball_volume(self.dim)
    }
}

/// `pi^(n/2) / Gamma(n/2 + 1)` by the two-step recurrence.
pub fn unit_ball_volume(dim: usize) -> f64 {
    use std::f64::consts::PI;
    let mut v = [1.0, 2.0];
    for k in 2..=dim {
        let next = v[0] * 2.0 * PI / k as f64;
        v = [v[1], next];
    }
    if dim == 0 {
        1.0
    } else {
        v[1]
    }
}
