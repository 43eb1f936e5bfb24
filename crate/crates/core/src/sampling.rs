//! Deterministic sample streams.
//!
//! Every sample is a pure function of `(seed, stream, index)`, so estimates do
//! not depend on how the index range is split between workers. Aggregation
//! goes through [`reduce_chunks`], which sums fixed-size chunks and then folds
//! the chunk results in index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Randomly shifted Kronecker lattice with generalized golden-ratio steps.
    #[default]
    LowDiscrepancy,
    /// Counter-based hash generator.
    PseudoRandom,
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low-discrepancy" | "qmc" => Ok(Scheme::LowDiscrepancy),
            "pseudo-random" | "mc" => Ok(Scheme::PseudoRandom),
            other => Err(Error::domain("scheme", format!("unknown scheme {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub samples: usize,
    pub seed: u64,
    /// Sub-stream identifier; distinct estimators draw from distinct streams.
    #[serde(default)]
    pub stream: u64,
}

impl QuadratureSpec {
    pub fn new(scheme: Scheme, samples: usize, seed: u64) -> Self {
        Self {
            scheme,
            samples,
            seed,
            stream: 0,
        }
    }

    pub fn low_discrepancy(samples: usize, seed: u64) -> Self {
        Self::new(Scheme::LowDiscrepancy, samples, seed)
    }

    pub fn pseudo_random(samples: usize, seed: u64) -> Self {
        Self::new(Scheme::PseudoRandom, samples, seed)
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn with_samples(mut self, samples: usize) -> Self {
        self.samples = samples;
        self
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::domain("samples", "sample count must be positive"));
        }
        Ok(())
    }

    /// Point `index` of the stream in the unit cube `[0,1)^dim`.
    pub fn unit_cube(&self, index: u64, dim: usize, out: &mut [f64]) {
        debug_assert!(out.len() >= dim);
        match self.scheme {
            Scheme::PseudoRandom => {
                let base = mix(self.seed ^ mix(self.stream.wrapping_add(0x9e37_79b9_7f4a_7c15)));
                let key = mix(base ^ index.wrapping_mul(0xd1b5_4a32_d192_ed69));
                for (j, o) in out.iter_mut().take(dim).enumerate() {
                    *o = to_unit(mix(
                        key.wrapping_add((j as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
                    ));
                }
            }
            Scheme::LowDiscrepancy => {
                let phi = kronecker_root(dim);
                let shift_key = mix(self.seed ^ mix(self.stream ^ 0x5851_f42d_4c95_7f2d));
                let mut alpha = 1.0;
                let step = (index + 1) as f64;
                for (j, o) in out.iter_mut().take(dim).enumerate() {
                    alpha /= phi;
                    let shift = to_unit(mix(shift_key.wrapping_add(j as u64)));
                    let v = shift + step * alpha;
                    *o = v - v.floor();
                }
            }
        }
    }

    /// Point `index` of the stream mapped to the closed unit ball in `dim`
    /// dimensions, uniformly with respect to volume.
    pub fn unit_ball(&self, index: u64, dim: usize, out: &mut [f64]) {
        let mut u = [0.0f64; 32];
        let cube_dim = ball_cube_dim(dim);
        assert!(
            cube_dim <= u.len(),
            "dimension {dim} too large for the ball map"
        );
        self.unit_cube(index, cube_dim, &mut u);
        map_cube_to_ball(&u[..cube_dim], dim, out);
    }
}

/// Cube dimension consumed by [`map_cube_to_ball`].
pub fn ball_cube_dim(dim: usize) -> usize {
    match dim {
        2 | 3 => dim,
        _ => 1 + 2 * dim.div_ceil(2),
    }
}

/// Volume-preserving map from `[0,1)^k` onto the unit ball.
///
/// Two and three dimensions use polar and spherical coordinates. Higher
/// dimensions draw a Gaussian direction by Box-Muller and an `u^(1/n)` radius.
pub fn map_cube_to_ball(u: &[f64], dim: usize, out: &mut [f64]) {
    use std::f64::consts::TAU;
    match dim {
        2 => {
            let r = u[0].sqrt();
            let (s, c) = (TAU * u[1]).sin_cos();
            out[0] = r * c;
            out[1] = r * s;
        }
        3 => {
            let r = u[0].cbrt();
            let cos_t = 1.0 - 2.0 * u[1];
            let sin_t = (1.0 - cos_t * cos_t).max(0.0).sqrt();
            let (s, c) = (TAU * u[2]).sin_cos();
            out[0] = r * sin_t * c;
            out[1] = r * sin_t * s;
            out[2] = r * cos_t;
        }
        _ => {
            let r = u[0].powf(1.0 / dim as f64);
            let mut norm_sq = 0.0;
            for pair in 0..dim.div_ceil(2) {
                let a = 1.0 - u[1 + 2 * pair];
                let rad = (-2.0 * a.ln()).sqrt();
                let (s, c) = (TAU * u[2 + 2 * pair]).sin_cos();
                let i = 2 * pair;
                out[i] = rad * c;
                norm_sq += out[i] * out[i];
                if i + 1 < dim {
                    out[i + 1] = rad * s;
                    norm_sq += out[i + 1] * out[i + 1];
                }
            }
            let scale = if norm_sq > 0.0 {
                r / norm_sq.sqrt()
            } else {
                0.0
            };
            for o in out.iter_mut().take(dim) {
                *o *= scale;
            }
            if norm_sq == 0.0 {
                out[0] = r;
            }
        }
    }
}

/// The unique positive root of `x^(d+1) = x + 1`.
fn kronecker_root(dim: usize) -> f64 {
    let mut x = 2.0f64;
    for _ in 0..64 {
        x = (1.0 + x).powf(1.0 / (dim as f64 + 1.0));
    }
    x
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[inline]
fn to_unit(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

const CHUNK: usize = 2048;

/// Maps `0..count` through `map`, sums per fixed chunk with `fold`, then
/// combines chunk results in order. The result is independent of the thread
/// count.
pub fn reduce_chunks<T, V, M, F, C>(
    count: usize,
    init: impl Fn() -> T + Sync,
    map: M,
    fold: F,
    combine: C,
) -> T
where
    T: Send,
    M: Fn(u64) -> Option<V> + Sync,
    F: Fn(&mut T, V) + Sync,
    C: Fn(&mut T, T),
{
    let chunks: Vec<T> = (0..count.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut acc = init();
            let end = ((c + 1) * CHUNK).min(count);
            for i in c * CHUNK..end {
                if let Some(v) = map(i as u64) {
                    fold(&mut acc, v);
                }
            }
            acc
        })
        .collect();
    let mut total = init();
    for c in chunks {
        combine(&mut total, c);
    }
    total
}

/// Runs `f` on every index and collects the outputs in index order.
pub fn map_indexed<T: Send>(count: usize, f: impl Fn(u64) -> T + Sync + Send) -> Vec<T> {
    (0..count as u64).into_par_iter().map(f).collect()
}

/// Running first and second moments.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: usize,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, v: f64) {
        self.count += 1;
        self.sum += v;
        self.sum_sq += v * v;
    }

    pub fn merge(&mut self, other: Moments) {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            return 0.0;
        }
        self.sum / self.count as f64
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let m = self.mean();
        let var = ((self.sum_sq / n - m * m) * n / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    }
}

/// Binomial standard error of a hit fraction.
pub fn binomial_se(fraction: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    (fraction * (1.0 - fraction) / n as f64).max(0.0).sqrt()
}
