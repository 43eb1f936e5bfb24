//! Dense enumeration of the unit ball by dyadic lattice points.
//!
//! Level `m` contributes the points of `2^-m Z^n` strictly inside the ball
//! that were not emitted at a coarser level, in lexicographic order of their
//! integer coordinates. Level 0 is the origin alone.

use std::num::NonZeroUsize;

use super::Domain;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicPoint {
    pub level: u32,
    /// Integer coordinates; the point is `coords / 2^level`.
    pub coords: Vec<i64>,
}

impl DyadicPoint {
    pub fn to_f64(&self) -> Vec<f64> {
        let scale = (-(self.level as f64)).exp2();
        self.coords.iter().map(|&c| c as f64 * scale).collect()
    }
}

#[derive(Clone, Debug)]
pub struct DyadicSequence {
    dim: usize,
    level: u32,
    cursor: Vec<i64>,
    started: bool,
}

impl DyadicSequence {
    pub fn new(domain: &Domain) -> Self {
        Self {
            dim: domain.dim(),
            level: 0,
            cursor: vec![0; domain.dim()],
            started: false,
        }
    }

    fn reset_level(&mut self) {
        let half = 1i64 << self.level;
        self.cursor.iter_mut().for_each(|c| *c = -half);
    }

    /// Lexicographic increment within `[-2^m, 2^m]^n`; false on wrap-around.
    fn advance(&mut self) -> bool {
        let half = 1i64 << self.level;
        for i in (0..self.dim).rev() {
            if self.cursor[i] < half {
                self.cursor[i] += 1;
                return true;
            }
            self.cursor[i] = -half;
        }
        false
    }

    fn admissible(&self) -> bool {
        let bound = 1i128 << (2 * self.level);
        let norm_sq: i128 = self.cursor.iter().map(|&c| (c as i128) * (c as i128)).sum();
        norm_sq < bound && (self.level == 0 || self.cursor.iter().any(|c| c & 1 == 1))
    }
}

impl Iterator for DyadicSequence {
    type Item = DyadicPoint;

    fn next(&mut self) -> Option<DyadicPoint> {
        if !self.started {
            self.started = true;
            return Some(DyadicPoint {
                level: 0,
                coords: vec![0; self.dim],
            });
        }
        loop {
            if self.level == 0 || !self.advance() {
                self.level += 1;
                assert!(self.level < 52, "dyadic enumeration left exact f64 range");
                self.reset_level();
            }
            if self.admissible() {
                return Some(DyadicPoint {
                    level: self.level,
                    coords: self.cursor.clone(),
                });
            }
        }
    }
}

/// The `index`-th point (1-based) of the dyadic enumeration of the domain.
pub fn dense_sequence(domain: &Domain, index: NonZeroUsize) -> Vec<f64> {
    DyadicSequence::new(domain)
        .nth(index.get() - 1)
        .expect("dyadic enumeration is infinite")
        .to_f64()
}
