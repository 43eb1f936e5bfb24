//! Uniform-grid lookup of the balls that may contain a point.

use super::{AnchoredPoint, BallSystem};

/// Bounding-box padding, absorbs rounding of approximate absolute positions.
const PAD: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct BallIndex {
    dim: usize,
    per_axis: usize,
    truncation: usize,
    cells: Vec<Vec<u32>>,
}

fn cells_per_axis(dim: usize) -> usize {
    match dim {
        2 => 128,
        3 => 32,
        4 => 12,
        5 => 8,
        _ => 4,
    }
}

impl BallIndex {
    /// Indexes the outer balls `E_1..=E_truncation`.
    pub fn new(system: &BallSystem, truncation: usize) -> Self {
        let dim = system.dim();
        let per_axis = cells_per_axis(dim);
        let truncation = truncation.min(system.len());
        let mut cells = vec![Vec::new(); per_axis.pow(dim as u32)];
        let mut lo = vec![0usize; dim];
        let mut hi = vec![0usize; dim];
        for k in 1..=truncation {
            let b = system.ball_unchecked(k);
            let c = b.center_f64();
            let r = b.outer_radius() * (1.0 + 1e-9) + PAD;
            for i in 0..dim {
                lo[i] = Self::axis_cell(per_axis, c[i] - r);
                hi[i] = Self::axis_cell(per_axis, c[i] + r);
            }
            let mut cur = lo.clone();
            'cells: loop {
                let flat = cur.iter().fold(0, |acc, &v| acc * per_axis + v);
                cells[flat].push(k as u32);
                for axis in (0..dim).rev() {
                    if cur[axis] < hi[axis] {
                        cur[axis] += 1;
                        continue 'cells;
                    }
                    cur[axis] = lo[axis];
                }
                break;
            }
        }
        Self {
            dim,
            per_axis,
            truncation,
            cells,
        }
    }

    fn axis_cell(per_axis: usize, v: f64) -> usize {
        let t = ((v + 1.0) * 0.5 * per_axis as f64).floor();
        t.clamp(0.0, per_axis as f64 - 1.0) as usize
    }

    pub fn truncation(&self) -> usize {
        self.truncation
    }

    /// Ascending indices of the balls whose outer ball may contain `x`.
    pub fn candidates(&self, system: &BallSystem, x: &AnchoredPoint) -> &[u32] {
        let mut pos = [0.0; 16];
        system.absolute(x, &mut pos);
        self.candidates_at(&pos[..self.dim])
    }

    pub fn candidates_at(&self, pos: &[f64]) -> &[u32] {
        let flat = pos.iter().fold(0, |acc, &v| {
            acc * self.per_axis + Self::axis_cell(self.per_axis, v)
        });
        &self.cells[flat]
    }
}
