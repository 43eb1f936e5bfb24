use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{truncation_tail_bound, AnchoredPoint, BallIndex, BallSystem, Domain};
use crate::error::{Error, Result};
use crate::sampling::{binomial_se, reduce_chunks, QuadratureSpec};

/// Relative slack on the closed inequalities defining `G_l`.
const CLOSED_SLACK: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionParams {
    pub epsilon: f64,
}

impl RegionParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain("epsilon", format!("{epsilon} not in (0, 1)")));
        }
        Ok(Self { epsilon })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    /// Outer ball `E_l`.
    Outer,
    /// Inner ball `B_l`.
    Inner,
    /// Shear region `G_l`.
    Good,
    /// `G_l` minus the later inner balls `B_k`, `l < k <= L`.
    Marked,
    /// `E_l` minus the inner balls `B_k`, `l <= k <= L`.
    Background,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::Outer => "E",
            Region::Inner => "B",
            Region::Good => "G",
            Region::Marked => "M",
            Region::Background => "E\\B",
        }
    }

    /// Radius of the sampling ball in units of `R_l`.
    pub fn reference_radius(self) -> f64 {
        match self {
            Region::Outer | Region::Background => 1.0,
            Region::Inner | Region::Good | Region::Marked => 0.5,
        }
    }
}

/// Membership in `G` from local coordinates `z = (x - x^l)/r_l`.
pub fn in_good_local(z: &[f64], epsilon: f64) -> bool {
    let norm_sq: f64 = z.iter().map(|v| v * v).sum();
    let lo = epsilon * (1.0 - CLOSED_SLACK);
    let hi = (1.0 - epsilon) * (1.0 + CLOSED_SLACK);
    norm_sq < 1.0 && z[0].abs() >= lo && z[1].abs() >= lo && norm_sq <= hi * hi
}

/// Largest `epsilon` for which `z` (inside the unit ball) lies in `G`.
fn good_margin(z: &[f64]) -> f64 {
    let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
    z[0].abs().min(z[1].abs()).min(1.0 - norm)
}

fn norm_sq(z: &[f64]) -> f64 {
    z.iter().map(|v| v * v).sum()
}

/// Point membership by direct scan over the balls; see [`RegionOracle`] for
/// the indexed version used in batch estimates.
pub fn region_membership(
    system: &BallSystem,
    params: &RegionParams,
    l: usize,
    x: &AnchoredPoint,
    region: Region,
) -> Result<bool> {
    system.check_index(l)?;
    let dim = system.dim();
    let mut z = [0.0; 16];
    system.local_coords(x, l, &mut z);
    let z = &z[..dim];
    let in_later = |from: usize| {
        (from..=system.len()).any(|k| {
            let mut w = [0.0; 16];
            system.local_coords(x, k, &mut w);
            norm_sq(&w[..dim]) < 1.0
        })
    };
    Ok(match region {
        Region::Outer => norm_sq(z) < 4.0,
        Region::Inner => norm_sq(z) < 1.0,
        Region::Good => in_good_local(z, params.epsilon),
        Region::Marked => in_good_local(z, params.epsilon) && !in_later(l + 1),
        Region::Background => norm_sq(z) < 4.0 && !in_later(l),
    })
}

/// Largest `epsilon` on `0.01, 0.02, ..., 0.40` with the estimated
/// `|G|/|B| >= 2/3 + 3 sigma` on a unit reference ball.
pub fn calibrate_epsilon(domain: &Domain, quadrature: &QuadratureSpec) -> Result<RegionParams> {
    quadrature.validate()?;
    const GRID: usize = 40;
    let dim = domain.dim();
    let counts = reduce_chunks(
        quadrature.samples,
        || [0usize; GRID],
        |i| {
            let mut z = [0.0; 16];
            quadrature.unit_ball(i, dim, &mut z);
            Some(good_margin(&z[..dim]))
        },
        |acc, margin| {
            for (g, c) in acc.iter_mut().enumerate() {
                let eps = (g + 1) as f64 / 100.0;
                if eps <= margin {
                    *c += 1;
                }
            }
        },
        |a, b| a.iter_mut().zip(b).for_each(|(x, y)| *x += y),
    );
    let n = quadrature.samples;
    let mut best = 0.0f64;
    let mut chosen = None;
    for (g, &c) in counts.iter().enumerate() {
        let f = c as f64 / n as f64;
        best = best.max(f);
        if f >= 2.0 / 3.0 + 3.0 * binomial_se(f, n) {
            chosen = Some((g + 1) as f64 / 100.0);
        }
    }
    match chosen {
        Some(eps) => RegionParams::new(eps),
        None => Err(Error::CalibrationFailed { best }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegionReport {
    pub region: Region,
    pub ball: usize,
    pub fraction: f64,
    pub std_error: f64,
    pub samples: usize,
    /// For `M`, a bound on `sum_{k>L} |B_k| / |B_l|` neglected by truncation.
    pub neglected_tail: Option<f64>,
}

/// Indexed membership tests over a truncated system.
#[derive(Clone, Debug)]
pub struct RegionOracle {
    system: Arc<BallSystem>,
    index: BallIndex,
    params: RegionParams,
}

impl RegionOracle {
    pub fn new(system: Arc<BallSystem>, params: RegionParams) -> Self {
        let index = BallIndex::new(&system, system.len());
        Self {
            system,
            index,
            params,
        }
    }

    pub fn system(&self) -> &BallSystem {
        &self.system
    }

    pub fn params(&self) -> &RegionParams {
        &self.params
    }

    /// Whether `x` lies in some `B_k` with `k >= from`.
    fn in_later(&self, x: &AnchoredPoint, from: usize) -> bool {
        let dim = self.system.dim();
        let mut w = [0.0; 16];
        self.index
            .candidates(&self.system, x)
            .iter()
            .filter(|&&k| k as usize >= from)
            .any(|&k| {
                self.system.local_coords(x, k as usize, &mut w);
                norm_sq(&w[..dim]) < 1.0
            })
    }

    pub fn contains(&self, l: usize, x: &AnchoredPoint, region: Region) -> Result<bool> {
        self.system.check_index(l)?;
        Ok(self.contains_unchecked(l, x, region))
    }

    pub(crate) fn contains_unchecked(&self, l: usize, x: &AnchoredPoint, region: Region) -> bool {
        let dim = self.system.dim();
        let mut z = [0.0; 16];
        self.system.local_coords(x, l, &mut z);
        let z = &z[..dim];
        match region {
            Region::Outer => norm_sq(z) < 4.0,
            Region::Inner => norm_sq(z) < 1.0,
            Region::Good => in_good_local(z, self.params.epsilon),
            Region::Marked => in_good_local(z, self.params.epsilon) && !self.in_later(x, l + 1),
            Region::Background => norm_sq(z) < 4.0 && !self.in_later(x, l),
        }
    }

    /// Sample `i` of the region's reference ball, anchored at ball `l`.
    pub fn reference_sample(
        &self,
        l: usize,
        region: Region,
        quadrature: &QuadratureSpec,
        i: u64,
    ) -> AnchoredPoint {
        let dim = self.system.dim();
        let mut y = [0.0; 16];
        quadrature.unit_ball(i, dim, &mut y);
        let s = region.reference_radius();
        AnchoredPoint::new(l, y[..dim].iter().map(|v| v * s).collect())
    }

    /// Hit fraction of `region` in its reference ball.
    pub fn estimate_fraction(
        &self,
        l: usize,
        region: Region,
        quadrature: &QuadratureSpec,
    ) -> Result<RegionReport> {
        self.system.check_index(l)?;
        quadrature.validate()?;
        let hits = reduce_chunks(
            quadrature.samples,
            || 0usize,
            |i| {
                let x = self.reference_sample(l, region, quadrature, i);
                Some(if self.contains_unchecked(l, &x, region) {
                    1.0
                } else {
                    0.0
                })
            },
            |acc, v| *acc += v as usize,
            |a, b| *a += b,
        );
        let n = quadrature.samples;
        let fraction = hits as f64 / n as f64;
        let neglected_tail = match region {
            Region::Marked => Some(truncation_tail_bound(&self.system, l)?),
            _ => None,
        };
        Ok(RegionReport {
            region,
            ball: l,
            fraction,
            std_error: binomial_se(fraction, n),
            samples: n,
            neglected_tail,
        })
    }
}

pub fn estimate_region_fraction(
    system: Arc<BallSystem>,
    params: RegionParams,
    l: usize,
    region: Region,
    quadrature: &QuadratureSpec,
) -> Result<RegionReport> {
    RegionOracle::new(system, params).estimate_fraction(l, region, quadrature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_ball_system;

    fn system() -> Arc<BallSystem> {
        Arc::new(build_ball_system(&Domain::unit_ball(2).unwrap(), 0.49, 200).unwrap())
    }

    #[test]
    fn center_is_in_e_and_b_not_g() {
        let s = system();
        let p = RegionParams::new(0.07).unwrap();
        let x = AnchoredPoint::new(10, vec![0.0, 0.0]);
        assert!(region_membership(&s, &p, 10, &x, Region::Outer).unwrap());
        assert!(region_membership(&s, &p, 10, &x, Region::Inner).unwrap());
        assert!(!region_membership(&s, &p, 10, &x, Region::Good).unwrap());
    }

    #[test]
    fn diagonal_annulus_point_is_in_g() {
        let s = system();
        for eps in [0.01, 0.07, 0.2, 0.4] {
            let p = RegionParams::new(eps).unwrap();
            let c = (1.0 - eps) / std::f64::consts::SQRT_2;
            // offsets are in units of R = 2r
            let x = AnchoredPoint::new(7, vec![c / 2.0, c / 2.0]);
            assert!(
                region_membership(&s, &p, 7, &x, Region::Good).unwrap(),
                "eps {eps}"
            );
        }
    }

    #[test]
    fn outside_outer_ball_is_in_nothing() {
        let s = system();
        let p = RegionParams::new(0.07).unwrap();
        let x = AnchoredPoint::new(12, vec![1.2, 0.3]);
        for r in [
            Region::Outer,
            Region::Inner,
            Region::Good,
            Region::Marked,
            Region::Background,
        ] {
            assert!(!region_membership(&s, &p, 12, &x, r).unwrap());
        }
    }

    #[test]
    fn index_out_of_range() {
        let s = system();
        let p = RegionParams::new(0.07).unwrap();
        let x = AnchoredPoint::new(0, vec![0.0, 0.0]);
        assert!(matches!(
            region_membership(&s, &p, 201, &x, Region::Inner),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn oracle_agrees_with_scan() {
        let s = system();
        let p = RegionParams::new(0.07).unwrap();
        let oracle = RegionOracle::new(s.clone(), p);
        let q = QuadratureSpec::pseudo_random(400, 2);
        for l in [1, 2, 5, 30, 150] {
            for r in [Region::Marked, Region::Background] {
                for i in 0..400 {
                    let x = oracle.reference_sample(l, r, &q, i);
                    assert_eq!(
                        oracle.contains(l, &x, r).unwrap(),
                        region_membership(&s, &p, l, &x, r).unwrap()
                    );
                }
            }
        }
    }

    #[test]
    fn calibration_in_the_plane_picks_seven_hundredths() {
        let d = Domain::unit_ball(2).unwrap();
        let p = calibrate_epsilon(&d, &QuadratureSpec::low_discrepancy(100_000, 1)).unwrap();
        assert_eq!(p.epsilon, 0.07);
    }

    #[test]
    fn outer_fraction_is_one() {
        let s = system();
        let r = estimate_region_fraction(
            s,
            RegionParams::new(0.07).unwrap(),
            20,
            Region::Outer,
            &QuadratureSpec::low_discrepancy(5000, 1),
        )
        .unwrap();
        assert_eq!(r.fraction, 1.0);
        assert_eq!(r.std_error, 0.0);
    }
}
