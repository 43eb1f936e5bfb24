use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dense::DyadicSequence;
use super::{AnchoredPoint, Domain, MAX_OFFSET};
use crate::dd::{self, DoubleDouble};
use crate::error::{Error, Result};

/// Radii below this keep fewer than 40 significant bits as subnormal `f64`.
pub const RADIUS_FLOOR: f64 = f64::from_bits(1 << 40); // 2^-1034

/// Relative slack of the window-disjointness check.
pub const DISJOINT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Ball {
    center: Vec<DoubleDouble>,
    outer: f64,
}

impl Ball {
    pub fn new(center: Vec<DoubleDouble>, outer_radius: f64) -> Self {
        Self {
            center,
            outer: outer_radius,
        }
    }

    pub fn center(&self) -> &[DoubleDouble] {
        &self.center
    }

    pub fn center_f64(&self) -> Vec<f64> {
        self.center.iter().map(|c| c.to_f64()).collect()
    }

    /// Radius `R` of the outer ball `E`.
    pub fn outer_radius(&self) -> f64 {
        self.outer
    }

    /// Radius `r = R/2` of the inner ball `B`.
    pub fn inner_radius(&self) -> f64 {
        self.outer * 0.5
    }
}

/// Which term of `min(rho R_l, d/2)` fixed a radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusRule {
    Contraction,
    Clearance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BuildStep {
    pub ball: usize,
    /// 1-based position of the center in the dyadic enumeration.
    pub sequence_index: usize,
    pub center: Vec<f64>,
    pub radius: f64,
    pub rule: RadiusRule,
    /// Clearance `d`: distance to the boundary and to the blocking balls.
    pub clearance: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct BuildOptions {
    /// Dense-sequence candidates examined per step before giving up.
    pub search_budget: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            search_budget: 10_000_000,
        }
    }
}

/// `floor(cbrt(l))` in exact integer arithmetic.
pub fn icbrt(l: usize) -> usize {
    let mut k = (l as f64).cbrt().round() as usize;
    while k * k * k > l {
        k -= 1;
    }
    while (k + 1) * (k + 1) * (k + 1) <= l {
        k += 1;
    }
    k
}

#[derive(Clone, Debug, PartialEq)]
pub struct BallSystem {
    domain: Domain,
    rho: f64,
    balls: Vec<Ball>,
    origin: Vec<DoubleDouble>,
}

pub(crate) fn validate_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(Error::domain("rho", format!("{rho} not in (0, 1/2)")));
    }
    Ok(())
}

impl BallSystem {
    /// Assembles a system from explicit balls without checking the
    /// construction invariants; the `check_*` functions report violations.
    pub fn from_balls(domain: Domain, rho: f64, balls: Vec<Ball>) -> Result<Self> {
        validate_rho(rho)?;
        for (i, b) in balls.iter().enumerate() {
            if b.center.len() != domain.dim() {
                return Err(Error::Malformed(format!(
                    "ball {} has {} coordinates, expected {}",
                    i + 1,
                    b.center.len(),
                    domain.dim()
                )));
            }
            if !(b.outer > 0.0 && b.outer.is_finite()) || !b.center.iter().all(|c| c.is_finite()) {
                return Err(Error::Malformed(format!(
                    "ball {} has invalid radius or center",
                    i + 1
                )));
            }
        }
        Ok(Self {
            domain,
            rho,
            balls,
            origin: vec![DoubleDouble::ZERO; domain.dim()],
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn balls(&self) -> &[Ball] {
        &self.balls
    }

    /// Ball `k`, 1-based.
    pub fn ball(&self, k: usize) -> Result<&Ball> {
        if k == 0 || k > self.balls.len() {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.balls.len(),
            });
        }
        Ok(&self.balls[k - 1])
    }

    pub(crate) fn ball_unchecked(&self, k: usize) -> &Ball {
        &self.balls[k - 1]
    }

    pub fn check_index(&self, k: usize) -> Result<()> {
        self.ball(k).map(|_| ())
    }

    /// The first `count` balls as a system of their own.
    pub fn truncated(&self, count: usize) -> BallSystem {
        let mut s = self.clone();
        s.balls.truncate(count);
        s
    }

    /// Mutable radius access for fault injection in tests and tools.
    pub fn set_outer_radius(&mut self, k: usize, radius: f64) -> Result<()> {
        self.check_index(k)?;
        self.balls[k - 1].outer = radius;
        Ok(())
    }

    pub fn anchor_scale(&self, anchor: usize) -> f64 {
        if anchor == 0 {
            1.0
        } else {
            self.balls[anchor - 1].outer
        }
    }

    pub fn anchor_center(&self, anchor: usize) -> &[DoubleDouble] {
        if anchor == 0 {
            &self.origin
        } else {
            &self.balls[anchor - 1].center
        }
    }

    /// Validates anchor index and offset size.
    pub fn anchored(&self, anchor: usize, offset: Vec<f64>) -> Result<AnchoredPoint> {
        if anchor > self.balls.len() {
            return Err(Error::IndexOutOfRange {
                index: anchor,
                len: self.balls.len(),
            });
        }
        if offset.len() != self.dim() {
            return Err(Error::domain(
                "offset",
                format!("expected {} coordinates", self.dim()),
            ));
        }
        let p = AnchoredPoint::new(anchor, offset);
        if p.offset_norm() > MAX_OFFSET {
            return Err(Error::domain(
                "offset",
                format!("|y| = {} exceeds {MAX_OFFSET}", p.offset_norm()),
            ));
        }
        Ok(p)
    }

    /// `x - x^k` in double-double, `k = 0` meaning the origin.
    pub fn displacement_dd(&self, x: &AnchoredPoint, k: usize, out: &mut [DoubleDouble]) {
        let ca = self.anchor_center(x.anchor);
        let ck = self.anchor_center(k);
        let s = self.anchor_scale(x.anchor);
        for i in 0..self.dim() {
            out[i] = (ca[i] - ck[i]) + DoubleDouble::from_product(s, x.offset[i]);
        }
    }

    /// `x - x^k` rounded once to working precision.
    pub fn displacement(&self, x: &AnchoredPoint, k: usize, out: &mut [f64]) {
        if k == x.anchor {
            let s = self.anchor_scale(k);
            for (o, y) in out.iter_mut().zip(&x.offset) {
                *o = s * y;
            }
            return;
        }
        let mut d = [DoubleDouble::ZERO; 16];
        self.displacement_dd(x, k, &mut d);
        for (o, v) in out.iter_mut().zip(&d[..self.dim()]) {
            *o = v.to_f64();
        }
    }

    /// Local coordinates `(x - x^k) / r_k` of ball `k >= 1`.
    ///
    /// For the anchor ball itself this is `2y` exactly, independent of how
    /// small `R_k` is.
    pub fn local_coords(&self, x: &AnchoredPoint, k: usize, out: &mut [f64]) {
        if k == x.anchor {
            for (o, y) in out.iter_mut().zip(&x.offset) {
                *o = 2.0 * y;
            }
            return;
        }
        self.displacement(x, k, out);
        let r = self.balls[k - 1].inner_radius();
        for o in out.iter_mut().take(self.dim()) {
            *o /= r;
        }
    }

    /// Absolute position rounded to working precision.
    pub fn absolute(&self, x: &AnchoredPoint, out: &mut [f64]) {
        self.displacement(x, 0, out);
    }

    /// Re-expresses a point relative to another anchor.
    pub fn reanchor(&self, x: &AnchoredPoint, anchor: usize) -> Result<AnchoredPoint> {
        let mut d = vec![0.0; self.dim()];
        if anchor > self.balls.len() {
            return Err(Error::IndexOutOfRange {
                index: anchor,
                len: self.balls.len(),
            });
        }
        self.displacement(x, anchor, &mut d);
        let s = self.anchor_scale(anchor);
        d.iter_mut().for_each(|v| *v /= s);
        Ok(AnchoredPoint::new(anchor, d))
    }

    /// Squared distance between centers `k` and `l` in double-double.
    pub fn center_distance_sq(&self, k: usize, l: usize) -> DoubleDouble {
        let a = self.anchor_center(k);
        let b = self.anchor_center(l);
        let mut acc = DoubleDouble::ZERO;
        for i in 0..self.dim() {
            acc = acc + (a[i] - b[i]).square();
        }
        acc
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(&SystemFile::from(self))?;
        crate::report::write_atomic(path, text.as_bytes())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&SystemFile::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SystemFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// On-disk form. Centers are split into hi/lo parts so the double-double
/// value round-trips exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SystemFile {
    pub n: usize,
    pub rho: f64,
    pub balls: Vec<BallRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BallRecord {
    pub center_hi: Vec<f64>,
    pub center_lo: Vec<f64>,
    #[serde(rename = "R")]
    pub radius: f64,
}

impl From<&BallSystem> for SystemFile {
    fn from(s: &BallSystem) -> Self {
        Self {
            n: s.dim(),
            rho: s.rho,
            balls: s
                .balls
                .iter()
                .map(|b| BallRecord {
                    center_hi: b.center.iter().map(|c| c.hi).collect(),
                    center_lo: b.center.iter().map(|c| c.lo).collect(),
                    radius: b.outer,
                })
                .collect(),
        }
    }
}

impl TryFrom<SystemFile> for BallSystem {
    type Error = Error;

    fn try_from(f: SystemFile) -> Result<Self> {
        let domain = Domain::unit_ball(f.n)?;
        let balls = f
            .balls
            .into_iter()
            .enumerate()
            .map(|(i, b)| {
                if b.center_hi.len() != f.n || b.center_lo.len() != f.n {
                    return Err(Error::Malformed(format!(
                        "ball {} center has wrong length",
                        i + 1
                    )));
                }
                let center = b
                    .center_hi
                    .iter()
                    .zip(&b.center_lo)
                    .map(|(&hi, &lo)| DoubleDouble { hi, lo })
                    .collect();
                Ok(Ball::new(center, b.radius))
            })
            .collect::<Result<Vec<_>>>()?;
        BallSystem::from_balls(domain, f.rho, balls)
    }
}

struct Pending {
    index: usize,
    point: Vec<DoubleDouble>,
    blocker: usize,
}

enum Probe {
    Blocked(usize),
    Outside,
    Free(f64),
}

/// Tests a candidate against `G_l` and returns its clearance.
fn probe(
    domain: &Domain,
    balls: &[Ball],
    window: std::ops::RangeInclusive<usize>,
    x: &[DoubleDouble],
) -> Probe {
    let to_boundary = domain.distance_to_boundary(x);
    if to_boundary <= 0.0 {
        return Probe::Outside;
    }
    let mut clearance = to_boundary;
    let mut nearest = 0;
    let mut diff = [DoubleDouble::ZERO; 16];
    for k in window {
        let b = &balls[k - 1];
        for (i, d) in diff.iter_mut().take(x.len()).enumerate() {
            *d = x[i] - b.center[i];
        }
        let dist_sq = dd::norm_sq(&diff[..x.len()]);
        if dist_sq <= DoubleDouble::from_product(b.outer, b.outer) {
            return Probe::Blocked(k);
        }
        let gap = dist_sq.to_f64().sqrt() - b.outer;
        if gap < clearance {
            clearance = gap;
            nearest = k;
        }
    }
    match (clearance > 0.0, nearest) {
        (true, _) => Probe::Free(clearance),
        (false, 0) => Probe::Outside,
        // separated in double-double but not after rounding the gap
        (false, k) => Probe::Blocked(k),
    }
}

pub fn build_ball_system(domain: &Domain, rho: f64, count: usize) -> Result<BallSystem> {
    build_ball_system_logged(domain, rho, count, BuildOptions::default()).map(|(s, _)| s)
}

/// Greedy construction: each new center is the earliest unused dyadic point
/// outside the closures of the window balls `E_k`, `floor(cbrt(l+1)) <= k <= l`,
/// and the new radius is `min(rho R_l, d/2)` with `d` the clearance to the
/// boundary and to those balls.
pub fn build_ball_system_logged(
    domain: &Domain,
    rho: f64,
    count: usize,
    options: BuildOptions,
) -> Result<(BallSystem, Vec<BuildStep>)> {
    validate_rho(rho)?;
    if count == 0 {
        return Err(Error::domain("count", "need at least one ball"));
    }
    let dim = domain.dim();
    let mut seq = DyadicSequence::new(domain).enumerate().map(|(i, p)| {
        let x: Vec<DoubleDouble> = p.to_f64().into_iter().map(DoubleDouble::from_f64).collect();
        (i + 1, x)
    });
    let mut balls: Vec<Ball> = Vec::with_capacity(count);
    let mut log = Vec::with_capacity(count);
    let mut pending: Vec<Pending> = Vec::new();

    while balls.len() < count {
        let l = balls.len();
        let window = icbrt(l + 1)..=l;
        let mut chosen = None;
        let mut examined = 0usize;

        // earlier skipped points take precedence over the frontier
        let mut slot = 0;
        while slot < pending.len() {
            let p = &mut pending[slot];
            if window.contains(&p.blocker) {
                slot += 1;
                continue;
            }
            examined += 1;
            match probe(domain, &balls, window.clone(), &p.point) {
                Probe::Free(d) => {
                    let p = pending.remove(slot);
                    chosen = Some((p.index, p.point, d));
                    break;
                }
                Probe::Blocked(k) => {
                    p.blocker = k;
                    slot += 1;
                }
                Probe::Outside => {
                    pending.remove(slot);
                }
            }
        }

        while chosen.is_none() {
            if examined >= options.search_budget {
                return Err(Error::CandidateSearchOverflow {
                    ball: l + 1,
                    budget: options.search_budget,
                });
            }
            examined += 1;
            let (index, x) = seq.next().expect("dyadic enumeration is infinite");
            match probe(domain, &balls, window.clone(), &x) {
                Probe::Free(d) => chosen = Some((index, x, d)),
                Probe::Blocked(k) => pending.push(Pending {
                    index,
                    point: x,
                    blocker: k,
                }),
                Probe::Outside => {}
            }
        }

        let (index, center, clearance) = chosen.expect("loop exits with a candidate");
        let cap = if l == 0 {
            rho
        } else {
            rho * balls[l - 1].outer
        };
        let (radius, rule) = if cap <= 0.5 * clearance {
            (cap, RadiusRule::Contraction)
        } else {
            (0.5 * clearance, RadiusRule::Clearance)
        };
        if !(radius >= RADIUS_FLOOR) {
            return Err(Error::PrecisionExhausted {
                ball: l + 1,
                radius,
            });
        }
        log.push(BuildStep {
            ball: l + 1,
            sequence_index: index,
            center: center.iter().map(|c| c.to_f64()).collect(),
            radius,
            rule,
            clearance,
        });
        balls.push(Ball::new(center, radius));
    }
    debug_assert!(balls.iter().all(|b| b.center.len() == dim));
    Ok((BallSystem::from_balls(*domain, rho, balls)?, log))
}

/// Pairs `(k, l)` with `floor(cbrt(l)) <= k < l` whose outer balls are not
/// separated by more than `(R_k + R_l)(1 + 1e-12)`.
pub fn check_window_disjointness(system: &BallSystem) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for l in 2..=system.len() {
        let rl = system.ball_unchecked(l).outer;
        for k in icbrt(l)..l {
            let rk = system.ball_unchecked(k).outer;
            let sum = (rk + rl) * (1.0 + DISJOINT_TOL);
            if system.center_distance_sq(k, l) <= DoubleDouble::from_product(sum, sum) {
                out.push((k, l));
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    pub holds: bool,
    pub worst_ratio: f64,
    /// Index `k` of the worst ratio `R_{k+1} / R_k`.
    pub worst_index: usize,
    pub first_inner_radius: f64,
}

/// `max_k R_{k+1}/R_k <= rho` and `r_1 <= rho`, with relative slack 1e-12.
pub fn check_radius_decay(system: &BallSystem) -> Result<DecayReport> {
    if system.len() < 2 {
        return Err(Error::InsufficientBalls {
            needed: 2,
            found: system.len(),
        });
    }
    let mut worst = 0.0f64;
    let mut worst_index = 1;
    for k in 1..system.len() {
        let ratio = system.ball_unchecked(k + 1).outer / system.ball_unchecked(k).outer;
        if ratio > worst {
            worst = ratio;
            worst_index = k;
        }
    }
    let rho = system.rho;
    let r1 = system.ball_unchecked(1).inner_radius();
    Ok(DecayReport {
        holds: worst <= rho * (1.0 + DISJOINT_TOL) && r1 <= rho,
        worst_ratio: worst,
        worst_index,
        first_inner_radius: r1,
    })
}

/// Balls whose outer ball is not strictly inside the domain.
pub fn check_containment(system: &BallSystem) -> Vec<usize> {
    (1..=system.len())
        .filter(|&k| {
            let b = system.ball_unchecked(k);
            system.domain.distance_to_boundary(&b.center) <= b.outer
        })
        .collect()
}

/// Max over probe points `z` of the distance to the nearest center.
pub fn covering_radius(
    system: &BallSystem,
    probes: &crate::sampling::QuadratureSpec,
) -> Result<f64> {
    if system.is_empty() {
        return Err(Error::InsufficientBalls {
            needed: 1,
            found: 0,
        });
    }
    probes.validate()?;
    let dim = system.dim();
    let centers: Vec<Vec<f64>> = system.balls.iter().map(|b| b.center_f64()).collect();
    let worst = crate::sampling::reduce_chunks(
        probes.samples,
        || 0.0f64,
        |i| {
            let mut z = [0.0; 16];
            probes.unit_ball(i, dim, &mut z);
            let nearest = centers
                .iter()
                .map(|c| {
                    c.iter()
                        .zip(&z)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min);
            Some(nearest.sqrt())
        },
        |m, v| *m = m.max(v),
        |a, b| *a = a.max(b),
    );
    Ok(worst)
}

/// `sum_{k=l+1}^{L} |B_k| / |B_l|` for the built radii.
pub fn tail_measure_ratio(system: &BallSystem, l: usize) -> Result<f64> {
    let rl = system.ball(l)?.outer;
    let n = system.dim() as i32;
    Ok(system.balls[l..]
        .iter()
        .map(|b| (b.outer / rl).powi(n))
        .sum())
}

/// Bound on `sum_{k>L} |B_k| / |B_l|` for the part of the system beyond its
/// truncation: `(r_L/r_l)^n rho^n / (1 - rho^n)`.
pub fn truncation_tail_bound(system: &BallSystem, l: usize) -> Result<f64> {
    let rl = system.ball(l)?.outer;
    let last = system
        .balls
        .last()
        .expect("nonempty after index check")
        .outer;
    let n = system.dim() as i32;
    let q = system.rho.powi(n);
    Ok((last / rl).powi(n) * q / (1.0 - q))
}
