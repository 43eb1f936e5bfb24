//! Averaged integrals of the weight `(1 + |Du|)^(p-2)` over balls, the
//! `A_alpha` ratio, scans along `E_l`, the `p < 2` duality map and the
//! explicit lower bound.

use serde::Serialize;

use crate::dd::DoubleDouble;
use crate::error::{Error, Result};
use crate::field::{check_p, weight_from_norm, FieldConfig, Order};
use crate::geometry::{AnchoredPoint, BallSystem};
use crate::sampling::{map_indexed, reduce_chunks, QuadratureSpec};

pub fn dual_exponent(alpha: f64) -> Result<f64> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(alpha / (alpha - 1.0))
    } else {
        Err(Error::domain("alpha", format!("{alpha} not in (1, inf)")))
    }
}

pub fn p0_map(p: f64, alpha: f64) -> Result<f64> {
    dual_exponent(alpha)?;
    if !(p > 1.0 && p < 2.0) {
        return Err(Error::domain("p", format!("{p} not in (1, 2)")));
    }
    Ok((p - 2.0) / (1.0 - alpha) + 2.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WeightParams {
    pub p: f64,
    pub alpha: f64,
}

impl WeightParams {
    /// `p = 2` is accepted; the weight is then identically one.
    pub fn new(p: f64, alpha: f64) -> Result<Self> {
        check_p(p)?;
        dual_exponent(alpha)?;
        Ok(Self { p, alpha })
    }

    pub fn alpha_dual(&self) -> f64 {
        self.alpha / (self.alpha - 1.0)
    }

    pub fn p0(&self) -> Result<f64> {
        p0_map(self.p, self.alpha)
    }

    /// Exponent `1 - alpha'` of the dual power.
    pub fn dual_power(&self) -> f64 {
        1.0 - self.alpha_dual()
    }
}

/// Ball over which averages are taken.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum SampleBall {
    /// The outer ball `E_l` of the system.
    Outer(usize),
    Explicit {
        center: Vec<f64>,
        radius: f64,
    },
}

impl SampleBall {
    pub fn point(&self, dim: usize, quadrature: &QuadratureSpec, i: u64) -> AnchoredPoint {
        let mut y = [0.0; 16];
        quadrature.unit_ball(i, dim, &mut y);
        match self {
            SampleBall::Outer(l) => AnchoredPoint::new(*l, y[..dim].to_vec()),
            SampleBall::Explicit { center, radius } => AnchoredPoint::absolute(
                center
                    .iter()
                    .zip(&y[..dim])
                    .map(|(c, v)| c + radius * v)
                    .collect(),
            ),
        }
    }

    fn index(&self) -> Option<usize> {
        match self {
            SampleBall::Outer(l) => Some(*l),
            SampleBall::Explicit { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APRatioEstimate {
    pub ball: Option<usize>,
    pub samples: usize,
    pub mean_w: f64,
    pub se_mean_w: f64,
    pub mean_w_dual: f64,
    pub se_mean_w_dual: f64,
    pub ratio: f64,
    pub se_ratio: f64,
}

#[derive(Clone, Copy, Debug, Default)]
struct PairSums {
    n: f64,
    a: f64,
    b: f64,
    aa: f64,
    bb: f64,
    ab: f64,
}

impl PairSums {
    fn push(&mut self, (a, b): (f64, f64)) {
        self.n += 1.0;
        self.a += a;
        self.b += b;
        self.aa += a * a;
        self.bb += b * b;
        self.ab += a * b;
    }

    fn merge(&mut self, o: PairSums) {
        self.n += o.n;
        self.a += o.a;
        self.b += o.b;
        self.aa += o.aa;
        self.bb += o.bb;
        self.ab += o.ab;
    }

    fn estimate(&self, alpha: f64, ball: Option<usize>) -> APRatioEstimate {
        let n = self.n;
        let ma = self.a / n;
        let mb = self.b / n;
        let unbiased = if n > 1.0 { n / (n - 1.0) } else { 0.0 };
        let va = ((self.aa / n - ma * ma) * unbiased).max(0.0);
        let vb = ((self.bb / n - mb * mb) * unbiased).max(0.0);
        let cab = (self.ab / n - ma * mb) * unbiased;
        let ratio = ma * mb.powf(alpha - 1.0);
        // delta method on (mean a, mean b)
        let ga = mb.powf(alpha - 1.0);
        let gb = ma * (alpha - 1.0) * mb.powf(alpha - 2.0);
        let var = (ga * ga * va + gb * gb * vb + 2.0 * ga * gb * cab).max(0.0) / n;
        APRatioEstimate {
            ball,
            samples: n as usize,
            mean_w: ma,
            se_mean_w: (va / n).sqrt(),
            mean_w_dual: mb,
            se_mean_w_dual: (vb / n).sqrt(),
            ratio,
            se_ratio: var.sqrt(),
        }
    }
}

/// `A_alpha` ratio of an arbitrary positive weight over `ball`.
pub fn ap_ratio_with<W>(
    ball: &SampleBall,
    dim: usize,
    alpha: f64,
    quadrature: &QuadratureSpec,
    weight: W,
) -> Result<APRatioEstimate>
where
    W: Fn(&AnchoredPoint) -> f64 + Sync,
{
    let dual = 1.0 - dual_exponent(alpha)?;
    quadrature.validate()?;
    let sums = reduce_chunks(
        quadrature.samples,
        PairSums::default,
        |i| {
            let w = weight(&ball.point(dim, quadrature, i));
            Some((w, w.powf(dual)))
        },
        PairSums::push,
        PairSums::merge,
    );
    Ok(sums.estimate(alpha, ball.index()))
}

fn check_ball(config: &FieldConfig, ball: &SampleBall) -> Result<()> {
    match ball {
        SampleBall::Outer(l) => config.system().check_index(*l),
        SampleBall::Explicit { center, radius } => {
            let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
            if center.len() != config.dim() || !(*radius > 0.0) || norm + radius > 1.0 {
                return Err(Error::domain("ball", "must be a ball inside the unit ball"));
            }
            Ok(())
        }
    }
}

/// `A_alpha` ratio of the field weight `(1 + |Du|)^(p-2)` over `ball`.
pub fn ap_ratio(
    config: &FieldConfig,
    params: &WeightParams,
    ball: &SampleBall,
    quadrature: &QuadratureSpec,
) -> Result<APRatioEstimate> {
    check_ball(config, ball)?;
    let p = params.p;
    ap_ratio_with(ball, config.dim(), params.alpha, quadrature, |x| {
        weight_from_norm(p, config.eval(x, Order::Gradient).sym_gradient().norm)
    })
}

/// Constants of the explicit lower bound for the ratio over `E_l`.
///
/// First factor: `|M_l| >= |B_l|/3` and `|Du| >= c l - 2n l^(2/3)` there.
/// Dual factor: the background of `E_l` has measure at least `K |E_l|` and
/// `1 + |Du| <= 2 + 2n l^(2/3) = C_3 (C_4 + l^(2/3))` on it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LowerBoundConstants {
    pub n: usize,
    pub epsilon: f64,
    /// `1/(3 * 2^n)`
    pub c1: f64,
    /// `1 - 1/(3 * 2^(n-2))`
    pub background: f64,
    /// `eps^3 / (1 - eps)`
    pub c: f64,
    /// `2n`
    pub window_coeff: f64,
    /// `2n`
    pub c3: f64,
    /// `1/n`
    pub c4: f64,
}

impl LowerBoundConstants {
    pub fn new(n: usize, epsilon: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::domain("n", "must be at least 2"));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::domain("epsilon", format!("{epsilon} not in (0, 1)")));
        }
        let nf = n as f64;
        Ok(Self {
            n,
            epsilon,
            c1: 1.0 / (3.0 * 2f64.powi(n as i32)),
            background: 1.0 - 1.0 / (3.0 * 2f64.powi(n as i32 - 2)),
            c: epsilon.powi(3) / (1.0 - epsilon),
            window_coeff: 2.0 * nf,
            c3: 2.0 * nf,
            c4: 1.0 / nf,
        })
    }

    /// Shear lower bound `c l - 2n l^(2/3)` on `M_l`.
    pub fn shear_margin(&self, l: usize) -> f64 {
        let lf = l as f64;
        self.c * lf - self.window_coeff * lf.cbrt().powi(2)
    }

    /// `l* = (2n / c)^3`, beyond which the shear margin is positive.
    pub fn crossover(&self) -> f64 {
        (self.window_coeff / self.c).powi(3)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum BoundStatus {
    Positive {
        value: f64,
    },
    NotYetPositive {
        l: usize,
    },
    /// `p = 2`: the weight is constant and no bound is claimed.
    NotApplicable,
}

impl BoundStatus {
    pub fn value(&self) -> Option<f64> {
        match self {
            BoundStatus::Positive { value } => Some(*value),
            _ => None,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BoundStatus::Positive { .. } => "positive",
            BoundStatus::NotYetPositive { .. } => "not_yet_positive",
            BoundStatus::NotApplicable => "not_applicable",
        }
    }
}

/// Lower bound for the ratio over `E_l` when `p > 2`.
pub fn lower_bound(
    consts: &LowerBoundConstants,
    params: &WeightParams,
    l: usize,
) -> Result<BoundStatus> {
    if !(params.p > 2.0) {
        return Err(Error::domain("p", format!("{} must exceed 2", params.p)));
    }
    let num = consts.shear_margin(l);
    if num <= 0.0 {
        return Ok(BoundStatus::NotYetPositive { l });
    }
    let lf = l as f64;
    let q = num / (consts.c4 + lf.cbrt().powi(2));
    let value = consts.c1
        * consts.background.powf(params.alpha - 1.0)
        * consts.c3.powf(2.0 - params.p)
        * q.powf(params.p - 2.0);
    Ok(BoundStatus::Positive { value })
}

/// Lower bound for any `p`: for `p < 2` the `p > 2` bound at `(p_0, alpha')`
/// raised to `alpha - 1`.
pub fn lower_bound_any(
    consts: &LowerBoundConstants,
    params: &WeightParams,
    l: usize,
) -> Result<BoundStatus> {
    if params.p > 2.0 {
        return lower_bound(consts, params, l);
    }
    if params.p == 2.0 {
        return Ok(BoundStatus::NotApplicable);
    }
    let dual = WeightParams::new(params.p0()?, params.alpha_dual())?;
    Ok(match lower_bound(consts, &dual, l)? {
        BoundStatus::Positive { value } => BoundStatus::Positive {
            value: value.powf(params.alpha - 1.0),
        },
        other => other,
    })
}

/// Ball `Omega_0 = B(center, radius)` restricting a scan.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Subdomain {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Subdomain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        let norm = center.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(radius > 0.0 && norm + radius <= 1.0) {
            return Err(Error::domain(
                "subdomain",
                "must be a ball inside the unit ball",
            ));
        }
        Ok(Self { center, radius })
    }

    /// Whether `E_l` lies inside the subdomain.
    pub fn contains_outer(&self, system: &BallSystem, l: usize) -> bool {
        let b = system.ball_unchecked(l);
        let d2: f64 = b
            .center()
            .iter()
            .zip(&self.center)
            .map(|(c, s)| (*c - DoubleDouble::from_f64(*s)).to_f64().powi(2))
            .sum();
        d2.sqrt() + b.outer_radius() <= self.radius
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APScanRow {
    pub l: usize,
    pub ratio: f64,
    pub se_ratio: f64,
    pub mean_w: f64,
    pub mean_w_dual: f64,
    pub lower_bound: Option<f64>,
    pub bound_status: &'static str,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct APScanReport {
    pub params: WeightParams,
    pub rows: Vec<APScanRow>,
    /// Least-squares slope of `ln ratio` against `ln l`.
    pub slope: Option<f64>,
    /// Number of scanned `E_l` inside the subdomain.
    pub inside: usize,
    pub crossover: f64,
}

/// Sample stream used for `E_l` in scans.
pub fn scan_stream(quadrature: &QuadratureSpec, l: usize) -> QuadratureSpec {
    quadrature.with_stream(quadrature.stream.wrapping_add(l as u64))
}

pub fn ap_scan(
    config: &FieldConfig,
    params: &WeightParams,
    ls: &[usize],
    quadrature: &QuadratureSpec,
    subdomain: Option<&Subdomain>,
    consts: &LowerBoundConstants,
) -> Result<APScanReport> {
    let system = config.system();
    for &l in ls {
        if l == 0 || l > config.truncation() {
            return Err(Error::IndexOutOfRange {
                index: l,
                len: config.truncation(),
            });
        }
    }
    let mut rows = Vec::new();
    for &l in ls {
        if subdomain.is_some_and(|s| !s.contains_outer(system, l)) {
            continue;
        }
        let est = ap_ratio(
            config,
            params,
            &SampleBall::Outer(l),
            &scan_stream(quadrature, l),
        )?;
        let bound = lower_bound_any(consts, params, l)?;
        rows.push(APScanRow {
            l,
            ratio: est.ratio,
            se_ratio: est.se_ratio,
            mean_w: est.mean_w,
            mean_w_dual: est.mean_w_dual,
            lower_bound: bound.value(),
            bound_status: bound.label(),
            samples: est.samples,
        });
    }
    if rows.is_empty() {
        return Err(Error::EmptyScan);
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| ((r.l as f64).ln(), r.ratio.ln()))
        .collect();
    Ok(APScanReport {
        params: *params,
        inside: rows.len(),
        slope: regression_slope(&pts),
        rows,
        crossover: consts.crossover(),
    })
}

pub fn regression_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DualityCheck {
    pub p: f64,
    pub alpha: f64,
    pub p0: f64,
    pub direct: f64,
    pub transformed: f64,
    pub deviation: f64,
}

/// Computes the ratio for `p < 2` directly and through `p_0` on the same
/// `|Du|` samples.
pub fn duality_from_norms(params: &WeightParams, norms: &[f64]) -> Result<DualityCheck> {
    let p0 = params.p0()?;
    let (p, alpha, alpha_dual) = (params.p, params.alpha, params.alpha_dual());
    let n = norms.len() as f64;
    let (mut a, mut b, mut c, mut d) = (0.0, 0.0, 0.0, 0.0);
    for &g in norms {
        let w = weight_from_norm(p, g);
        a += w;
        b += w.powf(1.0 - alpha_dual);
        c += (1.0 + g).powf((p0 - 2.0) * (1.0 - alpha));
        d += (1.0 + g).powf(p0 - 2.0);
    }
    let direct = (a / n) * (b / n).powf(alpha - 1.0);
    let transformed = ((c / n).powf(alpha_dual - 1.0) * (d / n)).powf(alpha - 1.0);
    Ok(DualityCheck {
        p,
        alpha,
        p0,
        direct,
        transformed,
        deviation: ((direct - transformed) / direct).abs(),
    })
}

pub fn duality_identity_check(
    config: &FieldConfig,
    params: &WeightParams,
    ball: &SampleBall,
    quadrature: &QuadratureSpec,
) -> Result<DualityCheck> {
    params.p0()?;
    check_ball(config, ball)?;
    quadrature.validate()?;
    let norms = map_indexed(quadrature.samples, |i| {
        let x = ball.point(config.dim(), quadrature, i);
        config.eval(&x, Order::Gradient).sym_gradient().norm
    });
    duality_from_norms(params, &norms)
}
