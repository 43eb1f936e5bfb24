//! Central-difference validation of the closed-form derivatives.
//!
//! Each summand is differenced in its own frame: a bump `u^k` in the local
//! coordinates of `B_k` (where `r_k` cancels), the lift in absolute
//! coordinates. Differencing the assembled field with one absolute step would
//! be swamped by rounding of the large early bumps inside tiny balls.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{eval_lift_jet, unit_bump_jet, FieldConfig, Jet, Order};
use crate::geometry::AnchoredPoint;
use crate::sampling::QuadratureSpec;

/// Accepted range of `err(h) / err(h/2)`.
pub const FD_RATIO_RANGE: (f64, f64) = (3.5, 4.5);
/// Errors below `FD_FLOOR * max(1, |reference|)` count as converged.
pub const FD_FLOOR: f64 = 1e-12;

/// Minimum distance, in steps, between a stencil and a center.
const CENTER_CLEARANCE: f64 = 8.0;
/// Minimum distance, in steps, between a stencil and a sphere.
const SPHERE_CLEARANCE: f64 = 2.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdPoint {
    pub index: usize,
    /// Summands differenced: containing bumps plus the lift.
    pub terms: usize,
    pub grad_errors: [f64; 2],
    pub hess_errors: [f64; 2],
    /// `None` when every term is below the floor.
    pub grad_ratio: Option<f64>,
    pub hess_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FdReport {
    pub h: f64,
    pub points: Vec<FdPoint>,
    /// Largest `|ratio - 4|` over points above the floor.
    pub max_deviation: f64,
    pub floored: usize,
    pub passed: bool,
}

struct TermErrors {
    grad: [f64; 2],
    hess: [f64; 2],
    scale: f64,
}

fn term_errors(eval: impl Fn(&[f64]) -> Jet, z: &[f64], h: f64) -> TermErrors {
    let n = z.len();
    let reference = eval(z);
    let href = reference.hessian.as_ref().expect("hessian requested");
    let scale = reference
        .gradient
        .iter()
        .chain(href)
        .fold(1.0f64, |m, v| m.max(v.abs()));
    let mut out = TermErrors {
        grad: [0.0; 2],
        hess: [0.0; 2],
        scale,
    };
    let mut p = z.to_vec();
    for (slot, s) in [h, 0.5 * h].into_iter().enumerate() {
        for j in 0..n {
            p[j] = z[j] + s;
            let jp = eval(&p);
            p[j] = z[j] - s;
            let jm = eval(&p);
            p[j] = z[j];
            for i in 0..n {
                let g = (jp.value[i] - jm.value[i]) / (2.0 * s);
                out.grad[slot] = out.grad[slot].max((g - reference.grad(i, j)).abs());
                for k in 0..n {
                    let d = (jp.grad(i, k) - jm.grad(i, k)) / (2.0 * s);
                    out.hess[slot] = out.hess[slot].max((d - href[(i * n + k) * n + j]).abs());
                }
            }
        }
    }
    out
}

fn ratio(errors: [f64; 2], scale: f64) -> Option<f64> {
    let floor = FD_FLOOR * scale;
    if errors[0] < floor || errors[1] < floor {
        None
    } else {
        Some(errors[0] / errors[1])
    }
}

/// Whether a stencil of step `h`, in local units of each ball near `x`,
/// keeps clear of that ball's center and sphere.
pub fn stencil_is_smooth(config: &FieldConfig, x: &AnchoredPoint, h: f64) -> bool {
    let dim = config.dim();
    let eta = config.margin();
    let mut z = [0.0; 16];
    config.candidate_balls(x).iter().all(|&k| {
        config.system().local_coords(x, k as usize, &mut z);
        let tau = z[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        tau >= 1.0 + (SPHERE_CLEARANCE * h).max(eta)
            || (tau > (CENTER_CLEARANCE * h).max(eta)
                && (1.0 - tau).abs() > (SPHERE_CLEARANCE * h).max(eta))
    })
}

/// Up to `count` points inside the balls `B_1..=B_anchors` whose stencils of
/// step `h` are smooth, drawn from `quadrature` in order.
pub fn smooth_sample_points(
    config: &FieldConfig,
    count: usize,
    anchors: usize,
    h: f64,
    quadrature: &QuadratureSpec,
) -> Vec<AnchoredPoint> {
    let dim = config.dim();
    let anchors = anchors.clamp(1, config.truncation()) as u64;
    let mut y = [0.0; 16];
    let mut out = Vec::with_capacity(count);
    for i in 0..(quadrature.samples as u64) {
        if out.len() == count {
            break;
        }
        quadrature.unit_ball(i, dim, &mut y);
        let x = AnchoredPoint::new(
            1 + (i % anchors) as usize,
            y[..dim].iter().map(|v| 0.5 * v).collect(),
        );
        if stencil_is_smooth(config, &x, h) {
            out.push(x);
        }
    }
    out
}

/// Checks second-order convergence of central differences at step `h` and
/// `h/2`. Bump steps are in local units of the bump's ball, lift steps in
/// absolute units.
pub fn finite_difference_check(
    config: &FieldConfig,
    points: &[AnchoredPoint],
    h: f64,
) -> Result<FdReport> {
    if !(h > 0.0 && h <= 0.05) {
        return Err(Error::domain("h", format!("{h} not in (0, 0.05]")));
    }
    let dim = config.dim();
    let mut out = Vec::with_capacity(points.len());
    for (index, x) in points.iter().enumerate() {
        if x.dim() != dim || !stencil_is_smooth(config, x, h) {
            return Err(Error::NonSmoothPoint { index });
        }
        let mut terms = Vec::new();
        let mut z = [0.0; 16];
        for k in config.containing_balls(x) {
            config.system().local_coords(x, k, &mut z);
            terms.push(term_errors(
                |p| {
                    unit_bump_jet(p, Order::Hessian, 0.0)
                        .unwrap_or_else(|| Jet::zeros(dim, Order::Hessian))
                },
                &z[..dim],
                h,
            ));
        }
        let mut pos = [0.0; 16];
        config.system().absolute(x, &mut pos);
        let c = config.lift_scale();
        terms.push(term_errors(
            |p| eval_lift_jet(c, p, Order::Hessian),
            &pos[..dim],
            h,
        ));

        let worst = |pick: fn(&TermErrors) -> [f64; 2]| {
            terms
                .iter()
                .filter_map(|t| ratio(pick(t), t.scale))
                .max_by(|a, b| (a - 4.0).abs().total_cmp(&(b - 4.0).abs()))
        };
        let max2 = |pick: fn(&TermErrors) -> [f64; 2]| {
            terms.iter().fold([0.0f64; 2], |m, t| {
                let e = pick(t);
                [m[0].max(e[0]), m[1].max(e[1])]
            })
        };
        out.push(FdPoint {
            index,
            terms: terms.len(),
            grad_errors: max2(|t| t.grad),
            hess_errors: max2(|t| t.hess),
            grad_ratio: worst(|t| t.grad),
            hess_ratio: worst(|t| t.hess),
        });
    }
    let ratios = || out.iter().flat_map(|p| [p.grad_ratio, p.hess_ratio]);
    let max_deviation = ratios()
        .flatten()
        .fold(0.0f64, |m, r| m.max((r - 4.0).abs()));
    let floored = ratios().filter(Option::is_none).count();
    let passed = ratios()
        .flatten()
        .all(|r| (FD_RATIO_RANGE.0..=FD_RATIO_RANGE.1).contains(&r));
    Ok(FdReport {
        h,
        points: out,
        max_deviation,
        floored,
        passed,
    })
}
