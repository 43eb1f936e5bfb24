//! `I_L = int (1 + |Du|)^(p-2) |grad^2 u|^2` for partial sums `u = sum_{k<=L} u^k + w`.
//!
//! Stratified estimator: stratum `k` samples `B_k` uniformly and weights each
//! point by `1/c(x)`, `c(x)` being the number of balls `B_j`, `j <= L`, that
//! contain it; a final stratum samples the unit ball and keeps points outside
//! every `B_j`. Stratum `k` always uses sample stream `k`, so different
//! truncations share samples.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{check_p, weight_from_norm, FieldConfig, Order};
use crate::geometry::{unit_ball_volume, AnchoredPoint};
use crate::sampling::{reduce_chunks, Moments, QuadratureSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianIntegralRow {
    pub truncation: usize,
    pub integral: f64,
    pub std_error: f64,
    /// `int |grad^2 u|^2` on the same samples.
    pub unweighted: f64,
    pub unweighted_se: f64,
    /// `int |grad^2 u|^(5/2)`, for `p > 2`.
    pub hess_52: Option<f64>,
    /// `int |Du|^(5(p-2))`, for `p > 2`.
    pub du_power: Option<f64>,
    /// `2^(p-2) (int |grad^2 u|^2 + (int |grad^2 u|^(5/2))^(4/5) (int |Du|^(5(p-2)))^(1/5))`
    pub holder_bound: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianIntegralReport {
    pub p: f64,
    pub dim: usize,
    pub samples_per_stratum: usize,
    pub rows: Vec<HessianIntegralRow>,
    /// `|I_{L_{i+1}} - I_{L_i}|`
    pub increments: Vec<f64>,
    pub increments_decreasing: bool,
    pub all_finite: bool,
    /// For `p <= 2`: every `I_L` is at most the unweighted integral.
    pub dominated: Option<bool>,
}

/// `a^e * v`, evaluated as `(a v^(1/e))^e` to avoid overflow of `a^e`.
fn scaled_pow(a: f64, e: f64, v: f64) -> f64 {
    (a * v.powf(1.0 / e)).powf(e)
}

#[derive(Clone, Copy, Default)]
struct Sums([Moments; 4]);

impl Sums {
    fn push(&mut self, v: [f64; 4]) {
        for (m, x) in self.0.iter_mut().zip(v) {
            m.push(x);
        }
    }

    fn merge(&mut self, o: Sums) {
        for (m, x) in self.0.iter_mut().zip(o.0) {
            m.merge(x);
        }
    }
}

/// Adds one stratum: every sample counts, including rejected ones as zero.
fn add_stratum(total: &mut [(f64, f64); 4], s: &Sums, samples: usize) {
    for (t, m) in total.iter_mut().zip(&s.0) {
        let padded = Moments {
            count: samples,
            ..*m
        };
        t.0 += padded.mean();
        t.1 += padded.std_error().powi(2);
    }
}

pub fn weighted_hessian_integral(
    config: &FieldConfig,
    p: f64,
    truncations: &[usize],
    quadrature: &QuadratureSpec,
) -> Result<HessianIntegralReport> {
    check_p(p)?;
    quadrature.validate()?;
    if truncations.is_empty() || truncations.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain(
            "truncations",
            "must be non-empty and strictly increasing",
        ));
    }
    let dim = config.dim();
    let omega = unit_ball_volume(dim);
    let du_exp = 5.0 * (p - 2.0);
    let split = p > 2.0;
    let mut rows = Vec::new();

    for &l in truncations {
        let cfg = config.clone().with_truncation(l)?;
        let integrand = |x: &AnchoredPoint, volume: f64, outside_only: bool| -> Option<[f64; 4]> {
            let balls = cfg.containing_balls(x).len();
            if outside_only && balls > 0 {
                return None;
            }
            let share = volume / balls.max(1) as f64;
            let j = cfg.eval(x, Order::Hessian);
            let h = j.hessian_norm().unwrap_or(0.0);
            let du = j.sym_gradient().norm;
            let hh = scaled_pow(h, 2.0, share);
            Some([
                weight_from_norm(p, du) * hh,
                hh,
                if split {
                    scaled_pow(h, 2.5, share)
                } else {
                    0.0
                },
                if split { du.powf(du_exp) * share } else { 0.0 },
            ])
        };
        let mut total = [(0.0, 0.0); 4];
        for k in 1..=l {
            let q = quadrature.with_stream(quadrature.stream.wrapping_add(k as u64));
            let volume = omega
                * cfg
                    .system()
                    .ball_unchecked(k)
                    .inner_radius()
                    .powi(dim as i32);
            let s = reduce_chunks(
                q.samples,
                Sums::default,
                |i| {
                    let mut y = [0.0; 16];
                    q.unit_ball(i, dim, &mut y);
                    let x = AnchoredPoint::new(k, y[..dim].iter().map(|v| 0.5 * v).collect());
                    integrand(&x, volume, false)
                },
                Sums::push,
                Sums::merge,
            );
            add_stratum(&mut total, &s, q.samples);
        }
        let s = reduce_chunks(
            quadrature.samples,
            Sums::default,
            |i| {
                let mut y = [0.0; 16];
                quadrature.unit_ball(i, dim, &mut y);
                integrand(&AnchoredPoint::absolute(y[..dim].to_vec()), omega, true)
            },
            Sums::push,
            Sums::merge,
        );
        add_stratum(&mut total, &s, quadrature.samples);

        let (hess_52, du_power, holder_bound) = if split {
            let (a, b) = (total[2].0, total[3].0);
            let bound = 2f64.powf(p - 2.0) * (total[1].0 + a.powf(0.8) * b.powf(0.2));
            (Some(a), Some(b), Some(bound))
        } else {
            (None, None, None)
        };
        rows.push(HessianIntegralRow {
            truncation: l,
            integral: total[0].0,
            std_error: total[0].1.sqrt(),
            unweighted: total[1].0,
            unweighted_se: total[1].1.sqrt(),
            hess_52,
            du_power,
            holder_bound,
        });
    }

    let increments: Vec<f64> = rows
        .windows(2)
        .map(|w| (w[1].integral - w[0].integral).abs())
        .collect();
    Ok(HessianIntegralReport {
        p,
        dim,
        samples_per_stratum: quadrature.samples,
        increments_decreasing: increments.windows(2).all(|w| w[1] < w[0]),
        increments,
        all_finite: rows.iter().all(|r| r.integral.is_finite()),
        dominated: (p <= 2.0).then(|| rows.iter().all(|r| r.integral <= r.unweighted)),
        rows,
    })
}
