//! Verification suites for the field: pointwise estimates, the decomposition
//! on `M_l`, sandwich bounds, finite differences, partial-sum Sobolev series
//! and the weighted Hessian integral.

mod fd;
mod hessian_integral;
mod sandwich;
mod series;

use std::sync::Arc;

use serde::Serialize;

pub use fd::{
    finite_difference_check, smooth_sample_points, stencil_is_smooth, FdPoint, FdReport, FD_FLOOR,
    FD_RATIO_RANGE,
};
pub use hessian_integral::{weighted_hessian_integral, HessianIntegralReport, HessianIntegralRow};
pub use sandwich::{
    decomposition_check, sandwich_check, CheckTally, DecompositionReport, SandwichReport,
};
pub use series::{sobolev_partial_norms, NormMode, SeriesReport, SeriesTerm};

use crate::error::Result;
use crate::field::{FieldConfig, Jet, Order};
use crate::geometry::{AnchoredPoint, RegionOracle, RegionParams};
use crate::sampling::{map_indexed, QuadratureSpec};

/// Relative tolerance of the one-sided inequality checks.
pub const INEQUALITY_TOL: f64 = 1e-12;

/// Region oracle over the balls `1..=L` of the configuration.
pub(crate) fn oracle_for(config: &FieldConfig, params: RegionParams) -> RegionOracle {
    let system = if config.truncation() == config.system().len() {
        config.shared_system().clone()
    } else {
        Arc::new(config.system().truncated(config.truncation()))
    };
    RegionOracle::new(system, params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsReport {
    pub k: usize,
    pub samples: usize,
    /// `max |u^k_m| / (k r_k)`
    pub value_ratio: f64,
    /// `max |d_i u^k_m| / (2k)`
    pub gradient_ratio: f64,
    /// `max |d_j d_i u^k_m| / (4k / r_k)`, over samples where it is finite.
    pub hessian_ratio: f64,
    /// Samples outside `B_k` with a nonzero entry.
    pub outside_nonzero: usize,
    pub hessian_overflow: usize,
}

impl BoundsReport {
    pub fn worst(&self) -> f64 {
        self.value_ratio
            .max(self.gradient_ratio)
            .max(self.hessian_ratio)
    }

    pub fn passed(&self) -> bool {
        self.worst() <= 1.0 + INEQUALITY_TOL && self.outside_nonzero == 0
    }
}

/// Samples `E_k` (so that a quarter of the points fall in `B_k` in the plane)
/// and returns the worst ratios against the pointwise estimates.
pub fn bounds_check(
    config: &FieldConfig,
    k: usize,
    quadrature: &QuadratureSpec,
) -> Result<BoundsReport> {
    config.system().check_index(k)?;
    quadrature.validate()?;
    let dim = config.dim();
    let r = config.system().ball_unchecked(k).inner_radius();
    let kf = k as f64;
    let per_sample = map_indexed(quadrature.samples, |i| {
        let mut y = [0.0; 16];
        quadrature.unit_ball(i, dim, &mut y);
        let x = AnchoredPoint::new(k, y[..dim].to_vec());
        let inside = 4.0 * y[..dim].iter().map(|v| v * v).sum::<f64>() < 1.0;
        let j = config.bump(k, &x, Order::Hessian).expect("index checked");
        let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let value = max_abs(&j.value) / (kf * r);
        let grad = max_abs(&j.gradient) / (2.0 * kf);
        let hess = if j.flags.hessian_overflow {
            None
        } else {
            Some(max_abs(j.hessian.as_deref().unwrap_or(&[])) / (4.0 * kf / r))
        };
        let nonzero = !inside && (value > 0.0 || grad > 0.0 || hess.is_some_and(|h| h > 0.0));
        (value, grad, hess, nonzero)
    });
    let mut report = BoundsReport {
        k,
        samples: quadrature.samples,
        value_ratio: 0.0,
        gradient_ratio: 0.0,
        hessian_ratio: 0.0,
        outside_nonzero: 0,
        hessian_overflow: 0,
    };
    for (v, g, h, nz) in per_sample {
        report.value_ratio = report.value_ratio.max(v);
        report.gradient_ratio = report.gradient_ratio.max(g);
        match h {
            Some(h) => report.hessian_ratio = report.hessian_ratio.max(h),
            None => report.hessian_overflow += 1,
        }
        report.outside_nonzero += nz as usize;
    }
    Ok(report)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DivergenceReport {
    pub samples: usize,
    /// `max |div u| / (1 + |grad u|)`
    pub worst: f64,
    pub worst_anchor: usize,
}

/// Anchored sample `i` of the divergence suite: anchors cycle through
/// `0..=L` and offsets fill the anchor's outer ball.
pub fn divergence_sample(
    config: &FieldConfig,
    quadrature: &QuadratureSpec,
    i: u64,
) -> AnchoredPoint {
    let dim = config.dim();
    let mut y = [0.0; 16];
    quadrature.unit_ball(i, dim, &mut y);
    let anchor = (i % (config.truncation() as u64 + 1)) as usize;
    let scale = if anchor == 0 { 1.0 } else { 2.0 };
    AnchoredPoint::new(anchor, y[..dim].iter().map(|v| v * scale).collect())
}

pub fn divergence_check(
    config: &FieldConfig,
    quadrature: &QuadratureSpec,
) -> Result<DivergenceReport> {
    quadrature.validate()?;
    let vals = map_indexed(quadrature.samples, |i| {
        let x = divergence_sample(config, quadrature, i);
        let j = config.eval(&x, Order::Gradient);
        (j.divergence().abs() / (1.0 + j.gradient_norm()), x.anchor)
    });
    let (worst, worst_anchor) = vals
        .into_iter()
        .fold((0.0, 0), |a, b| if b.0 > a.0 { b } else { a });
    Ok(DivergenceReport {
        samples: quadrature.samples,
        worst,
        worst_anchor,
    })
}

/// Largest `|H[i][j][k] - H[i][k][j]|` relative to the Hessian size.
pub fn hessian_symmetry_defect(jet: &Jet) -> Option<f64> {
    let n = jet.dim;
    let h = jet.hessian.as_ref()?;
    let scale = h
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                worst = worst.max((h[(i * n + j) * n + k] - h[(i * n + k) * n + j]).abs());
            }
        }
    }
    Some(worst / scale)
}

/// Residual of `d_j d_k v_i = d_j D_ik + d_k D_ij - d_i D_jk`, relative to the
/// Hessian size, with `d_j D_ik = (H[i][j][k] + H[k][j][i]) / 2`.
pub fn strain_identity_residual(jet: &Jet) -> Option<f64> {
    let n = jet.dim;
    let h = jet.hessian.as_ref()?;
    let at = |i: usize, j: usize, k: usize| h[(i * n + j) * n + k];
    let dd = |j: usize, i: usize, k: usize| 0.5 * (at(i, j, k) + at(k, j, i));
    let scale = h
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let rhs = dd(j, i, k) + dd(k, i, j) - dd(i, j, k);
                worst = worst.max((at(i, j, k) - rhs).abs());
            }
        }
    }
    Some(worst / scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_system, Domain};

    fn config(dim: usize, count: usize) -> FieldConfig {
        FieldConfig::new(Arc::new(
            build_ball_system(&Domain::unit_ball(dim).unwrap(), 0.49, count).unwrap(),
        ))
    }

    #[test]
    fn bounds_hold_and_value_bound_peaks_at_two_27ths() {
        let c = config(2, 130);
        let q = QuadratureSpec::low_discrepancy(20_000, 1);
        for k in [1, 5, 25, 125] {
            let r = bounds_check(&c, k, &q).unwrap();
            assert!(r.passed(), "{r:?}");
            assert!(
                r.value_ratio > 0.07 && r.value_ratio <= 2.0 / 27.0 + 1e-15,
                "{r:?}"
            );
            assert!(r.gradient_ratio > 0.24, "{r:?}");
        }
    }

    #[test]
    fn divergence_is_zero_to_rounding() {
        let c = config(3, 60);
        let r = divergence_check(&c, &QuadratureSpec::pseudo_random(5000, 2)).unwrap();
        assert!(r.worst <= 1e-12, "{r:?}");
    }

    #[test]
    fn strain_identity_holds_for_field_jets() {
        for dim in [2, 3] {
            let c = config(dim, 40);
            let q = QuadratureSpec::pseudo_random(2000, 8);
            for i in 0..2000 {
                let x = divergence_sample(&c, &q, i);
                let j = c.eval(&x, Order::Hessian);
                if j.flags.hessian_overflow {
                    continue;
                }
                assert!(hessian_symmetry_defect(&j).unwrap() <= 1e-14);
                assert!(strain_identity_residual(&j).unwrap() <= 1e-13);
            }
        }
    }
}
