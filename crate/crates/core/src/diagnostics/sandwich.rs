use serde::Serialize;

use super::{oracle_for, INEQUALITY_TOL};
use crate::error::{Error, Result};
use crate::field::{FieldConfig, Jet, Order};
use crate::geometry::{icbrt, Region, RegionParams};
use crate::muckenhoupt::LowerBoundConstants;
use crate::sampling::{map_indexed, QuadratureSpec};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionReport {
    pub l: usize,
    pub window: usize,
    /// Draws from `B_l` and how many of them fell in `M_l`.
    pub drawn: usize,
    pub checked: usize,
    pub max_abs_deviation: f64,
    pub max_rel_deviation: f64,
}

/// Compares `Du^0` against `Du^l + sum_{k <= cbrt(l), k < l} Du^k` on `M_l`.
pub fn decomposition_check(
    config: &FieldConfig,
    params: &RegionParams,
    l: usize,
    quadrature: &QuadratureSpec,
) -> Result<DecompositionReport> {
    check_level(config, l)?;
    quadrature.validate()?;
    let oracle = oracle_for(config, *params);
    let window = icbrt(l).min(l - 1);
    let devs = map_indexed(quadrature.samples, |i| {
        let x = oracle.reference_sample(l, Region::Inner, quadrature, i);
        if !oracle.contains_unchecked(l, &x, Region::Marked) {
            return None;
        }
        let full = config.bumps(&x, Order::Gradient).sym_gradient();
        let mut parts = config.bump(l, &x, Order::Gradient).expect("checked");
        for k in 1..=window {
            parts.add_assign(&config.bump(k, &x, Order::Gradient).expect("checked"));
        }
        let parts = parts.sym_gradient();
        let abs = full
            .entries
            .iter()
            .zip(&parts.entries)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt();
        Some((abs, abs / full.norm.max(f64::MIN_POSITIVE)))
    });
    let found: Vec<(f64, f64)> = devs.into_iter().flatten().collect();
    if found.is_empty() {
        return Err(Error::RegionEmpty {
            region: Region::Marked.name(),
            ball: l,
            samples: quadrature.samples,
        });
    }
    Ok(DecompositionReport {
        l,
        window,
        drawn: quadrature.samples,
        checked: found.len(),
        max_abs_deviation: found.iter().fold(0.0, |m, d| m.max(d.0)),
        max_rel_deviation: found.iter().fold(0.0, |m, d| m.max(d.1)),
    })
}

fn check_level(config: &FieldConfig, l: usize) -> Result<()> {
    if l == 0 || l > config.truncation() {
        return Err(Error::IndexOutOfRange {
            index: l,
            len: config.truncation(),
        });
    }
    Ok(())
}

/// Outcome of one one-sided inequality over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckTally {
    pub name: &'static str,
    pub threshold: f64,
    pub checked: usize,
    pub passed: usize,
    /// The inequality has a non-positive right-hand side and says nothing.
    pub vacuous: bool,
    /// Smallest `lhs - rhs` for lower bounds, `rhs - lhs` for upper bounds.
    pub worst_margin: f64,
}

impl CheckTally {
    fn new(name: &'static str, threshold: f64) -> Self {
        Self {
            name,
            threshold,
            checked: 0,
            passed: 0,
            vacuous: false,
            worst_margin: f64::INFINITY,
        }
    }

    fn record(&mut self, margin: f64, scale: f64) {
        self.checked += 1;
        if margin >= -INEQUALITY_TOL * scale.max(1.0) {
            self.passed += 1;
        }
        self.worst_margin = self.worst_margin.min(margin);
    }

    pub fn failed(&self) -> usize {
        self.checked - self.passed
    }

    /// No sample violates a non-vacuous bound.
    pub fn ok(&self) -> bool {
        self.vacuous || self.failed() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub l: usize,
    pub epsilon: f64,
    /// `|d_1 u_1^l| >= eps^3 l / (1 - eps)` on `G_l`.
    pub shear: CheckTally,
    /// `|Du^0| >= |d_1 u_1^l| - n sum_{k <= cbrt(l)} max |d_i u^k_j|` on `M_l`.
    pub triangle: CheckTally,
    /// `|Du^0| >= eps^3 l / (1 - eps) - 2n l^(2/3)` on `M_l`.
    pub lower: CheckTally,
    /// `|Du^0| <= 2n l^(2/3)` on `E_l` minus the balls `B_k`, `k >= l`.
    pub background: CheckTally,
    /// `1 + |Du| >= |Du^0|` on all samples of `E_l`.
    pub lower_sandwich: CheckTally,
    /// Level beyond which `lower` stops being vacuous.
    pub crossover: f64,
}

impl SandwichReport {
    pub fn tallies(&self) -> [&CheckTally; 5] {
        [
            &self.shear,
            &self.triangle,
            &self.lower,
            &self.background,
            &self.lower_sandwich,
        ]
    }

    pub fn ok(&self) -> bool {
        self.tallies().iter().all(|t| t.ok())
    }
}

enum Sample {
    Inner {
        good: bool,
        marked: bool,
        shear: f64,
        du0: f64,
        window_max: f64,
    },
    Outer {
        background: bool,
        du0: f64,
        du: f64,
    },
}

fn window_max(config: &FieldConfig, l: usize, x: &crate::geometry::AnchoredPoint) -> f64 {
    (1..=icbrt(l).min(l - 1))
        .map(|k| {
            config
                .bump(k, x, Order::Gradient)
                .expect("checked")
                .max_abs_gradient()
        })
        .sum()
}

pub fn sandwich_check(
    config: &FieldConfig,
    params: &RegionParams,
    l: usize,
    quadrature: &QuadratureSpec,
) -> Result<SandwichReport> {
    check_level(config, l)?;
    if 2 * l > config.truncation() {
        return Err(Error::domain(
            "l",
            format!("{l} exceeds half the truncation {}", config.truncation()),
        ));
    }
    quadrature.validate()?;
    let dim = config.dim();
    let nf = dim as f64;
    let consts = LowerBoundConstants::new(dim, params.epsilon)?;
    let oracle = oracle_for(config, *params);
    let n = quadrature.samples as u64;

    let samples = map_indexed(2 * quadrature.samples, |i| {
        if i < n {
            let x = oracle.reference_sample(l, Region::Inner, quadrature, i);
            let good = oracle.contains_unchecked(l, &x, Region::Good);
            let marked = good && oracle.contains_unchecked(l, &x, Region::Marked);
            let own: Jet = config.bump(l, &x, Order::Gradient).expect("checked");
            Sample::Inner {
                good,
                marked,
                shear: own.grad(0, 0).abs(),
                du0: config.bumps(&x, Order::Gradient).sym_gradient().norm,
                window_max: if marked {
                    window_max(config, l, &x)
                } else {
                    0.0
                },
            }
        } else {
            let x = oracle.reference_sample(l, Region::Outer, quadrature, i);
            let du0 = config.bumps(&x, Order::Gradient).sym_gradient().norm;
            Sample::Outer {
                background: oracle.contains_unchecked(l, &x, Region::Background),
                du0,
                du: config.eval(&x, Order::Gradient).sym_gradient().norm,
            }
        }
    });

    let lf = l as f64;
    let shear_thr = consts.c * lf;
    let lower_thr = consts.shear_margin(l);
    let bg_thr = 2.0 * nf * lf.cbrt().powi(2);
    let mut shear = CheckTally::new("shear", shear_thr);
    let mut triangle = CheckTally::new("triangle", f64::NAN);
    let mut lower = CheckTally::new("lower", lower_thr);
    lower.vacuous = lower_thr <= 0.0;
    let mut background = CheckTally::new("background", bg_thr);
    let mut lower_sandwich = CheckTally::new("lower_sandwich", f64::NAN);

    for s in samples {
        match s {
            Sample::Inner {
                good,
                marked,
                shear: a,
                du0,
                window_max,
            } => {
                if good {
                    shear.record(a - shear_thr, shear_thr);
                }
                if marked {
                    let rhs = a - nf * window_max;
                    triangle.record(du0 - rhs, du0);
                    lower.record(du0 - lower_thr, du0);
                }
            }
            Sample::Outer {
                background: bg,
                du0,
                du,
            } => {
                if bg {
                    background.record(bg_thr - du0, bg_thr);
                }
                lower_sandwich.record(1.0 + du - du0, du0);
            }
        }
    }
    for (t, region) in [
        (&shear, Region::Good),
        (&lower, Region::Marked),
        (&background, Region::Background),
    ] {
        if t.checked == 0 {
            return Err(Error::RegionEmpty {
                region: region.name(),
                ball: l,
                samples: quadrature.samples,
            });
        }
    }
    Ok(SandwichReport {
        l,
        epsilon: params.epsilon,
        shear,
        triangle,
        lower,
        background,
        lower_sandwich,
        crossover: consts.crossover(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_system, Domain};
    use std::sync::Arc;

    fn config() -> FieldConfig {
        FieldConfig::new(Arc::new(
            build_ball_system(&Domain::unit_ball(2).unwrap(), 0.49, 260).unwrap(),
        ))
    }

    #[test]
    fn decomposition_is_exact() {
        let c = config();
        let p = RegionParams::new(0.07).unwrap();
        let q = QuadratureSpec::low_discrepancy(4000, 3);
        for l in [1, 8, 27, 125] {
            let r = decomposition_check(&c, &p, l, &q).unwrap();
            assert!(r.checked > 0);
            assert!(r.max_rel_deviation <= 1e-12, "{r:?}");
        }
    }

    #[test]
    fn sandwich_at_small_levels() {
        let c = config();
        let p = RegionParams::new(0.07).unwrap();
        let q = QuadratureSpec::low_discrepancy(4000, 4);
        let r = sandwich_check(&c, &p, 10, &q).unwrap();
        assert!((r.shear.threshold - 0.07f64.powi(3) * 10.0 / 0.93).abs() < 1e-15);
        assert!(r.ok(), "{r:?}");
        assert!(r.lower.vacuous);
        assert_eq!(r.shear.failed(), 0);
        let r = sandwich_check(&c, &p, 8, &q).unwrap();
        assert_eq!(r.background.threshold, 16.0);
        assert_eq!(r.background.failed(), 0);
    }

    #[test]
    fn sandwich_requires_half_truncation() {
        let c = config();
        let p = RegionParams::new(0.07).unwrap();
        let q = QuadratureSpec::low_discrepancy(100, 4);
        assert!(sandwich_check(&c, &p, 200, &q).is_err());
    }
}
