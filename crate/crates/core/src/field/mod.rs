//! Closed-form jets of the bumps `u^k`, the lift `w` and the truncated field
//! `u = sum_{k <= L} u^k + w`.

mod bump;
mod jet;
mod lift;

use std::sync::Arc;

pub use bump::{scale_unit_jet, unit_bump_jet};
pub use jet::{divergence, f_transform, sym_gradient, Jet, JetFlags, Order, SymGrad};
pub use lift::{auto_lift_scale, eval_lift_jet, lift_gradient_sup, LIFT_SAFETY};

use crate::error::{Error, Result};
use crate::geometry::{AnchoredPoint, BallIndex, BallSystem};

/// Default relative margin around centers and spheres.
pub const SMOOTH_MARGIN: f64 = 1e-6;

/// Jet of `u^k` at `x`; zero outside `B_k`.
pub fn eval_bump_jet(
    system: &BallSystem,
    k: usize,
    x: &AnchoredPoint,
    order: Order,
) -> Result<Jet> {
    system.check_index(k)?;
    Ok(bump_jet_unchecked(system, k, x, order, SMOOTH_MARGIN)
        .unwrap_or_else(|| Jet::zeros(system.dim(), order)))
}

fn bump_jet_unchecked(
    system: &BallSystem,
    k: usize,
    x: &AnchoredPoint,
    order: Order,
    margin: f64,
) -> Option<Jet> {
    let dim = system.dim();
    let mut z = [0.0; 16];
    system.local_coords(x, k, &mut z);
    let unit = unit_bump_jet(&z[..dim], order, margin)?;
    Some(scale_unit_jet(
        unit,
        k,
        system.ball_unchecked(k).inner_radius(),
    ))
}

/// Evaluation context for the truncated field.
#[derive(Clone, Debug)]
pub struct FieldConfig {
    system: Arc<BallSystem>,
    index: BallIndex,
    lift_scale: f64,
    margin: f64,
}

impl FieldConfig {
    /// Uses every ball of the system and the sampled lift scale.
    pub fn new(system: Arc<BallSystem>) -> Self {
        let lift_scale = auto_lift_scale(system.dim());
        let index = BallIndex::new(&system, system.len());
        Self {
            system,
            index,
            lift_scale,
            margin: SMOOTH_MARGIN,
        }
    }

    pub fn with_truncation(mut self, truncation: usize) -> Result<Self> {
        if truncation == 0 || truncation > self.system.len() {
            return Err(Error::IndexOutOfRange {
                index: truncation,
                len: self.system.len(),
            });
        }
        self.index = BallIndex::new(&self.system, truncation);
        Ok(self)
    }

    pub fn with_lift_scale(mut self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::domain(
                "lift_scale",
                format!("{scale} is not a finite non-negative number"),
            ));
        }
        self.lift_scale = scale;
        Ok(self)
    }

    pub fn with_margin(mut self, margin: f64) -> Result<Self> {
        if !(margin.is_finite() && (0.0..0.5).contains(&margin)) {
            return Err(Error::domain("margin", format!("{margin} not in [0, 0.5)")));
        }
        self.margin = margin;
        Ok(self)
    }

    pub fn system(&self) -> &BallSystem {
        &self.system
    }

    pub fn shared_system(&self) -> &Arc<BallSystem> {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.dim()
    }

    pub fn truncation(&self) -> usize {
        self.index.truncation()
    }

    pub fn lift_scale(&self) -> f64 {
        self.lift_scale
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    /// Balls `k <= L` whose outer ball may contain `x`, ascending.
    pub fn candidate_balls(&self, x: &AnchoredPoint) -> &[u32] {
        self.index.candidates(&self.system, x)
    }

    /// Balls `k <= L` whose `B_k` contains `x`, ascending.
    pub fn containing_balls(&self, x: &AnchoredPoint) -> Vec<usize> {
        let dim = self.dim();
        let mut z = [0.0; 16];
        self.index
            .candidates(&self.system, x)
            .iter()
            .map(|&k| k as usize)
            .filter(|&k| {
                self.system.local_coords(x, k, &mut z);
                z[..dim].iter().map(|v| v * v).sum::<f64>() < 1.0
            })
            .collect()
    }

    pub fn bump(&self, k: usize, x: &AnchoredPoint, order: Order) -> Result<Jet> {
        self.system.check_index(k)?;
        Ok(bump_jet_unchecked(&self.system, k, x, order, self.margin)
            .unwrap_or_else(|| Jet::zeros(self.dim(), order)))
    }

    /// `u^0 = sum_{k <= L} u^k` at `x`.
    pub fn bumps(&self, x: &AnchoredPoint, order: Order) -> Jet {
        let mut acc = Jet::zeros(self.dim(), order);
        for &k in self.index.candidates(&self.system, x) {
            if let Some(j) = bump_jet_unchecked(&self.system, k as usize, x, order, self.margin) {
                acc.add_assign(&j);
            }
        }
        acc
    }

    pub fn lift(&self, x: &AnchoredPoint, order: Order) -> Jet {
        let mut pos = [0.0; 16];
        self.system.absolute(x, &mut pos);
        eval_lift_jet(self.lift_scale, &pos[..self.dim()], order)
    }

    /// `u = u^0 + w` at `x`.
    pub fn eval(&self, x: &AnchoredPoint, order: Order) -> Jet {
        let mut j = self.bumps(x, order);
        j.add_assign(&self.lift(x, order));
        j
    }

    /// `(1 + |Du(x)|)^(p - 2)`.
    pub fn weight(&self, p: f64, x: &AnchoredPoint) -> f64 {
        weight_from_norm(p, self.eval(x, Order::Gradient).sym_gradient().norm)
    }
}

pub fn eval_field_jet(config: &FieldConfig, x: &AnchoredPoint, order: Order) -> Jet {
    config.eval(x, order)
}

pub fn weight_value(config: &FieldConfig, p: f64, x: &AnchoredPoint) -> Result<f64> {
    check_p(p)?;
    Ok(config.weight(p, x))
}

#[inline]
pub fn weight_from_norm(p: f64, du_norm: f64) -> f64 {
    (1.0 + du_norm).powf(p - 2.0)
}

pub(crate) fn check_p(p: f64) -> Result<()> {
    if p.is_finite() && p > 1.0 {
        Ok(())
    } else {
        Err(Error::domain("p", format!("{p} not in (1, inf)")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_ball_system, icbrt, Domain, Region, RegionOracle, RegionParams};
    use crate::sampling::QuadratureSpec;

    fn config(dim: usize, count: usize) -> FieldConfig {
        let d = Domain::unit_ball(dim).unwrap();
        FieldConfig::new(Arc::new(build_ball_system(&d, 0.49, count).unwrap()))
    }

    #[test]
    fn weight_examples() {
        assert_eq!(weight_from_norm(3.0, 3.0), 4.0);
        assert_eq!(weight_from_norm(1.5, 3.0), 0.5);
        assert_eq!(weight_from_norm(2.0, 1e9), 1.0);
        assert!(check_p(1.0).is_err());
    }

    #[test]
    fn lift_scale_bounds_gradient() {
        let c = config(2, 10);
        assert!((c.lift_scale() - 1.0 / (2.0 * LIFT_SAFETY)).abs() < 1e-4);
        let q = QuadratureSpec::pseudo_random(4000, 9);
        let mut y = [0.0; 2];
        for i in 0..4000 {
            q.unit_ball(i, 2, &mut y);
            assert!(
                c.lift(&AnchoredPoint::absolute(y.to_vec()), Order::Gradient)
                    .gradient_norm()
                    <= 1.0
            );
        }
    }

    #[test]
    fn outside_all_balls_is_lift_only() {
        let c = config(2, 50);
        let q = QuadratureSpec::pseudo_random(2000, 3);
        let mut y = [0.0; 2];
        let mut seen = 0;
        for i in 0..2000 {
            q.unit_ball(i, 2, &mut y);
            let x = AnchoredPoint::absolute(y.to_vec());
            if c.containing_balls(&x).is_empty() {
                seen += 1;
                assert_eq!(c.eval(&x, Order::Hessian), c.lift(&x, Order::Hessian));
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn field_is_divergence_free() {
        for dim in [2, 3] {
            let c = config(dim, 120);
            let q = QuadratureSpec::pseudo_random(3000, 5);
            let mut y = [0.0; 3];
            for i in 0..3000 {
                q.unit_ball(i, dim, &mut y);
                let anchor = (i % 121) as usize;
                let x = AnchoredPoint::new(anchor, y[..dim].iter().map(|v| v * 1.9).collect());
                let j = c.eval(&x, Order::Gradient);
                assert!(j.divergence().abs() <= 1e-12 * (1.0 + j.gradient_norm()));
            }
        }
    }

    #[test]
    fn marked_points_see_window_and_own_ball_only() {
        let s = Arc::new(build_ball_system(&Domain::unit_ball(2).unwrap(), 0.49, 300).unwrap());
        let c = FieldConfig::new(s.clone());
        let oracle = RegionOracle::new(s.clone(), RegionParams::new(0.07).unwrap());
        let q = QuadratureSpec::pseudo_random(400, 2);
        for l in [27, 64, 150] {
            for i in 0..400 {
                let x = oracle.reference_sample(l, Region::Good, &q, i);
                if !oracle.contains(l, &x, Region::Marked).unwrap() {
                    continue;
                }
                let balls = c.containing_balls(&x);
                assert!(balls.contains(&l));
                assert!(
                    balls.iter().all(|&k| k == l || k <= icbrt(l)),
                    "{l}: {balls:?}"
                );
            }
        }
    }

    #[test]
    fn truncation_is_validated() {
        let c = config(2, 10);
        assert!(c.clone().with_truncation(0).is_err());
        assert!(c.clone().with_truncation(11).is_err());
        assert_eq!(c.with_truncation(5).unwrap().truncation(), 5);
    }
}
