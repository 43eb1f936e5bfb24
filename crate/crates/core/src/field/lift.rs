//! Divergence-free boundary lift `w(x) = c (1 - |x|^2) (-x_2, x_1, 0, ..., 0)`.
//!
//! `w` vanishes on the unit sphere, its normal derivative there is
//! `-2c (-x_2, x_1, 0, ...)`, and `div w = 2c x_1 x_2 - 2c x_1 x_2 = 0`.

use super::jet::{Jet, Order};
use crate::sampling::QuadratureSpec;

/// Safety factor applied to the sampled supremum of `|grad w~|`.
pub const LIFT_SAFETY: f64 = 1.01;

pub fn eval_lift_jet(scale: f64, x: &[f64], order: Order) -> Jet {
    let n = x.len();
    let mut jet = Jet::zeros(n, order);
    let g = 1.0 - x.iter().map(|v| v * v).sum::<f64>();
    let mut v = [0.0f64; 16];
    v[0] = -x[1];
    v[1] = x[0];
    // A = d v / d x: A[0][1] = -1, A[1][0] = 1
    let a = |i: usize, j: usize| match (i, j) {
        (0, 1) => -1.0,
        (1, 0) => 1.0,
        _ => 0.0,
    };
    jet.value[0] = scale * g * v[0];
    jet.value[1] = scale * g * v[1];
    for i in 0..2 {
        for j in 0..n {
            jet.gradient[i * n + j] = scale * ((-2.0 * x[j]) * v[i] + g * a(i, j));
        }
    }
    if let Some(h) = jet.hessian.as_mut() {
        for i in 0..2 {
            for j in 0..n {
                for k in 0..n {
                    let djk = if j == k { 1.0 } else { 0.0 };
                    h[(i * n + j) * n + k] =
                        scale * (-2.0 * djk * v[i] - 2.0 * x[j] * a(i, k) - 2.0 * x[k] * a(i, j));
                }
            }
        }
    }
    jet
}

/// Supremum of `|grad w~|` for the unnormalized lift, sampled over the closed
/// ball and on the sphere itself.
pub fn lift_gradient_sup(dim: usize, samples: usize) -> f64 {
    let q = QuadratureSpec::low_discrepancy(samples, 0x11f7);
    let mut y = [0.0; 16];
    let mut sup = 0.0f64;
    for i in 0..samples as u64 {
        q.unit_ball(i, dim, &mut y);
        sup = sup.max(eval_lift_jet(1.0, &y[..dim], Order::Gradient).gradient_norm());
        let r = y[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
        if r > 0.0 {
            let on_sphere: Vec<f64> = y[..dim].iter().map(|v| v / r).collect();
            sup = sup.max(eval_lift_jet(1.0, &on_sphere, Order::Gradient).gradient_norm());
        }
    }
    sup
}

/// The lift scale making `sup |grad w| <= 1`.
pub fn auto_lift_scale(dim: usize) -> f64 {
    1.0 / (LIFT_SAFETY * lift_gradient_sup(dim, 20_000))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn at_origin() {
        let c = 0.3;
        let j = eval_lift_jet(c, &[0.0, 0.0, 0.0], Order::Hessian);
        assert_eq!(j.value, vec![0.0; 3]);
        assert_eq!(j.grad(1, 0), c);
        assert_eq!(j.grad(0, 1), -c);
        assert_eq!(j.divergence(), 0.0);
    }

    #[test]
    fn on_axis() {
        let c = 0.7;
        let j = eval_lift_jet(c, &[0.5, 0.0], Order::Gradient);
        assert_eq!(j.value[0], 0.0);
        assert!((j.value[1] - 0.375 * c).abs() < 1e-16);
    }

    #[test]
    fn vanishes_on_sphere_with_normal_derivative() {
        let x = [0.6, 0.8];
        let j = eval_lift_jet(1.0, &x, Order::Gradient);
        assert!(j.value.iter().all(|v| v.abs() < 1e-16));
        // d_nu w = G x = -2 (-x_2, x_1)
        let dn: Vec<f64> = (0..2)
            .map(|i| j.grad(i, 0) * x[0] + j.grad(i, 1) * x[1])
            .collect();
        assert!((dn[0] - 1.6).abs() < 1e-15 && (dn[1] + 1.2).abs() < 1e-15);
    }

    #[test]
    fn planar_supremum_is_two() {
        // |grad w~|^2 = 10 s^2 - 8 s + 2 with s = |x|^2, largest at s = 1
        let sup = lift_gradient_sup(2, 5000);
        assert!((sup - 2.0).abs() < 1e-3, "{sup}");
        assert!(sup <= 2.0 + 1e-12);
    }

    #[test]
    fn divergence_free_everywhere() {
        let q = QuadratureSpec::pseudo_random(2000, 4);
        let mut y = [0.0; 4];
        for i in 0..2000 {
            q.unit_ball(i, 4, &mut y);
            assert_eq!(eval_lift_jet(0.5, &y, Order::Gradient).divergence(), 0.0);
        }
    }
}
