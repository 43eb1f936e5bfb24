//! The rotational bump `u^k` supported on `B_k`.
//!
//! With `z = (x - x^k)/r_k`, `tau = |z|` and `e = z/tau`,
//!
//! ```text
//! u_1 =  k r z_2 (1 - tau)^2 / 2        u_2 = -k r z_1 (1 - tau)^2 / 2
//! d_i u_1 =  k [ delta_2i (1-tau)^2/2 + (tau - 1) tau e_2 e_i ]
//! d_j d_i u_1 = (k/r) [ (delta_2i e_j + delta_2j e_i + delta_ij e_2)(tau - 1) + e_2 e_i e_j ]
//! ```
//!
//! and symmetrically for `u_2` with indices 1 and 2 swapped and the sign
//! flipped; components 3..n vanish. All formulas are evaluated in the
//! scale-free variables and multiplied by the powers of `r_k` afterwards.

use super::jet::{Jet, JetFlags, Order};

/// Jet of `u^k` with the scale factors removed: value divided by `k r`,
/// gradient by `k`, Hessian by `k / r`. `None` outside the open unit ball.
pub fn unit_bump_jet(z: &[f64], order: Order, margin: f64) -> Option<Jet> {
    let n = z.len();
    let norm_sq: f64 = z.iter().map(|v| v * v).sum();
    if norm_sq >= 1.0 {
        return None;
    }
    let tau = norm_sq.sqrt();
    let mut jet = Jet::zeros(n, order);
    jet.flags = JetFlags {
        at_center: tau < margin,
        on_sphere: 1.0 - tau < margin,
        hessian_overflow: false,
    };
    let bracket = 0.5 * (1.0 - tau) * (1.0 - tau);
    jet.value[0] = z[1] * bracket;
    jet.value[1] = -z[0] * bracket;

    if tau == 0.0 {
        // removable limit: only the bracket terms survive
        jet.gradient[1] = bracket;
        jet.gradient[n] = -bracket;
        return Some(jet);
    }
    let inv = 1.0 / tau;
    let mut e = [0.0f64; 16];
    for (ei, zi) in e.iter_mut().zip(z) {
        *ei = zi * inv;
    }
    let q = tau * (tau - 1.0);
    for i in 0..n {
        jet.gradient[i] = q * (e[1] * e[i]);
        jet.gradient[n + i] = -(q * (e[0] * e[i]));
    }
    jet.gradient[1] += bracket;
    jet.gradient[n] -= bracket;

    if let Some(h) = jet.hessian.as_mut() {
        let s = tau - 1.0;
        let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
        for i in 0..n {
            for j in 0..n {
                let first = (delta(1, i) * e[j] + delta(1, j) * e[i] + delta(i, j) * e[1]) * s
                    + e[1] * e[i] * e[j];
                let second = (delta(0, i) * e[j] + delta(0, j) * e[i] + delta(i, j) * e[0]) * s
                    + e[0] * e[i] * e[j];
                h[i * n + j] = first;
                h[(n + i) * n + j] = -second;
            }
        }
    }
    Some(jet)
}

/// Multiplies a unit jet by the powers of `r` belonging to ball `k`.
pub fn scale_unit_jet(mut jet: Jet, k: usize, r: f64) -> Jet {
    let kf = k as f64;
    let value_scale = kf * r;
    jet.value.iter_mut().for_each(|v| *v *= value_scale);
    jet.gradient.iter_mut().for_each(|v| *v *= kf);
    if let Some(h) = jet.hessian.as_mut() {
        let hs = kf / r;
        if !hs.is_finite() {
            jet.flags.hessian_overflow = true;
        }
        h.iter_mut().for_each(|v| *v *= hs);
    }
    jet
}
