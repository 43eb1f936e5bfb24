use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{unit_bump_jet, FieldConfig, Order};
use crate::geometry::unit_ball_volume;
use crate::sampling::{reduce_chunks, Moments, QuadratureSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    /// `||grad u^k||_{L^s(B_k)}`
    Gradient,
    /// `||grad^2 u^k||_{L^q(B_k)}`
    Hessian,
}

impl FromStr for NormMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "grad" | "gradient" => Ok(NormMode::Gradient),
            "hess" | "hessian" => Ok(NormMode::Hessian),
            other => Err(Error::domain(
                "mode",
                format!("unknown mode {other:?}, expected grad or hess"),
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesTerm {
    pub k: usize,
    pub norm: f64,
    pub std_error: f64,
    /// `2k |B_k|^(1/s)` or `4k/r_k |B_k|^(1/q)`.
    pub bound: f64,
    pub cumulative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesReport {
    pub mode: NormMode,
    pub exponent: f64,
    pub dim: usize,
    pub rho: f64,
    pub terms: Vec<SeriesTerm>,
    /// Closed-form bound on the whole series, `C / (1 - x)^2` with
    /// `x = rho^(n/s)` or `rho^(n/q - 1)`.
    pub majorant: f64,
    /// Every term is at most its bound plus three standard errors.
    pub within_bounds: bool,
    pub below_majorant: bool,
    pub monotone: bool,
}

/// Partial norms of the bumps over their balls, `k = 1..=L`.
///
/// The integrand is evaluated in local coordinates and the powers of `r_k`
/// are applied in log space, so terms for very small balls underflow to zero
/// instead of overflowing.
pub fn sobolev_partial_norms(
    config: &FieldConfig,
    mode: NormMode,
    exponent: f64,
    quadrature: &QuadratureSpec,
) -> Result<SeriesReport> {
    let dim = config.dim();
    let nf = dim as f64;
    match mode {
        NormMode::Gradient if !(exponent.is_finite() && exponent > 1.0) => {
            return Err(Error::domain("s", format!("{exponent} not in (1, inf)")));
        }
        NormMode::Hessian if !(exponent > 1.0 && exponent < nf) => {
            return Err(Error::domain(
                "q",
                format!("{exponent} not in (1, n) = (1, {dim})"),
            ));
        }
        _ => {}
    }
    quadrature.validate()?;
    let system = config.system();
    let ln_omega = unit_ball_volume(dim).ln();
    // term = const * k * r^power * mean^(1/e)
    let (constant, power) = match mode {
        NormMode::Gradient => (2.0, nf / exponent),
        NormMode::Hessian => (4.0, nf / exponent - 1.0),
    };

    let mut terms = Vec::with_capacity(config.truncation());
    let mut cumulative = 0.0;
    for k in 1..=config.truncation() {
        let q = quadrature.with_stream(quadrature.stream.wrapping_add(k as u64));
        let m = reduce_chunks(
            q.samples,
            Moments::default,
            |i| {
                let mut z = [0.0; 16];
                q.unit_ball(i, dim, &mut z);
                let j = unit_bump_jet(&z[..dim], Order::Hessian, 0.0)?;
                let v = match mode {
                    NormMode::Gradient => j.gradient_norm(),
                    NormMode::Hessian => j.hessian_norm().unwrap_or(0.0),
                };
                Some(v.powf(exponent))
            },
            |acc, v| acc.push(v),
            |a, b| a.merge(b),
        );
        let mean = m.sum / q.samples as f64;
        let se_mean = {
            let n = q.samples as f64;
            let var = ((m.sum_sq / n - mean * mean) * n / (n - 1.0).max(1.0)).max(0.0);
            (var / n).sqrt()
        };
        let r = system.ball_unchecked(k).inner_radius();
        let ln_scale = (k as f64).ln() + ln_omega / exponent + power * r.ln();
        let scale = ln_scale.exp();
        let norm = scale * mean.powf(1.0 / exponent);
        let std_error = if mean > 0.0 {
            norm * se_mean / (exponent * mean)
        } else {
            0.0
        };
        cumulative += norm;
        terms.push(SeriesTerm {
            k,
            norm,
            std_error,
            bound: constant * scale,
            cumulative,
        });
    }

    let r1 = system.ball_unchecked(1).inner_radius();
    let x = system.rho().powf(power);
    let majorant = constant * (ln_omega / exponent + power * r1.ln()).exp() / (1.0 - x).powi(2);
    let within_bounds = terms.iter().all(|t| t.norm <= t.bound + 3.0 * t.std_error);
    let below_majorant = terms.iter().all(|t| t.cumulative <= majorant);
    let monotone = terms.windows(2).all(|w| w[1].cumulative >= w[0].cumulative);
    Ok(SeriesReport {
        mode,
        exponent,
        dim,
        rho: system.rho(),
        terms,
        majorant,
        within_bounds,
        below_majorant,
        monotone,
    })
}
