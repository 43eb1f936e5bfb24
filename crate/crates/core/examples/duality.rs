//! The A_alpha ratio for p below 2 equals a power of the ratio at the
//! conjugate exponent p0 = p/(p-1) with alpha' = alpha/(alpha-1).
//!
//! Usage: cargo run --release --example duality [samples]

use std::sync::Arc;

use apblow::field::FieldConfig;
use apblow::geometry::{build_ball_system, Domain};
use apblow::muckenhoupt::{
    duality_identity_check, lower_bound_any, LowerBoundConstants, SampleBall, WeightParams,
};
use apblow::sampling::QuadratureSpec;

fn main() -> anyhow::Result<()> {
    let samples: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(20_000);
    let config = FieldConfig::new(Arc::new(build_ball_system(
        &Domain::unit_ball(2)?,
        0.49,
        200,
    )?));
    let q = QuadratureSpec::low_discrepancy(samples, 11);
    let consts = LowerBoundConstants::new(2, 0.07)?;
    let ball = SampleBall::Outer(64);

    println!(
        "{:>5} {:>5} {:>8} {:>14} {:>14} {:>10}  bound at l = 1e13",
        "p", "alpha", "p0", "direct", "transformed", "deviation"
    );
    for p in [1.2, 1.5, 1.8] {
        for alpha in [1.5, 2.0, 3.0] {
            let params = WeightParams::new(p, alpha)?;
            let d = duality_identity_check(&config, &params, &ball, &q)?;
            let bound = lower_bound_any(&consts, &params, 10_000_000_000_000)?;
            println!(
                "{p:>5} {alpha:>5} {:>8.4} {:>14.8} {:>14.8} {:>10.2e}  {:?}",
                d.p0, d.direct, d.transformed, d.deviation, bound
            );
        }
    }
    Ok(())
}
