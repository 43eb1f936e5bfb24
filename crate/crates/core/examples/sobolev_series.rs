//! Partial sums of the gradient series in L^s and the Hessian series in L^q
//! against their termwise bounds and the closed-form majorant.
//!
//! Usage: cargo run --release --example sobolev_series [s] [q]

use std::sync::Arc;

use apblow::diagnostics::{sobolev_partial_norms, NormMode};
use apblow::field::FieldConfig;
use apblow::geometry::{build_ball_system, Domain};
use apblow::sampling::QuadratureSpec;

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let s: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(2.0);
    let q_exp: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1.5);
    let config = FieldConfig::new(Arc::new(build_ball_system(
        &Domain::unit_ball(2)?,
        0.49,
        200,
    )?));
    let q = QuadratureSpec::low_discrepancy(10_000, 3);

    for (mode, e) in [(NormMode::Gradient, s), (NormMode::Hessian, q_exp)] {
        let r = sobolev_partial_norms(&config, mode, e, &q)?;
        println!("{mode:?}, exponent {e}");
        for t in r
            .terms
            .iter()
            .filter(|t| [1, 2, 5, 10, 50, 100, 200].contains(&t.k))
        {
            println!(
                "  k = {:>4}  term {:.4e} <= {:.4e}  partial sum {:.8e}",
                t.k, t.norm, t.bound, t.cumulative
            );
        }
        println!(
            "  majorant {:.6e}; within bounds {}, below majorant {}",
            r.majorant, r.within_bounds, r.below_majorant
        );
    }
    match sobolev_partial_norms(&config, NormMode::Hessian, 2.0, &q) {
        Err(e) => println!("q = n rejected: {e}"),
        Ok(_) => println!("q = n unexpectedly accepted"),
    }
    Ok(())
}
