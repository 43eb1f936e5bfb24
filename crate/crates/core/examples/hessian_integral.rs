//! Weighted Hessian integral int (1 + |Du|)^(p-2) |D^2 u|^2 over the unit
//! ball of R^3 for growing truncations of the bump series.
//!
//! Usage: cargo run --release --example hessian_integral [samples]

use std::sync::Arc;

use apblow::diagnostics::weighted_hessian_integral;
use apblow::field::FieldConfig;
use apblow::geometry::{build_ball_system, Domain};
use apblow::sampling::QuadratureSpec;

fn main() -> anyhow::Result<()> {
    let samples: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(4000);
    let config = FieldConfig::new(Arc::new(build_ball_system(
        &Domain::unit_ball(3)?,
        0.49,
        100,
    )?));
    let q = QuadratureSpec::low_discrepancy(samples, 5);
    for p in [1.5, 3.0] {
        let r = weighted_hessian_integral(&config, p, &[25, 50, 100], &q)?;
        println!("p = {p}");
        for row in &r.rows {
            print!(
                "  L = {:>3}  I_L = {:.6e} +- {:.1e}  unweighted {:.6e}",
                row.truncation, row.integral, row.std_error, row.unweighted
            );
            match row.holder_bound {
                Some(b) => println!("  holder bound {b:.6e}"),
                None => println!(),
            }
        }
        println!(
            "  increments {:?}, decreasing {}",
            r.increments, r.increments_decreasing
        );
    }
    Ok(())
}
