//! Value, gradient and Hessian of the field at a few anchored points, with
//! the divergence and the symmetric-gradient norm entering the weight.
//!
//! Usage: cargo run --release --example field_jets

use std::sync::Arc;

use apblow::field::{FieldConfig, Order};
use apblow::geometry::{build_ball_system, Domain};

fn main() -> anyhow::Result<()> {
    let system = Arc::new(build_ball_system(&Domain::unit_ball(2)?, 0.49, 200)?);
    let config = FieldConfig::new(system.clone());
    println!("lift amplitude c_w = {:.6}", config.lift_scale());

    for (anchor, offset) in [
        (0, [0.3, -0.2]),
        (1, [0.1, 0.2]),
        (17, [0.25, 0.0]),
        (150, [-0.1, 0.3]),
    ] {
        let x = system.anchored(anchor, offset.to_vec())?;
        let jet = config.eval(&x, Order::Hessian);
        let du = jet.sym_gradient();
        println!("anchor {anchor:>3} offset {offset:?}");
        println!("  u       = {:?}", jet.value);
        println!("  grad u  = {:?}", jet.gradient);
        println!("  div u   = {:e}", jet.divergence());
        println!(
            "  |Du|    = {:.6e}   weight(p=3) = {:.6e}",
            du.norm,
            config.weight(3.0, &x)
        );
        println!("  |D2 u|  = {:.6e}", jet.hessian_norm().unwrap_or(f64::NAN));
        println!("  balls containing x: {:?}", config.containing_balls(&x));
    }
    Ok(())
}
