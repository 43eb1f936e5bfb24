//! Calibrated shear parameter and the measure fractions of G_l, M_l and the
//! background annulus relative to B_l or E_l.
//!
//! Usage: cargo run --release --example region_measures [samples]

use std::sync::Arc;

use apblow::geometry::{
    build_ball_system, calibrate_epsilon, tail_measure_ratio, Domain, Region, RegionOracle,
};
use apblow::sampling::QuadratureSpec;

fn main() -> anyhow::Result<()> {
    let samples: usize = std::env::args()
        .nth(1)
        .map(|a| a.parse())
        .transpose()?
        .unwrap_or(100_000);
    let domain = Domain::unit_ball(2)?;
    let q = QuadratureSpec::low_discrepancy(samples, 7);
    let params = calibrate_epsilon(&domain, &q)?;
    println!("calibrated epsilon = {}", params.epsilon);

    let system = Arc::new(build_ball_system(&domain, 0.49, 1000)?);
    let oracle = RegionOracle::new(system.clone(), params);
    println!(
        "{:>5} {:>10} {:>10} {:>10} {:>12}",
        "l", "|G|/|B|", "|M|/|B|", "bg/|E|", "tail/|B_l|"
    );
    for l in [1, 8, 27, 64, 125, 512] {
        let g = oracle.estimate_fraction(l, Region::Good, &q)?;
        let m = oracle.estimate_fraction(l, Region::Marked, &q)?;
        let b = oracle.estimate_fraction(l, Region::Background, &q)?;
        println!(
            "{l:>5} {:>10.5} {:>10.5} {:>10.5} {:>12.3e}",
            g.fraction,
            m.fraction,
            b.fraction,
            tail_measure_ratio(&system, l)?
        );
    }
    Ok(())
}
