//! A_alpha ratio of the weight (1 + |Du|)^(p-2) along the outer balls E_l.
//!
//! Usage: cargo run --release --example ap_scan [p] [alpha] [samples]

use std::sync::Arc;

use apblow::field::FieldConfig;
use apblow::geometry::{build_ball_system, Domain};
use apblow::muckenhoupt::{ap_scan, LowerBoundConstants, WeightParams};
use apblow::sampling::QuadratureSpec;

fn main() -> anyhow::Result<()> {
    let args: Vec<f64> = std::env::args()
        .skip(1)
        .map(|a| a.parse())
        .collect::<Result<_, _>>()?;
    let p = args.first().copied().unwrap_or(3.0);
    let alpha = args.get(1).copied().unwrap_or(2.0);
    let samples = args.get(2).copied().unwrap_or(1e5) as usize;

    let domain = Domain::unit_ball(2)?;
    let system = Arc::new(build_ball_system(&domain, 0.49, 1000)?);
    let config = FieldConfig::new(system);
    let params = WeightParams::new(p, alpha)?;
    let consts = LowerBoundConstants::new(2, 0.07)?;
    let q = QuadratureSpec::low_discrepancy(samples, 7);

    let ls = [8, 50, 64, 100, 200, 300, 400, 500, 512];
    let report = ap_scan(&config, &params, &ls, &q, None, &consts)?;
    println!(
        "{:>5} {:>12} {:>10} {:>12} {:>12}  bound",
        "l", "ratio", "se", "mean_w", "mean_dual"
    );
    for r in &report.rows {
        println!(
            "{:>5} {:>12.5} {:>10.2e} {:>12.5} {:>12.5}  {}",
            r.l, r.ratio, r.se_ratio, r.mean_w, r.mean_w_dual, r.bound_status
        );
    }
    println!("log-log slope {:.4}", report.slope.unwrap_or(f64::NAN));
    println!(
        "lower bound positive only beyond l* = {:.4e}",
        report.crossover
    );
    Ok(())
}
