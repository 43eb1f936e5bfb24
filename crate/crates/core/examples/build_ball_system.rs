//! Greedy ball system on the unit disk: radii, decay and window disjointness.
//!
//! Usage: cargo run --release --example build_ball_system [n] [rho] [count]

use apblow::geometry::{
    build_ball_system_logged, check_containment, check_radius_decay, check_window_disjointness,
    BuildOptions, Domain, RadiusRule,
};

fn main() -> anyhow::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(2);
    let rho: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(0.49);
    let count: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1000);

    let (system, log) =
        build_ball_system_logged(&Domain::unit_ball(n)?, rho, count, BuildOptions::default())?;
    println!(
        "{:>5} {:>8} {:>12}  {:<11} center",
        "k", "seq", "R_k", "rule"
    );
    for step in log
        .iter()
        .filter(|s| s.ball <= 10 || s.ball.is_power_of_two() || s.ball == count)
    {
        println!(
            "{:>5} {:>8} {:>12.5e}  {:<11} {:?}",
            step.ball,
            step.sequence_index,
            step.radius,
            format!("{:?}", step.rule),
            step.center
        );
    }
    let clearance = log
        .iter()
        .filter(|s| s.rule == RadiusRule::Clearance)
        .count();
    println!("{clearance} of {count} radii set by the clearance rule");

    let decay = check_radius_decay(&system)?;
    println!(
        "max R_(k+1)/R_k = {:.15} (rho = {rho}), holds: {}",
        decay.worst_ratio, decay.holds
    );
    println!(
        "window overlaps: {}",
        check_window_disjointness(&system).len()
    );
    println!(
        "balls leaving the domain: {}",
        check_containment(&system).len()
    );
    Ok(())
}
