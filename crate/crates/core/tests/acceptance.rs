//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
//!
//! Runs without the libtest harness so the lines always reach the output:
//! `cargo test --test acceptance`.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use apblow::diagnostics::{
    bounds_check, decomposition_check, divergence_check, finite_difference_check, sandwich_check,
    smooth_sample_points, sobolev_partial_norms, weighted_hessian_integral, NormMode,
    FD_RATIO_RANGE,
};
use apblow::field::{FieldConfig, Order};
use apblow::geometry::{
    build_ball_system, check_containment, check_radius_decay, check_window_disjointness,
    AnchoredPoint, BallSystem, Domain, Region, RegionOracle, RegionParams,
};
use apblow::muckenhoupt::{
    ap_ratio_with, ap_scan, duality_identity_check, LowerBoundConstants, SampleBall, WeightParams,
};
use apblow::sampling::{map_indexed, QuadratureSpec};

const RHO: f64 = 0.49;
const EPSILON: f64 = 0.07;

/// Relative tolerance of exact checks (window disjointness, decay).
const EXACT_TOL: f64 = 1e-12;
const BUILD_BUDGET: Duration = Duration::from_secs(60);
const DIVERGENCE_TOL: f64 = 1e-12;
const DIVERGENCE_SAMPLES: usize = 100_000;
/// Extra points placed inside `B_500`.
const DEEP_ANCHOR: usize = 500;
const DEEP_SAMPLES: usize = 2_000;
const FD_POINTS: usize = 1_000;
const FD_STEP: f64 = 1e-2;
const BOUND_SLACK: f64 = 1.0 + 1e-12;
const BOUND_SAMPLES: usize = 100_000;
const REGION_SAMPLES: usize = 1_000_000;
const DECOMPOSITION_TOL: f64 = 1e-12;
const SANDWICH_SAMPLES: usize = 100_000;
const SCAN_SAMPLES: usize = 100_000;
/// Frozen from a pilot run, which gave ratio(512)/ratio(8) = 10.78 and slope 0.589.
const SCAN_GROWTH: f64 = 4.0;
const SCAN_BUDGET: Duration = Duration::from_secs(600);
const DUALITY_TOL: f64 = 1e-10;
const ORACLE_SIGMAS: f64 = 3.0;
const SERIES_SIGMAS: f64 = 3.0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Fixture {
    plane: Arc<BallSystem>,
    build_time: Duration,
}

impl Fixture {
    fn field(&self) -> FieldConfig {
        FieldConfig::new(self.plane.clone())
    }
}

fn build_and_geometry(fx: &Fixture) -> Outcome {
    let s = &fx.plane;
    let overlaps = check_window_disjointness(s);
    let decay = check_radius_decay(s).expect("1000 balls");
    let escaped = check_containment(s);
    outcome(
        s.len() == 1000
            && fx.build_time < BUILD_BUDGET
            && overlaps.is_empty()
            && decay.holds
            && decay.worst_ratio <= RHO * (1.0 + EXACT_TOL)
            && escaped.is_empty(),
        format!(
            "L = {}, built in {:.2?}, overlaps {}, max R_k+1/R_k = {:.15}, outside {}",
            s.len(),
            fx.build_time,
            overlaps.len(),
            decay.worst_ratio,
            escaped.len()
        ),
    )
}

fn divergence_free(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let q = QuadratureSpec::pseudo_random(DIVERGENCE_SAMPLES, 21);
    let r = divergence_check(&field, &q).expect("valid quadrature");
    let deep = QuadratureSpec::low_discrepancy(DEEP_SAMPLES, 22);
    let deep_worst = map_indexed(DEEP_SAMPLES, |i| {
        let mut y = [0.0; 2];
        deep.unit_ball(i, 2, &mut y);
        let x = AnchoredPoint::new(DEEP_ANCHOR, vec![0.5 * y[0], 0.5 * y[1]]);
        let j = field.eval(&x, Order::Gradient);
        j.divergence().abs() / (1.0 + j.gradient_norm())
    })
    .into_iter()
    .fold(0.0f64, f64::max);
    let worst = r.worst.max(deep_worst);
    outcome(
        worst <= DIVERGENCE_TOL,
        format!(
            "{} + {DEEP_SAMPLES} points in B_{DEEP_ANCHOR}: max |div u|/(1+|grad u|) = {worst:e}",
            r.samples
        ),
    )
}

fn finite_differences(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let draw = QuadratureSpec::low_discrepancy(10 * FD_POINTS, 31);
    let points = smooth_sample_points(&field, FD_POINTS, 50, FD_STEP, &draw);
    if points.len() < FD_POINTS {
        return outcome(false, format!("only {} smooth points", points.len()));
    }
    match finite_difference_check(&field, &points, FD_STEP) {
        Ok(r) => outcome(
            r.passed,
            format!(
                "{} points, h = {FD_STEP}: ratios in {:?} with max |ratio - 4| = {:.4}, {} floored",
                r.points.len(),
                FD_RATIO_RANGE,
                r.max_deviation,
                r.floored
            ),
        ),
        Err(e) => outcome(false, e.to_string()),
    }
}

fn pointwise_estimates(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let q = QuadratureSpec::low_discrepancy(BOUND_SAMPLES, 41);
    let mut worst = 0.0f64;
    let mut outside = 0;
    for k in [1, 5, 25, 125] {
        let r = bounds_check(&field, k, &q).expect("index in range");
        worst = worst.max(r.worst());
        outside += r.outside_nonzero;
    }
    outcome(
        worst <= BOUND_SLACK && outside == 0,
        format!(
            "k in {{1,5,25,125}}: worst slack ratio {worst:.6}, nonzero outside B_k: {outside}"
        ),
    )
}

fn region_measures(fx: &Fixture) -> Outcome {
    let oracle = RegionOracle::new(fx.plane.clone(), RegionParams::new(EPSILON).unwrap());
    let q = QuadratureSpec::low_discrepancy(REGION_SAMPLES, 51);
    let background_floor = 1.0 - 1.0 / 3.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [10, 50, 100] {
        let mut cells = Vec::new();
        for (region, floor) in [
            (Region::Good, 2.0 / 3.0),
            (Region::Marked, 1.0 / 3.0),
            (Region::Background, background_floor),
        ] {
            let r = oracle
                .estimate_fraction(l, region, &q)
                .expect("index in range");
            ok &= r.fraction >= floor - 3.0 * r.std_error;
            cells.push(format!("{:.4}", r.fraction));
        }
        parts.push(format!(
            "l={l}: G {} M {} bg {}",
            cells[0], cells[1], cells[2]
        ));
    }
    outcome(ok, format!("N = {REGION_SAMPLES}; {}", parts.join("; ")))
}

fn decomposition(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let params = RegionParams::new(EPSILON).unwrap();
    let q = QuadratureSpec::low_discrepancy(20_000, 61);
    let mut worst = 0.0f64;
    let mut checked = 0;
    for l in [8, 27, 125] {
        match decomposition_check(&field, &params, l, &q) {
            Ok(r) => {
                worst = worst.max(r.max_rel_deviation);
                checked += r.checked;
            }
            Err(e) => return outcome(false, format!("l = {l}: {e}")),
        }
    }
    outcome(
        worst <= DECOMPOSITION_TOL && checked > 0,
        format!("{checked} M_l samples over l in {{8,27,125}}: max relative deviation {worst:e}"),
    )
}

fn sandwich(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let params = RegionParams::new(EPSILON).unwrap();
    let q = QuadratureSpec::low_discrepancy(SANDWICH_SAMPLES, 71);
    let consts = LowerBoundConstants::new(2, EPSILON).unwrap();
    let expected_crossover = (4.0 / consts.c).powi(3);
    let mut ok = true;
    let mut parts = Vec::new();
    let mut crossover = f64::NAN;
    for l in [10, 100] {
        let r = match sandwich_check(&field, &params, l, &q) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("l = {l}: {e}")),
        };
        ok &= r.shear.checked > 0 && r.shear.failed() == 0;
        ok &= r.background.checked > 0 && r.background.failed() == 0;
        ok &= r.triangle.failed() == 0 && r.lower_sandwich.failed() == 0;
        ok &= r.lower.vacuous;
        crossover = r.crossover;
        parts.push(format!(
            "l={l}: shear {}/{}, background {}/{}, lower {}",
            r.shear.passed,
            r.shear.checked,
            r.background.passed,
            r.background.checked,
            if r.lower.vacuous { "vacuous" } else { "active" }
        ));
    }
    ok &= ((crossover - expected_crossover) / expected_crossover).abs() <= 1e-12;
    outcome(
        ok,
        format!("{}; crossover l* = {crossover:.6e}", parts.join("; ")),
    )
}

fn ap_trend(fx: &Fixture) -> Outcome {
    let start = Instant::now();
    let field = fx.field();
    let params = WeightParams::new(3.0, 2.0).unwrap();
    let consts = LowerBoundConstants::new(2, EPSILON).unwrap();
    let q = QuadratureSpec::low_discrepancy(SCAN_SAMPLES, 7);
    let head = ap_scan(&field, &params, &[8, 64, 512], &q, None, &consts).expect("valid scan");
    let ratios: Vec<f64> = head.rows.iter().map(|r| r.ratio).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    let growth = ratios[2] / ratios[0];
    let mid: Vec<usize> = (50..=500).step_by(50).collect();
    let tail = ap_scan(&field, &params, &mid, &q, None, &consts).expect("valid scan");
    let slope = tail.slope.unwrap_or(f64::NAN);
    let elapsed = start.elapsed();
    outcome(
        increasing && growth >= SCAN_GROWTH && slope > 0.0 && elapsed < SCAN_BUDGET,
        format!(
            "ratios at 8, 64, 512: {:.4}, {:.4}, {:.4}; growth {growth:.3}; slope over 50..500 {slope:.4}; {elapsed:.1?}",
            ratios[0], ratios[1], ratios[2]
        ),
    )
}

fn duality(fx: &Fixture) -> Outcome {
    let field = fx.field();
    let q = QuadratureSpec::low_discrepancy(50_000, 91);
    let mut worst = 0.0f64;
    for p in [1.2, 1.5, 1.8] {
        for alpha in [1.5, 2.0, 3.0] {
            let params = WeightParams::new(p, alpha).unwrap();
            let d =
                duality_identity_check(&field, &params, &SampleBall::Outer(64), &q).expect("p < 2");
            worst = worst.max(d.deviation);
        }
    }
    outcome(
        worst <= DUALITY_TOL,
        format!("3 x 3 grid on E_64: max relative deviation {worst:e}"),
    )
}

fn closed_form_oracle() -> Outcome {
    let r = 0.7;
    let ball = SampleBall::Explicit {
        center: vec![0.0, 0.0],
        radius: r,
    };
    let q = QuadratureSpec::pseudo_random(200_000, 101);
    let radial = ap_ratio_with(&ball, 2, 2.0, &q, |x| x.offset_norm()).unwrap();
    let z = (radial.ratio - 4.0 / 3.0).abs() / radial.se_ratio;
    let constant = ap_ratio_with(&ball, 2, 2.0, &q, |_| 1.0).unwrap();
    outcome(
        z <= ORACLE_SIGMAS && constant.ratio == 1.0,
        format!(
            "|x| weight: {:.5} +- {:.1e} vs 4/3 ({z:.2} sigma); constant weight: {}",
            radial.ratio, radial.se_ratio, constant.ratio
        ),
    )
}

fn sobolev_series(fx: &Fixture) -> Outcome {
    let field = FieldConfig::new(fx.plane.clone())
        .with_truncation(200)
        .unwrap();
    let q = QuadratureSpec::low_discrepancy(20_000, 111);
    let mut ok = true;
    let mut parts = Vec::new();
    for (mode, e) in [(NormMode::Gradient, 2.0), (NormMode::Hessian, 1.5)] {
        let r = sobolev_partial_norms(&field, mode, e, &q).unwrap();
        ok &= r
            .terms
            .iter()
            .all(|t| t.norm <= t.bound + SERIES_SIGMAS * t.std_error);
        ok &= r.below_majorant && r.monotone;
        let total = r.terms.last().map(|t| t.cumulative).unwrap_or(0.0);
        parts.push(format!(
            "{mode:?} {e}: sum {total:.5e} <= {:.5e}",
            r.majorant
        ));
    }
    let rejected = sobolev_partial_norms(&field, NormMode::Hessian, 2.0, &q).is_err();
    ok &= rejected;
    parts.push(format!("q = n rejected: {rejected}"));
    outcome(ok, parts.join("; "))
}

fn hessian_integral() -> Outcome {
    let space = Arc::new(build_ball_system(&Domain::unit_ball(3).unwrap(), RHO, 100).unwrap());
    let field = FieldConfig::new(space);
    let q = QuadratureSpec::low_discrepancy(4_000, 121);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in [1.5, 3.0] {
        let r = weighted_hessian_integral(&field, p, &[25, 50, 100], &q).unwrap();
        ok &= r.all_finite && r.increments_decreasing;
        if p <= 2.0 {
            ok &= r.dominated == Some(true);
        }
        let values: Vec<String> = r
            .rows
            .iter()
            .map(|row| format!("{:.5e}", row.integral))
            .collect();
        parts.push(format!(
            "p={p}: I_L = [{}], increments {:.2e} > {:.2e}",
            values.join(", "),
            r.increments[0],
            r.increments[1]
        ));
    }
    outcome(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let start = Instant::now();
    let plane = build_ball_system(&Domain::unit_ball(2).unwrap(), RHO, 1000).expect("build");
    let fx = Fixture {
        plane: Arc::new(plane),
        build_time: start.elapsed(),
    };
    let criteria: Vec<Criterion> = vec![
        ("ball system geometry", Box::new(|| build_and_geometry(&fx))),
        ("divergence free", Box::new(|| divergence_free(&fx))),
        ("finite differences", Box::new(|| finite_differences(&fx))),
        ("pointwise estimates", Box::new(|| pointwise_estimates(&fx))),
        ("region measures", Box::new(|| region_measures(&fx))),
        ("decomposition on M_l", Box::new(|| decomposition(&fx))),
        ("sandwich bounds", Box::new(|| sandwich(&fx))),
        ("A_alpha trend", Box::new(|| ap_trend(&fx))),
        ("duality identity", Box::new(|| duality(&fx))),
        ("closed-form oracle", Box::new(closed_form_oracle)),
        ("Sobolev series", Box::new(|| sobolev_series(&fx))),
        ("weighted Hessian integral", Box::new(hessian_integral)),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.passed);
        println!(
            "{} criterion {:>2} ({name}): {} [{:.1?}]",
            if o.passed { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.elapsed()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
