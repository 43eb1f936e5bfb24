use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use super::commands::load_field;
use super::{Outcome, RunConfig};
use crate::diagnostics::{
    bounds_check, decomposition_check, divergence_check, finite_difference_check, sandwich_check,
    smooth_sample_points, CheckTally, INEQUALITY_TOL,
};
use crate::error::Result;
use crate::field::FieldConfig;
use crate::geometry::{
    check_containment, check_radius_decay, check_window_disjointness, Region, RegionParams,
};
use crate::report::{write_csv, write_json};

/// Finite-difference step of the `fd` suite.
pub const FD_STEP: f64 = 1e-2;
/// Points drawn for the `fd` suite.
pub const FD_POINTS: usize = 1000;
pub const DECOMPOSITION_LEVELS: [usize; 3] = [8, 27, 125];
pub const SANDWICH_LEVELS: [usize; 2] = [10, 100];
pub const REGION_LEVELS: [usize; 4] = [1, 8, 64, 512];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Geometry,
    Regions,
    Divergence,
    Bounds,
    Decomposition,
    Sandwich,
    Fd,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Geometry,
        Suite::Regions,
        Suite::Divergence,
        Suite::Bounds,
        Suite::Decomposition,
        Suite::Sandwich,
        Suite::Fd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Geometry => "geometry",
            Suite::Regions => "regions",
            Suite::Divergence => "divergence",
            Suite::Bounds => "bounds",
            Suite::Decomposition => "decomposition",
            Suite::Sandwich => "sandwich",
            Suite::Fd => "fd",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Vacuous,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyRow {
    pub suite: &'static str,
    pub check: String,
    pub value: f64,
    pub threshold: f64,
    pub status: Status,
}

impl VerifyRow {
    fn new(suite: Suite, check: impl Into<String>, value: f64, threshold: f64, ok: bool) -> Self {
        Self {
            suite: suite.name(),
            check: check.into(),
            value,
            threshold,
            status: if ok { Status::Pass } else { Status::Fail },
        }
    }

    /// `value <= threshold` up to the inequality tolerance.
    fn at_most(suite: Suite, check: impl Into<String>, value: f64, threshold: f64) -> Self {
        let ok = value <= threshold + INEQUALITY_TOL * threshold.abs().max(1.0);
        Self::new(suite, check, value, threshold, ok)
    }

    fn tally(suite: Suite, prefix: &str, t: &CheckTally) -> Self {
        let mut row = Self::new(
            suite,
            format!("{prefix}/{}", t.name),
            t.failed() as f64,
            0.0,
            t.ok(),
        );
        if t.vacuous {
            row.status = Status::Vacuous;
        }
        row
    }
}

#[derive(Serialize)]
struct SuiteResult {
    suite: Suite,
    error: Option<String>,
    details: serde_json::Value,
}

#[derive(Serialize)]
struct VerifyBundle<'a> {
    config: &'a RunConfig,
    truncation: usize,
    epsilon: Option<f64>,
    passed: bool,
    suites: Vec<SuiteResult>,
    rows: &'a [VerifyRow],
}

struct Context<'a> {
    cfg: &'a RunConfig,
    field: &'a FieldConfig,
    region: Option<RegionParams>,
}

impl Context<'_> {
    fn region(&self) -> Result<RegionParams> {
        match self.region {
            Some(r) => Ok(r),
            None => self.cfg.region_params(self.field.dim()),
        }
    }

    fn levels<'b>(&self, levels: &'b [usize]) -> impl Iterator<Item = usize> + 'b {
        let l_max = self.field.truncation();
        levels.iter().copied().filter(move |&l| l <= l_max)
    }

    fn run(&self, suite: Suite, rows: &mut Vec<VerifyRow>) -> Result<serde_json::Value> {
        let q = self.cfg.quadrature();
        let field = self.field;
        let system = field.system();
        Ok(match suite {
            Suite::Geometry => {
                let overlaps = check_window_disjointness(system);
                let escaped = check_containment(system);
                rows.push(VerifyRow::at_most(
                    suite,
                    "window_overlaps",
                    overlaps.len() as f64,
                    0.0,
                ));
                rows.push(VerifyRow::at_most(
                    suite,
                    "outside_domain",
                    escaped.len() as f64,
                    0.0,
                ));
                let decay = if system.len() >= 2 {
                    let d = check_radius_decay(system)?;
                    rows.push(VerifyRow::new(
                        suite,
                        "radius_decay",
                        d.worst_ratio,
                        system.rho(),
                        d.holds,
                    ));
                    Some(d)
                } else {
                    None
                };
                serde_json::json!({ "window_overlaps": overlaps, "outside_domain": escaped, "decay": decay })
            }
            Suite::Regions => {
                let oracle = crate::diagnostics::oracle_for(field, self.region()?);
                let mut out = Vec::new();
                let background_floor = 1.0 - 1.0 / (3.0 * 2f64.powi(field.dim() as i32 - 2));
                for l in self.levels(&REGION_LEVELS) {
                    let mut level = Vec::new();
                    for (region, floor) in [
                        (Region::Good, 2.0 / 3.0),
                        (Region::Marked, 1.0 / 3.0),
                        (Region::Background, background_floor),
                    ] {
                        let r = oracle.estimate_fraction(l, region, &q)?;
                        let ok = r.fraction + 3.0 * r.std_error >= floor;
                        rows.push(VerifyRow::new(
                            suite,
                            format!("{}_fraction/{l}", region_label(region)),
                            r.fraction,
                            floor,
                            ok,
                        ));
                        level.push(r);
                    }
                    out.push(level);
                }
                json(&out)?
            }
            Suite::Divergence => {
                let r = divergence_check(field, &q)?;
                rows.push(VerifyRow::at_most(
                    suite,
                    "max_relative_divergence",
                    r.worst,
                    1e-12,
                ));
                json(&r)?
            }
            Suite::Bounds => {
                let mut out = Vec::new();
                let mut k = 1;
                while k <= field.truncation() {
                    let r = bounds_check(field, k, &q)?;
                    rows.push(VerifyRow::at_most(
                        suite,
                        format!("value/{k}"),
                        r.value_ratio,
                        1.0,
                    ));
                    rows.push(VerifyRow::at_most(
                        suite,
                        format!("gradient/{k}"),
                        r.gradient_ratio,
                        1.0,
                    ));
                    rows.push(VerifyRow::at_most(
                        suite,
                        format!("hessian/{k}"),
                        r.hessian_ratio,
                        1.0,
                    ));
                    rows.push(VerifyRow::at_most(
                        suite,
                        format!("outside_support/{k}"),
                        r.outside_nonzero as f64,
                        0.0,
                    ));
                    out.push(r);
                    k *= 5;
                }
                json(&out)?
            }
            Suite::Decomposition => {
                let region = self.region()?;
                let mut out = Vec::new();
                for l in self.levels(&DECOMPOSITION_LEVELS) {
                    let r = decomposition_check(field, &region, l, &q)?;
                    rows.push(VerifyRow::at_most(
                        suite,
                        format!("relative_deviation/{l}"),
                        r.max_rel_deviation,
                        1e-12,
                    ));
                    out.push(r);
                }
                json(&out)?
            }
            Suite::Sandwich => {
                let region = self.region()?;
                let mut out = Vec::new();
                for l in SANDWICH_LEVELS
                    .iter()
                    .copied()
                    .filter(|&l| 2 * l <= field.truncation())
                {
                    let r = sandwich_check(field, &region, l, &q)?;
                    for t in r.tallies() {
                        rows.push(VerifyRow::tally(suite, &l.to_string(), t));
                    }
                    out.push(r);
                }
                json(&out)?
            }
            Suite::Fd => {
                let anchors = field.truncation().min(50);
                let draw = q
                    .with_stream(q.stream.wrapping_add(1))
                    .with_samples(q.samples.max(4 * FD_POINTS));
                let points = smooth_sample_points(field, FD_POINTS, anchors, FD_STEP, &draw);
                let r = finite_difference_check(field, &points, FD_STEP)?;
                let (lo, hi) = crate::diagnostics::FD_RATIO_RANGE;
                let ok = r.passed && !points.is_empty();
                rows.push(VerifyRow::new(
                    suite,
                    "max_ratio_deviation",
                    r.max_deviation,
                    (hi - lo) / 2.0,
                    ok,
                ));
                rows.push(VerifyRow::new(
                    suite,
                    "points",
                    points.len() as f64,
                    FD_POINTS as f64,
                    !points.is_empty(),
                ));
                serde_json::json!({ "h": r.h, "points": r.points.len(), "max_deviation": r.max_deviation, "floored": r.floored, "passed": r.passed })
            }
        })
    }
}

fn region_label(region: Region) -> &'static str {
    match region {
        Region::Good => "good",
        Region::Marked => "marked",
        Region::Background => "background",
        Region::Outer => "outer",
        Region::Inner => "inner",
    }
}

fn json<T: Serialize>(v: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(v)?)
}

/// Runs the selected suites (all when `only` is empty) and writes
/// `verify.json` and `verify.csv` under the output directory.
pub fn cmd_verify(cfg: &RunConfig, system: &Path, only: &[Suite]) -> Result<Outcome> {
    let field = load_field(cfg, system)?;
    let suites: Vec<Suite> = if only.is_empty() {
        Suite::ALL.to_vec()
    } else {
        Suite::ALL
            .iter()
            .copied()
            .filter(|s| only.contains(s))
            .collect()
    };
    let needs_region = suites
        .iter()
        .any(|s| matches!(s, Suite::Regions | Suite::Decomposition | Suite::Sandwich));
    let mut ctx = Context {
        cfg,
        field: &field,
        region: None,
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    if needs_region {
        match cfg.region_params(field.dim()) {
            Ok(r) => ctx.region = Some(r),
            Err(e) => {
                rows.push(VerifyRow::new(
                    Suite::Regions,
                    "epsilon_calibration",
                    f64::NAN,
                    2.0 / 3.0,
                    false,
                ));
                results.push(SuiteResult {
                    suite: Suite::Regions,
                    error: Some(e.to_string()),
                    details: serde_json::Value::Null,
                });
            }
        }
    }
    for suite in suites {
        let start = rows.len();
        let result = match ctx.run(suite, &mut rows) {
            Ok(details) => SuiteResult {
                suite,
                error: None,
                details,
            },
            Err(e) => {
                rows.push(VerifyRow::new(suite, "error", f64::NAN, f64::NAN, false));
                SuiteResult {
                    suite,
                    error: Some(e.to_string()),
                    details: serde_json::Value::Null,
                }
            }
        };
        let failed = rows[start..]
            .iter()
            .filter(|r| r.status == Status::Fail)
            .count();
        println!(
            "{:<14} {}",
            suite.name(),
            match (&result.error, failed) {
                (Some(e), _) => format!("FAIL ({e})"),
                (None, 0) => format!("pass ({} checks)", rows.len() - start),
                (None, f) => format!("FAIL ({f} of {} checks)", rows.len() - start),
            }
        );
        results.push(result);
    }
    let passed = rows.iter().all(|r| r.status != Status::Fail);
    write_csv(&cfg.out.join("verify.csv"), &rows)?;
    write_json(
        &cfg.out.join("verify.json"),
        &VerifyBundle {
            config: cfg,
            truncation: field.truncation(),
            epsilon: ctx.region.map(|r| r.epsilon),
            passed,
            suites: results,
            rows: &rows,
        },
    )?;
    Ok(Outcome::from_passed(passed))
}
