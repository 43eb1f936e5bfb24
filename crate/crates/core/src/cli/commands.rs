use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::{Outcome, RunConfig};
use crate::diagnostics::{sobolev_partial_norms, weighted_hessian_integral, NormMode};
use crate::error::{Error, Result};
use crate::field::{FieldConfig, Jet, Order};
use crate::geometry::{build_ball_system_logged, AnchoredPoint, BallSystem, BuildOptions, Domain};
use crate::muckenhoupt::{ap_scan, LowerBoundConstants};
use crate::report::{write_atomic, write_csv, write_json};

/// Where `build` writes the system: `out` itself when it names a `.json`
/// file, `out/system.json` otherwise.
pub fn system_path(cfg: &RunConfig) -> PathBuf {
    if cfg.out.extension().is_some_and(|e| e == "json") {
        cfg.out.clone()
    } else {
        cfg.out.join("system.json")
    }
}

/// `sys.json` -> `sys.log.json`
pub fn log_path(system: &Path) -> PathBuf {
    let stem = system
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    system.with_file_name(format!("{stem}.log.json"))
}

pub fn cmd_build(cfg: &RunConfig) -> Result<PathBuf> {
    let domain = Domain::unit_ball(cfg.n)?;
    let (system, log) =
        build_ball_system_logged(&domain, cfg.rho, cfg.count, BuildOptions::default())?;
    let path = system_path(cfg);
    system.write_json(&path)?;
    write_json(&log_path(&path), &log)?;
    let last = system
        .balls()
        .last()
        .map(|b| b.outer_radius())
        .unwrap_or(f64::NAN);
    println!(
        "wrote {} balls to {} (R_L = {last:e})",
        system.len(),
        path.display()
    );
    Ok(path)
}

pub(crate) fn load_field(cfg: &RunConfig, path: &Path) -> Result<FieldConfig> {
    let system = Arc::new(BallSystem::read_json(path)?);
    cfg.field(system)
}

pub fn cmd_scan(cfg: &RunConfig, system: &Path, allow_trivial: bool) -> Result<Outcome> {
    let params = cfg.weight_params()?;
    if params.p == 2.0 && !allow_trivial {
        return Err(Error::domain(
            "p",
            "p = 2 gives the unit weight; pass --allow-trivial to scan it anyway",
        ));
    }
    let field = load_field(cfg, system)?;
    let dim = field.dim();
    let subdomain = cfg.subdomain(dim)?;
    let region = cfg.region_params(dim)?;
    let consts = LowerBoundConstants::new(dim, region.epsilon)?;
    let report = ap_scan(
        &field,
        &params,
        &cfg.l_range.0,
        &cfg.quadrature(),
        subdomain.as_ref(),
        &consts,
    )?;

    write_csv(&cfg.out.join("scan.csv"), &report.rows)?;
    let mut dat = String::from("# l ratio\n");
    for r in &report.rows {
        writeln!(dat, "{} {:e}", r.l, r.ratio).expect("string write");
    }
    write_atomic(&cfg.out.join("scan.dat"), dat.as_bytes())?;
    write_json(&cfg.out.join("scan.json"), &report)?;

    for r in &report.rows {
        println!(
            "l = {:>6}  ratio = {:.6e} +- {:.2e}  bound: {}",
            r.l, r.ratio, r.se_ratio, r.bound_status
        );
    }
    match report.slope {
        Some(s) => println!("slope of ln ratio vs ln l: {s:.4}"),
        None => println!("slope of ln ratio vs ln l: n/a (fewer than two levels)"),
    }
    println!(
        "scanned {} levels, crossover l* = {:.6e}",
        report.inside, report.crossover
    );
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct NormsRow {
    k: usize,
    norm: f64,
    std_error: f64,
    bound: f64,
    cumulative: f64,
}

pub fn cmd_norms(cfg: &RunConfig, system: &Path, mode: NormMode, exponent: f64) -> Result<Outcome> {
    let field = load_field(cfg, system)?;
    let report = sobolev_partial_norms(&field, mode, exponent, &cfg.quadrature())?;
    let rows: Vec<NormsRow> = report
        .terms
        .iter()
        .map(|t| NormsRow {
            k: t.k,
            norm: t.norm,
            std_error: t.std_error,
            bound: t.bound,
            cumulative: t.cumulative,
        })
        .collect();
    write_csv(&cfg.out.join("norms.csv"), &rows)?;
    write_json(&cfg.out.join("norms.json"), &report)?;
    let total = report.terms.last().map(|t| t.cumulative).unwrap_or(0.0);
    println!(
        "{:?} series, exponent {exponent}: sum = {total:.6e}, majorant = {:.6e}, termwise bounds {}",
        mode,
        report.majorant,
        if report.within_bounds { "hold" } else { "VIOLATED" }
    );
    Ok(Outcome::from_passed(
        report.within_bounds && report.below_majorant && report.monotone,
    ))
}

pub fn cmd_hessian_integral(
    cfg: &RunConfig,
    system: &Path,
    truncations: &[usize],
) -> Result<Outcome> {
    let field = load_field(cfg, system)?;
    let report = weighted_hessian_integral(&field, cfg.p, truncations, &cfg.quadrature())?;
    write_csv(&cfg.out.join("hessian_integral.csv"), &report.rows)?;
    write_json(&cfg.out.join("hessian_integral.json"), &report)?;
    for r in &report.rows {
        println!(
            "L = {:>5}  I_L = {:.6e} +- {:.2e}  unweighted = {:.6e}",
            r.truncation, r.integral, r.std_error, r.unweighted
        );
    }
    Ok(Outcome::from_passed(
        report.all_finite && report.dominated != Some(false),
    ))
}

#[derive(Serialize)]
struct EvalOutput<'a> {
    point: &'a AnchoredPoint,
    absolute: Vec<f64>,
    jet: &'a Jet,
    sym_gradient_norm: f64,
    weight: f64,
}

pub fn cmd_eval(
    cfg: &RunConfig,
    system: &Path,
    anchor: usize,
    offset: &[f64],
    hessian: bool,
) -> Result<String> {
    let field = load_field(cfg, system)?;
    let x = field.system().anchored(anchor, offset.to_vec())?;
    let order = if hessian {
        Order::Hessian
    } else {
        Order::Gradient
    };
    let jet = field.eval(&x, order);
    let mut absolute = vec![0.0; field.dim()];
    field.system().absolute(&x, &mut absolute);
    let out = EvalOutput {
        point: &x,
        absolute,
        sym_gradient_norm: jet.sym_gradient().norm,
        weight: field.weight(cfg.p, &x),
        jet: &jet,
    };
    let text = serde_json::to_string_pretty(&out)?;
    println!("{text}");
    Ok(text)
}
