//! `run`: solve the configured instance, then evaluate each diagnostic and
//! write one CSV per diagnostic next to the exported solution.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use carnot_core::obstacle::{manufactured_instance, solve_classical_obstacle, solve_no_sign};
use carnot_core::regularity::{blowup_with, box_region, dyadic_radii, Analysis, BlowupSettings};
use carnot_core::{Ball, Error, GridSpec, GroupSpec, KrylovSettings, ObstacleInstance};

use crate::config::{Config, Diagnostic, Method};
use crate::io::{self, ReportRow};
use crate::LabError;

/// Environment variable naming the output directory when neither the
/// command line nor the configuration does.
pub const OUT_DIR_ENV: &str = "CARNOT_LAB_OUT";
const FALLBACK_OUT_DIR: &str = "carnot-out";

/// Files written and one summary line per diagnostic.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub solve_summary: String,
    pub summaries: Vec<String>,
}

/// Runs the pipeline described by `cfg`. `out` overrides the configured
/// output directory.
pub fn run(cfg: &Config, out: Option<&Path>) -> Result<RunOutcome, LabError> {
    let g = cfg.group()?;
    let grid = cfg.grid(g.n())?;
    for d in &cfg.diagnostics {
        validate(&g, &grid, d)?;
    }

    let made = manufactured_instance(&cfg.instance.name, &g, &grid).map_err(|e| LabError::Config(e.to_string()))?;
    let inst = match cfg.instance.zero_tol {
        None => made.instance,
        Some(t) => ObstacleInstance::new(g.clone(), made.instance.f, made.instance.boundary, Some(t))?,
    };
    let settings = cfg.solver.obstacle_settings(made.seed);
    let res = match cfg.solver.method {
        Method::NoSign => solve_no_sign(&inst, &settings),
        Method::Classical => solve_classical_obstacle(&inst, &settings),
    }
    .map_err(|e| LabError::Solver(e.to_string()))?;
    if !res.converged {
        return Err(LabError::Solver(format!(
            "active set did not settle after {} updates{} (residual {:e})",
            res.iterations,
            if res.cycle { ", cycle detected" } else { "" },
            res.residual
        )));
    }

    let out_dir = resolve_out_dir(cfg, out);
    std::fs::create_dir_all(&out_dir)?;
    let mut files = Vec::new();
    let field_path = out_dir.join("solution.csv");
    io::write_field_csv(&field_path, &res.u, Some(&res.active_mask))?;
    files.push(field_path);
    if cfg.output.binary {
        let p = out_dir.join("solution.bin");
        io::write_field_binary(&p, &res.u)?;
        files.push(p);
    }
    let solve_summary = format!(
        "solve: {} on {}, {} active-set updates, residual {:.3e}, {} active nodes",
        cfg.instance.name,
        io::grid_id(&grid),
        res.iterations,
        res.residual,
        res.active_mask.count()
    );

    let lab = Analysis::new(&g, &res.u).map_err(|e| LabError::Solver(e.to_string()))?;
    let mut seen: HashMap<&'static str, usize> = HashMap::new();
    let mut summaries = Vec::new();
    for d in &cfg.diagnostics {
        let (rows, summary) = evaluate(&lab, &inst, &settings.krylov, d)?;
        let k = seen.entry(d.kind()).or_insert(0);
        let name = if *k == 0 { format!("{}.csv", d.kind()) } else { format!("{}_{}.csv", d.kind(), *k) };
        *k += 1;
        let path = out_dir.join(name);
        io::write_report(&path, &rows)?;
        files.push(path);
        summaries.push(summary);
    }
    Ok(RunOutcome { out_dir, files, solve_summary, summaries })
}

fn resolve_out_dir(cfg: &Config, out: Option<&Path>) -> PathBuf {
    if let Some(p) = out {
        return p.to_path_buf();
    }
    if let Some(p) = &cfg.output.dir {
        return p.clone();
    }
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

/// Checks run before the solve: shapes, the `r ≥ 8h` rule, and that every
/// ball sits inside the box.
fn validate(g: &GroupSpec, grid: &GridSpec, d: &Diagnostic) -> Result<(), LabError> {
    let n = g.n();
    let floor = 8.0 * grid.max_spacing(g.m());
    let point = |x: &[f64], what: &str| {
        if x.len() == n {
            Ok(())
        } else {
            Err(LabError::Config(format!("{}: `{what}` needs {n} coordinates, got {}", d.kind(), x.len())))
        }
    };
    let radius = |x0: &[f64], r: f64| {
        if !(r > 0.0) {
            return Err(LabError::Config(format!("{}: radius must be positive, got {r}", d.kind())));
        }
        if r < floor * (1.0 - 1e-12) {
            return Err(LabError::Precondition(format!(
                "{}: radius r = {r} is below 8h = {floor} (eight first-layer grid spacings)",
                d.kind()
            )));
        }
        if !Ball::fits_in_box(g, grid, x0, r) {
            return Err(LabError::Precondition(format!("{}: ball of radius {r} at {x0:?} leaves the grid box", d.kind())));
        }
        Ok(())
    };
    match d {
        Diagnostic::Growth { x0, radii, sigma } => {
            point(x0, "x0")?;
            if radii.is_empty() {
                return Err(LabError::Config("growth: empty radius list".into()));
            }
            if !(*sigma > 0.0 && *sigma < 1.0) {
                return Err(LabError::Config(format!("growth: sigma must lie in (0, 1), got {sigma}")));
            }
            radii.iter().try_for_each(|&r| radius(x0, r))
        }
        Diagnostic::Decay { x0, radii, r0, .. } => {
            point(x0, "x0")?;
            match (radii, r0) {
                (Some(rs), None) if !rs.is_empty() => rs.iter().try_for_each(|&r| radius(x0, r)),
                (None, Some(r)) => radius(x0, *r),
                _ => Err(LabError::Config("decay: give exactly one of `radii` (nonempty) or `r0`".into())),
            }
        }
        Diagnostic::Coincidence { x0, r, .. } | Diagnostic::Polynomial { x0, r } => {
            point(x0, "x0")?;
            radius(x0, *r)
        }
        Diagnostic::Scaling { x0, r1, r2 } => {
            point(x0, "x0")?;
            if !(r1 < r2) {
                return Err(LabError::Config(format!("scaling: need r1 < r2, got {r1} and {r2}")));
            }
            radius(x0, *r1)?;
            radius(x0, *r2)
        }
        Diagnostic::C11 { lo, hi } | Diagnostic::ThirdDifference { lo, hi, .. } => {
            point(lo, "lo")?;
            point(hi, "hi")?;
            if let Diagnostic::ThirdDifference { direction, .. } = d {
                if *direction >= g.m() {
                    return Err(LabError::Config(format!("third_difference: direction {direction} is not horizontal")));
                }
            }
            Ok(())
        }
        Diagnostic::Blowup { x0, r, sigma, intervals } => {
            point(x0, "x0")?;
            if !(*sigma > 0.0 && *sigma < 1.0) {
                return Err(LabError::Config(format!("blowup: sigma must lie in (0, 1), got {sigma}")));
            }
            if *intervals < 4 {
                return Err(LabError::Config("blowup: at least 4 intervals".into()));
            }
            radius(x0, *r)
        }
    }
}

/// Core failures inside a diagnostic: resource and geometry problems are
/// precondition failures, the rest are solver failures.
fn diag_error(kind: &str, e: Error) -> LabError {
    match e {
        Error::NotConverged { .. } | Error::DisconnectedDomain { .. } | Error::NonFinite(_) => LabError::Solver(format!("{kind}: {e}")),
        _ => LabError::Precondition(format!("{kind}: {e}")),
    }
}

fn evaluate(lab: &Analysis, inst: &ObstacleInstance, krylov: &KrylovSettings, d: &Diagnostic) -> Result<(Vec<ReportRow>, String), LabError> {
    let g = lab.group();
    let grid = lab.grid();
    let kind = d.kind();
    let err = |e| diag_error(kind, e);
    let base = ReportRow {
        x0: String::new(),
        r: None,
        r2: None,
        quantity: String::new(),
        value: None,
        h: grid.max_spacing(g.m()),
        grid_id: io::grid_id(grid),
    };
    let row = |x0: &[f64], r: Option<f64>, r2: Option<f64>, q: &str, v: Option<f64>| ReportRow {
        x0: io::format_point(x0),
        r,
        r2,
        quantity: q.into(),
        value: v,
        ..base.clone()
    };
    let mut rows = Vec::new();
    let summary = match d {
        Diagnostic::Growth { x0, radii, sigma } => {
            let rep = lab.growth_report(x0, radii, *sigma).map_err(err)?;
            for ((r, s), q) in rep.radii.iter().zip(&rep.sups).zip(&rep.ratios) {
                rows.push(row(x0, Some(*r), None, "growth_sup", Some(*s)));
                rows.push(row(x0, Some(*r), None, "growth_ratio", Some(*q)));
            }
            let lo = rep.ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = rep.ratios.iter().copied().fold(0.0, f64::max);
            format!("growth: sup/r² in [{lo:.4e}, {hi:.4e}] over {} radii (sigma {sigma})", rep.radii.len())
        }
        Diagnostic::Decay { x0, radii, r0, zero_tol } => {
            let radii = match (radii, r0) {
                (Some(rs), _) => rs.clone(),
                (None, Some(r)) => dyadic_radii(g, grid, *r),
                (None, None) => unreachable!("validated"),
            };
            let rep = lab.decay_report(x0, &radii, zero_tol.unwrap_or(inst.zero_tol)).map_err(err)?;
            for ((r, m), p) in rep.radii.iter().zip(&rep.measures).zip(&rep.p_norms) {
                rows.push(row(x0, Some(*r), None, "measure", Some(*m)));
                rows.push(row(x0, Some(*r), None, "p_norm", Some(*p)));
            }
            for (w, b) in rep.radii.windows(2).zip(&rep.beta_eff) {
                rows.push(row(x0, Some(w[0]), Some(w[1]), "beta_eff", *b));
            }
            let betas: Vec<String> = rep.beta_eff.iter().map(|b| b.map_or("absent".into(), |v| format!("{v:.3}"))).collect();
            let measures: Vec<String> = rep.measures.iter().map(|m| format!("{m:.4}")).collect();
            format!("decay: measures [{}], beta_eff [{}]", measures.join(", "), betas.join(", "))
        }
        Diagnostic::Coincidence { x0, r, zero_tol } => {
            let m = lab.coincidence_measure(x0, *r, zero_tol.unwrap_or(inst.zero_tol)).map_err(err)?;
            rows.push(row(x0, Some(*r), None, "measure", Some(m)));
            format!("coincidence: measure {m:.4} at r = {r}")
        }
        Diagnostic::Scaling { x0, r1, r2 } => {
            let s = lab.scaling_deviation(x0, *r1, *r2).map_err(err)?;
            rows.push(row(x0, Some(*r1), Some(*r2), "deviation", Some(s.value)));
            rows.push(row(x0, Some(*r1), Some(*r2), "factor", Some(s.factor)));
            format!("scaling: |P_r1 − P_r2| = {:.4e} for (r1, r2) = ({r1}, {r2})", s.value)
        }
        Diagnostic::Polynomial { x0, r } => {
            let p = lab.approx_polynomial(x0, *r).map_err(err)?;
            let hess = lab.p_matrix(x0, *r).map_err(err)?;
            rows.extend(io::polynomial_rows(&p, &hess, &row(x0, Some(*r), None, "", None)));
            format!("polynomial: |P| = {:.4e} at r = {r}", hess.norm())
        }
        Diagnostic::C11 { lo, hi } => {
            let region = box_region(grid, lo, hi);
            let v = lab.c11_norm(&region).map_err(err)?;
            rows.push(ReportRow { x0: region_label(lo, hi), quantity: "c11_norm".into(), value: Some(v), ..base.clone() });
            format!("c11: max |D_h² u| = {v:.4e} over {} nodes", region.count())
        }
        Diagnostic::ThirdDifference { lo, hi, direction } => {
            let region = box_region(grid, lo, hi);
            let v = lab.third_difference_sup(&region, *direction).map_err(err)?;
            let q = format!("third_difference_x{}", direction + 1);
            rows.push(ReportRow { x0: region_label(lo, hi), quantity: q, value: Some(v), ..base.clone() });
            format!("third_difference: {v:.4e} along X{}", direction + 1)
        }
        Diagnostic::Blowup { x0, r, sigma, intervals } => {
            let settings = BlowupSettings { intervals: *intervals, krylov: krylov.clone() };
            let rep = blowup_with(lab, &inst.f, x0, *r, *sigma, &settings).map_err(err)?;
            rows.push(row(x0, Some(*r), None, "sup_d2_v", Some(rep.sup_d2_v)));
            rows.push(row(x0, Some(*r), None, "sup_w", Some(rep.sup_w)));
            rows.push(row(x0, Some(*r), None, "sigma", Some(rep.sigma)));
            format!("blowup: sup|D_h² v| = {:.4e}, sup|w| = {:.4e} at r = {r}", rep.sup_d2_v, rep.sup_w)
        }
    };
    Ok((rows, summary))
}

fn region_label(lo: &[f64], hi: &[f64]) -> String {
    format!("{}..{}", io::format_point(lo), io::format_point(hi))
}
