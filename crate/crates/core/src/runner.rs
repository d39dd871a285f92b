//! Executes a run configuration and writes its artifacts.

use crate::audit::{
    audit_calc_inequality, audit_dm_bound, audit_g, audit_microlocal_theta, audit_theta4, AuditOptions, InequalityId, ThetaParams,
};
use crate::config::{Mode, RunConfig};
use crate::elimination::{default_samples, residual_check, solve_constants, xi_independence, UtmConstants};
use crate::evaluator::evaluate_linear_detailed;
use crate::fd::solve_fd;
use crate::field::{Grid, SolutionField};
use crate::picard::{contraction_report, pde_residual, picard_solve};
use crate::problem::{compatibility_check, data_norm, lifespan, parameter_window, validate_spec, ValidatedSpec};
use crate::{Error, Result};
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub report: Value,
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let p = self.dir.join(name);
        std::fs::write(&p, contents)?;
        self.files.push(p);
        Ok(())
    }
}

/// Runs `config`, writing into `config.output`. Audit and constants reports contain no wall-clock
/// data, so equal configurations give byte-identical files.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let dir = Path::new(&config.output);
    std::fs::create_dir_all(dir)?;
    let mut w = Writer { dir: dir.to_path_buf(), files: vec![] };
    let report = match config.mode {
        Mode::Linear | Mode::Nonlinear | Mode::Reference | Mode::Compare => solve_mode(config, &mut w)?,
        Mode::Constants => constants_mode(config, &mut w)?,
        Mode::Audit => audit_mode(config)?,
        Mode::Params => params_mode(config)?,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Numerical(e.to_string()))? + "\n";
    w.write("report.json", &text)?;
    Ok(RunOutcome { files: w.files, report })
}

fn grid(c: &RunConfig) -> Grid {
    let lin = |a: f64, b: f64, n: usize| -> Vec<f64> {
        if n == 1 {
            return vec![a];
        }
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    };
    Grid { x: lin(c.x_min, c.x_max, c.nx), t: lin(0.0, c.problem.t_max, c.nt) }
}

fn norms(f: &SolutionField) -> Value {
    json!({ "l2": f.l2(), "max_modulus": f.max_modulus(), "max_imag": f.max_imag() })
}

fn compatibility(spec: &ValidatedSpec) -> Result<Value> {
    Ok(serde_json::to_value(compatibility_check(spec)?).unwrap_or(Value::Null))
}

fn solve_mode(c: &RunConfig, w: &mut Writer) -> Result<Value> {
    let nonlinear = c.mode == Mode::Nonlinear || (c.nonlinear && matches!(c.mode, Mode::Reference | Mode::Compare));
    let spec = validate_spec(&c.problem, nonlinear)?;
    let g = grid(c);
    let mut report = json!({
        "mode": c.mode.name(),
        "m": spec.m,
        "j": spec.j,
        "s": spec.s,
        "T": spec.t_max,
        "nonlinear": nonlinear,
        "grid": { "x_min": c.x_min, "x_max": c.x_max, "nx": c.nx, "nt": c.nt },
        "compatibility": compatibility(&spec)?,
    });
    let mut warnings = spec.warnings.clone();
    let mut timings = serde_json::Map::new();

    let utm = if matches!(c.mode, Mode::Linear | Mode::Nonlinear | Mode::Compare) {
        let k = solve_constants(spec.m)?;
        let t0 = Instant::now();
        let field = if nonlinear {
            let (field, state) = picard_solve(&spec, &k, &g, &c.solver, c.max_iter, c.tol)?;
            warnings.extend(state.warnings.iter().cloned());
            report["picard"] = json!({
                "iterations": state.diff_norms.len(),
                "diff_norms": state.diff_norms,
                "contraction": contraction_report(&state),
                "pde_residual": pde_residual(&field, spec.m).ok(),
            });
            field
        } else {
            let (field, info) = evaluate_linear_detailed(&spec, &k, &g, &c.solver)?;
            warnings.extend(info.warnings.iter().cloned());
            report["contour"] = json!({ "radius": info.radius, "nodes": info.nodes });
            field
        };
        timings.insert("utm_seconds".into(), json!(t0.elapsed().as_secs_f64()));
        report["norms"] = norms(&field);
        Some(field)
    } else {
        None
    };

    let fd = if matches!(c.mode, Mode::Reference | Mode::Compare) {
        let mut fdc = c.fd;
        fdc.nonlinear = nonlinear;
        let t0 = Instant::now();
        let field = solve_fd(&spec, &fdc)?.resample(&g)?;
        timings.insert("fd_seconds".into(), json!(t0.elapsed().as_secs_f64()));
        report["fd"] = json!({ "length": fdc.length, "nx": fdc.nx, "nt": fdc.nt, "theta": fdc.theta });
        if utm.is_none() {
            report["norms"] = norms(&field);
        }
        Some(field)
    } else {
        None
    };

    match (&utm, &fd) {
        (Some(u), Some(f)) => {
            report["relative_l2_utm_vs_fd"] = json!(SolutionField::relative_l2(u, f)?);
            w.write("field.csv", &u.to_csv())?;
            w.write("field_fd.csv", &f.to_csv())?;
        }
        (Some(u), None) => w.write("field.csv", &u.to_csv())?,
        (None, Some(f)) => w.write("field.csv", &f.to_csv())?,
        (None, None) => {}
    }
    report["warnings"] = json!(warnings);
    report["timings"] = Value::Object(timings);
    Ok(report)
}

/// `C p n re im` and `Cprime p l re im` lines.
pub fn constants_table(k: &UtmConstants) -> String {
    let mut s = String::new();
    for (p, row) in k.c.iter().enumerate() {
        for (n, v) in row.iter().enumerate() {
            let _ = writeln!(s, "C {} {} {:.16e} {:.16e}", p + 1, n + 1, v.re, v.im);
        }
    }
    for (p, row) in k.cprime.iter().enumerate() {
        for (l, v) in row.iter().enumerate() {
            let _ = writeln!(s, "Cprime {} {} {:.16e} {:.16e}", p + 1, l, v.re, v.im);
        }
    }
    s
}

fn constants_mode(c: &RunConfig, w: &mut Writer) -> Result<Value> {
    let m = c.problem.m;
    let k = solve_constants(m)?;
    w.write("constants.txt", &constants_table(&k))?;
    let samples = default_samples(m);
    Ok(json!({
        "mode": "constants",
        "m": m,
        "j": k.j,
        "condition": k.condition,
        "residual": residual_check(&k, &samples)?,
        "xi_independence": xi_independence(m, &samples)?,
    }))
}

fn audit_mode(c: &RunConfig) -> Result<Value> {
    let a = &c.audit;
    let which = a.which.ok_or_else(|| Error::invalid("audit mode requires the key 'audit'"))?;
    let m = c.problem.m;
    let opts = |default_radius: f64| AuditOptions {
        samples: a.samples,
        seed: c.seed,
        radius: if a.radius > 0.0 { a.radius } else { default_radius },
    };
    let theta = ThetaParams { m, b: a.b, b1: a.b1, alpha1: a.alpha1 };
    use InequalityId::*;
    let report = match which {
        DmXi | DmXi1 => audit_dm_bound(m, which, &opts(1e6))?,
        Calc1 | Calc1a | Calc2 | Calc3 | Calc4 | Calc5 => audit_calc_inequality(which, a.l, a.l1, &opts(1e6))?,
        G1 | G2 => audit_g(which, c.problem.s, a.b, m, a.ell, a.tau_max, a.samples)?,
        Theta4 => audit_theta4(&theta, &opts(1e6))?,
        Theta2 | Theta3 | Theta5 | Theta6 => audit_microlocal_theta(which, &theta, &opts(100.0))?,
    };
    Ok(json!({ "mode": "audit", "seed": c.seed, "audit": report }))
}

fn params_mode(c: &RunConfig) -> Result<Value> {
    let spec = validate_spec(&c.problem, false)?;
    let window = parameter_window(spec.s, spec.m)?;
    let norm = data_norm(&spec, &c.solver.quad)?;
    Ok(json!({
        "mode": "params",
        "m": spec.m,
        "s": spec.s,
        "window": window,
        "ordered": window.is_ordered(),
        "data_norm": norm,
        "lifespan_c2_1": lifespan(spec.s, spec.m, norm, 1.0)?,
        "compatibility": compatibility(&spec)?,
        "warnings": spec.warnings,
    }))
}
