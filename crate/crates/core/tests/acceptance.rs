//! Acceptance suite: one PASS/FAIL line per criterion.

use kdvm_core::audit::*;
use kdvm_core::config::{emit_config, parse_config};
use kdvm_core::contour::rotation_numbers;
use kdvm_core::data::{DataHandle, Forcing};
use kdvm_core::elimination::{assemble_system, default_samples, residual_check, solve_constants, xi_independence};
use kdvm_core::evaluator::{evaluate_linear, trace_derivatives, wholeline_oracle, SolverConfig};
use kdvm_core::fd::{solve_fd, FdConfig};
use kdvm_core::field::{Grid, SolutionField};
use kdvm_core::picard::{pde_residual, picard_solve};
use kdvm_core::problem::{beta, parameter_window, validate_spec, ProblemSpec, ValidatedSpec};
use kdvm_core::runner::run;
use kdvm_core::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn data(text: &str) -> DataHandle {
    DataHandle::parse(text).expect("builtin data")
}

fn spec(m: usize, t_max: f64, u0: DataHandle, g: Vec<DataHandle>, nonlinear: bool) -> Result<ValidatedSpec, String> {
    validate_spec(&ProblemSpec { m, t_max, s: 0.0, u0, g, f: Forcing::Zero }, nonlinear).map_err(e2s)
}

/// Relative l2 of the real part of `f` against `exact` along a flat slice.
fn rel_err(values: &[C64], exact: &[f64]) -> f64 {
    let num: f64 = values.iter().zip(exact).map(|(v, e)| (v.re - e).powi(2) + v.im.powi(2)).sum();
    let den: f64 = exact.iter().map(|e| e * e).sum();
    (num / den).sqrt()
}

fn crit1() -> Outcome {
    let k = solve_constants(3).map_err(e2s)?;
    let tp = 2.0 * PI;
    let expect = [
        (k.c[0][0], C64::from_polar(1.0, 2.0 * PI / 3.0) / tp, "C_{1,1}"),
        (k.c[0][1], C64::from_polar(1.0, 4.0 * PI / 3.0) / tp, "C_{1,2}"),
        (k.cprime[0][0], C64::new(3.0 / tp, 0.0), "C'_{1,0}"),
    ];
    let mut worst = 0.0f64;
    for (got, want, name) in expect {
        let d = (got - want).norm();
        ensure(d <= 1e-10, format!("{name} = {got}, expected {want}"))?;
        worst = worst.max(d);
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn crit2() -> Outcome {
    let mut worst = (0.0f64, 0.0f64);
    for m in [5, 7] {
        let k = solve_constants(m).map_err(e2s)?;
        let samples = default_samples(m);
        let r = residual_check(&k, &samples).map_err(e2s)?;
        let x = xi_independence(m, &samples).map_err(e2s)?;
        ensure(r < 1e-10 && x < 1e-10, format!("m = {m}: residual {r:e}, xi-independence {x:e}"))?;
        worst = (worst.0.max(r), worst.1.max(x));
    }
    let k5 = solve_constants(5).map_err(e2s)?;
    ensure(k5.c.len() == 2 && k5.c.iter().all(|r| r.len() == 3), "m = 5: expected 2 sectors x 3 rotations")?;
    ensure(k5.cprime.iter().all(|r| r.len() == 2), "m = 5: expected 2 boundary constants per sector")?;
    for p in 1..=2 {
        let sys = assemble_system(5, p).map_err(e2s)?;
        for t in &sys.rhs_templates {
            for &(l, coeff) in &t.boundary {
                // boundary term coefficient alpha^{4-l} carries (i xi)^{4-l}
                let want = t.alpha.powu(4 - l as u32);
                ensure((coeff.norm() - want.norm()).abs() < 1e-14 && (coeff / want).im.abs() < 1e-14, format!("m = 5, p = {p}: boundary power mismatch at l = {l}"))?;
            }
        }
    }
    Ok(format!("residual {:.1e}, xi-independence {:.1e}", worst.0, worst.1))
}

fn crit3() -> Outcome {
    let mut worst = 0.0f64;
    for m in [3usize, 5, 7, 9] {
        for p in 1..=(m - 1) / 2 {
            for a in rotation_numbers(m, p).map_err(e2s)? {
                worst = worst.max((a.powu(m as u32) - 1.0).norm());
            }
        }
    }
    ensure(worst <= 1e-14, format!("max |alpha^m - 1| = {worst:e}"))?;
    let r = rotation_numbers(3, 1).map_err(e2s)?;
    let want = [C64::new(0.0, 2.0 * PI / 3.0).exp(), C64::new(0.0, 4.0 * PI / 3.0).exp()];
    ensure(r.len() == 2, "rotation_numbers(3, 1) must have two entries")?;
    for (a, w) in r.iter().zip(want) {
        ensure(*a == w, format!("rotation number {a} differs from {w}"))?;
    }
    Ok(format!("max |alpha^m - 1| = {worst:.1e}"))
}

fn crit4() -> Outcome {
    let v = spec(3, 0.25, data("builtin:xexp"), vec![DataHandle::zero()], false)?;
    let k = solve_constants(3).map_err(e2s)?;
    let grid = Grid::uniform(10.0, 128, 0.0, 1);
    let f = evaluate_linear(&v, &k, &grid, &SolverConfig::default()).map_err(e2s)?;
    let exact: Vec<f64> = grid.x.iter().map(|x| x * (-x).exp()).collect();
    let e = rel_err(&f.values, &exact);
    ensure(e <= 1e-4, format!("relative L2 error {e:e} > 1e-4"))?;
    Ok(format!("relative L2 error {e:.2e}"))
}

fn boundary_error(m: usize, t_max: f64, g: Vec<DataHandle>) -> Result<f64, String> {
    let g0 = g[0].clone();
    let v = spec(m, t_max, DataHandle::zero(), g, false)?;
    let k = solve_constants(m).map_err(e2s)?;
    let times: Vec<f64> = (0..64).map(|i| t_max * i as f64 / 63.0).collect();
    let grid = Grid::new(vec![1e-3], times.clone()).map_err(e2s)?;
    let f = evaluate_linear(&v, &k, &grid, &SolverConfig::default()).map_err(e2s)?;
    let exact: Vec<f64> = times.iter().map(|&t| g0.eval(t)).collect();
    Ok(rel_err(&f.values, &exact))
}

fn crit5() -> Outcome {
    let e3 = boundary_error(3, 30.0, vec![data("builtin:polyexp(power=2, rate=0.2, amp=0.04)")])?;
    ensure(e3 <= 1e-3, format!("m = 3: relative L2 error {e3:e} > 1e-3"))?;
    let g0 = data("builtin:polyexp(power=2, rate=2, amp=1)");
    let g1 = data("builtin:polyexp(power=2, rate=2, amp=0.5)");
    let e5 = boundary_error(5, 4.0, vec![g0, g1])?;
    ensure(e5 <= 5e-3, format!("m = 5: relative L2 error {e5:e} > 5e-3"))?;
    Ok(format!("m = 3 error {e3:.2e}, m = 5 error {e5:.2e}"))
}

fn crit6() -> Outcome {
    let u0 = data("builtin:bump(center=3, halfwidth=1, amp=1)");
    let cfg = SolverConfig::default();
    let g = trace_derivatives(&u0, 3, 0.05, 1001, 6.0, &cfg).map_err(e2s)?;
    let v = spec(3, 0.05, u0.clone(), g, false)?;
    let k = solve_constants(3).map_err(e2s)?;
    let x: Vec<f64> = (10..=60).map(|i| i as f64 / 10.0).collect();
    let t: Vec<f64> = (0..=10).map(|i| 0.005 * i as f64).collect();
    let grid = Grid::new(x, t).map_err(e2s)?;
    let f = evaluate_linear(&v, &k, &grid, &cfg).map_err(e2s)?;
    let o = wholeline_oracle(&u0, 3, &grid, &cfg).map_err(e2s)?;
    let e = SolutionField::relative_l2(&f, &o).map_err(e2s)?;
    ensure(e <= 1e-4, format!("relative L2 vs whole-line oracle {e:e} > 1e-4"))?;
    Ok(format!("relative L2 vs whole-line oracle {e:.2e}"))
}

fn crit7() -> Outcome {
    let k = solve_constants(3).map_err(e2s)?;
    let cfg = SolverConfig::default();
    let grid = Grid::uniform(6.0, 25, 0.1, 5);
    let u0 = data("builtin:xexp");
    let g0 = data("builtin:polyexp(power=2, rate=1, amp=1)");
    let solve = |u: DataHandle, g: DataHandle| -> Result<SolutionField, String> {
        evaluate_linear(&spec(3, 0.1, u, vec![g], false)?, &k, &grid, &cfg).map_err(e2s)
    };
    let a = solve(u0.clone(), DataHandle::zero())?;
    let b = solve(DataHandle::zero(), g0.clone())?;
    let ab = solve(u0, g0)?;
    let scale = ab.max_modulus();
    let sum_dev = ab.values.iter().zip(a.values.iter().zip(&b.values)).map(|(s, (x, y))| (s - x - y).norm()).fold(0.0, f64::max) / scale;
    let a2 = solve(data("builtin:xexp(amp=2.5)"), DataHandle::zero())?;
    let hom_dev = a2.values.iter().zip(&a.values).map(|(x, y)| (x - 2.5 * y).norm()).fold(0.0, f64::max) / a2.max_modulus();
    ensure(sum_dev <= 1e-12 && hom_dev <= 1e-12, format!("linearity deviations: additivity {sum_dev:e}, homogeneity {hom_dev:e}"))?;

    let mut worst_imag = 0.0f64;
    let suite = [
        ("builtin:xexp", "builtin:zero"),
        ("builtin:exp(amp=1, rate=2)", "builtin:zero"),
        ("builtin:gauss_bump(center=3, width=0.7, amp=1)", "builtin:zero"),
        ("builtin:bump(center=3, halfwidth=1, amp=1)", "builtin:zero"),
        ("builtin:zero", "builtin:polyexp(power=2, rate=1, amp=1)"),
        ("builtin:xexp", "builtin:polyexp(power=3, rate=2, amp=0.5)"),
    ];
    for (u, g) in suite {
        let f = solve(data(u), data(g))?;
        let r = f.max_imag() / f.max_modulus();
        ensure(r <= 1e-6, format!("u0 = {u}, g0 = {g}: relative imaginary part {r:e}"))?;
        worst_imag = worst_imag.max(r);
    }
    let k5 = solve_constants(5).map_err(e2s)?;
    let v5 = spec(5, 0.1, data("builtin:xexp"), vec![data("builtin:polyexp(power=2, rate=1, amp=1)"), DataHandle::zero()], false)?;
    let f5 = evaluate_linear(&v5, &k5, &grid, &cfg).map_err(e2s)?;
    worst_imag = worst_imag.max(f5.max_imag() / f5.max_modulus());
    ensure(worst_imag <= 1e-6, format!("m = 5: relative imaginary part {worst_imag:e}"))?;
    Ok(format!("additivity {sum_dev:.1e}, homogeneity {hom_dev:.1e}, max relative Im {worst_imag:.1e}"))
}

fn picard_spec(eps: f64) -> Result<ValidatedSpec, String> {
    spec(3, 0.2, data(&format!("builtin:xexp(amp={eps}, rate=1)")), vec![DataHandle::zero()], true)
}

fn crit8() -> Outcome {
    let v = picard_spec(0.05)?;
    let k = solve_constants(3).map_err(e2s)?;
    let cfg = SolverConfig::default();
    let grid = Grid::uniform(20.0, 101, 0.2, 21);
    let (u, st) = picard_solve(&v, &k, &grid, &cfg, 25, 1e-8).map_err(e2s)?;
    ensure(st.converged, format!("no convergence in 25 iterations; differences {:?}", st.diff_norms))?;
    let worst_ratio = st.contraction_ratios.iter().cloned().fold(0.0, f64::max);
    ensure(st.contraction_ratios.iter().all(|&r| r < 1.0), format!("contraction ratios {:?}", st.contraction_ratios))?;
    let mut fd = FdConfig::new(40.0, 400, 200);
    fd.nonlinear = true;
    let w = solve_fd(&v, &fd).map_err(e2s)?.resample(&grid).map_err(e2s)?;
    let gap = SolutionField::relative_l2(&u, &w).map_err(e2s)?;
    ensure(gap <= 1e-2, format!("Picard vs reference FD {gap:e} > 1e-2"))?;
    let r1 = pde_residual(&u, 3).map_err(e2s)?;
    let (u2, _) = picard_solve(&v, &k, &Grid::uniform(20.0, 201, 0.2, 41), &cfg, 25, 1e-8).map_err(e2s)?;
    let r2 = pde_residual(&u2, 3).map_err(e2s)?;
    ensure(r2 < r1, format!("pde residual did not decrease under refinement: {r1:e} -> {r2:e}"))?;
    Ok(format!(
        "{} iterations, max ratio {worst_ratio:.1e}, vs FD {gap:.1e}, residual {r1:.2e} -> {r2:.2e}",
        st.diff_norms.len()
    ))
}

fn crit9() -> Outcome {
    let k = solve_constants(3).map_err(e2s)?;
    let cfg = SolverConfig::default();
    let grid = Grid::uniform(20.0, 101, 0.2, 21);
    let mut corr = Vec::new();
    for eps in [0.0125, 0.025, 0.05] {
        let v = picard_spec(eps)?;
        let (u, st) = picard_solve(&v, &k, &grid, &cfg, 25, 1e-8).map_err(e2s)?;
        let lin = &st.iterates[0];
        corr.push(SolutionField::relative_l2(&u, lin).map_err(e2s)? * lin.l2());
    }
    let ratios: Vec<f64> = corr.windows(2).map(|w| w[1] / w[0]).collect();
    for r in &ratios {
        ensure(*r >= 4.0 / 1.5 && *r <= 4.0 * 1.5, format!("correction ratios {ratios:?} not within 1.5x of 4"))?;
    }
    Ok(format!("corrections {:.2e} {:.2e} {:.2e}, doubling ratios {:.3} {:.3}", corr[0], corr[1], corr[2], ratios[0], ratios[1]))
}

fn crit10() -> Outcome {
    let opts = AuditOptions::default();
    let r3 = audit_dm_bound(3, InequalityId::DmXi, &opts).map_err(e2s)?;
    ensure((r3.empirical - 3.0).abs() <= 1e-12, format!("c_3 = {}", r3.empirical))?;
    let mut parts = vec![format!("c_3 = {}", r3.empirical)];
    for m in [5, 7] {
        for which in [InequalityId::DmXi, InequalityId::DmXi1] {
            let r = audit_dm_bound(m, which, &opts).map_err(e2s)?;
            ensure(r.empirical > 0.0 && r.bounded && r.stability_delta < 0.25, format!("m = {m} {which}: c = {}, drift {}", r.empirical, r.stability_delta))?;
            parts.push(format!("m={m} {which} c={:.4} drift {:.1e}", r.empirical, r.stability_delta));
        }
    }
    Ok(parts.join(", "))
}

fn crit11() -> Outcome {
    let exact = calc_ratio(InequalityId::Calc1, 0.0, 0.0, 0.75, 0.75).map_err(e2s)?;
    ensure((exact - 1.0).abs() <= 1e-6, format!("calc_1 exact point = {exact}"))?;
    let opts = AuditOptions { samples: 10_000, radius: 1e6, ..AuditOptions::default() };
    let mut parts = vec![format!("calc_1 exact point {exact}")];
    for (which, l, l1) in [(InequalityId::Calc1, 0.75, 0.75), (InequalityId::Calc5, 0.3, 0.3)] {
        let r = audit_calc_inequality(which, l, l1, &opts).map_err(e2s)?;
        ensure(r.bounded && r.empirical.is_finite(), format!("{which}: sup {} drift {}", r.empirical, r.stability_delta))?;
        parts.push(format!("{which} sup {:.3} drift {:.1e}", r.empirical, r.stability_delta));
    }
    Ok(parts.join(", "))
}

fn crit12() -> Outcome {
    let t4 = audit_theta4(&ThetaParams { m: 3, b: 0.45, b1: 0.45, alpha1: 0.55 }, &AuditOptions::default()).map_err(e2s)?;
    ensure(t4.bounded, format!("theta_4 sup {} drift {}", t4.empirical, t4.stability_delta))?;
    let g1 = audit_g(InequalityId::G1, 0.0, 0.45, 3, 0, 1e6, 1000).map_err(e2s)?;
    ensure(g1.empirical.is_finite() && g1.bounded, format!("G_1 sup {} drift {}", g1.empirical, g1.stability_delta))?;
    let opts = AuditOptions { radius: 100.0, ..AuditOptions::default() };
    let hi = audit_microlocal_theta(InequalityId::Theta2, &ThetaParams { m: 3, b: 0.49, b1: 0.49, alpha1: 0.6 }, &opts).map_err(e2s)?;
    ensure(hi.bounded, format!("theta_2 at b' = 0.49: sup {} drift {}", hi.empirical, hi.stability_delta))?;
    let lo = audit_microlocal_theta(InequalityId::Theta2, &ThetaParams { m: 3, b: 0.3, b1: 0.3, alpha1: 0.6 }, &opts).map_err(e2s)?;
    ensure(!lo.bounded && !lo.in_stated_range, format!("theta_2 at b' = 0.3 not flagged: sup {} drift {}", lo.empirical, lo.stability_delta))?;
    Ok(format!(
        "theta_4 sup {:.3} drift {:.1e}; G_1 sup {:.3}; theta_2 b'=0.49 drift {:.2}, b'=0.3 drift {:.2} (flagged)",
        t4.empirical, t4.stability_delta, g1.empirical, hi.stability_delta, lo.stability_delta
    ))
}

fn crit13() -> Outcome {
    let b = beta(0.0, 3).map_err(e2s)?;
    ensure((b - 1.0 / 36.0).abs() <= 1e-15, format!("beta(0, 3) = {b}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let m = [3usize, 5, 7, 9][rng.gen_range(0..4)];
        let j = ((m - 1) / 2) as f64;
        let s = rng.gen_range((-j + 0.25 + 1e-6)..(m as f64 - 1e-6));
        let w = parameter_window(s, m).map_err(e2s)?;
        ensure(w.is_ordered(), format!("window not ordered at s = {s}, m = {m}: {w:?}"))?;
    }
    Ok("100 sampled windows ordered, beta(0, 3) = 1/36".into())
}

const AUDIT_CONFIG: &str = "mode = audit\nm = 3\naudit = calc1\naudit_samples = 1000\nl = 0.75\nl1 = 0.75\nseed = 42\n";

fn crit14() -> Outcome {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let mut bytes = Vec::new();
    for name in ["a", "b"] {
        let mut c = parse_config(AUDIT_CONFIG).map_err(e2s)?;
        c.output = dir.path().join(name).to_string_lossy().into_owned();
        run(&c).map_err(e2s)?;
        bytes.push(std::fs::read(dir.path().join(name).join("report.json")).map_err(e2s)?);
    }
    ensure(bytes[0] == bytes[1], "seeded audit reports differ between runs")?;

    let text = "mode = compare\nm = 5\nT = 0.3\nu0 = builtin:gauss_bump(center=3, width=0.5, amp=1)\ng1 = builtin:polyexp(power=2, rate=1, amp=0.5)\nnx = 33\nfd_nx = 120\nseed = 7\n";
    let c = parse_config(text).map_err(e2s)?;
    let emitted = emit_config(&c);
    let back = parse_config(&emitted).map_err(e2s)?;
    ensure(back == c && emit_config(&back) == emitted, "config parse/emit does not round-trip")?;

    let v = spec(3, 0.1, data("builtin:xexp"), vec![DataHandle::zero()], false)?;
    let k = solve_constants(3).map_err(e2s)?;
    let f = evaluate_linear(&v, &k, &Grid::uniform(5.0, 11, 0.1, 3), &SolverConfig::default()).map_err(e2s)?;
    let csv = f.to_csv();
    let g = SolutionField::from_csv(&csv).map_err(e2s)?;
    ensure(g.to_csv() == csv, "CSV reload does not reprint identically")?;
    // 13 significant digits are printed
    let close = |a: f64, b: f64| (a - b).abs() <= 5e-13 * a.abs();
    let grid_ok = f.grid.x.iter().zip(&g.grid.x).chain(f.grid.t.iter().zip(&g.grid.t)).all(|(a, b)| close(*a, *b));
    let values_ok = f.values.iter().zip(&g.values).all(|(a, b)| close(a.re, b.re) && close(a.im, b.im));
    ensure(grid_ok && values_ok, "CSV reload differs beyond printed precision")?;
    Ok("audit reruns byte-identical, config and CSV round-trip".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, u64); 14] = [
        ("KdV constant recovery", crit1, 1),
        ("elimination certification m in {5,7}", crit2, 1),
        ("rotation invariance", crit3, 1),
        ("initial-trace recovery", crit4, 120),
        ("boundary-trace recovery", crit5, 300),
        ("whole-line decomposition identity", crit6, 300),
        ("linearity and realness", crit7, 60),
        ("Picard contraction and oracle agreement", crit8, 600),
        ("small-data scaling", crit9, 900),
        ("d_m identity and bound", crit10, 60),
        ("calculus inequalities", crit11, 120),
        ("multiplier audits", crit12, 600),
        ("parameter window", crit13, 1),
        ("determinism and round-trip", crit14, 60),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let result = f();
        let dt = t0.elapsed();
        let over = dt > Duration::from_secs(*budget);
        let (status, detail) = match (&result, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; runtime exceeds {budget} s budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("{status} criterion {n:>2} {name}: {detail} [{:.2} s]", dt.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
