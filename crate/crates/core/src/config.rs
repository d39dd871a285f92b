//! Flat `key = value` run configuration with line-numbered diagnostics.

use crate::audit::InequalityId;
use crate::data::{DataHandle, Forcing};
use crate::error::Issue;
use crate::evaluator::{SolverConfig, UpperLimit};
use crate::fd::FdConfig;
use crate::picard::{DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::problem::ProblemSpec;
use crate::transforms::OscillatoryRule;
use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Linear,
    Nonlinear,
    Reference,
    Compare,
    Constants,
    Audit,
    Params,
}

impl Mode {
    const ALL: [(Mode, &'static str); 7] = [
        (Mode::Linear, "linear"),
        (Mode::Nonlinear, "nonlinear"),
        (Mode::Reference, "reference"),
        (Mode::Compare, "compare"),
        (Mode::Constants, "constants"),
        (Mode::Audit, "audit"),
        (Mode::Params, "params"),
    ];

    pub fn name(&self) -> &'static str {
        Mode::ALL.iter().find(|(m, _)| m == self).unwrap().1
    }

    /// Modes that evaluate a problem on the space-time grid.
    pub fn solves(&self) -> bool {
        matches!(self, Mode::Linear | Mode::Nonlinear | Mode::Reference | Mode::Compare)
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL.iter().find(|(_, n)| *n == s).map(|(m, _)| *m).ok_or_else(|| {
            format!("unknown mode '{s}'; expected one of {}", Mode::ALL.map(|(_, n)| n).join(", "))
        })
    }
}

/// Exponents and sampling controls of an audit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditKeys {
    pub which: Option<InequalityId>,
    pub samples: usize,
    /// 0 selects a per-audit default.
    pub radius: f64,
    pub b: f64,
    pub b1: f64,
    pub alpha1: f64,
    pub l: f64,
    pub l1: f64,
    pub ell: usize,
    pub tau_max: f64,
}

impl Default for AuditKeys {
    fn default() -> Self {
        AuditKeys { which: None, samples: 1000, radius: 0.0, b: 0.45, b1: 0.45, alpha1: 0.55, l: 0.75, l1: 0.75, ell: 0, tau_max: 1e6 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: ProblemSpec,
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub nt: usize,
    pub solver: SolverConfig,
    pub max_iter: usize,
    pub tol: f64,
    /// Include the nonlinearity in reference and compare runs.
    pub nonlinear: bool,
    pub fd: FdConfig,
    pub audit: AuditKeys,
    pub output: String,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Linear,
            problem: ProblemSpec { m: 3, t_max: 0.1, s: 0.0, u0: DataHandle::zero(), g: vec![DataHandle::zero()], f: Forcing::Zero },
            x_min: 0.0,
            x_max: 10.0,
            nx: 101,
            nt: 11,
            solver: SolverConfig::default(),
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            nonlinear: false,
            fd: FdConfig::new(40.0, 800, 400),
            audit: AuditKeys::default(),
            output: "out".into(),
            seed: 0x5eed,
        }
    }
}

const KEYS: &[&str] = &[
    "mode", "m", "T", "s", "u0", "f", "x_min", "x_max", "nx", "nt", "truncation_radius", "panels", "oscillatory_rule", "rel_tol",
    "spectral_radius", "phase_per_panel", "order", "data_tail_terms", "boundary_tail_terms", "upper_limit", "max_iter", "tol",
    "nonlinear", "fd_length", "fd_nx", "fd_nt", "fd_theta", "audit", "audit_samples", "audit_radius", "b", "b1", "alpha1", "l",
    "l1", "ell", "tau_max", "output", "seed",
];

fn is_boundary_key(k: &str) -> Option<usize> {
    k.strip_prefix('g').and_then(|d| if d.is_empty() { None } else { d.parse().ok() })
}

fn upper_limit_name(u: UpperLimit) -> &'static str {
    match u {
        UpperLimit::EvaluationTime => "evaluation_time",
        UpperLimit::Horizon => "horizon",
    }
}

fn audit_from_name(s: &str) -> std::result::Result<InequalityId, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown audit '{s}'"))
}

struct Entries {
    map: BTreeMap<String, (String, usize)>,
    issues: Vec<Issue>,
}

impl Entries {
    fn line(&self, key: &str) -> Option<usize> {
        self.map.get(key).map(|(_, l)| *l)
    }

    fn issue(&mut self, key: &str, msg: String) {
        let line = self.line(key);
        self.issues.push(Issue { line, message: msg });
    }

    /// Parses `key` if present; malformed values are recorded as issues.
    fn get<T>(&mut self, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Option<T> {
        let (v, line) = self.map.get(key)?.clone();
        match parse(&v) {
            Ok(t) => Some(t),
            Err(e) => {
                self.issues.push(Issue { line: Some(line), message: format!("{key}: {e}") });
                None
            }
        }
    }

    fn num<T: FromStr>(&mut self, key: &str, target: &mut T) {
        if let Some(v) = self.get(key, |s| s.parse::<T>().map_err(|_| format!("malformed value '{s}'"))) {
            *target = v;
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut e = Entries { map: BTreeMap::new(), issues: Vec::new() };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            e.issues.push(Issue { line: Some(line), message: format!("expected 'key = value', got '{content}'") });
            continue;
        };
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) && is_boundary_key(k).is_none() {
            e.issues.push(Issue { line: Some(line), message: format!("unknown key '{k}'") });
            continue;
        }
        if e.map.insert(k.to_string(), (v.to_string(), line)).is_some() {
            e.issues.push(Issue { line: Some(line), message: format!("duplicate key '{k}'") });
        }
    }

    let mut c = RunConfig::default();
    match e.get("mode", |s| s.parse::<Mode>()) {
        Some(m) => c.mode = m,
        None if e.line("mode").is_none() => e.issues.push(Issue { line: None, message: "missing required key 'mode'".into() }),
        None => {}
    }
    e.num("m", &mut c.problem.m);
    let m = c.problem.m;
    if m % 2 == 0 || m < 3 {
        e.issue("m", format!("m must be odd and at least 3 (got {m})"));
    }
    e.num("T", &mut c.problem.t_max);
    e.num("s", &mut c.problem.s);
    if let Some(u) = e.get("u0", |s| DataHandle::parse(s).map_err(|x| x.to_string())) {
        c.problem.u0 = u;
    }
    if let Some(f) = e.get("f", |s| Forcing::parse(s).map_err(|x| x.to_string())) {
        c.problem.f = f;
    }
    let j = m.saturating_sub(1) / 2;
    c.problem.g = vec![DataHandle::zero(); j];
    let gkeys: Vec<(String, usize)> = e.map.keys().filter_map(|k| is_boundary_key(k).map(|l| (k.clone(), l))).collect();
    for (k, l) in gkeys {
        if l >= j {
            e.issue(&k, format!("expected {j} boundary data for m = {m}; '{k}' is out of range"));
            continue;
        }
        if let Some(g) = e.get(&k, |s| DataHandle::parse(s).map_err(|x| x.to_string())) {
            c.problem.g[l] = g;
        }
    }
    e.num("x_min", &mut c.x_min);
    e.num("x_max", &mut c.x_max);
    e.num("nx", &mut c.nx);
    e.num("nt", &mut c.nt);
    let q = &mut c.solver.quad;
    e.num("truncation_radius", &mut q.truncation_radius);
    e.num("panels", &mut q.panels);
    if let Some(r) = e.get("oscillatory_rule", |s| OscillatoryRule::parse(s).map_err(|x| x.to_string())) {
        q.oscillatory_rule = r;
    }
    e.num("rel_tol", &mut q.rel_tol);
    let k = &mut c.solver.contour;
    e.num("spectral_radius", &mut k.spectral_radius);
    e.num("phase_per_panel", &mut k.phase_per_panel);
    e.num("order", &mut k.order);
    e.num("data_tail_terms", &mut k.data_tail_terms);
    e.num("boundary_tail_terms", &mut k.boundary_tail_terms);
    if let Some(u) = e.get("upper_limit", |s| match s {
        "evaluation_time" => Ok(UpperLimit::EvaluationTime),
        "horizon" => Ok(UpperLimit::Horizon),
        _ => Err(format!("expected 'evaluation_time' or 'horizon', got '{s}'")),
    }) {
        k.upper_limit = u;
    }
    e.num("max_iter", &mut c.max_iter);
    e.num("tol", &mut c.tol);
    e.num("nonlinear", &mut c.nonlinear);
    e.num("fd_length", &mut c.fd.length);
    e.num("fd_nx", &mut c.fd.nx);
    e.num("fd_nt", &mut c.fd.nt);
    e.num("fd_theta", &mut c.fd.theta);
    if let Some(a) = e.get("audit", audit_from_name) {
        c.audit.which = Some(a);
    }
    let a = &mut c.audit;
    e.num("audit_samples", &mut a.samples);
    e.num("audit_radius", &mut a.radius);
    e.num("b", &mut a.b);
    e.num("b1", &mut a.b1);
    e.num("alpha1", &mut a.alpha1);
    e.num("l", &mut a.l);
    e.num("l1", &mut a.l1);
    e.num("ell", &mut a.ell);
    e.num("tau_max", &mut a.tau_max);
    if let Some(o) = e.get("output", |s| Ok(s.to_string())) {
        c.output = o;
    }
    e.num("seed", &mut c.seed);

    check_ranges(&mut e, &c);
    if e.issues.is_empty() {
        Ok(c)
    } else {
        e.issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        Err(Error::Invalid(e.issues))
    }
}

fn check_ranges(e: &mut Entries, c: &RunConfig) {
    let mut need = |ok: bool, key: &str, msg: &str| {
        if !ok {
            e.issue(key, msg.to_string());
        }
    };
    need(c.problem.t_max > 0.0 && c.problem.t_max.is_finite(), "T", "T must be positive");
    if c.mode == Mode::Nonlinear || (c.nonlinear && c.mode.solves()) {
        need(c.problem.t_max < 0.5, "T", "T must lie in (0, 1/2) for the nonlinear problem");
    }
    need(c.x_min >= 0.0 && c.x_max > c.x_min, "x_max", "need 0 <= x_min < x_max");
    need(c.nx >= 1 && c.nt >= 1, "nx", "nx and nt must be positive");
    if c.mode == Mode::Nonlinear || (c.nonlinear && c.mode == Mode::Compare) {
        need(c.x_min == 0.0 && c.nx >= 3, "x_min", "the nonlinear iteration needs x_min = 0 and nx >= 3");
    }
    need(c.solver.quad.validate().is_ok(), "panels", "invalid quadrature settings");
    need(c.solver.contour.order >= 2 && c.solver.contour.phase_per_panel > 0.0, "order", "order >= 2 and phase_per_panel > 0 required");
    need(c.max_iter >= 1 && c.tol > 0.0, "max_iter", "max_iter >= 1 and tol > 0 required");
    need((0.5..=1.0).contains(&c.fd.theta), "fd_theta", "fd_theta must lie in [0.5, 1]");
    if matches!(c.mode, Mode::Reference | Mode::Compare) {
        need(c.fd.length >= 2.0 * c.x_max, "fd_length", "fd_length must be at least twice x_max");
        need(c.fd.nx >= 4 * c.problem.m && c.fd.nt >= 1, "fd_nx", "fd_nx >= 4m and fd_nt >= 1 required");
    }
    if c.mode == Mode::Audit {
        need(c.audit.which.is_some(), "audit", "audit mode requires the key 'audit'");
        need(c.audit.samples >= crate::audit::MIN_SAMPLES, "audit_samples", "audit_samples must be at least 1000");
    }
}

/// Canonical text of `c`; `parse_config(&emit_config(c)) == c`.
pub fn emit_config(c: &RunConfig) -> String {
    let mut s = String::new();
    let p = &c.problem;
    let q = &c.solver.quad;
    let k = &c.solver.contour;
    let mut kv = |key: &str, v: String| {
        let _ = writeln!(s, "{key} = {v}");
    };
    kv("mode", c.mode.name().into());
    kv("m", p.m.to_string());
    kv("T", format!("{:?}", p.t_max));
    kv("s", format!("{:?}", p.s));
    kv("u0", p.u0.to_string());
    for (l, g) in p.g.iter().enumerate() {
        kv(&format!("g{l}"), g.to_string());
    }
    kv("f", p.f.to_string());
    kv("x_min", format!("{:?}", c.x_min));
    kv("x_max", format!("{:?}", c.x_max));
    kv("nx", c.nx.to_string());
    kv("nt", c.nt.to_string());
    kv("truncation_radius", format!("{:?}", q.truncation_radius));
    kv("panels", q.panels.to_string());
    kv("oscillatory_rule", q.oscillatory_rule.name().into());
    kv("rel_tol", format!("{:?}", q.rel_tol));
    kv("spectral_radius", format!("{:?}", k.spectral_radius));
    kv("phase_per_panel", format!("{:?}", k.phase_per_panel));
    kv("order", k.order.to_string());
    kv("data_tail_terms", k.data_tail_terms.to_string());
    kv("boundary_tail_terms", k.boundary_tail_terms.to_string());
    kv("upper_limit", upper_limit_name(k.upper_limit).into());
    kv("max_iter", c.max_iter.to_string());
    kv("tol", format!("{:?}", c.tol));
    kv("nonlinear", c.nonlinear.to_string());
    kv("fd_length", format!("{:?}", c.fd.length));
    kv("fd_nx", c.fd.nx.to_string());
    kv("fd_nt", c.fd.nt.to_string());
    kv("fd_theta", format!("{:?}", c.fd.theta));
    if let Some(a) = c.audit.which {
        kv("audit", a.to_string());
    }
    let a = &c.audit;
    kv("audit_samples", a.samples.to_string());
    kv("audit_radius", format!("{:?}", a.radius));
    kv("b", format!("{:?}", a.b));
    kv("b1", format!("{:?}", a.b1));
    kv("alpha1", format!("{:?}", a.alpha1));
    kv("l", format!("{:?}", a.l));
    kv("l1", format!("{:?}", a.l1));
    kv("ell", a.ell.to_string());
    kv("tau_max", format!("{:?}", a.tau_max));
    kv("output", c.output.clone());
    kv("seed", c.seed.to_string());
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_linear_with_defaults() {
        let c = parse_config("mode = linear\nm = 3\nu0 = builtin:gauss_bump(center=3, width=0.5, amp=0.05)  # data\n").unwrap();
        assert_eq!(c.mode, Mode::Linear);
        assert_eq!(c.problem.g.len(), 1);
        assert!(c.problem.g[0].is_zero());
        assert_eq!(c.nx, RunConfig::default().nx);
    }

    #[test]
    fn even_m_reported_at_its_line() {
        let err = parse_config("mode = linear\n\nm = 4\n").unwrap_err();
        match err {
            Error::Invalid(issues) => {
                assert!(issues.iter().any(|i| i.line == Some(3) && i.message.contains("m must be odd")));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_builtin_lists_catalog() {
        let err = parse_config("mode = linear\nu0 = builtin:nosuch(a=1)\n").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("gauss_bump"), "{err}");
    }

    #[test]
    fn unknown_key_and_missing_mode() {
        let err = parse_config("m = 3\nfoo = 1\n").unwrap_err().to_string();
        assert!(err.contains("line 2: unknown key 'foo'") && err.contains("missing required key 'mode'"), "{err}");
    }

    #[test]
    fn round_trip() {
        let text = "mode = audit\naudit = theta2\nb1 = 0.3\nm = 5\ng1 = builtin:polyexp(power=2, rate=2, amp=0.5)\nf = builtin:exp(amp=1, rate=1) * builtin:const(value=2)\nseed = 7\n";
        let c = parse_config(text).unwrap();
        let again = parse_config(&emit_config(&c)).unwrap();
        assert_eq!(c, again);
        assert_eq!(emit_config(&c), emit_config(&again));
        let d = RunConfig::default();
        assert_eq!(parse_config(&emit_config(&d)).unwrap(), d);
    }
}
