//! Sampling audits of the multiplier and calculus inequalities behind the bilinear estimates.
//!
//! Sampling cannot prove boundedness; each verdict is qualified by the change of the empirical
//! sup when the sample count is multiplied by 4 and the sampling region doubled.

use crate::quadrature::{integrate, integrate_real_line, AdaptiveOptions};
use crate::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const MIN_SAMPLES: usize = 1000;
/// Relative change of the sup (samples x4, region x2) tolerated by a "bounded" verdict.
pub const STABILITY_LIMIT: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequalityId {
    /// `|d_m| >= c_m |xi|^{m-3} |xi xi1 (xi - xi1)|`
    DmXi,
    /// `|d_m| >= c_m |xi1|^{m-3} |xi xi1 (xi - xi1)|`
    DmXi1,
    Calc1,
    Calc1a,
    Calc2,
    Calc3,
    Calc4,
    Calc5,
    Theta2,
    Theta3,
    Theta4,
    Theta5,
    Theta6,
    G1,
    G2,
}

impl std::fmt::Display for InequalityId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        f.write_str(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub inequality_id: InequalityId,
    pub parameter_point: BTreeMap<String, f64>,
    pub samples: usize,
    /// Empirical sup of the audited ratio (a min for the `d_m` lower bounds).
    pub empirical: f64,
    pub worst_case_location: Vec<f64>,
    pub bounded: bool,
    /// `|v' - v| / |v|` between the base run and the run with 4x samples on a doubled region.
    pub stability_delta: f64,
    /// Parameters satisfy the hypotheses the inequality is stated under.
    pub in_stated_range: bool,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AuditOptions {
    pub samples: usize,
    pub seed: u64,
    /// Sampling radius; its meaning (a frequency or a modulation bound) depends on the audit.
    pub radius: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions { samples: MIN_SAMPLES, seed: 0x5eed, radius: 1e6 }
    }
}

impl AuditOptions {
    fn check(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES || !(self.radius > 1.0) {
            return Err(Error::invalid(format!("audits need at least {MIN_SAMPLES} samples and a radius > 1")));
        }
        Ok(())
    }

    fn enlarged(&self) -> AuditOptions {
        AuditOptions { samples: 4 * self.samples, seed: self.seed.wrapping_add(1), radius: 2.0 * self.radius }
    }
}

pub(crate) fn quad_opts() -> AdaptiveOptions {
    AdaptiveOptions { abs_tol: 1e-14, rel_tol: 1e-8, max_intervals: 2000 }
}

/// `10^U(log10 lo, log10 hi)`
fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    10f64.powf(rng.gen_range(lo.log10()..=hi.log10()))
}

/// Random sign times a log-uniform magnitude in `[lo, hi]`.
fn signed_log(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    let v = log_uniform(rng, lo, hi);
    if rng.gen_bool(0.5) { v } else { -v }
}

/// Draws all points sequentially from the seed, evaluates them in parallel, and reduces to the
/// extreme value (first occurrence wins ties, so the result is deterministic).
fn extreme<S, E>(opts: &AuditOptions, sample: S, eval: E, minimize: bool) -> Result<(f64, Vec<f64>)>
where
    S: Fn(&mut ChaCha8Rng, f64) -> Vec<f64>,
    E: Fn(&[f64]) -> Result<f64> + Sync,
{
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let points: Vec<Vec<f64>> = (0..opts.samples).map(|_| sample(&mut rng, opts.radius)).collect();
    let values: Vec<f64> = points.par_iter().map(|p| eval(p)).collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Numerical(format!("audit integrand not finite at {:?}", points[i])));
        }
        let better = if minimize { *v < values[best] } else { *v > values[best] };
        if better {
            best = i;
        }
    }
    Ok((values[best], points[best].clone()))
}

struct Audit<'a> {
    id: InequalityId,
    params: &'a [(&'a str, f64)],
    in_range: bool,
    minimize: bool,
}

impl Audit<'_> {
    fn run<S, E>(&self, opts: &AuditOptions, sample: S, eval: E) -> Result<AuditReport>
    where
        S: Fn(&mut ChaCha8Rng, f64) -> Vec<f64>,
        E: Fn(&[f64]) -> Result<f64> + Sync,
    {
        opts.check()?;
        let (v, loc) = extreme(opts, &sample, &eval, self.minimize)?;
        let (v2, loc2) = extreme(&opts.enlarged(), &sample, &eval, self.minimize)?;
        let delta = if v == 0.0 { if v2 == 0.0 { 0.0 } else { f64::INFINITY } } else { (v2 - v).abs() / v.abs() };
        let (value, location) = if (self.minimize && v2 < v) || (!self.minimize && v2 > v) { (v2, loc2) } else { (v, loc) };
        let stable = delta < STABILITY_LIMIT;
        let bounded = stable && (!self.minimize || value > 0.0);
        let mut note = if bounded {
            format!("stable under 4x samples and 2x region (change {:.3}%)", 100.0 * delta)
        } else {
            format!("sup changes by {:.1}% under 4x samples and 2x region: growth flagged", 100.0 * delta)
        };
        if !self.in_range {
            note.push_str("; parameters outside the stated hypotheses");
        }
        Ok(AuditReport {
            inequality_id: self.id,
            parameter_point: self.params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            samples: opts.samples,
            empirical: value,
            worst_case_location: location,
            bounded,
            stability_delta: delta,
            in_stated_range: self.in_range,
            note,
        })
    }
}

// ---------------------------------------------------------------------------------------------
// resonance function

/// Integer coefficients `q_k` with `d_m(xi, xi1) = xi xi1 (xi - xi1) sum_k q_k xi^{m-3-k} xi1^k`.
fn dm_quotient(m: usize) -> Vec<i128> {
    let binom = |n: usize, k: usize| -> i128 { (0..k).fold(1i128, |acc, i| acc * (n - i) as i128 / (i + 1) as i128) };
    // N(r) = 1 - r^m - (1 - r)^m, d_m = xi^m N(xi1 / xi)
    let mut num = vec![0i128; m + 1];
    num[0] += 1;
    num[m] -= 1;
    for k in 0..=m {
        let c = binom(m, k) * if k % 2 == 0 { 1 } else { -1 };
        num[k] -= c;
    }
    debug_assert_eq!(num[m], 0);
    // divide by r, then by (1 - r)
    let a: Vec<i128> = num[1..m].to_vec();
    let n = a.len() - 1;
    let mut q = vec![0i128; n];
    let mut carry = 0i128;
    for k in 0..n {
        carry += a[k];
        q[k] = carry;
    }
    debug_assert_eq!(carry + a[n], 0);
    q
}

/// `d_m(xi, xi1) = xi^m - xi1^m - (xi - xi1)^m`, evaluated in factored form to avoid cancellation.
pub fn dm(m: usize, xi: f64, xi1: f64) -> f64 {
    if m == 1 {
        return 0.0;
    }
    if m % 2 == 0 {
        return xi.powi(m as i32) - xi1.powi(m as i32) - (xi - xi1).powi(m as i32);
    }
    let q = dm_quotient(m);
    let d = m - 3;
    let p: f64 = q.iter().enumerate().map(|(k, &c)| c as f64 * xi.powi((d - k) as i32) * xi1.powi(k as i32)).sum();
    xi * xi1 * (xi - xi1) * p
}

/// Empirical `c_m` (min of the ratio) over `|xi|, |xi1|, |xi - xi1| >= 1`, magnitudes log-uniform
/// up to `radius`.
pub fn audit_dm_bound(m: usize, variant: InequalityId, opts: &AuditOptions) -> Result<AuditReport> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::invalid(format!("m must be odd and >= 3, got {m}")));
    }
    let on_xi1 = match variant {
        InequalityId::DmXi => false,
        InequalityId::DmXi1 => true,
        other => return Err(Error::invalid(format!("{other} is not a d_m bound"))),
    };
    let sample = |rng: &mut ChaCha8Rng, r: f64| loop {
        let xi = signed_log(rng, 1.0, r);
        let xi1 = signed_log(rng, 1.0, r);
        if (xi - xi1).abs() >= 1.0 {
            return vec![xi, xi1];
        }
    };
    let eval = |p: &[f64]| -> Result<f64> {
        let (xi, xi1) = (p[0], p[1]);
        let w = if on_xi1 { xi1 } else { xi };
        Ok(dm(m, xi, xi1).abs() / (w.abs().powi(m as i32 - 3) * (xi * xi1 * (xi - xi1)).abs()))
    };
    Audit { id: variant, params: &[("m", m as f64)], in_range: true, minimize: true }.run(opts, sample, eval)
}

// ---------------------------------------------------------------------------------------------
// frequency-region predicates of the microlocal case split

fn common_high(xi: f64, xi1: f64) -> bool {
    xi.abs() > 1.0 && xi1.abs() > 1.0 && (xi - xi1).abs() > 1.0
}

fn modulations(m: usize, xi: f64, tau: f64, xi1: f64, tau1: f64) -> (f64, f64, f64) {
    let mi = m as i32;
    ((tau - xi.powi(mi)).abs(), (tau1 - xi1.powi(mi)).abs(), (tau - tau1 - (xi - xi1).powi(mi)).abs())
}

pub fn in_b1(m: usize, xi: f64, tau: f64, xi1: f64, tau1: f64) -> bool {
    let (s, s1, s2) = modulations(m, xi, tau, xi1, tau1);
    s2 <= s1 && s1 <= s && common_high(xi, xi1)
}

pub fn in_b2(m: usize, xi: f64, tau: f64, xi1: f64, tau1: f64) -> bool {
    let (s, s1, s2) = modulations(m, xi, tau, xi1, tau1);
    s2 <= s1 && s <= s1 && common_high(xi, xi1)
}

pub fn in_b3(m: usize, xi: f64, tau: f64, xi1: f64, tau1: f64) -> bool {
    let (s, s1, _) = modulations(m, xi, tau, xi1, tau1);
    s1 <= s && xi1.abs() > 1.0 && (xi - xi1).abs() <= 1.0
}

pub fn in_b4(m: usize, xi: f64, tau: f64, xi1: f64, tau1: f64) -> bool {
    let (s, s1, _) = modulations(m, xi, tau, xi1, tau1);
    s <= s1 && xi1.abs() > 1.0 && (xi - xi1).abs() <= 1.0
}

// ---------------------------------------------------------------------------------------------
// calculus inequalities

/// Hypothesis range `(lo, hi)` of `(l, l')` for each calculus inequality (open ends).
fn calc_ranges(which: InequalityId) -> Result<((f64, f64), (f64, f64))> {
    Ok(match which {
        InequalityId::Calc1 | InequalityId::Calc2 | InequalityId::Calc4 => ((0.5, 1.0), (0.5, 1.0)),
        InequalityId::Calc1a | InequalityId::Calc3 => ((0.5, 1.0), (0.5, 1.5)),
        InequalityId::Calc5 => ((0.25, 0.5), (0.25, 0.5)),
        other => return Err(Error::invalid(format!("{other} is not a calculus inequality"))),
    })
}

/// `int f(x) |a - x|^{-1/2} dx` over `x in [lo, hi]` by `x = a -+ y^2`, which removes the singularity.
fn sqrt_singular(f: &(dyn Fn(f64) -> f64 + Sync), a: f64, lo: f64, hi: f64) -> Result<f64> {
    let o = quad_opts();
    let mut total = 0.0;
    // right branch x = a + y^2 and left branch x = a - y^2
    for dir in [1.0, -1.0] {
        let (y2_lo, y2_hi) = if dir > 0.0 { ((lo - a).max(0.0), hi - a) } else { ((a - hi).max(0.0), a - lo) };
        if !(y2_hi > y2_lo) {
            continue;
        }
        let g = |y: f64| 2.0 * f(a + dir * y * y);
        let (ya, yb) = (y2_lo.sqrt(), y2_hi.sqrt());
        let v = if yb.is_finite() {
            let mid = a.abs().sqrt();
            let br: Vec<f64> = [mid].into_iter().filter(|&b| b > ya && b < yb).collect();
            integrate(g, ya, yb, &br, o)?.value
        } else {
            crate::quadrature::integrate_to_infinity(g, ya, 1.0f64.max(a.abs().sqrt()), &[a.abs().sqrt()], o)?.value
        };
        total += v;
    }
    Ok(total)
}

/// Left side divided by the right-side bound for one sample of `(a, c, l, l')`.
pub fn calc_ratio(which: InequalityId, a: f64, c: f64, l: f64, l1: f64) -> Result<f64> {
    calc_ranges(which)?;
    let o = quad_opts();
    let pw = |x: f64, e: f64| (1.0 + x.abs()).powf(-e);
    let two = |e1: f64, e2: f64| -> Result<f64> {
        Ok(integrate_real_line(|x| pw(x - a, e1) * pw(x - c, e2), &[a, c], o)?.value)
    };
    let dist = (a - c).abs();
    Ok(match which {
        InequalityId::Calc1 => two(2.0 * l, 2.0 * l)? * (1.0 + dist).powf(2.0 * l),
        InequalityId::Calc1a => two(2.0 * l, 2.0 * l1)? * (1.0 + dist).powf(2.0 * l.min(l1)),
        InequalityId::Calc3 => two(2.0 * (1.0 - l), 2.0 * l1)? * (1.0 + dist).powf(2.0 * (1.0 - l)),
        InequalityId::Calc5 => two(2.0 * l, 2.0 * l1)? * (1.0 + dist).powf(2.0 * l + 2.0 * l1 - 1.0),
        InequalityId::Calc2 => {
            sqrt_singular(&|x| pw(x, 2.0 * l), a, f64::NEG_INFINITY, f64::INFINITY)? * (1.0 + a.abs()).sqrt()
        }
        InequalityId::Calc4 => {
            let c = c.abs();
            sqrt_singular(&|x| pw(x, 2.0 * (1.0 - l)), a, -c, c)? * (1.0 + a.abs()).sqrt() / (1.0 + c).powf(2.0 * (l - 0.5))
        }
        _ => unreachable!(),
    })
}

/// Sup of `calc_ratio` at fixed exponents over `a` and `a - c` log-uniform in magnitude up to
/// `radius` (the implied constants depend on the exponents, so these are not sampled).
pub fn audit_calc_inequality(which: InequalityId, l: f64, l1: f64, opts: &AuditOptions) -> Result<AuditReport> {
    let ((l_lo, l_hi), (l1_lo, l1_hi)) = calc_ranges(which)?;
    if !(l > 0.0 && l < 1.0 && l1 > 0.0) {
        return Err(Error::invalid(format!("exponents must satisfy 0 < l < 1 and l' > 0, got {l}, {l1}")));
    }
    let mut in_range = l > l_lo && l < l_hi && l1 > l1_lo && l1 < l1_hi;
    if which == InequalityId::Calc5 {
        in_range &= l1 <= l;
    }
    let sample = |rng: &mut ChaCha8Rng, r: f64| {
        let a = signed_log(rng, 1e-2, r);
        let c = a + signed_log(rng, 1e-2, r);
        vec![a, c]
    };
    let eval = move |p: &[f64]| calc_ratio(which, p[0], p[1], l, l1);
    Audit { id: which, params: &[("l", l), ("l1", l1)], in_range, minimize: false }.run(opts, sample, eval)
}

// ---------------------------------------------------------------------------------------------
// time-trace multipliers

/// Breakpoints around the real root of `xi^m = tau` where `|tau - xi^m| <= 1` concentrates.
fn curve_breaks(m: usize, tau: f64) -> Vec<f64> {
    let x0 = tau.signum() * tau.abs().powf(1.0 / m as f64);
    let width = 1.0 / (m as f64 * x0.abs().max(1.0).powi(m as i32 - 1));
    let mut b = vec![-1.0, 0.0, 1.0, x0];
    for k in [1.0, 10.0, 100.0, 1e3, 1e4] {
        b.push(x0 - k * width);
        b.push(x0 + k * width);
    }
    b
}

/// `(1 + |tau|)^w G(tau)` with `G1 = int xi^{2l} (1+|tau-xi^m|)^{2b-2} (1+|xi|)^{-2s} dxi`
/// (`w = 2(s+j-l)/m`) or `G2` without the `(1+|xi|)^{-2s}` factor (`w = 2(j-l)/m`).
pub fn weighted_g(which: InequalityId, s: f64, b: f64, m: usize, l: usize, tau: f64) -> Result<f64> {
    let j = (m - 1) / 2;
    let mi = m as i32;
    let (sx, w) = match which {
        InequalityId::G1 => (s, 2.0 * (s + j as f64 - l as f64) / m as f64),
        InequalityId::G2 => (0.0, 2.0 * (j as f64 - l as f64) / m as f64),
        other => return Err(Error::invalid(format!("{other} is not a time-trace multiplier"))),
    };
    let f = |xi: f64| xi.powi(2 * l as i32) * (1.0 + (tau - xi.powi(mi)).abs()).powf(2.0 * b - 2.0) * (1.0 + xi.abs()).powf(-2.0 * sx);
    let g = integrate_real_line(f, &curve_breaks(m, tau), quad_opts())?.value;
    Ok((1.0 + tau.abs()).powf(w) * g)
}

/// Symmetric grid `0, +-10^k` with `k` uniform in `[-2, log10 tau_max]`.
pub fn log_tau_grid(tau_max: f64, points: usize) -> Vec<f64> {
    let half = (points / 2).max(2);
    let hi = tau_max.log10();
    let mut g = vec![0.0];
    for i in 0..half {
        let v = 10f64.powf(-2.0 + (hi + 2.0) * i as f64 / (half - 1) as f64);
        g.push(v);
        g.push(-v);
    }
    g
}

/// Sup of the weighted `G` over a log-grid of `tau` up to `tau_max`; the stability run uses a 4x
/// denser grid reaching `2 tau_max`.
pub fn audit_g(which: InequalityId, s: f64, b: f64, m: usize, l: usize, tau_max: f64, points: usize) -> Result<AuditReport> {
    if m < 3 || m % 2 == 0 || l >= (m - 1) / 2 {
        return Err(Error::invalid(format!("need odd m >= 3 and l < (m-1)/2, got m = {m}, l = {l}")));
    }
    match which {
        InequalityId::G1 if !((-1.0..=0.5).contains(&s) && (0.0..0.5).contains(&b)) => {
            return Err(Error::Domain(format!("G1 is stated for -1 <= s <= 1/2 and 0 <= b < 1/2, got s = {s}, b = {b}")))
        }
        InequalityId::G2 if !(b > 0.0 && b < 0.5) => {
            return Err(Error::Domain(format!("G2 is stated for 0 < b < 1/2, got b = {b}")))
        }
        InequalityId::G1 | InequalityId::G2 => {}
        other => return Err(Error::invalid(format!("{other} is not a time-trace multiplier"))),
    }
    if points < MIN_SAMPLES || !(tau_max > 1.0) {
        return Err(Error::invalid(format!("need at least {MIN_SAMPLES} grid points and tau_max > 1")));
    }
    let sup = |grid: Vec<f64>| -> Result<(f64, f64)> {
        let vals: Vec<f64> = grid.par_iter().map(|&t| weighted_g(which, s, b, m, l, t)).collect::<Result<_>>()?;
        let i = (0..vals.len()).fold(0, |bi, i| if vals[i] > vals[bi] { i } else { bi });
        Ok((vals[i], grid[i]))
    };
    let (v, t) = sup(log_tau_grid(tau_max, points))?;
    let (v2, t2) = sup(log_tau_grid(2.0 * tau_max, 4 * points))?;
    let delta = (v2 - v).abs() / v;
    let bounded = v.is_finite() && delta < STABILITY_LIMIT;
    let (value, loc) = if v2 > v { (v2, t2) } else { (v, t) };
    Ok(AuditReport {
        inequality_id: which,
        parameter_point: [("s", s), ("b", b), ("m", m as f64), ("l", l as f64), ("tau_max", tau_max)]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect(),
        samples: points,
        empirical: value,
        worst_case_location: vec![loc],
        bounded,
        stability_delta: delta,
        in_stated_range: true,
        note: if bounded { "sup stable under grid refinement and range doubling".into() } else { "growth flagged".into() },
    })
}

// ---------------------------------------------------------------------------------------------
// bilinear multipliers

fn nested_opts() -> AdaptiveOptions {
    AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-6, max_intervals: 2000 }
}

/// `int_lo^hi inner(y) dy` where `inner` may itself fail.
fn outer_integral(lo: f64, hi: f64, breaks: &[f64], inner: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let failure = std::cell::RefCell::new(None);
    let f = |y: f64| match inner(y) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let br: Vec<f64> = breaks.iter().cloned().filter(|&b| b > lo && b < hi).collect();
    let v = integrate(f, lo, hi, &br, nested_opts())?.value;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

fn interval_integral(lo: f64, hi: f64, breaks: &[f64], f: impl Fn(f64) -> f64) -> Result<f64> {
    if !(hi > lo) {
        return Ok(0.0);
    }
    let br: Vec<f64> = breaks.iter().cloned().filter(|&b| b > lo && b < hi).collect();
    Ok(integrate(f, lo, hi, &br, nested_opts())?.value)
}

/// Exponents of a multiplier audit: `b`, `b'` and the low-frequency `alpha'`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaParams {
    pub m: usize,
    pub b: f64,
    pub b1: f64,
    pub alpha1: f64,
}

impl ThetaParams {
    fn check(&self) -> Result<()> {
        if self.m < 3 || self.m % 2 == 0 || !(self.b >= 0.0) || !(self.b1 > 0.0) || !(self.alpha1 > 0.0) {
            return Err(Error::invalid("multiplier audits need odd m >= 3, b >= 0, b' > 0 and alpha' > 0"));
        }
        Ok(())
    }

    fn pairs(&self) -> [(&'static str, f64); 4] {
        [("m", self.m as f64), ("b", self.b), ("b1", self.b1), ("alpha1", self.alpha1)]
    }

    /// Whether the exponents satisfy the hypotheses of the given multiplier's bound.
    pub fn in_stated_range(&self, which: InequalityId) -> bool {
        let m = self.m as f64;
        let t2 = (6.0 + 3.0 * m) / (12.0 * m);
        let below_half = self.b1 <= self.b && self.b < 0.5;
        match which {
            InequalityId::Theta2 => t2 <= self.b1 && below_half,
            InequalityId::Theta3 => t2.max((4.0 + 3.0 * (m - 1.0)) / (12.0 * (m - 1.0))) <= self.b1 && below_half,
            InequalityId::Theta4 => self.b >= 0.0 && self.alpha1 > 0.5,
            InequalityId::Theta5 | InequalityId::Theta6 => 1.0 / 3.0 <= self.b1 && below_half && self.alpha1 > 0.5,
            _ => false,
        }
    }
}

fn mixed(mod_part: f64, time_part: f64, p: &ThetaParams) -> f64 {
    ((1.0 + mod_part.abs()).powf(p.b1) + (1.0 + time_part.abs()).powf(p.alpha1)).powi(2)
}

/// Low-frequency multiplier; vanishes for `|xi| > 2` where `|xi1| <= 1`, `|xi - xi1| <= 1` is empty.
pub fn theta4(p: &ThetaParams, xi: f64, tau: f64) -> Result<f64> {
    let mi = p.m as i32;
    let (lo, hi) = ((xi - 1.0).max(-1.0), (xi + 1.0).min(1.0));
    let outer = outer_integral(lo, hi, &[0.0], |xi1| {
        let (c1, c2) = (xi1.powi(mi), (xi - xi1).powi(mi));
        let f = |t1: f64| 1.0 / (mixed(t1 - c1, t1, p) * mixed(tau - t1 - c2, tau - t1, p));
        Ok(integrate_real_line(f, &[0.0, c1, tau, tau - c2], nested_opts())?.value)
    })?;
    Ok(xi * xi / (1.0 + (tau - xi.powi(mi)).abs()).powf(2.0 * p.b) * outer)
}

/// `X` such that `|d_m| > bound` whenever the free frequency exceeds `X` in magnitude.
fn resonance_reach(m: usize, fixed: f64, bound: f64, free_is_first: bool) -> f64 {
    let d = |v: f64| if free_is_first { dm(m, v, fixed) } else { dm(m, fixed, v) };
    let mut x = 2.0 * fixed.abs() + 2.0;
    while d(x).abs() <= bound || d(-x).abs() <= bound {
        x *= 2.0;
    }
    x
}

/// Interval of `t` with `|t - a| <= |t - c| <= bound`.
fn nearer_interval(a: f64, c: f64, bound: f64) -> (f64, f64) {
    let mid = 0.5 * (a + c);
    if a > c {
        (mid, c + bound)
    } else if a < c {
        (c - bound, mid)
    } else {
        (c - bound, c + bound)
    }
}

/// High-high multiplier on `B_I`, a function of the output frequency `(xi, tau)`.
pub fn theta2(p: &ThetaParams, xi: f64, tau: f64) -> Result<f64> {
    if xi.abs() <= 1.0 {
        return Ok(0.0);
    }
    let (m, mi) = (p.m, p.m as i32);
    let big = (tau - xi.powi(mi)).abs();
    let x = resonance_reach(m, xi, 3.0 * big, false);
    let outer = outer_integral(-x, x, &[-1.0, 1.0, xi - 1.0, xi + 1.0], |xi1| {
        if xi1.abs() <= 1.0 || (xi - xi1).abs() <= 1.0 {
            return Ok(0.0);
        }
        let (a, c) = (tau - (xi - xi1).powi(mi), xi1.powi(mi));
        let (lo, hi) = nearer_interval(a, c, big);
        interval_integral(lo, hi, &[a], |t1| {
            ((1.0 + (t1 - a).abs()) * (1.0 + (t1 - c).abs())).powf(-2.0 * p.b1)
        })
    })?;
    Ok(xi * xi / (1.0 + big).powf(2.0 * p.b) * outer)
}

/// High-high multiplier on `B_II`, a function of the input frequency `(xi1, tau1)`.
pub fn theta3(p: &ThetaParams, xi1: f64, tau1: f64) -> Result<f64> {
    if xi1.abs() <= 1.0 {
        return Ok(0.0);
    }
    let (m, mi) = (p.m, p.m as i32);
    let big = (tau1 - xi1.powi(mi)).abs();
    let x = resonance_reach(m, xi1, 3.0 * big, true);
    let outer = outer_integral(-x, x, &[-1.0, 1.0, xi1 - 1.0, xi1 + 1.0], |xi| {
        if xi.abs() <= 1.0 || (xi - xi1).abs() <= 1.0 {
            return Ok(0.0);
        }
        let (a, c) = (tau1 + (xi - xi1).powi(mi), xi.powi(mi));
        let (lo, hi) = ((a - big).max(c - big), (a + big).min(c + big));
        let v = interval_integral(lo, hi, &[a, c], |t| {
            (1.0 + (t - a).abs()).powf(-2.0 * p.b1) * (1.0 + (t - c).abs()).powf(-2.0 * p.b)
        })?;
        Ok(xi * xi * v)
    })?;
    Ok(outer / (1.0 + big).powf(2.0 * p.b1))
}

/// High-low multiplier on `B_III`, a function of `(xi, tau)`.
pub fn theta5(p: &ThetaParams, xi: f64, tau: f64) -> Result<f64> {
    let mi = p.m as i32;
    let big = (tau - xi.powi(mi)).abs();
    let outer = outer_integral(xi - 1.0, xi + 1.0, &[-1.0, 1.0], |xi1| {
        if xi1.abs() <= 1.0 {
            return Ok(0.0);
        }
        let (c1, c2) = (xi1.powi(mi), (xi - xi1).powi(mi));
        interval_integral(c1 - big, c1 + big, &[c1, tau - c2, tau], |t1| {
            (1.0 + (t1 - c1).abs()).powf(-2.0 * p.b1) / mixed(tau - t1 - c2, tau - t1, p)
        })
    })?;
    Ok(xi * xi / (1.0 + big).powf(2.0 * p.b) * outer)
}

/// High-low multiplier on `B_IV`, a function of `(xi1, tau1)`.
pub fn theta6(p: &ThetaParams, xi1: f64, tau1: f64) -> Result<f64> {
    if xi1.abs() <= 1.0 {
        return Ok(0.0);
    }
    let mi = p.m as i32;
    let big = (tau1 - xi1.powi(mi)).abs();
    let outer = outer_integral(xi1 - 1.0, xi1 + 1.0, &[], |xi| {
        let (c, c2) = (xi.powi(mi), (xi - xi1).powi(mi));
        let v = interval_integral(c - big, c + big, &[c, tau1 + c2, tau1], |t| {
            (1.0 + (t - c).abs()).powf(-2.0 * p.b) / mixed(t - tau1 - c2, t - tau1, p)
        })?;
        Ok(xi * xi * v)
    })?;
    Ok(outer / (1.0 + big).powf(2.0 * p.b1))
}

/// Sup of `theta4` over `|xi| <= 2.5` uniform and `|tau|` log-uniform up to `radius`.
pub fn audit_theta4(p: &ThetaParams, opts: &AuditOptions) -> Result<AuditReport> {
    p.check()?;
    let sample = |rng: &mut ChaCha8Rng, r: f64| vec![rng.gen_range(-2.5..=2.5), signed_log(rng, 1e-2, r)];
    let eval = |q: &[f64]| theta4(p, q[0], q[1]);
    let pairs = p.pairs();
    Audit { id: InequalityId::Theta4, params: &pairs, in_range: p.in_stated_range(InequalityId::Theta4), minimize: false }
        .run(opts, sample, eval)
}

/// Sup of `Theta_{2,3,5,6}` over base frequencies `1 < |xi| <= radius` (log-uniform) and
/// modulations `tau - xi^m` log-uniform up to `4 radius^m`.
pub fn audit_microlocal_theta(which: InequalityId, p: &ThetaParams, opts: &AuditOptions) -> Result<AuditReport> {
    p.check()?;
    let f: fn(&ThetaParams, f64, f64) -> Result<f64> = match which {
        InequalityId::Theta2 => theta2,
        InequalityId::Theta3 => theta3,
        InequalityId::Theta5 => theta5,
        InequalityId::Theta6 => theta6,
        other => return Err(Error::invalid(format!("{other} is not a microlocal multiplier"))),
    };
    let mi = p.m as i32;
    let sample = move |rng: &mut ChaCha8Rng, r: f64| {
        let xi = signed_log(rng, 1.0, r);
        let s = signed_log(rng, 1e-2, 4.0 * r.powi(mi));
        vec![xi, xi.powi(mi) + s]
    };
    let eval = |q: &[f64]| f(p, q[0], q[1]);
    let pairs = p.pairs();
    Audit { id: which, params: &pairs, in_range: p.in_stated_range(which), minimize: false }.run(opts, sample, eval)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dm_values() {
        // d_3 = 3 xi xi1 (xi - xi1), d_5 at (2, 1) = 32 - 1 - 1 = 30
        assert!((dm(3, 2.0, 1.0) - 6.0).abs() < 1e-12);
        assert!((dm(5, 2.0, 1.0) - 30.0).abs() < 1e-12);
        for m in [3, 5, 7] {
            assert_eq!(dm(m, 1.7, 0.0), 0.0);
            assert_eq!(dm(m, 1.7, 1.7), 0.0);
        }
    }

    #[test]
    fn regions_split_by_modulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let xi = signed_log(&mut rng, 1e-2, 1e3);
            let xi1 = signed_log(&mut rng, 1e-2, 1e3);
            let tau = signed_log(&mut rng, 1e-2, 1e9);
            let tau1 = signed_log(&mut rng, 1e-2, 1e9);
            let (_, s1, s2) = modulations(3, xi, tau, xi1, tau1);
            if common_high(xi, xi1) && s2 <= s1 {
                assert!(in_b1(3, xi, tau, xi1, tau1) || in_b2(3, xi, tau, xi1, tau1));
            }
            if xi1.abs() > 1.0 && (xi - xi1).abs() <= 1.0 {
                assert!(in_b3(3, xi, tau, xi1, tau1) || in_b4(3, xi, tau, xi1, tau1));
            }
        }
    }

    #[test]
    fn calc1_exact_point() {
        let v = calc_ratio(InequalityId::Calc1, 0.0, 0.0, 0.75, 0.75).unwrap();
        assert!((v - 1.0).abs() < 1e-6);
    }

    #[test]
    fn theta4_vanishes_at_high_frequency() {
        let p = ThetaParams { m: 3, b: 0.45, b1: 0.45, alpha1: 0.55 };
        assert_eq!(theta4(&p, 2.5, 10.0).unwrap(), 0.0);
        assert!(theta4(&p, 0.5, 3.0).unwrap() > 0.0);
    }

    #[test]
    fn g1_rejects_out_of_range_s() {
        assert!(matches!(audit_g(InequalityId::G1, 0.6, 0.45, 3, 0, 1e3, 100), Err(Error::Domain(_))));
        assert!(audit_g(InequalityId::G1, 0.0, 0.45, 4, 0, 1e3, 100).is_err());
    }

    #[test]
    fn seeded_audit_is_deterministic() {
        let o = AuditOptions { samples: 1000, seed: 9, radius: 1e4 };
        let a = audit_dm_bound(5, InequalityId::DmXi, &o).unwrap();
        let b = audit_dm_bound(5, InequalityId::DmXi, &o).unwrap();
        assert_eq!(a, b);
        assert!(a.samples >= MIN_SAMPLES);
    }

    #[test]
    fn log_tau_grid_is_symmetric() {
        let g = log_tau_grid(1e6, 101);
        assert_eq!(g[0], 0.0);
        assert!(g[1..].chunks(2).all(|p| p[0] == -p[1] && p[0] > 0.0));
        assert!((g.iter().cloned().fold(0.0, f64::max) - 1e6).abs() < 1e-6);
    }
}
