//! Half-line Fourier, temporal and forcing transforms with linear-phase oscillatory quadrature.

use crate::data::{DataHandle, Forcing};
use crate::quadrature::{gauss_legendre, power_moments};
use crate::{Error, Result, C64};
use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const IM_SLACK: f64 = 1e-12;
const GL_ORDER: usize = 24;
const POLY: usize = 8;
/// Panels whose phase half-width `|zeta| h` exceeds this use Filon moments.
const FILON_SWITCH: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OscillatoryRule {
    DenseTrapezoid,
    FilonLinearPhase,
}

impl OscillatoryRule {
    pub fn name(&self) -> &'static str {
        match self {
            OscillatoryRule::DenseTrapezoid => "dense-trapezoid",
            OscillatoryRule::FilonLinearPhase => "filon-linear-phase",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "dense-trapezoid" => Ok(OscillatoryRule::DenseTrapezoid),
            "filon-linear-phase" => Ok(OscillatoryRule::FilonLinearPhase),
            o => Err(Error::invalid(format!(
                "unknown oscillatory rule '{o}' (expected dense-trapezoid or filon-linear-phase)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub truncation_radius: f64,
    pub panels: usize,
    pub oscillatory_rule: OscillatoryRule,
    pub rel_tol: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            truncation_radius: 60.0,
            panels: 64,
            oscillatory_rule: OscillatoryRule::FilonLinearPhase,
            rel_tol: 1e-10,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if !(self.truncation_radius > 0.0) {
            bad.push("truncation_radius must be positive");
        }
        if self.panels < 16 {
            bad.push("panels must be at least 16");
        }
        if !(self.rel_tol > 0.0 && self.rel_tol <= 1e-2) {
            bad.push("rel_tol must lie in (0, 1e-2]");
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Invalid(bad.into_iter().map(|m| crate::error::Issue { line: None, message: m.into() }).collect()))
        }
    }
}

/// Chebyshev points on [-1, 1] and the inverse Vandermonde mapping values to monomial coefficients.
fn cheb() -> &'static ([f64; POLY], SMatrix<f64, POLY, POLY>) {
    static C: OnceLock<([f64; POLY], SMatrix<f64, POLY, POLY>)> = OnceLock::new();
    C.get_or_init(|| {
        let mut s = [0.0; POLY];
        for (i, v) in s.iter_mut().enumerate() {
            *v = (std::f64::consts::PI * (2 * i + 1) as f64 / (2 * POLY) as f64).cos();
        }
        let v = SMatrix::<f64, POLY, POLY>::from_fn(|i, k| s[i].powi(k as i32));
        (s, v.try_inverse().expect("Chebyshev Vandermonde is invertible"))
    })
}

#[derive(Debug, Clone)]
struct Panel {
    c: f64,
    h: f64,
    segment: usize,
    gl: Vec<C64>,
    poly: [C64; POLY],
    trap: Vec<C64>,
}

/// Amplitude sampled on panels, ready for `int e^{-i zeta x} a(x) dx` at many `zeta`.
#[derive(Debug, Clone)]
pub struct PanelSet {
    panels: Vec<Panel>,
    segments: usize,
    rule: OscillatoryRule,
}

fn expand_shift(c: &[f64; 4], h: f64) -> [C64; POLY] {
    // sum_k c_k (h(1+s))^k in powers of s
    let mut out = [C64::new(0.0, 0.0); POLY];
    for (k, &ck) in c.iter().enumerate() {
        let scale = ck * h.powi(k as i32);
        let mut binom = 1.0;
        for i in 0..=k {
            out[i] += scale * binom;
            binom *= (k - i) as f64 / (i + 1) as f64;
        }
    }
    out
}

impl PanelSet {
    /// Builds panels on consecutive segments `[edges[i], edges[i+1]]`, each split into
    /// equal panels no wider than `max_width`, for the amplitude `f`. Where `exact` yields the
    /// local cubic of piecewise-polynomial data, it replaces the interpolant.
    pub fn build(
        edges: &[f64],
        max_width: f64,
        rule: OscillatoryRule,
        f: &(dyn Fn(f64) -> C64 + Sync),
        exact: Option<&(dyn Fn(f64, f64) -> Option<[f64; 4]> + Sync)>,
    ) -> PanelSet {
        let gl = gauss_legendre(GL_ORDER);
        let (cs, vinv) = cheb();
        let mut panels = Vec::new();
        for (seg, w) in edges.windows(2).enumerate() {
            let len = w[1] - w[0];
            if !(len > 0.0) {
                continue;
            }
            let n = ((len / max_width).ceil() as usize).max(1);
            let step = len / n as f64;
            for i in 0..n {
                let a = w[0] + i as f64 * step;
                let b = if i + 1 == n { w[1] } else { a + step };
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                let glv: Vec<C64> = gl.nodes.iter().map(|s| f(c + h * s)).collect();
                let poly = match exact.and_then(|e| e(a, b)) {
                    Some(p) => expand_shift(&p, h),
                    None => {
                        let vals: Vec<C64> = cs.iter().map(|s| f(c + h * s)).collect();
                        let mut out = [C64::new(0.0, 0.0); POLY];
                        for (k, o) in out.iter_mut().enumerate() {
                            for (i, v) in vals.iter().enumerate() {
                                *o += v * vinv[(k, i)];
                            }
                        }
                        out
                    }
                };
                let trap = if rule == OscillatoryRule::DenseTrapezoid {
                    (0..=16).map(|q| f(a + (b - a) * q as f64 / 16.0)).collect()
                } else {
                    Vec::new()
                };
                panels.push(Panel { c, h, segment: seg, gl: glv, poly, trap });
            }
        }
        PanelSet { panels, segments: edges.len().saturating_sub(1), rule }
    }

    /// Panels for a data handle on `[a, b]`, with edges at its breakpoints and at least `min_panels`.
    pub fn for_handle(u: &DataHandle, a: f64, b: f64, min_panels: usize, rule: OscillatoryRule) -> PanelSet {
        let mut edges = vec![a];
        let mut br: Vec<f64> = u.breakpoints().into_iter().filter(|&x| x > a && x < b).collect();
        // sampled data: one panel family per sample interval
        if br.len() > 4 * min_panels {
            br.dedup();
        }
        br.sort_by(f64::total_cmp);
        edges.extend(br);
        edges.push(b);
        let width = u.resolution().min((b - a) / min_panels as f64);
        let f = |x: f64| C64::new(u.eval(x), 0.0);
        let ex = |p: f64, q: f64| u.exact_piece(p, q);
        let set = PanelSet::build(&edges, width, rule, &f, Some(&ex));
        PanelSet { segments: 1, panels: set.panels.into_iter().map(|mut p| { p.segment = 0; p }).collect(), rule }
    }

    fn panel_integral(&self, p: &Panel, zeta: C64) -> C64 {
        let w = zeta * p.h;
        let phase = (C64::new(0.0, -1.0) * zeta * p.c).exp();
        let local = match self.rule {
            OscillatoryRule::DenseTrapezoid => {
                let n = p.trap.len() - 1;
                let dx = 2.0 / n as f64;
                let mut s = C64::new(0.0, 0.0);
                for (q, v) in p.trap.iter().enumerate() {
                    let sq = -1.0 + q as f64 * dx;
                    let wq = if q == 0 || q == n { 0.5 * dx } else { dx };
                    s += v * (C64::new(0.0, -1.0) * w * sq).exp() * wq;
                }
                s
            }
            OscillatoryRule::FilonLinearPhase if w.norm() > FILON_SWITCH => {
                let m = power_moments(w, POLY - 1);
                p.poly.iter().zip(&m).map(|(a, b)| a * b).sum()
            }
            _ => {
                let gl = gauss_legendre(GL_ORDER);
                let mut s = C64::new(0.0, 0.0);
                for ((sn, wn), v) in gl.nodes.iter().zip(&gl.weights).zip(&p.gl) {
                    s += v * (C64::new(0.0, -1.0) * w * sn).exp() * wn;
                }
                s
            }
        };
        phase * local * p.h
    }

    /// `int e^{-i zeta x} a(x) dx` over all panels.
    pub fn integrate(&self, zeta: C64) -> C64 {
        self.panels.iter().map(|p| self.panel_integral(p, zeta)).sum()
    }

    /// Integral over each segment separately.
    pub fn integrate_segments(&self, zeta: C64) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.segments];
        for p in &self.panels {
            out[p.segment] += self.panel_integral(p, zeta);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.panels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.panels.is_empty()
    }
}

/// Truncation point for the half-line transform of `u`.
pub fn spatial_cut(u: &DataHandle, zeta_im: f64, q: &QuadratureConfig) -> Result<f64> {
    let mut cut = u.extent(q.rel_tol * 1e-3).unwrap_or(f64::INFINITY);
    if zeta_im < 0.0 {
        cut = cut.min((1.0 / (q.rel_tol * 1e-3)).ln() / -zeta_im + u.breakpoints().iter().cloned().fold(0.0, f64::max));
    }
    if cut > q.truncation_radius {
        // the integrand must have decayed by the hard cap
        let r = q.truncation_radius;
        let tail = (0..8).map(|i| u.eval(r * (1.0 - i as f64 / 64.0)).abs()).fold(0.0, f64::max) * (zeta_im * r).exp();
        let scale = (0..256).map(|i| u.eval(r * i as f64 / 256.0).abs()).fold(0.0, f64::max);
        if tail > q.rel_tol * scale.max(1e-300) {
            return Err(Error::accuracy(
                "half-line Fourier transform",
                format!("integrand {tail:e} at truncation radius {r} exceeds tolerance"),
            ));
        }
        cut = r;
    }
    Ok(cut.max(1e-12))
}

fn check_zeta(zeta: C64) -> Result<()> {
    if zeta.im > IM_SLACK {
        return Err(Error::Domain(format!("half-line transform needs Im(zeta) <= 0, got {zeta}")));
    }
    Ok(())
}

/// `int_0^inf e^{-i zeta x} u(x) dx` for `Im zeta <= 0`.
pub fn halfline_fourier(u: &DataHandle, zeta: C64, q: &QuadratureConfig) -> Result<C64> {
    check_zeta(zeta)?;
    if u.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    let cut = spatial_cut(u, zeta.im.min(0.0), q)?;
    Ok(PanelSet::for_handle(u, 0.0, cut, q.panels, q.oscillatory_rule).integrate(zeta))
}

/// `g~(omega, t) = int_0^t e^{-i omega tau} g(tau) d tau`.
pub fn temporal_transform(g: &DataHandle, omega: C64, t: f64, q: &QuadratureConfig) -> Result<C64> {
    if t < 0.0 {
        return Err(Error::Domain(format!("temporal transform needs t >= 0, got {t}")));
    }
    if t == 0.0 || g.is_zero() {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(PanelSet::for_handle(g, 0.0, t, q.panels, q.oscillatory_rule).integrate(omega))
}

/// Half-line Fourier transform of the slice `f(., tau)`.
pub fn forcing_slice(f: &Forcing, zeta: C64, tau: f64, q: &QuadratureConfig) -> Result<C64> {
    match f {
        Forcing::Zero => Ok(C64::new(0.0, 0.0)),
        Forcing::Separable { space, time } => Ok(halfline_fourier(space, zeta, q)? * time.eval(tau)),
        Forcing::Sampled { x, .. } => {
            let dx = x[1] - x[0];
            let slice = |xx: f64| C64::new(f.eval(xx, tau), 0.0);
            let set = PanelSet::build(x, dx, q.oscillatory_rule, &slice, None);
            Ok(set.integrate(zeta))
        }
    }
}

/// `F(zeta, t) = int_0^t e^{-i zeta^m tau} int_0^inf e^{-i zeta x} f(x, tau) dx d tau`, by temporal
/// quadrature of half-line transforms of the slices.
pub fn forcing_transform(f: &Forcing, m: usize, zeta: C64, t: f64, q: &QuadratureConfig) -> Result<C64> {
    check_zeta(zeta)?;
    if f.is_zero() || t == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    let (width, breaks) = match f {
        Forcing::Separable { time, .. } => (time.resolution(), time.breakpoints()),
        Forcing::Sampled { t: ts, .. } => (ts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min), ts.clone()),
        Forcing::Zero => unreachable!(),
    };
    let mut edges = vec![0.0];
    edges.extend(breaks.into_iter().filter(|&b| b > 0.0 && b < t));
    edges.push(t);
    let width = width.min(t / q.panels as f64);
    // evaluate the slice transforms, propagating the first failure
    let err = std::sync::Mutex::new(None);
    let amp = |tau: f64| match forcing_slice(f, zeta, tau, q) {
        Ok(v) => v,
        Err(e) => {
            err.lock().unwrap().get_or_insert(e);
            C64::new(0.0, 0.0)
        }
    };
    let set = PanelSet::build(&edges, width, q.oscillatory_rule, &amp, None);
    if let Some(e) = err.into_inner().unwrap() {
        return Err(e);
    }
    Ok(set.integrate(zeta.powu(m as u32)))
}
