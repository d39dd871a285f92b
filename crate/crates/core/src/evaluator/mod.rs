//! Evaluation of the unified-transform solution formula on a space-time grid.

mod forcing;
mod oracle;
pub mod pieces;
pub mod tails;

pub use forcing::{cumulative_linear, SampledForcing};
pub use oracle::{trace_derivatives, wholeline_oracle, wholeline_trace};
pub use pieces::{radial_nodes, Piece};

use crate::contour::{decay_factor, Ray};
use crate::data::{DataHandle, Forcing};
use crate::elimination::UtmConstants;
use crate::field::{Grid, Provenance, SolutionField};
use crate::problem::ValidatedSpec;
use crate::transforms::{spatial_cut, PanelSet, QuadratureConfig};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use tails::{piece_tail, TailBuilder, TailTerm};

/// Upper limit of the boundary time transforms inside the formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UpperLimit {
    EvaluationTime,
    Horizon,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourConfig {
    /// Radius of the explicitly integrated part of every piece; 0 selects it from `m` and `T`.
    pub spectral_radius: f64,
    /// Largest phase increment per Gauss-Legendre panel, in radians.
    pub phase_per_panel: f64,
    pub order: usize,
    /// Number of terms of the large-`xi` expansion of the initial-data transform.
    pub data_tail_terms: usize,
    /// Number of terms of the large-`lambda` expansion of boundary transforms.
    pub boundary_tail_terms: usize,
    pub upper_limit: UpperLimit,
}

impl Default for ContourConfig {
    fn default() -> Self {
        ContourConfig {
            spectral_radius: 0.0,
            phase_per_panel: 10.0,
            order: 16,
            data_tail_terms: 6,
            boundary_tail_terms: 3,
            upper_limit: UpperLimit::EvaluationTime,
        }
    }
}

/// Total phase `R^m T` the automatic radius aims for.
const AUTO_PHASE: f64 = 4000.0;

impl ContourConfig {
    pub fn radius(&self, m: usize, t_end: f64) -> f64 {
        if self.spectral_radius > 0.0 {
            return self.spectral_radius;
        }
        (AUTO_PHASE / t_end.max(1e-12)).powf(1.0 / m as f64).clamp(4.0, 24.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SolverConfig {
    pub quad: QuadratureConfig,
    pub contour: ContourConfig,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalInfo {
    pub radius: f64,
    pub nodes: Vec<(String, usize)>,
    pub warnings: Vec<String>,
}

/// Panels over `[0, t_end]` with edges at the evaluation times and the data breakpoints.
struct Cumulative {
    set: PanelSet,
    edges: Vec<f64>,
}

impl Cumulative {
    fn new(g: &DataHandle, times: &[f64], extra: &[f64], panels: usize, rule: crate::transforms::OscillatoryRule) -> Cumulative {
        let t_end = times.iter().chain(extra).cloned().fold(0.0, f64::max);
        let mut edges = vec![0.0];
        edges.extend(times.iter().chain(extra).cloned().filter(|&t| t > 0.0));
        edges.extend(g.breakpoints().into_iter().filter(|&b| b > 0.0 && b < t_end));
        edges.sort_by(f64::total_cmp);
        edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * t_end.max(1.0));
        let width = g.resolution().min(t_end.max(1e-300) / panels as f64);
        let f = |t: f64| C64::new(g.eval(t), 0.0);
        let ex = |a: f64, b: f64| g.exact_piece(a, b);
        Cumulative { set: PanelSet::build(&edges, width, rule, &f, Some(&ex)), edges }
    }

    /// `int_0^{t} e^{-i lambda tau} g` at each requested `t`.
    fn at(&self, lambda: f64, times: &[f64]) -> Vec<C64> {
        let seg = self.set.integrate_segments(C64::new(lambda, 0.0));
        let mut cum = vec![C64::new(0.0, 0.0); self.edges.len()];
        for i in 0..seg.len() {
            cum[i + 1] = cum[i] + seg[i];
        }
        times
            .iter()
            .map(|&t| {
                let i = self.edges.partition_point(|&e| e < t - 1e-14 * t.max(1.0));
                cum[i.min(cum.len() - 1)]
            })
            .collect()
    }
}

enum ForcingPrep<'a> {
    None,
    Separable { space: PanelSet, time: Cumulative },
    Sampled(SampledForcing<'a>),
}

/// Evaluates the solution formula on `grid`.
pub fn evaluate_linear(spec: &ValidatedSpec, k: &UtmConstants, grid: &Grid, cfg: &SolverConfig) -> Result<SolutionField> {
    Ok(evaluate_linear_detailed(spec, k, grid, cfg)?.0)
}

pub fn evaluate_linear_detailed(
    spec: &ValidatedSpec,
    k: &UtmConstants,
    grid: &Grid,
    cfg: &SolverConfig,
) -> Result<(SolutionField, EvalInfo)> {
    cfg.quad.validate()?;
    let m = spec.m;
    if k.m != m {
        return Err(Error::invalid(format!("constants are for m = {}, problem has m = {m}", k.m)));
    }
    let t_end = *grid.t.last().unwrap();
    if t_end > spec.t_max * (1.0 + 1e-12) {
        return Err(Error::Domain(format!("grid reaches t = {t_end} beyond the horizon T = {}", spec.t_max)));
    }
    let mut warnings = Vec::new();
    let times = &grid.t;
    let nt = times.len();
    let x_max = *grid.x.last().unwrap();
    let x_min = grid.x[0];
    let radius = cfg.contour.radius(m, t_end);
    let mf = m as f64;
    let rate = move |r: f64| x_max.max(10.0) + mf * r.powi(m as i32 - 1) * t_end;
    let pieces = pieces::build_pieces(k, radius, x_min, &rate, cfg.contour.phase_per_panel, cfg.contour.order)?;
    let q = &cfg.quad;

    let horizon = [spec.t_max];
    let (g_times, extra): (&[f64], &[f64]) = match cfg.contour.upper_limit {
        UpperLimit::EvaluationTime => (times, &[]),
        UpperLimit::Horizon => {
            warnings.push("boundary transforms use the horizon T; tails of the e^{i lambda (t-T)} part are omitted".into());
            (&horizon, &horizon)
        }
    };

    let u0_set = if spec.u0.is_zero() {
        None
    } else {
        let cut = spatial_cut(&spec.u0, 0.0, q)?;
        Some(PanelSet::for_handle(&spec.u0, 0.0, cut, q.panels, q.oscillatory_rule))
    };
    let g_sets: Vec<Option<Cumulative>> = spec
        .g
        .iter()
        .map(|g| (!g.is_zero()).then(|| Cumulative::new(g, times, extra, q.panels, q.oscillatory_rule)))
        .collect();
    let fprep = match &spec.f {
        f if f.is_zero() => ForcingPrep::None,
        Forcing::Separable { space, time } => {
            let cut = spatial_cut(space, 0.0, q)?;
            ForcingPrep::Separable {
                space: PanelSet::for_handle(space, 0.0, cut, q.panels, q.oscillatory_rule),
                time: Cumulative::new(time, times, &[], q.panels, q.oscillatory_rule),
            }
        }
        Forcing::Sampled { x, t, values } => {
            if x.len() < 2 || (x[0]).abs() > 0.0 {
                return Err(Error::invalid("sampled forcing needs an x-grid starting at 0"));
            }
            ForcingPrep::Sampled(SampledForcing { x, t, values })
        }
        Forcing::Zero => ForcingPrep::None,
    };

    // amplitudes per piece, laid out [k][node]
    let mut amps: Vec<Vec<C64>> = Vec::with_capacity(pieces.len());
    for pc in &pieces {
        let nn = pc.r.len();
        let per_node: Vec<Vec<C64>> = (0..nn)
            .into_par_iter()
            .map(|n| {
                let r = pc.r[n];
                let xi = pc.gamma * r;
                let lambda = pc.sigma * r.powi(m as i32);
                let osc: Vec<C64> = times.iter().map(|&t| C64::new(0.0, lambda * t).exp()).collect();
                let mut a = vec![C64::new(0.0, 0.0); nt];
                for &(c, alpha) in &pc.terms {
                    let zeta = alpha * xi;
                    if let Some(set) = &u0_set {
                        let u = set.integrate(zeta) * c;
                        for kk in 0..nt {
                            a[kk] += osc[kk] * u;
                        }
                    }
                    match &fprep {
                        ForcingPrep::None => {}
                        ForcingPrep::Separable { space, time } => {
                            let xs = space.integrate(zeta) * c;
                            let tt = time.at(lambda, times);
                            for kk in 0..nt {
                                a[kk] += osc[kk] * tt[kk] * xs;
                            }
                        }
                        ForcingPrep::Sampled(sf) => {
                            let sl = sf.slices(zeta);
                            let ef = cumulative_linear(lambda, sf.t, &sl, times);
                            for kk in 0..nt {
                                a[kk] += ef[kk] * c;
                            }
                        }
                    }
                }
                for &(l, c) in &pc.boundary {
                    if let Some(cs) = &g_sets[l] {
                        let pw = (C64::i() * xi).powu((2 * k.j - l) as u32) * c;
                        let g = cs.at(lambda, g_times);
                        for kk in 0..nt {
                            let gk = if g.len() == 1 { g[0] } else { g[kk] };
                            a[kk] += osc[kk] * gk * pw;
                        }
                    }
                }
                a
            })
            .collect();
        let mut flat = vec![C64::new(0.0, 0.0); nn * nt];
        for (n, a) in per_node.into_iter().enumerate() {
            for kk in 0..nt {
                flat[kk * nn + n] = a[kk];
            }
        }
        amps.push(flat);
    }

    let tails: Vec<Vec<TailTerm>> = pieces.iter().map(|pc| tail_terms(spec, k, pc, times, &cfg.contour)).collect::<Result<_>>()?;

    let columns: Vec<Vec<C64>> = grid
        .x
        .par_iter()
        .map(|&x| {
            let mut col = vec![C64::new(0.0, 0.0); nt];
            for (pi, pc) in pieces.iter().enumerate() {
                let e: Vec<C64> = pc
                    .r
                    .iter()
                    .zip(&pc.w)
                    .map(|(r, w)| (C64::i() * pc.gamma * (r * x)).exp() * pc.gamma * (w * pc.sign))
                    .collect();
                let nn = e.len();
                for kk in 0..nt {
                    let row = &amps[pi][kk * nn..(kk + 1) * nn];
                    let s: C64 = row.iter().zip(&e).map(|(a, b)| a * b).sum();
                    col[kk] += s + piece_tail(pc, m, &tails[pi], x, times[kk], kk) * pc.sign;
                }
            }
            col
        })
        .collect();
    let nx = grid.x.len();
    let mut values = vec![C64::new(0.0, 0.0); nx * nt];
    for (i, col) in columns.into_iter().enumerate() {
        for kk in 0..nt {
            values[kk * nx + i] = col[kk];
        }
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite value in the evaluated field".into()));
    }
    let info = EvalInfo { radius, nodes: pieces.iter().map(|p| (p.label.clone(), p.r.len())).collect(), warnings };
    Ok((SolutionField { grid: grid.clone(), values, quad: Some(cfg.quad), provenance: Provenance::UtmLinear }, info))
}

/// Large-`xi` expansion coefficients of a piece's amplitude.
fn tail_terms(spec: &ValidatedSpec, k: &UtmConstants, pc: &Piece, times: &[f64], c: &ContourConfig) -> Result<Vec<TailTerm>> {
    let nt = times.len();
    let m = spec.m as u32;
    let i = C64::i();
    let mut tb = TailBuilder::new(nt);
    if !pc.tails {
        return Ok(vec![]);
    }
    for &(coef, alpha) in &pc.terms {
        if !spec.u0.is_zero() {
            for d in 0..c.data_tail_terms {
                let Ok(v) = spec.u0.derivative(d, 0.0) else { break };
                let cf = coef * v / (i * alpha).powu(d as u32 + 1);
                for kk in 0..nt {
                    tb.add(d as u32 + 1, true, kk, cf);
                }
            }
        }
        if !spec.f.is_zero() {
            let base = coef / (i * alpha * i);
            let f00 = spec.f.eval(0.0, 0.0);
            for (kk, &t) in times.iter().enumerate() {
                tb.add(m + 1, false, kk, -base * spec.f.eval(0.0, t));
                tb.add(m + 1, true, kk, base * f00);
            }
        }
    }
    for &(l, cp) in &pc.boundary {
        let g = &spec.g[l];
        if g.is_zero() {
            continue;
        }
        let pw = 2 * k.j - l;
        for d in 0..c.boundary_tail_terms {
            if g.derivative(d, 0.0).is_err() {
                break;
            }
            let factor = cp * i.powu(pw as u32) / i.powu(d as u32 + 1);
            let q = m * (d as u32 + 1) - pw as u32;
            let g0 = g.derivative(d, 0.0)?;
            for (kk, &t) in times.iter().enumerate() {
                tb.add(q, true, kk, factor * g0);
                if c.upper_limit == UpperLimit::EvaluationTime {
                    tb.add(q, false, kk, -factor * g.derivative(d, t)?);
                }
            }
        }
    }
    Ok(tb.finish())
}

/// Result of a single-ray integral.
#[derive(Debug, Clone, Copy)]
pub struct RayIntegral {
    pub value: C64,
    /// Radius where the integrand was certified negligible, if it was.
    pub cut: Option<f64>,
    /// Set when spatial decay could not certify the truncation (x = 0).
    pub slow_decay: bool,
}

/// `int_0^R amplitude(xi) e^{i xi x} e^{i xi^m t} d xi` along `ray` (orientation sign included),
/// truncated once the decay factor times the amplitude bound falls below `tol`.
pub fn ray_integral(
    amplitude: &(dyn Fn(C64) -> C64 + Sync),
    ray: &Ray,
    m: usize,
    x: f64,
    t: f64,
    radius: f64,
    tol: f64,
) -> Result<RayIntegral> {
    if x < 0.0 {
        return Err(Error::Domain("ray integrals need x >= 0".into()));
    }
    let gamma = ray.unit();
    let sigma = ray.power_sign(m).ok_or_else(|| Error::Numerical("ray is not a steepest direction of xi^m".into()))?;
    let mut r_end = radius;
    let mut cut = None;
    let mut slow = x == 0.0;
    if x > 0.0 {
        // amplitude bound sampled coarsely along the ray
        let bound = (0..=64).map(|i| amplitude(gamma * (radius * i as f64 / 64.0)).norm()).fold(0.0, f64::max);
        let c = ((bound.max(1e-300) / tol).ln().max(0.0)) / (ray.angle().sin() * x);
        if c < radius {
            r_end = c;
            cut = Some(c);
        }
    } else {
        let tail = amplitude(gamma * radius).norm() * radius;
        slow = tail > tol;
    }
    let mf = m as f64;
    let (r, w) = radial_nodes(r_end, |r| x.max(1.0) + mf * r.powi(m as i32 - 1) * t, 10.0, 16);
    let value: C64 = r
        .iter()
        .zip(&w)
        .map(|(&r, &w)| {
            let xi = gamma * r;
            debug_assert!(decay_factor(ray, r, x) <= 1.0);
            amplitude(xi) * (C64::i() * (xi * x + sigma * r.powi(m as i32) * t)).exp() * gamma * w
        })
        .sum::<C64>()
        * ray.sign();
    Ok(RayIntegral { value, cut, slow_decay: slow })
}

