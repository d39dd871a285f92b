//! Whole-line free evolution by real-axis quadrature, used as an independent oracle.

use super::{radial_nodes, SolverConfig};
use crate::data::DataHandle;
use crate::field::{Grid, Provenance, SolutionField};
use crate::transforms::PanelSet;
use crate::{Error, Result, C64};
use rayon::prelude::*;
use std::f64::consts::PI;

struct LineRule {
    r: Vec<f64>,
    w: Vec<f64>,
    /// `U0^(r)` and `U0^(-r)`.
    plus: Vec<C64>,
    minus: Vec<C64>,
}

fn line_rule(u0: &DataHandle, m: usize, x_max: f64, t_end: f64, cfg: &SolverConfig) -> Result<LineRule> {
    let (a, b) = u0
        .support(cfg.quad.rel_tol * 1e-3)
        .ok_or_else(|| Error::Domain("whole-line oracle needs data decaying in both directions".into()))?;
    let set = PanelSet::for_handle(u0, a, b.max(a + 1e-12), cfg.quad.panels, cfg.quad.oscillatory_rule);
    let radius = cfg.contour.radius(m, t_end);
    let mf = m as f64;
    // same nodes as the line pieces of the contour evaluator
    let (r, w) = radial_nodes(radius, |r| x_max.max(10.0) + mf * r.powi(m as i32 - 1) * t_end, cfg.contour.phase_per_panel, cfg.contour.order);
    let plus: Vec<C64> = r.par_iter().map(|&r| set.integrate(C64::new(r, 0.0))).collect();
    let minus: Vec<C64> = r.par_iter().map(|&r| set.integrate(C64::new(-r, 0.0))).collect();
    Ok(LineRule { r, w, plus, minus })
}

fn line_value(lr: &LineRule, m: usize, x: f64, t: f64, dx_order: u32) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for n in 0..lr.r.len() {
        let r = lr.r[n];
        let ph = r * x + r.powi(m as i32) * t;
        let e = C64::new(0.0, ph).exp();
        let d = C64::new(0.0, r).powu(dx_order);
        s += (e * d * lr.plus[n] + e.conj() * d.conj() * lr.minus[n]) * lr.w[n];
    }
    s / (2.0 * PI)
}

/// `U(x, t) = (1/2pi) int e^{i xi x + i xi^m t} U0^(xi) d xi` on the grid.
pub fn wholeline_oracle(u0: &DataHandle, m: usize, grid: &Grid, cfg: &SolverConfig) -> Result<SolutionField> {
    let t_end = *grid.t.last().unwrap();
    let lr = line_rule(u0, m, *grid.x.last().unwrap(), t_end, cfg)?;
    let nx = grid.x.len();
    let values: Vec<C64> = (0..nx * grid.t.len())
        .into_par_iter()
        .map(|n| line_value(&lr, m, grid.x[n % nx], grid.t[n / nx], 0))
        .collect();
    Ok(SolutionField { grid: grid.clone(), values, quad: Some(cfg.quad), provenance: Provenance::WholelineOracle })
}

/// `d_x^l U(0, t)` at each time, using the nodes the oracle would use for a grid with
/// spatial extent `x_max` and final time `t_end`.
pub fn wholeline_trace(u0: &DataHandle, m: usize, l: u32, times: &[f64], x_max: f64, cfg: &SolverConfig) -> Result<Vec<f64>> {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let lr = line_rule(u0, m, x_max, t_end, cfg)?;
    Ok(times.par_iter().map(|&t| line_value(&lr, m, 0.0, t, l).re).collect())
}

/// Whole-line traces `d_x^l U(0, .)`, `l = 0..j-1`, as cubic-spline data handles on `n` samples of `[0, t_end]`.
pub fn trace_derivatives(u0: &DataHandle, m: usize, t_end: f64, n: usize, x_max: f64, cfg: &SolverConfig) -> Result<Vec<DataHandle>> {
    let times: Vec<f64> = (0..n).map(|i| t_end * i as f64 / (n - 1) as f64).collect();
    (0..(m as u32 - 1) / 2)
        .map(|l| DataHandle::sampled(times.clone(), wholeline_trace(u0, m, l, &times, x_max, cfg)?, 3))
        .collect()
}
