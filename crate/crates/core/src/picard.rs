//! Contraction iteration `u -> S[data; f - (1/2) d_x(u^2)]` on the physical grid.

use crate::data::{DataHandle, Forcing};
use crate::elimination::UtmConstants;
use crate::evaluator::{evaluate_linear, SolverConfig};
use crate::fd::centered_weights;
use crate::field::{Grid, Provenance, SolutionField};
use crate::problem::{data_norm, lifespan, ProblemSpec, ValidatedSpec};
use crate::{Error, Result, C64};
use serde::Serialize;

pub const DEFAULT_MAX_ITER: usize = 25;
pub const DEFAULT_TOL: f64 = 1e-8;
/// Consecutive non-contracting steps tolerated before giving up.
const DIVERGENCE_STREAK: usize = 3;

#[derive(Debug, Clone, Default)]
pub struct PicardState {
    pub iterates: Vec<SolutionField>,
    /// Discrete l2 norms of successive differences.
    pub diff_norms: Vec<f64>,
    pub contraction_ratios: Vec<f64>,
    pub converged: bool,
    pub warnings: Vec<String>,
}

/// `-(1/2) d_x(u^2)` of the real part, centered in the interior and one-sided at the ends.
pub fn nonlinearity(u: &SolutionField) -> Vec<f64> {
    let nx = u.nx();
    let x = &u.grid.x;
    let mut out = vec![0.0; u.values.len()];
    for k in 0..u.nt() {
        let sq: Vec<f64> = (0..nx).map(|i| u.at(i, k).re.powi(2)).collect();
        for i in 0..nx {
            let d = if nx < 3 {
                0.0
            } else if i == 0 {
                let h = x[1] - x[0];
                (-3.0 * sq[0] + 4.0 * sq[1] - sq[2]) / (2.0 * h)
            } else if i == nx - 1 {
                let h = x[nx - 1] - x[nx - 2];
                (3.0 * sq[nx - 1] - 4.0 * sq[nx - 2] + sq[nx - 3]) / (2.0 * h)
            } else {
                (sq[i + 1] - sq[i - 1]) / (x[i + 1] - x[i - 1])
            };
            out[k * nx + i] = -0.5 * d;
        }
    }
    out
}

fn diff_norm(a: &SolutionField, b: &SolutionField) -> f64 {
    a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt()
}

/// Solves the nonlinear problem on `grid`, which must be uniform in x starting at 0 and wide enough
/// for the solution to have decayed at its right end.
pub fn picard_solve(
    spec: &ValidatedSpec,
    k: &UtmConstants,
    grid: &Grid,
    cfg: &SolverConfig,
    max_iter: usize,
    tol: f64,
) -> Result<(SolutionField, PicardState)> {
    if grid.x[0] != 0.0 || grid.x.len() < 3 || !grid.is_uniform() {
        return Err(Error::invalid("the iteration grid must be uniform with at least 3 x-points starting at x = 0"));
    }
    if max_iter == 0 || !(tol > 0.0) {
        return Err(Error::invalid("max_iter must be positive and tol > 0"));
    }
    let mut state = PicardState::default();
    if let Ok(n) = data_norm(spec, &cfg.quad) {
        if let Ok(ls) = lifespan(spec.s, spec.m, n, 1.0) {
            if *grid.t.last().unwrap() > ls.value {
                state.warnings.push(format!(
                    "horizon exceeds the guaranteed lifespan (log10 T* = {:.3}); proceeding",
                    ls.log10
                ));
            }
        }
    }

    // S is affine: u_{n+1} = S[data; f] + S[0; N(u_n)]
    let base = evaluate_linear(spec, k, grid, cfg)?;
    let forced = |u: &SolutionField| -> Result<SolutionField> {
        let inner = ProblemSpec {
            m: spec.m,
            t_max: spec.t_max,
            s: spec.s,
            u0: DataHandle::zero(),
            g: vec![DataHandle::zero(); spec.j],
            f: Forcing::Sampled { x: grid.x.clone(), t: grid.t.clone(), values: nonlinearity(u) },
        };
        let inner = ValidatedSpec { spec: inner, j: spec.j, warnings: vec![] };
        let mut v = evaluate_linear(&inner, k, grid, cfg)?;
        for (a, b) in v.values.iter_mut().zip(&base.values) {
            *a += b;
        }
        Ok(v)
    };

    let mut current = base.clone();
    state.iterates.push(base.clone());
    let mut streak = 0;
    for _ in 0..max_iter {
        let next = forced(&current)?;
        let d = diff_norm(&next, &current);
        if let Some(&prev) = state.diff_norms.last() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            state.contraction_ratios.push(ratio);
            streak = if ratio >= 1.0 { streak + 1 } else { 0 };
        }
        state.diff_norms.push(d);
        if !d.is_finite() {
            return Err(Error::Numerical("iterate became non-finite".into()));
        }
        let scale = next.l2();
        current = next;
        state.iterates.push(current.clone());
        if d <= tol * scale {
            state.converged = true;
            break;
        }
        if streak >= DIVERGENCE_STREAK {
            return Err(Error::NonContraction { ratios: state.contraction_ratios.clone() });
        }
    }
    current.provenance = Provenance::UtmPicard;
    Ok((current, state))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    /// Least-squares geometric rate of the difference norms; `None` with fewer than 2 of them.
    pub rate: Option<f64>,
    pub ratios: Vec<f64>,
    pub converged: bool,
    pub diverging: bool,
    pub note: String,
}

pub fn contraction_report(state: &PicardState) -> ContractionReport {
    report_from_diffs(&state.diff_norms, state.converged)
}

pub fn report_from_diffs(diffs: &[f64], converged: bool) -> ContractionReport {
    let ratios: Vec<f64> = diffs.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 }).collect();
    let pts: Vec<(f64, f64)> = diffs.iter().enumerate().filter(|(_, d)| **d > 0.0).map(|(i, d)| (i as f64, d.ln())).collect();
    if pts.len() < 2 {
        return ContractionReport {
            rate: None,
            ratios,
            converged,
            diverging: false,
            note: "insufficient data".into(),
        };
    }
    let n = pts.len() as f64;
    let (sx, sy) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (sx / n, sy / n);
    let (num, den) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + (p.0 - mx) * (p.1 - my), a.1 + (p.0 - mx).powi(2)));
    let rate = (num / den).exp();
    let diverging = rate > 1.0;
    let note = if diverging { "diverging" } else { "contracting" }.to_string();
    ContractionReport { rate: Some(rate), ratios, converged, diverging, note }
}

/// Discrete residual of `u_t + (-1)^{j+1} d_x^m u + u u_x = f` on interior points, as an rms
/// relative to the field's maximum modulus.
pub fn pde_residual(field: &SolutionField, m: usize) -> Result<f64> {
    pde_residual_forced(field, m, &Forcing::Zero)
}

pub fn pde_residual_forced(field: &SolutionField, m: usize, f: &Forcing) -> Result<f64> {
    let (nx, nt) = (field.nx(), field.nt());
    if m % 2 == 0 || nx < m + 3 || nt < 3 || !field.grid.is_uniform() {
        return Err(Error::invalid(format!("residual needs odd m and a uniform grid with at least {} x-points and 3 t-points", m + 3)));
    }
    let scale = field.max_modulus();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let dx = field.grid.x[1] - field.grid.x[0];
    let dt = field.grid.t[1] - field.grid.t[0];
    let j = (m - 1) / 2;
    let sgn = if j % 2 == 0 { -1.0 } else { 1.0 };
    let (h, w) = centered_weights(m);
    let mut sum = 0.0;
    let mut count = 0usize;
    for k in 1..nt - 1 {
        for i in h..nx - h {
            let ut = (field.at(i, k + 1) - field.at(i, k - 1)) / (2.0 * dt);
            let dm: C64 = w.iter().enumerate().map(|(o, c)| field.at(i + o - h, k) * *c).sum::<C64>() / dx.powi(m as i32);
            let ux = (field.at(i + 1, k) - field.at(i - 1, k)) / (2.0 * dx);
            let r = ut + dm * sgn + field.at(i, k) * ux - f.eval(field.grid.x[i], field.grid.t[k]);
            sum += r.norm_sqr();
            count += 1;
        }
    }
    Ok((sum / count as f64).sqrt() / scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_geometric() {
        let r = report_from_diffs(&[1.0, 0.5, 0.25], true);
        assert!((r.rate.unwrap() - 0.5).abs() < 1e-12);
        assert!(!r.diverging);
        let r = report_from_diffs(&[1.0], false);
        assert_eq!(r.note, "insufficient data");
        let r = report_from_diffs(&[1.0, 2.0, 4.0], false);
        assert!(r.diverging && r.rate.unwrap() > 1.0);
    }

    #[test]
    fn residual_of_zero_and_coarse() {
        let g = Grid::uniform(1.0, 10, 1.0, 5);
        let z = SolutionField::zeros(g, Provenance::Loaded);
        assert_eq!(pde_residual(&z, 3).unwrap(), 0.0);
        let g = Grid::uniform(1.0, 4, 1.0, 5);
        assert!(pde_residual(&SolutionField::zeros(g, Provenance::Loaded), 3).is_err());
    }

    #[test]
    fn nonlinearity_of_linear_profile() {
        // u = x: -(1/2) d_x(x^2) = -x, exact for the quadratic on every stencil
        let g = Grid::uniform(1.0, 11, 0.0, 1);
        let mut u = SolutionField::zeros(g, Provenance::Loaded);
        for i in 0..11 {
            u.values[i] = C64::new(i as f64 / 10.0, 0.0);
        }
        let n = nonlinearity(&u);
        for i in 0..11 {
            assert!((n[i] + i as f64 / 10.0).abs() < 1e-12);
        }
    }
}
