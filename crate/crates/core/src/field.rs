//! Space-time grids and complex solution fields.

use crate::transforms::QuadratureConfig;
use crate::{Error, Result, C64};
use serde::Serialize;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    pub x: Vec<f64>,
    pub t: Vec<f64>,
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

impl Grid {
    pub fn uniform(x_max: f64, nx: usize, t_max: f64, nt: usize) -> Grid {
        Grid { x: linspace(0.0, x_max, nx), t: linspace(0.0, t_max, nt) }
    }

    pub fn new(x: Vec<f64>, t: Vec<f64>) -> Result<Grid> {
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        if x.is_empty() || t.is_empty() || !inc(&x) || !inc(&t) || x[0] < 0.0 || t[0] < 0.0 {
            return Err(Error::invalid("grid axes must be non-empty, non-negative and strictly increasing"));
        }
        Ok(Grid { x, t })
    }

    pub fn is_uniform(&self) -> bool {
        let u = |v: &[f64]| {
            v.len() < 3 || {
                let h = v[1] - v[0];
                v.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.abs().max(1e-300))
            }
        };
        u(&self.x) && u(&self.t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Provenance {
    UtmLinear,
    UtmPicard,
    WholelineOracle,
    ReferenceFd,
    Loaded,
}

/// Values stored row-major over t then x: `values[k * nx + i] = u(x_i, t_k)`.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionField {
    pub grid: Grid,
    pub values: Vec<C64>,
    pub quad: Option<QuadratureConfig>,
    pub provenance: Provenance,
}

impl SolutionField {
    pub fn zeros(grid: Grid, provenance: Provenance) -> SolutionField {
        let n = grid.x.len() * grid.t.len();
        SolutionField { grid, values: vec![C64::new(0.0, 0.0); n], quad: None, provenance }
    }

    pub fn nx(&self) -> usize {
        self.grid.x.len()
    }

    pub fn nt(&self) -> usize {
        self.grid.t.len()
    }

    pub fn at(&self, i: usize, k: usize) -> C64 {
        self.values[k * self.nx() + i]
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    /// Plain discrete l2 norm of the values.
    pub fn l2(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||a - b|| / ||b||` over grid points; both fields must share the grid.
    pub fn relative_l2(a: &SolutionField, b: &SolutionField) -> Result<f64> {
        if a.values.len() != b.values.len() {
            return Err(Error::invalid("fields live on different grids"));
        }
        let num: f64 = a.values.iter().zip(&b.values).map(|(u, v)| (u - v).norm_sqr()).sum();
        let den: f64 = b.values.iter().map(|v| v.norm_sqr()).sum();
        Ok(if den == 0.0 { num.sqrt() } else { (num / den).sqrt() })
    }

    /// Bilinear interpolation onto `grid`, which must lie inside this field's grid.
    pub fn resample(&self, grid: &Grid) -> Result<SolutionField> {
        let inside = |v: &[f64], lo: f64, hi: f64| {
            let slack = 1e-9 * (hi - lo).abs().max(1.0);
            v.iter().all(|&p| p >= lo - slack && p <= hi + slack)
        };
        let (gx, gt) = (&self.grid.x, &self.grid.t);
        if !inside(&grid.x, gx[0], gx[gx.len() - 1]) || !inside(&grid.t, gt[0], gt[gt.len() - 1]) {
            return Err(Error::Domain("resampling grid leaves the field's grid".into()));
        }
        let locate = |axis: &[f64], p: f64| -> (usize, f64) {
            if axis.len() == 1 {
                return (0, 0.0);
            }
            let i = axis.partition_point(|&a| a <= p).clamp(1, axis.len() - 1) - 1;
            (i, ((p - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0))
        };
        let nx = self.nx();
        let at = |i: usize, k: usize| self.values[k * nx + i];
        let mut values = Vec::with_capacity(grid.x.len() * grid.t.len());
        for &t in &grid.t {
            let (k, wt) = locate(gt, t);
            let k1 = (k + 1).min(gt.len() - 1);
            for &x in &grid.x {
                let (i, wx) = locate(gx, x);
                let i1 = (i + 1).min(nx - 1);
                let lo = at(i, k) * (1.0 - wx) + at(i1, k) * wx;
                let hi = at(i, k1) * (1.0 - wx) + at(i1, k1) * wx;
                values.push(lo * (1.0 - wt) + hi * wt);
            }
        }
        Ok(SolutionField { grid: grid.clone(), values, quad: self.quad, provenance: self.provenance })
    }

    /// Restriction to the points with `x in [x0, x1]`, `t in [t0, t1]`.
    pub fn window(&self, x0: f64, x1: f64, t0: f64, t1: f64) -> SolutionField {
        let xi: Vec<usize> = (0..self.nx()).filter(|&i| self.grid.x[i] >= x0 && self.grid.x[i] <= x1).collect();
        let ti: Vec<usize> = (0..self.nt()).filter(|&k| self.grid.t[k] >= t0 && self.grid.t[k] <= t1).collect();
        let grid = Grid { x: xi.iter().map(|&i| self.grid.x[i]).collect(), t: ti.iter().map(|&k| self.grid.t[k]).collect() };
        let values = ti.iter().flat_map(|&k| xi.iter().map(move |&i| (i, k))).map(|(i, k)| self.at(i, k)).collect();
        SolutionField { grid, values, quad: self.quad, provenance: self.provenance }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,t,re_u,im_u\n");
        for (k, t) in self.grid.t.iter().enumerate() {
            for (i, x) in self.grid.x.iter().enumerate() {
                let v = self.at(i, k);
                let _ = writeln!(s, "{:.12e},{:.12e},{:.12e},{:.12e}", x, t, v.re, v.im);
            }
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<SolutionField> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("x,t,re_u,im_u") {
            return Err(Error::invalid("field CSV must start with the header x,t,re_u,im_u"));
        }
        let mut rows = Vec::new();
        for (n, l) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let v: Vec<f64> = l
                .split(',')
                .map(|c| c.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::invalid(format!("malformed CSV row {}", n + 2)))?;
            if v.len() != 4 {
                return Err(Error::invalid(format!("CSV row {} needs 4 columns", n + 2)));
            }
            rows.push(v);
        }
        let mut x = Vec::new();
        for r in &rows {
            if r[1] != rows[0][1] {
                break;
            }
            x.push(r[0]);
        }
        if x.is_empty() || rows.len() % x.len() != 0 {
            return Err(Error::invalid("CSV rows do not form a rectangular grid"));
        }
        let t: Vec<f64> = rows.iter().step_by(x.len()).map(|r| r[1]).collect();
        let values = rows.iter().map(|r| C64::new(r[2], r[3])).collect();
        Ok(SolutionField { grid: Grid::new(x, t)?, values, quad: None, provenance: Provenance::Loaded })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let g = Grid::uniform(2.0, 5, 0.1, 3);
        let mut f = SolutionField::zeros(g, Provenance::UtmLinear);
        for (n, v) in f.values.iter_mut().enumerate() {
            *v = C64::new((n as f64).sin() / 3.0, 1e-7 * n as f64);
        }
        let back = SolutionField::from_csv(&f.to_csv()).unwrap();
        assert_eq!(back.grid.x.len(), 5);
        assert_eq!(back.grid.t.len(), 3);
        assert_eq!(back.to_csv(), f.to_csv());
        assert!(SolutionField::relative_l2(&back, &f).unwrap() < 1e-12);
    }
}
