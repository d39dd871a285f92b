//! Discrete analogues of the space-time Bourgain norms of a sampled field.

use crate::field::SolutionField;
use crate::{Error, Result, C64};
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BourgainVariant {
    /// `(1+|xi|)^s (1+|tau-xi^m|)^b + chi_{|xi|<1} (1+|tau|)^alpha`
    X,
    /// `(1+|tau|)^{s/m} (1+|tau-xi^m|)^b`
    Y,
}

/// Angular frequencies of an `n`-point transform with spacing `h`, in FFT order.
fn frequencies(n: usize, h: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let k = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            2.0 * PI * k / (n as f64 * h)
        })
        .collect()
}

/// Weighted l2 norm of the space-time transform of `field`, zero-extended to twice its extent in
/// both directions. The transform is `int int e^{-i(x xi + t tau)} u dx dt`, so free solutions of
/// `u_t + (-1)^{j+1} d_x^m u = 0` concentrate on `tau = xi^m`.
pub fn discrete_bourgain_norm(field: &SolutionField, m: usize, s: f64, b: f64, alpha: f64, variant: BourgainVariant) -> Result<f64> {
    let (nx, nt) = (field.nx(), field.nt());
    if nx < 2 || nt < 2 || !field.grid.is_uniform() {
        return Err(Error::invalid("the Bourgain norm needs a uniform grid with at least 2 points per axis"));
    }
    let dx = field.grid.x[1] - field.grid.x[0];
    let dt = field.grid.t[1] - field.grid.t[0];
    let (px, pt) = (2 * nx, 2 * nt);
    let mut data = vec![C64::new(0.0, 0.0); px * pt];
    for k in 0..nt {
        for i in 0..nx {
            data[k * px + i] = field.at(i, k);
        }
    }
    let mut planner = FftPlanner::new();
    let fx = planner.plan_fft_forward(px);
    for row in data.chunks_mut(px) {
        fx.process(row);
    }
    let ft = planner.plan_fft_forward(pt);
    let mut col = vec![C64::new(0.0, 0.0); pt];
    for i in 0..px {
        for k in 0..pt {
            col[k] = data[k * px + i];
        }
        ft.process(&mut col);
        for k in 0..pt {
            data[k * px + i] = col[k];
        }
    }
    let xis = frequencies(px, dx);
    let taus = frequencies(pt, dt);
    let (dxi, dtau) = (2.0 * PI / (px as f64 * dx), 2.0 * PI / (pt as f64 * dt));
    let mi = m as i32;
    let mut sum = 0.0;
    for (k, &tau) in taus.iter().enumerate() {
        for (i, &xi) in xis.iter().enumerate() {
            let modulation = (1.0 + (tau - xi.powi(mi)).abs()).powf(b);
            let w = match variant {
                BourgainVariant::X => {
                    let low = if xi.abs() < 1.0 { (1.0 + tau.abs()).powf(alpha) } else { 0.0 };
                    (1.0 + xi.abs()).powf(s) * modulation + low
                }
                BourgainVariant::Y => (1.0 + tau.abs()).powf(s / m as f64) * modulation,
            };
            let u = data[k * px + i] * (dx * dt);
            sum += w * w * u.norm_sqr();
        }
    }
    Ok((sum * dxi * dtau).sqrt() / (2.0 * PI))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{Grid, Provenance};

    fn sample() -> SolutionField {
        let g = Grid::uniform(8.0, 32, 1.0, 16);
        let mut f = SolutionField::zeros(g.clone(), Provenance::Loaded);
        for (k, t) in g.t.iter().enumerate() {
            for (i, x) in g.x.iter().enumerate() {
                f.values[k * 32 + i] = C64::new((-(x - 3.0 - t).powi(2)).exp(), 0.0);
            }
        }
        f
    }

    #[test]
    fn zero_homogeneous_monotone() {
        let z = SolutionField::zeros(Grid::uniform(1.0, 8, 1.0, 8), Provenance::Loaded);
        assert_eq!(discrete_bourgain_norm(&z, 3, 0.0, 0.4, 0.6, BourgainVariant::X).unwrap(), 0.0);
        let f = sample();
        let mut f2 = f.clone();
        f2.values.iter_mut().for_each(|v| *v *= 2.0);
        for v in [BourgainVariant::X, BourgainVariant::Y] {
            let a = discrete_bourgain_norm(&f, 3, 0.5, 0.4, 0.6, v).unwrap();
            let a2 = discrete_bourgain_norm(&f2, 3, 0.5, 0.4, 0.6, v).unwrap();
            assert!((a2 - 2.0 * a).abs() <= 1e-12 * a);
            let a3 = discrete_bourgain_norm(&f, 3, 0.5, 0.45, 0.6, v).unwrap();
            assert!(a <= a3);
        }
    }

    #[test]
    fn plain_l2_by_parseval() {
        // s = b = 0 and no low-frequency part: weight 1, so the norm is the l2 norm times sqrt(dx dt)
        let f = sample();
        let n = discrete_bourgain_norm(&f, 3, 0.0, 0.0, 0.0, BourgainVariant::Y).unwrap();
        let dx = f.grid.x[1] - f.grid.x[0];
        let dt = f.grid.t[1] - f.grid.t[0];
        assert!((n - f.l2() * (dx * dt).sqrt()).abs() < 1e-12 * n);
    }

    #[test]
    fn rejects_nonuniform() {
        let g = Grid::new(vec![0.0, 1.0, 3.0], vec![0.0, 1.0]).unwrap();
        let f = SolutionField::zeros(g, Provenance::Loaded);
        assert!(discrete_bourgain_norm(&f, 3, 0.0, 0.4, 0.6, BourgainVariant::X).is_err());
    }
}
