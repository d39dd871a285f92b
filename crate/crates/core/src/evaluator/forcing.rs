//! Transforms of grid-sampled forcing: piecewise-linear Filon in x, then in time.

use crate::quadrature::hat_moments;
use crate::C64;

/// Sampled forcing on a uniform x-grid starting at 0 and an increasing t-grid.
pub struct SampledForcing<'a> {
    pub x: &'a [f64],
    pub t: &'a [f64],
    /// Row-major over t then x.
    pub values: &'a [f64],
}

impl SampledForcing<'_> {
    /// `f^(zeta, tau_i)` for every time sample: exact transform of the piecewise-linear slice.
    pub fn slices(&self, zeta: C64) -> Vec<C64> {
        let nx = self.x.len();
        let mut w = vec![C64::new(0.0, 0.0); nx];
        for i in 0..nx - 1 {
            let h = self.x[i + 1] - self.x[i];
            let (h0, h1) = hat_moments(C64::new(0.0, -1.0) * zeta * h);
            let e = (C64::new(0.0, -1.0) * zeta * self.x[i]).exp() * h;
            w[i] += e * h0;
            w[i + 1] += e * h1;
        }
        self.t
            .iter()
            .enumerate()
            .map(|(k, _)| {
                let row = &self.values[k * nx..(k + 1) * nx];
                row.iter().zip(&w).map(|(f, wi)| wi * *f).sum()
            })
            .collect()
    }
}

/// `e^{i lambda t_k} int_0^{t_k} e^{-i lambda tau} a(tau) d tau` for the piecewise-linear
/// interpolant of samples `a(tau_i)`, at each requested time `t_k`.
pub fn cumulative_linear(lambda: f64, tau: &[f64], a: &[C64], times: &[f64]) -> Vec<C64> {
    // merge evaluation times into the sample grid, interpolating linearly
    let mut pts: Vec<(f64, C64)> = tau.iter().cloned().zip(a.iter().cloned()).collect();
    let interp = |t: f64| -> C64 {
        if t <= tau[0] {
            return a[0];
        }
        let n = tau.len();
        if t >= tau[n - 1] {
            return a[n - 1];
        }
        let i = tau.partition_point(|&s| s <= t) - 1;
        let u = (t - tau[i]) / (tau[i + 1] - tau[i]);
        a[i] * (1.0 - u) + a[i + 1] * u
    };
    for &t in times {
        if !tau.iter().any(|&s| s == t) {
            pts.push((t, interp(t)));
        }
    }
    if !pts.iter().any(|p| p.0 == 0.0) {
        pts.push((0.0, interp(0.0)));
    }
    pts.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut cum = Vec::with_capacity(pts.len());
    let mut acc = C64::new(0.0, 0.0);
    cum.push((pts[0].0, acc));
    for w in pts.windows(2) {
        let h = w[1].0 - w[0].0;
        let (h0, h1) = hat_moments(C64::new(0.0, -lambda * h));
        acc += (C64::new(0.0, -lambda * w[0].0)).exp() * h * (w[0].1 * h0 + w[1].1 * h1);
        cum.push((w[1].0, acc));
    }
    times
        .iter()
        .map(|&t| {
            let i = cum.partition_point(|p| p.0 < t);
            C64::new(0.0, lambda * t).exp() * cum[i].1
        })
        .collect()
}
