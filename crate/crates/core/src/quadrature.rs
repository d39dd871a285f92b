//! Gauss-Legendre rules, adaptive Gauss-Kronrod integration and Filon moments.

use crate::{Error, Result, C64};
use std::collections::{BinaryHeap, HashMap};
use std::sync::{Mutex, OnceLock};

/// Nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn compute_gauss_legendre(n: usize) -> Rule {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

/// Cached n-point Gauss-Legendre rule.
pub fn gauss_legendre(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let mut map = CACHE.get_or_init(|| Mutex::new(HashMap::new())).lock().unwrap();
    map.entry(n).or_insert_with(|| Box::leak(Box::new(compute_gauss_legendre(n))))
}

/// Composite Gauss-Legendre nodes and weights over consecutive panel edges.
pub fn composite_nodes(edges: &[f64], order: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = gauss_legendre(order);
    let mut x = Vec::with_capacity(edges.len() * order);
    let mut w = Vec::with_capacity(edges.len() * order);
    for e in edges.windows(2) {
        let (c, h) = (0.5 * (e[0] + e[1]), 0.5 * (e[1] - e[0]));
        for (s, ws) in rule.nodes.iter().zip(&rule.weights) {
            x.push(c + h * s);
            w.push(h * ws);
        }
    }
    (x, w)
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        k += WGK[i] * s;
        if i % 2 == 1 {
            g += WG[i / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

#[derive(Debug, Clone, Copy)]
pub struct AdaptiveOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for AdaptiveOptions {
    fn default() -> Self {
        AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-10, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
}

struct Piece {
    a: f64,
    b: f64,
    v: f64,
    e: f64,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.e == o.e
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.e.total_cmp(&o.e)
    }
}

/// Globally adaptive G7-K15 integration of `f` over `[a, b]`, pre-split at `breaks`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64], opt: AdaptiveOptions) -> Result<Estimate> {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().cloned().filter(|&x| x > a && x < b).collect();
    inner.sort_by(f64::total_cmp);
    pts.extend(inner);
    pts.push(b);
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in pts.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (v, e) = gk15(&f, w[0], w[1]);
        total += v;
        err += e;
        heap.push(Piece { a: w[0], b: w[1], v, e });
    }
    while err > opt.abs_tol.max(opt.rel_tol * total.abs()) {
        if heap.len() >= opt.max_intervals {
            return Err(Error::accuracy(
                "adaptive quadrature",
                format!("error estimate {err:e} above tolerance after {} intervals", heap.len()),
            ));
        }
        let p = heap.pop().unwrap();
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, mid);
        let (v2, e2) = gk15(&f, mid, p.b);
        total += v1 + v2 - p.v;
        err += e1 + e2 - p.e;
        heap.push(Piece { a: p.a, b: mid, v: v1, e: e1 });
        heap.push(Piece { a: mid, b: p.b, v: v2, e: e2 });
    }
    if !total.is_finite() {
        return Err(Error::Numerical("non-finite integrand".into()));
    }
    // recompute to shed accumulated rounding
    let value = heap.iter().map(|p| p.v).sum();
    let error = heap.iter().map(|p| p.e).sum();
    Ok(Estimate { value, error })
}

/// `int_a^infinity f` for algebraically decaying `f`: plain on `[a, a + scale]`, then
/// `x = a + scale e^s`, `s in [0, 90]`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, scale: f64, breaks: &[f64], opt: AdaptiveOptions) -> Result<Estimate> {
    let near = integrate(&f, a, a + scale, breaks, opt)?;
    let sb: Vec<f64> = breaks
        .iter()
        .filter(|&&x| x > a + scale)
        .map(|&x| ((x - a) / scale).ln())
        .collect();
    let far = integrate(|s: f64| {
        let e = scale * s.exp();
        f(a + e) * e
    }, 0.0, 90.0, &sb, opt)?;
    Ok(Estimate { value: near.value + far.value, error: near.error + far.error })
}

/// `int_R f` for algebraically decaying `f`, split at `breaks` (which also set the scale).
pub fn integrate_real_line<F: Fn(f64) -> f64>(f: F, breaks: &[f64], opt: AdaptiveOptions) -> Result<Estimate> {
    let lo = breaks.iter().cloned().fold(0.0, f64::min);
    let hi = breaks.iter().cloned().fold(0.0, f64::max);
    let scale = 1.0f64.max(0.25 * (hi - lo));
    let mid = integrate(&f, lo, hi, breaks, opt)?;
    let right = integrate_to_infinity(&f, hi, scale, breaks, opt)?;
    let left = integrate_to_infinity(|x: f64| f(-x), -lo, scale, &breaks.iter().map(|b| -b).collect::<Vec<_>>(), opt)?;
    Ok(Estimate { value: mid.value + right.value + left.value, error: mid.error + right.error + left.error })
}

/// `(int_0^1 e^{a s}(1 - s) ds, int_0^1 e^{a s} s ds)`, the hat-function moments used by
/// linear Filon rules.
pub fn hat_moments(a: C64) -> (C64, C64) {
    if a.norm() < 0.5 {
        // e^{as} series: int s^k = 1/(k+1), int s^{k+1} = 1/(k+2)
        let (mut i0, mut i1) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        let mut term = C64::new(1.0, 0.0);
        for k in 0..24 {
            i0 += term / (k + 1) as f64;
            i1 += term / (k + 2) as f64;
            term = term * a / (k + 1) as f64;
        }
        (i0 - i1, i1)
    } else {
        let ea = a.exp();
        let i0 = (ea - 1.0) / a;
        let i1 = (ea * (a - 1.0) + 1.0) / (a * a);
        (i0 - i1, i1)
    }
}

/// `M_k = int_{-1}^{1} s^k e^{-i w s} ds`, k = 0..n; upward recurrence, valid for `|w| > n`.
pub fn power_moments(w: C64, n: usize) -> Vec<C64> {
    let iw = C64::i() * w;
    let (ep, em) = ((-iw).exp(), iw.exp()); // e^{-iw}, e^{iw}
    let mut out = Vec::with_capacity(n + 1);
    out.push((em - ep) / iw);
    for k in 1..=n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let boundary = (ep - em * sign) / (-iw);
        let prev = out[k - 1];
        out.push(boundary + prev * (k as f64) / iw);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_integrates_polynomials() {
        let r = gauss_legendre(24);
        let s: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(46)).sum();
        assert!((s - 2.0 / 47.0).abs() < 1e-14);
        let r = gauss_legendre(7);
        assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_and_infinite() {
        let v = integrate(|x: f64| x.sqrt(), 0.0, 1.0, &[], AdaptiveOptions::default()).unwrap();
        assert!((v.value - 2.0 / 3.0).abs() < 1e-10);
        let v = integrate_real_line(|x: f64| (1.0 + x.abs()).powi(-3), &[0.0], AdaptiveOptions::default()).unwrap();
        assert!((v.value - 1.0).abs() < 1e-9, "{}", v.value);
    }

    #[test]
    fn moments_match_quadrature() {
        let r = gauss_legendre(64);
        for w in [C64::new(12.0, 0.0), C64::new(20.0, -3.0), C64::new(-15.0, -1.0)] {
            let m = power_moments(w, 7);
            for (k, mk) in m.iter().enumerate() {
                let q: C64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(s, ws)| (C64::new(0.0, -1.0) * w * s).exp() * s.powi(k as i32) * ws)
                    .sum();
                assert!((q - mk).norm() < 1e-12 * (1.0 + q.norm()), "k = {k}, w = {w}");
            }
        }
        for a in [C64::new(0.1, -0.2), C64::new(3.0, 5.0)] {
            let (h0, h1) = hat_moments(a);
            let q0: C64 = r.nodes.iter().zip(&r.weights).map(|(s, ws)| {
                let u = 0.5 * (s + 1.0);
                (a * u).exp() * (1.0 - u) * ws * 0.5
            }).sum();
            let q1: C64 = r.nodes.iter().zip(&r.weights).map(|(s, ws)| {
                let u = 0.5 * (s + 1.0);
                (a * u).exp() * u * ws * 0.5
            }).sum();
            assert!((h0 - q0).norm() < 1e-13 && (h1 - q1).norm() < 1e-13);
        }
    }
}
