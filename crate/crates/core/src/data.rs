//! Data handles: analytic builtins with exact derivatives, and sampled grids.

use crate::{Error, Result};
use std::collections::BTreeMap;
use std::fmt;

/// Names accepted after `builtin:`, with their parameters and defaults.
pub const CATALOG: &[(&str, &[(&str, f64)])] = &[
    ("zero", &[]),
    ("const", &[("value", 1.0)]),
    ("affine", &[("a", 0.0), ("b", 1.0)]),
    ("exp", &[("amp", 1.0), ("rate", 1.0)]),
    ("xexp", &[("amp", 1.0), ("rate", 1.0)]),
    ("polyexp", &[("amp", 1.0), ("power", 2.0), ("rate", 1.0)]),
    ("gauss_bump", &[("center", 0.0), ("width", 1.0), ("amp", 1.0)]),
    ("bump", &[("center", 0.0), ("halfwidth", 1.0), ("amp", 1.0)]),
    ("sin2", &[("period", 1.0), ("amp", 1.0)]),
];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Zero,
    Const(f64),
    Affine(f64, f64),
    PolyExp { amp: f64, n: u32, rate: f64 },
    Gauss { c: f64, w: f64, amp: f64 },
    Bump { c: f64, h: f64, amp: f64 },
    Sin2 { period: f64, amp: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Builtin {
    pub name: String,
    pub params: BTreeMap<String, f64>,
    shape: Shape,
}

impl Builtin {
    pub fn new(name: &str, given: &[(&str, f64)]) -> Result<Builtin> {
        let (_, defaults) = CATALOG.iter().find(|(n, _)| *n == name).ok_or_else(|| {
            let names: Vec<&str> = CATALOG.iter().map(|(n, _)| *n).collect();
            Error::invalid(format!("unknown builtin '{name}'; catalog: {}", names.join(", ")))
        })?;
        let mut params: BTreeMap<String, f64> = defaults.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        for (k, v) in given {
            if !params.contains_key(*k) {
                return Err(Error::invalid(format!("builtin '{name}' has no parameter '{k}'")));
            }
            if !v.is_finite() {
                return Err(Error::invalid(format!("parameter '{k}' of '{name}' is not finite")));
            }
            params.insert(k.to_string(), *v);
        }
        let p = |k: &str| params[k];
        let positive = |k: &str| -> Result<f64> {
            if params[k] > 0.0 {
                Ok(params[k])
            } else {
                Err(Error::invalid(format!("parameter '{k}' of '{name}' must be positive")))
            }
        };
        let shape = match name {
            "zero" => Shape::Zero,
            "const" => Shape::Const(p("value")),
            "affine" => Shape::Affine(p("a"), p("b")),
            "exp" => Shape::PolyExp { amp: p("amp"), n: 0, rate: positive("rate")? },
            "xexp" => Shape::PolyExp { amp: p("amp"), n: 1, rate: positive("rate")? },
            "polyexp" => {
                let n = p("power");
                if n < 0.0 || n.fract() != 0.0 || n > 20.0 {
                    return Err(Error::invalid("polyexp power must be an integer in 0..=20"));
                }
                Shape::PolyExp { amp: p("amp"), n: n as u32, rate: positive("rate")? }
            }
            "gauss_bump" => Shape::Gauss { c: p("center"), w: positive("width")?, amp: p("amp") },
            "bump" => Shape::Bump { c: p("center"), h: positive("halfwidth")?, amp: p("amp") },
            "sin2" => Shape::Sin2 { period: positive("period")?, amp: p("amp") },
            _ => unreachable!(),
        };
        Ok(Builtin { name: name.to_string(), params, shape })
    }

    fn derivative(&self, k: usize, x: f64) -> f64 {
        match self.shape {
            Shape::Zero => 0.0,
            Shape::Const(v) => if k == 0 { v } else { 0.0 },
            Shape::Affine(a, b) => match k {
                0 => a + b * x,
                1 => b,
                _ => 0.0,
            },
            Shape::PolyExp { amp, n, rate } => {
                let e = (-rate * x).exp();
                let mut s = 0.0;
                let mut binom = 1.0; // C(k, i)
                let mut falling = 1.0; // n!/(n-i)!
                for i in 0..=k.min(n as usize) {
                    s += binom * falling * x.powi(n as i32 - i as i32) * (-rate).powi((k - i) as i32);
                    binom *= (k - i) as f64 / (i + 1) as f64;
                    falling *= (n as usize - i) as f64;
                }
                amp * s * e
            }
            Shape::Gauss { c, w, amp } => {
                let z = (x - c) / w;
                let (mut h0, mut h1) = (1.0, z);
                let he = if k == 0 {
                    1.0
                } else {
                    for i in 1..k {
                        let h2 = z * h1 - i as f64 * h0;
                        h0 = h1;
                        h1 = h2;
                    }
                    h1
                };
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                amp * sign * he * (-0.5 * z * z).exp() / w.powi(k as i32)
            }
            Shape::Bump { c, h, amp } => {
                let s = (x - c) / h;
                if s.abs() >= 1.0 {
                    return 0.0;
                }
                let jet = bump_jet(s, k);
                let mut fact = 1.0;
                for i in 1..=k {
                    fact *= i as f64;
                }
                amp * jet[k] * fact / h.powi(k as i32)
            }
            Shape::Sin2 { period, amp } => {
                let w = 2.0 * std::f64::consts::PI / period;
                if k == 0 {
                    amp * 0.5 * (1.0 - (w * x).cos())
                } else {
                    -0.5 * amp * w.powi(k as i32) * (w * x + k as f64 * std::f64::consts::FRAC_PI_2).cos()
                }
            }
        }
    }

    fn resolution(&self) -> f64 {
        match self.shape {
            Shape::PolyExp { rate, n, .. } => 0.25 / rate / (1.0 + n as f64 / 8.0),
            Shape::Gauss { w, .. } => 0.25 * w,
            Shape::Bump { h, .. } => h / 12.0,
            Shape::Sin2 { period, .. } => period / 16.0,
            _ => 1.0,
        }
    }

    fn extent(&self, tol: f64) -> Option<f64> {
        match self.shape {
            Shape::Zero => Some(0.0),
            Shape::PolyExp { n, rate, .. } => {
                let peak_x = n as f64 / rate;
                let f = |x: f64| x.powi(n as i32) * (-rate * x).exp();
                let peak = f(peak_x).max(1e-300);
                let mut x = peak_x + 1.0 / rate;
                while f(x) > tol * peak {
                    x += 0.5 / rate;
                }
                Some(x)
            }
            Shape::Gauss { c, w, .. } => Some((c + w * (2.0 * (1.0 / tol).ln()).sqrt()).max(0.0)),
            Shape::Bump { c, h, .. } => Some((c + h).max(0.0)),
            _ => None,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self.shape {
            Shape::Bump { c, h, .. } => vec![c - h, c + h],
            _ => vec![],
        }
    }
}

/// Taylor coefficients of `exp(-1/(1-s^2))` about `s0`, up to order `k`.
fn bump_jet(s0: f64, k: usize) -> Vec<f64> {
    let n = k + 1;
    let mut q = vec![0.0; n];
    q[0] = 1.0 - s0 * s0;
    if n > 1 {
        q[1] = -2.0 * s0;
    }
    if n > 2 {
        q[2] = -1.0;
    }
    let mut r = vec![0.0; n];
    r[0] = 1.0 / q[0];
    for i in 1..n {
        let acc: f64 = (1..=i.min(2)).map(|l| q[l] * r[i - l]).sum();
        r[i] = -acc / q[0];
    }
    let a: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut e = vec![0.0; n];
    e[0] = a[0].exp();
    for i in 1..n {
        e[i] = (1..=i).map(|l| l as f64 * a[l] * e[i - l]).sum::<f64>() / i as f64;
    }
    e
}

/// Samples with linear (order 1) or natural cubic spline (order 3) interpolation; zero outside the samples.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledGrid {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub order: usize,
    m2: Vec<f64>,
}

impl SampledGrid {
    pub fn new(x: Vec<f64>, v: Vec<f64>, order: usize) -> Result<SampledGrid> {
        if x.len() != v.len() || x.len() < 2 {
            return Err(Error::invalid("sampled grid needs at least two (x, value) pairs"));
        }
        if x.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("sampled grid abscissae must be strictly increasing"));
        }
        if order != 1 && order != 3 {
            return Err(Error::invalid("sampled grid interpolation order must be 1 or 3"));
        }
        let n = x.len();
        let mut m2 = vec![0.0; n];
        if order == 3 && n > 2 {
            // natural spline second derivatives by the tridiagonal (Thomas) sweep
            let mut c = vec![0.0; n];
            let mut d = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = x[i] - x[i - 1];
                let h1 = x[i + 1] - x[i];
                let rhs = 6.0 * ((v[i + 1] - v[i]) / h1 - (v[i] - v[i - 1]) / h0);
                let diag = 2.0 * (h0 + h1) - h0 * c[i - 1];
                c[i] = h1 / diag;
                d[i] = (rhs - h0 * d[i - 1]) / diag;
            }
            for i in (1..n - 1).rev() {
                m2[i] = d[i] - c[i] * m2[i + 1];
            }
        }
        Ok(SampledGrid { x, v, order, m2 })
    }

    fn interval(&self, x: f64) -> Option<usize> {
        let n = self.x.len();
        if x < self.x[0] || x > self.x[n - 1] {
            return None;
        }
        let i = self.x.partition_point(|&a| a <= x);
        Some(i.clamp(1, n - 1) - 1)
    }

    /// Polynomial coefficients `c0 + c1 u + c2 u^2 + c3 u^3` of the interpolant on interval `i`,
    /// in the local variable `u = x - x_i`.
    pub fn piece(&self, i: usize) -> [f64; 4] {
        let h = self.x[i + 1] - self.x[i];
        let (y0, y1) = (self.v[i], self.v[i + 1]);
        if self.order == 1 {
            return [y0, (y1 - y0) / h, 0.0, 0.0];
        }
        let (a, b) = (self.m2[i], self.m2[i + 1]);
        [y0, (y1 - y0) / h - h * (2.0 * a + b) / 6.0, a / 2.0, (b - a) / (6.0 * h)]
    }

    fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        if k > self.order {
            return Err(Error::Domain(format!(
                "derivative of order {k} requested from sampled data interpolated at order {}",
                self.order
            )));
        }
        let Some(i) = self.interval(x) else { return Ok(0.0) };
        let c = self.piece(i);
        let u = x - self.x[i];
        Ok(match k {
            0 => c[0] + u * (c[1] + u * (c[2] + u * c[3])),
            1 => c[1] + u * (2.0 * c[2] + 3.0 * u * c[3]),
            2 => 2.0 * c[2] + 6.0 * u * c[3],
            _ => 6.0 * c[3],
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataHandle {
    Builtin(Builtin),
    Sampled(SampledGrid),
}

impl DataHandle {
    pub fn builtin(name: &str, params: &[(&str, f64)]) -> Result<DataHandle> {
        Ok(DataHandle::Builtin(Builtin::new(name, params)?))
    }

    pub fn zero() -> DataHandle {
        DataHandle::builtin("zero", &[]).unwrap()
    }

    pub fn sampled(x: Vec<f64>, v: Vec<f64>, order: usize) -> Result<DataHandle> {
        Ok(DataHandle::Sampled(SampledGrid::new(x, v, order)?))
    }

    pub fn is_zero(&self) -> bool {
        match self {
            DataHandle::Builtin(b) => b.shape == Shape::Zero,
            DataHandle::Sampled(s) => s.v.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.derivative(0, x).unwrap()
    }

    /// `d^k/dx^k` at `x`; sampled data refuse orders above their interpolation order.
    pub fn derivative(&self, k: usize, x: f64) -> Result<f64> {
        match self {
            DataHandle::Builtin(b) => Ok(b.derivative(k, x)),
            DataHandle::Sampled(s) => s.derivative(k, x),
        }
    }

    /// Highest derivative order available, `None` when unlimited.
    pub fn max_derivative(&self) -> Option<usize> {
        match self {
            DataHandle::Builtin(_) => None,
            DataHandle::Sampled(s) => Some(s.order),
        }
    }

    /// Panel width over which a degree-7 polynomial resolves the data.
    pub fn resolution(&self) -> f64 {
        match self {
            DataHandle::Builtin(b) => b.resolution(),
            DataHandle::Sampled(s) => s.x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min),
        }
    }

    /// Point beyond which `|u| < tol * sup|u|`; `None` for data that do not decay.
    pub fn extent(&self, tol: f64) -> Option<f64> {
        match self {
            DataHandle::Builtin(b) => b.extent(tol),
            DataHandle::Sampled(s) => Some(*s.x.last().unwrap()),
        }
    }

    /// Interval outside which `|u| < tol * sup|u|` on the whole line; `None` if the data do
    /// not decay in both directions.
    pub fn support(&self, tol: f64) -> Option<(f64, f64)> {
        match self {
            DataHandle::Builtin(b) => match b.shape {
                Shape::Zero => Some((0.0, 0.0)),
                Shape::Gauss { c, w, .. } => {
                    let d = w * (2.0 * (1.0 / tol).ln()).sqrt();
                    Some((c - d, c + d))
                }
                Shape::Bump { c, h, .. } => Some((c - h, c + h)),
                _ => None,
            },
            DataHandle::Sampled(s) => Some((s.x[0], *s.x.last().unwrap())),
        }
    }

    /// Points where the data lose smoothness (panel edges must sit there).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            DataHandle::Builtin(b) => b.breakpoints(),
            DataHandle::Sampled(s) => s.x.clone(),
        }
    }

    /// Exact local polynomial on `[a, b]` when the data are piecewise polynomial there,
    /// as coefficients in `u = x - a`.
    pub fn exact_piece(&self, a: f64, b: f64) -> Option<[f64; 4]> {
        match self {
            DataHandle::Builtin(bi) => match bi.shape {
                Shape::Zero => Some([0.0; 4]),
                Shape::Const(v) => Some([v, 0.0, 0.0, 0.0]),
                Shape::Affine(p, q) => Some([p + q * a, q, 0.0, 0.0]),
                _ => None,
            },
            DataHandle::Sampled(s) => {
                let n = s.x.len();
                if b <= s.x[0] || a >= s.x[n - 1] {
                    return Some([0.0; 4]);
                }
                let i = s.interval(0.5 * (a + b))?;
                if a < s.x[i] - 1e-14 * (1.0 + a.abs()) || b > s.x[i + 1] + 1e-14 * (1.0 + b.abs()) {
                    return None;
                }
                let c = s.piece(i);
                // shift from u = x - x_i to u' = x - a
                let d = a - s.x[i];
                Some([
                    c[0] + d * (c[1] + d * (c[2] + d * c[3])),
                    c[1] + d * (2.0 * c[2] + 3.0 * d * c[3]),
                    c[2] + 3.0 * d * c[3],
                    c[3],
                ])
            }
        }
    }

    /// Parses `builtin:name(k=v, ...)` or `sampled:order=3;x,v;x,v;...`.
    pub fn parse(text: &str) -> Result<DataHandle> {
        let t = text.trim();
        if let Some(rest) = t.strip_prefix("builtin:") {
            let (name, args) = match rest.find('(') {
                Some(i) => {
                    let inner = rest[i + 1..]
                        .strip_suffix(')')
                        .ok_or_else(|| Error::invalid(format!("missing ')' in '{t}'")))?;
                    (rest[..i].trim(), inner)
                }
                None => (rest.trim(), ""),
            };
            let mut params = Vec::new();
            for kv in args.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::invalid(format!("expected key=value, got '{kv}'")))?;
                let v: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| Error::invalid(format!("malformed number '{}' in '{t}'", v.trim())))?;
                params.push((k.trim().to_string(), v));
            }
            let refs: Vec<(&str, f64)> = params.iter().map(|(k, v)| (k.as_str(), *v)).collect();
            return DataHandle::builtin(name, &refs);
        }
        if let Some(rest) = t.strip_prefix("sampled:") {
            let mut parts = rest.split(';').map(str::trim);
            let order = parts
                .next()
                .and_then(|p| p.strip_prefix("order="))
                .and_then(|o| o.trim().parse::<usize>().ok())
                .ok_or_else(|| Error::invalid("sampled data must start with 'order=<1|3>'"))?;
            let (mut xs, mut vs) = (Vec::new(), Vec::new());
            for p in parts.filter(|p| !p.is_empty()) {
                let (a, b) = p.split_once(',').ok_or_else(|| Error::invalid(format!("expected 'x,v', got '{p}'")))?;
                let bad = || Error::invalid(format!("malformed sample '{p}'"));
                xs.push(a.trim().parse::<f64>().map_err(|_| bad())?);
                vs.push(b.trim().parse::<f64>().map_err(|_| bad())?);
            }
            return DataHandle::sampled(xs, vs, order);
        }
        Err(Error::invalid(format!("data handle must start with 'builtin:' or 'sampled:', got '{t}'")))
    }
}

impl fmt::Display for DataHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataHandle::Builtin(b) => {
                let args: Vec<String> = b.params.iter().map(|(k, v)| format!("{k}={v:?}")).collect();
                write!(f, "builtin:{}({})", b.name, args.join(", "))
            }
            DataHandle::Sampled(s) => {
                write!(f, "sampled:order={}", s.order)?;
                for (x, v) in s.x.iter().zip(&s.v) {
                    write!(f, ";{x:?},{v:?}")?;
                }
                Ok(())
            }
        }
    }
}

/// Space-time forcing `f(x, t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Forcing {
    Zero,
    /// `space(x) * time(t)`
    Separable { space: DataHandle, time: DataHandle },
    /// Values on a uniform x-grid (starting at 0) times an increasing t-grid, bilinear in between,
    /// zero for x beyond the grid.
    Sampled { x: Vec<f64>, t: Vec<f64>, values: Vec<f64> },
}

impl Forcing {
    pub fn is_zero(&self) -> bool {
        match self {
            Forcing::Zero => true,
            Forcing::Separable { space, time } => space.is_zero() || time.is_zero(),
            Forcing::Sampled { values, .. } => values.iter().all(|&v| v == 0.0),
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        match self {
            Forcing::Zero => 0.0,
            Forcing::Separable { space, time } => space.eval(x) * time.eval(t),
            Forcing::Sampled { x: xs, t: ts, values } => {
                let nx = xs.len();
                if x < xs[0] || x > xs[nx - 1] {
                    return 0.0;
                }
                let (i, wx) = locate(xs, x);
                let (k, wt) = locate(ts, t.clamp(ts[0], ts[ts.len() - 1]));
                let at = |kk: usize, ii: usize| values[kk * nx + ii];
                let lo = at(k, i) * (1.0 - wx) + at(k, i + 1) * wx;
                let hi = at(k + 1, i) * (1.0 - wx) + at(k + 1, i + 1) * wx;
                lo * (1.0 - wt) + hi * wt
            }
        }
    }

    pub fn parse(text: &str) -> Result<Forcing> {
        let t = text.trim();
        if t == "zero" || t == "none" {
            return Ok(Forcing::Zero);
        }
        let (a, b) = t
            .split_once(" * ")
            .ok_or_else(|| Error::invalid(format!("forcing must be 'zero' or '<space handle> * <time handle>', got '{t}'")))?;
        Ok(Forcing::Separable { space: DataHandle::parse(a)?, time: DataHandle::parse(b)? })
    }
}

fn locate(grid: &[f64], x: f64) -> (usize, f64) {
    let n = grid.len();
    if n == 1 {
        return (0, 0.0);
    }
    let i = (grid.partition_point(|&g| g <= x).clamp(1, n - 1)) - 1;
    (i, (x - grid[i]) / (grid[i + 1] - grid[i]))
}

impl fmt::Display for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Forcing::Zero => write!(f, "zero"),
            Forcing::Separable { space, time } => write!(f, "{space} * {time}"),
            Forcing::Sampled { .. } => write!(f, "sampled-forcing"),
        }
    }
}
