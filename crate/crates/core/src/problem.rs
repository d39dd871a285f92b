//! Problem instances, validation, compatibility, parameter windows and lifespan.

use crate::data::{DataHandle, Forcing};
use crate::error::Issue;
use crate::transforms::{halfline_fourier, temporal_transform, QuadratureConfig};
use crate::{Error, Result, C64};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    pub m: usize,
    /// Time horizon `T`.
    pub t_max: f64,
    pub s: f64,
    pub u0: DataHandle,
    /// Boundary data `g_0, ..., g_{j-1}`.
    pub g: Vec<DataHandle>,
    pub f: Forcing,
}

#[derive(Debug, Clone)]
pub struct ValidatedSpec {
    pub spec: ProblemSpec,
    pub j: usize,
    pub warnings: Vec<String>,
}

impl std::ops::Deref for ValidatedSpec {
    type Target = ProblemSpec;
    fn deref(&self) -> &ProblemSpec {
        &self.spec
    }
}

/// Checks the structural invariants; `nonlinear` additionally requires `0 < T < 1/2`.
pub fn validate_spec(spec: &ProblemSpec, nonlinear: bool) -> Result<ValidatedSpec> {
    let mut issues = Vec::new();
    let mut push = |m: String| issues.push(Issue { line: None, message: m });
    if spec.m % 2 == 0 || spec.m < 3 {
        push(format!("m must be odd and at least 3 (got {})", spec.m));
    }
    let j = spec.m.saturating_sub(1) / 2;
    if spec.m % 2 == 1 && spec.g.len() != j {
        push(format!("expected {j} boundary data for m = {}, got {}", spec.m, spec.g.len()));
    }
    if !(spec.t_max > 0.0) || !spec.t_max.is_finite() {
        push(format!("T must be positive (got {})", spec.t_max));
    } else if nonlinear && spec.t_max >= 0.5 {
        push(format!("T must lie in (0, 1/2) for the nonlinear problem (got {})", spec.t_max));
    }
    if !spec.s.is_finite() {
        push("s must be finite".into());
    }
    if !issues.is_empty() {
        return Err(Error::Invalid(issues));
    }
    let mut warnings = Vec::new();
    for l in 0..j {
        if (spec.s - (l as f64 + 0.5)).abs() < 1e-12 {
            warnings.push(format!("s = {} is an excluded index (l + 1/2 with l = {l}); results not covered by the theory", spec.s));
        }
    }
    if spec.s <= 0.25 - j as f64 {
        warnings.push(format!("s = {} is below the admissible range s > -j + 1/4", spec.s));
    }
    Ok(ValidatedSpec { spec: spec.clone(), j, warnings })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Compatibility {
    pub ell: usize,
    pub required: bool,
    pub satisfied: bool,
    pub residual: f64,
}

pub const COMPAT_TOL: f64 = 1e-10;

/// Corner conditions `d_x^l u0(0) = g_l(0)`, required when `s > l + 1/2`.
pub fn compatibility_check(spec: &ValidatedSpec) -> Result<Vec<Compatibility>> {
    (0..spec.j)
        .map(|l| {
            let residual = (spec.u0.derivative(l, 0.0)? - spec.g[l].eval(0.0)).abs();
            Ok(Compatibility { ell: l, required: spec.s > l as f64 + 0.5, satisfied: residual <= COMPAT_TOL, residual })
        })
        .collect()
}

fn j_of(m: usize) -> Result<f64> {
    if m % 2 == 0 || m < 3 {
        return Err(Error::Domain(format!("m must be odd and at least 3 (got {m})")));
    }
    Ok(((m - 1) / 2) as f64)
}

/// Three-branch choice of `beta(s, m)`.
pub fn beta(s: f64, m: usize) -> Result<f64> {
    let j = j_of(m)?;
    let mf = m as f64;
    if s <= -j + 0.25 {
        return Err(Error::Domain(format!("s = {s} is outside the admissible range s > {}", -j + 0.25)));
    }
    let b = if s >= 0.0 {
        (1.0 / (12.0 * mf)).min((mf - s) / (3.0 * mf))
    } else if s > -0.5 {
        ((j - 0.75) / (32.0 * mf)).min((s + 0.5) / (2.0 * mf))
    } else {
        (s + j - 0.25) / (32.0 * mf)
    };
    if !(b > 0.0) {
        return Err(Error::Domain(format!("beta({s}, {m}) = {b} is not positive")));
    }
    Ok(b)
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct ParameterWindow {
    pub s: f64,
    pub beta: f64,
    pub b: f64,
    pub b1: f64,
    pub alpha: f64,
    pub alpha1: f64,
}

impl ParameterWindow {
    /// `1/2 - beta <= b < b1 < 1/2 < alpha < alpha1 <= 1/2 + beta`.
    pub fn is_ordered(&self) -> bool {
        0.5 - self.beta <= self.b
            && self.b < self.b1
            && self.b1 < 0.5
            && 0.5 < self.alpha
            && self.alpha < self.alpha1
            && self.alpha1 <= 0.5 + self.beta
    }
}

pub fn parameter_window(s: f64, m: usize) -> Result<ParameterWindow> {
    let beta = beta(s, m)?;
    Ok(ParameterWindow { s, beta, b: 0.5 - beta, b1: 0.5 - beta / 2.0, alpha: 0.5 + beta / 2.0, alpha1: 0.5 + beta })
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct Lifespan {
    /// `T*` (may underflow to 0 for large data).
    pub value: f64,
    /// `log10 T*`, always finite.
    pub log10: f64,
}

/// `T* = (1/2)(1 + 64 c2^2 N)^{-2/beta}` for data norm `N`.
pub fn lifespan(s: f64, m: usize, data_norm: f64, c2: f64) -> Result<Lifespan> {
    if !(data_norm >= 0.0) {
        return Err(Error::Domain(format!("data norm must be non-negative, got {data_norm}")));
    }
    if !(c2 > 0.0) {
        return Err(Error::Domain(format!("c2 must be positive, got {c2}")));
    }
    let b = beta(s, m)?;
    let ln = -std::f64::consts::LN_2 - (2.0 / b) * (64.0 * c2 * c2 * data_norm).ln_1p();
    Ok(Lifespan { value: ln.exp(), log10: ln / std::f64::consts::LN_10 })
}

const NORM_RADIUS: f64 = 200.0;
const NORM_POINTS: usize = 4096;

fn weighted_l2(weight_exp: f64, transform: impl Fn(f64) -> Result<C64> + Sync) -> Result<f64> {
    let h = 2.0 * NORM_RADIUS / (NORM_POINTS - 1) as f64;
    let terms: Vec<f64> = (0..NORM_POINTS)
        .into_par_iter()
        .map(|i| {
            let xi = -NORM_RADIUS + i as f64 * h;
            let w = if i == 0 || i == NORM_POINTS - 1 { 0.5 } else { 1.0 };
            Ok(w * (1.0 + xi.abs()).powf(2.0 * weight_exp) * transform(xi)?.norm_sqr())
        })
        .collect::<Result<_>>()?;
    Ok((terms.iter().sum::<f64>() * h).sqrt())
}

/// Discrete `H^s(0, inf)` norm of `u0`.
pub fn sobolev_norm_space(u: &DataHandle, s: f64, q: &QuadratureConfig) -> Result<f64> {
    weighted_l2(s, |xi| halfline_fourier(u, C64::new(xi, 0.0), q))
}

/// Discrete `H^r(0, T)` norm of `g` (extended by zero).
pub fn sobolev_norm_time(g: &DataHandle, r: f64, t_max: f64, q: &QuadratureConfig) -> Result<f64> {
    weighted_l2(r, |tau| temporal_transform(g, C64::new(tau, 0.0), t_max, q))
}

/// `||u0||_{H^s} + sum_l ||g_l||_{H^{(s+j-l)/m}(0,T)}`.
pub fn data_norm(spec: &ValidatedSpec, q: &QuadratureConfig) -> Result<f64> {
    let mut total = sobolev_norm_space(&spec.u0, spec.s, q)?;
    for (l, g) in spec.g.iter().enumerate() {
        let r = (spec.s + spec.j as f64 - l as f64) / spec.m as f64;
        total += sobolev_norm_time(g, r, spec.t_max, q)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(m: usize, nb: usize) -> ProblemSpec {
        ProblemSpec {
            m,
            t_max: 0.25,
            s: 0.0,
            u0: DataHandle::parse("builtin:exp").unwrap(),
            g: vec![DataHandle::parse("builtin:affine(a=1, b=1)").unwrap(); nb],
            f: Forcing::Zero,
        }
    }

    #[test]
    fn validation_messages() {
        assert_eq!(validate_spec(&spec(3, 1), true).unwrap().j, 1);
        let e = validate_spec(&spec(5, 1), true).unwrap_err().to_string();
        assert!(e.contains("expected 2 boundary data"), "{e}");
        let e = validate_spec(&spec(4, 1), true).unwrap_err().to_string();
        assert!(e.contains("m must be odd"), "{e}");
        let mut s = spec(3, 1);
        s.t_max = 0.7;
        assert!(validate_spec(&s, true).is_err());
        assert!(validate_spec(&s, false).is_ok());
        s.s = 0.5;
        assert_eq!(validate_spec(&s, false).unwrap().warnings.len(), 1);
    }

    #[test]
    fn compatibility() {
        let mut s = spec(3, 1);
        s.s = 1.0;
        let c = compatibility_check(&validate_spec(&s, false).unwrap()).unwrap();
        assert!(c[0].required && c[0].satisfied && c[0].residual == 0.0);
        s.g[0] = DataHandle::parse("builtin:affine(a=0, b=1)").unwrap();
        let c = compatibility_check(&validate_spec(&s, false).unwrap()).unwrap();
        assert!(c[0].required && !c[0].satisfied && (c[0].residual - 1.0).abs() < 1e-15);
        s.s = 0.0;
        let c = compatibility_check(&validate_spec(&s, false).unwrap()).unwrap();
        assert!(!c[0].required);
    }

    #[test]
    fn beta_branches() {
        assert!((beta(0.0, 3).unwrap() - 1.0 / 36.0).abs() < 1e-16);
        assert!((beta(-0.25, 3).unwrap() - 1.0 / 384.0).abs() < 1e-16);
        assert!(beta(-0.75, 3).is_err());
        let w = parameter_window(0.0, 3).unwrap();
        assert!((w.b - 17.0 / 36.0).abs() < 1e-15 && (w.b1 - 35.0 / 72.0).abs() < 1e-15);
        assert!((w.alpha - 37.0 / 72.0).abs() < 1e-15 && (w.alpha1 - 19.0 / 36.0).abs() < 1e-15);
        assert!(w.is_ordered());
    }

    #[test]
    fn lifespan_shape() {
        assert_eq!(lifespan(0.0, 3, 0.0, 1.0).unwrap().value, 0.5);
        let a = lifespan(0.0, 3, 1.0, 1.0).unwrap();
        let b = lifespan(0.0, 3, 0.1, 1.0).unwrap();
        assert!(a.log10 < b.log10);
        let expect = -(2f64).log10() - 72.0 * 65f64.log10();
        assert!((a.log10 - expect).abs() < 1e-12);
    }

    #[test]
    fn norms_are_finite() {
        let v = validate_spec(&spec(3, 1), false).unwrap();
        let n = data_norm(&v, &QuadratureConfig::default()).unwrap();
        assert!(n.is_finite() && n > 0.0);
        // ||e^{-x}||_{L^2} in this normalization: int |1/(1+i xi)|^2 = pi (up to truncation)
        let l2 = sobolev_norm_space(&v.u0, 0.0, &QuadratureConfig::default()).unwrap();
        assert!((l2 * l2 - std::f64::consts::PI).abs() < 1e-2);
    }
}
