//! Elimination of the unknown boundary transforms from the rotated global relations.
//!
//! With `X_k = (i xi)^k g~_{2j-k}` (k = 0..=j, unknown) and `K_k = (i xi)^k g~_{2j-k}`
//! (k = j+1..=2j, given), the relation at `alpha_n xi` reads
//! `(-1)^{j+1} sum_k alpha_n^k X_k = -R_n - (-1)^{j+1} sum_k alpha_n^k K_k`,
//! where `R_n = u0^(alpha_n xi) + F(alpha_n xi, t)`. The powers of `xi` factor out.

use crate::contour::rotation_numbers;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Known contributions to row `n`: the transforms at `alpha xi` plus the given boundary
/// terms `alpha^{2j-l} (i xi)^{2j-l} g~_l` (l = 0..j-1), each with its coefficient.
#[derive(Debug, Clone)]
pub struct RhsTemplate {
    pub alpha: C64,
    pub data_coefficient: f64,
    pub boundary: Vec<(usize, C64)>,
}

#[derive(Debug, Clone)]
pub struct EliminationSystem {
    pub m: usize,
    pub j: usize,
    pub p: usize,
    pub alphas: Vec<C64>,
    /// `M[n][k] = (-1)^{j+1} alpha_n^k` multiplying `X_k`.
    pub matrix: DMatrix<C64>,
    pub rhs_templates: Vec<RhsTemplate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UtmConstants {
    pub m: usize,
    pub j: usize,
    /// `c[p-1][n-1] = C_{p,n}`.
    pub c: Vec<Vec<C64>>,
    /// `cprime[p-1][l] = C'_{p,l}`.
    pub cprime: Vec<Vec<C64>>,
    /// 2-norm condition number of each sector's system.
    pub condition: Vec<f64>,
}

fn sgn(j: usize) -> f64 {
    if (j + 1) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

pub fn assemble_system(m: usize, p: usize) -> Result<EliminationSystem> {
    let alphas = rotation_numbers(m, p)?;
    let j = (m - 1) / 2;
    let s = sgn(j);
    let matrix = DMatrix::from_fn(j + 1, j + 1, |n, k| alphas[n].powu(k as u32) * s);
    let rhs_templates = alphas
        .iter()
        .map(|&a| RhsTemplate {
            alpha: a,
            data_coefficient: -1.0,
            boundary: (0..j).map(|l| (l, -s * a.powu((2 * j - l) as u32))).collect(),
        })
        .collect();
    Ok(EliminationSystem { m, j, p, alphas, matrix, rhs_templates })
}

fn condition_number(a: &DMatrix<C64>) -> f64 {
    let sv = a.clone().svd(false, false).singular_values;
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn solve_constants(m: usize) -> Result<UtmConstants> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Domain(format!("m must be odd and at least 3, got {m}")));
    }
    let j = (m - 1) / 2;
    let s = sgn(j);
    let mut c = Vec::with_capacity(j);
    let mut cprime = Vec::with_capacity(j);
    let mut condition = Vec::with_capacity(j);
    for p in 1..=j {
        let sys = assemble_system(m, p)?;
        let cond = condition_number(&sys.matrix);
        if !(cond < 1e8) {
            return Err(Error::Numerical(format!(
                "elimination system for m = {m}, p = {p} is ill-conditioned (condition {cond:e})"
            )));
        }
        // c = V^{-T} 1 with V[n][k] = alpha_n^k
        let vt = DMatrix::from_fn(j + 1, j + 1, |k, n| sys.alphas[n].powu(k as u32));
        let ones = DVector::from_element(j + 1, C64::new(1.0, 0.0));
        let cv = vt
            .lu()
            .solve(&ones)
            .ok_or_else(|| Error::Numerical(format!("singular elimination system, m = {m}, p = {p}")))?;
        c.push(cv.iter().map(|&v| -v / (2.0 * PI)).collect());
        cprime.push(
            (0..j)
                .map(|l| {
                    let acc: C64 = (0..=j).map(|n| cv[n] * sys.alphas[n].powu((2 * j - l) as u32)).sum();
                    (C64::new(1.0, 0.0) - acc) * (s / (2.0 * PI))
                })
                .collect(),
        );
        condition.push(cond);
    }
    Ok(UtmConstants { m, j, c, cprime, condition })
}

fn ipow(xi: C64, k: usize) -> C64 {
    (C64::i() * xi).powu(k as u32)
}

/// Solves the xi-dependent rotated system directly for `g~_{2j-k}`, k = 0..=j, given
/// the transforms `r[n]` and the known `g~_l` (l = 0..j-1); returns the boundary
/// integrand `(1/2pi)(-1)^{j+1} sum_{k=0}^{2j} (i xi)^k g~_{2j-k}` and the solve residual.
pub fn direct_boundary_integrand(m: usize, p: usize, xi: C64, r: &[C64], g_known: &[C64]) -> Result<(C64, f64)> {
    let sys = assemble_system(m, p)?;
    let j = sys.j;
    let s = sgn(j);
    let a = DMatrix::from_fn(j + 1, j + 1, |n, k| ipow(sys.alphas[n] * xi, k) * s);
    let rhs = DVector::from_fn(j + 1, |n, _| {
        let known: C64 = (0..j).map(|l| ipow(sys.alphas[n] * xi, 2 * j - l) * g_known[l]).sum();
        -r[n] - known * s
    });
    let sol = a
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular xi-dependent system".into()))?;
    let res = (&a * &sol - &rhs).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut total: C64 = (0..=j).map(|k| ipow(xi, k) * sol[k]).sum();
    total += (0..j).map(|l| ipow(xi, 2 * j - l) * g_known[l]).sum::<C64>();
    Ok((total * (s / (2.0 * PI)), res))
}

/// Integrand of the constants form: `sum_n C_{p,n} r_n + sum_l C'_{p,l} (i xi)^{2j-l} g~_l`.
pub fn constants_integrand(k: &UtmConstants, p: usize, xi: C64, r: &[C64], g_known: &[C64]) -> C64 {
    let j = k.j;
    let a: C64 = (0..=j).map(|n| k.c[p - 1][n] * r[n]).sum();
    let b: C64 = (0..j).map(|l| k.cprime[p - 1][l] * ipow(xi, 2 * j - l) * g_known[l]).sum();
    a + b
}

/// Default sample points: `xi = 1`, `xi = 2 e^{i pi/(2m)}` and points on both rays of every sector.
pub fn default_samples(m: usize) -> Vec<C64> {
    let mut v = vec![C64::new(1.0, 0.0), C64::from_polar(2.0, PI / (2.0 * m as f64))];
    for p in 1..=(m - 1) / 2 {
        let b = crate::contour::sector_boundary(m, p).unwrap();
        for ray in b.rays() {
            v.push(ray.unit() * 0.7);
            v.push(ray.unit() * 1.9);
        }
    }
    v
}

/// Largest mismatch, over samples and random right-hand sides, between the direct solve of
/// the xi-dependent system and the constants form, together with the solve residual.
pub fn residual_check(k: &UtmConstants, samples: &[C64]) -> Result<f64> {
    let m = k.m;
    let j = k.j;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut worst: f64 = 0.0;
    for &xi in samples {
        for p in 1..=j {
            for _ in 0..4 {
                let mut rc = || {
                    C64::from_polar(rng.gen_range(0.5..1.0), rng.gen_range(0.0..2.0 * PI))
                };
                let r: Vec<C64> = (0..=j).map(|_| rc()).collect();
                // scale known data so each (i xi)^{2j-l} g~_l term is O(1)
                let g: Vec<C64> = (0..j).map(|l| rc() / ipow(xi, 2 * j - l)).collect();
                let (direct, res) = direct_boundary_integrand(m, p, xi, &r, &g)?;
                let viac = constants_integrand(k, p, xi, &r, &g);
                worst = worst.max((direct - viac).norm()).max(res);
            }
        }
    }
    Ok(worst)
}

/// Re-derives the constants from the xi-dependent system at `xi` by probing with unit data.
pub fn constants_at(m: usize, xi: C64) -> Result<UtmConstants> {
    let j = (m - 1) / 2;
    let mut c = Vec::new();
    let mut cprime = Vec::new();
    for p in 1..=j {
        let zero_r = vec![C64::new(0.0, 0.0); j + 1];
        let zero_g = vec![C64::new(0.0, 0.0); j];
        let mut row = Vec::new();
        for n in 0..=j {
            let mut r = zero_r.clone();
            r[n] = C64::new(1.0, 0.0);
            row.push(direct_boundary_integrand(m, p, xi, &r, &zero_g)?.0);
        }
        let mut rowp = Vec::new();
        for l in 0..j {
            let mut g = zero_g.clone();
            g[l] = C64::new(1.0, 0.0) / ipow(xi, 2 * j - l);
            rowp.push(direct_boundary_integrand(m, p, xi, &zero_r, &g)?.0);
        }
        c.push(row);
        cprime.push(rowp);
    }
    Ok(UtmConstants { m, j, c, cprime, condition: vec![] })
}

/// Maximum difference between constants re-derived at every pair of sample points.
pub fn xi_independence(m: usize, samples: &[C64]) -> Result<f64> {
    let all: Vec<UtmConstants> = samples.iter().map(|&x| constants_at(m, x)).collect::<Result<_>>()?;
    let mut worst: f64 = 0.0;
    for a in &all {
        for b in &all {
            for p in 0..a.j {
                for (u, v) in a.c[p].iter().zip(&b.c[p]) {
                    worst = worst.max((u - v).norm());
                }
                for (u, v) in a.cprime[p].iter().zip(&b.cprime[p]) {
                    worst = worst.max((u - v).norm());
                }
            }
        }
    }
    Ok(worst)
}
