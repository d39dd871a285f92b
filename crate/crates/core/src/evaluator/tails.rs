//! Asymptotic tails of the contour pieces beyond the spectral radius.
//!
//! Beyond `R` the amplitudes are replaced by their large-`xi` expansions
//! `sum coef * xi^{-q}`, optionally multiplied by `e^{i xi^m t}`. Pure powers integrate
//! exactly against `e^{i xi x}` through `E_q`; oscillatory terms are integrated along a
//! path deflected into the sector where `e^{i xi^m t}` decays.

use super::pieces::Piece;
use crate::quadrature::gauss_legendre;
use crate::special::{expint, EULER_GAMMA};
use crate::C64;
use std::collections::BTreeMap;

#[derive(Debug, Clone)]
pub struct TailTerm {
    pub q: u32,
    pub osc: bool,
    /// Coefficient per time index.
    pub coef: Vec<C64>,
}

#[derive(Debug, Default)]
pub struct TailBuilder {
    nt: usize,
    map: BTreeMap<(u32, bool), Vec<C64>>,
}

impl TailBuilder {
    pub fn new(nt: usize) -> Self {
        TailBuilder { nt, map: BTreeMap::new() }
    }

    pub fn add(&mut self, q: u32, osc: bool, k: usize, v: C64) {
        let nt = self.nt;
        self.map.entry((q, osc)).or_insert_with(|| vec![C64::new(0.0, 0.0); nt])[k] += v;
    }

    pub fn finish(self) -> Vec<TailTerm> {
        self.map
            .into_iter()
            .filter(|(_, c)| c.iter().any(|v| v.norm() > 0.0))
            .map(|((q, osc), coef)| TailTerm { q, osc, coef })
            .collect()
    }
}

/// `int_R^inf e^{i gamma r x} (gamma r)^{-q} gamma dr`; at `x = 0` with `q = 1` the
/// `-ln x` divergence is dropped (it cancels between paired pieces).
pub fn power_tail(gamma: C64, radius: f64, x: f64, q: u32) -> C64 {
    let gr = gamma * radius;
    let pre = gr.powi(1 - q as i32);
    if x == 0.0 {
        return if q == 1 {
            pre * (-EULER_GAMMA - (C64::new(0.0, -1.0) * gr).ln())
        } else {
            pre / (q - 1) as f64
        };
    }
    pre * expint(q, C64::new(0.0, -1.0) * gr * x)
}

/// Oscillatory tail `int e^{i xi x} sum c xi^{-q} e^{i xi^m t} d xi` along
/// `xi = gamma R + s e^{i phi}`, `s >= 0`.
pub fn deflected_tail(piece: &Piece, m: usize, x: f64, t: f64, terms: &[(u32, C64)]) -> C64 {
    if terms.is_empty() {
        return C64::new(0.0, 0.0);
    }
    let gl = gauss_legendre(16);
    let dir = C64::from_polar(1.0, piece.deflect);
    let xi0 = piece.gamma * piece.radius;
    let expo = |xi: C64| xi.powu(m as u32) * t + xi * x;
    let base = expo(xi0).im;
    let qmax = terms.iter().map(|(q, _)| *q).max().unwrap();
    let mut total = C64::new(0.0, 0.0);
    let mut s = 0.0;
    for _ in 0..4000 {
        let xi = xi0 + dir * s;
        let mag = xi.norm();
        let rate = m as f64 * mag.powi(m as i32 - 1) * t + x;
        let width = (0.5 * mag).min(3.0 / rate);
        let c = s + 0.5 * width;
        for (sn, wn) in gl.nodes.iter().zip(&gl.weights) {
            let z = xi0 + dir * (c + 0.5 * width * sn);
            let inv = C64::new(1.0, 0.0) / z;
            let mut pw = inv;
            let mut acc = C64::new(0.0, 0.0);
            let mut qi = 1;
            let mut it = terms.iter().peekable();
            while qi <= qmax {
                while let Some((q, cf)) = it.peek() {
                    if *q == qi {
                        acc += cf * pw;
                        it.next();
                    } else {
                        break;
                    }
                }
                pw *= inv;
                qi += 1;
            }
            total += acc * (C64::i() * expo(z)).exp() * (0.5 * width * wn);
        }
        s += width;
        if expo(xi0 + dir * s).im - base > 45.0 {
            break;
        }
    }
    total * dir
}

/// Full tail of a piece at `(x, t_k)`, without the piece sign.
pub fn piece_tail(piece: &Piece, m: usize, terms: &[TailTerm], x: f64, t: f64, k: usize) -> C64 {
    if !piece.tails || terms.is_empty() {
        return C64::new(0.0, 0.0);
    }
    let mut total = C64::new(0.0, 0.0);
    let mut osc: Vec<(u32, C64)> = Vec::new();
    for term in terms {
        let c = term.coef[k];
        if c.norm() == 0.0 {
            continue;
        }
        if term.osc && t > 0.0 {
            match osc.iter_mut().find(|(q, _)| *q == term.q) {
                Some(e) => e.1 += c,
                None => osc.push((term.q, c)),
            }
        } else {
            total += c * power_tail(piece.gamma, piece.radius, x, term.q);
        }
    }
    osc.sort_by_key(|(q, _)| *q);
    total + deflected_tail(piece, m, x, t, &osc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::composite_nodes;

    fn piece(gamma: C64, deflect: f64, radius: f64) -> Piece {
        Piece {
            label: "t".into(),
            gamma,
            sign: 1.0,
            sigma: 1.0,
            deflect,
            terms: vec![],
            boundary: vec![],
            radius,
            tails: true,
            r: vec![],
            w: vec![],
        }
    }

    #[test]
    fn power_tail_matches_direct_sum() {
        // int_R^inf e^{i r x} r^{-3} dr on the real line, brute force on a long interval
        let (x, r0) = (0.7, 5.0);
        let edges: Vec<f64> = (0..=40000).map(|i| r0 + i as f64 * 0.05).collect();
        let (rs, ws) = composite_nodes(&edges, 8);
        let brute: C64 = rs.iter().zip(&ws).map(|(r, w)| (C64::i() * r * x).exp() * r.powi(-3) * w).sum();
        let rest = (C64::i() * 2005.0 * x).exp() / (C64::i() * x) * -(2005f64.powi(-3)); // leading remainder
        let v = power_tail(C64::new(1.0, 0.0), r0, x, 3);
        assert!((v - (brute + rest)).norm() < 1e-9, "{v} {brute}");
    }

    #[test]
    fn deflected_matches_straight_ray() {
        // e^{i xi^3 t} xi^{-2} on the ray at pi/3 (xi^3 = -r^3), deflected vs straight
        let m = 3;
        let g = C64::from_polar(1.0, std::f64::consts::PI / 3.0);
        let p = piece(g, std::f64::consts::PI / 3.0 - std::f64::consts::PI / 6.0, 4.0);
        let (x, t) = (0.3, 0.05);
        let v = deflected_tail(&p, m, x, t, &[(2, C64::new(1.0, 0.0))]);
        let edges: Vec<f64> = (0..=200000).map(|i| 4.0 + i as f64 * 0.0005).collect();
        let (rs, ws) = composite_nodes(&edges, 6);
        let straight: C64 = rs
            .iter()
            .zip(&ws)
            .map(|(r, w)| {
                let xi = g * *r;
                (C64::i() * (xi * x + xi.powu(3) * t)).exp() * xi.powi(-2) * g * w
            })
            .sum();
        assert!((v - straight).norm() < 1e-8, "{v} {straight}");
    }
}
