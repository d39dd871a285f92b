//! The contour pieces of the solution formula and their radial quadrature nodes.

use crate::contour::{rotation_numbers, sector_boundary};
use crate::elimination::UtmConstants;
use crate::quadrature::composite_nodes;
use crate::transforms::IM_SLACK;
use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// One half-infinite piece `sign * int_0^inf (...)(gamma r) gamma dr` of the formula.
#[derive(Debug, Clone)]
pub struct Piece {
    pub label: String,
    pub gamma: C64,
    pub sign: f64,
    /// `(gamma r)^m = sigma r^m`.
    pub sigma: f64,
    /// Direction of the deflected path used for oscillatory tails beyond the radius.
    pub deflect: f64,
    /// Data terms `coef * [u0^ + F](alpha xi)`.
    pub terms: Vec<(C64, C64)>,
    /// Boundary terms `coef * (i xi)^{2j-l} g~_l`, as `(l, coef)`.
    pub boundary: Vec<(usize, C64)>,
    pub radius: f64,
    /// Whether asymptotic tails beyond `radius` are added (false when the piece is cut
    /// where spatial decay already makes the remainder negligible).
    pub tails: bool,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
}

/// Spatial decay exponent at which ray pieces are cut when every x is positive.
pub const RAY_DECAY_CUT: f64 = 40.0;

/// Composite Gauss-Legendre nodes on `[0, radius]` with panels of bounded phase increment,
/// where `rate(r)` bounds the local phase derivative.
pub fn radial_nodes(radius: f64, rate: impl Fn(f64) -> f64, phase_per_panel: f64, order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut edges = vec![0.0];
    let mut e = 0.0;
    while e < radius {
        let mut w = (phase_per_panel / rate(e)).min(0.5);
        // the rate grows with r; shrink until the right edge also satisfies the budget
        while w * rate(e + w) > phase_per_panel * 1.5 && w > 1e-6 {
            w *= 0.7;
        }
        e = (e + w).min(radius);
        if radius - e < 1e-3 * w {
            e = radius;
        }
        edges.push(e);
    }
    composite_nodes(&edges, order)
}

/// Line halves followed by the two rays of every sector.
pub fn build_pieces(
    k: &UtmConstants,
    radius: f64,
    x_min: f64,
    rate: &dyn Fn(f64) -> f64,
    phase_per_panel: f64,
    order: usize,
) -> Result<Vec<Piece>> {
    let m = k.m;
    let mf = m as f64;
    let one = C64::new(1.0, 0.0);
    let line = vec![(C64::new(1.0 / (2.0 * PI), 0.0), one)];
    let mut pieces = vec![
        Piece {
            label: "line+".into(),
            gamma: one,
            sign: 1.0,
            sigma: 1.0,
            deflect: PI / (2.0 * mf),
            terms: line.clone(),
            boundary: vec![],
            radius,
            tails: true,
            r: vec![],
            w: vec![],
        },
        Piece {
            label: "line-".into(),
            gamma: -one,
            sign: -1.0,
            sigma: -1.0,
            deflect: PI - PI / (2.0 * mf),
            terms: line,
            boundary: vec![],
            radius,
            tails: true,
            r: vec![],
            w: vec![],
        },
    ];
    for p in 1..=k.j {
        let sb = sector_boundary(m, p)?;
        let alphas = rotation_numbers(m, p)?;
        let terms: Vec<(C64, C64)> = alphas.iter().enumerate().map(|(n, &a)| (k.c[p - 1][n], a)).collect();
        let boundary: Vec<(usize, C64)> = (0..k.j).map(|l| (l, k.cprime[p - 1][l])).collect();
        for (ray, dtheta, side) in [(sb.right_ray, -PI / (2.0 * mf), "right"), (sb.left_ray, PI / (2.0 * mf), "left")] {
            let gamma = ray.unit();
            for &(_, a) in &terms {
                if (a * gamma).im > IM_SLACK {
                    return Err(Error::Numerical(format!(
                        "rotated argument alpha xi leaves the closed lower half-plane on sector {p} ({side} ray): alpha = {a}"
                    )));
                }
            }
            let sigma = ray.power_sign(m).ok_or_else(|| Error::Numerical("ray angle is not a multiple of pi/m".into()))?;
            let mut r_cut = radius;
            let mut tails = true;
            if x_min > 0.0 {
                let c = RAY_DECAY_CUT / (ray.angle().sin() * x_min);
                if c < radius {
                    r_cut = c;
                    tails = false;
                }
            }
            pieces.push(Piece {
                label: format!("sector {p} {side}"),
                gamma,
                sign: ray.sign(),
                sigma,
                deflect: ray.angle() + dtheta,
                terms: terms.clone(),
                boundary: boundary.clone(),
                radius: r_cut,
                tails,
                r: vec![],
                w: vec![],
            });
        }
    }
    for pc in pieces.iter_mut() {
        let (r, w) = radial_nodes(pc.radius, rate, phase_per_panel, order);
        pc.r = r;
        pc.w = w;
    }
    Ok(pieces)
}
