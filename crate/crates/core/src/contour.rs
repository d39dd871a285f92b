//! Rotation numbers and the oriented boundaries of the upper sectors `D_{2p}^+`.

use crate::{Error, Result, C64};
use std::f64::consts::PI;

/// `e^{i pi num/den}`, with `num` reduced modulo `2 den` before evaluating so that
/// equal rational angles give bit-identical values.
pub fn unit_pi(num: i64, den: i64) -> C64 {
    let n = num.rem_euclid(2 * den);
    let theta = PI * n as f64 / den as f64;
    C64::new(theta.cos(), theta.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Outward,
    Inward,
}

/// Ray `r -> r e^{i theta}`, `theta = pi * num / den` stored exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub num: i64,
    pub den: i64,
    pub direction: Direction,
}

impl Ray {
    pub fn angle(&self) -> f64 {
        PI * self.num as f64 / self.den as f64
    }

    pub fn unit(&self) -> C64 {
        unit_pi(self.num, self.den)
    }

    /// +1 for outward traversal, -1 for inward.
    pub fn sign(&self) -> f64 {
        match self.direction {
            Direction::Outward => 1.0,
            Direction::Inward => -1.0,
        }
    }

    /// Sign `sigma` with `(r e^{i theta})^m = sigma r^m`; requires `m theta` to be a multiple of pi.
    pub fn power_sign(&self, m: usize) -> Option<f64> {
        let k = self.num * m as i64;
        if k % self.den != 0 {
            return None;
        }
        Some(if (k / self.den).rem_euclid(2) == 0 { 1.0 } else { -1.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    /// Sector interior on the left of the direction of travel.
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectorBoundary {
    pub m: usize,
    pub p: usize,
    pub right_ray: Ray,
    pub left_ray: Ray,
    pub orientation: Orientation,
}

impl SectorBoundary {
    pub fn rays(&self) -> [Ray; 2] {
        [self.right_ray, self.left_ray]
    }
}

fn check_mp(m: usize, p: usize) -> Result<usize> {
    if m < 3 || m % 2 == 0 {
        return Err(Error::Domain(format!("m must be odd and at least 3, got {m}")));
    }
    let j = (m - 1) / 2;
    if p < 1 || p > j {
        return Err(Error::Domain(format!("sector index p = {p} outside 1..={j}")));
    }
    Ok(j)
}

/// `alpha_{p,n} = e^{i[m - (2p+1) + 2n] pi / m}` for `n = 1..=j+1`.
pub fn rotation_numbers(m: usize, p: usize) -> Result<Vec<C64>> {
    let j = check_mp(m, p)?;
    Ok((1..=j + 1)
        .map(|n| unit_pi(m as i64 - (2 * p as i64 + 1) + 2 * n as i64, m as i64))
        .collect())
}

/// Numerator over `m` of the angle of `alpha_{p,n}` in units of pi.
pub fn rotation_exponent(m: usize, p: usize, n: usize) -> i64 {
    m as i64 - (2 * p as i64 + 1) + 2 * n as i64
}

pub fn sector_boundary(m: usize, p: usize) -> Result<SectorBoundary> {
    check_mp(m, p)?;
    let den = m as i64;
    Ok(SectorBoundary {
        m,
        p,
        right_ray: Ray { num: 2 * p as i64 - 1, den, direction: Direction::Outward },
        left_ray: Ray { num: 2 * p as i64, den, direction: Direction::Inward },
        orientation: Orientation::Positive,
    })
}

/// Modulus of `e^{i xi x}` at `xi = r e^{i theta}`.
pub fn decay_factor(ray: &Ray, r: f64, x: f64) -> f64 {
    (-ray.angle().sin() * r * x).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kdv_rotations() {
        let a = rotation_numbers(3, 1).unwrap();
        assert_eq!(a.len(), 2);
        assert_eq!(a[0], C64::from_polar(1.0, 2.0 * PI / 3.0));
        assert_eq!(a[1], C64::new((4.0 * PI / 3.0).cos(), (4.0 * PI / 3.0).sin()));
    }

    #[test]
    fn rotations_are_mth_roots_of_unity() {
        for m in [3usize, 5, 7, 9] {
            for p in 1..=(m - 1) / 2 {
                for a in rotation_numbers(m, p).unwrap() {
                    assert!((a.powu(m as u32) - 1.0).norm() < 1e-14);
                    assert!(((a.norm()) - 1.0).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn sector_angles() {
        let s = sector_boundary(5, 2).unwrap();
        assert!((s.right_ray.angle() - 3.0 * PI / 5.0).abs() < 1e-15);
        assert!((s.left_ray.angle() - 4.0 * PI / 5.0).abs() < 1e-15);
        assert_eq!(s.right_ray.power_sign(5), Some(-1.0));
        assert_eq!(s.left_ray.power_sign(5), Some(1.0));
        assert!(sector_boundary(3, 2).is_err());
        assert!(rotation_numbers(4, 1).is_err());
    }

    #[test]
    fn decay() {
        let s = sector_boundary(3, 1).unwrap();
        assert_eq!(decay_factor(&s.right_ray, 5.0, 0.0), 1.0);
        let v = decay_factor(&s.right_ray, 1.0, 1.0);
        assert!((v - (-(3f64.sqrt()) / 2.0).exp()).abs() < 1e-14);
        assert!((v - 0.4206).abs() < 1e-4);
    }
}
