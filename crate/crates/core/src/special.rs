//! Generalized exponential integral `E_n(z) = int_1^inf e^{-z u} u^{-n} du` for `Re z >= 0`.

use crate::C64;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// `E_n(z)` for integer `n >= 1` and `Re z >= 0`, `z != 0` when `n = 1`.
pub fn expint(n: u32, z: C64) -> C64 {
    let nm1 = n as i64 - 1;
    if z.norm() == 0.0 {
        return if nm1 > 0 { C64::new(1.0 / nm1 as f64, 0.0) } else { C64::new(f64::INFINITY, 0.0) };
    }
    if z.norm() > 1.0 {
        // modified Lentz evaluation of the continued fraction
        let tiny = 1e-300;
        let mut b = z + n as f64;
        let mut c = C64::new(1.0 / tiny, 0.0);
        let mut d = C64::new(1.0, 0.0) / b;
        let mut h = d;
        for i in 1..20000 {
            let a = -(i as f64) * (nm1 as f64 + i as f64);
            b += 2.0;
            d = C64::new(1.0, 0.0) / (d * a + b);
            c = b + C64::new(a, 0.0) / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).norm() < 1e-16 {
                break;
            }
        }
        h * (-z).exp()
    } else {
        let mut ans = if nm1 != 0 { C64::new(1.0 / nm1 as f64, 0.0) } else { -z.ln() - EULER_GAMMA };
        let mut fact = C64::new(1.0, 0.0);
        for i in 1..200i64 {
            fact *= -z / i as f64;
            let del = if i != nm1 {
                -fact / (i - nm1) as f64
            } else {
                let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / k as f64).sum::<f64>();
                fact * (-z.ln() + psi)
            };
            ans += del;
            if del.norm() < ans.norm() * 1e-17 {
                break;
            }
        }
        ans
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_to_infinity, AdaptiveOptions};

    fn brute(n: u32, z: C64) -> C64 {
        let o = AdaptiveOptions { abs_tol: 1e-15, rel_tol: 1e-12, max_intervals: 20000 };
        let re = integrate_to_infinity(|u: f64| ((-z * u).exp() * u.powi(-(n as i32))).re, 1.0, 1.0, &[], o).unwrap();
        let im = integrate_to_infinity(|u: f64| ((-z * u).exp() * u.powi(-(n as i32))).im, 1.0, 1.0, &[], o).unwrap();
        C64::new(re.value, im.value)
    }

    #[test]
    fn matches_direct_integration() {
        for &n in &[1u32, 2, 3, 7] {
            for &z in &[C64::new(0.3, 0.2), C64::new(0.9, -0.5), C64::new(2.0, 1.0), C64::new(4.0, -3.0), C64::new(0.5, 0.0)] {
                let a = expint(n, z);
                let b = brute(n, z);
                assert!((a - b).norm() < 1e-9 * (1.0 + b.norm()), "n={n} z={z} {a} {b}");
            }
        }
    }

    #[test]
    fn known_values() {
        // E_1(1) = 0.219383934395520
        assert!((expint(1, C64::new(1.0, 0.0)).re - 0.219383934395520).abs() < 1e-13);
        assert!((expint(1, C64::new(1.0001, 0.0)).re - expint(1, C64::new(0.9999, 0.0)).re).abs() < 1e-4);
        assert!((expint(3, C64::new(0.0, 0.0)).re - 0.5).abs() < 1e-15);
        // purely imaginary argument: E_1(i y) = -Ci(y) + i(Si(y) - pi/2); y = 10
        let e = expint(1, C64::new(0.0, 10.0));
        assert!((e.re - (-(-0.045456433004455))).abs() < 1e-10, "{e}");
        assert!((e.im - (1.658347594218874 - std::f64::consts::FRAC_PI_2)).abs() < 1e-10, "{e}");
    }
}
