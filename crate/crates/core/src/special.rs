//! Bessel and Hankel functions of orders zero and one.
//!
//! Real arguments use `libm` below the asymptotic threshold; complex
//! arguments use the ascending series for small modulus and the Hankel
//! asymptotic expansion otherwise.

use crate::C64;
use std::f64::consts::{FRAC_2_PI, FRAC_PI_4, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const REAL_ASYMPTOTIC: f64 = 25.0;
const COMPLEX_ASYMPTOTIC: f64 = 14.0;
const MAX_TERMS: usize = 64;

/// Coefficients `a_k(nu)` of the Hankel asymptotic expansion.
fn asymptotic_coeffs(nu: f64) -> [f64; MAX_TERMS] {
    let mu = 4.0 * nu * nu;
    let mut a = [0.0; MAX_TERMS];
    a[0] = 1.0;
    for k in 1..MAX_TERMS {
        let odd = (2 * k - 1) as f64;
        a[k] = a[k - 1] * (mu - odd * odd) / (8.0 * k as f64);
    }
    a
}

struct Tables {
    a0: [f64; MAX_TERMS],
    a1: [f64; MAX_TERMS],
}

fn tables() -> &'static Tables {
    use std::sync::OnceLock;
    static T: OnceLock<Tables> = OnceLock::new();
    T.get_or_init(|| Tables {
        a0: asymptotic_coeffs(0.0),
        a1: asymptotic_coeffs(1.0),
    })
}

/// `P + iQ = sum_k i^k a_k z^{-k}`, truncated at the smallest term.
fn asymptotic_sum(a: &[f64; MAX_TERMS], z: C64) -> (C64, C64) {
    let inv = z.inv();
    let mut p = C64::new(0.0, 0.0);
    let mut q = C64::new(0.0, 0.0);
    let mut pow = C64::new(1.0, 0.0);
    let mut last = f64::INFINITY;
    for (k, &ak) in a.iter().enumerate() {
        let term = pow * ak;
        let mag = term.norm();
        if mag > last {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 * (p.norm() + q.norm()) {
            break;
        }
        last = mag;
        pow *= inv;
    }
    (p, q)
}

fn asymptotic_sum_real(a: &[f64; MAX_TERMS], x: f64) -> (f64, f64) {
    let inv = 1.0 / x;
    let (mut p, mut q) = (0.0, 0.0);
    let mut pow = 1.0;
    let mut last = f64::INFINITY;
    for (k, &ak) in a.iter().enumerate() {
        let term = pow * ak;
        let mag = term.abs();
        if mag > last {
            break;
        }
        match k % 4 {
            0 => p += term,
            1 => q += term,
            2 => p -= term,
            _ => q -= term,
        }
        if mag < 1e-17 * (p.abs() + q.abs()) {
            break;
        }
        last = mag;
        pow *= inv;
    }
    (p, q)
}

/// Hankel functions of the first kind `(H_0(z), H_1(z))`.
///
/// Requires `z != 0` and `Im z >= 0` or `|arg z| < pi` in general.
pub fn hankel1_01(z: C64) -> (C64, C64) {
    if z.im == 0.0 && z.re > 0.0 {
        return hankel1_01_real(z.re);
    }
    if z.norm() >= COMPLEX_ASYMPTOTIC {
        let t = tables();
        let (p0, q0) = asymptotic_sum(&t.a0, z);
        let (p1, q1) = asymptotic_sum(&t.a1, z);
        let amp = (C64::new(FRAC_2_PI, 0.0) / z).sqrt();
        let phase = (C64::i() * (z - FRAC_PI_4)).exp();
        let h0 = amp * phase * (p0 + C64::i() * q0);
        // e^{i(z - 3pi/4)} = -i e^{i(z - pi/4)}
        let h1 = amp * phase * (p1 + C64::i() * q1) * C64::new(0.0, -1.0);
        (h0, h1)
    } else {
        let (j0, y0, j1, y1) = series_01(z);
        (j0 + C64::i() * y0, j1 + C64::i() * y1)
    }
}

/// Real-argument fast path for `hankel1_01`.
pub fn hankel1_01_real(x: f64) -> (C64, C64) {
    if x >= REAL_ASYMPTOTIC {
        let t = tables();
        let (p0, q0) = asymptotic_sum_real(&t.a0, x);
        let (p1, q1) = asymptotic_sum_real(&t.a1, x);
        let amp = (FRAC_2_PI / x).sqrt();
        let (s, c) = (x - FRAC_PI_4).sin_cos();
        let e = C64::new(c, s);
        let h0 = e * C64::new(p0, q0) * amp;
        let h1 = e * C64::new(q1, -p1) * amp;
        (h0, h1)
    } else {
        (
            C64::new(libm::j0(x), libm::y0(x)),
            C64::new(libm::j1(x), libm::y1(x)),
        )
    }
}

/// Bessel functions `(J_0(z), J_1(z))`.
pub fn bessel_j01(z: C64) -> (C64, C64) {
    if z.im == 0.0 {
        return (C64::new(libm::j0(z.re), 0.0), C64::new(libm::j1(z.re), 0.0));
    }
    if z.norm() >= COMPLEX_ASYMPTOTIC {
        let t = tables();
        let (p0, q0) = asymptotic_sum(&t.a0, z);
        let (p1, q1) = asymptotic_sum(&t.a1, z);
        let amp = (C64::new(FRAC_2_PI, 0.0) / z).sqrt();
        let w0 = z - FRAC_PI_4;
        let w1 = z - 3.0 * FRAC_PI_4;
        (
            amp * (p0 * w0.cos() - q0 * w0.sin()),
            amp * (p1 * w1.cos() - q1 * w1.sin()),
        )
    } else {
        let (j0, _, j1, _) = series_01(z);
        (j0, j1)
    }
}

/// Ascending series for `(J_0, Y_0, J_1, Y_1)`.
fn series_01(z: C64) -> (C64, C64, C64, C64) {
    let q = z * z * 0.25;
    let mq = -q;
    let half = z * 0.5;
    let log_half = half.ln();

    let mut j0 = C64::new(0.0, 0.0);
    let mut j1s = C64::new(0.0, 0.0);
    let mut y0s = C64::new(0.0, 0.0);
    let mut y1s = C64::new(0.0, 0.0);

    // term_k = (-q)^k / (k!)^2 and (-q)^k / (k! (k+1)!)
    let mut t0 = C64::new(1.0, 0.0);
    let mut t1 = C64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    for k in 0..MAX_TERMS {
        if k > 0 {
            let kf = k as f64;
            t0 = t0 * mq / (kf * kf);
            t1 = t1 * mq / (kf * (kf + 1.0));
            harmonic += 1.0 / kf;
        }
        j0 += t0;
        j1s += t1;
        // Y0 tail: sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2 = -sum H_k t0
        y0s -= t0 * harmonic;
        // psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma
        let psi_sum = 2.0 * harmonic + 1.0 / (k as f64 + 1.0) - 2.0 * EULER_GAMMA;
        y1s += t1 * psi_sum;
        if k > 2 && t0.norm() < 1e-18 * j0.norm().max(1e-300) && t1.norm() < 1e-18 * j1s.norm().max(1e-300)
        {
            break;
        }
    }
    let j1 = half * j1s;
    let y0 = (log_half + EULER_GAMMA) * j0 * FRAC_2_PI + y0s * FRAC_2_PI;
    let y1 = -FRAC_2_PI / z + log_half * j1 * FRAC_2_PI - half * y1s / PI;
    (j0, y0, j1, y1)
}
