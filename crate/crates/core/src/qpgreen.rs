//! Free-space and windowed quasi-periodic Green functions of the Helmholtz
//! operator in two dimensions.

use crate::error::{Error, Result};
use crate::special::hankel1_01;
use crate::C64;
use std::f64::consts::PI;

/// Smooth cutoff: one on `[0, 1/2]`, zero on `[1, inf)`.
pub fn window(r: f64) -> f64 {
    if r <= 0.5 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        let u = 2.0 * r - 1.0;
        (2.0 * (-1.0 / u).exp() / (u - 1.0)).exp()
    }
}

/// `(chi(r), chi'(r))`.
pub fn window_with_derivative(r: f64) -> (f64, f64) {
    if r <= 0.5 {
        (1.0, 0.0)
    } else if r >= 1.0 {
        (0.0, 0.0)
    } else {
        let u = 2.0 * r - 1.0;
        let e = (-1.0 / u).exp();
        let chi = (2.0 * e / (u - 1.0)).exp();
        let dexp = 2.0 * e * (1.0 / (u * u * (u - 1.0)) - 1.0 / ((u - 1.0) * (u - 1.0)));
        (chi, 2.0 * chi * dexp)
    }
}

fn radius(x: [f64; 2]) -> f64 {
    x[0].hypot(x[1])
}

/// `G_k(x) = (i/4) H_0(k|x|)`.
pub fn free_green(k: C64, x: [f64; 2]) -> Result<C64> {
    let r = radius(x);
    if r == 0.0 {
        return Err(Error::SingularPoint { x1: x[0], x2: x[1] });
    }
    let (h0, _) = hankel1_01(k * r);
    Ok(C64::new(0.0, 0.25) * h0)
}

/// `grad G_k(x) = -(ik/4) H_1(k|x|) x / |x|`.
pub fn free_green_grad(k: C64, x: [f64; 2]) -> Result<[C64; 2]> {
    let r = radius(x);
    if r == 0.0 {
        return Err(Error::SingularPoint { x1: x[0], x2: x[1] });
    }
    let (_, h1) = hankel1_01(k * r);
    let c = C64::new(0.0, -0.25) * k * h1 / r;
    Ok([c * x[0], c * x[1]])
}

/// Parameters of the windowed lattice sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowedGreenParams {
    pub wavenumber: C64,
    pub alpha: f64,
    pub period: f64,
    pub window_size: f64,
}

pub const DEFAULT_WINDOW: f64 = 120.0;

impl WindowedGreenParams {
    pub fn new(wavenumber: C64, alpha: f64, period: f64, window_size: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        if !(window_size >= 2.0 * period) {
            return Err(Error::WindowTooSmall {
                window: window_size,
                period,
            });
        }
        Ok(Self {
            wavenumber,
            alpha,
            period,
            window_size,
        })
    }

    /// Largest image index `|m|` that can carry a nonzero window weight.
    pub fn image_bound(&self) -> i64 {
        (self.window_size / self.period).ceil() as i64 + 1
    }
}

/// Windowed sums evaluated at `z` and at `-z` with shared Hankel evaluations.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ImagePair {
    /// `G^q(z)`.
    pub value: C64,
    /// `grad G^q(z)`.
    pub grad: [C64; 2],
    /// `G^q(-z)`.
    pub value_rev: C64,
    /// `(grad G^q)(-z)`.
    pub grad_rev: [C64; 2],
}

/// Windowed image sum at `z`, omitting image `skip` when given.
///
/// Returns the data for both `z` and `-z`; the reversed values use the
/// identity `G^q_alpha(-z) = sum_m e^{+i alpha m d} G(z + m d e_1)`.
pub fn image_pair(p: &WindowedGreenParams, z: [f64; 2], skip: Option<i64>) -> Result<ImagePair> {
    let d = p.period;
    let a = p.window_size;
    let k = p.wavenumber;
    let bound = p.image_bound();
    let mut out = ImagePair::default();
    let tiny = 1e-14 * d;
    let ph_step = C64::from_polar(1.0, -p.alpha * d);
    let mut ph = C64::from_polar(1.0, p.alpha * d * bound as f64);
    let ik4 = C64::new(0.0, -0.25) * k;
    for m in -bound..=bound {
        let phase = ph;
        ph *= ph_step;
        if Some(m) == skip {
            continue;
        }
        let x1 = z[0] + m as f64 * d;
        let r = x1.hypot(z[1]);
        let (chi, dchi) = window_with_derivative(r / a);
        if chi == 0.0 {
            continue;
        }
        if r < tiny {
            return Err(Error::SingularPoint { x1: z[0], x2: z[1] });
        }
        let (h0, h1) = hankel1_01(k * r);
        let g = C64::new(0.0, 0.25) * h0;
        // radial derivative of the windowed term
        let radial = ik4 * h1 * chi + g * (dchi / a);
        let gw = g * chi;
        let (u1, u2) = (x1 / r, z[1] / r);
        let gr = [radial * u1, radial * u2];
        let conj = phase.conj();
        out.value += phase * gw;
        out.grad[0] += phase * gr[0];
        out.grad[1] += phase * gr[1];
        out.value_rev += conj * gw;
        out.grad_rev[0] -= conj * gr[0];
        out.grad_rev[1] -= conj * gr[1];
    }
    Ok(out)
}

/// Windowed quasi-periodic Green function `G^{q,A}_k(x)`.
pub fn windowed_qp_green(p: &WindowedGreenParams, x: [f64; 2]) -> Result<C64> {
    check_lattice(p, x)?;
    Ok(image_pair(p, x, None)?.value)
}

/// Value and gradient of the windowed quasi-periodic Green function.
pub fn windowed_qp_green_grad(p: &WindowedGreenParams, x: [f64; 2]) -> Result<(C64, [C64; 2])> {
    check_lattice(p, x)?;
    let s = image_pair(p, x, None)?;
    Ok((s.value, s.grad))
}

fn check_lattice(p: &WindowedGreenParams, x: [f64; 2]) -> Result<()> {
    let d = p.period;
    let off = x[0] - d * (x[0] / d).round();
    if off.hypot(x[1]) < 1e-14 * d {
        return Err(Error::SingularPoint { x1: x[0], x2: x[1] });
    }
    Ok(())
}

/// Rayleigh-series representation of the quasi-periodic Green function,
/// `(i / 2d) sum_r e^{i alpha_r x1 + i beta_r |x2|} / beta_r`, valid for `x2 != 0`.
pub fn spectral_qp_green(k: C64, alpha: f64, period: f64, x: [f64; 2], modes: i64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for r in -modes..=modes {
        let ar = alpha + 2.0 * PI * r as f64 / period;
        let b = crate::geometry::beta(k, ar);
        s += (C64::i() * (b * x[1].abs() + ar * x[0])).exp() / b;
    }
    s * C64::new(0.0, 0.5 / period)
}

/// Value and gradient of the Rayleigh series, valid for `x2 != 0`.
pub fn spectral_qp_green_grad(k: C64, alpha: f64, period: f64, x: [f64; 2], modes: i64) -> (C64, [C64; 2]) {
    let sgn = x[1].signum();
    let mut v = C64::new(0.0, 0.0);
    let mut g = [C64::new(0.0, 0.0); 2];
    for r in -modes..=modes {
        let ar = alpha + 2.0 * PI * r as f64 / period;
        let b = crate::geometry::beta(k, ar);
        let t = (C64::i() * (b * x[1].abs() + ar * x[0])).exp() / b;
        v += t;
        g[0] += C64::new(0.0, ar) * t;
        g[1] += C64::i() * b * sgn * t;
    }
    let c = C64::new(0.0, 0.5 / period);
    (v * c, [g[0] * c, g[1] * c])
}
