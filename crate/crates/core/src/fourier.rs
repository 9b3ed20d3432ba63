//! Trigonometric transforms on equispaced nodes and diagonal Fourier
//! multipliers acting on quasi-periodic nodal values.
//!
//! Coefficients are stored for modes `r = -n/2 .. n/2 - 1` at index `r + n/2`,
//! with `phi_r = (1/n) sum_m phi(x_m) e^{-i alpha_r x_m}` and `x_m = m d / n`.

use crate::geometry::QuasiPeriodicity;
use crate::linalg::CMat;
use crate::C64;
use std::f64::consts::TAU;

pub fn mode(n: usize, index: usize) -> i64 {
    index as i64 - (n / 2) as i64
}

/// `e^{2 pi i q / n}` for `q = 0..n`.
fn roots(n: usize) -> Vec<C64> {
    (0..n)
        .map(|q| C64::from_polar(1.0, TAU * q as f64 / n as f64))
        .collect()
}

pub fn forward(qp: &QuasiPeriodicity, values: &[C64]) -> Vec<C64> {
    let n = values.len();
    let w = roots(n);
    let h = n / 2;
    let pre: Vec<C64> = values
        .iter()
        .enumerate()
        .map(|(m, v)| v * C64::from_polar(1.0, -qp.alpha * m as f64 * qp.period / n as f64))
        .collect();
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|idx| {
            let r = (idx + n - h) % n;
            let mut s = C64::new(0.0, 0.0);
            for (m, v) in pre.iter().enumerate() {
                s += v * w[(n - (r * m) % n) % n];
            }
            s * scale
        })
        .collect()
}

pub fn inverse(qp: &QuasiPeriodicity, coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len();
    let w = roots(n);
    let h = n / 2;
    (0..n)
        .map(|m| {
            let mut s = C64::new(0.0, 0.0);
            for (idx, c) in coeffs.iter().enumerate() {
                let r = (idx + n - h) % n;
                s += c * w[(r * m) % n];
            }
            s * C64::from_polar(1.0, qp.alpha * m as f64 * qp.period / n as f64)
        })
        .collect()
}

/// `F` with `coeffs = F * values`.
pub fn forward_matrix(qp: &QuasiPeriodicity, n: usize) -> CMat {
    let d = qp.period;
    CMat::from_fn(n, n, |idx, m| {
        let x = m as f64 * d / n as f64;
        C64::from_polar(1.0 / n as f64, -qp.alpha_r(mode(n, idx)) * x)
    })
}

/// `F^{-1}` with `values = F^{-1} * coeffs`.
pub fn inverse_matrix(qp: &QuasiPeriodicity, n: usize) -> CMat {
    let d = qp.period;
    CMat::from_fn(n, n, |m, idx| {
        let x = m as f64 * d / n as f64;
        C64::from_polar(1.0, qp.alpha_r(mode(n, idx)) * x)
    })
}

/// Nodal matrix `F^{-1} Y F` of an operator given by its mode matrix `Y`.
pub fn to_nodal(qp: &QuasiPeriodicity, modal: &CMat) -> CMat {
    let n = modal.nrows();
    let f = forward_matrix(qp, n);
    let finv = inverse_matrix(qp, n);
    &finv * &(modal * &f)
}

/// Diagonal operator in the quasi-periodic Fourier basis.
#[derive(Clone, Debug)]
pub struct FourierMultiplier {
    pub symbol: Vec<C64>,
    pub qp: QuasiPeriodicity,
}

impl FourierMultiplier {
    pub fn from_fn(qp: QuasiPeriodicity, n: usize, f: impl Fn(i64, f64) -> C64) -> Self {
        let symbol = (0..n)
            .map(|idx| {
                let r = mode(n, idx);
                f(r, qp.alpha_r(r))
            })
            .collect();
        Self { symbol, qp }
    }

    pub fn n(&self) -> usize {
        self.symbol.len()
    }

    /// Symbol value at mode `r`.
    pub fn at(&self, r: i64) -> C64 {
        self.symbol[(r + (self.n() / 2) as i64) as usize]
    }

    pub fn apply(&self, values: &[C64]) -> Vec<C64> {
        let mut c = forward(&self.qp, values);
        for (ci, s) in c.iter_mut().zip(&self.symbol) {
            *ci *= s;
        }
        inverse(&self.qp, &c)
    }

    pub fn compose(&self, other: &FourierMultiplier) -> Self {
        Self {
            symbol: self.symbol.iter().zip(&other.symbol).map(|(a, b)| a * b).collect(),
            qp: self.qp,
        }
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            symbol: self.symbol.iter().map(|s| s * c).collect(),
            qp: self.qp,
        }
    }

    /// Dense nodal matrix. The entries depend on `m - j` up to a phase, so
    /// only one column of the circulant part is transformed.
    pub fn matrix(&self) -> CMat {
        let n = self.n();
        let h = n / 2;
        let w = roots(n);
        let col: Vec<C64> = (0..n)
            .map(|q| {
                let mut s = C64::new(0.0, 0.0);
                for (idx, sym) in self.symbol.iter().enumerate() {
                    let r = (idx + n - h) % n;
                    s += sym * w[(r * q) % n];
                }
                s / n as f64
            })
            .collect();
        let step = self.qp.alpha * self.qp.period / n as f64;
        CMat::from_fn(n, n, |m, j| {
            let q = (m + n - j) % n;
            col[q] * C64::from_polar(1.0, step * (m as f64 - j as f64))
        })
    }
}

/// Spectral derivative `d/dx1` with the unpaired Nyquist mode removed.
pub fn derivative(qp: QuasiPeriodicity, n: usize) -> FourierMultiplier {
    let nyquist = -((n / 2) as i64);
    FourierMultiplier::from_fn(qp, n, |r, a| {
        if r == nyquist {
            C64::new(0.0, 0.0)
        } else {
            C64::new(0.0, a)
        }
    })
}
