//! Transmission operators: Fourier multipliers and shape-perturbation
//! approximations of Dirichlet-to-Neumann maps.
//!
//! All operators map Dirichlet data to the derivative along the *outward*
//! non-unit normal of the region they describe. For the region above a
//! profile this normal is `(F', -1)`, below it is `(-F', 1)`.
//!
//! The perturbation terms are assembled as mode matrices over the output
//! modes `R_n` with intermediate sums over a padded mode set of size `3n/2`,
//! which removes aliasing from the products with the profile.

use crate::error::{Error, Result};
use crate::fourier::{self, FourierMultiplier};
use crate::geometry::{beta, GratingProfile, QuasiPeriodicity};
use crate::linalg::{matvec, CMat};
use crate::C64;
use std::f64::consts::TAU;

/// Half-plane the DtN map refers to, relative to its interface.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    Above,
    Below,
}

impl Region {
    fn sign(self) -> f64 {
        match self {
            Region::Above => 1.0,
            Region::Below => -1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    /// Perturbation series of a half-plane DtN map.
    Semi { order: usize, region: Region },
    /// One block of the perturbation series of a bounded layer's DtN map.
    Slab { order: usize },
    /// `-i beta(k + i sigma)` of the flat half-plane.
    Flat,
    /// `Z = i I`.
    Despres,
    /// `Z = i T` with the Hilbert-transform type operator `T`.
    Hilbert,
    /// Numerically computed exact DtN map.
    Exact,
}

#[derive(Clone, Debug)]
pub struct TransmissionOperator {
    pub matrix: CMat,
    pub family: Family,
    pub sigma: f64,
}

impl TransmissionOperator {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, phi: &[C64]) -> Vec<C64> {
        matvec(&self.matrix, phi)
    }

    /// `Im <Z phi, phi>` with the nodal inner product.
    pub fn imaginary_form(&self, phi: &[C64]) -> f64 {
        let z = self.apply(phi);
        z.iter().zip(phi).map(|(a, b)| a * b.conj()).sum::<C64>().im
    }
}

/// Default complexification `sigma = 0.5 k^{1/3} (2 pi / d)^{2/3}` clamped to `[0.4, 2]`.
pub fn default_sigma(k: f64, period: f64) -> f64 {
    (0.5 * k.cbrt() * (TAU / period).powf(2.0 / 3.0)).clamp(0.4, 2.0)
}

pub fn beta_multiplier(k: C64, qp: &QuasiPeriodicity, n: usize) -> Result<FourierMultiplier> {
    let m = FourierMultiplier::from_fn(*qp, n, |_, a| beta(k, a));
    if k.im == 0.0 {
        for idx in 0..n {
            if m.symbol[idx].norm() <= 1e-14 * k.norm().max(1.0) {
                return Err(Error::WoodAnomaly {
                    k: k.re,
                    mode: fourier::mode(n, idx),
                });
            }
        }
    }
    Ok(m)
}

pub fn flat_transmission(k: C64, sigma: f64, qp: &QuasiPeriodicity, n: usize) -> Result<TransmissionOperator> {
    let kappa = k + C64::new(0.0, sigma);
    let m = beta_multiplier(kappa, qp, n)?.scaled(C64::new(0.0, -1.0));
    Ok(TransmissionOperator {
        matrix: m.matrix(),
        family: Family::Flat,
        sigma,
    })
}

pub fn despres_operator(n: usize) -> TransmissionOperator {
    TransmissionOperator {
        matrix: CMat::identity(n, n) * faer::Scale(C64::new(0.0, 1.0)),
        family: Family::Despres,
        sigma: 0.0,
    }
}

/// Symbol `|alpha_r d / 2 pi| + 1` of `T phi = d/dt int K(t - tau) phi'(tau) dtau + phi`
/// with `K(t) = (1/pi) ln|1 - e^{it}|` in the angle `t = 2 pi x1 / d`.
pub fn hilbert_symbol(qp: &QuasiPeriodicity, n: usize) -> FourierMultiplier {
    let s = qp.period / TAU;
    FourierMultiplier::from_fn(*qp, n, |_, a| C64::new((a * s).abs() + 1.0, 0.0))
}

pub fn hilbert_operator(n: usize, qp: &QuasiPeriodicity) -> TransmissionOperator {
    TransmissionOperator {
        matrix: hilbert_symbol(qp, n).scaled(C64::new(0.0, 1.0)).matrix(),
        family: Family::Hilbert,
        sigma: 0.0,
    }
}

/// Mode bookkeeping for the perturbation series.
struct Modes {
    qp: QuasiPeriodicity,
    out: Vec<i64>,
    pad: Vec<i64>,
}

impl Modes {
    fn new(qp: QuasiPeriodicity, n: usize) -> Self {
        let m = 2 * (3 * n).div_ceil(4);
        let range = |count: usize| {
            let h = (count / 2) as i64;
            (-h..count as i64 - h).collect::<Vec<_>>()
        };
        Self {
            qp,
            out: range(n),
            pad: range(m),
        }
    }

    fn max_shift(&self) -> usize {
        let lo = self.out[0].min(self.pad[0]);
        let hi = self.out[self.out.len() - 1].max(self.pad[self.pad.len() - 1]);
        (hi - lo) as usize + 1
    }

    fn alpha(&self, r: i64) -> f64 {
        self.qp.alpha_r(r)
    }

    fn wavenumber(&self, q: i64) -> f64 {
        TAU * q as f64 / self.qp.period
    }
}

/// Coefficients of the periodic function `(F - mean)^power / power!`, for
/// periodic modes `-max..=max`, stored at index `q + max`.
struct ProfileCoefficients {
    max: usize,
    values: Vec<C64>,
}

impl ProfileCoefficients {
    fn new(profile: &GratingProfile, power: i32, max: usize) -> Self {
        let d = profile.period;
        let p = 4 * (2 * max + 1);
        let fact: f64 = (1..=power).map(f64::from).product();
        let samples: Vec<f64> = (0..p)
            .map(|m| {
                let x = m as f64 * d / p as f64;
                (profile.height(x) - profile.mean_height).powi(power) / fact
            })
            .collect();
        let values = (0..=2 * max)
            .map(|idx| {
                let q = idx as f64 - max as f64;
                let mut s = C64::new(0.0, 0.0);
                for (m, v) in samples.iter().enumerate() {
                    s += C64::from_polar(*v, -TAU * q * m as f64 / p as f64);
                }
                let c = s / p as f64;
                // roundoff of exactly band-limited profiles
                if c.norm() < 1e-15 {
                    C64::new(0.0, 0.0)
                } else {
                    c
                }
            })
            .collect();
        Self { max, values }
    }

    fn at(&self, q: i64) -> C64 {
        let idx = q + self.max as i64;
        if idx < 0 || idx as usize >= self.values.len() {
            C64::new(0.0, 0.0)
        } else {
            self.values[idx as usize]
        }
    }

    /// `[r, s] -> f_{r - s}`.
    fn toeplitz(&self, rows: &[i64], cols: &[i64]) -> CMat {
        CMat::from_fn(rows.len(), cols.len(), |i, j| self.at(rows[i] - cols[j]))
    }
}

fn check_order(order: usize, profiles: &[&GratingProfile]) -> Result<()> {
    if order > 2 {
        return Err(Error::Config(format!("perturbation order {order} exceeds 2")));
    }
    if order > 0 && profiles.iter().any(|p| !p.is_smooth() && !p.is_flat()) {
        return Err(Error::Config(
            "perturbation orders above zero need smooth profiles".into(),
        ));
    }
    Ok(())
}

/// Mode matrices of the first `order + 1` terms for the region above the
/// profile, deviations measured from the profile's mean height.
fn semi_terms(kappa: C64, profile: &GratingProfile, order: usize, modes: &Modes) -> Vec<CMat> {
    let n = modes.out.len();
    let out = &modes.out;
    let b: Vec<C64> = out.iter().map(|&r| beta(kappa, modes.alpha(r))).collect();
    let mut terms = vec![CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.0, -1.0) * b[i]
        } else {
            C64::new(0.0, 0.0)
        }
    })];
    if order == 0 || profile.is_flat() {
        terms.extend((0..order).map(|_| CMat::zeros(n, n)));
        return terms;
    }
    let f = ProfileCoefficients::new(profile, 1, modes.max_shift());
    let y1 = CMat::from_fn(n, n, |i, j| {
        let (r, s) = (out[i], out[j]);
        let fr = f.at(r - s);
        fr * (-modes.wavenumber(r - s) * modes.alpha(s) - b[i] * b[j] + b[j] * b[j])
    });
    terms.push(y1);
    if order >= 2 {
        let g = ProfileCoefficients::new(profile, 2, modes.max_shift());
        let pad = &modes.pad;
        let bq: Vec<C64> = pad.iter().map(|&q| beta(kappa, modes.alpha(q))).collect();
        let left = CMat::from_fn(n, pad.len(), |i, j| f.at(out[i] - pad[j]) * bq[j]);
        let right = f.toeplitz(pad, out);
        let x = &left * &right;
        let y2 = CMat::from_fn(n, n, |i, j| {
            let gr = g.at(out[i] - out[j]);
            C64::new(0.0, 1.0) * b[i] * (x[(i, j)] * b[j] - b[i] * gr * b[j] - gr * b[j] * b[j])
        });
        terms.push(y2);
    }
    terms
}

/// Perturbation-series approximation `sum_{l <= order} Y_l` of the DtN map of
/// the half-plane above or below `profile` at wavenumber `kappa`.
pub fn dtn_series_semi(
    kappa: C64,
    profile: &GratingProfile,
    region: Region,
    order: usize,
    qp: &QuasiPeriodicity,
    n: usize,
) -> Result<TransmissionOperator> {
    check_order(order, &[profile])?;
    beta_multiplier(kappa, qp, n)?;
    let modes = Modes::new(*qp, n);
    let terms = semi_terms(kappa, profile, order, &modes);
    let mut total = CMat::zeros(n, n);
    for (l, t) in terms.iter().enumerate() {
        // reflecting x2 -> -x2 maps the lower region onto the upper one with -F
        let s = region.sign().powi(l as i32);
        total += t * faer::Scale(C64::new(s, 0.0));
    }
    Ok(TransmissionOperator {
        matrix: fourier::to_nodal(qp, &total),
        family: Family::Semi { order, region },
        sigma: kappa.im,
    })
}

/// Blocks of a bounded layer's DtN approximation, `[[tt, tb], [bt, bb]]`,
/// mapping Dirichlet data on the top and bottom interfaces to outward
/// normal derivatives there.
#[derive(Clone, Debug)]
pub struct SlabTransmission {
    pub tt: TransmissionOperator,
    pub tb: TransmissionOperator,
    pub bt: TransmissionOperator,
    pub bb: TransmissionOperator,
}

/// Stable `coth z` and `csch z`.
fn coth_csch(z: C64) -> (C64, C64) {
    let one = C64::new(1.0, 0.0);
    if z.re <= 0.0 {
        let e2 = (z * 2.0).exp();
        let e1 = z.exp();
        ((e2 + one) / (e2 - one), e1 * 2.0 / (e2 - one))
    } else {
        let e2 = (-z * 2.0).exp();
        let e1 = (-z).exp();
        ((one + e2) / (one - e2), e1 * 2.0 / (one - e2))
    }
}

type Block = [[CMat; 2]; 2];

struct SlabSymbols {
    kappa: C64,
    beta: Vec<C64>,
    coth: Vec<C64>,
    csch: Vec<C64>,
}

impl SlabSymbols {
    /// `shch_m(T) / sinh T`.
    fn a(&self, m: usize, q: usize) -> C64 {
        if m % 2 == 1 {
            self.coth[q]
        } else {
            C64::new(1.0, 0.0)
        }
    }

    /// `shch_m(0) / sinh T`.
    fn b(&self, m: usize, q: usize) -> C64 {
        if m % 2 == 1 {
            self.csch[q]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    fn p(&self, m: usize, q: usize) -> C64 {
        (C64::new(0.0, 1.0) * self.beta[q]).powi(m as i32)
    }

    /// Column multipliers of `C_m` (`correction = true`) or `S_m`.
    fn multiplier(&self, m: usize, i: usize, j: usize, q: usize, correction: bool) -> C64 {
        let sgn = |e: usize| if e % 2 == 0 { 1.0 } else { -1.0 };
        let p = self.p(m, q);
        if correction {
            let k = m + 1;
            match (i, j) {
                (0, 0) => self.a(k, q) * p,
                (0, 1) => self.b(k, q) * p * sgn(m + 1),
                (1, 0) => -self.b(k, q) * p,
                _ => self.a(k, q) * p * sgn(m),
            }
        } else {
            match (i, j) {
                (0, 0) => self.a(m, q) * p,
                (0, 1) => self.b(m, q) * p * sgn(m),
                (1, 0) => self.b(m, q) * p,
                _ => self.a(m, q) * p * sgn(m),
            }
        }
    }
}

/// Bounded-layer DtN series between `top` and `bottom`.
pub fn dtn_series_slab(
    kappa: C64,
    top: &GratingProfile,
    bottom: &GratingProfile,
    order: usize,
    qp: &QuasiPeriodicity,
    n: usize,
) -> Result<SlabTransmission> {
    check_order(order, &[top, bottom])?;
    let h = top.mean_height - bottom.mean_height;
    if !(h > 0.0) {
        return Err(Error::Geometry(format!("layer thickness {h} is not positive")));
    }
    let modes = Modes::new(*qp, n);
    let pad = &modes.pad;
    let mp = pad.len();
    let beta_pad: Vec<C64> = pad.iter().map(|&q| beta(kappa, modes.alpha(q))).collect();
    let mut coth = Vec::with_capacity(mp);
    let mut csch = Vec::with_capacity(mp);
    for (idx, b) in beta_pad.iter().enumerate() {
        let t = C64::new(0.0, h) * b;
        let (c, s) = coth_csch(t);
        if !(c.is_finite() && s.is_finite()) || (kappa.im == 0.0 && t.sinh().norm() < 1e-12) {
            return Err(Error::Singular {
                context: format!("layer DtN symbol at mode {}", pad[idx]),
                estimate: f64::INFINITY,
            });
        }
        coth.push(c);
        csch.push(s);
    }
    let sym = SlabSymbols {
        kappa,
        beta: beta_pad,
        coth,
        csch,
    };
    let out_offset = (pad.len() - n) / 2;
    let out_idx: Vec<usize> = (0..n).map(|i| i + out_offset).collect();
    debug_assert!(out_idx.iter().zip(&modes.out).all(|(&i, &r)| pad[i] == r));

    let i1 = C64::new(0.0, 1.0);
    let y0 = |i: usize, j: usize, q: usize| -> C64 {
        let ib = i1 * sym.beta[q];
        if i == j {
            ib * sym.coth[q]
        } else {
            -ib * sym.csch[q]
        }
    };
    let zero_block = |rows: usize, cols: usize| -> Block {
        [
            [CMat::zeros(rows, cols), CMat::zeros(rows, cols)],
            [CMat::zeros(rows, cols), CMat::zeros(rows, cols)],
        ]
    };

    // powers of the deviations, per profile
    let shift = modes.max_shift();
    let coeffs: Vec<[ProfileCoefficients; 2]> = (1..=order.max(1))
        .map(|m| {
            [
                ProfileCoefficients::new(top, m as i32, shift),
                ProfileCoefficients::new(bottom, m as i32, shift),
            ]
        })
        .collect();
    let flat = [top.is_flat(), bottom.is_flat()];

    // S_m or C_m on rows `rows` (pad indices) and all padded columns
    let operator = |m: usize, rows: &[usize], correction: bool| -> Block {
        let mut blk = zero_block(rows.len(), mp);
        for i in 0..2 {
            if flat[i] {
                continue;
            }
            let f = &coeffs[m - 1][i];
            for j in 0..2 {
                blk[i][j] = CMat::from_fn(rows.len(), mp, |a, c| {
                    f.at(pad[rows[a]] - pad[c]) * sym.multiplier(m, i, j, c, correction)
                });
            }
        }
        blk
    };

    // Y_m on out rows and padded columns
    let mut terms: Vec<Block> = Vec::new();
    for m in 1..=order {
        let c = operator(m, &out_idx, true);
        let mut y = zero_block(n, mp);
        for i in 0..2 {
            for j in 0..2 {
                y[i][j] = CMat::from_fn(n, mp, |a, q| {
                    let r = out_idx[a];
                    let num = sym.kappa * sym.kappa - modes.alpha(pad[r]) * modes.alpha(pad[q]);
                    -c[i][j][(a, q)] * num / (i1 * sym.beta[q])
                });
            }
        }
        // Y_0 S_m
        let s = operator(m, &out_idx, false);
        for i in 0..2 {
            for j in 0..2 {
                for l in 0..2 {
                    for a in 0..n {
                        let y0v = y0(i, l, out_idx[a]);
                        for q in 0..mp {
                            y[i][j][(a, q)] -= y0v * s[l][j][(a, q)];
                        }
                    }
                }
            }
        }
        // Y_p S_{m-p} for 1 <= p < m, through padded intermediate modes
        for p in 1..m {
            let all: Vec<usize> = (0..mp).collect();
            let s = operator(m - p, &all, false);
            for i in 0..2 {
                for j in 0..2 {
                    for l in 0..2 {
                        let prod = &terms[p - 1][i][l] * &s[l][j];
                        y[i][j] -= &prod;
                    }
                }
            }
        }
        terms.push(y);
    }

    let mut total = [[CMat::zeros(n, n), CMat::zeros(n, n)], [CMat::zeros(n, n), CMat::zeros(n, n)]];
    for i in 0..2 {
        for j in 0..2 {
            total[i][j] = CMat::from_fn(n, n, |a, b| {
                let mut v = if a == b { y0(i, j, out_idx[a]) } else { C64::new(0.0, 0.0) };
                for t in &terms {
                    v += t[i][j][(a, out_idx[b])];
                }
                v
            });
        }
    }
    let make = |m: &CMat| TransmissionOperator {
        matrix: fourier::to_nodal(qp, m),
        family: Family::Slab { order },
        sigma: kappa.im,
    };
    Ok(SlabTransmission {
        tt: make(&total[0][0]),
        tb: make(&total[0][1]),
        bt: make(&total[1][0]),
        bb: make(&total[1][1]),
    })
}

/// Direct quadrature of `d/dt int K(t - tau) phi'(tau) dtau + phi` with the
/// trigonometric log weights; used to cross-check the Hilbert symbol.
pub fn hilbert_by_quadrature(qp: &QuasiPeriodicity, phi: &[C64]) -> Vec<C64> {
    let n = phi.len();
    let scale = qp.period / TAU;
    let d = fourier::derivative(*qp, n);
    // derivatives with respect to t = 2 pi x1 / d
    let dphi: Vec<C64> = d.apply(phi).iter().map(|v| v * scale).collect();
    let w = crate::biops::log_weights(n);
    let conv: Vec<C64> = (0..n)
        .map(|i| {
            let mut s = C64::new(0.0, 0.0);
            for j in 0..n {
                s += w[(i + n - j) % n] * dphi[j];
            }
            s / TAU
        })
        .collect();
    let dconv = d.apply(&conv);
    dconv
        .iter()
        .zip(phi)
        .map(|(a, p)| a * scale + p)
        .collect()
}
