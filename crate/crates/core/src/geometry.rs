//! Periodic grating profiles, interface grids and layered-medium stacks.

use crate::error::{Error, Result};
use crate::C64;
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

/// Periodic base shape `F~(x1)` of a grating, before scaling by the roughness.
#[derive(Clone)]
pub enum ProfileShape {
    Flat,
    /// `sum_m cos[m-1] cos(m K x) + sin[m-1] sin(m K x)` with `K = 2 pi / d`.
    Trig { cos: Vec<f64>, sin: Vec<f64> },
    /// Triangle wave with values in `[0, 1]`, peak at mid-period.
    Triangle,
    /// Plateau of height one on the middle half of the period with linear
    /// ramps of the given width (fraction of the period).
    Lamellar { ramp: f64 },
    /// Tabulated closure returning `[F~, F~', F~'']`.
    Custom {
        eval: Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
        smooth: bool,
    },
}

impl fmt::Debug for ProfileShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Flat => write!(f, "Flat"),
            Self::Trig { cos, sin } => f
                .debug_struct("Trig")
                .field("cos", cos)
                .field("sin", sin)
                .finish(),
            Self::Triangle => write!(f, "Triangle"),
            Self::Lamellar { ramp } => f.debug_struct("Lamellar").field("ramp", ramp).finish(),
            Self::Custom { smooth, .. } => f.debug_struct("Custom").field("smooth", smooth).finish(),
        }
    }
}

impl ProfileShape {
    /// `amplitude * cos(K x)`.
    pub fn cosine(amplitude: f64) -> Self {
        Self::Trig {
            cos: vec![amplitude],
            sin: vec![],
        }
    }

    /// Three-mode rough cosine `pi (0.4 cos x - 0.2 cos 2x + 0.4 cos 3x)`.
    pub fn rough_cosine() -> Self {
        Self::Trig {
            cos: vec![0.4 * PI, -0.2 * PI, 0.4 * PI],
            sin: vec![],
        }
    }

    pub fn is_smooth(&self) -> bool {
        match self {
            Self::Flat | Self::Trig { .. } => true,
            Self::Triangle | Self::Lamellar { .. } => false,
            Self::Custom { smooth, .. } => *smooth,
        }
    }

    pub fn is_flat(&self) -> bool {
        match self {
            Self::Flat => true,
            Self::Trig { cos, sin } => cos.iter().chain(sin).all(|c| *c == 0.0),
            _ => false,
        }
    }

    /// `[F~, F~', F~'']` at `x` for period `d`.
    pub fn eval(&self, x: f64, d: f64) -> [f64; 3] {
        match self {
            Self::Flat => [0.0; 3],
            Self::Trig { cos, sin } => {
                let kap = TAU / d;
                let mut out = [0.0; 3];
                for (m, &a) in cos.iter().enumerate() {
                    let w = (m + 1) as f64 * kap;
                    let (s, c) = (w * x).sin_cos();
                    out[0] += a * c;
                    out[1] -= a * w * s;
                    out[2] -= a * w * w * c;
                }
                for (m, &b) in sin.iter().enumerate() {
                    let w = (m + 1) as f64 * kap;
                    let (s, c) = (w * x).sin_cos();
                    out[0] += b * s;
                    out[1] += b * w * c;
                    out[2] -= b * w * w * s;
                }
                out
            }
            Self::Triangle => {
                let t = (x / d).rem_euclid(1.0);
                if t < 0.5 {
                    [2.0 * t, 2.0 / d, 0.0]
                } else {
                    [2.0 - 2.0 * t, -2.0 / d, 0.0]
                }
            }
            Self::Lamellar { ramp } => {
                let w = ramp.clamp(1e-6, 0.49);
                let t = (x / d).rem_euclid(1.0);
                let (a0, a1) = (0.25 - 0.5 * w, 0.25 + 0.5 * w);
                let (b0, b1) = (0.75 - 0.5 * w, 0.75 + 0.5 * w);
                let slope = 1.0 / (w * d);
                if t < a0 || t >= b1 {
                    [0.0, 0.0, 0.0]
                } else if t < a1 {
                    [(t - a0) / w, slope, 0.0]
                } else if t < b0 {
                    [1.0, 0.0, 0.0]
                } else {
                    [(b1 - t) / w, -slope, 0.0]
                }
            }
            Self::Custom { eval, .. } => eval(x),
        }
    }
}

/// One periodic interface `x2 = mean_height + roughness * F~(x1)`.
#[derive(Clone, Debug)]
pub struct GratingProfile {
    pub mean_height: f64,
    pub roughness: f64,
    pub shape: ProfileShape,
    pub period: f64,
}

impl GratingProfile {
    pub fn new(mean_height: f64, roughness: f64, shape: ProfileShape, period: f64) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        if !(roughness >= 0.0) {
            return Err(Error::Config(format!("roughness must be non-negative, got {roughness}")));
        }
        Ok(Self {
            mean_height,
            roughness,
            shape,
            period,
        })
    }

    pub fn flat(height: f64, period: f64) -> Self {
        Self {
            mean_height: height,
            roughness: 0.0,
            shape: ProfileShape::Flat,
            period,
        }
    }

    /// Same shape shifted vertically to a new mean height.
    pub fn shifted(&self, mean_height: f64) -> Self {
        Self {
            mean_height,
            ..self.clone()
        }
    }

    pub fn height(&self, x: f64) -> f64 {
        self.mean_height + self.roughness * self.shape.eval(x, self.period)[0]
    }

    /// `[F, F', F'']` at `x`.
    pub fn eval(&self, x: f64) -> [f64; 3] {
        let [f, df, ddf] = self.shape.eval(x, self.period);
        [
            self.mean_height + self.roughness * f,
            self.roughness * df,
            self.roughness * ddf,
        ]
    }

    pub fn base(&self, x: f64) -> f64 {
        self.shape.eval(x, self.period)[0]
    }

    pub fn is_smooth(&self) -> bool {
        self.shape.is_smooth()
    }

    pub fn is_flat(&self) -> bool {
        self.roughness == 0.0 || self.shape.is_flat()
    }

    /// `(min, max)` of the profile by dense sampling and golden-section refinement.
    pub fn extrema(&self) -> (f64, f64) {
        if self.is_flat() {
            return (self.mean_height, self.mean_height);
        }
        const SAMPLES: usize = 4096;
        let h = self.period / SAMPLES as f64;
        let vals: Vec<f64> = (0..SAMPLES).map(|i| self.height(i as f64 * h)).collect();
        let (mut imin, mut imax) = (0, 0);
        for (i, v) in vals.iter().enumerate() {
            if *v < vals[imin] {
                imin = i;
            }
            if *v > vals[imax] {
                imax = i;
            }
        }
        let refine = |i: usize, sign: f64| {
            let c = i as f64 * h;
            let best = golden_max(|x| sign * self.height(x), c - h, c + h);
            (sign * best).max(sign * vals[i]) * sign
        };
        (refine(imin, -1.0), refine(imax, 1.0))
    }
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

/// `beta = (k^2 - alpha_r^2)^{1/2}` with the branch cut on the negative
/// imaginary axis, so that `sqrt(1) = 1` and negative radicands map to the
/// positive imaginary axis.
pub fn beta(k: C64, alpha_r: f64) -> C64 {
    let w = k * k - alpha_r * alpha_r;
    branch_sqrt(w)
}

pub fn branch_sqrt(w: C64) -> C64 {
    let mut theta = w.im.atan2(w.re);
    if theta < -0.5 * PI {
        theta += TAU;
    }
    C64::from_polar(w.norm().sqrt(), 0.5 * theta)
}

/// Bloch phase and period of the quasi-periodic setting.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuasiPeriodicity {
    pub alpha: f64,
    pub period: f64,
}

impl QuasiPeriodicity {
    pub fn new(alpha: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::Config(format!("period must be positive, got {period}")));
        }
        Ok(Self { alpha, period })
    }

    pub fn alpha_r(&self, r: i64) -> f64 {
        self.alpha + TAU * r as f64 / self.period
    }

    pub fn beta_r(&self, k: C64, r: i64) -> C64 {
        beta(k, self.alpha_r(r))
    }

    /// Incident plane wave `exp(i(alpha x1 - beta x2))` for wavenumber `k0`.
    pub fn incidence(&self, k0: f64) -> Incidence {
        Incidence {
            alpha: self.alpha,
            beta: beta(C64::new(k0, 0.0), self.alpha).re,
        }
    }

    /// Mode indices `-n/2 .. n/2`.
    pub fn modes(n: usize) -> impl Iterator<Item = i64> {
        let h = (n / 2) as i64;
        -h..(n as i64 - h)
    }
}

/// Downgoing plane wave `exp(i(alpha x1 - beta x2))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incidence {
    pub alpha: f64,
    pub beta: f64,
}

impl Incidence {
    pub fn value(&self, x1: f64, x2: f64) -> C64 {
        C64::from_polar(1.0, self.alpha * x1 - self.beta * x2)
    }

    pub fn gradient(&self, x1: f64, x2: f64) -> [C64; 2] {
        let u = self.value(x1, x2);
        [u * C64::new(0.0, self.alpha), u * C64::new(0.0, -self.beta)]
    }
}

/// Orientation of the non-unit normal `±(-F', 1)` carried by a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Up,
    Down,
}

impl Side {
    pub fn sign(self) -> f64 {
        match self {
            Side::Up => 1.0,
            Side::Down => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Side::Up => Side::Down,
            Side::Down => Side::Up,
        }
    }
}

/// Equispaced nodes on one interface.
#[derive(Clone, Debug)]
pub struct InterfaceGrid {
    pub n: usize,
    pub period: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub slope: Vec<f64>,
    pub curvature: Vec<f64>,
    pub smooth: bool,
    pub flat: bool,
    pub orientation: Side,
}

pub const MIN_NODES: usize = 4;

pub fn build_grid(profile: &GratingProfile, n: usize) -> Result<InterfaceGrid> {
    if n % 2 != 0 || n < MIN_NODES {
        return Err(Error::Config(format!(
            "grid size must be even and at least {MIN_NODES}, got {n}"
        )));
    }
    let h = profile.period / n as f64;
    let mut grid = InterfaceGrid {
        n,
        period: profile.period,
        x1: Vec::with_capacity(n),
        x2: Vec::with_capacity(n),
        slope: Vec::with_capacity(n),
        curvature: Vec::with_capacity(n),
        smooth: profile.is_smooth(),
        flat: profile.is_flat(),
        orientation: Side::Up,
    };
    for m in 0..n {
        let x = m as f64 * h;
        let [f, df, ddf] = profile.eval(x);
        grid.x1.push(x);
        grid.x2.push(f);
        grid.slope.push(df);
        grid.curvature.push(ddf);
    }
    Ok(grid)
}

impl InterfaceGrid {
    pub fn with_orientation(mut self, side: Side) -> Self {
        self.orientation = side;
        self
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        [self.x1[i], self.x2[i]]
    }

    /// Non-unit normal at node `i` for the grid orientation.
    pub fn normal(&self, i: usize) -> [f64; 2] {
        let s = self.orientation.sign();
        [-s * self.slope[i], s]
    }

    pub fn normals(&self) -> Vec<[f64; 2]> {
        (0..self.n).map(|i| self.normal(i)).collect()
    }

    /// `|x'(x1)| = sqrt(1 + F'^2)`.
    pub fn jacobian(&self, i: usize) -> f64 {
        (1.0 + self.slope[i] * self.slope[i]).sqrt()
    }

    pub fn min_height(&self) -> f64 {
        self.x2.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_height(&self) -> f64 {
        self.x2.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Vertical offset `c` with `self.x2 = other.x2 + c` at every node, if any.
    pub fn vertical_offset(&self, other: &InterfaceGrid) -> Option<f64> {
        if self.n != other.n || self.period != other.period {
            return None;
        }
        let c = self.x2[0] - other.x2[0];
        let tol = 1e-13 * (1.0 + c.abs());
        let same = self
            .x2
            .iter()
            .zip(&other.x2)
            .all(|(a, b)| ((a - b) - c).abs() <= tol)
            && self.slope == other.slope
            && self.curvature == other.curvature;
        same.then_some(c)
    }
}

/// Problems detected by [`LayerStack::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    WavenumberCount { profiles: usize, wavenumbers: usize },
    NonPositiveWavenumber { layer: usize },
    ProfileOverlap { upper: usize, lower: usize },
    StripCutCount { expected: usize, found: usize },
    StripCutAbove { cut: usize, value: f64, limit: f64 },
    StripCutBelow { cut: usize, value: f64, limit: f64 },
    NearWood { layer: usize, mode: i64 },
}

/// Ordered layers `Omega_0 .. Omega_{N+1}` separated by `N+1` gratings.
#[derive(Clone, Debug)]
pub struct LayerStack {
    pub profiles: Vec<GratingProfile>,
    pub wavenumbers: Vec<f64>,
    pub qp: QuasiPeriodicity,
    pub strip_cuts: Option<Vec<f64>>,
    pub wood_tol: f64,
}

pub const DEFAULT_WOOD_TOL: f64 = 1e-6;

impl LayerStack {
    pub fn new(profiles: Vec<GratingProfile>, wavenumbers: Vec<f64>, qp: QuasiPeriodicity) -> Self {
        Self {
            profiles,
            wavenumbers,
            qp,
            strip_cuts: None,
            wood_tol: DEFAULT_WOOD_TOL,
        }
    }

    pub fn with_strip_cuts(mut self, cuts: Vec<f64>) -> Self {
        self.strip_cuts = Some(cuts);
        self
    }

    /// Number of interior layers `N` (the stack has `N + 1` profiles).
    pub fn interior_layers(&self) -> usize {
        self.profiles.len().saturating_sub(1)
    }

    pub fn incidence(&self) -> Incidence {
        self.qp.incidence(self.wavenumbers[0])
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.wavenumbers.len() != self.profiles.len() + 1 {
            out.push(Violation::WavenumberCount {
                profiles: self.profiles.len(),
                wavenumbers: self.wavenumbers.len(),
            });
        }
        for (j, k) in self.wavenumbers.iter().enumerate() {
            if !(*k > 0.0) {
                out.push(Violation::NonPositiveWavenumber { layer: j });
            }
        }
        let ext: Vec<(f64, f64)> = self.profiles.iter().map(|p| p.extrema()).collect();
        for j in 1..ext.len() {
            if min_gap(&self.profiles[j - 1], &self.profiles[j]) <= 0.0 {
                out.push(Violation::ProfileOverlap {
                    upper: j - 1,
                    lower: j,
                });
            }
        }
        if let Some(cuts) = &self.strip_cuts {
            if cuts.len() != self.profiles.len() + 1 {
                out.push(Violation::StripCutCount {
                    expected: self.profiles.len() + 1,
                    found: cuts.len(),
                });
            } else {
                for (j, &(lo, hi)) in ext.iter().enumerate() {
                    if !(cuts[j] > hi) {
                        out.push(Violation::StripCutBelow {
                            cut: j,
                            value: cuts[j],
                            limit: hi,
                        });
                    }
                    if !(cuts[j + 1] < lo) {
                        out.push(Violation::StripCutAbove {
                            cut: j + 1,
                            value: cuts[j + 1],
                            limit: lo,
                        });
                    }
                }
            }
        }
        for (j, &k) in self.wavenumbers.iter().enumerate() {
            if let Some(mode) = wood_mode(k, &self.qp, self.wood_tol * k) {
                out.push(Violation::NearWood { layer: j, mode });
            }
        }
        out
    }

    /// Cuts halfway between consecutive profiles, with the outer cuts at
    /// `margin` from the extreme profiles.
    pub fn midway_cuts(&self, margin: f64) -> Vec<f64> {
        let ext: Vec<(f64, f64)> = self.profiles.iter().map(|p| p.extrema()).collect();
        let mut cuts = Vec::with_capacity(ext.len() + 1);
        cuts.push(ext[0].1 + margin);
        for j in 1..ext.len() {
            cuts.push(0.5 * (ext[j - 1].0 + ext[j].1));
        }
        cuts.push(ext[ext.len() - 1].0 - margin);
        cuts
    }
}

/// Smallest vertical gap `F_upper - F_lower`, sampled on 4096 points and
/// refined around the minimum.
pub fn min_gap(upper: &GratingProfile, lower: &GratingProfile) -> f64 {
    const SAMPLES: usize = 4096;
    let h = upper.period / SAMPLES as f64;
    let gap = |x: f64| upper.height(x) - lower.height(x);
    let (i, g) = (0..SAMPLES)
        .map(|i| (i, gap(i as f64 * h)))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let c = i as f64 * h;
    g.min(-golden_max(|x| -gap(x), c - h, c + h))
}

/// First mode `r` with `|beta_r| <= tol`, scanning the modes near `|alpha_r| = k`.
pub fn wood_mode(k: f64, qp: &QuasiPeriodicity, tol: f64) -> Option<i64> {
    let step = TAU / qp.period;
    let lo = ((-k - qp.alpha) / step).floor() as i64 - 1;
    let hi = ((k - qp.alpha) / step).ceil() as i64 + 1;
    (lo..=hi).find(|&r| qp.beta_r(C64::new(k, 0.0), r).norm() <= tol)
}
