//! Block-tridiagonal domain decomposition systems for layer and strip
//! partitions.
//!
//! Wire order of the unknowns: one pair per interface `j`,
//! `[f_{j,j+1}, f_{j+1,j}]`, where `f_{a,b}` is the incoming Robin data of
//! subdomain `a` on its boundary shared with `b`. Subdomain `0` holds the
//! scattered field above the stack and the last subdomain the transmitted
//! field below it.
//!
//! Convention table for interface `j` with subdomain `j` above and `j+1`
//! below:
//!
//! | operator  | approximates                                   | role                       |
//! |-----------|------------------------------------------------|----------------------------|
//! | `upper_j` | DtN of subdomain `j` (outward normal downward) | incoming of `j+1`, outgoing of `j` |
//! | `lower_j` | DtN of subdomain `j+1` (outward normal upward) | incoming of `j`, outgoing of `j+1` |

use crate::biops::OperatorCache;
use crate::dtn::{
    default_sigma, despres_operator, dtn_series_semi, dtn_series_slab, flat_transmission,
    hilbert_operator, Region, TransmissionOperator,
};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, GratingProfile, Incidence, LayerStack, Side};
use crate::linalg::{eigenvalues, matvec, matvec_add, CMat};
use crate::par;
use crate::qpgreen::DEFAULT_WINDOW;
use crate::rtr::{
    exact_dtn, rtr_layer, rtr_semi_infinite, rtr_strip, RobinPair, RtRBlock,
};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Layer subdomains, transmission operators from the bounded-layer series.
    LayerSlab,
    /// Layer subdomains, transmission operators from the half-plane series.
    LayerSemi,
    /// Strip subdomains bounded by horizontal cuts.
    Strip,
}

impl Scheme {
    pub fn is_layer(self) -> bool {
        !matches!(self, Scheme::Strip)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum OperatorFamily {
    /// Shape-perturbation DtN approximations (flat `-i beta` for strips).
    QuasiOptimal,
    /// `Z = i I`.
    Despres,
    /// `Z = i T`.
    Hilbert,
    /// Numerically exact half-plane DtN maps.
    Exact,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SigmaPolicy {
    Default,
    Fixed(f64),
    /// One value per medium `k_0 .. k_{N+1}`.
    PerLayer(Vec<f64>),
}

impl SigmaPolicy {
    pub fn sigma(&self, layer: usize, k: f64, period: f64) -> Result<f64> {
        match self {
            SigmaPolicy::Default => Ok(default_sigma(k, period)),
            SigmaPolicy::Fixed(s) => Ok(*s),
            SigmaPolicy::PerLayer(v) => v.get(layer).copied().ok_or_else(|| {
                Error::Config(format!("no sigma given for layer {layer}"))
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    pub scheme: Scheme,
    pub family: OperatorFamily,
    /// Perturbation order `L`.
    pub order: usize,
    pub sigma: SigmaPolicy,
    pub n: usize,
    pub window: f64,
}

impl SystemConfig {
    pub fn new(scheme: Scheme, n: usize) -> Self {
        Self {
            scheme,
            family: OperatorFamily::QuasiOptimal,
            order: 0,
            sigma: SigmaPolicy::Default,
            n,
            window: DEFAULT_WINDOW,
        }
    }
}

/// Transmission operators on one interface or cut.
#[derive(Clone, Debug)]
pub struct InterfaceTransmission {
    pub upper: TransmissionOperator,
    pub lower: TransmissionOperator,
}

/// Robin unknowns grouped by interface.
#[derive(Clone, Debug, PartialEq)]
pub struct RobinData {
    pub pairs: Vec<[Vec<C64>; 2]>,
}

impl RobinData {
    pub fn from_vector(x: &[C64], n: usize) -> Result<Self> {
        if n == 0 || x.len() % (2 * n) != 0 {
            return Err(Error::Dimension(format!(
                "vector of length {} is not a whole number of interface pairs of size {n}",
                x.len()
            )));
        }
        Ok(Self {
            pairs: x
                .chunks(2 * n)
                .map(|c| [c[..n].to_vec(), c[n..].to_vec()])
                .collect(),
        })
    }

    pub fn to_vector(&self) -> Vec<C64> {
        self.pairs.iter().flat_map(|[a, b]| a.iter().chain(b).copied()).collect()
    }
}

/// `A_n` with its blocks held per subdomain.
pub struct BlockTridiagonalSystem {
    pub scheme: Scheme,
    pub n: usize,
    /// Subdomains from top to bottom; the first and last are semi-infinite.
    pub subdomains: Vec<RtRBlock>,
    pub interfaces: Vec<InterfaceTransmission>,
    pub rhs: Vec<C64>,
    pub stack: LayerStack,
}

fn last(b: &RtRBlock) -> usize {
    b.boundaries() - 1
}

impl BlockTridiagonalSystem {
    /// Number of interfaces (block rows).
    pub fn pairs(&self) -> usize {
        self.subdomains.len() - 1
    }

    pub fn dim(&self) -> usize {
        2 * self.n * self.pairs()
    }

    /// Upper right block `S^{j+1}_{j,j}` of `D_j`.
    pub fn d_upper(&self, j: usize) -> &CMat {
        self.subdomains[j + 1].block(0, 0)
    }

    /// Lower left block `S^j_{j+1,j+1}` of `D_j`.
    pub fn d_lower(&self, j: usize) -> &CMat {
        let s = &self.subdomains[j];
        s.block(last(s), last(s))
    }

    /// The (1,1) block `S^{j+1}_{j,j+2}` of `U_j`, for `j + 1 < pairs()`.
    pub fn u_block(&self, j: usize) -> &CMat {
        self.subdomains[j + 1].block(0, 1)
    }

    /// The (2,2) block `S^{j+1}_{j+2,j}` of `L_j`, for `j + 1 < pairs()`.
    pub fn l_block(&self, j: usize) -> &CMat {
        self.subdomains[j + 1].block(1, 0)
    }

    fn pair_matrix(&self, a: Option<&CMat>, b: Option<&CMat>, c: Option<&CMat>, d: Option<&CMat>) -> CMat {
        let n = self.n;
        let mut m = CMat::zeros(2 * n, 2 * n);
        for (blk, r0, c0) in [(a, 0, 0), (b, 0, n), (c, n, 0), (d, n, n)] {
            if let Some(x) = blk {
                m.as_mut().submatrix_mut(r0, c0, n, n).copy_from(x);
            }
        }
        m
    }

    pub fn d_matrix(&self, j: usize) -> CMat {
        let eye = CMat::identity(self.n, self.n);
        self.pair_matrix(Some(&eye), Some(self.d_upper(j)), Some(self.d_lower(j)), Some(&eye))
    }

    pub fn u_matrix(&self, j: usize) -> CMat {
        self.pair_matrix(Some(self.u_block(j)), None, None, None)
    }

    pub fn l_matrix(&self, j: usize) -> CMat {
        self.pair_matrix(None, None, None, Some(self.l_block(j)))
    }

    /// `A_n x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.n;
        let p = self.pairs();
        assert_eq!(x.len(), self.dim(), "vector length does not match the system");
        let first = |j: usize| &x[2 * j * n..(2 * j + 1) * n];
        let second = |j: usize| &x[(2 * j + 1) * n..(2 * j + 2) * n];
        let parts = par::map_indices(p, |j| {
            let mut top = first(j).to_vec();
            matvec_add(self.d_upper(j), second(j), &mut top);
            if j + 1 < p {
                matvec_add(self.u_block(j), first(j + 1), &mut top);
            }
            let mut bot = second(j).to_vec();
            matvec_add(self.d_lower(j), first(j), &mut bot);
            if j > 0 {
                matvec_add(self.l_block(j - 1), second(j - 1), &mut bot);
            }
            (top, bot)
        });
        let mut y = Vec::with_capacity(self.dim());
        for (t, b) in parts {
            y.extend(t);
            y.extend(b);
        }
        y
    }

    /// The full matrix `A_n`.
    pub fn densify(&self) -> CMat {
        let n2 = 2 * self.n;
        let p = self.pairs();
        let mut a = CMat::zeros(self.dim(), self.dim());
        for j in 0..p {
            a.as_mut().submatrix_mut(j * n2, j * n2, n2, n2).copy_from(&self.d_matrix(j));
            if j + 1 < p {
                a.as_mut()
                    .submatrix_mut(j * n2, (j + 1) * n2, n2, n2)
                    .copy_from(&self.u_matrix(j));
                a.as_mut()
                    .submatrix_mut((j + 1) * n2, j * n2, n2, n2)
                    .copy_from(&self.l_matrix(j));
            }
        }
        a
    }

    /// Incoming data of subdomain `s`, boundaries ordered top to bottom.
    pub fn incoming(&self, solution: &[C64], s: usize) -> Vec<C64> {
        let n = self.n;
        let mut g = Vec::with_capacity(2 * n);
        if s > 0 {
            let j = s - 1;
            g.extend_from_slice(&solution[(2 * j + 1) * n..(2 * j + 2) * n]);
        }
        if s < self.pairs() {
            g.extend_from_slice(&solution[2 * s * n..(2 * s + 1) * n]);
        }
        g
    }
}

pub const MAX_SPECTRUM_DIM: usize = 20_000;

/// Eigenvalues of the densified operator.
pub fn dense_spectrum(system: &BlockTridiagonalSystem) -> Result<Vec<C64>> {
    if system.dim() > MAX_SPECTRUM_DIM {
        return Err(Error::Dimension(format!(
            "spectrum of a {}-dimensional system exceeds the limit {MAX_SPECTRUM_DIM}",
            system.dim()
        )));
    }
    eigenvalues(&system.densify())
}

fn sigmas(stack: &LayerStack, cfg: &SystemConfig) -> Result<Vec<f64>> {
    stack
        .wavenumbers
        .iter()
        .enumerate()
        .map(|(j, &k)| cfg.sigma.sigma(j, k, stack.qp.period))
        .collect()
}

fn kappa(k: f64, sigma: f64) -> C64 {
    C64::new(k, sigma)
}

fn fixed_family(family: OperatorFamily, stack: &LayerStack, n: usize) -> Option<TransmissionOperator> {
    match family {
        OperatorFamily::Despres => Some(despres_operator(n)),
        OperatorFamily::Hilbert => Some(hilbert_operator(n, &stack.qp)),
        _ => None,
    }
}

fn layer_transmission(stack: &LayerStack, cfg: &SystemConfig) -> Result<Vec<InterfaceTransmission>> {
    let n = cfg.n;
    let nn = stack.interior_layers();
    let qp = stack.qp;
    if let Some(z) = fixed_family(cfg.family, stack, n) {
        return Ok((0..=nn)
            .map(|_| InterfaceTransmission {
                upper: z.clone(),
                lower: z.clone(),
            })
            .collect());
    }
    let k = &stack.wavenumbers;
    let f = &stack.profiles;
    if cfg.family == OperatorFamily::Exact {
        return par::map_indices(nn + 1, |j| {
            let cache = OperatorCache::new(qp, cfg.window)?;
            Ok(InterfaceTransmission {
                upper: exact_dtn(C64::new(k[j], 0.0), &f[j], Region::Above, &cache, n)?,
                lower: exact_dtn(C64::new(k[j + 1], 0.0), &f[j], Region::Below, &cache, n)?,
            })
        })
        .into_iter()
        .collect();
    }
    let s = sigmas(stack, cfg)?;
    let semi = |layer: usize, j: usize, region: Region| {
        dtn_series_semi(kappa(k[layer], s[layer]), &f[j], region, cfg.order, &qp, n)
    };
    match cfg.scheme {
        Scheme::LayerSemi => par::map_indices(nn + 1, |j| {
            Ok(InterfaceTransmission {
                upper: semi(j, j, Region::Above)?,
                lower: semi(j + 1, j, Region::Below)?,
            })
        })
        .into_iter()
        .collect(),
        Scheme::LayerSlab => {
            // slab series of layer j between f[j-1] and f[j]
            let slabs: Vec<_> = par::map_indices(nn, |i| {
                let j = i + 1;
                dtn_series_slab(kappa(k[j], s[j]), &f[j - 1], &f[j], cfg.order, &qp, n)
            })
            .into_iter()
            .collect::<Result<_>>()?;
            (0..=nn)
                .map(|j| {
                    let upper = if j == 0 {
                        semi(0, 0, Region::Above)?
                    } else {
                        slabs[j - 1].bb.clone()
                    };
                    let lower = if j == nn {
                        semi(nn + 1, nn, Region::Below)?
                    } else {
                        slabs[j].tt.clone()
                    };
                    Ok(InterfaceTransmission { upper, lower })
                })
                .collect()
        }
        Scheme::Strip => unreachable!("strip operators are built by strip_transmission"),
    }
}

fn strip_transmission(stack: &LayerStack, cuts: &[f64], cfg: &SystemConfig) -> Result<Vec<InterfaceTransmission>> {
    let n = cfg.n;
    if let Some(z) = fixed_family(cfg.family, stack, n) {
        return Ok(cuts
            .iter()
            .map(|_| InterfaceTransmission {
                upper: z.clone(),
                lower: z.clone(),
            })
            .collect());
    }
    let s = match cfg.family {
        OperatorFamily::Exact => vec![0.0; stack.wavenumbers.len()],
        _ => sigmas(stack, cfg)?,
    };
    // cut c lies in the medium k_c
    (0..cuts.len())
        .map(|c| {
            let z = flat_transmission(C64::new(stack.wavenumbers[c], 0.0), s[c], &stack.qp, n)?;
            Ok(InterfaceTransmission {
                upper: z.clone(),
                lower: z,
            })
        })
        .collect()
}

fn check_stack(stack: &LayerStack, scheme: Scheme) -> Result<()> {
    let mut stack = stack.clone();
    if scheme.is_layer() {
        stack.strip_cuts = None;
    }
    let v = stack.validate();
    if !v.is_empty() {
        return Err(Error::Config(format!("invalid layer stack: {v:?}")));
    }
    Ok(())
}

/// Strip cuts of the stack, defaulting to midway cuts with margin `0.5`.
pub fn strip_cuts(stack: &LayerStack) -> Vec<f64> {
    stack.strip_cuts.clone().unwrap_or_else(|| stack.midway_cuts(0.5))
}

pub fn assemble_system(stack: &LayerStack, cfg: &SystemConfig) -> Result<BlockTridiagonalSystem> {
    let mut stack = stack.clone();
    if cfg.scheme == Scheme::Strip && stack.strip_cuts.is_none() {
        stack.strip_cuts = Some(stack.midway_cuts(0.5));
    }
    check_stack(&stack, cfg.scheme)?;
    let n = cfg.n;
    let nn = stack.interior_layers();
    let qp = stack.qp;
    let d = qp.period;
    let k: Vec<C64> = stack.wavenumbers.iter().map(|&v| C64::new(v, 0.0)).collect();
    let f = stack.profiles.clone();
    let (interfaces, subdomains) = if cfg.scheme.is_layer() {
        let zs = layer_transmission(&stack, cfg)?;
        let count = nn + 2;
        let subs = par::map_indices(count, |s| {
            let cache = OperatorCache::new(qp, cfg.window)?;
            if s == 0 {
                let z = &zs[0];
                rtr_semi_infinite(k[0], &f[0], Region::Above, RobinPair { incoming: &z.lower, outgoing: &z.upper }, &cache, n)
            } else if s == count - 1 {
                let z = &zs[nn];
                rtr_semi_infinite(k[nn + 1], &f[nn], Region::Below, RobinPair { incoming: &z.upper, outgoing: &z.lower }, &cache, n)
            } else {
                let (zt, zb) = (&zs[s - 1], &zs[s]);
                rtr_layer(
                    k[s],
                    &f[s - 1],
                    &f[s],
                    RobinPair { incoming: &zt.upper, outgoing: &zt.lower },
                    RobinPair { incoming: &zb.lower, outgoing: &zb.upper },
                    &cache,
                    n,
                )
            }
        });
        (zs, subs)
    } else {
        let cuts = strip_cuts(&stack);
        let zs = strip_transmission(&stack, &cuts, cfg)?;
        let count = nn + 3;
        let subs = par::map_indices(count, |s| {
            let cache = OperatorCache::new(qp, cfg.window)?;
            if s == 0 {
                let z = &zs[0];
                rtr_semi_infinite(k[0], &GratingProfile::flat(cuts[0], d), Region::Above, RobinPair { incoming: &z.lower, outgoing: &z.upper }, &cache, n)
            } else if s == count - 1 {
                let z = &zs[nn + 1];
                rtr_semi_infinite(k[nn + 1], &GratingProfile::flat(cuts[nn + 1], d), Region::Below, RobinPair { incoming: &z.upper, outgoing: &z.lower }, &cache, n)
            } else {
                let (zt, zb) = (&zs[s - 1], &zs[s]);
                rtr_strip(
                    k[s - 1],
                    k[s],
                    &f[s - 1],
                    cuts[s - 1],
                    cuts[s],
                    RobinPair { incoming: &zt.upper, outgoing: &zt.lower },
                    RobinPair { incoming: &zb.lower, outgoing: &zb.upper },
                    &cache,
                    n,
                )
            }
        });
        (zs, subs)
    };
    let subdomains: Vec<RtRBlock> = subdomains.into_iter().collect::<Result<_>>()?;
    if let Some(s) = subdomains.iter().position(|b| !b.is_finite()) {
        return Err(Error::Singular {
            context: format!("subdomain {s} produced non-finite RtR blocks"),
            estimate: f64::INFINITY,
        });
    }
    let mut system = BlockTridiagonalSystem {
        scheme: cfg.scheme,
        n,
        subdomains,
        interfaces,
        rhs: Vec::new(),
        stack,
    };
    system.rhs = assemble_rhs(&system, C64::new(1.0, 0.0))?;
    Ok(system)
}

/// Right-hand side for the incident wave `amplitude * e^{i alpha x1 - i beta x2}`.
pub fn assemble_rhs(system: &BlockTridiagonalSystem, amplitude: C64) -> Result<Vec<C64>> {
    let n = system.n;
    let inc = system.stack.incidence();
    let grid = &system.subdomains[0].grids[0];
    if grid.orientation != Side::Down {
        return Err(Error::Geometry("top subdomain boundary must carry a downward normal".into()));
    }
    let z = &system.interfaces[0];
    let (u, dn) = incident_traces(&inc, grid, amplitude);
    let zin = z.lower.apply(&u);
    let zout = z.upper.apply(&u);
    let mut b = vec![C64::new(0.0, 0.0); system.dim()];
    for m in 0..n {
        b[m] = -(dn[m] + zin[m]);
        b[n + m] = -(dn[m] - zout[m]);
    }
    Ok(b)
}

/// Trace and normal derivative (grid normal) of the incident wave.
pub fn incident_traces(inc: &Incidence, grid: &crate::geometry::InterfaceGrid, amplitude: C64) -> (Vec<C64>, Vec<C64>) {
    let n = grid.n;
    let mut u = Vec::with_capacity(n);
    let mut dn = Vec::with_capacity(n);
    for m in 0..n {
        let [x1, x2] = grid.point(m);
        let nu = grid.normal(m);
        let g = inc.gradient(x1, x2);
        u.push(amplitude * inc.value(x1, x2));
        dn.push(amplitude * (g[0] * nu[0] + g[1] * nu[1]));
    }
    (u, dn)
}

/// Grid of interface `j` as seen from the subdomain above it.
pub fn interface_grid(system: &BlockTridiagonalSystem, j: usize) -> &crate::geometry::InterfaceGrid {
    let s = &system.subdomains[j];
    &s.grids[last(s)]
}

/// Grid nodes of profile `j` (for checks of the transmission conditions).
pub fn profile_grid(system: &BlockTridiagonalSystem, j: usize) -> Result<crate::geometry::InterfaceGrid> {
    build_grid(&system.stack.profiles[j], system.n)
}

/// `A_n x - b` relative to `|b|`.
pub fn relative_residual(system: &BlockTridiagonalSystem, x: &[C64]) -> f64 {
    let ax = system.apply(x);
    let num: f64 = ax.iter().zip(&system.rhs).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let den: f64 = system.rhs.iter().map(|b| b.norm_sqr()).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

/// `A_n` applied through its densified form, for cross-checks.
pub fn dense_apply(system: &BlockTridiagonalSystem, x: &[C64]) -> Vec<C64> {
    matvec(&system.densify(), x)
}
