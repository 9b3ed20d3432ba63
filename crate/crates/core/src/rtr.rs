//! Robin-to-Robin maps of semi-infinite domains, bounded layers and strips.
//!
//! Orientation table (non-unit normals, densities weighted per `dx1`):
//!
//! | quantity                         | convention                                   |
//! |----------------------------------|----------------------------------------------|
//! | Robin boundary grid              | outward normal of its subdomain              |
//! | single layer, trace              | `S`                                          |
//! | single layer, normal derivative  | `1/2 + K^T` on the side the normal leaves    |
//! | double layer, trace              | `+-1/2 + K`, `+` on the side `nu` points to  |
//! | double layer, normal derivative  | `N`, continuous                              |
//! | strip interface normal `nu`      | `(F', -1)`, pointing into the lower medium   |
//! | incoming data                    | `d_n w + Z_in w`                             |
//! | outgoing data                    | `d_n w - Z_out w`                            |
//!
//! Every map is `S = I - (Z_in + Z_out) T A^{-1} E`, where `A` is the
//! boundary integral system, `T` the Dirichlet traces of the representation
//! and `E` injects incoming data into the Robin rows.

use crate::biops::{LayerOperators, OperatorCache};
use crate::dtn::{Family, Region, TransmissionOperator};
use crate::error::{Error, Result};
use crate::geometry::{build_grid, GratingProfile, InterfaceGrid, Side};
use crate::linalg::{assemble_blocks, block, checked_inverse, identity, matvec, CMat};
use crate::C64;

/// Largest condition estimate accepted for an interior system.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SubdomainKind {
    SemiInfinite(Region),
    Layer,
    Strip,
    HomogeneousStrip,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Potential {
    Single,
    Double,
}

#[derive(Clone, Debug)]
pub struct Source {
    pub grid: InterfaceGrid,
    pub potential: Potential,
}

/// Part of a subdomain filled by one medium, bounded by the given profiles.
#[derive(Clone, Debug)]
pub struct FieldPiece {
    pub wavenumber: C64,
    pub upper: Option<GratingProfile>,
    pub lower: Option<GratingProfile>,
    /// Indices into `Representation::sources`.
    pub sources: Vec<usize>,
}

/// Layer-potential representation of the subdomain field. Source `i` owns
/// densities `i*n .. (i+1)*n` of `density_map * incoming`.
#[derive(Clone, Debug)]
pub struct Representation {
    pub sources: Vec<Source>,
    pub pieces: Vec<FieldPiece>,
    pub density_map: CMat,
}

impl Representation {
    /// Densities for stacked incoming data (boundary order of the block).
    pub fn densities(&self, incoming: &[C64]) -> Result<Vec<C64>> {
        if incoming.len() != self.density_map.ncols() {
            return Err(Error::Dimension(format!(
                "{} incoming values for a map with {} columns",
                incoming.len(),
                self.density_map.ncols()
            )));
        }
        Ok(matvec(&self.density_map, incoming))
    }
}

/// Transmission operators used on one Robin boundary.
#[derive(Clone, Copy, Debug)]
pub struct RobinPair<'a> {
    pub incoming: &'a TransmissionOperator,
    pub outgoing: &'a TransmissionOperator,
}

/// Discrete RtR map of one subdomain. `blocks[o][i]` maps incoming data on
/// boundary `i` to outgoing data on boundary `o`; boundaries are ordered top
/// to bottom.
#[derive(Clone, Debug)]
pub struct RtRBlock {
    pub kind: SubdomainKind,
    pub grids: Vec<InterfaceGrid>,
    pub blocks: Vec<Vec<CMat>>,
    pub representation: Representation,
    pub reduced_order: bool,
}

impl RtRBlock {
    pub fn n(&self) -> usize {
        self.grids[0].n
    }

    pub fn boundaries(&self) -> usize {
        self.grids.len()
    }

    pub fn block(&self, out: usize, inc: usize) -> &CMat {
        &self.blocks[out][inc]
    }

    /// The whole map as one matrix.
    pub fn matrix(&self) -> CMat {
        let rows: Vec<Vec<&CMat>> = self.blocks.iter().map(|r| r.iter().collect()).collect();
        assemble_blocks(&rows)
    }

    pub fn is_finite(&self) -> bool {
        self.blocks.iter().flatten().all(|b| {
            (0..b.ncols()).all(|j| b.col_as_slice(j).iter().all(|v| v.is_finite()))
        })
    }
}

fn check_size(z: &RobinPair, n: usize) -> Result<()> {
    if z.incoming.n() != n || z.outgoing.n() != n {
        return Err(Error::Dimension(format!(
            "transmission operators of size {}/{} on a grid of {n} nodes",
            z.incoming.n(),
            z.outgoing.n()
        )));
    }
    Ok(())
}

fn half_identity(n: usize) -> CMat {
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            C64::new(0.5, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Solves the interior system and forms the blocks. The first
/// `robin.len() * n` rows of `a` are the Robin rows; `traces[b]` is the
/// Dirichlet trace on boundary `b` as a function of all densities.
fn robin_map(
    a: &CMat,
    traces: &[CMat],
    robin: &[RobinPair],
    context: &str,
) -> Result<(Vec<Vec<CMat>>, CMat)> {
    let n = traces[0].nrows();
    let nb = robin.len();
    let inv = checked_inverse(a, MAX_CONDITION, context)?;
    let x = block(&inv, 0, 0, inv.nrows(), nb * n);
    let mut blocks = Vec::with_capacity(nb);
    for (o, z) in robin.iter().enumerate() {
        let zsum = &z.incoming.matrix + &z.outgoing.matrix;
        let full = &zsum * &(&traces[o] * &x);
        let row = (0..nb)
            .map(|i| {
                let mut s = block(&full, 0, i * n, n, n) * faer::Scale(C64::new(-1.0, 0.0));
                if i == o {
                    s += identity(n);
                }
                s
            })
            .collect();
        blocks.push(row);
    }
    Ok((blocks, x))
}

/// Region bounded by Robin boundaries only, with one single-layer density
/// per boundary. Grids must carry outward normals.
fn homogeneous(
    k: C64,
    grids: &[InterfaceGrid],
    robin: &[RobinPair],
    cache: &OperatorCache,
) -> Result<(Vec<Vec<CMat>>, CMat, bool)> {
    let n = grids[0].n;
    let nb = grids.len();
    let mut ops: Vec<Vec<LayerOperators>> = Vec::with_capacity(nb);
    for tgt in grids {
        let mut row = Vec::with_capacity(nb);
        for src in grids {
            row.push(cache.get(k, src, tgt)?);
        }
        ops.push(row);
    }
    let reduced = ops.iter().flatten().any(|o| o.reduced_order);
    let mut rows: Vec<Vec<CMat>> = Vec::with_capacity(nb);
    for t in 0..nb {
        let zi = &robin[t].incoming.matrix;
        let row = (0..nb)
            .map(|s| {
                let mut m = &ops[t][s].adjoint + &(zi * &ops[t][s].single);
                if s == t {
                    m += half_identity(n);
                }
                m
            })
            .collect();
        rows.push(row);
    }
    let refs: Vec<Vec<&CMat>> = rows.iter().map(|r| r.iter().collect()).collect();
    let a = assemble_blocks(&refs);
    let traces: Vec<CMat> = (0..nb)
        .map(|t| {
            let r: Vec<&CMat> = (0..nb).map(|s| &ops[t][s].single).collect();
            assemble_blocks(&[r])
        })
        .collect();
    let (blocks, x) = robin_map(&a, &traces, robin, "homogeneous subdomain")?;
    Ok((blocks, x, reduced))
}

/// Outward orientation of a semi-infinite region's boundary.
fn outward(region: Region) -> Side {
    match region {
        Region::Above => Side::Down,
        Region::Below => Side::Up,
    }
}

/// RtR map of the half-plane above (`Region::Above`) or below a profile.
pub fn rtr_semi_infinite(
    k: C64,
    profile: &GratingProfile,
    region: Region,
    z: RobinPair,
    cache: &OperatorCache,
    n: usize,
) -> Result<RtRBlock> {
    check_size(&z, n)?;
    let grid = build_grid(profile, n)?.with_orientation(outward(region));
    let (blocks, x, reduced) = homogeneous(k, std::slice::from_ref(&grid), &[z], cache)?;
    let (upper, lower) = match region {
        Region::Above => (None, Some(profile.clone())),
        Region::Below => (Some(profile.clone()), None),
    };
    Ok(RtRBlock {
        kind: SubdomainKind::SemiInfinite(region),
        grids: vec![grid.clone()],
        blocks,
        representation: Representation {
            sources: vec![Source {
                grid,
                potential: Potential::Single,
            }],
            pieces: vec![FieldPiece {
                wavenumber: k,
                upper,
                lower,
                sources: vec![0],
            }],
            density_map: x,
        },
        reduced_order: reduced,
    })
}

fn two_sided(
    kind: SubdomainKind,
    k: C64,
    top: &GratingProfile,
    bottom: &GratingProfile,
    z_top: RobinPair,
    z_bot: RobinPair,
    cache: &OperatorCache,
    n: usize,
) -> Result<RtRBlock> {
    check_size(&z_top, n)?;
    check_size(&z_bot, n)?;
    let gt = build_grid(top, n)?.with_orientation(Side::Up);
    let gb = build_grid(bottom, n)?.with_orientation(Side::Down);
    let grids = vec![gt, gb];
    let (blocks, x, reduced) = homogeneous(k, &grids, &[z_top, z_bot], cache)?;
    Ok(RtRBlock {
        kind,
        grids: grids.clone(),
        blocks,
        representation: Representation {
            sources: grids
                .into_iter()
                .map(|grid| Source {
                    grid,
                    potential: Potential::Single,
                })
                .collect(),
            pieces: vec![FieldPiece {
                wavenumber: k,
                upper: Some(top.clone()),
                lower: Some(bottom.clone()),
                sources: vec![0, 1],
            }],
            density_map: x,
        },
        reduced_order: reduced,
    })
}

/// RtR map of the layer between two profiles.
pub fn rtr_layer(
    k: C64,
    top: &GratingProfile,
    bottom: &GratingProfile,
    z_top: RobinPair,
    z_bot: RobinPair,
    cache: &OperatorCache,
    n: usize,
) -> Result<RtRBlock> {
    two_sided(SubdomainKind::Layer, k, top, bottom, z_top, z_bot, cache, n)
}

/// RtR map of a strip `c_bot < x2 < c_top` filled by one medium.
pub fn rtr_homogeneous_strip(
    k: C64,
    c_top: f64,
    c_bot: f64,
    z_top: RobinPair,
    z_bot: RobinPair,
    cache: &OperatorCache,
    n: usize,
) -> Result<RtRBlock> {
    let d = cache.qp().period;
    two_sided(
        SubdomainKind::HomogeneousStrip,
        k,
        &GratingProfile::flat(c_top, d),
        &GratingProfile::flat(c_bot, d),
        z_top,
        z_bot,
        cache,
        n,
    )
}

fn strip_feasible(inside: &GratingProfile, c_top: f64, c_bot: f64) -> Result<()> {
    let (lo, hi) = inside.extrema();
    if !(c_top > hi && c_bot < lo) {
        return Err(Error::Geometry(format!(
            "strip cuts {c_top} and {c_bot} do not enclose the profile range [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// RtR map of the strip `c_bot < x2 < c_top` crossed by the profile
/// `inside`, with `k_above` above it and `k_below` below.
#[allow(clippy::too_many_arguments)]
pub fn rtr_strip(
    k_above: C64,
    k_below: C64,
    inside: &GratingProfile,
    c_top: f64,
    c_bot: f64,
    z_top: RobinPair,
    z_bot: RobinPair,
    cache: &OperatorCache,
    n: usize,
) -> Result<RtRBlock> {
    check_size(&z_top, n)?;
    check_size(&z_bot, n)?;
    strip_feasible(inside, c_top, c_bot)?;
    let d = cache.qp().period;
    let top = GratingProfile::flat(c_top, d);
    let bottom = GratingProfile::flat(c_bot, d);
    let gt = build_grid(&top, n)?.with_orientation(Side::Up);
    let gb = build_grid(&bottom, n)?.with_orientation(Side::Down);
    let gi = build_grid(inside, n)?.with_orientation(Side::Down);

    let a_tt = cache.get(k_above, &gt, &gt)?;
    let a_ti = cache.get(k_above, &gi, &gt)?;
    let a_it = cache.get(k_above, &gt, &gi)?;
    let a_ii = cache.get(k_above, &gi, &gi)?;
    let b_bb = cache.get(k_below, &gb, &gb)?;
    let b_bi = cache.get(k_below, &gi, &gb)?;
    let b_ib = cache.get(k_below, &gb, &gi)?;
    let b_ii = cache.get(k_below, &gi, &gi)?;
    let reduced = a_ii.reduced_order || b_ii.reduced_order;

    let zt = &z_top.incoming.matrix;
    let zb = &z_bot.incoming.matrix;
    let zero = CMat::zeros(n, n);
    let neg = |m: &CMat| m * faer::Scale(C64::new(-1.0, 0.0));
    let eye = identity(n);

    // unknowns: [phi_top, phi_bot, phi, psi]
    let r0 = vec![
        &half_identity(n) + &(&a_tt.adjoint + &(zt * &a_tt.single)),
        zero.clone(),
        &a_ti.adjoint + &(zt * &a_ti.single),
        &a_ti.hyper + &(zt * &a_ti.double),
    ];
    let r1 = vec![
        zero.clone(),
        &half_identity(n) + &(&b_bb.adjoint + &(zb * &b_bb.single)),
        &b_bi.adjoint + &(zb * &b_bi.single),
        &b_bi.hyper + &(zb * &b_bi.double),
    ];
    // continuity of d_nu across the interface
    let r2 = vec![
        a_it.adjoint.clone(),
        neg(&b_ib.adjoint),
        &eye + &(&a_ii.adjoint - &b_ii.adjoint),
        &a_ii.hyper - &b_ii.hyper,
    ];
    // continuity of the trace, lower minus upper
    let r3 = vec![
        neg(&a_it.single),
        b_ib.single.clone(),
        &b_ii.single - &a_ii.single,
        &eye + &(&b_ii.double - &a_ii.double),
    ];
    let rows = [r0, r1, r2, r3];
    let refs: Vec<Vec<&CMat>> = rows.iter().map(|r| r.iter().collect()).collect();
    let a = assemble_blocks(&refs);
    let traces = vec![
        assemble_blocks(&[vec![&a_tt.single, &zero, &a_ti.single, &a_ti.double]]),
        assemble_blocks(&[vec![&zero, &b_bb.single, &b_bi.single, &b_bi.double]]),
    ];
    let (blocks, x) = robin_map(&a, &traces, &[z_top, z_bot], "strip subdomain")?;
    Ok(RtRBlock {
        kind: SubdomainKind::Strip,
        grids: vec![gt.clone(), gb.clone()],
        blocks,
        representation: Representation {
            sources: vec![
                Source {
                    grid: gt,
                    potential: Potential::Single,
                },
                Source {
                    grid: gb,
                    potential: Potential::Single,
                },
                Source {
                    grid: gi.clone(),
                    potential: Potential::Single,
                },
                Source {
                    grid: gi,
                    potential: Potential::Double,
                },
            ],
            pieces: vec![
                FieldPiece {
                    wavenumber: k_above,
                    upper: Some(top),
                    lower: Some(inside.clone()),
                    sources: vec![0, 2, 3],
                },
                FieldPiece {
                    wavenumber: k_below,
                    upper: Some(inside.clone()),
                    lower: Some(bottom),
                    sources: vec![1, 2, 3],
                },
            ],
            density_map: x,
        },
        reduced_order: reduced,
    })
}

/// Numerically exact DtN map of the half-plane on `region`'s side of the
/// profile, `(1/2 + K^T) S^{-1}` with the region's outward normal.
pub fn exact_dtn(
    k: C64,
    profile: &GratingProfile,
    region: Region,
    cache: &OperatorCache,
    n: usize,
) -> Result<TransmissionOperator> {
    let grid = build_grid(profile, n)?.with_orientation(outward(region));
    let ops = cache.get(k, &grid, &grid)?;
    let s_inv = checked_inverse(&ops.single, MAX_CONDITION, "single layer")?;
    let matrix = &(&half_identity(n) + &ops.adjoint) * &s_inv;
    Ok(TransmissionOperator {
        matrix,
        family: Family::Exact,
        sigma: 0.0,
    })
}
