//! Field reconstruction, Rayleigh amplitudes and the energy balance.
//!
//! Fields are evaluated from the layer-potential representation of each
//! subdomain. Source-target pairs separated vertically by at least
//! `spectral_gap` use the Rayleigh series of the quasi-periodic Green
//! function, closer pairs the windowed lattice sum. Rayleigh amplitudes are
//! projected directly from the densities, which is the exact limit of
//! sampling the field on a line above (below) the structure.

use crate::ddm::BlockTridiagonalSystem;
use crate::dtn::Region;
use crate::error::{Error, Result};
use crate::fourier;
use crate::geometry::{GratingProfile, QuasiPeriodicity};
use crate::par;
use crate::qpgreen::{spectral_qp_green_grad, windowed_qp_green_grad, WindowedGreenParams};
use crate::rtr::{FieldPiece, Potential, Representation};
use crate::C64;
use std::f64::consts::TAU;

/// Exponent of the truncated Rayleigh-series tail, `e^{-SERIES_DECAY}`.
const SERIES_DECAY: f64 = 36.0;

#[derive(Clone, Debug, PartialEq)]
pub struct FieldEvaluator {
    /// Window size of the lattice sum used for close pairs.
    pub window: f64,
    /// Smallest vertical source-target distance handled by the Rayleigh series.
    pub spectral_gap: f64,
    /// Smallest accepted distance to a boundary, in grid spacings.
    pub min_distance: f64,
}

impl Default for FieldEvaluator {
    fn default() -> Self {
        Self {
            window: 960.0,
            spectral_gap: 0.25,
            min_distance: 2.0,
        }
    }
}

fn distance_to(profile: &GratingProfile, x: [f64; 2]) -> f64 {
    let [f, df, _] = profile.eval(x[0]);
    (x[1] - f) / (1.0 + df * df).sqrt()
}

/// Index of the piece holding `x`, if it lies at least `h_min` inside.
fn locate(rep: &Representation, x: [f64; 2], h_min: f64) -> Result<usize> {
    let err = Error::Evaluation { x1: x[0], x2: x[1] };
    for (i, piece) in rep.pieces.iter().enumerate() {
        let below = piece.upper.as_ref().map_or(f64::INFINITY, |p| -distance_to(p, x));
        let above = piece.lower.as_ref().map_or(f64::INFINITY, |p| distance_to(p, x));
        if below > 0.0 && above > 0.0 {
            return if below.min(above) >= h_min { Ok(i) } else { Err(err) };
        }
    }
    Err(err)
}

fn series_modes(k: C64, qp: &QuasiPeriodicity, gap: f64) -> i64 {
    ((SERIES_DECAY / gap + k.norm() + qp.alpha.abs()) * qp.period / TAU).ceil() as i64 + 1
}

fn piece_field(
    rep: &Representation,
    piece: &FieldPiece,
    densities: &[C64],
    qp: &QuasiPeriodicity,
    params: &WindowedGreenParams,
    eval: &FieldEvaluator,
    x: [f64; 2],
) -> Result<C64> {
    let k = piece.wavenumber;
    let mut u = C64::new(0.0, 0.0);
    for &si in &piece.sources {
        let src = &rep.sources[si];
        let g = &src.grid;
        let w = g.period / g.n as f64;
        let dens = &densities[si * g.n..(si + 1) * g.n];
        for m in 0..g.n {
            let z = [x[0] - g.x1[m], x[1] - g.x2[m]];
            let (val, grad) = if z[1].abs() >= eval.spectral_gap {
                spectral_qp_green_grad(k, qp.alpha, qp.period, z, series_modes(k, qp, z[1].abs()))
            } else {
                windowed_qp_green_grad(params, z)?
            };
            let kernel = match src.potential {
                Potential::Single => val,
                Potential::Double => {
                    let nu = g.normal(m);
                    -(grad[0] * nu[0] + grad[1] * nu[1])
                }
            };
            u += kernel * dens[m] * w;
        }
    }
    Ok(u)
}

/// Field of a representation with the given densities at `points`.
pub fn evaluate(
    rep: &Representation,
    densities: &[C64],
    qp: &QuasiPeriodicity,
    points: &[[f64; 2]],
    eval: &FieldEvaluator,
) -> Result<Vec<C64>> {
    let n = rep.sources.first().map_or(0, |s| s.grid.n);
    if densities.len() != rep.sources.len() * n {
        return Err(Error::Dimension(format!(
            "{} densities for {} sources of {n} nodes",
            densities.len(),
            rep.sources.len()
        )));
    }
    let h_min = eval.min_distance * qp.period / n.max(1) as f64;
    let params: Vec<WindowedGreenParams> = rep
        .pieces
        .iter()
        .map(|p| WindowedGreenParams::new(p.wavenumber, qp.alpha, qp.period, eval.window))
        .collect::<Result<_>>()?;
    par::map_indices(points.len(), |i| {
        let x = points[i];
        let p = locate(rep, x, h_min)?;
        piece_field(rep, &rep.pieces[p], densities, qp, &params[p], eval, x)
    })
    .into_iter()
    .collect()
}

/// Densities of subdomain `s` for a solution of the interface system.
pub fn subdomain_densities(system: &BlockTridiagonalSystem, solution: &[C64], s: usize) -> Result<Vec<C64>> {
    if s >= system.subdomains.len() {
        return Err(Error::Dimension(format!("subdomain {s} of {}", system.subdomains.len())));
    }
    if solution.len() != system.dim() {
        return Err(Error::Dimension(format!(
            "solution of length {} for a system of dimension {}",
            solution.len(),
            system.dim()
        )));
    }
    system.subdomains[s].representation.densities(&system.incoming(solution, s))
}

/// Field of subdomain `s` at `points`. In the top subdomain this is the
/// reflected field, elsewhere the total field.
pub fn reconstruct_field(
    system: &BlockTridiagonalSystem,
    solution: &[C64],
    s: usize,
    points: &[[f64; 2]],
    eval: &FieldEvaluator,
) -> Result<Vec<C64>> {
    let dens = subdomain_densities(system, solution, s)?;
    evaluate(&system.subdomains[s].representation, &dens, &system.stack.qp, points, eval)
}

/// Amplitudes of `e^{i alpha_r x1 +- i beta_r x2}` radiated by one piece,
/// upgoing for `Region::Above` and downgoing for `Region::Below`.
pub fn modal_amplitudes(
    rep: &Representation,
    piece: usize,
    densities: &[C64],
    qp: &QuasiPeriodicity,
    region: Region,
    modes: &[i64],
) -> Result<Vec<C64>> {
    let piece = rep
        .pieces
        .get(piece)
        .ok_or_else(|| Error::Dimension(format!("piece {piece} of {}", rep.pieces.len())))?;
    let k = piece.wavenumber;
    let s = match region {
        Region::Above => 1.0,
        Region::Below => -1.0,
    };
    let mut out = Vec::with_capacity(modes.len());
    for &r in modes {
        let ar = qp.alpha_r(r);
        let b = qp.beta_r(k, r);
        if b.norm() < 1e-12 {
            return Err(Error::WoodAnomaly { k: k.re, mode: r });
        }
        let mut acc = C64::new(0.0, 0.0);
        for &si in &piece.sources {
            let src = &rep.sources[si];
            let g = &src.grid;
            let w = g.period / g.n as f64;
            let dens = &densities[si * g.n..(si + 1) * g.n];
            for m in 0..g.n {
                let e = (-C64::i() * (ar * g.x1[m] + s * b * g.x2[m])).exp();
                let kernel = match src.potential {
                    Potential::Single => C64::new(1.0, 0.0),
                    Potential::Double => {
                        let nu = g.normal(m);
                        -C64::i() * (ar * nu[0] + s * b * nu[1])
                    }
                };
                acc += kernel * e * dens[m] * w;
            }
        }
        out.push(acc * C64::i() / (2.0 * qp.period * b));
    }
    Ok(out)
}

/// Amplitudes obtained by sampling the field on the line `x2 = height` at
/// `samples` equispaced points and dividing out the vertical dependence.
#[allow(clippy::too_many_arguments)]
pub fn line_amplitudes(
    rep: &Representation,
    densities: &[C64],
    qp: &QuasiPeriodicity,
    region: Region,
    height: f64,
    samples: usize,
    eval: &FieldEvaluator,
) -> Result<Vec<(i64, C64)>> {
    let points: Vec<[f64; 2]> = (0..samples)
        .map(|m| [m as f64 * qp.period / samples as f64, height])
        .collect();
    let values = evaluate(rep, densities, qp, &points, eval)?;
    let p = locate(rep, points[0], 0.0)?;
    let k = rep.pieces[p].wavenumber;
    let coeffs = fourier::forward(qp, &values);
    let s = match region {
        Region::Above => 1.0,
        Region::Below => -1.0,
    };
    Ok((0..samples)
        .map(|i| {
            let r = fourier::mode(samples, i);
            let b = qp.beta_r(k, r);
            (r, coeffs[i] / (C64::i() * s * b * height).exp())
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayleighExpansion {
    pub qp: QuasiPeriodicity,
    pub k_top: f64,
    pub k_bottom: f64,
    /// Mode indices `-n/2 ..= n/2` shared by both amplitude lists.
    pub modes: Vec<i64>,
    /// Reflected amplitudes `B_r^+`.
    pub up: Vec<C64>,
    /// Transmitted amplitudes `B_r^-`.
    pub down: Vec<C64>,
    pub propagating_up: Vec<i64>,
    pub propagating_down: Vec<i64>,
}

fn propagating(qp: &QuasiPeriodicity, k: f64, modes: &[i64]) -> Vec<i64> {
    modes.iter().copied().filter(|&r| qp.alpha_r(r).powi(2) < k * k).collect()
}

impl RayleighExpansion {
    fn index(&self, r: i64) -> Option<usize> {
        self.modes.iter().position(|&m| m == r)
    }

    pub fn amplitude_up(&self, r: i64) -> Option<C64> {
        self.index(r).map(|i| self.up[i])
    }

    pub fn amplitude_down(&self, r: i64) -> Option<C64> {
        self.index(r).map(|i| self.down[i])
    }

    fn incident_beta(&self) -> Result<f64> {
        let b0 = self.qp.beta_r(C64::new(self.k_top, 0.0), 0).re;
        if !(b0 > 1e-6 * self.k_top) {
            return Err(Error::Config("grazing incidence: the incident wave carries no vertical flux".into()));
        }
        Ok(b0)
    }

    /// `(r, efficiency)` of the propagating reflected orders.
    pub fn efficiencies_up(&self) -> Result<Vec<(i64, f64)>> {
        let b0 = self.incident_beta()?;
        let k = C64::new(self.k_top, 0.0);
        Ok(self
            .propagating_up
            .iter()
            .map(|&r| (r, self.qp.beta_r(k, r).re / b0 * self.amplitude_up(r).unwrap_or_default().norm_sqr()))
            .collect())
    }

    /// `(r, efficiency)` of the propagating transmitted orders.
    pub fn efficiencies_down(&self) -> Result<Vec<(i64, f64)>> {
        let b0 = self.incident_beta()?;
        let k = C64::new(self.k_bottom, 0.0);
        Ok(self
            .propagating_down
            .iter()
            .map(|&r| (r, self.qp.beta_r(k, r).re / b0 * self.amplitude_down(r).unwrap_or_default().norm_sqr()))
            .collect())
    }
}

/// Expansion from the densities of the top and bottom pieces.
#[allow(clippy::too_many_arguments)]
pub fn expansion_from_densities(
    top: (&Representation, &[C64]),
    bottom: (&Representation, &[C64]),
    qp: &QuasiPeriodicity,
    k_top: f64,
    k_bottom: f64,
    n: usize,
) -> Result<RayleighExpansion> {
    let h = (n / 2) as i64;
    let modes: Vec<i64> = (-h..=h).collect();
    let up = modal_amplitudes(top.0, 0, top.1, qp, Region::Above, &modes)?;
    let last = bottom.0.pieces.len() - 1;
    let down = modal_amplitudes(bottom.0, last, bottom.1, qp, Region::Below, &modes)?;
    Ok(RayleighExpansion {
        qp: *qp,
        k_top,
        k_bottom,
        propagating_up: propagating(qp, k_top, &modes),
        propagating_down: propagating(qp, k_bottom, &modes),
        modes,
        up,
        down,
    })
}

/// Reflected and transmitted Rayleigh amplitudes of a solved system.
pub fn rayleigh_amplitudes(system: &BlockTridiagonalSystem, solution: &[C64]) -> Result<RayleighExpansion> {
    let last = system.subdomains.len() - 1;
    let top = subdomain_densities(system, solution, 0)?;
    let bottom = subdomain_densities(system, solution, last)?;
    let ks = &system.stack.wavenumbers;
    expansion_from_densities(
        (&system.subdomains[0].representation, &top),
        (&system.subdomains[last].representation, &bottom),
        &system.stack.qp,
        ks[0],
        ks[ks.len() - 1],
        system.n,
    )
}

/// `|1 - sum of reflected and transmitted efficiencies|`.
pub fn energy_balance(expansion: &RayleighExpansion) -> Result<f64> {
    let up: f64 = expansion.efficiencies_up()?.iter().map(|e| e.1).sum();
    let down: f64 = expansion.efficiencies_down()?.iter().map(|e| e.1).sum();
    Ok((1.0 - up - down).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biops::OperatorCache;
    use crate::ddm::{assemble_system, OperatorFamily, Scheme, SystemConfig};
    use crate::geometry::{build_grid, LayerStack, ProfileShape, Side};
    use crate::linalg::DenseLu;
    use crate::qpgreen::spectral_qp_green;
    use crate::rtr::Source;
    use std::f64::consts::TAU;

    fn solve(stack: &LayerStack, cfg: &SystemConfig) -> (BlockTridiagonalSystem, Vec<C64>) {
        let sys = assemble_system(stack, cfg).unwrap();
        let x = DenseLu::new(&sys.densify()).unwrap().solve_vec(&sys.rhs);
        (sys, x)
    }

    fn wide(scheme: Scheme, n: usize) -> SystemConfig {
        let mut cfg = SystemConfig::new(scheme, n);
        cfg.window = 1920.0;
        cfg
    }

    fn fresnel_stack(alpha: f64) -> LayerStack {
        LayerStack::new(vec![GratingProfile::flat(0.0, TAU)], vec![1.3, 2.3], QuasiPeriodicity::new(alpha, TAU).unwrap())
    }

    fn fresnel(alpha: f64) -> (C64, C64) {
        let b0 = crate::geometry::beta(C64::new(1.3, 0.0), alpha);
        let b1 = crate::geometry::beta(C64::new(2.3, 0.0), alpha);
        ((b0 - b1) / (b0 + b1), 2.0 * b0 / (b0 + b1))
    }

    #[test]
    fn flat_interface_gives_fresnel_coefficients() {
        let alpha = 0.5;
        let (sys, x) = solve(&fresnel_stack(alpha), &wide(Scheme::LayerSemi, 32));
        let e = rayleigh_amplitudes(&sys, &x).unwrap();
        let (r, t) = fresnel(alpha);
        assert!((e.amplitude_up(0).unwrap() - r).norm() < 1e-6);
        assert!((e.amplitude_down(0).unwrap() - t).norm() < 1e-6);
        for (i, &m) in e.modes.iter().enumerate() {
            if m != 0 {
                assert!(e.up[i].norm() < 1e-6 && e.down[i].norm() < 1e-6);
            }
        }
        assert!(energy_balance(&e).unwrap() < 1e-8);
    }

    #[test]
    fn fresnel_coefficients_conserve_energy() {
        let alpha = 0.5;
        let qp = QuasiPeriodicity::new(alpha, TAU).unwrap();
        let (r, t) = fresnel(alpha);
        let mut up = vec![C64::new(0.0, 0.0); 5];
        let mut down = up.clone();
        up[2] = r;
        down[2] = t;
        let modes: Vec<i64> = (-2..=2).collect();
        let e = RayleighExpansion {
            qp,
            k_top: 1.3,
            k_bottom: 2.3,
            propagating_up: propagating(&qp, 1.3, &modes),
            propagating_down: propagating(&qp, 2.3, &modes),
            modes,
            up,
            down,
        };
        assert!(energy_balance(&e).unwrap() < 1e-12);
    }

    #[test]
    fn homogeneous_medium_transmits_the_plane_wave() {
        let st = LayerStack::new(
            vec![
                GratingProfile::new(0.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
                GratingProfile::new(-2.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
            ],
            vec![2.3, 2.3, 2.3],
            QuasiPeriodicity::new(0.2, TAU).unwrap(),
        );
        let (sys, x) = solve(&st, &wide(Scheme::LayerSemi, 64));
        let e = rayleigh_amplitudes(&sys, &x).unwrap();
        for &m in &e.propagating_down {
            let expected = if m == 0 { 1.0 } else { 0.0 };
            let b = e.amplitude_down(m).unwrap();
            assert!((b - expected).norm() < 1e-6, "mode {m}: {b}");
        }
        for &m in &e.propagating_up {
            assert!(e.amplitude_up(m).unwrap().norm() < 1e-6);
        }
        // evanescent orders too, seen on lines clear of the profiles
        let inc = st.incidence();
        let ev = FieldEvaluator::default();
        let below: Vec<[f64; 2]> = (0..8).map(|i| [0.8 * i as f64, -3.0]).collect();
        let u = reconstruct_field(&sys, &x, 2, &below, &ev).unwrap();
        for (p, v) in below.iter().zip(&u) {
            assert!((v - inc.value(p[0], p[1])).norm() < 1e-6);
        }
        let above: Vec<[f64; 2]> = (0..8).map(|i| [0.8 * i as f64, 1.0]).collect();
        let u = reconstruct_field(&sys, &x, 0, &above, &ev).unwrap();
        assert!(u.iter().all(|v| v.norm() < 1e-6));
        assert!(energy_balance(&e).unwrap() < 1e-8);
    }

    #[test]
    fn amplitudes_do_not_depend_on_the_line_height() {
        let st = LayerStack::new(
            vec![GratingProfile::new(0.0, 0.2, ProfileShape::cosine(2.5), TAU).unwrap()],
            vec![1.3, 2.3],
            QuasiPeriodicity::new(0.0, TAU).unwrap(),
        );
        let (sys, x) = solve(&st, &SystemConfig::new(Scheme::LayerSemi, 32));
        let dens = subdomain_densities(&sys, &x, 0).unwrap();
        let rep = &sys.subdomains[0].representation;
        let ev = FieldEvaluator::default();
        let (_, hi) = st.profiles[0].extrema();
        let a = line_amplitudes(rep, &dens, &st.qp, Region::Above, hi + 0.5, 64, &ev).unwrap();
        let b = line_amplitudes(rep, &dens, &st.qp, Region::Above, hi + 1.0, 64, &ev).unwrap();
        let modes: Vec<i64> = a.iter().map(|p| p.0).collect();
        let exact = modal_amplitudes(rep, 0, &dens, &st.qp, Region::Above, &modes).unwrap();
        for ((p, q), e) in a.iter().zip(&b).zip(&exact) {
            // evanescent orders carry e^{-|r| h}; compare the well-resolved ones
            if p.0.abs() <= 8 {
                assert!((p.1 - q.1).norm() < 1e-7, "mode {}: {} vs {}", p.0, p.1, q.1);
                assert!((p.1 - e).norm() < 1e-7);
            }
        }
    }

    #[test]
    fn reconstructed_field_is_quasi_periodic() {
        let alpha = 0.4;
        let st = LayerStack::new(
            vec![
                GratingProfile::new(0.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
                GratingProfile::new(-2.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
            ],
            vec![1.3, 2.3, 3.3],
            QuasiPeriodicity::new(alpha, TAU).unwrap(),
        );
        let (sys, x) = solve(&st, &SystemConfig::new(Scheme::LayerSemi, 32));
        let ev = FieldEvaluator::default();
        for (s, x2) in [(0, 0.9), (1, -1.0), (1, -0.9), (2, -3.0)] {
            let pts = [[0.7, x2], [0.7 + TAU, x2]];
            let u = reconstruct_field(&sys, &x, s, &pts, &ev).unwrap();
            let ph = C64::from_polar(1.0, alpha * TAU);
            assert!((u[1] - ph * u[0]).norm() < 1e-6 * u[0].norm().max(1.0), "subdomain {s}");
        }
    }

    #[test]
    fn zero_densities_give_zero_field() {
        let st = fresnel_stack(0.0);
        let sys = assemble_system(&st, &SystemConfig::new(Scheme::Strip, 64)).unwrap();
        let zero = vec![C64::new(0.0, 0.0); sys.dim()];
        let u = reconstruct_field(&sys, &zero, 1, &[[1.0, 0.25], [2.0, -0.25]], &FieldEvaluator::default()).unwrap();
        assert!(u.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn points_outside_or_near_a_boundary_are_rejected() {
        let st = fresnel_stack(0.0);
        let (sys, x) = solve(&st, &SystemConfig::new(Scheme::LayerSemi, 16));
        let ev = FieldEvaluator::default();
        assert!(matches!(reconstruct_field(&sys, &x, 0, &[[1.0, -1.0]], &ev), Err(Error::Evaluation { .. })));
        assert!(matches!(reconstruct_field(&sys, &x, 0, &[[1.0, 0.05]], &ev), Err(Error::Evaluation { .. })));
        assert!(reconstruct_field(&sys, &x, 0, &[[1.0, 2.5]], &ev).is_ok());
    }

    #[test]
    fn single_layer_reproduces_a_point_source() {
        // density solving S phi = G(. - x0) on the profile; above the
        // profile the single layer then equals the source field
        let k = C64::new(2.3, 0.0);
        let qp = QuasiPeriodicity::new(0.5, TAU).unwrap();
        let profile = GratingProfile::new(0.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap();
        let n = 64;
        let grid = build_grid(&profile, n).unwrap().with_orientation(Side::Down);
        let cache = OperatorCache::new(qp, 1920.0).unwrap();
        let s = cache.get(k, &grid, &grid).unwrap().single;
        let x0 = [1.0, -1.2];
        let rhs: Vec<C64> = (0..n)
            .map(|m| spectral_qp_green(k, qp.alpha, qp.period, [grid.x1[m] - x0[0], grid.x2[m] - x0[1]], 200))
            .collect();
        let phi = DenseLu::new(&s).unwrap().solve_vec(&rhs);
        let rep = Representation {
            sources: vec![Source { grid, potential: Potential::Single }],
            pieces: vec![FieldPiece { wavenumber: k, upper: None, lower: Some(profile), sources: vec![0] }],
            density_map: crate::linalg::identity(n),
        };
        let pts = [[0.3, 1.0], [2.0, 0.6], [4.0, 2.0], [5.5, 0.7]];
        let u = evaluate(&rep, &phi, &qp, &pts, &FieldEvaluator::default()).unwrap();
        for (p, v) in pts.iter().zip(&u) {
            let exact = spectral_qp_green(k, qp.alpha, qp.period, [p[0] - x0[0], p[1] - x0[1]], 200);
            assert!((v - exact).norm() < 1e-8, "{p:?}: {v} vs {exact}");
        }
    }

    #[test]
    fn layer_and_strip_schemes_agree() {
        let st = LayerStack::new(
            vec![
                GratingProfile::new(0.0, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
                GratingProfile::new(-2.5, 0.1, ProfileShape::cosine(2.5), TAU).unwrap(),
            ],
            vec![1.3, 2.3, 3.3],
            QuasiPeriodicity::new(0.0, TAU).unwrap(),
        );
        let (a, xa) = solve(&st, &wide(Scheme::LayerSemi, 64));
        let (b, xb) = solve(&st, &wide(Scheme::Strip, 64));
        let ea = rayleigh_amplitudes(&a, &xa).unwrap();
        let eb = rayleigh_amplitudes(&b, &xb).unwrap();
        for &r in &ea.propagating_up {
            assert!((ea.amplitude_up(r).unwrap() - eb.amplitude_up(r).unwrap()).norm() < 1e-4);
        }
        for &r in &ea.propagating_down {
            assert!((ea.amplitude_down(r).unwrap() - eb.amplitude_down(r).unwrap()).norm() < 1e-4);
        }
    }

    #[test]
    fn grazing_incidence_is_rejected() {
        let qp = QuasiPeriodicity::new(1.3, TAU).unwrap();
        let e = RayleighExpansion {
            qp,
            k_top: 1.3,
            k_bottom: 2.3,
            modes: vec![0],
            up: vec![C64::new(0.0, 0.0)],
            down: vec![C64::new(0.0, 0.0)],
            propagating_up: vec![],
            propagating_down: vec![0],
        };
        assert!(energy_balance(&e).is_err());
    }

    #[test]
    fn transmission_operators_do_not_change_the_amplitudes() {
        let st = fresnel_stack(0.5);
        let mut cfg = wide(Scheme::LayerSemi, 32);
        let (a, xa) = solve(&st, &cfg);
        cfg.family = OperatorFamily::Despres;
        let (b, xb) = solve(&st, &cfg);
        let ea = rayleigh_amplitudes(&a, &xa).unwrap();
        let eb = rayleigh_amplitudes(&b, &xb).unwrap();
        assert!((ea.amplitude_up(0).unwrap() - eb.amplitude_up(0).unwrap()).norm() < 1e-8);
    }
}
