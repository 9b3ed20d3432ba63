//! Double-sweep preconditioners for the block-tridiagonal DD systems.
//!
//! The approximate factorization replaces every diagonal block by the
//! identity, `B = (I + L)(I + U)`, which is exact when `L U = 0` and the
//! reflection blocks vanish. The exact factorization keeps the Schur
//! complements `T_0 = D_0`, `T_j = D_j - L_{j-1} T_{j-1}^{-1} U_{j-1}`.

use crate::ddm::{BlockTridiagonalSystem, MAX_SPECTRUM_DIM};
use crate::error::{Error, Result};
use crate::krylov::LinearOperator;
use crate::linalg::{block, eigenvalues, matvec, matvec_add, CMat, DenseLu};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepMode {
    Approximate,
    Exact,
}

struct ExactFactors {
    t: Vec<DenseLu>,
    /// First block column of `T_j^{-1} U_j`, i.e. `T_j^{-1}[:, :n] S^{j+1}_{j,j+2}`.
    tu: Vec<CMat>,
}

pub struct SweepFactors<'a> {
    system: &'a BlockTridiagonalSystem,
    mode: SweepMode,
    exact: Option<ExactFactors>,
}

impl<'a> SweepFactors<'a> {
    pub fn new(system: &'a BlockTridiagonalSystem, mode: SweepMode) -> Result<Self> {
        let exact = match mode {
            SweepMode::Approximate => None,
            SweepMode::Exact => Some(exact_factors(system)?),
        };
        Ok(Self { system, mode, exact })
    }

    pub fn mode(&self) -> SweepMode {
        self.mode
    }

    /// Solves `B z = r` (approximate) or `A z = r` (exact).
    pub fn apply_sweep(&self, r: &[C64]) -> Vec<C64> {
        match &self.exact {
            None => approximate_sweep(self.system, r),
            Some(f) => exact_sweep(self.system, f, r),
        }
    }
}

fn finite(m: &CMat) -> bool {
    (0..m.ncols()).all(|j| m.col_as_slice(j).iter().all(|v| v.is_finite()))
}

fn exact_factors(sys: &BlockTridiagonalSystem) -> Result<ExactFactors> {
    let n = sys.n;
    let p = sys.pairs();
    let mut t = Vec::with_capacity(p);
    let mut tu = Vec::with_capacity(p.saturating_sub(1));
    for j in 0..p {
        let mut d = sys.d_matrix(j);
        if j > 0 {
            // L_{j-1} T_{j-1}^{-1} U_{j-1} only fills the (2,1) block
            let lower = block(&tu[j - 1], n, 0, n, n);
            let corr = sys.l_block(j - 1) * &lower;
            let mut sub = d.as_mut().submatrix_mut(n, 0, n, n);
            sub -= &corr;
        }
        let lu = DenseLu::new(&d)?;
        if j + 1 < p {
            let inv_cols = lu.solve_mat(&identity_columns(2 * n, n));
            let w = &inv_cols * sys.u_block(j);
            if !finite(&w) {
                return Err(Error::Singular {
                    context: format!("sweep block T_{j}"),
                    estimate: f64::INFINITY,
                });
            }
            tu.push(w);
        } else {
            let probe = lu.solve_mat(&identity_columns(2 * n, 1));
            if !finite(&probe) {
                return Err(Error::Singular {
                    context: format!("sweep block T_{j}"),
                    estimate: f64::INFINITY,
                });
            }
        }
        t.push(lu);
    }
    Ok(ExactFactors { t, tu })
}

fn identity_columns(rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |i, j| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) })
}

fn approximate_sweep(sys: &BlockTridiagonalSystem, r: &[C64]) -> Vec<C64> {
    let n = sys.n;
    let p = sys.pairs();
    let mut z = r.to_vec();
    // downward sweep: (I + L) y = r
    for j in 1..p {
        let prev = z[(2 * j - 1) * n..2 * j * n].to_vec();
        let mut t = vec![C64::new(0.0, 0.0); n];
        matvec_add(sys.l_block(j - 1), &prev, &mut t);
        for (zi, ti) in z[(2 * j + 1) * n..(2 * j + 2) * n].iter_mut().zip(&t) {
            *zi -= ti;
        }
    }
    // upward sweep: (I + U) z = y
    for j in (0..p.saturating_sub(1)).rev() {
        let next = z[2 * (j + 1) * n..(2 * j + 3) * n].to_vec();
        let t = matvec(sys.u_block(j), &next);
        for (zi, ti) in z[2 * j * n..(2 * j + 1) * n].iter_mut().zip(&t) {
            *zi -= ti;
        }
    }
    z
}

fn exact_sweep(sys: &BlockTridiagonalSystem, f: &ExactFactors, r: &[C64]) -> Vec<C64> {
    let n = sys.n;
    let p = sys.pairs();
    let n2 = 2 * n;
    let mut y: Vec<Vec<C64>> = Vec::with_capacity(p);
    for j in 0..p {
        let mut rj = r[j * n2..(j + 1) * n2].to_vec();
        if j > 0 {
            let t = matvec(sys.l_block(j - 1), &y[j - 1][n..]);
            for (a, b) in rj[n..].iter_mut().zip(&t) {
                *a -= b;
            }
        }
        y.push(f.t[j].solve_vec(&rj));
    }
    for j in (0..p.saturating_sub(1)).rev() {
        let t = matvec(&f.tu[j], &y[j + 1][..n]);
        for (a, b) in y[j].iter_mut().zip(&t) {
            *a -= b;
        }
    }
    y.concat()
}

/// `B^{-1} A`, the left-preconditioned operator.
pub struct Preconditioned<'a> {
    pub system: &'a BlockTridiagonalSystem,
    pub factors: &'a SweepFactors<'a>,
}

impl LinearOperator for Preconditioned<'_> {
    fn dim(&self) -> usize {
        self.system.dim()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        preconditioned_apply(self.system, self.factors, x)
    }
}

pub fn preconditioned_apply(system: &BlockTridiagonalSystem, factors: &SweepFactors, x: &[C64]) -> Vec<C64> {
    factors.apply_sweep(&system.apply(x))
}

impl LinearOperator for BlockTridiagonalSystem {
    fn dim(&self) -> usize {
        BlockTridiagonalSystem::dim(self)
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        BlockTridiagonalSystem::apply(self, x)
    }
}

/// Dense `B` of the approximate factorization, for cross-checks.
pub fn densify_approximate(sys: &BlockTridiagonalSystem) -> CMat {
    let n2 = 2 * sys.n;
    let p = sys.pairs();
    let dim = sys.dim();
    let mut lower = CMat::identity(dim, dim);
    let mut upper = CMat::identity(dim, dim);
    for j in 0..p.saturating_sub(1) {
        lower
            .as_mut()
            .submatrix_mut((j + 1) * n2, j * n2, n2, n2)
            .copy_from(&sys.l_matrix(j));
        upper
            .as_mut()
            .submatrix_mut(j * n2, (j + 1) * n2, n2, n2)
            .copy_from(&sys.u_matrix(j));
    }
    &lower * &upper
}

/// Eigenvalues of the densified left-preconditioned operator `B^{-1} A`.
pub fn preconditioned_spectrum(sys: &BlockTridiagonalSystem, mode: SweepMode) -> Result<Vec<C64>> {
    if sys.dim() > MAX_SPECTRUM_DIM {
        return Err(Error::Dimension(format!(
            "spectrum of a {}-dimensional system exceeds the limit {MAX_SPECTRUM_DIM}",
            sys.dim()
        )));
    }
    let a = sys.densify();
    let b = match mode {
        SweepMode::Approximate => densify_approximate(sys),
        SweepMode::Exact => a.clone(),
    };
    eigenvalues(&DenseLu::new(&b)?.solve_mat(&a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ddm::{assemble_system, OperatorFamily, Scheme, SigmaPolicy, SystemConfig};
    use crate::geometry::{GratingProfile, LayerStack, ProfileShape, QuasiPeriodicity};
    use crate::krylov::{gmres, GmresConfig};
    use crate::linalg::vec_max_abs;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::TAU;

    fn stack(eps: f64, ks: &[f64]) -> LayerStack {
        let profiles = (0..ks.len() - 1)
            .map(|j| GratingProfile::new(-2.0 * j as f64, eps, ProfileShape::cosine(2.5), TAU).unwrap())
            .collect();
        LayerStack::new(profiles, ks.to_vec(), QuasiPeriodicity::new(0.0, TAU).unwrap())
    }

    fn random(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    fn close(a: &[C64], b: &[C64], tol: f64) -> bool {
        let s = vec_max_abs(b).max(1.0);
        a.iter().zip(b).all(|(x, y)| (x - y).norm() <= tol * s)
    }

    #[test]
    fn approximate_sweep_matches_dense_factorization() {
        let sys = assemble_system(&stack(0.1, &[1.3, 2.3, 3.3]), &SystemConfig::new(Scheme::LayerSemi, 64)).unwrap();
        let f = SweepFactors::new(&sys, SweepMode::Approximate).unwrap();
        let r = random(sys.dim(), 1);
        let z = f.apply_sweep(&r);
        let dense = DenseLu::new(&densify_approximate(&sys)).unwrap().solve_vec(&r);
        assert!(close(&z, &dense, 1e-12));
        let y = preconditioned_apply(&sys, &f, &r);
        let direct = DenseLu::new(&densify_approximate(&sys)).unwrap().solve_vec(&sys.densify().apply(&r));
        assert!(close(&y, &direct, 1e-12));
    }

    #[test]
    fn preconditioned_spectrum_clusters_at_one() {
        let sys = assemble_system(&stack(0.1, &[1.3, 2.3, 3.3]), &SystemConfig::new(Scheme::LayerSemi, 16)).unwrap();
        let exact = preconditioned_spectrum(&sys, SweepMode::Exact).unwrap();
        assert_eq!(exact.len(), sys.dim());
        assert!(exact.iter().all(|l| (l - 1.0).norm() < 1e-8));
        let approx = preconditioned_spectrum(&sys, SweepMode::Approximate).unwrap();
        let near = |v: &[C64]| v.iter().filter(|l| (*l - 1.0).norm() <= 0.5).count();
        let plain = crate::ddm::dense_spectrum(&sys).unwrap();
        assert!(near(&approx) >= near(&plain));
    }

    #[test]
    fn exact_sweep_inverts_the_system() {
        let sys = assemble_system(&stack(0.1, &[1.3, 2.3, 3.3, 4.3, 5.3]), &SystemConfig::new(Scheme::LayerSlab, 32)).unwrap();
        let f = SweepFactors::new(&sys, SweepMode::Exact).unwrap();
        let r = random(sys.dim(), 2);
        let z = f.apply_sweep(&r);
        assert!(close(&sys.apply(&z), &r, 1e-10));
        let dense = DenseLu::new(&sys.densify()).unwrap().solve_vec(&r);
        assert!(close(&z, &dense, 1e-10));
    }

    #[test]
    fn sweep_without_coupling_is_identity() {
        // a single interface has no U or L blocks
        let sys = assemble_system(&stack(0.1, &[1.3, 2.3]), &SystemConfig::new(Scheme::LayerSemi, 16)).unwrap();
        let f = SweepFactors::new(&sys, SweepMode::Approximate).unwrap();
        let r = random(sys.dim(), 3);
        assert_eq!(f.apply_sweep(&r), r);
    }

    #[test]
    fn transparent_operators_make_the_sweep_exact() {
        // one medium throughout: with exact DtN maps all reflection blocks
        // vanish, so B = A and preconditioned GMRES stops after one step
        let st = LayerStack::new(
            vec![GratingProfile::flat(0.0, TAU), GratingProfile::flat(-1.5, TAU)],
            vec![2.3, 2.3, 2.3],
            QuasiPeriodicity::new(0.0, TAU).unwrap(),
        );
        // a wide window keeps the truncation error of the lattice sum below the tolerance
        let mut cfg = SystemConfig::new(Scheme::LayerSemi, 32);
        cfg.family = OperatorFamily::Exact;
        cfg.window = 1920.0;
        let sys = assemble_system(&st, &cfg).unwrap();
        let f = SweepFactors::new(&sys, SweepMode::Approximate).unwrap();
        let r = random(sys.dim(), 4);
        assert!(close(&preconditioned_apply(&sys, &f, &r), &r, 1e-6));
        let op = Preconditioned { system: &sys, factors: &f };
        let b = f.apply_sweep(&sys.rhs);
        let (_, rep) = gmres(&op, &b, &GmresConfig { rel_tol: 1e-5, ..Default::default() }).unwrap();
        assert_eq!(rep.iterations, 1);
    }

    #[test]
    fn sweep_error_shrinks_with_roughness() {
        let mut prev = f64::INFINITY;
        // one medium, so the only reflections come from the profile curvature
        for eps in [0.2, 0.1, 0.05] {
            let mut cfg = SystemConfig::new(Scheme::LayerSemi, 32);
            cfg.sigma = SigmaPolicy::Fixed(0.0);
            let sys = assemble_system(&stack(eps, &[2.3, 2.3, 2.3]), &cfg).unwrap();
            let diff = &sys.densify() - &densify_approximate(&sys);
            let worst = (0..20)
                .map(|s| vec_max_abs(&diff.apply(&random(sys.dim(), 10 + s))))
                .fold(0.0, f64::max);
            assert!(worst < prev);
            prev = worst;
        }
    }

    #[test]
    fn preconditioned_operator_is_linear() {
        let sys = assemble_system(&stack(0.1, &[1.3, 2.3, 3.3]), &SystemConfig::new(Scheme::Strip, 16)).unwrap();
        let f = SweepFactors::new(&sys, SweepMode::Approximate).unwrap();
        let x = random(sys.dim(), 5);
        let y = random(sys.dim(), 6);
        let c = C64::new(-0.4, 2.0);
        let lhs = preconditioned_apply(&sys, &f, &x.iter().zip(&y).map(|(a, b)| a * c + b).collect::<Vec<_>>());
        let px = preconditioned_apply(&sys, &f, &x);
        let py = preconditioned_apply(&sys, &f, &y);
        let rhs: Vec<C64> = px.iter().zip(&py).map(|(a, b)| a * c + b).collect();
        assert!(close(&lhs, &rhs, 1e-12));
    }
}
