//! GMRES with modified Gram-Schmidt and one reorthogonalization pass.

use crate::error::{Error, Result};
use crate::linalg::{matvec, CMat};
use crate::C64;

pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[C64]) -> Vec<C64>;
}

impl LinearOperator for CMat {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        matvec(self, x)
    }
}

/// Operator given by a closure.
pub struct FnOperator<F> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[C64]) -> Vec<C64> + Sync> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        (self.f)(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GmresConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Restart length; `None` runs full GMRES.
    pub restart: Option<usize>,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-4,
            max_iter: 2000,
            restart: None,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(Error::Config(format!("GMRES tolerance {} is not in (0, 1)", self.rel_tol)));
        }
        if self.max_iter == 0 || self.restart == Some(0) {
            return Err(Error::Config("GMRES needs at least one iteration per cycle".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Relative residual norms, starting with `1` for the zero initial guess.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

fn norm(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn givens(a: C64, b: C64) -> (f64, C64) {
    let na = a.norm();
    if b.norm() == 0.0 {
        return (1.0, C64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, b.conj() / b.norm());
    }
    let r = na.hypot(b.norm());
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Solves `op x = b` from `x = 0`; the history records `|b - op x_k| / |b|`.
pub fn gmres<A: LinearOperator + ?Sized>(op: &A, b: &[C64], cfg: &GmresConfig) -> Result<(Vec<C64>, SolveReport)> {
    cfg.validate()?;
    let n = op.dim();
    if b.len() != n {
        return Err(Error::Dimension(format!("right-hand side of length {} for a {n}-dimensional operator", b.len())));
    }
    if !b.iter().all(|v| v.is_finite()) {
        return Err(Error::Config("right-hand side is not finite".into()));
    }
    let bnorm = norm(b);
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut history = vec![1.0];
    if bnorm == 0.0 {
        return Ok((x, SolveReport { iterations: 0, residual_history: vec![0.0], converged: true }));
    }
    let cycle = cfg.restart.unwrap_or(cfg.max_iter).min(cfg.max_iter);
    let mut total = 0;
    let mut r = b.to_vec();
    let mut beta = bnorm;
    loop {
        let mut v: Vec<Vec<C64>> = vec![r.iter().map(|z| z / beta).collect()];
        let mut h: Vec<Vec<C64>> = Vec::new();
        let mut cs: Vec<(f64, C64)> = Vec::new();
        let mut g = vec![C64::new(beta, 0.0)];
        let mut done = false;
        let mut breakdown = false;
        while v.len() <= cycle && total < cfg.max_iter {
            let j = v.len() - 1;
            let mut w = op.apply(&v[j]);
            let mut col = vec![C64::new(0.0, 0.0); j + 2];
            for _pass in 0..2 {
                for (i, vi) in v.iter().enumerate() {
                    let c = dotc(vi, &w);
                    col[i] += c;
                    for (wk, vk) in w.iter_mut().zip(vi) {
                        *wk -= c * vk;
                    }
                }
            }
            let hn = norm(&w);
            col[j + 1] = C64::new(hn, 0.0);
            for (i, &(c, s)) in cs.iter().enumerate() {
                let t = c * col[i] + s * col[i + 1];
                col[i + 1] = -s.conj() * col[i] + c * col[i + 1];
                col[i] = t;
            }
            let (c, s) = givens(col[j], col[j + 1]);
            col[j] = c * col[j] + s * col[j + 1];
            col[j + 1] = C64::new(0.0, 0.0);
            g.push(-s.conj() * g[j]);
            g[j] *= c;
            cs.push((c, s));
            h.push(col);
            total += 1;
            let rel = g[j + 1].norm() / bnorm;
            history.push(rel);
            if rel <= cfg.rel_tol {
                done = true;
                break;
            }
            if hn <= 1e-14 * bnorm {
                breakdown = true;
                break;
            }
            v.push(w.iter().map(|z| z / hn).collect());
        }
        // back substitution on the triangular factor
        let m = h.len();
        let mut y = vec![C64::new(0.0, 0.0); m];
        for i in (0..m).rev() {
            let mut s = g[i];
            for k in i + 1..m {
                s -= h[k][i] * y[k];
            }
            y[i] = s / h[i][i];
        }
        for (k, yk) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&v[k]) {
                *xi += yk * vi;
            }
        }
        if done || breakdown || total >= cfg.max_iter {
            let converged = done || {
                let ax = op.apply(&x);
                norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / bnorm <= cfg.rel_tol
            };
            return Ok((
                x,
                SolveReport {
                    iterations: total,
                    residual_history: history,
                    converged,
                },
            ));
        }
        let ax = op.apply(&x);
        r = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        beta = norm(&r);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseLu;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(n: usize, seed: u64, shift: f64) -> CMat {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        CMat::from_fn(n, n, |i, j| {
            let d = if i == j { shift } else { 0.0 };
            C64::new(rng.gen_range(-1.0..1.0) / n as f64 + d, rng.gen_range(-1.0..1.0) / n as f64)
        })
    }

    fn random_vec(n: usize, seed: u64) -> Vec<C64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect()
    }

    #[test]
    fn identity_takes_one_iteration() {
        let a = CMat::identity(10, 10);
        let b = random_vec(10, 1);
        let (x, rep) = gmres(&a, &b, &GmresConfig::default()).unwrap();
        assert_eq!(rep.iterations, 1);
        assert!(rep.converged);
        for (p, q) in x.iter().zip(&b) {
            assert!((p - q).norm() < 1e-14);
        }
    }

    #[test]
    fn two_eigenvalues_take_two_iterations() {
        let mut a = CMat::identity(30, 30);
        a[(29, 29)] = C64::new(2.0, 0.0);
        let b = random_vec(30, 2);
        let cfg = GmresConfig { rel_tol: 1e-12, ..Default::default() };
        let (_, rep) = gmres(&a, &b, &cfg).unwrap();
        assert!(rep.iterations <= 2);
        assert!(rep.converged);
    }

    #[test]
    fn matches_dense_lu() {
        let a = random_matrix(50, 3, 1.0);
        let b = random_vec(50, 4);
        let cfg = GmresConfig { rel_tol: 1e-10, ..Default::default() };
        let (x, rep) = gmres(&a, &b, &cfg).unwrap();
        let exact = DenseLu::new(&a).unwrap().solve_vec(&b);
        // cond(a) is below 10 for this diagonally dominant matrix
        let err = norm(&x.iter().zip(&exact).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(&exact);
        assert!(rep.converged);
        assert!(err < 10.0 * 1e-10);
    }

    #[test]
    fn history_matches_true_residuals() {
        let a = random_matrix(40, 5, 0.6);
        let b = random_vec(40, 6);
        let cfg = GmresConfig { rel_tol: 1e-10, ..Default::default() };
        let (_, rep) = gmres(&a, &b, &cfg).unwrap();
        for k in 1..rep.iterations {
            let (xk, _) = gmres(&a, &b, &GmresConfig { rel_tol: 1e-15, max_iter: k, restart: None }).unwrap();
            let ax = matvec(&a, &xk);
            let res = norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(&b);
            assert!((res - rep.residual_history[k]).abs() < 1e-12, "{k}: {res} vs {}", rep.residual_history[k]);
        }
    }

    #[test]
    fn max_iterations_returns_best_iterate_unconverged() {
        let a = random_matrix(40, 7, 0.2);
        let b = random_vec(40, 8);
        let (x, rep) = gmres(&a, &b, &GmresConfig { rel_tol: 1e-12, max_iter: 3, restart: None }).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 3);
        let ax = matvec(&a, &x);
        let res = norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(&b);
        assert!((res - rep.residual_history[3]).abs() < 1e-12);
    }

    #[test]
    fn restarted_gmres_converges() {
        let a = random_matrix(60, 9, 1.0);
        let b = random_vec(60, 10);
        let cfg = GmresConfig { rel_tol: 1e-8, max_iter: 500, restart: Some(5) };
        let (x, rep) = gmres(&a, &b, &cfg).unwrap();
        assert!(rep.converged);
        let ax = matvec(&a, &x);
        let res = norm(&b.iter().zip(&ax).map(|(p, q)| p - q).collect::<Vec<_>>()) / norm(&b);
        assert!(res <= 1e-8 * 1.01);
    }

    #[test]
    fn rejects_bad_tolerance() {
        let a = CMat::identity(2, 2);
        let b = random_vec(2, 1);
        assert!(gmres(&a, &b, &GmresConfig { rel_tol: 1.5, ..Default::default() }).is_err());
    }

    proptest! {
        #[test]
        fn history_is_monotone(seed in 0u64..1000) {
            let a = random_matrix(25, seed, 0.5);
            let b = random_vec(25, seed + 1);
            let (_, rep) = gmres(&a, &b, &GmresConfig { rel_tol: 1e-10, ..Default::default() }).unwrap();
            for w in rep.residual_history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
            }
        }
    }
}
