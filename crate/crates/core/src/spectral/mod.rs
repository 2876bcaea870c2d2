//! Condition numbers of preconditioned operators `G·A`: Lanczos in the
//! `A`-inner product, preconditioned conjugate gradients and a dense
//! generalised eigenvalue oracle for small problems.

mod tridiag;

use faer::{Mat, Side};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{shape, Error, Result};
use crate::precond::LinearOperator;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_TOL: f64 = 1e-6;

/// Iteration cap used when none is given: `min(dim, 400)`.
pub fn default_max_iter(dim: usize) -> usize {
    dim.min(400)
}

/// Extreme Ritz values of `G·A` and how they were obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Start vectors discarded because their `A`-norm vanished.
    pub restarts: usize,
    /// Relative change of the extreme Ritz values in the last step.
    pub last_change: f64,
    /// Last off-diagonal of the Lanczos matrix, relative to `λ_max`.
    pub last_beta: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LanczosOptions {
    pub tol: f64,
    /// `None` means [`default_max_iter`].
    pub max_iter: Option<usize>,
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            tol: DEFAULT_TOL,
            max_iter: None,
            seed: DEFAULT_SEED,
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Consecutive steps the change test must pass before stopping.
const STABLE_STEPS: usize = 3;
const MAX_RESTARTS: usize = 3;

/// Extreme eigenvalues of `G·A` for symmetric positive definite `G` and
/// `A`, by Lanczos on `G·A`, which is self-adjoint in `(x, y)_A = yᵀ A x`.
///
/// The basis is fully reorthogonalised. The run stops when both extreme
/// Ritz values change by less than `tol` (relative) on three consecutive
/// steps and their residuals are below `√tol` relative, when the Krylov
/// space becomes invariant, or after `max_iter` steps (reported as not
/// converged).
pub fn lanczos_condition(
    g: &dyn LinearOperator,
    a: &dyn LinearOperator,
    opts: LanczosOptions,
) -> Result<SpectralReport> {
    let n = a.dim();
    if g.dim() != n {
        return Err(shape("lanczos: dim of G vs A", n, g.dim()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let max_iter = opts.max_iter.unwrap_or_else(|| default_max_iter(n)).clamp(1, n);
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(opts.seed);

    // start vector, normalised in the A-norm
    let mut restarts = 0;
    let (mut v, mut av) = loop {
        let mut x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let nx = dot(&x, &x).sqrt();
        x.iter_mut().for_each(|e| *e /= nx);
        let ax = a.apply(&x)?;
        let na2 = dot(&x, &ax);
        if na2 < 0.0 {
            return Err(Error::Indefinite(na2));
        }
        let na = na2.sqrt();
        if na > 1e-14 {
            break (
                x.iter().map(|e| e / na).collect::<Vec<_>>(),
                ax.iter().map(|e| e / na).collect::<Vec<_>>(),
            );
        }
        restarts += 1;
        if restarts > MAX_RESTARTS {
            return Err(Error::Breakdown(format!(
                "start vector has vanishing A-norm after {MAX_RESTARTS} restarts"
            )));
        }
    };

    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut a_basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let (mut lo_prev, mut hi_prev) = (f64::NAN, f64::NAN);
    let mut stable = 0;
    let mut w = vec![0.0; n];
    let mut report = SpectralReport {
        lambda_min: f64::NAN,
        lambda_max: f64::NAN,
        kappa: f64::NAN,
        iterations: 0,
        converged: false,
        restarts,
        last_change: f64::INFINITY,
        last_beta: f64::NAN,
    };
    for j in 0..max_iter {
        g.apply_to(&av, &mut w);
        let alpha = dot(&av, &w);
        // w ← w − Σ (w, v_i)_A v_i, twice for stability
        for _ in 0..2 {
            for (vi, avi) in basis.iter().zip(&a_basis) {
                let c = dot(&w, avi);
                w.iter_mut().zip(vi).for_each(|(x, y)| *x -= c * y);
            }
            let c = dot(&w, &av);
            w.iter_mut().zip(&v).for_each(|(x, y)| *x -= c * y);
        }
        alphas.push(alpha);
        basis.push(std::mem::take(&mut v));
        a_basis.push(std::mem::take(&mut av));

        let (lo, hi) = tridiag::extreme_eigenvalues(&alphas, &betas);
        if lo <= 0.0 {
            return Err(Error::Indefinite(lo));
        }
        let change = if j == 0 {
            f64::INFINITY
        } else {
            ((lo - lo_prev) / lo).abs().max(((hi - hi_prev) / hi).abs())
        };
        stable = if change < opts.tol { stable + 1 } else { 0 };
        (lo_prev, hi_prev) = (lo, hi);

        let aw = a.apply(&w)?;
        let beta2 = dot(&w, &aw);
        let beta = beta2.max(0.0).sqrt();
        report.lambda_min = lo;
        report.lambda_max = hi;
        report.kappa = hi / lo;
        report.iterations = j + 1;
        report.last_change = change;
        report.last_beta = beta / hi;
        // an invariant Krylov space holds exact eigenvalues of G·A
        let invariant = beta <= 1e-12 * hi || j + 1 == n;
        if stable >= STABLE_STEPS && !invariant {
            // stagnating Ritz values are not enough; the Ritz residuals
            // β·|s_k| must be small too
            let res_lo = beta * tridiag::extreme_last_component(&alphas, &betas, lo, true);
            let res_hi = beta * tridiag::extreme_last_component(&alphas, &betas, hi, false);
            let bound = opts.tol.sqrt();
            if res_lo > bound * lo || res_hi > bound * hi {
                stable = 0;
            }
        }
        if stable >= STABLE_STEPS || invariant {
            report.converged = true;
            break;
        }
        if beta2 < 0.0 {
            return Err(Error::Indefinite(beta2));
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
        av = aw.iter().map(|x| x / beta).collect();
    }
    Ok(report)
}

/// Result of [`pcg_solve`]; reaching the iteration cap is not an error.
#[derive(Debug, Clone)]
pub struct PcgResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖r_k‖/‖b‖`, starting with `k = 0`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Preconditioned conjugate gradients for `A x = b` with `z = G r`,
/// started from zero, stopping when `‖r‖ ≤ tol ‖b‖`.
pub fn pcg_solve(
    a: &dyn LinearOperator,
    g: &dyn LinearOperator,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<PcgResult> {
    let n = a.dim();
    if g.dim() != n {
        return Err(shape("pcg: dim of G vs A", n, g.dim()));
    }
    if b.len() != n {
        return Err(shape("pcg: right-hand side", n, b.len()));
    }
    let nb = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(PcgResult {
            x,
            iterations: 0,
            residual_history: vec![0.0],
            converged: true,
        });
    }
    let mut r = b.to_vec();
    let mut z = vec![0.0; n];
    g.apply_to(&r, &mut z);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut history = vec![1.0];
    for k in 0..max_iter {
        a.apply_to(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Indefinite(pap));
        }
        let step = rz / pap;
        x.iter_mut().zip(&p).for_each(|(xi, pi)| *xi += step * pi);
        r.iter_mut().zip(&ap).for_each(|(ri, api)| *ri -= step * api);
        let res = dot(&r, &r).sqrt() / nb;
        history.push(res);
        if res <= tol {
            return Ok(PcgResult {
                x,
                iterations: k + 1,
                residual_history: history,
                converged: true,
            });
        }
        g.apply_to(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
    }
    Ok(PcgResult {
        x,
        iterations: max_iter,
        residual_history: history,
        converged: false,
    })
}

/// All eigenvalues of `G·A` for dense row-major symmetric `G` and `A`
/// (`A` positive definite), ascending.
///
/// `A` is scaled to unit diagonal and factored `A = L Lᵀ`; the spectrum is
/// that of the congruent symmetric matrix `Lᵀ G L`.
pub fn dense_eig_oracle(g: &[f64], a: &[f64], n: usize) -> Result<Vec<f64>> {
    if g.len() != n * n {
        return Err(shape("dense oracle: G", n * n, g.len()));
    }
    if a.len() != n * n {
        return Err(shape("dense oracle: A", n * n, a.len()));
    }
    let mut s = vec![0.0; n];
    for i in 0..n {
        let d = a[i * n + i];
        if !(d > 0.0) {
            return Err(Error::Factorization(format!("diagonal entry {i} of A is {d}")));
        }
        s[i] = d.sqrt();
    }
    let a_hat = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j] / (s[i] * s[j]));
    let g_hat = Mat::<f64>::from_fn(n, n, |i, j| g[i * n + j] * s[i] * s[j]);
    let llt = a_hat
        .llt(Side::Lower)
        .map_err(|e| Error::Factorization(format!("A is not positive definite: {e:?}")))?;
    let l = llt.L();
    let m = l.transpose() * &g_hat * l;
    let sym = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)] + m[(j, i)]));
    let mut ev = sym
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Factorization(format!("eigensolver failed: {e:?}")))?;
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `λ_max/λ_min` from [`dense_eig_oracle`].
pub fn dense_condition(g: &[f64], a: &[f64], n: usize) -> Result<f64> {
    let ev = dense_eig_oracle(g, a, n)?;
    if !(ev[0] > 0.0) {
        return Err(Error::Indefinite(ev[0]));
    }
    Ok(ev[n - 1] / ev[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{DenseOperator, DofLabel};
    use crate::precond::{DiagonalOperator, Identity};

    fn random_spd(n: usize, seed: u64, spread: f64) -> DenseOperator {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let b: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += b[i * n + k] * b[j * n + k];
                }
                m[i * n + j] = s / n as f64;
            }
            m[i * n + i] += spread * (1.0 + i as f64 / n as f64);
        }
        DenseOperator::new(n, m, DofLabel::Vertices).unwrap()
    }

    #[test]
    fn identity_pair() {
        let r = lanczos_condition(&Identity(30), &Identity(30), LanczosOptions::default()).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert!(r.converged);
    }

    #[test]
    fn two_by_two() {
        let a = DiagonalOperator::new(vec![1.0, 4.0]);
        let r = lanczos_condition(&Identity(2), &a, LanczosOptions::default()).unwrap();
        assert!((r.kappa - 4.0).abs() < 1e-12);
    }

    #[test]
    fn random_pair_matches_dense_oracle() {
        let n = 300;
        let a = random_spd(n, 1, 0.05);
        let g = random_spd(n, 2, 0.3);
        let r = lanczos_condition(&g, &a, LanczosOptions::default()).unwrap();
        let k = dense_condition(g.data(), a.data(), n).unwrap();
        assert!(r.converged);
        assert!((r.kappa - k).abs() < 0.01 * k, "{} vs {k}", r.kappa);
    }

    #[test]
    fn seed_changes_little() {
        let n = 200;
        let a = random_spd(n, 5, 0.1);
        let g = Identity(n);
        let k1 = lanczos_condition(&g, &a, LanczosOptions::default()).unwrap().kappa;
        let k2 = lanczos_condition(&g, &a, LanczosOptions { seed: 7, ..Default::default() })
            .unwrap()
            .kappa;
        assert!((k1 - k2).abs() < 0.01 * k1);
    }

    #[test]
    fn ritz_values_are_monotone() {
        let n = 120;
        let a = random_spd(n, 9, 0.02);
        let mut prev = (f64::INFINITY, 0.0);
        for m in 1..40 {
            let r = lanczos_condition(
                &Identity(n),
                &a,
                LanczosOptions {
                    tol: 1e-300,
                    max_iter: Some(m),
                    seed: 3,
                },
            )
            .unwrap();
            assert!(r.lambda_min <= prev.0 * (1.0 + 1e-12));
            assert!(r.lambda_max >= prev.1 * (1.0 - 1e-12));
            prev = (r.lambda_min, r.lambda_max);
        }
    }

    #[test]
    fn indefinite_is_reported() {
        let a = DiagonalOperator::new(vec![1.0, 2.0, 3.0]);
        let g = DiagonalOperator::new(vec![1.0, -1.0, 1.0]);
        assert!(matches!(
            lanczos_condition(&g, &a, LanczosOptions::default()),
            Err(Error::Indefinite(_))
        ));
    }

    #[test]
    fn zero_operator_breaks_down() {
        let a = DiagonalOperator::new(vec![0.0; 4]);
        assert!(matches!(
            lanczos_condition(&Identity(4), &a, LanczosOptions::default()),
            Err(Error::Breakdown(_))
        ));
    }

    #[test]
    fn pcg_identity_one_step() {
        let b = vec![1.0, -2.0, 3.5];
        let r = pcg_solve(&Identity(3), &Identity(3), &b, 1e-12, 10).unwrap();
        assert_eq!(r.iterations, 1);
        assert_eq!(r.x, b);
    }

    #[test]
    fn pcg_error_decreases_in_energy() {
        let n = 80;
        let a = random_spd(n, 4, 0.01);
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
        let b = a.apply(&xs).unwrap();
        let full = pcg_solve(&a, &Identity(n), &b, 1e-12, 500).unwrap();
        assert!(full.converged);
        let mut prev = f64::INFINITY;
        for k in 1..full.iterations {
            let r = pcg_solve(&a, &Identity(n), &b, 0.0, k).unwrap();
            let e: Vec<f64> = r.x.iter().zip(&xs).map(|(x, y)| x - y).collect();
            let en = dot(&e, &a.apply(&e).unwrap());
            assert!(en <= prev * (1.0 + 1e-10));
            prev = en;
        }
    }

    #[test]
    fn pcg_reports_non_convergence() {
        let a = random_spd(50, 8, 1e-3);
        let r = pcg_solve(&a, &Identity(50), &vec![1.0; 50], 1e-14, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.residual_history.len(), 4);
    }

    #[test]
    fn dense_oracle_basics() {
        let ev = dense_eig_oracle(&[1.0, 0.0, 0.0, 1.0], &[1.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(ev, vec![1.0, 1.0]);
        let ev = dense_eig_oracle(&[2.0, 0.0, 0.0, 8.0], &[1.0, 0.0, 0.0, 1.0], 2).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-14 && (ev[1] - 8.0).abs() < 1e-14);
        assert!(matches!(
            dense_eig_oracle(&[1.0, 0.0, 0.0, 1.0], &[1.0, 2.0, 2.0, 1.0], 2),
            Err(Error::Factorization(_))
        ));
    }
}
