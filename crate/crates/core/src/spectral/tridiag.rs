//! Extreme eigenvalues of a symmetric tridiagonal matrix by Sturm-sequence
//! bisection.

/// Number of eigenvalues strictly below `x`.
fn count_below(alpha: &[f64], beta: &[f64], x: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for i in 0..alpha.len() {
        let b2 = if i == 0 { 0.0 } else { beta[i - 1] * beta[i - 1] };
        q = alpha[i] - x - if i == 0 { 0.0 } else { b2 / q };
        if q == 0.0 {
            q = -f64::EPSILON * (alpha[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// `k`-th smallest eigenvalue (0-based).
fn kth(alpha: &[f64], beta: &[f64], k: usize, lo: f64, hi: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if count_below(alpha, beta, mid) > k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Smallest and largest eigenvalue; `beta` has one entry fewer than `alpha`.
pub(super) fn extreme_eigenvalues(alpha: &[f64], beta: &[f64]) -> (f64, f64) {
    let n = alpha.len();
    if n == 1 {
        return (alpha[0], alpha[0]);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let r = if i > 0 { beta[i - 1].abs() } else { 0.0 } + if i + 1 < n { beta[i].abs() } else { 0.0 };
        lo = lo.min(alpha[i] - r);
        hi = hi.max(alpha[i] + r);
    }
    let pad = 1e-14 * (lo.abs().max(hi.abs())).max(f64::MIN_POSITIVE);
    let (lo, hi) = (lo - pad, hi + pad);
    (kth(alpha, beta, 0, lo, hi), kth(alpha, beta, n - 1, lo, hi))
}

/// Last component of the unit eigenvector belonging to an extreme
/// eigenvalue `theta` (the smallest if `lowest`), by inverse iteration. The
/// shift is placed just outside the spectrum so the shifted matrix is
/// definite and needs no pivoting.
pub(super) fn extreme_last_component(alpha: &[f64], beta: &[f64], theta: f64, lowest: bool) -> f64 {
    let n = alpha.len();
    if n == 1 {
        return 1.0;
    }
    let scale = alpha.iter().chain(beta).fold(0.0f64, |m, x| m.max(x.abs()));
    let delta = 1e-10 * scale.max(f64::MIN_POSITIVE);
    // M = sign·(T − σ) is positive definite
    let (sigma, sign) = if lowest { (theta - delta, 1.0) } else { (theta + delta, -1.0) };
    let mut d = vec![0.0; n];
    let mut l = vec![0.0; n - 1];
    d[0] = sign * (alpha[0] - sigma);
    for i in 0..n - 1 {
        let b = sign * beta[i];
        l[i] = b / d[i];
        d[i + 1] = sign * (alpha[i + 1] - sigma) - l[i] * b;
    }
    let mut y = vec![1.0; n];
    for _ in 0..3 {
        for i in 1..n {
            y[i] -= l[i - 1] * y[i - 1];
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n - 1).rev() {
            y[i] -= l[i] * y[i + 1];
        }
        let norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
        y.iter_mut().for_each(|x| *x /= norm);
    }
    y[n - 1].abs()
}
