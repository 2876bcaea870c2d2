use std::sync::Arc;

use super::{DiagonalOperator, LinearOperator, SparseMatrix};
use crate::assembly::DenseOperator;
use crate::error::{shape, Result};

/// `G = D⁻¹ (pᵀ B p + B_bubble) D⁻¹` for the piecewise-constant dual space.
#[derive(Clone)]
pub struct PwcPreconditioner {
    d_inv: Vec<f64>,
    p: SparseMatrix,
    b: Arc<DenseOperator>,
    bubble: Vec<f64>,
}

impl PwcPreconditioner {
    pub fn new(
        d: &DiagonalOperator,
        p: SparseMatrix,
        b: Arc<DenseOperator>,
        bubble: &DiagonalOperator,
    ) -> Result<Self> {
        if p.n_rows() != b.dim() {
            return Err(shape("pwc preconditioner: rows of p vs B", b.dim(), p.n_rows()));
        }
        if p.n_cols() != d.dim() {
            return Err(shape("pwc preconditioner: columns of p vs D", d.dim(), p.n_cols()));
        }
        if bubble.dim() != d.dim() {
            return Err(shape("pwc preconditioner: bubble vs D", d.dim(), bubble.dim()));
        }
        Ok(PwcPreconditioner {
            d_inv: d.entries().iter().map(|x| 1.0 / x).collect(),
            p,
            b,
            bubble: bubble.entries().to_vec(),
        })
    }
}

impl LinearOperator for PwcPreconditioner {
    fn dim(&self) -> usize {
        self.d_inv.len()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let xs: Vec<f64> = x.iter().zip(&self.d_inv).map(|(a, b)| a * b).collect();
        let mut u = vec![0.0; self.p.n_rows()];
        self.p.mul_to(&xs, &mut u);
        let mut w = vec![0.0; u.len()];
        self.b.apply_to(&u, &mut w);
        self.p.mul_transpose_to(&w, y);
        for i in 0..y.len() {
            y[i] = self.d_inv[i] * (y[i] + self.bubble[i] * xs[i]);
        }
    }

    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let ne = self.p.n_rows();
        let b = self.b.to_dense();
        // bp = B p, ne × n
        let mut bp = vec![0.0; ne * n];
        for s in 0..ne {
            for (j, v) in self.p.row(s) {
                for r in 0..ne {
                    bp[r * n + j] += v * b[r * ne + s];
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for t in 0..ne {
            for (i, v) in self.p.row(t) {
                let src = &bp[t * n..(t + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (o, s) in dst.iter_mut().zip(src) {
                    *o += v * s;
                }
            }
        }
        for i in 0..n {
            out[i * n + i] += self.bubble[i];
            for j in 0..n {
                out[i * n + j] *= self.d_inv[i] * self.d_inv[j];
            }
        }
        out
    }
}

/// `G = D⁻¹ (B + B_bubble) D⁻¹` for the continuous piecewise-linear dual space.
#[derive(Clone)]
pub struct CplPreconditioner {
    d_inv: Vec<f64>,
    b: Arc<DenseOperator>,
    bubble: Vec<f64>,
}

impl CplPreconditioner {
    pub fn new(d: &DiagonalOperator, b: Arc<DenseOperator>, bubble: &DiagonalOperator) -> Result<Self> {
        if b.dim() != d.dim() {
            return Err(shape("cpl preconditioner: B vs D", d.dim(), b.dim()));
        }
        if bubble.dim() != d.dim() {
            return Err(shape("cpl preconditioner: bubble vs D", d.dim(), bubble.dim()));
        }
        Ok(CplPreconditioner {
            d_inv: d.entries().iter().map(|x| 1.0 / x).collect(),
            b,
            bubble: bubble.entries().to_vec(),
        })
    }
}

impl LinearOperator for CplPreconditioner {
    fn dim(&self) -> usize {
        self.d_inv.len()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let xs: Vec<f64> = x.iter().zip(&self.d_inv).map(|(a, b)| a * b).collect();
        self.b.apply_to(&xs, y);
        for i in 0..y.len() {
            y[i] = self.d_inv[i] * (y[i] + self.bubble[i] * xs[i]);
        }
    }

    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = self.b.to_dense();
        for i in 0..n {
            out[i * n + i] += self.bubble[i];
            for j in 0..n {
                out[i * n + j] *= self.d_inv[i] * self.d_inv[j];
            }
        }
        out
    }
}

/// `G = q G¹ qᵀ + G²` for degree-ℓ trial spaces, with `G¹` a preconditioner
/// on the piecewise-linear subspace and `G²` a diagonal on all ℓ-nodes.
pub struct HigherOrderPreconditioner {
    q: SparseMatrix,
    g1: Box<dyn LinearOperator>,
    g2: DiagonalOperator,
}

impl HigherOrderPreconditioner {
    pub fn new(q: SparseMatrix, g1: Box<dyn LinearOperator>, g2: DiagonalOperator) -> Result<Self> {
        if q.n_cols() != g1.dim() {
            return Err(shape("higher-order preconditioner: columns of q vs G1", g1.dim(), q.n_cols()));
        }
        if q.n_rows() != g2.dim() {
            return Err(shape("higher-order preconditioner: rows of q vs G2", g2.dim(), q.n_rows()));
        }
        Ok(HigherOrderPreconditioner { q, g1, g2 })
    }
}

impl LinearOperator for HigherOrderPreconditioner {
    fn dim(&self) -> usize {
        self.g2.dim()
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let m = self.q.n_cols();
        let mut u = vec![0.0; m];
        self.q.mul_transpose_to(x, &mut u);
        let mut w = vec![0.0; m];
        self.g1.apply_to(&u, &mut w);
        self.q.mul_to(&w, y);
        for (yi, (d, xi)) in y.iter_mut().zip(self.g2.entries().iter().zip(x)) {
            *yi += d * xi;
        }
    }

    fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let m = self.q.n_cols();
        let g1 = self.g1.to_dense();
        // qg = q G1, n × m
        let mut qg = vec![0.0; n * m];
        for i in 0..n {
            for (k, v) in self.q.row(i) {
                for j in 0..m {
                    qg[i * m + j] += v * g1[k * m + j];
                }
            }
        }
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.q.row(j).map(|(k, v)| qg[i * m + k] * v).sum();
            }
            out[i * n + i] += self.g2.entries()[i];
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::DofLabel;
    use crate::error::Error;

    fn dense(n: usize, f: impl Fn(usize, usize) -> f64) -> Arc<DenseOperator> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                data[i * n + j] = f(i, j);
            }
        }
        Arc::new(DenseOperator::new(n, data, DofLabel::Vertices).unwrap())
    }

    #[test]
    fn single_entry_pwc() {
        let (w, b, beta, s, d) = (0.3_f64, 2.0_f64, 0.65, 0.5, 2.0);
        let dd = DiagonalOperator::new(vec![w]);
        let p = SparseMatrix::from_rows(1, vec![vec![(0, 1.0)]]);
        let bub = dd.powf(1.0 + 2.0 * s / d).scaled(beta);
        let g = PwcPreconditioner::new(&dd, p, dense(1, |_, _| b), &bub).unwrap();
        let v = g.apply(&[1.0]).unwrap()[0];
        let expect = (b + beta * w.powf(1.0 + 2.0 * s / d)) / (w * w);
        assert!((v - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn zero_b_gives_pure_diagonal() {
        let dd = DiagonalOperator::new(vec![0.5, 0.25, 2.0]);
        let p = SparseMatrix::from_rows(3, vec![vec![(0, 1.0), (1, 1.0)], vec![(2, 1.0)]]);
        let (beta, s, d) = (0.65, 0.5, 2.0);
        let bub = dd.powf(1.0 + 2.0 * s / d).scaled(beta);
        let g = PwcPreconditioner::new(&dd, p, dense(2, |_, _| 0.0), &bub).unwrap();
        let x = [1.0, -2.0, 0.5];
        let y = g.apply(&x).unwrap();
        for i in 0..3 {
            let e = beta * dd.entries()[i].powf(2.0 * s / d - 1.0) * x[i];
            assert!((y[i] - e).abs() < 1e-14);
        }
    }

    #[test]
    fn cpl_identity_case() {
        let id = DiagonalOperator::new(vec![1.0; 4]);
        let g = CplPreconditioner::new(&id, dense(4, |i, j| if i == j { 1.0 } else { 0.0 }), &id.scaled(0.34))
            .unwrap();
        let y = g.apply(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(y, vec![1.34, 2.68, 4.02, 5.36]);
    }

    #[test]
    fn shape_errors() {
        let dd = DiagonalOperator::new(vec![1.0, 1.0]);
        let p = SparseMatrix::from_rows(2, vec![vec![(0, 1.0)]]);
        assert!(matches!(
            PwcPreconditioner::new(&dd, p, dense(2, |_, _| 1.0), &dd),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            CplPreconditioner::new(&dd, dense(3, |_, _| 1.0), &dd),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn dense_materialisation_matches_application() {
        let n = 5;
        let ne = 7;
        let dd = DiagonalOperator::new((0..n).map(|i| 0.3 + 0.1 * i as f64).collect());
        let rows: Vec<Vec<(usize, f64)>> = (0..ne)
            .map(|t| vec![(t % n, 1.0), ((t + 2) % n, 1.0)])
            .collect();
        let p = SparseMatrix::from_rows(n, rows);
        let b = dense(ne, |i, j| 1.0 / (1.0 + (i as f64 - j as f64).abs()));
        let g = PwcPreconditioner::new(&dd, p, b, &dd.powf(1.5).scaled(0.65)).unwrap();
        let fast = g.to_dense();
        let mut slow = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let c = g.apply(&e).unwrap();
            for i in 0..n {
                slow[i * n + j] = c[i];
            }
        }
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-14);
        }

        let q = SparseMatrix::from_rows(n, (0..8).map(|i| vec![(i % n, 0.5), ((i + 1) % n, 0.5)]).collect());
        let h = HigherOrderPreconditioner::new(q, Box::new(g), DiagonalOperator::new(vec![0.1; 8])).unwrap();
        let fast = h.to_dense();
        for j in 0..8 {
            let mut e = vec![0.0; 8];
            e[j] = 1.0;
            let c = h.apply(&e).unwrap();
            for i in 0..8 {
                assert!((fast[i * 8 + j] - c[i]).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn degenerate_higher_order_is_g1() {
        let id = DiagonalOperator::new(vec![1.0; 3]);
        let g1 = CplPreconditioner::new(&id, dense(3, |i, j| (i + j) as f64 + if i == j { 3.0 } else { 0.0 }), &id).unwrap();
        let reference = g1.to_dense();
        let q = SparseMatrix::from_rows(3, (0..3).map(|i| vec![(i, 1.0)]).collect());
        let h = HigherOrderPreconditioner::new(q, Box::new(g1), DiagonalOperator::new(vec![0.0; 3])).unwrap();
        assert_eq!(h.to_dense(), reference);
    }
}
