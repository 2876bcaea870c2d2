use std::io::Write;

use rayon::prelude::*;

use crate::error::{shape, Error, Result};
use crate::precond::LinearOperator;

/// What the rows and columns of an assembled matrix are indexed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofLabel {
    /// Elements, for piecewise constants.
    Elements,
    /// Free vertices, for continuous piecewise linears.
    Vertices,
    /// Free degree-ℓ Lagrange nodes.
    Nodes(usize),
}

/// Square dense matrix, row-major, with an optional implicit rank-one term
/// `α m mᵀ` that is never added to the stored entries.
#[derive(Debug, Clone)]
pub struct DenseOperator {
    n: usize,
    data: Vec<f64>,
    label: DofLabel,
    rank_one: Option<(f64, Vec<f64>)>,
}

const PARALLEL_ROWS: usize = 256;

impl DenseOperator {
    pub fn new(n: usize, data: Vec<f64>, label: DofLabel) -> Result<Self> {
        if data.len() != n * n {
            return Err(shape("dense operator storage", n * n, data.len()));
        }
        Ok(DenseOperator {
            n,
            data,
            label,
            rank_one: None,
        })
    }

    /// Adds the implicit term `alpha · m mᵀ`.
    pub fn with_rank_one(mut self, alpha: f64, m: Vec<f64>) -> Result<Self> {
        if m.len() != self.n {
            return Err(shape("rank-one term", self.n, m.len()));
        }
        if !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "rank-one weight must be nonnegative, got {alpha}"
            )));
        }
        self.rank_one = Some((alpha, m));
        Ok(self)
    }

    pub fn label(&self) -> DofLabel {
        self.label
    }

    /// Stored entries (without the rank-one term).
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn rank_one(&self) -> Option<(f64, &[f64])> {
        self.rank_one.as_ref().map(|(a, m)| (*a, m.as_slice()))
    }

    /// Entry `(i, j)` including the rank-one term.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let mut v = self.data[i * self.n + j];
        if let Some((a, m)) = &self.rank_one {
            v += a * m[i] * m[j];
        }
        v
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    /// `max |M − Mᵀ| / max |M|` over stored entries.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut big: f64 = 0.0;
        let mut diff: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                big = big.max(self.data[i * n + j].abs());
                diff = diff.max((self.data[i * n + j] - self.data[j * n + i]).abs());
            }
        }
        if big == 0.0 {
            0.0
        } else {
            diff / big
        }
    }

    /// Binary export: little-endian `u64` dimension, then row-major `f64`s
    /// (rank-one term included).
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(&(self.n as u64).to_le_bytes())?;
        for i in 0..self.n {
            for j in 0..self.n {
                out.write_all(&self.get(i, j).to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Reads the format of [`DenseOperator::write_binary`].
    pub fn read_binary<R: std::io::Read>(mut input: R, label: DofLabel) -> Result<Self> {
        let mut b8 = [0u8; 8];
        input.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            input.read_exact(&mut b8)?;
            data.push(f64::from_le_bytes(b8));
        }
        DenseOperator::new(n, data, label)
    }

    /// `row col value` lines for nonzero entries (rank-one term included).
    pub fn write_coordinate<W: Write>(&self, mut out: W) -> Result<()> {
        for i in 0..self.n {
            for j in 0..self.n {
                let v = self.get(i, j);
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v}")?;
                }
            }
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    // four accumulators let the compiler vectorise
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        for l in 0..4 {
            acc[l] += a[4 * k + l] * b[4 * k + l];
        }
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

impl LinearOperator for DenseOperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_to(&self, x: &[f64], y: &mut [f64]) {
        let n = self.n;
        if n >= PARALLEL_ROWS {
            y.par_iter_mut()
                .enumerate()
                .for_each(|(i, yi)| *yi = dot(&self.data[i * n..(i + 1) * n], x));
        } else {
            for (i, yi) in y.iter_mut().enumerate() {
                *yi = dot(&self.data[i * n..(i + 1) * n], x);
            }
        }
        if let Some((a, m)) = &self.rank_one {
            let s = a * dot(m, x);
            for (yi, mi) in y.iter_mut().zip(m) {
                *yi += s * mi;
            }
        }
    }

    fn to_dense(&self) -> Vec<f64> {
        let mut out = self.data.clone();
        if let Some((a, m)) = &self.rank_one {
            for i in 0..self.n {
                for j in 0..self.n {
                    out[i * self.n + j] += a * m[i] * m[j];
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_is_applied_implicitly() {
        let a = DenseOperator::new(2, vec![2.0, 1.0, 1.0, 3.0], DofLabel::Vertices)
            .unwrap()
            .with_rank_one(0.5, vec![1.0, 2.0])
            .unwrap();
        assert_eq!(a.data(), &[2.0, 1.0, 1.0, 3.0]);
        let y = a.apply(&[1.0, 1.0]).unwrap();
        // stored part (3, 4) plus 0.5 * 3 * (1, 2)
        assert_eq!(y, vec![4.5, 7.0]);
        assert_eq!(a.get(1, 1), 5.0);
        assert_eq!(a.to_dense(), vec![2.5, 2.0, 2.0, 5.0]);
    }

    #[test]
    fn negative_alpha_rejected() {
        let a = DenseOperator::new(1, vec![1.0], DofLabel::Vertices).unwrap();
        assert!(a.with_rank_one(-0.1, vec![1.0]).is_err());
    }

    #[test]
    fn binary_round_trip() {
        let a = DenseOperator::new(2, vec![1.0, -2.5, 1e-300, 4.0], DofLabel::Elements).unwrap();
        let mut buf = Vec::new();
        a.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 8);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        let b = DenseOperator::read_binary(&buf[..], DofLabel::Elements).unwrap();
        assert_eq!(b.data(), a.data());
    }

    #[test]
    fn large_matvec_matches_naive() {
        let n = 300;
        let data: Vec<f64> = (0..n * n).map(|k| ((k * 7919) % 101) as f64 - 50.0).collect();
        let a = DenseOperator::new(n, data.clone(), DofLabel::Elements).unwrap();
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let y = a.apply(&x).unwrap();
        for i in 0..n {
            let r: f64 = (0..n).map(|j| data[i * n + j] * x[j]).sum();
            assert!((y[i] - r).abs() < 1e-10 * (1.0 + r.abs()));
        }
    }
}
