//! Dense Galerkin matrices: the positive-order operators `A` and the
//! opposite-order operators `B`, on intervals and on flat-panel surfaces.

mod dense;
mod fem;
mod interval;
mod surface;

pub use dense::{DenseOperator, DofLabel};
pub use fem::{assemble_mass, assemble_stiffness};
pub use interval::{
    assemble_greens_1d, assemble_hypersingular_1d, assemble_single_layer_1d, log_moments, Space1d,
};
pub use surface::{
    assemble_hypersingular_3d, assemble_single_layer_3d, hypersingular_3d_from_single_layer,
    SingleLayer,
};

use rayon::prelude::*;

/// Quadrature orders for boundary element assembly.
///
/// Touching panel pairs use the coordinate-transform rules with
/// `singular_order` Gauss points in the polynomial directions and
/// `near_order` in the nearly singular ones. Separated pairs use tensor
/// Gauss rules whose order depends on the ratio of centroid distance to
/// panel diameter; pairs closer than `split_ratio` are subdivided first.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureProfile {
    pub singular_order: usize,
    pub near_order: usize,
    /// `(min ratio, order)` in decreasing ratio; the last entry is the fallback.
    pub far_orders: [(f64, usize); 4],
    pub split_ratio: f64,
    pub max_split_depth: usize,
}

impl QuadratureProfile {
    pub fn standard() -> Self {
        QuadratureProfile {
            singular_order: 5,
            near_order: 10,
            far_orders: [(8.0, 4), (4.0, 5), (2.0, 6), (0.0, 7)],
            split_ratio: 1.5,
            max_split_depth: 3,
        }
    }

    pub fn high() -> Self {
        QuadratureProfile {
            singular_order: 8,
            near_order: 14,
            far_orders: [(8.0, 6), (4.0, 7), (2.0, 8), (0.0, 9)],
            split_ratio: 1.5,
            max_split_depth: 4,
        }
    }

    /// Every order doubled; used for self-convergence checks.
    pub fn doubled(&self) -> Self {
        let mut p = *self;
        p.singular_order *= 2;
        p.near_order *= 2;
        for o in &mut p.far_orders {
            o.1 *= 2;
        }
        p
    }

    pub fn far_order(&self, ratio: f64) -> usize {
        for &(r, n) in &self.far_orders {
            if ratio >= r {
                return n;
            }
        }
        self.far_orders[self.far_orders.len() - 1].1
    }
}

impl Default for QuadratureProfile {
    fn default() -> Self {
        Self::standard()
    }
}

/// Evaluates `compute(t, s, block)` for all `t ≤ s < n` in parallel row
/// chunks and feeds the blocks to `sink` in ascending `(t, s)` order, so the
/// reduction order is deterministic.
pub(crate) fn for_each_upper_pair<C, S>(n: usize, block: usize, compute: C, mut sink: S)
where
    C: Fn(usize, usize, &mut [f64]) + Sync,
    S: FnMut(usize, usize, &[f64]),
{
    let chunk = 32;
    let mut start = 0;
    while start < n {
        let end = (start + chunk).min(n);
        let rows: Vec<Vec<f64>> = (start..end)
            .into_par_iter()
            .map(|t| {
                let mut row = vec![0.0; (n - t) * block];
                for s in t..n {
                    let k = (s - t) * block;
                    compute(t, s, &mut row[k..k + block]);
                }
                row
            })
            .collect();
        for (t, row) in (start..end).zip(rows) {
            for s in t..n {
                let k = (s - t) * block;
                sink(t, s, &row[k..k + block]);
            }
        }
        start = end;
    }
}
