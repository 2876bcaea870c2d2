//! Runtime objects of the biorthogonal dual pairings: the diagonal coupling
//! `D`, the element/vertex incidence `p`, the bubble diagonal, the embedding
//! `q` of linear into higher-order Lagrange coefficients and the node
//! diagonal used on the higher-order remainder.
//!
//! The dual functions themselves are never needed at runtime. [`DualOracle`]
//! builds them on refined meshes so the identities they are designed to
//! satisfy can be checked.

mod oracle;

pub use oracle::{DualOracle, PwcFormula};

use crate::error::{Error, Result};
use crate::mesh::{PatchTable, SimplicialMesh};
use crate::precond::{DiagonalOperator, SparseMatrix};
use crate::quadrature::{GaussRule, TriangleRule};
use crate::space::LagrangeSpace;

/// Which dual collection pairs with the continuous piecewise linears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DualVariant {
    /// Duals that are piecewise constant on a refinement; `B` acts on
    /// piecewise constants of the coarse mesh.
    Pwc,
    /// Duals built from continuous piecewise linears plus bubbles; `B` acts
    /// on the hats themselves.
    Cpl,
}

impl DualVariant {
    pub fn name(self) -> &'static str {
        match self {
            DualVariant::Pwc => "pwc",
            DualVariant::Cpl => "cpl",
        }
    }
}

/// `diag |ω_ν|` (PWC) or `diag |ω_ν|/(d+1)` (CPL) over the free vertices.
pub fn assemble_d(patches: &PatchTable, variant: DualVariant) -> Result<DiagonalOperator> {
    if patches.n_free() == 0 {
        return Err(Error::InvalidMesh("no free vertices".into()));
    }
    let scale = match variant {
        DualVariant::Pwc => 1.0,
        DualVariant::Cpl => 1.0 / (patches.dim() as f64 + 1.0),
    };
    Ok(DiagonalOperator::new(
        patches.free_volumes().iter().map(|w| w * scale).collect(),
    ))
}

/// Element-by-free-vertex incidence: `p[T][ν] = 1` iff `ν` is a vertex of `T`.
pub fn assemble_p(mesh: &SimplicialMesh, patches: &PatchTable) -> SparseMatrix {
    let rows = (0..mesh.n_elements())
        .map(|t| {
            let mut r: Vec<(usize, f64)> = mesh
                .element(t)
                .iter()
                .filter_map(|&v| patches.free_index(v).map(|k| (k, 1.0)))
                .collect();
            r.sort_by_key(|e| e.0);
            r
        })
        .collect();
    SparseMatrix::from_rows(patches.n_free(), rows)
}

/// `β₁ D^{1+2s/d}`, the diagonal acting on the bubble part.
pub fn bubble_diagonal(d: &DiagonalOperator, dim: usize, s: f64, beta1: f64) -> Result<DiagonalOperator> {
    if !(beta1 > 0.0) {
        return Err(Error::InvalidArgument(format!("beta1 must be positive, got {beta1}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s must lie in [0,1], got {s}")));
    }
    Ok(d.powf(1.0 + 2.0 * s / dim as f64).scaled(beta1))
}

/// Inclusion of the linear Lagrange space into the degree-`ℓ` space, in
/// nodal coordinates: rows are degree-`ℓ` dofs, columns free vertices, and
/// the entry is the hat of the column vertex evaluated at the row node.
///
/// For `ℓ = 1` this is the identity.
pub fn assemble_q(space: &LagrangeSpace) -> Result<SparseMatrix> {
    let ell = space.degree();
    let nv = space.n_free_vertices();
    let mut rows: Vec<Option<Vec<(usize, f64)>>> = vec![None; space.n_dofs()];
    let n_vertices = space.dim() + 1;
    for t in 0..space.n_elements() {
        let dofs = space.element_dofs(t);
        for (i, alpha) in space.local_indices().iter().enumerate() {
            let Some(p) = dofs[i] else { continue };
            if rows[p].is_some() {
                continue;
            }
            let mut r = Vec::new();
            for k in 0..n_vertices {
                if alpha[k] == 0 {
                    continue;
                }
                // the vertex dof of local vertex k sits at local index k
                if let Some(v) = dofs[k] {
                    r.push((v, alpha[k] as f64 / ell as f64));
                }
            }
            r.sort_by_key(|e| e.0);
            rows[p] = Some(r);
        }
    }
    let rows = rows
        .into_iter()
        .map(|r| r.ok_or_else(|| Error::InvalidMesh("dof without an element".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(SparseMatrix::from_rows(nv, rows))
}

/// `β₂ (Σ_T h_T^{-2s} ‖φ_ν‖²_{L₂(T)})^{-1}` for every degree-`ℓ` dof.
pub fn lagrange_node_diagonal(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    s: f64,
    beta2: f64,
) -> Result<DiagonalOperator> {
    if !(beta2 > 0.0) {
        return Err(Error::InvalidArgument(format!("beta2 must be positive, got {beta2}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s must lie in [0,1], got {s}")));
    }
    // ∫ φ_i² over the reference element, normalised to unit volume
    let n = space.degree() + 1;
    let reference: Vec<f64> = space
        .local_basis()
        .iter()
        .map(|b| {
            if mesh.dim() == 1 {
                let g = GaussRule::new(n);
                g.points
                    .iter()
                    .zip(&g.weights)
                    .map(|(&x, &w)| w * b.eval(x, 0.0).powi(2))
                    .sum::<f64>()
            } else {
                let r = TriangleRule::new(n);
                r.points
                    .iter()
                    .zip(&r.weights)
                    .map(|(p, &w)| 2.0 * w * b.eval(p[1], p[2]).powi(2))
                    .sum::<f64>()
            }
        })
        .collect();
    let mut norms = vec![0.0; space.n_dofs()];
    for t in 0..mesh.n_elements() {
        let vol = mesh.volume(t);
        let weight = vol * mesh.h(t).powf(-2.0 * s);
        for (i, dof) in space.element_dofs(t).iter().enumerate() {
            if let Some(p) = *dof {
                norms[p] += weight * reference[i];
            }
        }
    }
    Ok(DiagonalOperator::new(norms.iter().map(|w| beta2 / w).collect()))
}
