//! Operator preconditioners with diagonal duality pairings for continuous
//! finite and boundary element discretisations.

// `!(x > 0.0)` is used on purpose so NaN is rejected too; index loops follow
// the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod duals;
pub mod error;
pub mod mesh;
pub mod precond;
pub mod quadrature;
pub mod spectral;
pub mod space;

pub use error::{Error, Result};
pub use mesh::{GammaSpec, PatchTable, SimplicialMesh};
