//! Mass and stiffness matrices of continuous Lagrange spaces, integrated
//! exactly with Gauss rules of sufficient degree.

use super::{DenseOperator, DofLabel};
use crate::error::Result;
use crate::mesh::{cross, dot, sub, Point, SimplicialMesh};
use crate::quadrature::{GaussRule, TriangleRule};
use crate::space::LagrangeSpace;

/// Points in local coordinates `(λ1, λ2)` and weights summing to `|T|`.
fn element_rule(mesh: &SimplicialMesh, t: usize, n: usize) -> Vec<(f64, f64, f64)> {
    let vol = mesh.volume(t);
    if mesh.dim() == 1 {
        let g = GaussRule::new(n);
        g.points
            .iter()
            .zip(&g.weights)
            .map(|(&s, &w)| (s, 0.0, w * vol))
            .collect()
    } else {
        let r = TriangleRule::new(n);
        r.points
            .iter()
            .zip(&r.weights)
            .map(|(p, &w)| (p[1], p[2], 2.0 * w * vol))
            .collect()
    }
}

/// Tangential gradients of `λ1` and `λ2` on element `t`.
fn lambda_gradients(mesh: &SimplicialMesh, t: usize) -> [Point; 2] {
    let el = mesh.element(t);
    let p0 = mesh.vertex(el[0]);
    if mesh.dim() == 1 {
        let e = sub(mesh.vertex(el[1]), p0);
        let h2 = dot(&e, &e);
        return [e.map(|x| x / h2), [0.0; 3]];
    }
    let p1 = mesh.vertex(el[1]);
    let p2 = mesh.vertex(el[2]);
    let n = cross(&sub(p1, p0), &sub(p2, p0));
    let nn = dot(&n, &n);
    // ∇λ_i = N × (P_{i+2} − P_{i+1}) / |N|²
    let g1 = cross(&n, &sub(p0, p2)).map(|x| x / nn);
    let g2 = cross(&n, &sub(p1, p0)).map(|x| x / nn);
    [g1, g2]
}

fn assemble(mesh: &SimplicialMesh, space: &LagrangeSpace, stiffness: bool) -> Result<DenseOperator> {
    let n = space.n_dofs();
    let nl = space.n_local();
    let mut a = vec![0.0; n * n];
    let order = space.degree() + 1;
    let mut vals = vec![0.0; nl];
    let mut grads = vec![[0.0; 3]; nl];
    for t in 0..mesh.n_elements() {
        let dofs = space.element_dofs(t);
        let [g1, g2] = lambda_gradients(mesh, t);
        for (l1, l2, w) in element_rule(mesh, t, order) {
            for j in 0..nl {
                if stiffness {
                    let d = &space.local_gradients()[j];
                    let (a1, a2) = (d[0].eval(l1, l2), d[1].eval(l1, l2));
                    for c in 0..3 {
                        grads[j][c] = a1 * g1[c] + a2 * g2[c];
                    }
                } else {
                    vals[j] = space.local_basis()[j].eval(l1, l2);
                }
            }
            for i in 0..nl {
                let Some(p) = dofs[i] else { continue };
                for j in 0..nl {
                    let Some(q) = dofs[j] else { continue };
                    a[p * n + q] += w * if stiffness {
                        dot(&grads[i], &grads[j])
                    } else {
                        vals[i] * vals[j]
                    };
                }
            }
        }
    }
    DenseOperator::new(n, a, DofLabel::Nodes(space.degree()))
}

/// `∫ φ_j φ_i` on the free dofs of `space`.
pub fn assemble_mass(mesh: &SimplicialMesh, space: &LagrangeSpace) -> Result<DenseOperator> {
    assemble(mesh, space, false)
}

/// `∫ ∇φ_j · ∇φ_i` (tangential gradients on surfaces) on the free dofs.
pub fn assemble_stiffness(mesh: &SimplicialMesh, space: &LagrangeSpace) -> Result<DenseOperator> {
    assemble(mesh, space, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaSpec;

    #[test]
    fn interval_stencils() {
        let mesh = SimplicialMesh::interval(4, GammaSpec::Both).unwrap();
        let s = LagrangeSpace::new(&mesh, 1).unwrap();
        let h = 0.25;
        let k = assemble_stiffness(&mesh, &s).unwrap();
        assert!((k.get(1, 0) + 1.0 / h).abs() < 1e-13);
        assert!((k.get(1, 1) - 2.0 / h).abs() < 1e-13);
        assert!((k.get(1, 2) + 1.0 / h).abs() < 1e-13);
        let m = assemble_mass(&mesh, &s).unwrap();
        assert!((m.get(1, 0) - h / 6.0).abs() < 1e-15);
        assert!((m.get(1, 1) - 2.0 * h / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mass_totals_and_stiffness_rows() {
        let mesh = SimplicialMesh::cube_surface().refine_uniform_bisection();
        for degree in 1..=3 {
            let s = LagrangeSpace::new(&mesh, degree).unwrap();
            let m = assemble_mass(&mesh, &s).unwrap();
            let total: f64 = m.data().iter().sum();
            assert!((total - 6.0).abs() < 1e-12);
            let ints = super::super::surface::basis_integrals(&mesh, &s);
            let n = s.n_dofs();
            for i in 0..n {
                let r: f64 = (0..n).map(|j| m.get(i, j)).sum();
                assert!((r - ints[i]).abs() < 1e-13);
            }
            let k = assemble_stiffness(&mesh, &s).unwrap();
            for i in 0..n {
                let r: f64 = (0..n).map(|j| k.get(i, j)).sum();
                assert!(r.abs() < 1e-11);
            }
            assert!(k.symmetry_defect() < 1e-13);
        }
    }

    #[test]
    fn quadratic_midpoint_mass() {
        let mesh = SimplicialMesh::interval(1, GammaSpec::Both).unwrap().scaled(0.3);
        let s = LagrangeSpace::new(&mesh, 2).unwrap();
        let m = assemble_mass(&mesh, &s).unwrap();
        assert_eq!(s.n_dofs(), 1);
        assert!((m.get(0, 0) - 8.0 * 0.3 / 15.0).abs() < 1e-15);
    }
}
