//! Continuous Lagrange spaces of degree 1 to 3 with homogeneous conditions on γ.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::mesh::{Point, SimplicialMesh};

/// Dense bivariate polynomial in the local coordinates `(λ1, λ2)`;
/// `λ0 = 1 − λ1 − λ2` is eliminated.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly2 {
    deg: usize,
    c: Vec<f64>,
}

impl Poly2 {
    pub fn constant(v: f64) -> Self {
        Poly2 { deg: 0, c: vec![v] }
    }

    fn zero(deg: usize) -> Self {
        Poly2 {
            deg,
            c: vec![0.0; (deg + 1) * (deg + 1)],
        }
    }

    /// The local coordinate `λ_k`, `k ∈ {0, 1, 2}`.
    pub fn lambda(k: usize) -> Self {
        let mut p = Self::zero(1);
        match k {
            0 => {
                p.c[0] = 1.0;
                p.c[2] = -1.0;
                p.c[1] = -1.0;
            }
            1 => p.c[2] = 1.0,
            _ => p.c[1] = 1.0,
        }
        p
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        if i > self.deg || j > self.deg {
            0.0
        } else {
            self.c[i * (self.deg + 1) + j]
        }
    }

    pub fn mul(&self, o: &Poly2) -> Poly2 {
        let mut r = Self::zero(self.deg + o.deg);
        let n = r.deg + 1;
        for i in 0..=self.deg {
            for j in 0..=self.deg {
                let a = self.at(i, j);
                if a == 0.0 {
                    continue;
                }
                for k in 0..=o.deg {
                    for l in 0..=o.deg {
                        r.c[(i + k) * n + j + l] += a * o.at(k, l);
                    }
                }
            }
        }
        r
    }

    pub fn scale_add(&self, a: f64, b: f64) -> Poly2 {
        let mut r = self.clone();
        for x in &mut r.c {
            *x *= a;
        }
        r.c[0] += b;
        r
    }

    /// Evaluates at local coordinates `l1 = λ1`, `l2 = λ2`.
    pub fn eval(&self, l1: f64, l2: f64) -> f64 {
        let n = self.deg + 1;
        let mut s = 0.0;
        for i in (0..n).rev() {
            let mut row = 0.0;
            for j in (0..n).rev() {
                row = row * l2 + self.c[i * n + j];
            }
            s = s * l1 + row;
        }
        s
    }

    /// Partial derivative in `λ1` (`k = 1`) or `λ2` (`k = 2`).
    pub fn derivative(&self, k: usize) -> Poly2 {
        if self.deg == 0 {
            return Poly2::constant(0.0);
        }
        let mut r = Self::zero(self.deg);
        let n = self.deg + 1;
        for i in 0..n {
            for j in 0..n {
                let v = self.c[i * n + j];
                if k == 1 && i > 0 {
                    r.c[(i - 1) * n + j] += i as f64 * v;
                } else if k == 2 && j > 0 {
                    r.c[i * n + j - 1] += j as f64 * v;
                }
            }
        }
        r
    }

    /// Coefficients in the monomial basis of [`monomials`] of degree `deg`.
    pub fn monomial_coefficients(&self, deg: usize) -> Vec<f64> {
        monomial_exponents(deg)
            .iter()
            .map(|&(i, j)| self.at(i, j))
            .collect()
    }
}

/// Exponent pairs `(i, j)` of `λ1^i λ2^j` with `i + j ≤ deg`, in a fixed order.
pub fn monomial_exponents(deg: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::new();
    for total in 0..=deg {
        for i in (0..=total).rev() {
            v.push((i, total - i));
        }
    }
    v
}

/// Values of the monomials of [`monomial_exponents`] at `(l1, l2)`.
pub fn monomials(deg: usize, l1: f64, l2: f64, out: &mut [f64]) {
    let mut k = 0;
    for total in 0..=deg {
        for i in (0..=total).rev() {
            out[k] = l1.powi(i as i32) * l2.powi((total - i) as i32);
            k += 1;
        }
    }
}

/// Where a Lagrange node sits in the element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Vertex,
    Edge,
    Interior,
}

/// Degree-`ℓ` continuous Lagrange space on a mesh, nodes on γ removed.
///
/// Dof numbering: free vertices in ascending vertex id (identical to the
/// order of [`crate::mesh::PatchTable`]), then edge nodes in order of first
/// encounter, then element-interior nodes.
#[derive(Debug, Clone)]
pub struct LagrangeSpace {
    degree: usize,
    dim: usize,
    local: Vec<[usize; 3]>,
    basis: Vec<Poly2>,
    grads: Vec<[Poly2; 2]>,
    elem_dofs: Vec<Option<usize>>,
    node_points: Vec<Point>,
    node_kind: Vec<NodeKind>,
    n_free_vertices: usize,
}

fn local_multi_indices(dim: usize, degree: usize) -> Vec<[usize; 3]> {
    let mut all = Vec::new();
    for a0 in (0..=degree).rev() {
        for a1 in (0..=degree - a0).rev() {
            let a2 = degree - a0 - a1;
            if dim == 1 && a2 != 0 {
                continue;
            }
            all.push([a0, a1, a2]);
        }
    }
    let support = |a: &[usize; 3]| a.iter().filter(|&&x| x > 0).count();
    // vertices first, then edges, then interior; stable within each class
    all.sort_by_key(|a| support(a));
    all
}

impl LagrangeSpace {
    pub fn new(mesh: &SimplicialMesh, degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let dim = mesh.dim();
        let local = local_multi_indices(dim, degree);
        let ell = degree as f64;
        let basis: Vec<Poly2> = local
            .iter()
            .map(|alpha| {
                let mut p = Poly2::constant(1.0);
                for (i, &ai) in alpha.iter().enumerate() {
                    for j in 0..ai {
                        let f = Poly2::lambda(i).scale_add(ell / (j as f64 + 1.0), -(j as f64) / (j as f64 + 1.0));
                        p = p.mul(&f);
                    }
                }
                p
            })
            .collect();
        let grads = basis
            .iter()
            .map(|p| [p.derivative(1), p.derivative(2)])
            .collect();

        let nloc = local.len();
        let on_gamma = mesh.gamma_vertices();
        let gamma_edges = mesh.gamma_faces();
        let mut vertex_dof = vec![None; mesh.n_vertices()];
        let mut node_points = Vec::new();
        let mut node_kind = Vec::new();
        for v in 0..mesh.n_vertices() {
            if !on_gamma[v] {
                vertex_dof[v] = Some(node_points.len());
                node_points.push(*mesh.vertex(v));
                node_kind.push(NodeKind::Vertex);
            }
        }
        let n_free_vertices = node_points.len();
        let kind_of = |alpha: &[usize; 3]| {
            let s = alpha.iter().filter(|&&x| x > 0).count();
            if s == 1 {
                NodeKind::Vertex
            } else if s == dim + 1 {
                NodeKind::Interior
            } else {
                NodeKind::Edge
            }
        };
        let point_of = |el: &[usize], alpha: &[usize; 3]| {
            let mut p = [0.0; 3];
            for (k, &v) in el.iter().enumerate() {
                let w = alpha[k] as f64 / ell;
                for c in 0..3 {
                    p[c] += w * mesh.vertex(v)[c];
                }
            }
            p
        };

        let mut elem_dofs = vec![None; mesh.n_elements() * nloc];
        let mut edge_nodes: HashMap<(usize, usize, usize), usize> = HashMap::new();
        for t in 0..mesh.n_elements() {
            let el = mesh.element(t);
            for (j, alpha) in local.iter().enumerate() {
                match kind_of(alpha) {
                    NodeKind::Vertex => {
                        let k = alpha.iter().position(|&x| x > 0).expect("vertex node");
                        elem_dofs[t * nloc + j] = vertex_dof[el[k]];
                    }
                    NodeKind::Edge => {
                        let ks: Vec<usize> = (0..3).filter(|&k| alpha[k] > 0).collect();
                        let (a, b) = (el[ks[0]], el[ks[1]]);
                        let (lo, hi, pos) = if a < b {
                            (a, b, alpha[ks[0]])
                        } else {
                            (b, a, alpha[ks[1]])
                        };
                        if gamma_edges.contains(&vec![lo, hi]) {
                            continue;
                        }
                        let id = *edge_nodes.entry((lo, hi, pos)).or_insert_with(|| {
                            node_points.push(point_of(el, alpha));
                            node_kind.push(NodeKind::Edge);
                            node_points.len() - 1
                        });
                        elem_dofs[t * nloc + j] = Some(id);
                    }
                    NodeKind::Interior => {}
                }
            }
        }
        for t in 0..mesh.n_elements() {
            let el = mesh.element(t);
            for (j, alpha) in local.iter().enumerate() {
                if kind_of(alpha) == NodeKind::Interior {
                    elem_dofs[t * nloc + j] = Some(node_points.len());
                    node_points.push(point_of(el, alpha));
                    node_kind.push(NodeKind::Interior);
                }
            }
        }
        Ok(LagrangeSpace {
            degree,
            dim,
            local,
            basis,
            grads,
            elem_dofs,
            node_points,
            node_kind,
            n_free_vertices,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_dofs(&self) -> usize {
        self.node_points.len()
    }

    pub fn n_free_vertices(&self) -> usize {
        self.n_free_vertices
    }

    pub fn n_elements(&self) -> usize {
        self.elem_dofs.len() / self.local.len()
    }

    pub fn n_local(&self) -> usize {
        self.local.len()
    }

    /// Multi-index `α` (with `|α| = ℓ`) of every local basis function.
    pub fn local_indices(&self) -> &[[usize; 3]] {
        &self.local
    }

    pub fn local_basis(&self) -> &[Poly2] {
        &self.basis
    }

    /// Derivatives of the local basis in `(λ1, λ2)`.
    pub fn local_gradients(&self) -> &[[Poly2; 2]] {
        &self.grads
    }

    /// Global dofs of element `t` in local order (`None` on γ).
    pub fn element_dofs(&self, t: usize) -> &[Option<usize>] {
        let n = self.local.len();
        &self.elem_dofs[t * n..(t + 1) * n]
    }

    pub fn node_point(&self, i: usize) -> &Point {
        &self.node_points[i]
    }

    pub fn node_kind(&self, i: usize) -> NodeKind {
        self.node_kind[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaSpec;

    #[test]
    fn nodal_property() {
        for dim in 1..=2 {
            for degree in 1..=3 {
                let local = local_multi_indices(dim, degree);
                let mesh = if dim == 1 {
                    SimplicialMesh::interval(1, GammaSpec::None).unwrap()
                } else {
                    SimplicialMesh::cube_surface()
                };
                let s = LagrangeSpace::new(&mesh, degree).unwrap();
                for (i, p) in s.local_basis().iter().enumerate() {
                    for (j, b) in local.iter().enumerate() {
                        let l1 = b[1] as f64 / degree as f64;
                        let l2 = b[2] as f64 / degree as f64;
                        let e = if i == j { 1.0 } else { 0.0 };
                        assert!((p.eval(l1, l2) - e).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_and_gradients() {
        let mesh = SimplicialMesh::cube_surface();
        let s = LagrangeSpace::new(&mesh, 3).unwrap();
        for &(l1, l2) in &[(0.1, 0.3), (0.25, 0.6), (0.7, 0.05)] {
            let sum: f64 = s.local_basis().iter().map(|p| p.eval(l1, l2)).sum();
            assert!((sum - 1.0).abs() < 1e-14);
            for k in 0..2 {
                let g: f64 = s.local_gradients().iter().map(|g| g[k].eval(l1, l2)).sum();
                assert!(g.abs() < 1e-12);
            }
            // finite-difference check of one derivative
            let p = &s.local_basis()[7];
            let h = 1e-6;
            let fd = (p.eval(l1 + h, l2) - p.eval(l1 - h, l2)) / (2.0 * h);
            assert!((fd - s.local_gradients()[7][0].eval(l1, l2)).abs() < 1e-8);
        }
    }

    #[test]
    fn cube_cubic_dof_count() {
        // dofs = V + 2E + F with E = 3F/2
        let mesh = SimplicialMesh::cube_surface();
        let s = LagrangeSpace::new(&mesh, 3).unwrap();
        assert_eq!(s.n_dofs(), 8 + 2 * 18 + 12);
        assert_eq!(s.n_dofs(), 56);
        assert_eq!(s.n_free_vertices(), 8);
    }

    #[test]
    fn interval_gamma_removes_end_nodes() {
        let mesh = SimplicialMesh::interval(2, GammaSpec::Both).unwrap();
        let s = LagrangeSpace::new(&mesh, 2).unwrap();
        assert_eq!(s.n_dofs(), 3);
        assert_eq!(s.node_kind(0), NodeKind::Vertex);
        assert_eq!(s.node_point(0)[0], 0.5);
    }

    #[test]
    fn unsupported_degree() {
        let mesh = SimplicialMesh::cube_surface();
        assert!(matches!(
            LagrangeSpace::new(&mesh, 4),
            Err(Error::UnsupportedDegree(4))
        ));
    }
}
