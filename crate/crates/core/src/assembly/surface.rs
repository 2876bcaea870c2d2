//! Galerkin matrices of the Laplace single layer and hypersingular operators
//! on closed surfaces made of flat triangles.
//!
//! Every panel pair is reduced to the moments
//! `M_pq = ∬ k(x, y) m_p(x) m_q(y)` of monomials `m_p` in the local
//! coordinates `(λ1, λ2)` of each triangle; all matrices are linear
//! combinations of these moments.

use std::f64::consts::PI;

use rayon::prelude::*;

use super::{DenseOperator, DofLabel, QuadratureProfile};
use crate::error::{Error, Result};
use crate::mesh::{cross, dot, norm, sub, Point, SimplicialMesh};
use crate::quadrature::{PairClass, PairRule, TriangleRule};
use crate::space::{monomial_exponents, monomials, LagrangeSpace};

const FOUR_PI_INV: f64 = 1.0 / (4.0 * PI);

/// A flat sub-triangle of an element, remembered through the local
/// coordinates of its corners so moments stay in the element's own basis.
#[derive(Clone, Copy)]
struct Panel {
    bary: [[f64; 3]; 3],
    pts: [Point; 3],
    area: f64,
    diam: f64,
    centroid: Point,
}

impl Panel {
    fn new(bary: [[f64; 3]; 3], pts: [Point; 3]) -> Self {
        let area = 0.5 * norm(&cross(&sub(&pts[1], &pts[0]), &sub(&pts[2], &pts[0])));
        let diam = norm(&sub(&pts[0], &pts[1]))
            .max(norm(&sub(&pts[1], &pts[2])))
            .max(norm(&sub(&pts[0], &pts[2])));
        let mut centroid = [0.0; 3];
        for p in &pts {
            for c in 0..3 {
                centroid[c] += p[c] / 3.0;
            }
        }
        Panel {
            bary,
            pts,
            area,
            diam,
            centroid,
        }
    }

    fn element(mesh: &SimplicialMesh, t: usize) -> Self {
        let el = mesh.element(t);
        Panel::new(
            [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            [*mesh.vertex(el[0]), *mesh.vertex(el[1]), *mesh.vertex(el[2])],
        )
    }

    fn split(&self) -> [Panel; 4] {
        let mid = |i: usize, j: usize| {
            let b = [
                0.5 * (self.bary[i][0] + self.bary[j][0]),
                0.5 * (self.bary[i][1] + self.bary[j][1]),
                0.5 * (self.bary[i][2] + self.bary[j][2]),
            ];
            let p = crate::mesh::midpoint(&self.pts[i], &self.pts[j]);
            (b, p)
        };
        let (b01, p01) = mid(0, 1);
        let (b12, p12) = mid(1, 2);
        let (b02, p02) = mid(0, 2);
        let (b, p) = (self.bary, self.pts);
        [
            Panel::new([b[0], b01, b02], [p[0], p01, p02]),
            Panel::new([b01, b[1], b12], [p01, p[1], p12]),
            Panel::new([b02, b12, b[2]], [p02, p12, p[2]]),
            Panel::new([b12, b02, b01], [p12, p02, p01]),
        ]
    }
}

/// Shared-vertex classification of two elements, with the local vertex
/// permutations that put the shared vertices first in matching order.
fn classify(a: &[usize], b: &[usize]) -> (PairClass, [usize; 3], [usize; 3]) {
    let mut shared = Vec::with_capacity(3);
    for (i, v) in a.iter().enumerate() {
        if let Some(j) = b.iter().position(|w| w == v) {
            shared.push((i, j));
        }
    }
    let complete = |first: &[usize]| {
        let mut p = [0usize; 3];
        p[..first.len()].copy_from_slice(first);
        let mut k = first.len();
        for i in 0..3 {
            if !first.contains(&i) {
                p[k] = i;
                k += 1;
            }
        }
        p
    };
    match shared.len() {
        3 => (PairClass::Identical, [0, 1, 2], [0, 1, 2]),
        2 => {
            let pa = complete(&[shared[0].0, shared[1].0]);
            let pb = complete(&[shared[0].1, shared[1].1]);
            (PairClass::CommonEdge, pa, pb)
        }
        1 => {
            let pa = complete(&[shared[0].0]);
            let pb = complete(&[shared[0].1]);
            (PairClass::CommonVertex, pa, pb)
        }
        _ => (PairClass::Disjoint, [0, 1, 2], [0, 1, 2]),
    }
}

/// Precomputed rules and per-element geometry for one assembly pass.
pub(crate) struct PairIntegrator<'a> {
    mesh: &'a SimplicialMesh,
    profile: QuadratureProfile,
    deg: usize,
    m: usize,
    identical: PairRule,
    edge: PairRule,
    vertex: PairRule,
    far_rules: Vec<TriangleRule>,
    panels: Vec<Panel>,
}

impl<'a> PairIntegrator<'a> {
    /// `deg` is the total degree of the monomials carried by the moments.
    pub(crate) fn new(mesh: &'a SimplicialMesh, profile: QuadratureProfile, deg: usize) -> Result<Self> {
        if mesh.dim() != 2 || mesh.ambient_dim() != 3 {
            return Err(Error::InvalidArgument(
                "surface assembly needs triangles in R^3".into(),
            ));
        }
        for t in 0..mesh.n_elements() {
            if !(mesh.volume(t) > 0.0) {
                return Err(Error::InvalidMesh(format!("panel {t} has zero area")));
            }
        }
        let (n, ns) = (profile.singular_order, profile.near_order);
        let m = monomial_exponents(deg).len();
        let max_far = profile.far_order(0.0);
        let far_rules = (1..=max_far).map(TriangleRule::new).collect();
        Ok(PairIntegrator {
            mesh,
            profile,
            deg,
            m,
            identical: PairRule::singular(PairClass::Identical, n, ns),
            edge: PairRule::singular(PairClass::CommonEdge, n, ns),
            vertex: PairRule::singular(PairClass::CommonVertex, n, ns),
            far_rules,
            panels: (0..mesh.n_elements()).map(|t| Panel::element(mesh, t)).collect(),
        })
    }

    pub(crate) fn n_moments(&self) -> usize {
        self.m
    }

    /// Writes the `m × m` moment block of elements `(t, s)` into `out`
    /// (row-major, rows for `t`), including the factor `1/(4π)`.
    pub(crate) fn moments(&self, t: usize, s: usize, out: &mut [f64]) {
        out.fill(0.0);
        let (ea, eb) = (self.mesh.element(t), self.mesh.element(s));
        let (class, pa, pb) = classify(ea, eb);
        match class {
            PairClass::Disjoint => {
                self.far_moments(&self.panels[t], &self.panels[s], 0, out);
            }
            _ => self.singular_moments(t, s, class, pa, pb, out),
        }
        for v in out.iter_mut() {
            *v *= FOUR_PI_INV;
        }
    }

    fn singular_moments(
        &self,
        t: usize,
        s: usize,
        class: PairClass,
        pa: [usize; 3],
        pb: [usize; 3],
        out: &mut [f64],
    ) {
        let rule = match class {
            PairClass::Identical => &self.identical,
            PairClass::CommonEdge => &self.edge,
            _ => &self.vertex,
        };
        let (ea, eb) = (self.mesh.element(t), self.mesh.element(s));
        // coordinates relative to the first shared vertex
        let origin = *self.mesh.vertex(ea[pa[0]]);
        let rel = |v: usize| sub(self.mesh.vertex(v), &origin);
        let qa = [rel(ea[pa[0]]), rel(ea[pa[1]]), rel(ea[pa[2]])];
        let qb = [rel(eb[pb[0]]), rel(eb[pb[1]]), rel(eb[pb[2]])];
        let jac = 4.0 * self.mesh.volume(t) * self.mesh.volume(s);
        let m = self.m;
        let mut mx = vec![0.0; m];
        let mut my = vec![0.0; m];
        let mut tmp = vec![0.0; m];
        for i in 0..rule.len() {
            let lx = crate::quadrature::tau_barycentric(rule.x[i]);
            let ly = crate::quadrature::tau_barycentric(rule.y[i]);
            let mut d = [0.0; 3];
            for k in 0..3 {
                for c in 0..3 {
                    d[c] += lx[k] * qa[k][c] - ly[k] * qb[k][c];
                }
            }
            let w = rule.weights[i] * jac / norm(&d);
            let mut ox = [0.0; 3];
            let mut oy = [0.0; 3];
            for k in 0..3 {
                ox[pa[k]] = lx[k];
                oy[pb[k]] = ly[k];
            }
            monomials(self.deg, ox[1], ox[2], &mut mx);
            monomials(self.deg, oy[1], oy[2], &mut my);
            for q in 0..m {
                tmp[q] = w * my[q];
            }
            for p in 0..m {
                let a = mx[p];
                let row = &mut out[p * m..(p + 1) * m];
                for q in 0..m {
                    row[q] += a * tmp[q];
                }
            }
        }
    }

    fn far_moments(&self, a: &Panel, b: &Panel, depth: usize, out: &mut [f64]) {
        let dist = norm(&sub(&a.centroid, &b.centroid));
        let ratio = dist / a.diam.max(b.diam);
        if ratio < self.profile.split_ratio && depth < self.profile.max_split_depth {
            let (big, small, swap) = if a.diam >= b.diam { (a, b, false) } else { (b, a, true) };
            for child in big.split() {
                if swap {
                    self.far_moments(small, &child, depth + 1, out);
                } else {
                    self.far_moments(&child, small, depth + 1, out);
                }
            }
            return;
        }
        let n = self.profile.far_order(ratio);
        let rule = &self.far_rules[n - 1];
        let m = self.m;
        let nq = rule.len();
        let mut xa = Vec::with_capacity(nq);
        let mut xb = Vec::with_capacity(nq);
        let mut ma = vec![0.0; nq * m];
        let mut mb = vec![0.0; nq * m];
        // relative to a's first corner to limit cancellation
        let origin = a.pts[0];
        for (panel, xs, mono) in [(a, &mut xa, &mut ma), (b, &mut xb, &mut mb)] {
            let wscale = 2.0 * panel.area;
            for (i, mu) in rule.points.iter().enumerate() {
                let mut x = [0.0; 3];
                let mut l = [0.0; 3];
                for k in 0..3 {
                    for c in 0..3 {
                        x[c] += mu[k] * (panel.pts[k][c] - origin[c]);
                        l[c] += mu[k] * panel.bary[k][c];
                    }
                }
                xs.push((x, rule.weights[i] * wscale));
                monomials(self.deg, l[1], l[2], &mut mono[i * m..(i + 1) * m]);
            }
        }
        let mut kb = vec![0.0; m];
        for i in 0..nq {
            let (x, wx) = xa[i];
            kb.fill(0.0);
            for j in 0..nq {
                let (y, wy) = xb[j];
                let d = sub(&x, &y);
                let k = wy / dot(&d, &d).sqrt();
                for q in 0..m {
                    kb[q] += k * mb[j * m + q];
                }
            }
            for p in 0..m {
                let a = wx * ma[i * m + p];
                let row = &mut out[p * m..(p + 1) * m];
                for q in 0..m {
                    row[q] += a * kb[q];
                }
            }
        }
    }

    /// Moments of all pairs `t ≤ s`, delivered in ascending order.
    pub(crate) fn for_each_upper_pair(&self, sink: impl FnMut(usize, usize, &[f64])) {
        super::for_each_upper_pair(
            self.mesh.n_elements(),
            self.m * self.m,
            |t, s, out| self.moments(t, s, out),
            sink,
        );
    }
}

/// Single-layer matrices on piecewise constants (indexed by element) and on
/// continuous piecewise linears (indexed by free vertex).
pub struct SingleLayer {
    pub pwc: Option<DenseOperator>,
    pub cpl: Option<DenseOperator>,
}

/// Local hat functions `λ0, λ1, λ2` in the monomials `1, λ1, λ2`.
const HAT_COEFFS: [[f64; 3]; 3] = [[1.0, -1.0, -1.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

/// Assembles the single layer `∬ u(y) v(x) / (4π|x − y|)` in one sweep over
/// panel pairs, for whichever of the two spaces is requested.
pub fn assemble_single_layer_3d(
    mesh: &SimplicialMesh,
    profile: QuadratureProfile,
    want_pwc: bool,
    want_cpl: bool,
) -> Result<SingleLayer> {
    let integ = PairIntegrator::new(mesh, profile, 1)?;
    let ne = mesh.n_elements();
    let patch = crate::mesh::PatchTable::new(mesh);
    let nv = patch.n_free();
    let mut pwc = if want_pwc { vec![0.0; ne * ne] } else { Vec::new() };
    let mut cpl = if want_cpl { vec![0.0; nv * nv] } else { Vec::new() };
    let dofs: Vec<[Option<usize>; 3]> = (0..ne)
        .map(|t| {
            let el = mesh.element(t);
            [patch.free_index(el[0]), patch.free_index(el[1]), patch.free_index(el[2])]
        })
        .collect();
    integ.for_each_upper_pair(|t, s, mo| {
        if want_pwc {
            pwc[t * ne + s] = mo[0];
            pwc[s * ne + t] = mo[0];
        }
        if want_cpl {
            // h[a][b] = Σ_pq C[a][p] M[p][q] C[b][q]
            let mut h = [[0.0; 3]; 3];
            for a in 0..3 {
                for b in 0..3 {
                    let mut v = 0.0;
                    for p in 0..3 {
                        if HAT_COEFFS[a][p] == 0.0 {
                            continue;
                        }
                        for q in 0..3 {
                            v += HAT_COEFFS[a][p] * mo[p * 3 + q] * HAT_COEFFS[b][q];
                        }
                    }
                    h[a][b] = v;
                }
            }
            for a in 0..3 {
                let Some(i) = dofs[t][a] else { continue };
                for b in 0..3 {
                    let Some(j) = dofs[s][b] else { continue };
                    cpl[i * nv + j] += h[a][b];
                    if t != s {
                        cpl[j * nv + i] += h[a][b];
                    }
                }
            }
        }
    });
    Ok(SingleLayer {
        pwc: if want_pwc {
            Some(DenseOperator::new(ne, pwc, DofLabel::Elements)?)
        } else {
            None
        },
        cpl: if want_cpl {
            Some(DenseOperator::new(nv, cpl, DofLabel::Vertices)?)
        } else {
            None
        },
    })
}

/// Surface curls of the local coordinates `λ1, λ2` of element `t`.
fn curl_lambdas(mesh: &SimplicialMesh, t: usize) -> [Point; 2] {
    let el = mesh.element(t);
    let p = |k: usize| mesh.vertex(el[k]);
    let two_a = 2.0 * mesh.volume(t);
    // curl λ_i = (P_{i+1} − P_{i+2}) / (2|T|) for outward orientation
    let c1 = sub(p(2), p(0)).map(|x| x / two_a);
    let c2 = sub(p(0), p(1)).map(|x| x / two_a);
    [c1, c2]
}

fn check_closed(mesh: &SimplicialMesh) -> Result<()> {
    if !mesh.gamma_faces().is_empty() {
        return Err(Error::UnsupportedConfiguration(
            "hypersingular assembly needs a closed surface without γ".into(),
        ));
    }
    let mut count = std::collections::HashMap::new();
    for el in mesh.elements() {
        for k in 0..3 {
            *count
                .entry(crate::mesh::edge_key(el[k], el[(k + 1) % 3]))
                .or_insert(0usize) += 1;
        }
    }
    if count.values().any(|&c| c != 2) {
        return Err(Error::UnsupportedConfiguration(
            "hypersingular assembly needs a closed surface".into(),
        ));
    }
    Ok(())
}

/// `∫ φ_i` for every dof of `space`.
pub(crate) fn basis_integrals(mesh: &SimplicialMesh, space: &LagrangeSpace) -> Vec<f64> {
    let rule = TriangleRule::new(space.degree() + 1);
    let mut m = vec![0.0; space.n_dofs()];
    for t in 0..mesh.n_elements() {
        let a = 2.0 * mesh.volume(t);
        for (j, dof) in space.element_dofs(t).iter().enumerate() {
            let Some(i) = dof else { continue };
            let p = &space.local_basis()[j];
            m[*i] += rule
                .points
                .iter()
                .zip(&rule.weights)
                .map(|(x, w)| w * a * p.eval(x[1], x[2]))
                .sum::<f64>();
        }
    }
    m
}

/// Hypersingular operator on degree-ℓ continuous Lagrange functions of a
/// closed surface, via the surface-curl form
/// `∬ curl u(y) · curl v(x) / (4π|x − y|)`, plus `α ⟨u, 1⟩⟨v, 1⟩` stored as
/// an implicit rank-one term.
pub fn assemble_hypersingular_3d(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    alpha: f64,
    profile: QuadratureProfile,
) -> Result<DenseOperator> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    check_closed(mesh)?;
    let a = if space.degree() == 1 {
        let v = assemble_single_layer_3d(mesh, profile, true, false)?
            .pwc
            .expect("requested");
        hypersingular_from_pwc(mesh, space, &v)
    } else {
        hypersingular_direct(mesh, space, profile)?
    };
    let m = basis_integrals(mesh, space);
    DenseOperator::new(space.n_dofs(), a, DofLabel::Nodes(space.degree()))?.with_rank_one(alpha, m)
}

/// Linear-element hypersingular matrix (plus the rank-one shift) from an
/// already assembled piecewise-constant single layer `v` on the same mesh.
pub fn hypersingular_3d_from_single_layer(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    alpha: f64,
    v: &DenseOperator,
) -> Result<DenseOperator> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    if space.degree() != 1 {
        return Err(Error::UnsupportedDegree(space.degree()));
    }
    let ne = mesh.n_elements();
    if v.data().len() != ne * ne || v.label() != DofLabel::Elements {
        return Err(crate::error::shape(
            "hypersingular from single layer",
            ne * ne,
            v.data().len(),
        ));
    }
    check_closed(mesh)?;
    let a = hypersingular_from_pwc(mesh, space, v);
    let m = basis_integrals(mesh, space);
    DenseOperator::new(space.n_dofs(), a, DofLabel::Nodes(1))?.with_rank_one(alpha, m)
}

/// Piecewise-linear case: curls are constant per element, so the form is
/// `Σ_c C_cᵀ V C_c` with `V` the piecewise-constant single layer.
pub(crate) fn hypersingular_from_pwc(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    v: &DenseOperator,
) -> Vec<f64> {
    let ne = mesh.n_elements();
    let n = space.n_dofs();
    // element curls of the three local hats, per element
    let curls: Vec<[Point; 3]> = (0..ne)
        .map(|t| {
            let [c1, c2] = curl_lambdas(mesh, t);
            let c0 = [-c1[0] - c2[0], -c1[1] - c2[1], -c1[2] - c2[2]];
            [c0, c1, c2]
        })
        .collect();
    // for ℓ = 1 local basis k is the hat of local vertex k
    let vd = v.data();
    let mut vc = vec![0.0; ne * n * 3];
    // vc[r][j][c] = Σ_S V[r,S] curl_c φ_j|_S
    vc.par_chunks_mut(n * 3).enumerate().for_each(|(r, row)| {
        for s in 0..ne {
            let w = vd[r * ne + s];
            for (k, dof) in space.element_dofs(s).iter().enumerate() {
                if let Some(j) = dof {
                    let c = &curls[s][k];
                    for d in 0..3 {
                        row[j * 3 + d] += w * c[d];
                    }
                }
            }
        }
    });
    let mut a = vec![0.0; n * n];
    for t in 0..ne {
        for (k, dof) in space.element_dofs(t).iter().enumerate() {
            let Some(i) = dof else { continue };
            let c = &curls[t][k];
            let src = &vc[t * n * 3..(t + 1) * n * 3];
            let dst = &mut a[i * n..(i + 1) * n];
            for j in 0..n {
                dst[j] += c[0] * src[j * 3] + c[1] * src[j * 3 + 1] + c[2] * src[j * 3 + 2];
            }
        }
    }
    a
}

fn hypersingular_direct(
    mesh: &SimplicialMesh,
    space: &LagrangeSpace,
    profile: QuadratureProfile,
) -> Result<Vec<f64>> {
    let deg = space.degree() - 1;
    let integ = PairIntegrator::new(mesh, profile, deg)?;
    let m = integ.n_moments();
    let nl = space.n_local();
    let n = space.n_dofs();
    // vec_coeffs[t][a][p] = curl vector of local basis a on monomial p
    let vec_coeffs: Vec<Vec<[f64; 3]>> = (0..mesh.n_elements())
        .map(|t| {
            let [c1, c2] = curl_lambdas(mesh, t);
            let mut out = vec![[0.0; 3]; nl * m];
            for (a, g) in space.local_gradients().iter().enumerate() {
                let d1 = g[0].monomial_coefficients(deg);
                let d2 = g[1].monomial_coefficients(deg);
                for p in 0..m {
                    for c in 0..3 {
                        out[a * m + p][c] = d1[p] * c1[c] + d2[p] * c2[c];
                    }
                }
            }
            out
        })
        .collect();
    let mut a = vec![0.0; n * n];
    let mut tmp = vec![[0.0; 3]; nl * m];
    let mut local = vec![0.0; nl * nl];
    integ.for_each_upper_pair(|t, s, mo| {
        let (vt, vs) = (&vec_coeffs[t], &vec_coeffs[s]);
        // tmp[b][p] = Σ_q M[p][q] v_s[b][q]
        for b in 0..nl {
            for p in 0..m {
                let mut acc = [0.0; 3];
                for q in 0..m {
                    let w = mo[p * m + q];
                    let v = &vs[b * m + q];
                    for c in 0..3 {
                        acc[c] += w * v[c];
                    }
                }
                tmp[b * m + p] = acc;
            }
        }
        for aa in 0..nl {
            for b in 0..nl {
                let mut v = 0.0;
                for p in 0..m {
                    v += dot(&vt[aa * m + p], &tmp[b * m + p]);
                }
                local[aa * nl + b] = v;
            }
        }
        let (dt, ds) = (space.element_dofs(t), space.element_dofs(s));
        for aa in 0..nl {
            let Some(i) = dt[aa] else { continue };
            for b in 0..nl {
                let Some(j) = ds[b] else { continue };
                a[i * n + j] += local[aa * nl + b];
                if t != s {
                    a[j * n + i] += local[aa * nl + b];
                }
            }
        }
    });
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_triangle(p: [Point; 3]) -> SimplicialMesh {
        SimplicialMesh::new(2, 3, p.to_vec(), vec![vec![0, 1, 2]], vec![]).unwrap()
    }

    #[test]
    fn classify_orders_shared_vertices() {
        let (c, pa, pb) = classify(&[4, 7, 9], &[9, 2, 4]);
        assert_eq!(c, PairClass::CommonEdge);
        assert_eq!([4, 7, 9][pa[0]], [9, 2, 4][pb[0]]);
        assert_eq!([4, 7, 9][pa[1]], [9, 2, 4][pb[1]]);
        let (c, pa, pb) = classify(&[1, 2, 3], &[3, 5, 6]);
        assert_eq!(c, PairClass::CommonVertex);
        assert_eq!(pa[0], 2);
        assert_eq!(pb[0], 0);
        assert_eq!(classify(&[1, 2, 3], &[4, 5, 6]).0, PairClass::Disjoint);
    }

    /// Identical-pair value against a brute-force oracle: split the triangle
    /// into 4^k sub-triangles; singular self terms of the pieces are exact by
    /// scaling (the self integral of a similar triangle scales like size³).
    #[test]
    fn identical_pair_matches_self_similar_oracle() {
        let tri = single_triangle([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let profile = QuadratureProfile::standard();
        let integ = PairIntegrator::new(&tri, profile, 0).unwrap();
        let mut v = [0.0];
        integ.moments(0, 0, &mut v);
        // red refinement into 4 similar children: I = 4 · I/8 + Σ_{c≠c'} I_cc'
        let r = tri.red_refine();
        let fine = PairIntegrator::new(&r.mesh, QuadratureProfile::high(), 0).unwrap();
        let mut off = 0.0;
        let mut buf = [0.0];
        for a in 0..4 {
            for b in 0..4 {
                if a != b {
                    fine.moments(a, b, &mut buf);
                    off += buf[0];
                }
            }
        }
        // I = I/2 + off  ⇒  I = 2 off
        let oracle = 2.0 * off;
        assert!((v[0] - oracle).abs() < 1e-8 * oracle, "{} vs {}", v[0], oracle);
    }

    #[test]
    fn doubling_orders_is_converged() {
        let mesh = SimplicialMesh::cube_surface()
            .refine_uniform_bisection()
            .refine_uniform_bisection();
        let p = QuadratureProfile::standard();
        let a = assemble_single_layer_3d(&mesh, p, true, true).unwrap();
        let b = assemble_single_layer_3d(&mesh, p.doubled(), true, true).unwrap();
        for (x, y) in [(a.pwc, b.pwc), (a.cpl, b.cpl)] {
            let (x, y) = (x.unwrap(), y.unwrap());
            for (u, v) in x.data().iter().zip(y.data()) {
                assert!((u - v).abs() <= 1e-7 * v.abs(), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn translation_invariance() {
        let m = SimplicialMesh::cube_surface();
        let a = assemble_single_layer_3d(&m, QuadratureProfile::standard(), true, true).unwrap();
        let b = assemble_single_layer_3d(
            &m.translated([3.25, -1.5, 7.0]),
            QuadratureProfile::standard(),
            true,
            true,
        )
        .unwrap();
        let (pa, pb) = (a.pwc.unwrap(), b.pwc.unwrap());
        for (x, y) in pa.data().iter().zip(pb.data()) {
            assert!((x - y).abs() < 1e-12 * x.abs());
        }
    }

    #[test]
    fn cpl_sums_to_pwc_total() {
        // Σ_ij V_cpl = ⟨V 1, 1⟩ = Σ_TS V_pwc on a closed surface
        let m = SimplicialMesh::cube_surface().refine_uniform_bisection();
        let sl = assemble_single_layer_3d(&m, QuadratureProfile::standard(), true, true).unwrap();
        let s1: f64 = sl.pwc.unwrap().data().iter().sum();
        let s2: f64 = sl.cpl.unwrap().data().iter().sum();
        assert!((s1 - s2).abs() < 1e-12 * s1);
    }

    #[test]
    fn hypersingular_kernel_is_constants() {
        let m = SimplicialMesh::cube_surface().refine_uniform_bisection();
        let space = LagrangeSpace::new(&m, 1).unwrap();
        let a = assemble_hypersingular_3d(&m, &space, 0.0, QuadratureProfile::standard()).unwrap();
        let n = space.n_dofs();
        let big = a.data().iter().fold(0.0f64, |x, y| x.max(y.abs()));
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a.data()[i * n + j]).sum();
            assert!(r.abs() < 1e-10 * big);
        }
        let m1 = basis_integrals(&m, &space);
        for (i, v) in m1.iter().enumerate() {
            let p = crate::mesh::PatchTable::new(&m);
            assert!((v - p.volume(p.free_vertices()[i]) / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn maue_and_direct_agree_for_linears() {
        let m = SimplicialMesh::cube_surface().refine_uniform_bisection();
        let space = LagrangeSpace::new(&m, 1).unwrap();
        let prof = QuadratureProfile::standard();
        let v = assemble_single_layer_3d(&m, prof, true, false).unwrap().pwc.unwrap();
        let a = hypersingular_from_pwc(&m, &space, &v);
        let b = hypersingular_direct(&m, &space, prof).unwrap();
        let big = a.iter().fold(0.0f64, |x, y| x.max(y.abs()));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12 * big);
        }
    }

    #[test]
    fn higher_order_constants_in_kernel() {
        let m = SimplicialMesh::cube_surface();
        let space = LagrangeSpace::new(&m, 3).unwrap();
        let a = assemble_hypersingular_3d(&m, &space, 0.0, QuadratureProfile::standard()).unwrap();
        let n = space.n_dofs();
        let big = a.data().iter().fold(0.0f64, |x, y| x.max(y.abs()));
        for i in 0..n {
            let r: f64 = (0..n).map(|j| a.data()[i * n + j]).sum();
            assert!(r.abs() < 1e-10 * big, "row {i}: {r}");
        }
        assert!(a.symmetry_defect() < 1e-12);
    }

    #[test]
    fn open_surface_rejected() {
        let tri = single_triangle([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        let space = LagrangeSpace::new(&tri, 1).unwrap();
        assert!(matches!(
            assemble_hypersingular_3d(&tri, &space, 0.05, QuadratureProfile::standard()),
            Err(Error::UnsupportedConfiguration(_))
        ));
        let cube = SimplicialMesh::cube_surface();
        let space = LagrangeSpace::new(&cube, 1).unwrap();
        assert!(matches!(
            assemble_hypersingular_3d(&cube, &space, -1.0, QuadratureProfile::standard()),
            Err(Error::InvalidArgument(_))
        ));
    }
}
