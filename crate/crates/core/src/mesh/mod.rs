//! Conforming simplicial partitions of an interval or of a piecewise flat
//! surface in R^3, together with refinement, patch geometry and validation.

mod io;
mod patch;
mod refine;
mod validate;

use std::collections::BTreeSet;

use crate::error::{Error, Result};

pub use io::{read_mesh, write_mesh};
pub use patch::PatchTable;
pub use refine::RedRefinement;
pub use validate::{ValidationReport, DEFAULT_K_MAX, DEFAULT_RHO_MAX};

/// Which endpoints of the unit interval carry homogeneous Dirichlet conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GammaSpec {
    None,
    Left,
    Right,
    Both,
}

pub type Point = [f64; 3];

/// A conforming partition into `d`-simplices (`d` = 1 or 2).
///
/// Vertex coordinates are stored in R^3 regardless of the ambient dimension;
/// unused components are zero. Elements are stored flat with stride `d + 1`.
/// For triangles the vertex order fixes the orientation (outward normal on
/// closed surfaces), and `newest` holds the local index of the newest vertex,
/// so the refinement edge is the edge opposite to it.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialMesh {
    dim: usize,
    ambient: usize,
    vertices: Vec<Point>,
    cells: Vec<usize>,
    gamma: BTreeSet<Vec<usize>>,
    newest: Vec<u8>,
    generation: Vec<u32>,
}

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn midpoint(a: &Point, b: &Point) -> Point {
    [
        0.5 * (a[0] + b[0]),
        0.5 * (a[1] + b[1]),
        0.5 * (a[2] + b[2]),
    ]
}

pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl SimplicialMesh {
    /// Builds a mesh from raw data. Refinement edges are initialised with the
    /// longest-edge rule.
    pub fn new(
        dim: usize,
        ambient: usize,
        vertices: Vec<Point>,
        elements: Vec<Vec<usize>>,
        gamma: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if !matches!((dim, ambient), (1, 1) | (1, 2) | (1, 3) | (2, 2) | (2, 3)) {
            return Err(Error::InvalidArgument(format!(
                "unsupported dimensions d = {dim}, d' = {ambient}"
            )));
        }
        let nv = vertices.len();
        let mut cells = Vec::with_capacity(elements.len() * (dim + 1));
        for (t, el) in elements.iter().enumerate() {
            if el.len() != dim + 1 {
                return Err(Error::InvalidMesh(format!(
                    "element {t} has {} vertices, expected {}",
                    el.len(),
                    dim + 1
                )));
            }
            if let Some(&v) = el.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "element {t} references vertex {v} of {nv}"
                )));
            }
            cells.extend_from_slice(el);
        }
        let mut gamma_set = BTreeSet::new();
        for face in gamma {
            if face.len() != dim {
                return Err(Error::InvalidMesh(format!(
                    "boundary face {face:?} must have {dim} vertices"
                )));
            }
            if let Some(&v) = face.iter().find(|&&v| v >= nv) {
                return Err(Error::InvalidMesh(format!(
                    "boundary face references vertex {v} of {nv}"
                )));
            }
            let mut f = face;
            f.sort_unstable();
            gamma_set.insert(f);
        }
        let n_el = elements.len();
        let mut mesh = SimplicialMesh {
            dim,
            ambient,
            vertices,
            cells,
            gamma: gamma_set,
            newest: vec![0; n_el],
            generation: vec![0; n_el],
        };
        for t in 0..n_el {
            if !(mesh.volume(t) > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "element {t} has non-positive volume"
                )));
            }
        }
        mesh.init_refinement_edges();
        Ok(mesh)
    }

    /// Uniform partition of (0, 1) into `n` elements.
    pub fn interval(n: usize, gamma: GammaSpec) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "interval mesh needs at least one element".into(),
            ));
        }
        let points: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        Self::interval_from_points(&points, gamma)
    }

    /// Partition of `[points[0], points[last]]` with the given strictly
    /// increasing breakpoints.
    pub fn interval_from_points(points: &[f64], gamma: GammaSpec) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(
                "interval mesh needs at least two breakpoints".into(),
            ));
        }
        if points.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        let vertices = points.iter().map(|&x| [x, 0.0, 0.0]).collect();
        let elements = (0..points.len() - 1).map(|i| vec![i, i + 1]).collect();
        let last = points.len() - 1;
        let gamma = match gamma {
            GammaSpec::None => vec![],
            GammaSpec::Left => vec![vec![0]],
            GammaSpec::Right => vec![vec![last]],
            GammaSpec::Both => vec![vec![0], vec![last]],
        };
        Self::new(1, 1, vertices, elements, gamma)
    }

    /// The boundary of the unit cube, two triangles per face, each face split
    /// along the diagonal through its lexicographically smallest corner.
    ///
    /// Vertex `i` sits at `((i >> 2) & 1, (i >> 1) & 1, i & 1)`, which is the
    /// lexicographic order of the corners. Triangles are oriented with
    /// outward normals.
    pub fn cube_surface() -> Self {
        let vertices: Vec<Point> = (0..8)
            .map(|i| {
                [
                    ((i >> 2) & 1) as f64,
                    ((i >> 1) & 1) as f64,
                    (i & 1) as f64,
                ]
            })
            .collect();
        let mut elements = Vec::with_capacity(12);
        for axis in 0..3 {
            for side in 0..2 {
                let mut corners: Vec<usize> = (0..8)
                    .filter(|&i| ((i >> (2 - axis)) & 1) == side)
                    .collect();
                corners.sort_unstable();
                let s = corners[0];
                // the corner opposite to s differs in both free coordinates
                let t = corners[3];
                let (u, w) = (corners[1], corners[2]);
                let mut outward = [0.0; 3];
                outward[axis] = if side == 0 { -1.0 } else { 1.0 };
                for tri in [[s, u, t], [s, t, w]] {
                    let n = cross(
                        &sub(&vertices[tri[1]], &vertices[tri[0]]),
                        &sub(&vertices[tri[2]], &vertices[tri[0]]),
                    );
                    if dot(&n, &outward) > 0.0 {
                        elements.push(tri.to_vec());
                    } else {
                        elements.push(vec![tri[0], tri[2], tri[1]]);
                    }
                }
            }
        }
        Self::new(2, 3, vertices, elements, vec![]).expect("cube mesh is valid")
    }

    pub(crate) fn from_parts(
        dim: usize,
        ambient: usize,
        vertices: Vec<Point>,
        cells: Vec<usize>,
        gamma: BTreeSet<Vec<usize>>,
        newest: Vec<u8>,
        generation: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(cells.len(), newest.len() * (dim + 1));
        SimplicialMesh {
            dim,
            ambient,
            vertices,
            cells,
            gamma,
            newest,
            generation,
        }
    }

    /// Longest edge becomes the refinement edge; ties go to the smallest
    /// sorted vertex-id pair.
    fn init_refinement_edges(&mut self) {
        if self.dim != 2 {
            return;
        }
        for t in 0..self.n_elements() {
            let el = self.element(t);
            let mut best: Option<(f64, (usize, usize), u8)> = None;
            for k in 0..3u8 {
                let a = el[(k as usize + 1) % 3];
                let b = el[(k as usize + 2) % 3];
                let len = norm(&sub(&self.vertices[a], &self.vertices[b]));
                let key = edge_key(a, b);
                let better = match best {
                    None => true,
                    Some((bl, bk, _)) => {
                        let tol = 1e-12 * bl.max(len);
                        len > bl + tol || ((len - bl).abs() <= tol && key < bk)
                    }
                };
                if better {
                    best = Some((len, key, k));
                }
            }
            self.newest[t] = best.expect("triangle has edges").2;
        }
    }

    /// Topological dimension `d` of the elements.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dimension `d'` of the embedding space.
    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_elements(&self) -> usize {
        self.newest.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn element(&self, t: usize) -> &[usize] {
        let s = self.dim + 1;
        &self.cells[t * s..(t + 1) * s]
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[usize]> + '_ {
        self.cells.chunks_exact(self.dim + 1)
    }

    pub fn gamma_faces(&self) -> &BTreeSet<Vec<usize>> {
        &self.gamma
    }

    /// Local index of the newest vertex of element `t` (always 0 for d = 1).
    pub fn newest_vertex(&self, t: usize) -> usize {
        self.newest[t] as usize
    }

    /// The refinement edge of a triangle, as global vertex ids.
    pub fn refinement_edge(&self, t: usize) -> (usize, usize) {
        let el = self.element(t);
        if self.dim == 1 {
            return (el[0], el[1]);
        }
        let k = self.newest[t] as usize;
        (el[(k + 1) % 3], el[(k + 2) % 3])
    }

    pub fn generation(&self, t: usize) -> u32 {
        self.generation[t]
    }

    /// d-volume of element `t`.
    pub fn volume(&self, t: usize) -> f64 {
        let el = self.element(t);
        let p0 = &self.vertices[el[0]];
        match self.dim {
            1 => norm(&sub(&self.vertices[el[1]], p0)),
            _ => {
                let c = cross(
                    &sub(&self.vertices[el[1]], p0),
                    &sub(&self.vertices[el[2]], p0),
                );
                0.5 * norm(&c)
            }
        }
    }

    /// `h_T = |T|^{1/d}`.
    pub fn h(&self, t: usize) -> f64 {
        let v = self.volume(t);
        if self.dim == 1 {
            v
        } else {
            v.sqrt()
        }
    }

    pub fn h_min(&self) -> f64 {
        (0..self.n_elements())
            .map(|t| self.h(t))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let el = self.element(t);
        let mut d: f64 = 0.0;
        for i in 0..el.len() {
            for j in i + 1..el.len() {
                d = d.max(norm(&sub(&self.vertices[el[i]], &self.vertices[el[j]])));
            }
        }
        d
    }

    pub fn centroid(&self, t: usize) -> Point {
        let el = self.element(t);
        let mut c = [0.0; 3];
        for &v in el {
            for k in 0..3 {
                c[k] += self.vertices[v][k];
            }
        }
        let w = 1.0 / el.len() as f64;
        c.map(|x| x * w)
    }

    /// Unit normal of a triangle, following the vertex orientation.
    pub fn normal(&self, t: usize) -> Point {
        let el = self.element(t);
        let p0 = &self.vertices[el[0]];
        let c = cross(
            &sub(&self.vertices[el[1]], p0),
            &sub(&self.vertices[el[2]], p0),
        );
        let n = norm(&c);
        c.map(|x| x / n)
    }

    /// Total d-volume of the domain.
    pub fn measure(&self) -> f64 {
        (0..self.n_elements()).map(|t| self.volume(t)).sum()
    }

    /// Largest distance between two vertices.
    pub fn domain_diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max(norm(&sub(a, b)));
            }
        }
        d
    }

    /// Marks vertices lying on a face of γ.
    pub fn gamma_vertices(&self) -> Vec<bool> {
        let mut on = vec![false; self.n_vertices()];
        for f in &self.gamma {
            for &v in f {
                on[v] = true;
            }
        }
        on
    }

    /// Vertices not on γ, sorted by id.
    pub fn free_vertices(&self) -> Vec<usize> {
        let on = self.gamma_vertices();
        (0..self.n_vertices()).filter(|&v| !on[v]).collect()
    }

    /// Sorted list of element edges (d = 2) or vertices (d = 1) with their
    /// incident element count.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = BTreeSet::new();
        if self.dim == 2 {
            for el in self.elements() {
                for k in 0..3 {
                    set.insert(edge_key(el[k], el[(k + 1) % 3]));
                }
            }
        } else {
            for el in self.elements() {
                set.insert(edge_key(el[0], el[1]));
            }
        }
        set.into_iter().collect()
    }

    /// Uniformly scaled copy (all coordinates multiplied by `factor`).
    pub fn scaled(&self, factor: f64) -> Self {
        let mut m = self.clone();
        for v in &mut m.vertices {
            for x in v.iter_mut() {
                *x *= factor;
            }
        }
        m
    }

    /// Rigidly translated copy.
    pub fn translated(&self, shift: Point) -> Self {
        let mut m = self.clone();
        for v in &mut m.vertices {
            for k in 0..3 {
                v[k] += shift[k];
            }
        }
        m
    }

    /// Elements having at least one vertex in `targets`.
    pub fn elements_touching(&self, targets: &[usize]) -> Vec<usize> {
        let mut is_target = vec![false; self.n_vertices()];
        for &v in targets {
            if v < is_target.len() {
                is_target[v] = true;
            }
        }
        (0..self.n_elements())
            .filter(|&t| self.element(t).iter().any(|&v| is_target[v]))
            .collect()
    }

    /// Barycentric coordinates of `x` (assumed in the affine hull) with
    /// respect to element `t`, in the element's local vertex order.
    pub fn barycentric(&self, t: usize, x: &Point) -> [f64; 3] {
        let el = self.element(t);
        let p0 = &self.vertices[el[0]];
        let r = sub(x, p0);
        if self.dim == 1 {
            let e = sub(&self.vertices[el[1]], p0);
            let s = dot(&r, &e) / dot(&e, &e);
            return [1.0 - s, s, 0.0];
        }
        let e1 = sub(&self.vertices[el[1]], p0);
        let e2 = sub(&self.vertices[el[2]], p0);
        let (g11, g12, g22) = (dot(&e1, &e1), dot(&e1, &e2), dot(&e2, &e2));
        let (b1, b2) = (dot(&r, &e1), dot(&r, &e2));
        let det = g11 * g22 - g12 * g12;
        let s = (g22 * b1 - g12 * b2) / det;
        let u = (g11 * b2 - g12 * b1) / det;
        [1.0 - s - u, s, u]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_vertices_and_free_set() {
        let m = SimplicialMesh::interval(2, GammaSpec::Both).unwrap();
        let xs: Vec<f64> = m.vertices().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 0.5, 1.0]);
        assert_eq!(m.free_vertices(), vec![1]);

        let m = SimplicialMesh::interval(1, GammaSpec::None).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.free_vertices().len(), 2);
    }

    #[test]
    fn interval_rejects_zero_elements() {
        assert!(matches!(
            SimplicialMesh::interval(0, GammaSpec::None),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn cube_counts_and_closedness() {
        let m = SimplicialMesh::cube_surface();
        assert_eq!(m.n_elements(), 12);
        assert_eq!(m.n_vertices(), 8);
        assert!(m.gamma_faces().is_empty());
        let mut count = std::collections::BTreeMap::new();
        for el in m.elements() {
            for k in 0..3 {
                *count.entry(edge_key(el[k], el[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        assert!(count.values().all(|&c| c == 2));
        assert!((m.measure() - 6.0).abs() < 1e-14);
    }

    #[test]
    fn cube_normals_point_outward() {
        let m = SimplicialMesh::cube_surface();
        for t in 0..m.n_elements() {
            let c = m.centroid(t);
            let n = m.normal(t);
            let out = sub(&c, &[0.5, 0.5, 0.5]);
            assert!(dot(&n, &out) > 0.49);
        }
    }

    #[test]
    fn cube_refinement_edge_is_face_diagonal() {
        let m = SimplicialMesh::cube_surface();
        for t in 0..m.n_elements() {
            let (a, b) = m.refinement_edge(t);
            let d = norm(&sub(m.vertex(a), m.vertex(b)));
            assert!((d - 2f64.sqrt()).abs() < 1e-14);
            // the diagonal passes through the smallest corner of the face
            let el = m.element(t);
            assert!(a.min(b) == *el.iter().min().unwrap());
        }
    }

    #[test]
    fn barycentric_recovers_vertices() {
        let m = SimplicialMesh::cube_surface();
        for t in 0..m.n_elements() {
            for (k, &v) in m.element(t).iter().enumerate() {
                let l = m.barycentric(t, m.vertex(v));
                for (j, x) in l.iter().enumerate() {
                    let e = if j == k { 1.0 } else { 0.0 };
                    assert!((x - e).abs() < 1e-14);
                }
            }
        }
    }
}
