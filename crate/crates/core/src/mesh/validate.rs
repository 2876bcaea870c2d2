use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{edge_key, norm, sub, SimplicialMesh};

/// Outcome of [`SimplicialMesh::validate`]. Report only, never an error.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub conforming: bool,
    pub conformity_violations: Vec<String>,
    pub positive_volumes: bool,
    pub gamma_is_faces: bool,
    /// Largest circumradius/inradius ratio (d = 2), 0 for d = 1.
    pub max_shape_ratio: f64,
    pub shape_regular: bool,
    /// Largest length ratio of neighbouring intervals (d = 1), 0 for d = 2.
    pub max_k_ratio: f64,
    pub k_mesh: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.conforming
            && self.positive_volumes
            && self.gamma_is_faces
            && self.shape_regular
            && self.k_mesh
    }
}

pub const DEFAULT_RHO_MAX: f64 = 10.0;
pub const DEFAULT_K_MAX: f64 = 2.0;

impl SimplicialMesh {
    pub fn validate(&self, rho_max: f64, k_max: f64) -> ValidationReport {
        let positive_volumes = (0..self.n_elements()).all(|t| self.volume(t) > 0.0);
        let mut violations = Vec::new();
        self.check_duplicate_vertices(&mut violations);
        let mut max_shape: f64 = 0.0;
        let mut max_k: f64 = 0.0;
        let gamma_is_faces;
        if self.dim == 1 {
            self.check_intervals(&mut violations, &mut max_k);
            let on_element: BTreeSet<usize> = self.cells.iter().copied().collect();
            gamma_is_faces = self.gamma.iter().all(|f| on_element.contains(&f[0]));
        } else {
            self.check_triangles(&mut violations);
            for t in 0..self.n_elements() {
                max_shape = max_shape.max(self.shape_ratio(t));
            }
            let edges: BTreeSet<(usize, usize)> = self.edges().into_iter().collect();
            gamma_is_faces = self.gamma.iter().all(|f| edges.contains(&(f[0], f[1])));
        }
        ValidationReport {
            conforming: violations.is_empty(),
            conformity_violations: violations,
            positive_volumes,
            gamma_is_faces,
            max_shape_ratio: max_shape,
            shape_regular: max_shape <= rho_max,
            max_k_ratio: max_k,
            k_mesh: max_k <= k_max,
        }
    }

    /// Circumradius over inradius; 2 for an equilateral triangle.
    pub fn shape_ratio(&self, t: usize) -> f64 {
        let el = self.element(t);
        let p = |i: usize| &self.vertices[el[i]];
        let a = norm(&sub(p(1), p(2)));
        let b = norm(&sub(p(0), p(2)));
        let c = norm(&sub(p(0), p(1)));
        let area = self.volume(t);
        let s = 0.5 * (a + b + c);
        a * b * c * s / (4.0 * area * area)
    }

    fn check_duplicate_vertices(&self, violations: &mut Vec<String>) {
        let mut seen: HashMap<[u64; 3], usize> = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            let key = v.map(|x| (x + 0.0).to_bits());
            if let Some(j) = seen.insert(key, i) {
                violations.push(format!("vertices {j} and {i} coincide"));
            }
        }
    }

    fn check_intervals(&self, violations: &mut Vec<String>, max_k: &mut f64) {
        let mut spans: Vec<(f64, f64, usize)> = (0..self.n_elements())
            .map(|t| {
                let el = self.element(t);
                let (a, b) = (self.vertices[el[0]][0], self.vertices[el[1]][0]);
                (a.min(b), a.max(b), t)
            })
            .collect();
        spans.sort_by(|x, y| x.0.total_cmp(&y.0));
        for w in spans.windows(2) {
            let (l, r) = (w[0], w[1]);
            if r.0 < l.1 {
                violations.push(format!("elements {} and {} overlap", l.2, r.2));
            } else if r.0 == l.1 {
                let shared = self
                    .element(l.2)
                    .iter()
                    .any(|v| self.element(r.2).contains(v));
                if !shared {
                    violations.push(format!(
                        "elements {} and {} touch without sharing a vertex",
                        l.2, r.2
                    ));
                } else {
                    let (hl, hr) = (l.1 - l.0, r.1 - r.0);
                    *max_k = max_k.max(hl / hr).max(hr / hl);
                }
            }
        }
    }

    fn check_triangles(&self, violations: &mut Vec<String>) {
        let mut count: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for el in self.elements() {
            for k in 0..3 {
                *count.entry(edge_key(el[k], el[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut lonely = Vec::new();
        for (&e, &c) in &count {
            if c > 2 {
                violations.push(format!("edge {e:?} shared by {c} elements"));
            } else if c == 1 {
                lonely.push(e);
            }
        }
        // a hanging vertex lies inside an edge that has only one neighbour
        let candidates: BTreeSet<usize> = lonely.iter().flat_map(|&(a, b)| [a, b]).collect();
        for &(a, b) in &lonely {
            let pa = &self.vertices[a];
            let e = sub(&self.vertices[b], pa);
            let len = norm(&e);
            for &v in &candidates {
                if v == a || v == b {
                    continue;
                }
                let r = sub(&self.vertices[v], pa);
                let s = super::dot(&r, &e) / (len * len);
                if s <= 0.0 || s >= 1.0 {
                    continue;
                }
                let off = norm(&super::cross(&r, &e)) / len;
                if off <= 1e-12 * len {
                    violations.push(format!("vertex {v} hangs on edge ({a}, {b})"));
                }
            }
        }
    }
}
