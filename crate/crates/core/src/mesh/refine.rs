use std::collections::{BTreeSet, HashMap, HashSet};

use super::{edge_key, midpoint, Point, SimplicialMesh};
use crate::error::{Error, Result};

/// Result of one red refinement: the fine mesh plus its genealogy.
#[derive(Debug, Clone)]
pub struct RedRefinement {
    pub mesh: SimplicialMesh,
    /// Coarse parent of every fine element.
    pub parent: Vec<usize>,
    /// `corner_child[t][k]` is the child of `t` containing local vertex `k`.
    pub corner_child: Vec<Vec<usize>>,
}

struct MidpointCache {
    map: HashMap<(usize, usize), usize>,
}

impl MidpointCache {
    fn get_or_insert(&mut self, vertices: &mut Vec<Point>, a: usize, b: usize) -> usize {
        let key = edge_key(a, b);
        if let Some(&m) = self.map.get(&key) {
            return m;
        }
        let m = vertices.len();
        vertices.push(midpoint(&vertices[a], &vertices[b]));
        self.map.insert(key, m);
        m
    }
}

impl SimplicialMesh {
    /// Bisects every element once (conforming newest-vertex bisection with
    /// all elements marked).
    pub fn refine_uniform_bisection(&self) -> SimplicialMesh {
        let all: Vec<usize> = (0..self.n_elements()).collect();
        self.refine_nvb_conforming(&all)
            .expect("all element ids are in range")
    }

    /// Conforming newest-vertex bisection: marked elements are bisected at
    /// their refinement edges and the closure is added until no hanging
    /// vertices remain.
    pub fn refine_nvb_conforming(&self, marked: &[usize]) -> Result<SimplicialMesh> {
        let ne = self.n_elements();
        if let Some(&t) = marked.iter().find(|&&t| t >= ne) {
            return Err(Error::InvalidArgument(format!(
                "marked element {t} out of range ({ne} elements)"
            )));
        }
        if marked.is_empty() {
            return Ok(self.clone());
        }
        match self.dim {
            1 => Ok(self.bisect_intervals(marked)),
            _ => Ok(self.bisect_triangles(marked)),
        }
    }

    fn bisect_intervals(&self, marked: &[usize]) -> SimplicialMesh {
        let mut is_marked = vec![false; self.n_elements()];
        for &t in marked {
            is_marked[t] = true;
        }
        let mut vertices = self.vertices.clone();
        let mut cells = Vec::new();
        let mut generation = Vec::new();
        for t in 0..self.n_elements() {
            let el = self.element(t);
            let g = self.generation[t];
            if is_marked[t] {
                let m = vertices.len();
                vertices.push(midpoint(&vertices[el[0]], &vertices[el[1]]));
                cells.extend_from_slice(&[el[0], m, m, el[1]]);
                generation.extend_from_slice(&[g + 1, g + 1]);
            } else {
                cells.extend_from_slice(el);
                generation.push(g);
            }
        }
        let n = generation.len();
        SimplicialMesh::from_parts(
            1,
            self.ambient,
            vertices,
            cells,
            self.gamma.clone(),
            vec![0; n],
            generation,
        )
    }

    fn bisect_triangles(&self, marked: &[usize]) -> SimplicialMesh {
        let mut marked_edges: HashSet<(usize, usize)> = HashSet::new();
        for &t in marked {
            let (a, b) = self.refinement_edge(t);
            marked_edges.insert(edge_key(a, b));
        }
        // closure: an element with any marked edge must split its refinement edge
        loop {
            let mut changed = false;
            for t in 0..self.n_elements() {
                let el = self.element(t);
                let (a, b) = self.refinement_edge(t);
                let r = edge_key(a, b);
                if marked_edges.contains(&r) {
                    continue;
                }
                let hit = (0..3).any(|k| marked_edges.contains(&edge_key(el[k], el[(k + 1) % 3])));
                if hit {
                    marked_edges.insert(r);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut vertices = self.vertices.clone();
        let mut cache = MidpointCache {
            map: HashMap::new(),
        };
        let mut cells = Vec::with_capacity(self.cells.len() * 2);
        let mut newest = Vec::with_capacity(self.n_elements() * 2);
        let mut generation = Vec::with_capacity(self.n_elements() * 2);
        let mut stack: Vec<([usize; 3], u8, u32)> = Vec::new();
        for t in 0..self.n_elements() {
            let el = self.element(t);
            stack.push(([el[0], el[1], el[2]], self.newest[t], self.generation[t]));
            while let Some((tri, k, g)) = stack.pop() {
                let k = k as usize;
                let c = tri[k];
                let p = tri[(k + 1) % 3];
                let q = tri[(k + 2) % 3];
                if !marked_edges.contains(&edge_key(p, q)) {
                    cells.extend_from_slice(&tri);
                    newest.push(k as u8);
                    generation.push(g);
                    continue;
                }
                let m = cache.get_or_insert(&mut vertices, p, q);
                // pushed in reverse so that [c, p, m] is emitted first
                stack.push(([c, m, q], 1, g + 1));
                stack.push(([c, p, m], 2, g + 1));
            }
        }

        let mut gamma = BTreeSet::new();
        let mut pending: Vec<(usize, usize)> = self
            .gamma
            .iter()
            .map(|f| (f[0], f[1]))
            .collect();
        while let Some((a, b)) = pending.pop() {
            match cache.map.get(&edge_key(a, b)) {
                Some(&m) => {
                    pending.push((a, m));
                    pending.push((m, b));
                }
                None => {
                    let (x, y) = edge_key(a, b);
                    gamma.insert(vec![x, y]);
                }
            }
        }

        SimplicialMesh::from_parts(
            2,
            self.ambient,
            vertices,
            cells,
            gamma,
            newest,
            generation,
        )
    }

    /// Uniform red refinement into `2^d` children per element. Used by the
    /// dual-function oracle only.
    pub fn red_refine(&self) -> RedRefinement {
        let mut vertices = self.vertices.clone();
        let mut cache = MidpointCache {
            map: HashMap::new(),
        };
        let mut cells = Vec::new();
        let mut parent = Vec::new();
        let mut corner_child = Vec::with_capacity(self.n_elements());
        let mut generation = Vec::new();
        for t in 0..self.n_elements() {
            let el = self.element(t).to_vec();
            let g = self.generation[t] + 1;
            let first = parent.len();
            if self.dim == 1 {
                let m = cache.get_or_insert(&mut vertices, el[0], el[1]);
                cells.extend_from_slice(&[el[0], m, m, el[1]]);
                parent.extend_from_slice(&[t, t]);
                generation.extend_from_slice(&[g, g]);
                corner_child.push(vec![first, first + 1]);
            } else {
                let m01 = cache.get_or_insert(&mut vertices, el[0], el[1]);
                let m12 = cache.get_or_insert(&mut vertices, el[1], el[2]);
                let m02 = cache.get_or_insert(&mut vertices, el[0], el[2]);
                cells.extend_from_slice(&[el[0], m01, m02]);
                cells.extend_from_slice(&[m01, el[1], m12]);
                cells.extend_from_slice(&[m02, m12, el[2]]);
                cells.extend_from_slice(&[m12, m02, m01]);
                parent.extend_from_slice(&[t; 4]);
                generation.extend_from_slice(&[g; 4]);
                corner_child.push(vec![first, first + 1, first + 2]);
            }
        }
        let mut gamma = BTreeSet::new();
        for f in &self.gamma {
            if self.dim == 1 {
                gamma.insert(f.clone());
            } else {
                let m = cache.map[&edge_key(f[0], f[1])];
                gamma.insert(vec![f[0].min(m), f[0].max(m)]);
                gamma.insert(vec![f[1].min(m), f[1].max(m)]);
            }
        }
        let n = parent.len();
        let mut mesh = SimplicialMesh::from_parts(
            self.dim,
            self.ambient,
            vertices,
            cells,
            gamma,
            vec![0; n],
            generation,
        );
        mesh.init_refinement_edges();
        RedRefinement {
            mesh,
            parent,
            corner_child,
        }
    }
}
