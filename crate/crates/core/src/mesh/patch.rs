use super::SimplicialMesh;

/// Vertex stars: incident elements, patch volumes and local sizes.
#[derive(Debug, Clone)]
pub struct PatchTable {
    dim: usize,
    free: Vec<usize>,
    free_index: Vec<Option<usize>>,
    incident: Vec<Vec<usize>>,
    volume: Vec<f64>,
    h: Vec<f64>,
}

impl PatchTable {
    pub fn new(mesh: &SimplicialMesh) -> Self {
        let nv = mesh.n_vertices();
        let mut incident = vec![Vec::new(); nv];
        let mut volume = vec![0.0; nv];
        // element ids increase, so each sum runs in sorted element order
        for t in 0..mesh.n_elements() {
            let v = mesh.volume(t);
            for &i in mesh.element(t) {
                incident[i].push(t);
                volume[i] += v;
            }
        }
        let d = mesh.dim() as f64;
        let h = volume.iter().map(|&w: &f64| w.powf(1.0 / d)).collect();
        let free = mesh.free_vertices();
        let mut free_index = vec![None; nv];
        for (k, &v) in free.iter().enumerate() {
            free_index[v] = Some(k);
        }
        PatchTable {
            dim: mesh.dim(),
            free,
            free_index,
            incident,
            volume,
            h,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Free vertices, sorted by vertex id. Position in this list is the dof
    /// index used by every assembled operator on continuous spaces.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Dof index of vertex `v`, or `None` if it lies on γ.
    pub fn free_index(&self, v: usize) -> Option<usize> {
        self.free_index[v]
    }

    pub fn incident(&self, v: usize) -> &[usize] {
        &self.incident[v]
    }

    /// `|ω_ν|` for every vertex.
    pub fn volumes(&self) -> &[f64] {
        &self.volume
    }

    pub fn volume(&self, v: usize) -> f64 {
        self.volume[v]
    }

    /// `h_ν = |ω_ν|^{1/d}`.
    pub fn h(&self, v: usize) -> f64 {
        self.h[v]
    }

    /// Patch volumes of the free vertices, in dof order.
    pub fn free_volumes(&self) -> Vec<f64> {
        self.free.iter().map(|&v| self.volume[v]).collect()
    }

    pub fn total_volume(&self) -> f64 {
        self.volume.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaSpec;

    #[test]
    fn interval_patch() {
        let m = SimplicialMesh::interval(4, GammaSpec::Both).unwrap();
        let p = PatchTable::new(&m);
        assert_eq!(p.free_vertices(), &[1, 2, 3]);
        assert_eq!(p.volume(2), 0.5);
        assert_eq!(p.h(2), 0.5);
        assert_eq!(p.volume(0), 0.25);
    }

    #[test]
    fn cube_patch_total() {
        let m = SimplicialMesh::cube_surface();
        let p = PatchTable::new(&m);
        assert!((p.total_volume() - 18.0).abs() < 1e-13);
        for v in 0..8 {
            let direct: f64 = p.incident(v).iter().map(|&t| m.volume(t)).sum();
            assert_eq!(direct, p.volume(v));
            assert_eq!(p.h(v), p.volume(v).powf(0.5));
        }
        assert_eq!(p.n_free(), 8);
    }
}
