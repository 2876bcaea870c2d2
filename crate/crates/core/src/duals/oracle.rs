use super::DualVariant;
use crate::error::{Error, Result};
use crate::mesh::{PatchTable, SimplicialMesh};

/// Which closed formula defines the piecewise-constant duals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PwcFormula {
    /// `2^{d+1} 𝟙_{ω*} − 𝟙_ω` on one red refinement. Not biorthogonal
    /// enough in one dimension, where it is rejected.
    SingleRefinement,
    /// `(16/3) 𝟙_{ω**} − (1/3) 𝟙_ω` on two red refinements (intervals only).
    TwoFold,
}

/// Sparse coefficients on the fine mesh: `(fine element, value)`, sorted.
type Coeffs = Vec<(usize, f64)>;

/// Dual functions materialised as piecewise constants on the twice red
/// refined mesh, for checking biorthogonality and support identities.
///
/// Every vertex (on γ or not) gets its functions, indexed by vertex id.
/// For [`DualVariant::Pwc`] the dual is `ψ_ν` itself; for
/// [`DualVariant::Cpl`] the dual is `φ_ν + θ_ν` and only `θ_ν` is
/// piecewise constant.
#[derive(Debug, Clone)]
pub struct DualOracle {
    variant: DualVariant,
    formula: Option<PwcFormula>,
    coarse: SimplicialMesh,
    patches: PatchTable,
    fine: SimplicialMesh,
    coarse_of: Vec<usize>,
    fine_in: Vec<Vec<usize>>,
    piecewise: Vec<Coeffs>,
    theta: Vec<Coeffs>,
    phi_tilde: Vec<Coeffs>,
}

/// Fine-mesh structure of a coarse element: per local vertex, whether a
/// fine element lies in the corner child (`*`) and in the corner grandchild
/// (`**`) at that vertex.
struct Corners {
    star: Vec<Vec<bool>>,
    star2: Vec<Vec<bool>>,
}

impl DualOracle {
    /// Piecewise-constant duals; intervals use the two-fold formula.
    pub fn pwc(mesh: &SimplicialMesh) -> Result<Self> {
        let formula = if mesh.dim() == 1 {
            PwcFormula::TwoFold
        } else {
            PwcFormula::SingleRefinement
        };
        Self::pwc_with(mesh, formula)
    }

    pub fn pwc_with(mesh: &SimplicialMesh, formula: PwcFormula) -> Result<Self> {
        match (mesh.dim(), formula) {
            (1, PwcFormula::SingleRefinement) => Err(Error::UnsupportedConfiguration(
                "the single-refinement piecewise-constant duals are not biorthogonal on intervals"
                    .into(),
            )),
            (2, PwcFormula::TwoFold) => Err(Error::UnsupportedConfiguration(
                "the two-fold piecewise-constant formula is for intervals".into(),
            )),
            _ => Ok(Self::build(mesh, DualVariant::Pwc, Some(formula))),
        }
    }

    pub fn cpl(mesh: &SimplicialMesh) -> Result<Self> {
        Ok(Self::build(mesh, DualVariant::Cpl, None))
    }

    fn build(mesh: &SimplicialMesh, variant: DualVariant, formula: Option<PwcFormula>) -> Self {
        let r1 = mesh.red_refine();
        let r2 = r1.mesh.red_refine();
        let nd = mesh.dim() + 1;
        let nf = r2.mesh.n_elements();
        let coarse_of: Vec<usize> = (0..nf).map(|f| r1.parent[r2.parent[f]]).collect();
        let mut fine_in = vec![Vec::new(); mesh.n_elements()];
        for (f, &t) in coarse_of.iter().enumerate() {
            fine_in[t].push(f);
        }
        let corners: Vec<Corners> = (0..mesh.n_elements())
            .map(|t| {
                let mut star = vec![vec![false; fine_in[t].len()]; nd];
                let mut star2 = vec![vec![false; fine_in[t].len()]; nd];
                for k in 0..nd {
                    let c1 = r1.corner_child[t][k];
                    // corner children keep the corner at the same local index
                    let c2 = r2.corner_child[c1][k];
                    for (i, &f) in fine_in[t].iter().enumerate() {
                        star[k][i] = r2.parent[f] == c1;
                        star2[k][i] = f == c2;
                    }
                }
                Corners { star, star2 }
            })
            .collect();

        let d = mesh.dim() as f64;
        let two_d = 2f64.powi(mesh.dim() as i32);
        let nv = mesh.n_vertices();
        let mut piecewise = vec![Vec::new(); nv];
        let mut theta = vec![Vec::new(); nv];
        let mut phi_tilde = vec![Vec::new(); nv];
        for t in 0..mesh.n_elements() {
            let c = &corners[t];
            for (k, &v) in mesh.element(t).iter().enumerate() {
                for (i, &f) in fine_in[t].iter().enumerate() {
                    let in1 = c.star[k][i] as u8 as f64;
                    let in2 = c.star2[k][i] as u8 as f64;
                    match variant {
                        DualVariant::Pwc => {
                            let psi = match formula {
                                Some(PwcFormula::TwoFold) => 16.0 / 3.0 * in2 - 1.0 / 3.0,
                                _ => 2.0 * two_d * in1 - 1.0,
                            };
                            piecewise[v].push((f, psi));
                            theta[v].push((f, psi - 1.0));
                        }
                        DualVariant::Cpl => {
                            let th = 4.0 * two_d / (d + 2.0) * (two_d * in2 - in1);
                            piecewise[v].push((f, th));
                            theta[v].push((f, th));
                            let others = (0..mesh.dim() + 1)
                                .filter(|&j| j != k && c.star[j][i])
                                .count() as f64;
                            let w = 2.0 * two_d / (d + 1.0);
                            phi_tilde[v].push((f, (1.0 + d * w * in1 - w * others) / (d + 1.0)));
                        }
                    }
                }
            }
        }
        for list in piecewise.iter_mut().chain(&mut theta).chain(&mut phi_tilde) {
            list.sort_by_key(|e| e.0);
        }
        DualOracle {
            variant,
            formula,
            coarse: mesh.clone(),
            patches: PatchTable::new(mesh),
            fine: r2.mesh,
            coarse_of,
            fine_in,
            piecewise,
            theta,
            phi_tilde,
        }
    }

    pub fn variant(&self) -> DualVariant {
        self.variant
    }

    /// The twice red refined mesh carrying all coefficients.
    pub fn fine_mesh(&self) -> &SimplicialMesh {
        &self.fine
    }

    pub fn coarse_parent(&self, f: usize) -> usize {
        self.coarse_of[f]
    }

    /// Piecewise-constant part of the dual of vertex `v`: `ψ_v` for PWC,
    /// `θ_v` for CPL.
    pub fn piecewise_part(&self, v: usize) -> &[(usize, f64)] {
        &self.piecewise[v]
    }

    pub fn theta(&self, v: usize) -> &[(usize, f64)] {
        &self.theta[v]
    }

    /// `φ̃_v` (CPL only).
    pub fn phi_tilde(&self, v: usize) -> Option<&[(usize, f64)]> {
        match self.variant {
            DualVariant::Cpl => Some(&self.phi_tilde[v]),
            DualVariant::Pwc => None,
        }
    }

    /// `∫ c φ_w` for a fine piecewise constant `c` restricted to coarse
    /// element `t`; exact because `φ_w` is affine on every fine element.
    fn against_hat(&self, c: &[(usize, f64)], t: usize, w: usize) -> f64 {
        let Some(kw) = self.coarse.element(t).iter().position(|&x| x == w) else {
            return 0.0;
        };
        let mut s = 0.0;
        for &f in &self.fine_in[t] {
            if let Ok(i) = c.binary_search_by_key(&f, |e| e.0) {
                let lam = self.coarse.barycentric(t, &self.fine.centroid(f));
                s += c[i].1 * self.fine.volume(f) * lam[kw];
            }
        }
        s
    }

    fn common_elements(&self, v: usize, w: usize) -> Vec<usize> {
        self.patches
            .incident(v)
            .iter()
            .copied()
            .filter(|&t| self.coarse.element(t).contains(&w))
            .collect()
    }

    /// `⟨ψ_v, φ_w⟩`.
    pub fn pairing(&self, v: usize, w: usize) -> f64 {
        let d = self.coarse.dim() as f64;
        let mut s = 0.0;
        for t in self.common_elements(v, w) {
            if self.variant == DualVariant::Cpl {
                let delta = if v == w { 1.0 } else { 0.0 };
                s += self.coarse.volume(t) * (1.0 + delta) / ((d + 1.0) * (d + 2.0));
            }
            s += self.against_hat(&self.piecewise[v], t, w);
        }
        s
    }

    /// `⟨ψ_ν, φ_ν'⟩` over the free vertices, row-major.
    pub fn pairing_matrix(&self) -> Vec<f64> {
        let free = self.patches.free_vertices();
        let n = free.len();
        let mut m = vec![0.0; n * n];
        for (i, &v) in free.iter().enumerate() {
            for (j, &w) in free.iter().enumerate() {
                m[i * n + j] = self.pairing(v, w);
            }
        }
        m
    }

    /// `⟨φ̃_v, φ_w⟩` (CPL only).
    pub fn phi_tilde_pairing(&self, v: usize, w: usize) -> Option<f64> {
        let c = self.phi_tilde(v)?;
        Some(
            self.common_elements(v, w)
                .into_iter()
                .map(|t| self.against_hat(c, t, w))
                .sum(),
        )
    }

    fn product(&self, a: &[(usize, f64)], b: &[(usize, f64)], on: Option<usize>) -> f64 {
        let (mut i, mut j, mut s) = (0, 0, 0.0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    let f = a[i].0;
                    if on.is_none_or(|t| self.coarse_of[f] == t) {
                        s += a[i].1 * b[j].1 * self.fine.volume(f);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        s
    }

    /// `⟨θ_v, θ_w⟩_{L₂}`.
    pub fn theta_inner(&self, v: usize, w: usize) -> f64 {
        self.product(&self.theta[v], &self.theta[w], None)
    }

    /// Element Gram matrix of the bubbles of the vertices of `t`, scaled so
    /// it is independent of `t`: `(2^d − 1, −1)` for the single-refinement
    /// formula, `(3, −1)` for the two-fold interval formula. PWC only.
    pub fn normalized_bubble_gram(&self, t: usize) -> Result<Vec<f64>> {
        let scale = match self.formula {
            Some(PwcFormula::SingleRefinement) => 2f64.powi(-(self.coarse.dim() as i32)),
            Some(PwcFormula::TwoFold) => 9.0 / 16.0,
            None => {
                return Err(Error::UnsupportedConfiguration(
                    "the normalised bubble pattern belongs to the piecewise-constant duals".into(),
                ))
            }
        } / self.coarse.volume(t);
        let el = self.coarse.element(t);
        let n = el.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                g[i * n + j] = scale * self.product(&self.theta[el[i]], &self.theta[el[j]], Some(t));
            }
        }
        Ok(g)
    }

    /// True when every coefficient of the functions of `v` lies in a fine
    /// element whose coarse parent contains `v`.
    pub fn supported_in_patch(&self, v: usize) -> bool {
        let ok = |c: &Coeffs| c.iter().all(|&(f, _)| self.coarse.element(self.coarse_of[f]).contains(&v));
        ok(&self.piecewise[v]) && ok(&self.theta[v]) && ok(&self.phi_tilde[v])
    }

    /// Fine elements where `θ_v` is nonzero.
    pub fn theta_support(&self, v: usize) -> Vec<usize> {
        self.theta[v].iter().filter(|e| e.1 != 0.0).map(|e| e.0).collect()
    }
}
