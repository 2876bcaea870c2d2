//! Interval operators: the logarithmic single layer, the hypersingular
//! operator of an interval screen, and the Dirichlet Green's function.

use std::f64::consts::PI;

use super::{DenseOperator, DofLabel};
use crate::error::{Error, Result};
use crate::mesh::{PatchTable, SimplicialMesh};
use crate::quadrature::GaussRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Space1d {
    /// Discontinuous piecewise constants, one dof per element.
    Pwc0,
    /// Continuous piecewise linears on the free vertices.
    Cpl1,
}

/// `K_n(t) = tⁿ/n! (−ln|t| + H_n)`, the n-fold antiderivative of `−ln|t|`.
fn k_n(n: usize, t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let mut fact = 1.0;
    let mut harmonic = 0.0;
    for k in 1..=n {
        fact *= k as f64;
        harmonic += 1.0 / k as f64;
    }
    t.powi(n as i32) / fact * (harmonic - t.abs().ln())
}

fn closed_form(a: f64, b: f64, c: f64, d: f64) -> [[f64; 2]; 2] {
    let (hx, hy) = (b - a, d - c);
    // value and derivative of the two local linears at the interval ends
    let fx = |i: usize, at_right: bool| -> [f64; 2] {
        let v = match (i, at_right) {
            (0, false) | (1, true) => 1.0,
            _ => 0.0,
        };
        let dv = if i == 0 { -1.0 / hx } else { 1.0 / hx };
        [v, dv]
    };
    let gy = |j: usize, at_right: bool| -> [f64; 2] {
        let v = match (j, at_right) {
            (0, false) | (1, true) => 1.0,
            _ => 0.0,
        };
        let dv = if j == 0 { -1.0 / hy } else { 1.0 / hy };
        [v, dv]
    };
    let mut out = [[0.0; 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, val) in row.iter_mut().enumerate() {
            let mut s = 0.0;
            for (yc, sign_y, gr) in [(c, 1.0, false), (d, -1.0, true)] {
                let g = gy(j, gr);
                for (m, gm) in g.iter().enumerate() {
                    if *gm == 0.0 {
                        continue;
                    }
                    for n in 0..2 {
                        let sign_n = if n == 0 { 1.0 } else { -1.0 };
                        let kk = m + n + 2;
                        let fb = fx(i, true)[n];
                        let fa = fx(i, false)[n];
                        s += sign_y * sign_n * gm * (k_n(kk, b - yc) * fb - k_n(kk, a - yc) * fa);
                    }
                }
            }
            *val = s;
        }
    }
    out
}

fn gauss_form(a: f64, b: f64, c: f64, d: f64, n: usize) -> [[f64; 2]; 2] {
    let g = GaussRule::new(n);
    let (hx, hy) = (b - a, d - c);
    let mut out = [[0.0; 2]; 2];
    for (sx, wx) in g.points.iter().zip(&g.weights) {
        let x = a + sx * hx;
        let fx = [1.0 - sx, *sx];
        for (sy, wy) in g.points.iter().zip(&g.weights) {
            let y = c + sy * hy;
            let k = -(x - y).abs().ln() * wx * wy * hx * hy;
            let gy = [1.0 - sy, *sy];
            for i in 0..2 {
                for j in 0..2 {
                    out[i][j] += k * fx[i] * gy[j];
                }
            }
        }
    }
    out
}

/// `∫_a^b ∫_c^d −ln|x − y| f_i(x) g_j(y) dy dx` for the local linears
/// `f_0 = (b − x)/(b − a)`, `f_1 = (x − a)/(b − a)` (and likewise `g` on
/// `[c, d]`). Touching or nearby intervals use exact antiderivatives;
/// well separated ones use Gauss rules, which avoid the cancellation of the
/// closed form at large distance.
pub fn log_moments(a: f64, b: f64, c: f64, d: f64) -> [[f64; 2]; 2] {
    let gap = (c - b).max(a - d).max(0.0);
    let ratio = gap / (b - a).max(d - c);
    if ratio >= 8.0 {
        gauss_form(a, b, c, d, 5)
    } else if ratio >= 2.0 {
        gauss_form(a, b, c, d, 8)
    } else {
        closed_form(a, b, c, d)
    }
}

/// Elements as `(left, right, left vertex, right vertex)`.
fn oriented_elements(mesh: &SimplicialMesh) -> Vec<(f64, f64, usize, usize)> {
    mesh.elements()
        .map(|el| {
            let (x0, x1) = (mesh.vertex(el[0])[0], mesh.vertex(el[1])[0]);
            if x0 <= x1 {
                (x0, x1, el[0], el[1])
            } else {
                (x1, x0, el[1], el[0])
            }
        })
        .collect()
}

fn check_interval(mesh: &SimplicialMesh) -> Result<()> {
    if mesh.dim() != 1 || mesh.ambient_dim() != 1 {
        return Err(Error::InvalidArgument(
            "interval assembly needs a mesh of a line segment".into(),
        ));
    }
    Ok(())
}

/// Single layer with kernel `−(1/2π) ln(|x − y|/L)`. The scale `L` defaults
/// to twice the domain diameter and must exceed the diameter.
pub fn assemble_single_layer_1d(
    mesh: &SimplicialMesh,
    space: Space1d,
    scale: Option<f64>,
) -> Result<DenseOperator> {
    check_interval(mesh)?;
    let diameter = mesh.domain_diameter();
    let l = scale.unwrap_or(2.0 * diameter);
    if !(l > diameter) {
        return Err(Error::CoercivityRisk { scale: l, diameter });
    }
    let els = oriented_elements(mesh);
    let ne = els.len();
    let ln_l = l.ln();
    let c = 1.0 / (2.0 * PI);
    match space {
        Space1d::Pwc0 => {
            let mut v = vec![0.0; ne * ne];
            super::for_each_upper_pair(
                ne,
                1,
                |t, s, out| {
                    let (a, b, _, _) = els[t];
                    let (cc, d, _, _) = els[s];
                    let m = log_moments(a, b, cc, d);
                    let sum = m[0][0] + m[0][1] + m[1][0] + m[1][1];
                    out[0] = c * (sum + ln_l * (b - a) * (d - cc));
                },
                |t, s, val| {
                    v[t * ne + s] = val[0];
                    v[s * ne + t] = val[0];
                },
            );
            DenseOperator::new(ne, v, DofLabel::Elements)
        }
        Space1d::Cpl1 => {
            let patch = PatchTable::new(mesh);
            let n = patch.n_free();
            let mut v = vec![0.0; n * n];
            super::for_each_upper_pair(
                ne,
                4,
                |t, s, out| {
                    let (a, b, _, _) = els[t];
                    let (cc, d, _, _) = els[s];
                    let m = log_moments(a, b, cc, d);
                    for i in 0..2 {
                        for j in 0..2 {
                            // each local linear integrates to half the length
                            out[2 * i + j] =
                                c * (m[i][j] + ln_l * 0.25 * (b - a) * (d - cc));
                        }
                    }
                },
                |t, s, val| {
                    let (_, _, l0, l1) = els[t];
                    let (_, _, r0, r1) = els[s];
                    for (i, vi) in [l0, l1].into_iter().enumerate() {
                        let Some(p) = patch.free_index(vi) else { continue };
                        for (j, vj) in [r0, r1].into_iter().enumerate() {
                            let Some(q) = patch.free_index(vj) else { continue };
                            v[p * n + q] += val[2 * i + j];
                            if t != s {
                                v[q * n + p] += val[2 * i + j];
                            }
                        }
                    }
                },
            );
            DenseOperator::new(n, v, DofLabel::Vertices)
        }
    }
}

fn has_both_ends_on_gamma(mesh: &SimplicialMesh) -> bool {
    let mut lo = (f64::INFINITY, 0);
    let mut hi = (f64::NEG_INFINITY, 0);
    for (i, p) in mesh.vertices().iter().enumerate() {
        if p[0] < lo.0 {
            lo = (p[0], i);
        }
        if p[0] > hi.0 {
            hi = (p[0], i);
        }
    }
    let g = mesh.gamma_faces();
    g.contains(&vec![lo.1]) && g.contains(&vec![hi.1])
}

/// Hypersingular operator of an interval screen, `(V u′)(v′)` with `V` the
/// piecewise-constant single layer, on linears vanishing at both ends.
pub fn assemble_hypersingular_1d(mesh: &SimplicialMesh, scale: Option<f64>) -> Result<DenseOperator> {
    check_interval(mesh)?;
    if !has_both_ends_on_gamma(mesh) {
        return Err(Error::UnsupportedConfiguration(
            "the screen hypersingular form needs γ at both endpoints".into(),
        ));
    }
    let v = assemble_single_layer_1d(mesh, Space1d::Pwc0, scale)?;
    let g = differentiation_matrix(mesh);
    Ok(congruence(&v, &g))
}

/// Element-by-vertex matrix of derivatives of the free hats, `±1/h_T`.
pub(crate) fn differentiation_matrix(mesh: &SimplicialMesh) -> crate::precond::SparseMatrix {
    let patch = PatchTable::new(mesh);
    let rows = oriented_elements(mesh)
        .into_iter()
        .map(|(a, b, l, r)| {
            let h = b - a;
            let mut row = Vec::new();
            if let Some(i) = patch.free_index(l) {
                row.push((i, -1.0 / h));
            }
            if let Some(i) = patch.free_index(r) {
                row.push((i, 1.0 / h));
            }
            row
        })
        .collect();
    crate::precond::SparseMatrix::from_rows(patch.n_free(), rows)
}

/// `Gᵀ V G` for dense `V` and sparse `G`.
pub(crate) fn congruence(v: &DenseOperator, g: &crate::precond::SparseMatrix) -> DenseOperator {
    let ne = g.n_rows();
    let n = g.n_cols();
    let vd = v.data();
    let mut vg = vec![0.0; ne * n];
    for r in 0..ne {
        for s in 0..ne {
            let w = vd[r * ne + s];
            for (j, x) in g.row(s) {
                vg[r * n + j] += w * x;
            }
        }
    }
    let mut a = vec![0.0; n * n];
    for t in 0..ne {
        for (i, x) in g.row(t) {
            for j in 0..n {
                a[i * n + j] += x * vg[t * n + j];
            }
        }
    }
    DenseOperator::new(n, a, DofLabel::Vertices).expect("square by construction")
}

/// `∬ (min(x, y) − xy) u(y) v(x)` on piecewise constants of (0, 1): the
/// inverse of the Dirichlet Laplacian, an operator of order −2.
pub fn assemble_greens_1d(mesh: &SimplicialMesh) -> Result<DenseOperator> {
    check_interval(mesh)?;
    let xs = mesh.vertices().iter().map(|p| p[0]);
    let lo = xs.clone().fold(f64::INFINITY, f64::min);
    let hi = xs.fold(f64::NEG_INFINITY, f64::max);
    if lo.abs() > 1e-14 || (hi - 1.0).abs() > 1e-14 {
        return Err(Error::RescaleRequired);
    }
    let els = oriented_elements(mesh);
    let ne = els.len();
    let mut v = vec![0.0; ne * ne];
    for t in 0..ne {
        let (a, b, _, _) = els[t];
        let mx = 0.5 * (b * b - a * a);
        for s in t..ne {
            let (c, d, _, _) = els[s];
            let my = 0.5 * (d * d - c * c);
            let min_part = if t == s {
                (b.powi(3) - a.powi(3)) / 3.0 - a * a * (b - a)
            } else if b <= c {
                mx * (d - c)
            } else {
                my * (b - a)
            };
            let val = min_part - mx * my;
            v[t * ne + s] = val;
            v[s * ne + t] = val;
        }
    }
    DenseOperator::new(ne, v, DofLabel::Elements)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::GammaSpec;
    use crate::precond::LinearOperator;

    /// Composite Gauss oracle for `∬ −ln|x−y| f g`. Both integrals are cut
    /// geometrically towards every point where the integrand is singular;
    /// the inner one is split at `x` itself.
    fn oracle(a: f64, b: f64, c: f64, d: f64, i: usize, j: usize) -> f64 {
        let g = GaussRule::new(16);
        let graded = |lo: f64, hi: f64, towards: &[f64]| {
            let mut cuts = vec![lo, hi];
            for &p in towards {
                if p < lo || p > hi {
                    continue;
                }
                cuts.push(p);
                let mut h = (hi - lo) * 0.5;
                for _ in 0..36 {
                    if p - h > lo {
                        cuts.push(p - h);
                    }
                    if p + h < hi {
                        cuts.push(p + h);
                    }
                    h *= 0.5;
                }
            }
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            cuts
        };
        let quad = |cuts: &[f64], f: &dyn Fn(f64) -> f64| {
            let mut s = 0.0;
            for w in cuts.windows(2) {
                for (t, gw) in g.points.iter().zip(&g.weights) {
                    s += gw * (w[1] - w[0]) * f(w[0] + t * (w[1] - w[0]));
                }
            }
            s
        };
        let outer = graded(a, b, &[c, d]);
        quad(&outer, &|x| {
            let fx = if i == 0 { (b - x) / (b - a) } else { (x - a) / (b - a) };
            let inner = graded(c, d, &[x, a, b]);
            fx * quad(&inner, &|y| {
                let fy = if j == 0 { (d - y) / (d - c) } else { (y - c) / (d - c) };
                -(x - y).abs().ln() * fy
            })
        })
    }

    #[test]
    fn single_element_closed_form() {
        for h in [1.0, 0.5, 0.125, 3.0] {
            let m = closed_form(0.0, h, 0.0, h);
            let sum = m[0][0] + m[0][1] + m[1][0] + m[1][1];
            let exact = h * h * (1.5 - h.ln());
            assert!((sum - exact).abs() < 1e-14 * exact.abs().max(1.0));
        }
    }

    #[test]
    fn moments_match_graded_oracle() {
        let cases = [
            (0.0, 0.3, 0.0, 0.3),
            (0.0, 0.3, 0.3, 0.5),
            (0.2, 0.3, 0.0, 0.2),
            (0.0, 0.1, 0.15, 0.4),
            (0.0, 0.1, 0.35, 0.45),
            (0.0, 0.05, 0.9, 1.0),
        ];
        for &(a, b, c, d) in &cases {
            let m = log_moments(a, b, c, d);
            for i in 0..2 {
                for j in 0..2 {
                    let o = oracle(a, b, c, d, i, j);
                    assert!((m[i][j] - o).abs() < 1e-11 * o.abs().max(1e-3), "{a} {b} {c} {d} {i}{j}: {} vs {o}", m[i][j]);
                }
            }
        }
    }

    #[test]
    fn closed_form_and_gauss_agree_at_switch() {
        let (a, b, c, d) = (0.0, 0.1, 0.3, 0.4);
        let x = closed_form(a, b, c, d);
        let y = gauss_form(a, b, c, d, 8);
        for i in 0..2 {
            for j in 0..2 {
                assert!((x[i][j] - y[i][j]).abs() < 1e-12 * x[i][j].abs());
            }
        }
    }

    #[test]
    fn single_layer_scale_shift() {
        let mesh = SimplicialMesh::interval(5, GammaSpec::None).unwrap();
        let v1 = assemble_single_layer_1d(&mesh, Space1d::Pwc0, Some(1.5)).unwrap();
        let v2 = assemble_single_layer_1d(&mesh, Space1d::Pwc0, Some(3.0)).unwrap();
        let h = 0.2;
        for (x, y) in v1.data().iter().zip(v2.data()) {
            let shift = 2f64.ln() / (2.0 * PI) * h * h;
            assert!((y - x - shift).abs() < 1e-14);
        }
    }

    #[test]
    fn small_scale_is_rejected() {
        let mesh = SimplicialMesh::interval(4, GammaSpec::None).unwrap();
        assert!(matches!(
            assemble_single_layer_1d(&mesh, Space1d::Pwc0, Some(1.0)),
            Err(Error::CoercivityRisk { .. })
        ));
    }

    #[test]
    fn galerkin_additivity_under_bisection() {
        let coarse = SimplicialMesh::interval_from_points(&[0.0, 0.2, 0.45, 1.0], GammaSpec::None).unwrap();
        let fine = coarse.refine_uniform_bisection();
        let vc = assemble_single_layer_1d(&coarse, Space1d::Pwc0, Some(2.0)).unwrap();
        let vf = assemble_single_layer_1d(&fine, Space1d::Pwc0, Some(2.0)).unwrap();
        // children of coarse element t are fine elements 2t and 2t+1
        for t in 0..3 {
            for s in 0..3 {
                let mut sum = 0.0;
                for a in [2 * t, 2 * t + 1] {
                    for b in [2 * s, 2 * s + 1] {
                        sum += vf.get(a, b);
                    }
                }
                let c = vc.get(t, s);
                assert!((sum - c).abs() < 1e-12 * c.abs(), "{t} {s}: {sum} vs {c}");
            }
        }
    }

    #[test]
    fn cpl_row_sums_match_pwc() {
        // with γ empty the hats sum to one, so Σ_ij V_cpl = Σ_TS V_pwc
        let mesh = SimplicialMesh::interval_from_points(&[0.0, 0.1, 0.5, 0.6, 1.0], GammaSpec::None).unwrap();
        let a = assemble_single_layer_1d(&mesh, Space1d::Pwc0, None).unwrap();
        let b = assemble_single_layer_1d(&mesh, Space1d::Cpl1, None).unwrap();
        let sa: f64 = a.data().iter().sum();
        let sb: f64 = b.data().iter().sum();
        assert!((sa - sb).abs() < 1e-13 * sa);
    }

    #[test]
    fn hypersingular_is_congruence() {
        let mesh = SimplicialMesh::interval(8, GammaSpec::Both).unwrap();
        let a = assemble_hypersingular_1d(&mesh, None).unwrap();
        let v = assemble_single_layer_1d(&mesh, Space1d::Pwc0, None).unwrap();
        let g = differentiation_matrix(&mesh).to_dense();
        let (ne, n) = (8, 7);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for t in 0..ne {
                    for u in 0..ne {
                        s += g[t * n + i] * v.get(t, u) * g[u * n + j];
                    }
                }
                assert!((s - a.get(i, j)).abs() < 1e-13 * a.get(i, i));
            }
        }
        assert!(a.symmetry_defect() < 1e-14);
    }

    #[test]
    fn hypersingular_needs_both_ends() {
        let mesh = SimplicialMesh::interval(4, GammaSpec::Left).unwrap();
        assert!(matches!(
            assemble_hypersingular_1d(&mesh, None),
            Err(Error::UnsupportedConfiguration(_))
        ));
    }

    #[test]
    fn greens_values() {
        let one = SimplicialMesh::interval(1, GammaSpec::Both).unwrap();
        let g = assemble_greens_1d(&one).unwrap();
        assert!((g.get(0, 0) - 1.0 / 12.0).abs() < 1e-15);

        // refined entries add up to the coarse one
        let fine = SimplicialMesh::interval(4, GammaSpec::Both).unwrap();
        let gf = assemble_greens_1d(&fine).unwrap();
        let total: f64 = gf.data().iter().sum();
        assert!((total - 1.0 / 12.0).abs() < 1e-15);
        assert!(gf.symmetry_defect() == 0.0);

        let shifted = SimplicialMesh::interval_from_points(&[0.0, 2.0], GammaSpec::Both).unwrap();
        assert!(matches!(assemble_greens_1d(&shifted), Err(Error::RescaleRequired)));
    }

    #[test]
    fn greens_sampled_kernel_nonnegative() {
        let g = GaussRule::new(7);
        for &x in &g.points {
            assert!(x - x * x >= 0.0);
        }
        let mesh = SimplicialMesh::interval(3, GammaSpec::Both).unwrap();
        let m = assemble_greens_1d(&mesh).unwrap();
        let y = m.apply(&[1.0, 1.0, 1.0]).unwrap();
        assert!(y.iter().all(|&v| v > 0.0));
    }
}
