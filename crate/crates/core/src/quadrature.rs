//! Gauss rules on intervals and triangles, and the coordinate-transform rules
//! for singular double integrals over pairs of flat triangles.
//!
//! Pair rules live on the reference triangle
//! `τ̂ = {(0,0), (1,0), (1,1)}` (so `0 ≤ x̂₂ ≤ x̂₁ ≤ 1`). A physical triangle
//! `(P0, P1, P2)` is parametrised as `P0 + x̂₁(P1 − P0) + x̂₂(P2 − P1)`,
//! whose barycentric coordinates are `(1 − x̂₁, x̂₁ − x̂₂, x̂₂)`.

/// Gauss–Legendre rule on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut points = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            // Newton iteration on P_n from the Chebyshev-like initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            points[i] = 0.5 * (1.0 - x);
            points[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        GaussRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Collapsed Gauss rule on the unit triangle `{(0,0),(1,0),(0,1)}`, stored
/// as barycentric coordinates `(λ0, λ1, λ2)`. Weights sum to 1/2. Exact for
/// polynomials of total degree `2n − 2`.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriangleRule {
    pub fn new(n: usize) -> Self {
        let g = GaussRule::new(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &u) in g.points.iter().enumerate() {
            for (j, &v) in g.points.iter().enumerate() {
                let s = u;
                let t = v * (1.0 - u);
                points.push([1.0 - s - t, s, t]);
                weights.push(g.weights[i] * g.weights[j] * (1.0 - u));
            }
        }
        TriangleRule { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// How two panels touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairClass {
    Identical,
    CommonEdge,
    CommonVertex,
    Disjoint,
}

/// Points `(x̂, ŷ)` in `τ̂ × τ̂` with weights; weights sum to 1/4.
#[derive(Debug, Clone)]
pub struct PairRule {
    pub x: Vec<[f64; 2]>,
    pub y: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl PairRule {
    fn with_capacity(n: usize) -> Self {
        PairRule {
            x: Vec::with_capacity(n),
            y: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Regularised rule for `class`.
    ///
    /// After the transformation the integrand is polynomial in some of the
    /// four variables (these get `n_poly` Gauss points) and smooth but
    /// nearly singular in the others (these get `n_sing` points): `η3` for
    /// identical panels, `η2, η3` for a common edge, `η1, η2, η3` for a
    /// common vertex.
    ///
    /// For `CommonEdge` the shared edge must be `P0P1` in both panels (same
    /// order); for `CommonVertex` the shared vertex must be `P0` in both.
    pub fn singular(class: PairClass, n_poly: usize, n_sing: usize) -> Self {
        let n_smooth = match class {
            PairClass::Identical => 3,
            PairClass::CommonEdge => 2,
            PairClass::CommonVertex => 1,
            PairClass::Disjoint => panic!("disjoint panels use tensor Gauss rules"),
        };
        let gp = GaussRule::new(n_poly);
        let gs = GaussRule::new(n_sing);
        let rule_for = |k: usize| if k < n_smooth { &gp } else { &gs };
        let (r0, r1, r2, r3) = (rule_for(0), rule_for(1), rule_for(2), rule_for(3));
        let mut rule = PairRule::with_capacity(6 * r0.len() * r1.len() * r2.len() * r3.len());
        for (a, &xi) in r0.points.iter().enumerate() {
            for (b, &e1) in r1.points.iter().enumerate() {
                for (c, &e2) in r2.points.iter().enumerate() {
                    for (d, &e3) in r3.points.iter().enumerate() {
                        let w = r0.weights[a] * r1.weights[b] * r2.weights[c] * r3.weights[d];
                        rule.push_maps(class, xi, e1, e2, e3, w);
                    }
                }
            }
        }
        rule
    }

    fn push(&mut self, x: [f64; 2], y: [f64; 2], w: f64) {
        self.x.push(x);
        self.y.push(y);
        self.weights.push(w);
    }

    fn push_maps(&mut self, class: PairClass, xi: f64, e1: f64, e2: f64, e3: f64, w: f64) {
        let s = |p: [f64; 2]| [xi * p[0], xi * p[1]];
        match class {
            PairClass::Identical => {
                let wt = w * xi.powi(3) * e1 * e1 * e2;
                let x1 = s([1.0, 1.0 - e1 + e1 * e2]);
                let y1 = s([1.0 - e1 * e2 * e3, 1.0 - e1]);
                self.push(x1, y1, wt);
                self.push(y1, x1, wt);
                let x3 = s([1.0, e1 * (1.0 - e2 + e2 * e3)]);
                let y3 = s([1.0 - e1 * e2, e1 * (1.0 - e2)]);
                self.push(x3, y3, wt);
                self.push(y3, x3, wt);
                let x5 = s([1.0 - e1 * e2 * e3, e1 * (1.0 - e2 * e3)]);
                let y5 = s([1.0, e1 * (1.0 - e2)]);
                self.push(x5, y5, wt);
                self.push(y5, x5, wt);
            }
            PairClass::CommonEdge => {
                let w1 = w * xi.powi(3) * e1 * e1;
                self.push(
                    s([1.0, e1 * e3]),
                    s([1.0 - e1 * e2, e1 * (1.0 - e2)]),
                    w1,
                );
                let w2 = w1 * e2;
                self.push(
                    s([1.0, e1]),
                    s([1.0 - e1 * e2 * e3, e1 * e2 * (1.0 - e3)]),
                    w2,
                );
                self.push(
                    s([1.0 - e1 * e2, e1 * (1.0 - e2)]),
                    s([1.0, e1 * e2 * e3]),
                    w2,
                );
                self.push(
                    s([1.0 - e1 * e2 * e3, e1 * e2 * (1.0 - e3)]),
                    s([1.0, e1]),
                    w2,
                );
                self.push(
                    s([1.0 - e1 * e2 * e3, e1 * (1.0 - e2 * e3)]),
                    s([1.0, e1 * e2]),
                    w2,
                );
            }
            PairClass::CommonVertex => {
                let wt = w * xi.powi(3) * e2;
                let p = s([1.0, e1]);
                let q = [xi * e2, xi * e2 * e3];
                self.push(p, q, wt);
                self.push(q, p, wt);
            }
            PairClass::Disjoint => {
                panic!("disjoint panels use tensor Gauss rules");
            }
        }
    }
}

/// Barycentric coordinates of a point of `τ̂`.
#[inline]
pub fn tau_barycentric(p: [f64; 2]) -> [f64; 3] {
    [1.0 - p[0], p[0] - p[1], p[1]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_exactness() {
        for n in 1..=10 {
            let g = GaussRule::new(n);
            for k in 0..2 * n {
                let q: f64 = g
                    .points
                    .iter()
                    .zip(&g.weights)
                    .map(|(x, w)| w * x.powi(k as i32))
                    .sum();
                assert!((q - 1.0 / (k as f64 + 1.0)).abs() < 1e-14, "n={n} k={k}");
            }
            assert!(g.weights.iter().all(|&w| w > 0.0));
        }
    }

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    #[test]
    fn triangle_exactness() {
        for n in 1..=6 {
            let r = TriangleRule::new(n);
            for a in 0..=(2 * n - 2) as u32 {
                for b in 0..=(2 * n - 2) as u32 - a {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    // ∫ x^a y^b over the unit triangle = a! b! / (a+b+2)!
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    assert!((q - exact).abs() < 1e-14, "n={n} a={a} b={b}");
                }
            }
        }
    }

    /// Reference integral over τ̂ × τ̂ with a tensor collapsed rule.
    fn smooth_reference(f: &dyn Fn([f64; 2], [f64; 2]) -> f64) -> f64 {
        let g = GaussRule::new(8);
        let mut pts = Vec::new();
        for (i, &u) in g.points.iter().enumerate() {
            for (j, &v) in g.points.iter().enumerate() {
                pts.push(([u, u * v], g.weights[i] * g.weights[j] * u));
            }
        }
        let mut s = 0.0;
        for &(x, wx) in &pts {
            for &(y, wy) in &pts {
                s += wx * wy * f(x, y);
            }
        }
        s
    }

    #[test]
    fn pair_rules_integrate_polynomials() {
        let monomials: Vec<[i32; 4]> = vec![
            [0, 0, 0, 0],
            [1, 0, 0, 0],
            [0, 1, 0, 0],
            [0, 0, 1, 0],
            [0, 0, 0, 1],
            [2, 1, 0, 1],
            [0, 2, 1, 1],
            [1, 1, 1, 1],
            [3, 0, 0, 2],
            [0, 0, 3, 1],
        ];
        for class in [PairClass::Identical, PairClass::CommonEdge, PairClass::CommonVertex] {
            let rule = PairRule::singular(class, 6, 7);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 0.25).abs() < 1e-14, "{class:?}");
            for m in &monomials {
                let f = |x: [f64; 2], y: [f64; 2]| {
                    x[0].powi(m[0]) * x[1].powi(m[1]) * y[0].powi(m[2]) * y[1].powi(m[3])
                };
                let q: f64 = (0..rule.len())
                    .map(|i| rule.weights[i] * f(rule.x[i], rule.y[i]))
                    .sum();
                let r = smooth_reference(&f);
                assert!((q - r).abs() < 1e-13, "{class:?} {m:?}: {q} vs {r}");
            }
            for i in 0..rule.len() {
                for p in [rule.x[i], rule.y[i]] {
                    assert!(p[1] >= -1e-15 && p[1] <= p[0] + 1e-15 && p[0] <= 1.0 + 1e-15);
                }
            }
        }
    }
}
