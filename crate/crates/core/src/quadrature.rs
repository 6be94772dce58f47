//! Quadrature rules on intervals, triangles and tetrahedra.
//!
//! Triangle and tetrahedron rules of arbitrary degree come from the collapsed
//! (Duffy) tensor product of Gauss–Legendre rules. All weights are positive.
//! Reference weights sum to the reference volume (1/2 and 1/6).

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[0, 1]`, exact up to degree `2n - 1`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "gauss_legendre needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-like initial guess for the i-th root of P_n on [-1, 1].
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = 0.5 * (1.0 - x);
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[n - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A quadrature rule in barycentric form: each point carries its barycentric
/// coordinates and a weight relative to the simplex volume (weights sum to 1).
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub bary: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Integrates `f` over a simplex of volume `volume`, where `f` receives
    /// barycentric coordinates.
    pub fn integrate(&self, volume: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
        let mut s = 0.0;
        for (b, w) in self.bary.iter().zip(&self.weights) {
            s += w * f(b);
        }
        s * volume
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Collapsed Gauss rule on the triangle exact for polynomials of degree `degree`.
pub fn triangle_rule(degree: usize) -> SimplexRule {
    // The Duffy Jacobian adds one degree in the collapsed direction.
    let n = (degree + 2).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let mut bary = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            let l1 = *u;
            let l2 = (1.0 - u) * v;
            let l0 = 1.0 - l1 - l2;
            bary.push(vec![l0, l1, l2]);
            // Reference area 1/2 is normalized away: weight relative to area.
            weights.push(2.0 * wu * wv * (1.0 - u));
        }
    }
    SimplexRule { bary, weights }
}

/// Collapsed Gauss rule on the tetrahedron exact for polynomials of degree `degree`.
pub fn tetrahedron_rule(degree: usize) -> SimplexRule {
    let n = (degree + 3).div_ceil(2).max(1);
    let (x, w) = gauss_legendre(n);
    let mut bary = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (u, wu) in x.iter().zip(&w) {
        for (v, wv) in x.iter().zip(&w) {
            for (t, wt) in x.iter().zip(&w) {
                let l1 = *u;
                let l2 = (1.0 - u) * v;
                let l3 = (1.0 - u) * (1.0 - v) * t;
                let l0 = 1.0 - l1 - l2 - l3;
                bary.push(vec![l0, l1, l2, l3]);
                weights.push(6.0 * wu * wv * wt * (1.0 - u) * (1.0 - u) * (1.0 - v));
            }
        }
    }
    SimplexRule { bary, weights }
}

/// The 12-point degree-6 Dunavant rule on the triangle.
pub fn dunavant6() -> SimplexRule {
    const ORBITS3: [(f64, f64, f64); 2] = [
        (0.116786275726379, 0.501426509658179, 0.249286745170910),
        (0.050844906370207, 0.873821971016996, 0.063089014491502),
    ];
    const W6: f64 = 0.082851075618374;
    const P6: [f64; 3] = [0.053145049844817, 0.310352451033784, 0.636502499121399];
    let mut bary = Vec::with_capacity(12);
    let mut weights = Vec::with_capacity(12);
    for &(w, a, b) in &ORBITS3 {
        for k in 0..3 {
            let mut p = vec![b; 3];
            p[k] = a;
            bary.push(p);
            weights.push(w);
        }
    }
    let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    for perm in perms {
        bary.push(vec![P6[perm[0]], P6[perm[1]], P6[perm[2]]]);
        weights.push(W6);
    }
    // Renormalize the tabulated 15-digit weights so they sum to one exactly.
    let s: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= s;
    }
    SimplexRule { bary, weights }
}

/// Five-point Gauss rule on `[0, 1]`.
pub fn gauss5() -> (Vec<f64>, Vec<f64>) {
    gauss_legendre(5)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    // Exact integral of a barycentric monomial over a simplex of unit volume.
    fn bary_moment(alpha: &[usize]) -> f64 {
        let d = alpha.len() - 1;
        let num: f64 = alpha.iter().map(|&a| factorial(a)).product();
        num * factorial(d) / factorial(alpha.iter().sum::<usize>() + d)
    }

    #[test]
    fn gauss_legendre_integrates_monomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for p in 0..(2 * n) {
                let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                assert!((s - 1.0 / (p as f64 + 1.0)).abs() < 1e-14, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        let rules = [(6, dunavant6()), (6, triangle_rule(6)), (12, triangle_rule(12))];
        for (deg, rule) in rules {
            for a in 0..=deg {
                for b in 0..=(deg - a) {
                    for c in 0..=(deg - a - b) {
                        let s = rule.integrate(1.0, |l| {
                            l[0].powi(a as i32) * l[1].powi(b as i32) * l[2].powi(c as i32)
                        });
                        let exact = bary_moment(&[a, b, c]);
                        assert!((s - exact).abs() < 1e-13, "deg {deg} {a} {b} {c}");
                    }
                }
            }
        }
    }

    #[test]
    fn tetrahedron_rule_is_exact() {
        let deg = 8;
        let rule = tetrahedron_rule(deg);
        for a in 0..=deg {
            for b in 0..=(deg - a) {
                for c in 0..=(deg - a - b) {
                    let d = (deg - a - b - c).min(2);
                    let s = rule.integrate(1.0, |l| {
                        l[0].powi(a as i32)
                            * l[1].powi(b as i32)
                            * l[2].powi(c as i32)
                            * l[3].powi(d as i32)
                    });
                    let exact = bary_moment(&[a, b, c, d]);
                    assert!((s - exact).abs() < 1e-14, "{a} {b} {c} {d}");
                }
            }
        }
    }
}
