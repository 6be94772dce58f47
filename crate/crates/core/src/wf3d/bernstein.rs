//! Polynomials in Bernstein form `f = k! Σ_α c(α) λ^α/α!` on a simplex, and
//! the ordinate conditions for `C⁰` and `C¹` joins across a common facet.

use crate::error::{GlbError, Result};
use crate::morley::Simplex;

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// All `α ∈ ℕ₀^m` with `|α| = k`, lexicographically descending, so `k e₁` comes first.
pub fn multi_indices(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, k: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 1 {
            prefix.push(k);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=k).rev() {
            prefix.push(a);
            rec(m - 1, k - a, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if m > 0 {
        rec(m, k, &mut Vec::with_capacity(m), &mut out);
    }
    out
}

/// `λ^α / α!`.
fn bernstein_monomial(l: &[f64], alpha: &[usize]) -> f64 {
    alpha.iter().zip(l).map(|(&a, &x)| x.powi(a as i32) / factorial(a)).product()
}

/// A polynomial of degree `degree` on a simplex, stored by its ordinates in
/// the order of [`multi_indices`].
#[derive(Debug, Clone)]
pub struct BernsteinPiece {
    pub simplex: Simplex,
    pub degree: usize,
    pub ordinates: Vec<f64>,
    indices: Vec<Vec<usize>>,
}

impl BernsteinPiece {
    pub fn new(simplex: Simplex, degree: usize, ordinates: Vec<f64>) -> Result<Self> {
        let indices = multi_indices(simplex.vertices.len(), degree);
        if ordinates.len() != indices.len() {
            return Err(GlbError::Input(format!(
                "{} ordinates given, degree {degree} needs {}",
                ordinates.len(),
                indices.len()
            )));
        }
        Ok(Self { simplex, degree, ordinates, indices })
    }

    pub fn indices(&self) -> &[Vec<usize>] {
        &self.indices
    }

    pub fn position(&self, alpha: &[usize]) -> Option<usize> {
        self.indices.iter().position(|a| a == alpha)
    }

    pub fn ordinate(&self, alpha: &[usize]) -> f64 {
        self.position(alpha).map_or(0.0, |i| self.ordinates[i])
    }

    /// Value at barycentric coordinates `l`; valid on the whole affine hull.
    pub fn value_bary(&self, l: &[f64]) -> f64 {
        factorial(self.degree)
            * self.indices.iter().zip(&self.ordinates).map(|(a, c)| c * bernstein_monomial(l, a)).sum::<f64>()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.value_bary(&self.simplex.barycentric(x))
    }

    /// `∇f = k! Σ_{β ∈ A_{k−1}} λ^β/β! Σ_μ c(β + e_μ) ∇λ_μ`.
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let l = self.simplex.barycentric(x);
        let m = l.len();
        let n = m - 1;
        let mut g = vec![0.0; n];
        if self.degree == 0 {
            return g;
        }
        for beta in multi_indices(m, self.degree - 1) {
            let w = bernstein_monomial(&l, &beta);
            for mu in 0..m {
                let mut a = beta.clone();
                a[mu] += 1;
                let c = self.ordinate(&a);
                for d in 0..n {
                    g[d] += w * c * self.simplex.grad_bary[mu][d];
                }
            }
        }
        let kf = factorial(self.degree);
        g.iter_mut().for_each(|v| *v *= kf);
        g
    }

    /// `D²f = k! Σ_{γ ∈ A_{k−2}} λ^γ/γ! Σ_{μ,ν} c(γ + e_μ + e_ν) ∇λ_μ ⊗ ∇λ_ν`.
    pub fn hessian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let l = self.simplex.barycentric(x);
        let m = l.len();
        let n = m - 1;
        let mut h = vec![vec![0.0; n]; n];
        if self.degree < 2 {
            return h;
        }
        let gb = &self.simplex.grad_bary;
        for gamma in multi_indices(m, self.degree - 2) {
            let w = bernstein_monomial(&l, &gamma);
            for mu in 0..m {
                for nu in 0..m {
                    let mut a = gamma.clone();
                    a[mu] += 1;
                    a[nu] += 1;
                    let c = w * self.ordinate(&a);
                    for r in 0..n {
                        for s in 0..n {
                            h[r][s] += c * gb[mu][r] * gb[nu][s];
                        }
                    }
                }
            }
        }
        let kf = factorial(self.degree);
        h.iter_mut().flatten().for_each(|v| *v *= kf);
        h
    }

    /// Ordinates of the polynomial `x ↦ f(x)` on another simplex of the same
    /// dimension, from values at its degree-`k` lattice points.
    pub fn restrict_to(&self, target: &Simplex) -> Result<BernsteinPiece> {
        let m = target.vertices.len();
        let nodes: Vec<Vec<f64>> = multi_indices(m, self.degree)
            .iter()
            .map(|a| a.iter().map(|&x| x as f64 / self.degree.max(1) as f64).collect())
            .collect();
        let values: Vec<f64> = nodes.iter().map(|l| self.value(&target.point(l))).collect();
        from_lattice_values(target.clone(), self.degree, &values)
    }
}

/// The piece whose values at the lattice points `Σ α_μ P_μ / k` are `values`.
pub fn from_lattice_values(simplex: Simplex, degree: usize, values: &[f64]) -> Result<BernsteinPiece> {
    let m = simplex.vertices.len();
    let idx = multi_indices(m, degree);
    let kf = factorial(degree);
    let d = degree.max(1) as f64;
    let mat = nalgebra::DMatrix::from_fn(idx.len(), idx.len(), |r, c| {
        let l: Vec<f64> = idx[r].iter().map(|&x| x as f64 / d).collect();
        kf * bernstein_monomial(&l, &idx[c])
    });
    let rhs = nalgebra::DVector::from_column_slice(values);
    let sol = mat.lu().solve(&rhs).ok_or_else(|| GlbError::Geometry("singular Bernstein collocation".into()))?;
    BernsteinPiece::new(simplex, degree, sol.iter().copied().collect())
}

/// Evaluates value and gradient at `x`, which must lie in the piece's simplex.
pub fn eval_bernstein(piece: &BernsteinPiece, x: &[f64]) -> Result<(f64, Vec<f64>)> {
    if !piece.simplex.contains(x, 1e-10) {
        return Err(GlbError::Domain { point: x.to_vec() });
    }
    Ok((piece.value(x), piece.gradient(x)))
}

fn same_point(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

/// Signed residuals of the `C⁰` and `C¹` ordinate conditions across the facet
/// shared by `a` and `b`. The shared vertices are matched by coordinates.
///
/// With `β` running over the facet multi-indices, the conditions are
/// `c_a(β;0) = c_b(β;0)` for `|β| = k` and
/// `Σ_μ c_a((β;0)+e_μ) ν·∇λ^a_μ = Σ_μ c_b((β;0)+e_μ) ν·∇λ^b_μ` for `|β| = k−1`.
pub fn interface_residuals(a: &BernsteinPiece, b: &BernsteinPiece) -> Result<(Vec<f64>, Vec<f64>)> {
    if a.degree != b.degree || a.simplex.vertices.len() != b.simplex.vertices.len() {
        return Err(GlbError::Input("pieces of different degree or dimension".into()));
    }
    let m = a.simplex.vertices.len();
    let scale = a
        .simplex
        .vertices
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |s, x| s.max(x.abs()))
        .max(1.0);
    // shared[i] = (index in a, index in b)
    let mut shared = Vec::with_capacity(m - 1);
    for (ia, pa) in a.simplex.vertices.iter().enumerate() {
        if let Some(ib) = b.simplex.vertices.iter().position(|pb| same_point(pa, pb, 1e-12 * scale)) {
            shared.push((ia, ib));
        }
    }
    if shared.len() != m - 1 {
        return Err(GlbError::Geometry(format!("pieces share {} vertices, a facet needs {}", shared.len(), m - 1)));
    }
    let apex_a = (0..m).find(|i| shared.iter().all(|s| s.0 != *i)).expect("one vertex is not shared");
    let g = &a.simplex.grad_bary[apex_a];
    let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nu: Vec<f64> = g.iter().map(|x| x / gn).collect();
    let lift = |beta: &[usize], which: usize| -> Vec<usize> {
        let mut alpha = vec![0; m];
        for (s, &bv) in shared.iter().zip(beta) {
            alpha[if which == 0 { s.0 } else { s.1 }] = bv;
        }
        alpha
    };
    let con1 = multi_indices(m - 1, a.degree)
        .iter()
        .map(|beta| a.ordinate(&lift(beta, 0)) - b.ordinate(&lift(beta, 1)))
        .collect();
    let con2 = if a.degree == 0 {
        Vec::new()
    } else {
        multi_indices(m - 1, a.degree - 1)
            .iter()
            .map(|beta| {
                let side = |p: &BernsteinPiece, which: usize| -> f64 {
                    let base = lift(beta, which);
                    (0..m)
                        .map(|mu| {
                            let mut al = base.clone();
                            al[mu] += 1;
                            let dn: f64 = nu.iter().zip(&p.simplex.grad_bary[mu]).map(|(x, y)| x * y).sum();
                            p.ordinate(&al) * dn
                        })
                        .sum()
                };
                side(a, 0) - side(b, 1)
            })
            .collect()
    };
    Ok((con1, con2))
}

/// `(max |con1 residual|, max |con2 residual|)`; both vanish iff the two
/// pieces join `C¹` across their common facet.
pub fn check_c1(a: &BernsteinPiece, b: &BernsteinPiece) -> Result<(f64, f64)> {
    let (c1, c2) = interface_residuals(a, b)?;
    let mx = |v: &[f64]| v.iter().fold(0.0f64, |s, x| s.max(x.abs()));
    Ok((mx(&c1), mx(&c2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tet() -> Simplex {
        Simplex::new(vec![vec![0.1, 0.0, 0.2], vec![1.2, 0.1, 0.0], vec![0.3, 0.9, 0.1], vec![0.2, 0.3, 1.1]]).unwrap()
    }

    fn random_piece(rng: &mut ChaCha8Rng, s: Simplex, k: usize) -> BernsteinPiece {
        let n = multi_indices(s.vertices.len(), k).len();
        BernsteinPiece::new(s, k, (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
    }

    #[test]
    fn index_counts() {
        assert_eq!(multi_indices(4, 3).len(), 20);
        assert_eq!(multi_indices(3, 3).len(), 10);
        assert_eq!(multi_indices(4, 2)[0], vec![2, 0, 0, 0]);
    }

    #[test]
    fn vertex_and_midpoint_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = random_piece(&mut rng, tet(), 3);
        let v = &p.simplex.vertices;
        for j in 0..4 {
            let mut a = vec![0; 4];
            a[j] = 3;
            assert!((p.value(&v[j]) - p.ordinate(&a)).abs() < 1e-12);
            for l in (j + 1)..4 {
                let mid: Vec<f64> = (0..3).map(|d| 0.5 * (v[j][d] + v[l][d])).collect();
                let (mut a1, mut a2, mut al) = (vec![0; 4], vec![0; 4], vec![0; 4]);
                a1[j] = 2;
                a1[l] = 1;
                a2[j] = 1;
                a2[l] = 2;
                al[l] = 3;
                let rhs = p.ordinate(&a) + 3.0 * p.ordinate(&a1) + 3.0 * p.ordinate(&a2) + p.ordinate(&al);
                assert!((8.0 * p.value(&mid) - rhs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradient_and_hessian_by_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = random_piece(&mut rng, tet(), 3);
        let x = p.simplex.point(&[0.3, 0.2, 0.25, 0.25]);
        let g = p.gradient(&x);
        let h = p.hessian(&x);
        let eps = 1e-6;
        for d in 0..3 {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[d] += eps;
            xm[d] -= eps;
            let fd = (p.value(&xp) - p.value(&xm)) / (2.0 * eps);
            assert!((fd - g[d]).abs() <= 1e-6 * g[d].abs().max(1.0));
            let (gp, gm) = (p.gradient(&xp), p.gradient(&xm));
            for r in 0..3 {
                let fd2 = (gp[r] - gm[r]) / (2.0 * eps);
                assert!((fd2 - h[r][d]).abs() <= 1e-5 * h[r][d].abs().max(1.0));
            }
        }
    }

    #[test]
    fn outside_point_is_rejected() {
        let p = BernsteinPiece::new(tet(), 1, vec![1.0; 4]).unwrap();
        assert!(matches!(eval_bernstein(&p, &[5.0, 5.0, 5.0]), Err(GlbError::Domain { .. })));
    }

    #[test]
    fn restriction_of_a_polynomial_joins_c1() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_piece(&mut rng, tet(), 3);
        let v = &a.simplex.vertices;
        // Reflect the apex through the facet opposite vertex 3.
        let other = Simplex::new(vec![v[0].clone(), v[1].clone(), v[2].clone(), vec![0.5, 0.4, -0.9]]).unwrap();
        let b = a.restrict_to(&other).unwrap();
        let (r1, r2) = check_c1(&a, &b).unwrap();
        assert!(r1 < 1e-11 && r2 < 1e-10, "{r1} {r2}");
        let c = random_piece(&mut rng, other, 3);
        let (q1, q2) = check_c1(&a, &c).unwrap();
        assert!(q1 > 1e-3 && q2 > 1e-3);
    }
}
