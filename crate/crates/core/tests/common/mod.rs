//! Helpers shared by the integration tests: second-order jets for exact
//! derivatives of smooth test functions, and Morley error norms by quadrature.
#![allow(dead_code)]

use glb_core::mesh::{Point2, Triangulation2D};
use glb_core::morley::{basis_quadratic, morley_dofs, MorleyDofMap, Simplex, Smooth2D};
use glb_core::quadrature::triangle_rule;
use std::ops::{Add, Mul, Sub};

/// Value, gradient and Hessian of a function at one point.
#[derive(Debug, Clone, Copy)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        Jet { v: c, g: [0.0; 2], h: [[0.0; 2]; 2] }
    }

    pub fn x(p: Point2) -> Self {
        Jet { v: p[0], g: [1.0, 0.0], h: [[0.0; 2]; 2] }
    }

    pub fn y(p: Point2) -> Self {
        Jet { v: p[1], g: [0.0, 1.0], h: [[0.0; 2]; 2] }
    }

    /// `φ ∘ self` for `φ` with derivatives `(φ, φ', φ'')` at `self.v`.
    fn compose(self, d0: f64, d1: f64, d2: f64) -> Self {
        let mut h = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] = d1 * self.h[r][c] + d2 * self.g[r] * self.g[c];
            }
        }
        Jet { v: d0, g: [d1 * self.g[0], d1 * self.g[1]], h }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn scale(self, a: f64) -> Self {
        Jet { v: a * self.v, g: self.g.map(|x| a * x), h: self.h.map(|r| r.map(|x| a * x)) }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let mut h = self.h;
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] += o.h[r][c];
            }
        }
        Jet { v: self.v + o.v, g: [self.g[0] + o.g[0], self.g[1] + o.g[1]], h }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + o.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut h = [[0.0; 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                h[r][c] = self.h[r][c] * o.v + self.g[r] * o.g[c] + self.g[c] * o.g[r] + self.v * o.h[r][c];
            }
        }
        Jet { v: self.v * o.v, g: [self.g[0] * o.v + self.v * o.g[0], self.g[1] * o.v + self.v * o.g[1]], h }
    }
}

/// A smooth function given through its jet.
pub struct JetFn(pub Box<dyn Fn(Point2) -> Jet + Sync>);

impl JetFn {
    pub fn jet(&self, p: Point2) -> Jet {
        (self.0)(p)
    }
}

impl Smooth2D for JetFn {
    fn value(&self, x: Point2) -> f64 {
        self.jet(x).v
    }
    fn gradient(&self, x: Point2) -> [f64; 2] {
        self.jet(x).g
    }
}

/// Deterministic parameters in `[-1, 1)` from a counter.
pub fn params(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed.wrapping_add(0x243f_6a88_85a3_08d3);
    (0..n)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
        })
        .collect()
}

/// `exp(a x + b y) sin(c x − d y + e)`: smooth, no boundary conditions.
pub fn free_sample(seed: u64) -> JetFn {
    let q = params(seed, 5);
    JetFn(Box::new(move |p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        let arg = x.scale(2.0 * q[1]) + y.scale(2.0 * q[0]);
        let osc = x.scale(3.0 + 2.0 * q[2]) - y.scale(2.0 + q[3]) + Jet::constant(q[4]);
        arg.exp() * osc.sin()
    }))
}

/// `(x(1−x) y(1−y))² (1 + ½ sin(a x + b y + c))`: in `H²₀` of the unit square.
pub fn clamped_sample(seed: u64) -> JetFn {
    let q = params(seed, 3);
    JetFn(Box::new(move |p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        let one = Jet::constant(1.0);
        let w = x * (one - x) * y * (one - y);
        let arg = x.scale(3.0 * q[0]) + y.scale(3.0 * q[1]) + Jet::constant(q[2]);
        w * w * (one + arg.sin().scale(0.5))
    }))
}

/// Value, gradient and Hessian of the local Morley function with coefficients `c`.
pub fn morley_jet(s: &Simplex, c: &[f64; 6], l: &[f64]) -> Jet {
    let mut j = Jet::constant(0.0);
    for (d, ci) in morley_dofs(2).into_iter().zip(c) {
        let q = basis_quadratic(s, d);
        let g = q.gradient(s, l);
        let h = q.hessian(s);
        j = j + Jet { v: q.value(l), g: [g[0], g[1]], h: [[h[0][0], h[0][1]], [h[1][0], h[1][1]]] }.scale(*ci);
    }
    j
}

/// Squared `L²`, `H¹` and `H²` (semi)norms of `f − v` on one triangle.
pub fn local_errors(f: &JetFn, p: [Point2; 3], c: &[f64; 6]) -> [f64; 3] {
    let s = Simplex::from_triangle(p).unwrap();
    let rule = triangle_rule(14);
    let mut out = [0.0; 3];
    for (b, w) in rule.bary.iter().zip(&rule.weights) {
        let x = s.point(b);
        let e = f.jet([x[0], x[1]]) - morley_jet(&s, c, b);
        out[0] += w * e.v * e.v;
        out[1] += w * (e.g[0] * e.g[0] + e.g[1] * e.g[1]);
        out[2] += w * e.h.iter().flatten().map(|v| v * v).sum::<f64>();
    }
    out.map(|v| v * s.volume)
}

/// `∫_T D²(f − v) dx` for the local Morley function `v`.
pub fn hessian_mean_defect(f: &JetFn, p: [Point2; 3], c: &[f64; 6]) -> [[f64; 2]; 2] {
    let s = Simplex::from_triangle(p).unwrap();
    let rule = triangle_rule(14);
    let mut out = [[0.0; 2]; 2];
    for (b, w) in rule.bary.iter().zip(&rule.weights) {
        let x = s.point(b);
        let e = f.jet([x[0], x[1]]) - morley_jet(&s, c, b);
        for r in 0..2 {
            for k in 0..2 {
                out[r][k] += w * s.volume * e.h[r][k];
            }
        }
    }
    out
}

/// `Σ_T ∫_T |D²(f − v)|²` for a global Morley vector `u`.
pub fn energy_error(f: &JetFn, mesh: &Triangulation2D, map: &MorleyDofMap, u: &[f64]) -> f64 {
    (0..mesh.num_triangles()).map(|t| local_errors(f, mesh.triangle_points(t), &map.gather(mesh, t, u))[2]).sum()
}

/// Finite eigenvalues of the dense pencil `A x = λ B x`, ascending, with `A`
/// symmetric positive definite and `B` semidefinite: the reciprocals of the
/// positive eigenvalues of `L⁻¹ B L⁻ᵀ` for `A = L Lᵀ`.
pub fn dense_pencil_eigenvalues(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let l = a.clone().cholesky().expect("A is positive definite").l();
    let linv = l.clone().try_inverse().expect("triangular factor is invertible");
    let c = &linv * b * linv.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let mu = c.symmetric_eigenvalues();
    let top = mu.iter().cloned().fold(0.0, f64::max);
    let mut lambda: Vec<f64> = mu.iter().filter(|&&m| m > 1e-12 * top).map(|m| 1.0 / m).collect();
    lambda.sort_by(f64::total_cmp);
    lambda
}

/// Eigenvalues of a dense symmetric matrix, ascending.
pub fn symmetric_spectrum(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let m = (m + m.transpose()) * 0.5;
    let mut v: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Outcome of comparing the block pencil with the reduced rational problem.
#[derive(Debug, Default)]
pub struct Equivalence {
    /// Block eigenvalues in `(0, 1/(κ₂² h_max⁴))`.
    pub count: usize,
    /// Groups whose multiplicity differs between the two problems.
    pub multiplicity_mismatches: usize,
    /// Largest relative gap between a block eigenvalue and the nearest
    /// eigenvalue of `(K, W(λ))` at that `λ`.
    pub max_fixed_point_defect: f64,
    /// Largest relative gap to the library's reduced solver over the six
    /// smallest eigenvalues, when its reduced path applies.
    pub max_solver_gap: Option<f64>,
}

/// Dense check that the block pencil and the rational problem
/// `K u = λ Σ_T M_T/(1 − λ κ₂² h_T⁴) u` share eigenvalues and multiplicities
/// below the threshold. `λ` is a rational eigenvalue of multiplicity `m`
/// exactly when `m` eigenvalues of the pencil `(K, W(λ))` equal `λ`.
pub fn block_reduced_equivalence(mesh: &Triangulation2D) -> Equivalence {
    use glb_core::eigen::{solve_all, EigenOptions, MorleySystem};
    use glb_core::linalg::clusters;
    use glb_core::morley::KAPPA2_2D;

    let sys = MorleySystem::new(mesh).unwrap();
    let s2 = KAPPA2_2D * KAPPA2_2D;
    let limit = 1.0 / (s2 * sys.quantities.h_max.powi(4));
    let block = sys.stabilised_pencil(KAPPA2_2D);
    let dense = dense_pencil_eigenvalues(&block.a.to_dense(), &block.b.to_dense());
    // Piecewise P2 modes orthogonal to the Morley embedding sit exactly at
    // the poles `1/(κ₂² h_T⁴) ≥ limit`; the open interval excludes them.
    let inside: Vec<f64> = dense.into_iter().filter(|&l| l < limit * (1.0 - 1e-9)).collect();
    let mut out = Equivalence { count: inside.len(), ..Equivalence::default() };
    if inside.is_empty() {
        return out;
    }
    let k_dense = sys.stiffness().to_dense();
    // Exact multiplicities agree to round-off; distinct eigenvalues next to
    // the pole can be only 1e-10 apart, so the groups are drawn tightly.
    for group in clusters(&inside, 1e-11) {
        let lambda = inside[group[0]];
        let w: Vec<f64> = sys.quantities.h_t.iter().map(|h| 1.0 / (1.0 - lambda * s2 * h.powi(4))).collect();
        let nu = dense_pencil_eigenvalues(&k_dense, &sys.weighted_mass(&w).to_dense());
        let defect = nu.iter().map(|v| (v - lambda).abs() / lambda).fold(f64::INFINITY, f64::min);
        out.max_fixed_point_defect = out.max_fixed_point_defect.max(defect);
        let m = nu.iter().filter(|v| (*v - lambda).abs() <= 1e-9 * lambda).count();
        if m != group.len() {
            out.multiplicity_mismatches += 1;
        }
    }
    // The library's solver is compared on the lowest part of the spectrum,
    // where its reduced path applies; the dense oracle covers the rest.
    let sol = solve_all(mesh, inside.len().min(6), &EigenOptions::default()).unwrap();
    if sol.reduced {
        let gap = sol.results.iter().zip(&inside).map(|(r, l)| (r.lambda_h - l).abs() / l).fold(0.0, f64::max);
        out.max_solver_gap = Some(gap);
    }
    out
}
