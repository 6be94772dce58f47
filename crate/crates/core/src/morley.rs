//! The Morley element: nodal basis in any dimension, local matrices and the
//! global dof map in 2D, the interpolation `I_M`, and the constants `κ₁`, `κ₂`.

use crate::error::{GlbError, Result};
use crate::mesh::{Point2, Triangulation2D};
use crate::quadrature::{dunavant6, gauss5};
use nalgebra::DMatrix;
use rayon::prelude::*;
use std::f64::consts::PI;

/// First positive root of the Bessel function `J₁`.
pub const BESSEL_J11: f64 = 3.831_705_970_207_512_3;

/// `κ₂` in two dimensions, to 12 digits.
pub const KAPPA2_2D: f64 = 0.257457844658;

/// Interpolation constants of the Morley element.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct KappaConstants {
    pub n: usize,
    pub kappa1: f64,
    pub kappa2: f64,
    /// `1/κ₂²`: the largest admissible `λ h_max⁴`.
    pub threshold: f64,
}

/// `(κ₁, κ₂)` from the closed formula with the Poincaré-type constant `1/c`.
///
/// `c = π` gives the general-dimension constants; `c = j₁,₁` the sharper 2D ones.
pub fn kappa_formula(n: usize, c: f64) -> (f64, f64) {
    let nf = n as f64;
    let k1 = (1.0 / (c * c) + 1.0 / (2.0 * nf * (nf + 1.0) * (nf + 2.0))).sqrt();
    let k2 = k1 / c + ((nf * k1 * k1 + 2.0 * k1) / (2.0 * (nf - 1.0) * (nf + 1.0) * (nf + 2.0))).sqrt();
    (k1, k2)
}

/// `κ₁` and `κ₂` for dimension `n ∈ {2, 3}`.
///
/// In 2D `κ₂` is the hard-wired 12-digit value and `κ₁` comes from the formula
/// with `1/π` replaced by `1/j₁,₁`; in 3D both follow the formula literally.
pub fn kappa(n: usize) -> Result<KappaConstants> {
    let (kappa1, kappa2) = match n {
        0 | 1 => return Err(GlbError::Input(format!("dimension {n} < 2"))),
        2 => (kappa_formula(2, BESSEL_J11).0, KAPPA2_2D),
        3 => kappa_formula(3, PI),
        _ => return Err(GlbError::Input(format!("dimension {n} is not supported"))),
    };
    Ok(KappaConstants { n, kappa1, kappa2, threshold: 1.0 / (kappa2 * kappa2) })
}

/// A simplex in `ℝⁿ` with its barycentric gradients.
#[derive(Debug, Clone)]
pub struct Simplex {
    pub vertices: Vec<Vec<f64>>,
    /// `grad_bary[i]` is the constant gradient of `λ_i`.
    pub grad_bary: Vec<Vec<f64>>,
    pub volume: f64,
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self> {
        let n = vertices.len().saturating_sub(1);
        if n < 1 || vertices.iter().any(|v| v.len() != n) {
            return Err(GlbError::Input("a simplex in R^n needs n+1 points of length n".into()));
        }
        let jac = DMatrix::from_fn(n, n, |r, c| vertices[c + 1][r] - vertices[0][r]);
        let det = jac.determinant();
        let scale = (1..=n).map(|k| k as f64).product::<f64>();
        let diam = vertices
            .iter()
            .flat_map(|a| vertices.iter().map(move |b| dist(a, b)))
            .fold(0.0, f64::max);
        if det.abs() <= 1e-14 * diam.powi(n as i32) {
            return Err(GlbError::Geometry(format!("degenerate simplex (det = {det:e})")));
        }
        let inv = jac.try_inverse().ok_or_else(|| GlbError::Geometry("singular simplex".into()))?;
        let mut grad_bary = vec![vec![0.0; n]; n + 1];
        for i in 1..=n {
            for d in 0..n {
                grad_bary[i][d] = inv[(i - 1, d)];
                grad_bary[0][d] -= inv[(i - 1, d)];
            }
        }
        Ok(Self { vertices, grad_bary, volume: det.abs() / scale })
    }

    pub fn from_triangle(p: [Point2; 3]) -> Result<Self> {
        Self::new(p.iter().map(|q| q.to_vec()).collect())
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn barycentric(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut l = vec![0.0; n + 1];
        for (i, li) in l.iter_mut().enumerate().skip(1) {
            *li = (0..n).map(|d| self.grad_bary[i][d] * (x[d] - self.vertices[0][d])).sum();
        }
        l[0] = 1.0 - l[1..].iter().sum::<f64>();
        l
    }

    pub fn point(&self, bary: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n).map(|d| bary.iter().zip(&self.vertices).map(|(b, v)| b * v[d]).sum()).collect()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.barycentric(x).iter().all(|&l| l >= -tol)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A quadratic `c0 + Σ a_i λ_i + Σ_ij q_ij λ_i λ_j` in barycentric coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BaryQuadratic {
    pub c0: f64,
    pub lin: Vec<f64>,
    pub quad: Vec<Vec<f64>>,
}

impl BaryQuadratic {
    fn zero(m: usize) -> Self {
        Self { c0: 0.0, lin: vec![0.0; m], quad: vec![vec![0.0; m]; m] }
    }

    fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.quad[i][j] += 0.5 * v;
        self.quad[j][i] += 0.5 * v;
    }

    pub fn value(&self, l: &[f64]) -> f64 {
        let mut s = self.c0 + dot(&self.lin, l);
        for (i, row) in self.quad.iter().enumerate() {
            s += l[i] * dot(row, l);
        }
        s
    }

    pub fn gradient(&self, s: &Simplex, l: &[f64]) -> Vec<f64> {
        let n = s.dim();
        let mut g = vec![0.0; n];
        for (i, gi) in s.grad_bary.iter().enumerate() {
            let coef = self.lin[i] + 2.0 * dot(&self.quad[i], l);
            for d in 0..n {
                g[d] += coef * gi[d];
            }
        }
        g
    }

    pub fn hessian(&self, s: &Simplex) -> Vec<Vec<f64>> {
        let n = s.dim();
        let mut h = vec![vec![0.0; n]; n];
        for (i, gi) in s.grad_bary.iter().enumerate() {
            for (j, gj) in s.grad_bary.iter().enumerate() {
                let q = 2.0 * self.quad[i][j];
                if q == 0.0 {
                    continue;
                }
                for r in 0..n {
                    for c in 0..n {
                        h[r][c] += q * gi[r] * gj[c];
                    }
                }
            }
        }
        h
    }
}

/// A Morley degree of freedom of a simplex.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorleyDof {
    /// Mean outward normal derivative over the facet opposite vertex `j`.
    Face(usize),
    /// Mean value over the `(n−2)`-subsimplex opposite vertices `j` and `k`
    /// (a vertex value in 2D, an edge mean in 3D).
    Sub(usize, usize),
}

/// All Morley dofs of an `n`-simplex: the subsimplex dofs first, then the facets.
pub fn morley_dofs(n: usize) -> Vec<MorleyDof> {
    let mut dofs = Vec::new();
    if n == 2 {
        // Vertex i is opposite the pair {j, k} = {0,1,2} \ {i}.
        for i in 0..3 {
            let (j, k) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            dofs.push(MorleyDof::Sub(j, k));
        }
    } else {
        for j in 0..=n {
            for k in (j + 1)..=n {
                dofs.push(MorleyDof::Sub(j, k));
            }
        }
    }
    for j in 0..=n {
        dofs.push(MorleyDof::Face(j));
    }
    dofs
}

/// The nodal basis function dual to `dof`, oriented by the outward normal.
pub fn basis_quadratic(s: &Simplex, dof: MorleyDof) -> BaryQuadratic {
    let n = s.dim();
    let nf = n as f64;
    let m = n + 1;
    let gnorm = |i: usize| dot(&s.grad_bary[i], &s.grad_bary[i]).sqrt();
    let mut q = BaryQuadratic::zero(m);
    match dof {
        MorleyDof::Face(j) => {
            // λ_j (n λ_j − 2) / (2 |∇λ_j|)
            let g = gnorm(j);
            q.quad[j][j] = nf / (2.0 * g);
            q.lin[j] = -1.0 / g;
        }
        MorleyDof::Sub(j, k) => {
            q.c0 = 1.0;
            q.lin[j] -= nf - 1.0;
            q.lin[k] -= nf - 1.0;
            q.add_sym(j, k, nf * (nf - 1.0));
            let gjk = dot(&s.grad_bary[j], &s.grad_bary[k]);
            for l in [j, k] {
                let g2 = dot(&s.grad_bary[l], &s.grad_bary[l]);
                let c = -(nf - 1.0) * gjk / (2.0 * g2);
                q.quad[l][l] += c * nf;
                q.lin[l] += -2.0 * c;
            }
        }
    }
    q
}

/// Value, gradient and (constant) Hessian of a Morley basis function.
pub fn eval_basis(s: &Simplex, dof: MorleyDof, x: &[f64]) -> Result<(f64, Vec<f64>, Vec<Vec<f64>>)> {
    let n = s.dim();
    let scale = s.vertices.iter().flat_map(|v| v.iter()).fold(1.0f64, |a, b| a.max(b.abs()));
    let l = s.barycentric(x);
    if x.len() != n || l.iter().any(|&v| v < -1e-12 * scale) {
        return Err(GlbError::Domain { point: x.to_vec() });
    }
    let valid = match dof {
        MorleyDof::Face(j) => j <= n,
        MorleyDof::Sub(j, k) => j < k && k <= n && n >= 2,
    };
    if !valid {
        return Err(GlbError::Input(format!("{dof:?} is not a dof of a {n}-simplex")));
    }
    let q = basis_quadratic(s, dof);
    Ok((q.value(&l), q.gradient(s, &l), q.hessian(s)))
}

/// Local Morley data of one triangle.
///
/// Dof order: values at vertices 0, 1, 2, then mean outward normal derivatives
/// on the edges opposite vertices 0, 1, 2. P2 node order: vertices 0, 1, 2, then
/// midpoints of the edges opposite vertices 0, 1, 2.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMorley {
    pub stiffness: [[f64; 6]; 6],
    pub mass: [[f64; 6]; 6],
    /// `embed[node][dof]`: P2 nodal values of each Morley basis function.
    pub embed: [[f64; 6]; 6],
    pub p2_mass: [[f64; 6]; 6],
    /// Constant Hessians of the six basis functions.
    pub hessians: [[[f64; 2]; 2]; 6],
    pub area: f64,
}

/// Barycentric coordinates of the six P2 nodes.
pub const P2_NODES: [[f64; 3]; 6] = [
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
    [0.0, 0.5, 0.5],
    [0.5, 0.0, 0.5],
    [0.5, 0.5, 0.0],
];

/// The six Lagrange P2 basis functions at barycentric point `l`.
pub fn p2_basis(l: &[f64]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[0] * l[2],
        4.0 * l[0] * l[1],
    ]
}

/// Exact P2 mass matrix of a triangle of area `area`.
pub fn p2_mass_matrix(area: f64) -> [[f64; 6]; 6] {
    let rule = dunavant6();
    let mut m = [[0.0; 6]; 6];
    for (b, w) in rule.bary.iter().zip(&rule.weights) {
        let phi = p2_basis(b);
        for i in 0..6 {
            for j in 0..6 {
                m[i][j] += w * area * phi[i] * phi[j];
            }
        }
    }
    m
}

pub fn local_matrices(p: [Point2; 3]) -> Result<LocalMorley> {
    let s = Simplex::from_triangle(p)?;
    let dofs = morley_dofs(2);
    let quads: Vec<BaryQuadratic> = dofs.iter().map(|&d| basis_quadratic(&s, d)).collect();
    let mut hessians = [[[0.0; 2]; 2]; 6];
    for (i, q) in quads.iter().enumerate() {
        let h = q.hessian(&s);
        hessians[i] = [[h[0][0], h[0][1]], [h[1][0], h[1][1]]];
    }
    let area = s.volume;
    let mut stiffness = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let hi = &hessians[i];
            let hj = &hessians[j];
            stiffness[i][j] =
                area * (hi[0][0] * hj[0][0] + hi[0][1] * hj[0][1] + hi[1][0] * hj[1][0] + hi[1][1] * hj[1][1]);
        }
    }
    let mut embed = [[0.0; 6]; 6];
    for (node, b) in P2_NODES.iter().enumerate() {
        for (dof, q) in quads.iter().enumerate() {
            embed[node][dof] = q.value(b);
        }
    }
    let p2_mass = p2_mass_matrix(area);
    let mut mass = [[0.0; 6]; 6];
    for i in 0..6 {
        for j in 0..6 {
            let mut s = 0.0;
            for a in 0..6 {
                for b in 0..6 {
                    s += embed[a][i] * p2_mass[a][b] * embed[b][j];
                }
            }
            mass[i][j] = s;
        }
    }
    Ok(LocalMorley { stiffness, mass, embed, p2_mass, hessians, area })
}

/// Local matrices of every triangle, computed in parallel in triangle order.
pub fn all_local_matrices(mesh: &Triangulation2D) -> Result<Vec<LocalMorley>> {
    (0..mesh.num_triangles()).into_par_iter().map(|t| local_matrices(mesh.triangle_points(t))).collect()
}

/// Numbering of the Morley dofs with homogeneous boundary conditions.
///
/// Interior vertices come first in vertex-id order, then interior edges in
/// sorted vertex-pair order. The global normal `ν_F` of an edge `(a, b)` with
/// `a < b` is its tangent `(P_b − P_a)/|P_b − P_a|` rotated clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct MorleyDofMap {
    pub vertex_dofs: Vec<Option<usize>>,
    pub edge_dofs: Vec<Option<usize>>,
    pub edge_normals: Vec<[f64; 2]>,
    pub total: usize,
}

pub fn dof_map(mesh: &Triangulation2D) -> MorleyDofMap {
    let bv = mesh.boundary_vertices();
    let mut next = 0;
    let vertex_dofs = bv
        .iter()
        .map(|&b| {
            if b {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect();
    let edge_dofs = (0..mesh.num_edges())
        .map(|e| {
            if mesh.is_boundary_edge(e) {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect();
    let edge_normals = mesh
        .edges()
        .iter()
        .map(|&[a, b]| {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let len = crate::mesh::dist(pa, pb);
            [(pb[1] - pa[1]) / len, -(pb[0] - pa[0]) / len]
        })
        .collect();
    MorleyDofMap { vertex_dofs, edge_dofs, edge_normals, total: next }
}

/// Outward unit normal of the edge opposite local vertex `i`.
pub fn outward_normal(p: [Point2; 3], i: usize) -> [f64; 2] {
    let a = p[(i + 1) % 3];
    let b = p[(i + 2) % 3];
    let len = crate::mesh::dist(a, b);
    // Counter-clockwise triangles: the clockwise rotation of a→b points outward.
    [(b[1] - a[1]) / len, -(b[0] - a[0]) / len]
}

impl MorleyDofMap {
    /// Global indices and orientation signs of the six local dofs of triangle `t`.
    pub fn local(&self, mesh: &Triangulation2D, t: usize) -> ([Option<usize>; 6], [f64; 6]) {
        let tri = mesh.triangles[t];
        let te = mesh.triangle_edges()[t];
        let p = mesh.triangle_points(t);
        let mut idx = [None; 6];
        let mut sign = [1.0; 6];
        for i in 0..3 {
            idx[i] = self.vertex_dofs[tri[i]];
            idx[3 + i] = self.edge_dofs[te[i]];
            let nu = self.edge_normals[te[i]];
            let out = outward_normal(p, i);
            sign[3 + i] = if nu[0] * out[0] + nu[1] * out[1] > 0.0 { 1.0 } else { -1.0 };
        }
        (idx, sign)
    }

    /// Local coefficient vector of triangle `t` for the global vector `u`.
    pub fn gather(&self, mesh: &Triangulation2D, t: usize, u: &[f64]) -> [f64; 6] {
        let (idx, sign) = self.local(mesh, t);
        let mut c = [0.0; 6];
        for i in 0..6 {
            if let Some(g) = idx[i] {
                c[i] = sign[i] * u[g];
            }
        }
        c
    }
}

/// A function with value and gradient, used as interpolation input.
pub trait Smooth2D: Sync {
    fn value(&self, x: Point2) -> f64;
    fn gradient(&self, x: Point2) -> [f64; 2];
}

/// Local Morley interpolation on one triangle using all six dofs.
///
/// Edge means of the normal derivative use the 5-point Gauss rule.
pub fn interpolate_local(f: &dyn Smooth2D, p: [Point2; 3]) -> [f64; 6] {
    let (x, w) = gauss5();
    let mut c = [0.0; 6];
    for i in 0..3 {
        c[i] = f.value(p[i]);
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        let nu = outward_normal(p, i);
        let mut s = 0.0;
        for (t, wt) in x.iter().zip(&w) {
            let q = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            let g = f.gradient(q);
            s += wt * (g[0] * nu[0] + g[1] * nu[1]);
        }
        c[3 + i] = s;
    }
    c
}

/// Global interpolation `I_M f` into the Morley space with homogeneous boundary
/// conditions. Boundary dofs of `f` are dropped.
pub fn interpolate_morley(f: &dyn Smooth2D, mesh: &Triangulation2D, map: &MorleyDofMap) -> Vec<f64> {
    let (x, w) = gauss5();
    let mut u = vec![0.0; map.total];
    for (v, d) in map.vertex_dofs.iter().enumerate() {
        if let Some(d) = d {
            u[*d] = f.value(mesh.vertices[v]);
        }
    }
    for (e, d) in map.edge_dofs.iter().enumerate() {
        if let Some(d) = d {
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let nu = map.edge_normals[e];
            let mut s = 0.0;
            for (t, wt) in x.iter().zip(&w) {
                let g = f.gradient([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]);
                s += wt * (g[0] * nu[0] + g[1] * nu[1]);
            }
            u[*d] = s;
        }
    }
    u
}

/// Evaluates the local Morley function with coefficients `c` at barycentric `l`.
pub fn eval_local(p: [Point2; 3], c: &[f64; 6], l: &[f64]) -> Result<f64> {
    let s = Simplex::from_triangle(p)?;
    Ok(morley_dofs(2).iter().zip(c).map(|(&d, ci)| ci * basis_quadratic(&s, d).value(l)).sum())
}
