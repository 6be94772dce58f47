//! The Worsey–Farin C¹ macro element on a tetrahedron and the correction
//! functions of the conforming companion, at desk scale.
//!
//! A tetrahedron `K = conv{Q₁,…,Q₄}` is split around an interior center `c_K`
//! and four face centers `c_m` into twelve sub-tetrahedra
//! `conv{c_K, c_m, Q_j, Q_k}`, always stored in this vertex order. On this
//! partition, piecewise cubics in Bernstein form are built from 28 dofs:
//! values and gradients at the vertices and two normal derivatives at each
//! edge midpoint.

pub mod bernstein;
pub mod correction;
pub mod ct3d;
pub mod hct;
pub mod verify;

pub use bernstein::{check_c1, eval_bernstein, multi_indices, BernsteinPiece};
pub use correction::{eval_bt, eval_xi_e, eval_zeta_f, riesz_vt, TetMesh, WfMesh, XiE, ZetaF};
pub use ct3d::{basis_scaling_report, ct3d_interpolate, ScalingReport, WfElement, WfFunction};
pub use hct::{hct2d_interpolate, HctDofs, HctSystem};
pub use verify::{wf3d_verify, Wf3dReport};

use crate::error::{GlbError, Result};
use crate::morley::Simplex;

pub type Point3 = [f64; 3];

/// The six edges `(j, k)`, `j < k`, in dof-table order.
pub const EDGES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: Point3, b: Point3) -> Point3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(s: f64, a: Point3) -> Point3 {
    [s * a[0], s * a[1], s * a[2]]
}

pub(crate) fn dot3(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub(crate) fn norm3(a: Point3) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn unit(a: Point3) -> Point3 {
    scale(1.0 / norm3(a), a)
}

pub(crate) fn simplex3(p: &[Point3]) -> Result<Simplex> {
    Simplex::new(p.iter().map(|q| q.to_vec()).collect())
}

/// Distance from `x` to the closed triangle `(a, b, c)`.
pub(crate) fn point_triangle_distance(x: Point3, a: Point3, b: Point3, c: Point3) -> f64 {
    let n = cross(sub(b, a), sub(c, a));
    let area2 = norm3(n);
    let nu = scale(1.0 / area2, n);
    let h = dot3(sub(x, a), nu);
    let p = sub(x, scale(h, nu));
    let bary = |u: Point3, v: Point3| dot3(cross(sub(u, p), sub(v, p)), nu) / area2;
    if bary(b, c) >= 0.0 && bary(c, a) >= 0.0 && bary(a, b) >= 0.0 {
        return h.abs();
    }
    let seg = |u: Point3, v: Point3| {
        let d = sub(v, u);
        let t = (dot3(sub(x, u), d) / dot3(d, d)).clamp(0.0, 1.0);
        norm3(sub(x, add(u, scale(t, d))))
    };
    seg(a, b).min(seg(b, c)).min(seg(c, a))
}

/// An orthonormal frame `(τ, ν₁, ν₂)` of an edge.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct EdgeFrame {
    pub tau: Point3,
    pub nu: [Point3; 2],
}

/// `τ` points from `a` to `b`; `ν₁` is the normalised projection of the
/// coordinate axis least aligned with `τ`, and `ν₂ = τ × ν₁`.
pub fn edge_frame(a: Point3, b: Point3) -> EdgeFrame {
    let tau = unit(sub(b, a));
    let axis = (0..3).min_by(|&i, &j| tau[i].abs().total_cmp(&tau[j].abs())).expect("three axes");
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let nu1 = unit(sub(e, scale(dot3(e, tau), tau)));
    EdgeFrame { tau, nu: [nu1, cross(tau, nu1)] }
}

/// A tetrahedron with ordered vertices `Q₁, …, Q₄`; face `F_m` lies opposite `Q_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tet {
    pub q: [Point3; 4],
}

impl Tet {
    pub fn new(q: [Point3; 4]) -> Result<Self> {
        let t = Self { q };
        let d = t.diameter();
        if t.volume() <= 1e-14 * d * d * d {
            return Err(GlbError::Geometry(format!("degenerate tetrahedron (volume {:e})", t.volume())));
        }
        Ok(t)
    }

    pub fn signed_volume(&self) -> f64 {
        let q = &self.q;
        dot3(sub(q[1], q[0]), cross(sub(q[2], q[0]), sub(q[3], q[0]))) / 6.0
    }

    pub fn volume(&self) -> f64 {
        self.signed_volume().abs()
    }

    pub fn diameter(&self) -> f64 {
        EDGES.iter().map(|&(j, k)| norm3(sub(self.q[j], self.q[k]))).fold(0.0, f64::max)
    }

    /// Local indices of the vertices of `F_m`, ascending.
    pub fn face_vertices(m: usize) -> [usize; 3] {
        let v: Vec<usize> = (0..4).filter(|&i| i != m).collect();
        [v[0], v[1], v[2]]
    }

    pub fn face(&self, m: usize) -> [Point3; 3] {
        Self::face_vertices(m).map(|i| self.q[i])
    }

    pub fn face_area(&self, m: usize) -> f64 {
        let f = self.face(m);
        0.5 * norm3(cross(sub(f[1], f[0]), sub(f[2], f[0])))
    }

    /// Outward unit normal of `F_m`.
    pub fn outward_normal(&self, m: usize) -> Point3 {
        let f = self.face(m);
        let n = unit(cross(sub(f[1], f[0]), sub(f[2], f[0])));
        if dot3(n, sub(self.q[m], f[0])) > 0.0 {
            scale(-1.0, n)
        } else {
            n
        }
    }

    pub fn midpoint(&self, j: usize, k: usize) -> Point3 {
        scale(0.5, add(self.q[j], self.q[k]))
    }

    pub fn frame(&self, e: usize) -> EdgeFrame {
        let (j, k) = EDGES[e];
        edge_frame(self.q[j], self.q[k])
    }

    pub fn simplex(&self) -> Result<Simplex> {
        simplex3(&self.q)
    }

    /// Distance from `x` to the plane of `F_m`.
    pub fn face_distance(&self, m: usize, x: Point3) -> f64 {
        dot3(sub(x, self.face(m)[0]), self.outward_normal(m)).abs()
    }
}

/// The insphere center `Σ |F_m| Q_m / Σ |F_m|`, equidistant from all faces.
pub fn incircle_center(tet: &Tet) -> Result<Point3> {
    let w: Vec<f64> = (0..4).map(|m| tet.face_area(m)).collect();
    let total: f64 = w.iter().sum();
    if !(total > 0.0) || tet.volume() <= 0.0 {
        return Err(GlbError::Geometry("degenerate tetrahedron".into()));
    }
    Ok((0..4).fold([0.0; 3], |acc, m| add(acc, scale(w[m] / total, tet.q[m]))))
}

/// One of the twelve sub-tetrahedra `conv{c_K, c_m, Q_j, Q_k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubTet {
    /// The face `F_m` of `K` the sub-tetrahedron touches.
    pub face: usize,
    /// Index into [`EDGES`] of `(j, k)`.
    pub edge: usize,
    /// `(c_K, c_m, Q_j, Q_k)`.
    pub vertices: [Point3; 4],
}

/// The Worsey–Farin split of one tetrahedron.
#[derive(Debug, Clone, PartialEq)]
pub struct WfPartition {
    pub tet: Tet,
    pub c_k: Point3,
    pub c_f: [Point3; 4],
    /// Ordered face by face, edges ascending within a face.
    pub sub: Vec<SubTet>,
    /// `dist(c_K, ∂K) / h_K`.
    pub eps_interior: f64,
    /// `min_m dist(c_m, ∂F_m) / h_{F_m}`.
    pub eps_faces: f64,
}

/// Barycentric coordinates of `x` in the plane of the triangle `f`.
fn face_barycentric(f: [Point3; 3], x: Point3) -> [f64; 3] {
    let n = cross(sub(f[1], f[0]), sub(f[2], f[0]));
    let a = dot3(n, n);
    [
        dot3(cross(sub(f[1], x), sub(f[2], x)), n) / a,
        dot3(cross(sub(f[2], x), sub(f[0], x)), n) / a,
        dot3(cross(sub(f[0], x), sub(f[1], x)), n) / a,
    ]
}

fn triangle_diameter(f: [Point3; 3]) -> f64 {
    norm3(sub(f[0], f[1])).max(norm3(sub(f[1], f[2]))).max(norm3(sub(f[2], f[0])))
}

/// Distance from a point of the plane of `f` to the boundary of `f`.
fn in_face_boundary_distance(f: [Point3; 3], x: Point3) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b) = (f[(i + 1) % 3], f[(i + 2) % 3]);
            norm3(cross(sub(b, a), sub(x, a))) / norm3(sub(b, a))
        })
        .fold(f64::INFINITY, f64::min)
}

/// The partition with `c_K` the insphere center and, per face, `c_m` the
/// point where the segment from `c_K` to the neighbour's center crosses
/// `F_m`, or the centroid of `F_m` without a neighbour.
pub fn wf_partition(tet: &Tet, neighbor_centers: [Option<Point3>; 4]) -> Result<WfPartition> {
    let c_k = incircle_center(tet)?;
    let mut c_f = [[0.0; 3]; 4];
    for m in 0..4 {
        let f = tet.face(m);
        c_f[m] = match neighbor_centers[m] {
            None => scale(1.0 / 3.0, add(add(f[0], f[1]), f[2])),
            Some(c) => {
                let n = tet.outward_normal(m);
                let denom = dot3(n, sub(c, c_k));
                let t = dot3(n, sub(f[0], c_k)) / denom;
                if !(denom > 0.0 && t > 0.0 && t < 1.0) {
                    return Err(GlbError::Geometry(format!("segment to the neighbour center misses face {m}")));
                }
                let x = add(c_k, scale(t, sub(c, c_k)));
                if face_barycentric(f, x).iter().any(|&l| l <= 0.0) {
                    return Err(GlbError::Geometry(format!("center line crosses face {m} outside its interior")));
                }
                x
            }
        };
    }
    let mut sub_tets = Vec::with_capacity(12);
    for m in 0..4 {
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            if j != m && k != m {
                sub_tets.push(SubTet { face: m, edge: e, vertices: [c_k, c_f[m], tet.q[j], tet.q[k]] });
            }
        }
    }
    let h = tet.diameter();
    let eps_interior = (0..4).map(|m| tet.face_distance(m, c_k)).fold(f64::INFINITY, f64::min) / h;
    let eps_faces = (0..4)
        .map(|m| in_face_boundary_distance(tet.face(m), c_f[m]) / triangle_diameter(tet.face(m)))
        .fold(f64::INFINITY, f64::min);
    Ok(WfPartition { tet: tet.clone(), c_k, c_f, sub: sub_tets, eps_interior, eps_faces })
}

/// Index of `f(Q_μ)` in the dof vector.
pub fn dof_value(mu: usize) -> usize {
    mu
}

/// Index of `∂f/∂x_d (Q_μ)`.
pub fn dof_gradient(mu: usize, d: usize) -> usize {
    4 * (d + 1) + mu
}

/// Index of `∇f(Q_jk)·ν_{jk,m}` for edge `e` of [`EDGES`].
pub fn dof_edge(e: usize, m: usize) -> usize {
    16 + 2 * e + m
}

/// The 28 dofs of a C¹ function on a tetrahedron.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Dof28(#[serde(with = "serde_arrays28")] pub [f64; 28]);

mod serde_arrays28 {
    use serde::Serializer;
    pub fn serialize<S: Serializer>(v: &[f64; 28], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter())
    }
}

impl Dof28 {
    pub fn zero() -> Self {
        Self([0.0; 28])
    }

    pub fn unit(l: usize) -> Self {
        let mut d = [0.0; 28];
        d[l] = 1.0;
        Self(d)
    }

    /// Samples `f` given as `x ↦ (f(x), ∇f(x))`.
    pub fn from_fn(tet: &Tet, f: impl Fn(Point3) -> (f64, Point3)) -> Self {
        let mut d = [0.0; 28];
        for mu in 0..4 {
            let (v, g) = f(tet.q[mu]);
            d[dof_value(mu)] = v;
            for k in 0..3 {
                d[dof_gradient(mu, k)] = g[k];
            }
        }
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            let (_, g) = f(tet.midpoint(j, k));
            let fr = tet.frame(e);
            for m in 0..2 {
                d[dof_edge(e, m)] = dot3(g, fr.nu[m]);
            }
        }
        Self(d)
    }

    pub fn value(&self, mu: usize) -> f64 {
        self.0[dof_value(mu)]
    }

    pub fn gradient(&self, mu: usize) -> Point3 {
        [0, 1, 2].map(|d| self.0[dof_gradient(mu, d)])
    }

    pub fn edge(&self, e: usize, m: usize) -> f64 {
        self.0[dof_edge(e, m)]
    }

    /// Whether the dof is a value (order 0) rather than a derivative.
    pub fn is_value_dof(l: usize) -> bool {
        l < 4
    }
}
