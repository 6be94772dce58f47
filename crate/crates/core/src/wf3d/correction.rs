//! Tetrahedral meshes with Worsey–Farin partitions, and the local functions
//! that correct edge means (`ξ_E`), face normal-derivative means (`ζ_F`) and
//! volume moments (`b_T`) of a conforming companion.

use super::bernstein::BernsteinPiece;
use super::{
    add, dot3, incircle_center, norm3, point_triangle_distance, scale, sub, wf_partition, Point3, Tet, WfPartition, EDGES,
};
use crate::error::{GlbError, Result};
use crate::quadrature::{gauss_legendre, tetrahedron_rule, triangle_rule};
use std::collections::BTreeMap;

/// A conforming tetrahedral mesh. Each tetrahedron stores its vertex ids in
/// ascending order, so local edge frames agree with global ones.
#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    pub vertices: Vec<Point3>,
    pub tets: Vec<[usize; 4]>,
}

impl TetMesh {
    pub fn new(vertices: Vec<Point3>, tets: Vec<[usize; 4]>) -> Result<Self> {
        let mut sorted = Vec::with_capacity(tets.len());
        for mut t in tets {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(GlbError::Input(format!("tetrahedron {t:?} references a missing vertex")));
            }
            t.sort_unstable();
            if t.windows(2).any(|w| w[0] == w[1]) {
                return Err(GlbError::Input(format!("tetrahedron {t:?} repeats a vertex")));
            }
            Tet::new(t.map(|v| vertices[v]))?;
            sorted.push(t);
        }
        let mesh = Self { vertices, tets: sorted };
        if mesh.faces().values().any(|v| v.len() > 2) {
            return Err(GlbError::Geometry("a face is shared by more than two tetrahedra".into()));
        }
        Ok(mesh)
    }

    pub fn tet(&self, t: usize) -> Tet {
        Tet { q: self.tets[t].map(|v| self.vertices[v]) }
    }

    /// Sorted global face → `(tetrahedron, local face)` for each side.
    pub fn faces(&self) -> BTreeMap<[usize; 3], Vec<(usize, usize)>> {
        let mut map: BTreeMap<[usize; 3], Vec<(usize, usize)>> = BTreeMap::new();
        for (t, ids) in self.tets.iter().enumerate() {
            for m in 0..4 {
                map.entry(Tet::face_vertices(m).map(|i| ids[i])).or_default().push((t, m));
            }
        }
        map
    }

    /// `neighbours()[t][m]` is the tetrahedron across local face `m`.
    pub fn neighbours(&self) -> Vec<[Option<usize>; 4]> {
        let mut nb = vec![[None; 4]; self.tets.len()];
        for sides in self.faces().values() {
            if let [(t0, m0), (t1, m1)] = sides[..] {
                nb[t0][m0] = Some(t1);
                nb[t1][m1] = Some(t0);
            }
        }
        nb
    }
}

/// A mesh with insphere centers and the induced face centers.
#[derive(Debug, Clone)]
pub struct WfMesh {
    pub mesh: TetMesh,
    pub centers: Vec<Point3>,
    pub partitions: Vec<WfPartition>,
}

impl WfMesh {
    pub fn new(mesh: TetMesh) -> Result<Self> {
        let centers = (0..mesh.tets.len()).map(|t| incircle_center(&mesh.tet(t))).collect::<Result<Vec<_>>>()?;
        let partitions = mesh
            .neighbours()
            .iter()
            .enumerate()
            .map(|(t, nb)| wf_partition(&mesh.tet(t), nb.map(|n| n.map(|s| centers[s]))))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { mesh, centers, partitions })
    }
}

/// The radial bump `ξ_E = (|E|/R)(1 − 3s² + 2s³)`, `s = |x − mid(E)|/R`, with
/// unit mean over `E` and zero mean over every other edge.
///
/// `R` is half the smaller of `|E|/2` and the distance from `mid(E)` to the
/// boundary of the Worsey–Farin patch of `E` (the sub-tetrahedra having `E`
/// as an edge), so the ball stays inside that patch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiE {
    pub mid: Point3,
    pub length: f64,
    pub radius: f64,
}

impl XiE {
    pub fn new(wf: &WfMesh, edge: [usize; 2]) -> Result<Self> {
        let (a, b) = (edge[0].min(edge[1]), edge[0].max(edge[1]));
        let mesh = &wf.mesh;
        let around: Vec<usize> = (0..mesh.tets.len()).filter(|&t| mesh.tets[t].contains(&a) && mesh.tets[t].contains(&b)).collect();
        if a == b || around.is_empty() {
            return Err(GlbError::Input(format!("({a}, {b}) is not an edge of the mesh")));
        }
        let nb = mesh.neighbours();
        let mut dist = f64::INFINITY;
        for &t in &around {
            let ids = mesh.tets[t];
            let j = ids.iter().position(|&v| v == a).expect("vertex a");
            let k = ids.iter().position(|&v| v == b).expect("vertex b");
            let e = EDGES.iter().position(|&p| p == (j, k)).expect("sorted local edge");
            for s in wf.partitions[t].sub.iter().filter(|s| s.edge == e) {
                if nb[t][s.face].is_none() {
                    return Err(GlbError::Geometry(format!("edge ({a}, {b}) lies on the boundary")));
                }
                let [c_k, c_m, q_j, q_k] = s.vertices;
                let mid = scale(0.5, add(q_j, q_k));
                dist = dist.min(point_triangle_distance(mid, c_k, c_m, q_j)).min(point_triangle_distance(mid, c_k, c_m, q_k));
            }
        }
        let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
        let length = norm3(sub(pb, pa));
        let radius = 0.5 * dist.min(0.5 * length);
        if !(radius > 0.0) {
            return Err(GlbError::Geometry(format!("edge ({a}, {b}) has an empty bump radius")));
        }
        Ok(Self { mid: scale(0.5, add(pa, pb)), length, radius })
    }

    pub fn eval(&self, x: Point3) -> f64 {
        let s = norm3(sub(x, self.mid)) / self.radius;
        if s >= 1.0 {
            0.0
        } else {
            self.length / self.radius * (1.0 - 3.0 * s * s + 2.0 * s * s * s)
        }
    }

    pub fn gradient(&self, x: Point3) -> Point3 {
        let d = sub(x, self.mid);
        let r = norm3(d);
        let s = r / self.radius;
        if s >= 1.0 || r == 0.0 {
            return [0.0; 3];
        }
        let dr = self.length / (self.radius * self.radius) * (6.0 * s * s - 6.0 * s);
        scale(dr / r, d)
    }

    /// `⨍_{ab} ξ_E ds` by 5-point Gauss on pieces split where `ξ_E` is not smooth.
    pub fn edge_mean(&self, a: Point3, b: Point3) -> f64 {
        let (x, w) = gauss_legendre(5);
        let d = sub(b, a);
        let len2 = dot3(d, d);
        let t0 = dot3(sub(self.mid, a), d) / len2;
        let dr = self.radius / len2.sqrt();
        let mut cuts = vec![0.0, 1.0];
        cuts.extend([t0 - dr, t0, t0 + dr].into_iter().filter(|t| *t > 0.0 && *t < 1.0));
        cuts.sort_by(f64::total_cmp);
        let mut s = 0.0;
        for c in cuts.windows(2) {
            for (xq, wq) in x.iter().zip(&w) {
                let t = c[0] + (c[1] - c[0]) * xq;
                s += wq * (c[1] - c[0]) * self.eval(add(a, scale(t, d)));
            }
        }
        s
    }

    /// `‖ξ_E‖²_{L²} = (38π/315) |E|² R`.
    pub fn l2_norm_squared(&self) -> f64 {
        38.0 * std::f64::consts::PI / 315.0 * self.length * self.length * self.radius
    }
}

pub fn eval_xi_e(xi: &XiE, x: Point3) -> f64 {
    xi.eval(x)
}

/// One side of a face bubble.
#[derive(Debug, Clone)]
struct ZetaSide {
    simplex: crate::morley::Simplex,
    apex: usize,
    sign: f64,
    height: f64,
}

/// The face bubble `ζ_F|_T = s (7!/2) dist(z_T, F) (λ₁λ₂λ₃)² λ_{z_T}` on the two
/// tetrahedra sharing `F`, with `s = −ν_T·ν_F` and `ν_T` the outward normal
/// of `T` on `F`. Its gradient is continuous and `⨍_F ∇ζ_F·ν_F = 1`.
#[derive(Debug, Clone)]
pub struct ZetaF {
    /// Unit normal of `F`, outward from the first tetrahedron.
    pub normal: Point3,
    sides: Vec<ZetaSide>,
}

impl ZetaF {
    pub fn new(mesh: &TetMesh, face: [usize; 3]) -> Result<Self> {
        let mut key = face;
        key.sort_unstable();
        let faces = mesh.faces();
        let sides = faces.get(&key).ok_or_else(|| GlbError::Input(format!("{face:?} is not a face of the mesh")))?;
        if sides.len() != 2 {
            return Err(GlbError::Geometry(format!("face {key:?} lies on the boundary")));
        }
        let normal = mesh.tet(sides[0].0).outward_normal(sides[0].1);
        let sides = sides
            .iter()
            .map(|&(t, m)| {
                let tet = mesh.tet(t);
                Ok(ZetaSide {
                    simplex: tet.simplex()?,
                    apex: m,
                    sign: -dot3(tet.outward_normal(m), normal),
                    height: tet.face_distance(m, tet.q[m]),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { normal, sides })
    }

    fn side(&self, x: Point3) -> Option<&ZetaSide> {
        self.sides.iter().find(|s| s.simplex.contains(&x, 1e-12))
    }

    /// Evaluates on one side only; `side` is 0 for the first tetrahedron.
    pub fn eval_on(&self, side: usize, x: Point3) -> (f64, Point3) {
        let s = &self.sides[side];
        let l = s.simplex.barycentric(&x);
        let c = s.sign * 2520.0 * s.height;
        let others: Vec<usize> = (0..4).filter(|&i| i != s.apex).collect();
        let p: f64 = others.iter().map(|&i| l[i]).product();
        let value = c * p * p * l[s.apex];
        let mut g = [0.0; 3];
        for d in 0..3 {
            let mut dp = 0.0;
            for &i in &others {
                let rest: f64 = others.iter().filter(|&&j| j != i).map(|&j| l[j]).product();
                dp += rest * s.simplex.grad_bary[i][d];
            }
            g[d] = c * (2.0 * p * dp * l[s.apex] + p * p * s.simplex.grad_bary[s.apex][d]);
        }
        (value, g)
    }

    /// Zero outside the two tetrahedra.
    pub fn eval(&self, x: Point3) -> f64 {
        self.side(x).map_or(0.0, |s| {
            let i = self.sides.iter().position(|t| std::ptr::eq(t, s)).expect("own side");
            self.eval_on(i, x).0
        })
    }

    pub fn gradient(&self, x: Point3) -> Point3 {
        match self.sides.iter().position(|s| s.simplex.contains(&x, 1e-12)) {
            Some(i) => self.eval_on(i, x).1,
            None => [0.0; 3],
        }
    }

    /// `⨍_G ∇ζ_F·ν dσ` over the face of side `side` opposite its local vertex `m`.
    pub fn normal_mean(&self, side: usize, m: usize, nu: Point3) -> f64 {
        let s = &self.sides[side];
        let f: Vec<Point3> = (0..4).filter(|&i| i != m).map(|i| [0, 1, 2].map(|d| s.simplex.vertices[i][d])).collect();
        let rule = triangle_rule(8);
        let mut acc = 0.0;
        for (l, w) in rule.bary.iter().zip(&rule.weights) {
            let x = [0, 1, 2].map(|d| l[0] * f[0][d] + l[1] * f[1][d] + l[2] * f[2][d]);
            acc += w * dot3(self.eval_on(side, x).1, nu);
        }
        acc
    }

    /// Whether local face `m` of side `side` is `F` itself.
    pub fn is_own_face(&self, side: usize, m: usize) -> bool {
        self.sides[side].apex == m
    }

    /// `‖ζ_F‖_{L²(T)} = 6 dist(z_T, F) |T|^{1/2} / √12155` on side `side`.
    pub fn l2_norm_on(&self, side: usize) -> f64 {
        let s = &self.sides[side];
        6.0 * s.height * s.simplex.volume.sqrt() / 12155f64.sqrt()
    }
}

pub fn eval_zeta_f(zeta: &ZetaF, x: Point3) -> f64 {
    zeta.eval(x)
}

/// The volume bubble `b_T = 4⁸ Π λ_k²`, with maximum 1 at the centroid and
/// zero outside `T`.
pub fn eval_bt(tet: &Tet, x: Point3) -> Result<f64> {
    let l = tet.simplex()?.barycentric(&x);
    if l.iter().any(|&v| v < 0.0) {
        return Ok(0.0);
    }
    Ok(65536.0 * l.iter().map(|v| v * v).product::<f64>())
}

/// The quadratic `v_T` with `(b_T v_T, w)_{L²(T)} = (g, w)_{L²(T)}` for all
/// quadratics `w`, in Bernstein form.
pub fn riesz_vt(tet: &Tet, g: impl Fn(Point3) -> f64) -> Result<BernsteinPiece> {
    let simplex = tet.simplex()?;
    let basis = |l: &[f64], i: usize| -> f64 {
        let zero = BernsteinPiece::new(simplex.clone(), 2, (0..10).map(|j| if j == i { 1.0 } else { 0.0 }).collect())
            .expect("ten ordinates");
        zero.value_bary(l)
    };
    let rule = tetrahedron_rule(12);
    let bt = |l: &[f64]| 65536.0 * l.iter().map(|v| v * v).product::<f64>();
    let mut gram = nalgebra::DMatrix::zeros(10, 10);
    let mut rhs = nalgebra::DVector::zeros(10);
    for (l, w) in rule.bary.iter().zip(&rule.weights) {
        let phi: Vec<f64> = (0..10).map(|i| basis(l, i)).collect();
        let x = simplex.point(l);
        let gx = g([x[0], x[1], x[2]]);
        let b = bt(l);
        for i in 0..10 {
            rhs[i] += w * simplex.volume * gx * phi[i];
            for j in 0..10 {
                gram[(i, j)] += w * simplex.volume * b * phi[i] * phi[j];
            }
        }
    }
    let chol = gram.cholesky().ok_or_else(|| GlbError::Factorization("b_T-weighted Gram matrix".into()))?;
    BernsteinPiece::new(simplex, 2, chol.solve(&rhs).iter().copied().collect())
}
