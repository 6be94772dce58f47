//! Worsey–Farin interpolation from 28 dofs.
//!
//! Ordinates with `α₁ ≥ 1` (the first sub-tetrahedron vertex is `c_K`) come
//! from the quadratic `g = f + ⅓(c_K − x)·∇f`, which is a single quadratic on
//! `K` for every Worsey–Farin cubic. Ordinates with `α₁ = 0` live on the
//! faces of `K` and come from the face-wise HCT interpolant.

use super::bernstein::{check_c1, from_lattice_values, multi_indices, BernsteinPiece};
use super::hct::{hct_edge_normal, HctDofs, HctSystem, Point2, HCT_EDGES};
use super::{add, dot3, norm3, scale, simplex3, sub, unit, wf_partition, Dof28, Point3, Tet, WfPartition, EDGES};
use crate::error::{GlbError, Result};
use crate::morley::Simplex;
use crate::quadrature::tetrahedron_rule;
use serde::Serialize;

/// A face of `K` with an orthonormal in-plane basis and its HCT system.
#[derive(Debug, Clone)]
struct FaceChart {
    e1: Point3,
    e2: Point3,
    hct: HctSystem,
}

impl FaceChart {
    fn new(f: [Point3; 3], center: Point3) -> Result<Self> {
        let e1 = unit(sub(f[1], f[0]));
        let w = sub(f[2], f[0]);
        let e2 = unit(sub(w, scale(dot3(w, e1), e1)));
        let to2d = |x: Point3| {
            let d = sub(x, f[0]);
            [dot3(d, e1), dot3(d, e2)]
        };
        let hct = HctSystem::new(f.map(to2d), to2d(center))?;
        Ok(Self { e1, e2, hct })
    }

    fn lift(&self, v: Point2) -> Point3 {
        add(scale(v[0], self.e1), scale(v[1], self.e2))
    }
}

/// A partition with its four face systems factored, ready to interpolate
/// any number of dof vectors.
#[derive(Debug, Clone)]
pub struct WfElement {
    pub partition: WfPartition,
    charts: Vec<FaceChart>,
    simplices: Vec<Simplex>,
    k_simplex: Simplex,
}

impl WfElement {
    pub fn new(partition: &WfPartition) -> Result<Self> {
        let charts = (0..4)
            .map(|m| FaceChart::new(partition.tet.face(m), partition.c_f[m]))
            .collect::<Result<Vec<_>>>()?;
        let simplices = partition.sub.iter().map(|s| simplex3(&s.vertices)).collect::<Result<Vec<_>>>()?;
        Ok(Self { partition: partition.clone(), charts, simplices, k_simplex: partition.tet.simplex()? })
    }

    pub fn interpolate(&self, dofs: &Dof28) -> Result<WfFunction> {
        let tet = &self.partition.tet;
        let c_k = self.partition.c_k;

        // Cubic Hermite data along each edge gives f and the tangential
        // derivative at the midpoint; the two normal derivatives are dofs.
        let mut f_mid = [0.0; 6];
        let mut grad_mid = [[0.0; 3]; 6];
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            let fr = tet.frame(e);
            let len = norm3(sub(tet.q[k], tet.q[j]));
            let (f0, f1) = (dofs.value(j), dofs.value(k));
            let d0 = len * dot3(dofs.gradient(j), fr.tau);
            let d1 = len * dot3(dofs.gradient(k), fr.tau);
            f_mid[e] = 0.5 * (f0 + f1) + (d0 - d1) / 8.0;
            let dt = (1.5 * (f1 - f0) - 0.25 * (d0 + d1)) / len;
            grad_mid[e] = add(add(scale(dt, fr.tau), scale(dofs.edge(e, 0), fr.nu[0])), scale(dofs.edge(e, 1), fr.nu[1]));
        }

        // The quadratic g in Lagrange form on K.
        let mut g_vertex = [0.0; 4];
        for (l, gv) in g_vertex.iter_mut().enumerate() {
            *gv = dofs.value(l) + dot3(sub(c_k, tet.q[l]), dofs.gradient(l)) / 3.0;
        }
        let mut g_edge = [0.0; 6];
        for (e, &(j, k)) in EDGES.iter().enumerate() {
            g_edge[e] = f_mid[e] + dot3(sub(c_k, tet.midpoint(j, k)), grad_mid[e]) / 3.0;
        }
        let g = |x: &[f64]| -> f64 {
            let l = self.k_simplex.barycentric(x);
            let mut v = (0..4).map(|i| g_vertex[i] * l[i] * (2.0 * l[i] - 1.0)).sum::<f64>();
            for (e, &(j, k)) in EDGES.iter().enumerate() {
                v += g_edge[e] * 4.0 * l[j] * l[k];
            }
            v
        };

        // HCT on each face.
        let mut face_pieces = Vec::with_capacity(4);
        for m in 0..4 {
            let chart = &self.charts[m];
            let fv = Tet::face_vertices(m);
            let mut d = HctDofs::default();
            for a in 0..3 {
                let gr = dofs.gradient(fv[a]);
                d.value[a] = dofs.value(fv[a]);
                d.gradient[a] = [dot3(gr, chart.e1), dot3(gr, chart.e2)];
            }
            for (le, &(a, b)) in HCT_EDGES.iter().enumerate() {
                let e = EDGES.iter().position(|&p| p == (fv[a], fv[b])).expect("face edge");
                let n = chart.lift(hct_edge_normal(chart.hct.tri, le));
                d.cross[le] = dot3(grad_mid[e], n);
            }
            face_pieces.push(chart.hct.interpolate(&d));
        }

        let cubic_idx = multi_indices(4, 3);
        let quad_nodes: Vec<Vec<f64>> =
            multi_indices(4, 2).iter().map(|a| a.iter().map(|&x| x as f64 / 2.0).collect()).collect();
        let mut pieces = Vec::with_capacity(12);
        for (s, simplex) in self.partition.sub.iter().zip(&self.simplices) {
            let values: Vec<f64> = quad_nodes.iter().map(|l| g(&simplex.point(l))).collect();
            let quad = from_lattice_values(simplex.clone(), 2, &values)?;
            let local = s.edge_position_in_face();
            let tri = &face_pieces[s.face][local];
            let ordinates = cubic_idx
                .iter()
                .map(|a| {
                    if a[0] == 0 {
                        tri.ordinate(&a[1..])
                    } else {
                        let mut b = a.clone();
                        b[0] -= 1;
                        quad.ordinate(&b)
                    }
                })
                .collect();
            pieces.push(BernsteinPiece::new(simplex.clone(), 3, ordinates)?);
        }
        Ok(WfFunction { partition: self.partition.clone(), pieces })
    }
}

impl super::SubTet {
    /// Position of this sub-tetrahedron's edge among the three edges of its face.
    fn edge_position_in_face(&self) -> usize {
        let fv = Tet::face_vertices(self.face);
        let (j, k) = EDGES[self.edge];
        let a = fv.iter().position(|&v| v == j).expect("edge on face");
        let b = fv.iter().position(|&v| v == k).expect("edge on face");
        HCT_EDGES.iter().position(|&p| p == (a, b)).expect("HCT edge")
    }

    /// Labels of the vertices: 0 for `c_K`, `1 + m` for `c_m`, `5 + j` for `Q_j`.
    fn labels(&self) -> [usize; 4] {
        let (j, k) = EDGES[self.edge];
        [0, 1 + self.face, 5 + j, 5 + k]
    }
}

/// Interpolates `dofs` on the partition.
pub fn ct3d_interpolate(dofs: &Dof28, partition: &WfPartition) -> Result<WfFunction> {
    WfElement::new(partition)?.interpolate(dofs)
}

/// A piecewise cubic on the twelve sub-tetrahedra of a partition.
#[derive(Debug, Clone)]
pub struct WfFunction {
    pub partition: WfPartition,
    pub pieces: Vec<BernsteinPiece>,
}

impl WfFunction {
    /// The piece whose smallest barycentric coordinate at `x` is largest.
    pub fn locate(&self, x: Point3) -> Result<usize> {
        let (best, score) = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| (i, p.simplex.barycentric(&x).into_iter().fold(f64::INFINITY, f64::min)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("twelve pieces");
        if score < -1e-10 {
            return Err(GlbError::Domain { point: x.to_vec() });
        }
        Ok(best)
    }

    pub fn value(&self, x: Point3) -> Result<f64> {
        Ok(self.pieces[self.locate(x)?].value(&x))
    }

    pub fn gradient(&self, x: Point3) -> Result<Point3> {
        let g = self.pieces[self.locate(x)?].gradient(&x);
        Ok([g[0], g[1], g[2]])
    }

    pub fn hessian(&self, x: Point3) -> Result<[[f64; 3]; 3]> {
        let h = self.pieces[self.locate(x)?].hessian(&x);
        Ok([0, 1, 2].map(|r| [h[r][0], h[r][1], h[r][2]]))
    }

    /// The 28 dofs of this function.
    pub fn dofs(&self) -> Dof28 {
        Dof28::from_fn(&self.partition.tet, |x| {
            let p = &self.pieces[self.locate(x).expect("dof points lie in K")];
            let g = p.gradient(&x);
            (p.value(&x), [g[0], g[1], g[2]])
        })
    }

    /// Pairs of sub-tetrahedra sharing a face: 12 inside the face cones and 6
    /// across the segments `c_K Q_j Q_k`.
    pub fn internal_faces(&self) -> Vec<(usize, usize)> {
        let labels: Vec<[usize; 4]> = self.partition.sub.iter().map(|s| s.labels()).collect();
        let mut out = Vec::new();
        for a in 0..labels.len() {
            for b in a + 1..labels.len() {
                if labels[a].iter().filter(|l| labels[b].contains(l)).count() == 3 {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// Largest `(C⁰, C¹)` ordinate residual over the internal faces.
    pub fn internal_c1_residual(&self) -> Result<(f64, f64)> {
        let mut r = (0.0f64, 0.0f64);
        for (a, b) in self.internal_faces() {
            let (c0, c1) = check_c1(&self.pieces[a], &self.pieces[b])?;
            r = (r.0.max(c0), r.1.max(c1));
        }
        Ok(r)
    }

    /// `(‖v‖, |v|₁, |v|₂)` on `K`, each piece by an exact rule.
    pub fn norms(&self) -> [f64; 3] {
        let rule = tetrahedron_rule(6);
        let mut acc = [0.0; 3];
        for p in &self.pieces {
            let s = &p.simplex;
            acc[0] += rule.integrate(s.volume, |l| p.value_bary(l).powi(2));
            acc[1] += rule.integrate(s.volume, |l| p.gradient(&s.point(l)).iter().map(|v| v * v).sum());
            acc[2] += rule.integrate(s.volume, |l| p.hessian(&s.point(l)).iter().flatten().map(|v| v * v).sum());
        }
        acc.map(f64::sqrt)
    }
}

/// Norms of the 28 basis functions on `h·K̂` for several `h`.
#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub h: Vec<f64>,
    /// `eps_interior` and `eps_faces` of each scaled partition.
    pub eps: Vec<[f64; 2]>,
    pub rows: Vec<ScalingRow>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub dof: usize,
    /// `"value"` or `"derivative"`.
    pub kind: &'static str,
    /// `[L², H¹, H²]` (semi)norms per `h`.
    pub norms: Vec<[f64; 3]>,
    /// Least-squares slopes of `log norm` against `log h`.
    pub exponents: [f64; 3],
}

/// Basis norms on `h·tet` for each `h`, with boundary (centroid) face centers.
pub fn basis_scaling_report(tet: &Tet, h: &[f64]) -> Result<ScalingReport> {
    if h.len() < 2 || h.iter().any(|&x| !(x > 0.0)) {
        return Err(GlbError::Input("scaling needs at least two positive sizes".into()));
    }
    let mut per_h = Vec::with_capacity(h.len());
    let mut eps = Vec::with_capacity(h.len());
    for &s in h {
        let t = Tet::new(tet.q.map(|p| scale(s, p)))?;
        let el = WfElement::new(&wf_partition(&t, [None; 4])?)?;
        eps.push([el.partition.eps_interior, el.partition.eps_faces]);
        per_h.push((0..28).map(|l| Ok(el.interpolate(&Dof28::unit(l))?.norms())).collect::<Result<Vec<_>>>()?);
    }
    let lx: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let slope = |ly: &[f64]| {
        let my = ly.iter().sum::<f64>() / ly.len() as f64;
        let num: f64 = lx.iter().zip(ly).map(|(x, y)| (x - mx) * (y - my)).sum();
        let den: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
        num / den
    };
    let rows = (0..28)
        .map(|l| {
            let norms: Vec<[f64; 3]> = per_h.iter().map(|v| v[l]).collect();
            let exponents = [0, 1, 2].map(|k| slope(&norms.iter().map(|n| n[k].ln()).collect::<Vec<_>>()));
            ScalingRow { dof: l, kind: if Dof28::is_value_dof(l) { "value" } else { "derivative" }, norms, exponents }
        })
        .collect();
    Ok(ScalingReport { h: h.to_vec(), eps, rows })
}

#[cfg(test)]
mod tests {
    use super::super::verify::{random_point, random_tet};
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_partition(rng: &mut ChaCha8Rng, t: &Tet) -> WfPartition {
        super::super::verify::random_partition(rng, t).unwrap()
    }

    fn cubic(x: Point3) -> (f64, Point3) {
        let [a, b, c] = x;
        (
            0.3 - a + 2.0 * b * c + a * a * b - c * c * c + 0.5 * a * b * c + b * b,
            [-1.0 + 2.0 * a * b + 0.5 * b * c, 2.0 * c + a * a + 0.5 * a * c + 2.0 * b, 2.0 * b - 3.0 * c * c + 0.5 * a * b],
        )
    }

    #[test]
    fn zero_dofs_give_zero() {
        let t = Tet::new([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let f = ct3d_interpolate(&Dof28::zero(), &wf_partition(&t, [None; 4]).unwrap()).unwrap();
        assert!(f.pieces.iter().all(|p| p.ordinates.iter().all(|&c| c == 0.0)));
    }

    #[test]
    fn reproduces_cubics() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let t = random_tet(&mut rng);
            let part = random_partition(&mut rng, &t);
            let f = ct3d_interpolate(&Dof28::from_fn(&t, cubic), &part).unwrap();
            for _ in 0..40 {
                let x = random_point(&mut rng, &t);
                let (v, g) = cubic(x);
                assert!((f.value(x).unwrap() - v).abs() < 1e-9);
                let gh = f.gradient(x).unwrap();
                assert!(norm3(sub(gh, g)) < 1e-9);
            }
        }
    }

    #[test]
    fn basis_is_dual_to_the_dofs_and_c1() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let t = random_tet(&mut rng);
            let el = WfElement::new(&random_partition(&mut rng, &t)).unwrap();
            for l in 0..28 {
                let f = el.interpolate(&Dof28::unit(l)).unwrap();
                let d = f.dofs();
                for (i, v) in d.0.iter().enumerate() {
                    let expect = if i == l { 1.0 } else { 0.0 };
                    assert!((v - expect).abs() < 1e-9, "dof {i} of basis {l}: {v}");
                }
                let (c0, c1) = f.internal_c1_residual().unwrap();
                assert!(c0 < 1e-10 && c1 < 1e-10, "basis {l}: {c0:e} {c1:e}");
            }
        }
    }

    #[test]
    fn eighteen_internal_faces() {
        let t = Tet::new([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let f = ct3d_interpolate(&Dof28::zero(), &wf_partition(&t, [None; 4]).unwrap()).unwrap();
        assert_eq!(f.internal_faces().len(), 18);
    }

    #[test]
    fn two_sided_samples_agree_on_internal_faces() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = random_tet(&mut rng);
        let part = random_partition(&mut rng, &t);
        let mut d = Dof28::zero();
        d.0.iter_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
        let f = ct3d_interpolate(&d, &part).unwrap();
        for (a, b) in f.internal_faces() {
            let (pa, pb) = (&f.pieces[a], &f.pieces[b]);
            let shared: Vec<&Vec<f64>> =
                pa.simplex.vertices.iter().filter(|v| pb.simplex.vertices.contains(v)).collect();
            for _ in 0..100 {
                let mut w = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
                let s: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= s);
                let x: Vec<f64> = (0..3).map(|k| (0..3).map(|i| w[i] * shared[i][k]).sum()).collect();
                assert!((pa.value(&x) - pb.value(&x)).abs() < 1e-10);
                let (ga, gb) = (pa.gradient(&x), pb.gradient(&x));
                assert!((0..3).all(|k| (ga[k] - gb[k]).abs() < 1e-9));
            }
        }
    }

    #[test]
    fn quadratics_are_rigid() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = random_tet(&mut rng);
        let q = |x: Point3| (x[0] * x[1] - x[2] * x[2] + 0.5 * x[0], [x[1] + 0.5, x[0], -2.0 * x[2]]);
        let f = ct3d_interpolate(&Dof28::from_fn(&t, q), &random_partition(&mut rng, &t)).unwrap();
        for _ in 0..20 {
            let x = random_point(&mut rng, &t);
            let h = f.hessian(x).unwrap();
            let expect = [[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, -2.0]];
            for r in 0..3 {
                for c in 0..3 {
                    assert!((h[r][c] - expect[r][c]).abs() < 1e-8);
                }
            }
        }
    }

    #[test]
    fn basis_norms_scale_with_the_dof_order() {
        let t = Tet::new([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
        let r = basis_scaling_report(&t, &[1.0, 0.5, 0.25, 0.125]).unwrap();
        for row in &r.rows {
            let l2 = if row.kind == "value" { 1.5 } else { 2.5 };
            for (k, expect) in [l2, l2 - 1.0, l2 - 2.0].into_iter().enumerate() {
                assert!((row.exponents[k] - expect).abs() < 1e-6, "dof {} norm {k}: {}", row.dof, row.exponents[k]);
                for w in row.norms.windows(2) {
                    let ratio = w[1][k] / w[0][k];
                    assert!((ratio / 2f64.powf(-expect) - 1.0).abs() < 0.05);
                }
            }
        }
    }
}
