//! A seeded battery of numerical checks for the Worsey–Farin kit, summarised
//! in one serialisable report.

use super::bernstein::check_c1;
use super::correction::{eval_bt, riesz_vt, TetMesh, WfMesh, XiE, ZetaF};
use super::ct3d::{basis_scaling_report, WfElement, ScalingReport};
use super::{add, incircle_center, norm3, scale, sub, wf_partition, Dof28, Point3, Tet, WfPartition, EDGES};
use crate::error::Result;
use crate::quadrature::tetrahedron_rule;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// A perturbed reference tetrahedron with volume at least `0.02 h³`.
pub fn random_tet(rng: &mut impl Rng) -> Tet {
    loop {
        let mut q = [[0.0; 3]; 4];
        for (i, p) in q.iter_mut().enumerate() {
            for (d, x) in p.iter_mut().enumerate() {
                let base = if i == d + 1 { 1.0 } else { 0.0 };
                *x = base + rng.random_range(-0.3..0.3);
            }
        }
        if let Ok(t) = Tet::new(q) {
            if t.volume() > 0.02 * t.diameter().powi(3) {
                return t;
            }
        }
    }
}

/// A point with uniform barycentric weights in `[lo, 1]` before normalisation.
fn random_convex(rng: &mut impl Rng, p: &[Point3], lo: f64) -> Point3 {
    let w: Vec<f64> = p.iter().map(|_| rng.random_range(lo..1.0)).collect();
    let s: f64 = w.iter().sum();
    p.iter().zip(&w).fold([0.0; 3], |acc, (q, wi)| add(acc, scale(wi / s, *q)))
}

/// Each face independently gets either no neighbour or a neighbour center
/// placed beyond a random interior point of the face, on the line from `c_K`.
pub fn random_partition(rng: &mut impl Rng, t: &Tet) -> Result<WfPartition> {
    let c = incircle_center(t)?;
    let mut nb = [None; 4];
    for (m, slot) in nb.iter_mut().enumerate() {
        if rng.random::<bool>() {
            let p = random_convex(rng, &t.face(m), 0.2);
            *slot = Some(add(p, scale(rng.random_range(0.5..2.0), sub(p, c))));
        }
    }
    wf_partition(t, nb)
}

/// A uniformly distributed point of `t`.
pub fn random_point(rng: &mut impl Rng, t: &Tet) -> Point3 {
    let l: Vec<f64> = (0..4).map(|_| -rng.random::<f64>().ln()).collect();
    let s: f64 = l.iter().sum();
    (0..4).fold([0.0; 3], |acc, i| add(acc, scale(l[i] / s, t.q[i])))
}

/// A random cubic with its gradient.
#[derive(Debug, Clone)]
struct Cubic {
    coef: Vec<f64>,
    exps: Vec<[i32; 3]>,
}

impl Cubic {
    fn random(rng: &mut impl Rng) -> Self {
        let mut exps = Vec::new();
        for a in 0..=3 {
            for b in 0..=3 - a {
                for c in 0..=3 - a - b {
                    exps.push([a, b, c]);
                }
            }
        }
        Self { coef: exps.iter().map(|_| rng.random_range(-1.0..1.0)).collect(), exps }
    }

    fn eval(&self, x: Point3) -> (f64, Point3) {
        let mut v = 0.0;
        let mut g = [0.0; 3];
        for (c, e) in self.coef.iter().zip(&self.exps) {
            let p = |d: usize, k: i32| if k < 0 { 0.0 } else { x[d].powi(k) };
            v += c * p(0, e[0]) * p(1, e[1]) * p(2, e[2]);
            g[0] += c * e[0] as f64 * p(0, e[0] - 1) * p(1, e[1]) * p(2, e[2]);
            g[1] += c * e[1] as f64 * p(0, e[0]) * p(1, e[1] - 1) * p(2, e[2]);
            g[2] += c * e[2] as f64 * p(0, e[0]) * p(1, e[1]) * p(2, e[2] - 1);
        }
        (v, g)
    }
}

/// Largest residuals of the `C¹` join: ordinate conditions and sampled
/// two-sided value/gradient differences.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct C1Residuals {
    pub con1: f64,
    pub con2: f64,
    pub two_sided: f64,
}

impl C1Residuals {
    fn merge(&mut self, o: C1Residuals) {
        self.con1 = self.con1.max(o.con1);
        self.con2 = self.con2.max(o.con2);
        self.two_sided = self.two_sided.max(o.two_sided);
    }

    pub fn max(&self) -> f64 {
        self.con1.max(self.con2).max(self.two_sided)
    }
}

fn join_residuals(
    rng: &mut impl Rng,
    a: &super::bernstein::BernsteinPiece,
    b: &super::bernstein::BernsteinPiece,
    samples: usize,
) -> Result<C1Residuals> {
    let (con1, con2) = check_c1(a, b)?;
    let shared: Vec<Point3> = a
        .simplex
        .vertices
        .iter()
        .filter(|v| b.simplex.vertices.iter().any(|w| w == *v))
        .map(|v| [v[0], v[1], v[2]])
        .collect();
    let mut two_sided = 0.0f64;
    for _ in 0..samples {
        let x = random_convex(rng, &shared, 0.0);
        two_sided = two_sided.max((a.value(&x) - b.value(&x)).abs());
        let (ga, gb) = (a.gradient(&x), b.gradient(&x));
        two_sided = two_sided.max((0..3).map(|d| (ga[d] - gb[d]).abs()).fold(0.0, f64::max));
    }
    Ok(C1Residuals { con1, con2, two_sided })
}

/// Residuals of the correction functions against their defining moments.
#[derive(Debug, Clone, Copy, Default, Serialize)]
pub struct CorrectionReport {
    /// `|⨍_E ξ_E − 1|`.
    pub xi_own_edge: f64,
    /// `max_G |⨍_G ξ_E|` over the other edges of the patch.
    pub xi_other_edges: f64,
    /// `|⨍_F ∇ζ_F·ν_F − 1|` from both sides.
    pub zeta_own_face: f64,
    /// `max_G |⨍_G ∇ζ_F·ν_G|` over the other faces.
    pub zeta_other_faces: f64,
    /// `|max b_T − 1|`, the maximum sampled at the centroid.
    pub bubble_max: f64,
    /// Largest value of `b_T` on random points: must not exceed 1.
    pub bubble_sampled_max: f64,
    /// `max |(b_T v_T, w) − (g, w)|` over random quadratics `g`, `w`.
    pub riesz: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Wf3dReport {
    pub seed: u64,
    pub configurations: usize,
    /// `max_{i,j} |L_i(φ_j) − δ_ij|`.
    pub unisolvence_residual: f64,
    /// Largest value or gradient error of the interpolant of a random cubic.
    pub cubic_reproduction: f64,
    /// Largest Hessian error of the interpolant of a random quadratic.
    pub quadratic_rigidity: f64,
    pub c1_within: C1Residuals,
    pub c1_across: C1Residuals,
    /// Distance between the face center computed from either side.
    pub face_center_mismatch: f64,
    /// `min dist(c_K, ∂K)/h_K` over all partitions built.
    pub eps_interior: f64,
    /// `min dist(c_F, ∂F)/h_F` over all partitions built.
    pub eps_faces: f64,
    pub scaling: ScalingReport,
    /// Range of fitted L² exponents for value dofs.
    pub value_l2_exponents: [f64; 2],
    /// Range of fitted L² exponents for derivative dofs.
    pub derivative_l2_exponents: [f64; 2],
    pub corrections: CorrectionReport,
    /// Whether every check is within the tolerances of [`Wf3dReport::check`].
    pub pass: bool,
}

impl Wf3dReport {
    /// Names of the checks that exceed their tolerance.
    pub fn check(&self) -> Vec<&'static str> {
        let c = &self.corrections;
        let exp_ok = |r: [f64; 2], e: f64| (r[0] - e).abs() <= 0.05 && (r[1] - e).abs() <= 0.05;
        [
            ("unisolvence", self.unisolvence_residual <= 1e-9),
            ("cubic reproduction", self.cubic_reproduction <= 1e-9),
            ("quadratic rigidity", self.quadratic_rigidity <= 1e-10),
            ("C1 within", self.c1_within.max() <= 1e-9),
            ("C1 across", self.c1_across.max() <= 1e-9),
            ("face centers", self.face_center_mismatch <= 1e-12),
            ("shape regularity", self.eps_interior > 0.0 && self.eps_faces > 0.0),
            ("value exponents", exp_ok(self.value_l2_exponents, 1.5)),
            ("derivative exponents", exp_ok(self.derivative_l2_exponents, 2.5)),
            ("xi means", c.xi_own_edge <= 1e-8 && c.xi_other_edges <= 1e-8),
            ("zeta means", c.zeta_own_face <= 1e-8 && c.zeta_other_faces <= 1e-8),
            ("bubble maximum", c.bubble_max <= 1e-12 && c.bubble_sampled_max <= 1.0 + 1e-12),
            ("riesz", c.riesz <= 1e-10),
        ]
        .into_iter()
        .filter(|(_, ok)| !ok)
        .map(|(name, _)| name)
        .collect()
    }
}

fn range(v: impl Iterator<Item = f64>) -> [f64; 2] {
    v.fold([f64::INFINITY, f64::NEG_INFINITY], |r, x| [r[0].min(x), r[1].max(x)])
}

/// The reference tetrahedron and its `h`-family `{1, ½, ¼, ⅛}`.
pub const SCALING_H: [f64; 4] = [1.0, 0.5, 0.25, 0.125];

/// Runs every check on `configurations` random admissible partitions.
pub fn wf3d_verify(seed: u64, configurations: usize) -> Result<Wf3dReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut unisolvence = 0.0f64;
    let mut cubic = 0.0f64;
    let mut rigidity = 0.0f64;
    let mut within = C1Residuals::default();
    let mut eps = [f64::INFINITY; 2];
    for _ in 0..configurations {
        let t = random_tet(&mut rng);
        let el = WfElement::new(&random_partition(&mut rng, &t)?)?;
        eps = [eps[0].min(el.partition.eps_interior), eps[1].min(el.partition.eps_faces)];
        for l in 0..28 {
            let f = el.interpolate(&Dof28::unit(l))?;
            for (i, v) in f.dofs().0.iter().enumerate() {
                unisolvence = unisolvence.max((v - if i == l { 1.0 } else { 0.0 }).abs());
            }
            let (c0, c1) = f.internal_c1_residual()?;
            within.merge(C1Residuals { con1: c0, con2: c1, two_sided: 0.0 });
        }
        let p = Cubic::random(&mut rng);
        let f = el.interpolate(&Dof28::from_fn(&t, |x| p.eval(x)))?;
        for _ in 0..20 {
            let x = random_point(&mut rng, &t);
            let (v, g) = p.eval(x);
            cubic = cubic.max((f.value(x)? - v).abs()).max(norm3(sub(f.gradient(x)?, g)));
        }
        for (a, b) in f.internal_faces() {
            within.merge(join_residuals(&mut rng, &f.pieces[a], &f.pieces[b], 5)?);
        }
        // A random quadratic: x ↦ xᵀAx/2 + b·x with symmetric A.
        let mut a = [[0.0; 3]; 3];
        for r in 0..3 {
            for c in r..3 {
                a[r][c] = rng.random_range(-1.0..1.0);
                a[c][r] = a[r][c];
            }
        }
        let b: Point3 = [0; 3].map(|_| rng.random_range(-1.0..1.0));
        let q = |x: Point3| {
            let ax = [0, 1, 2].map(|r| (0..3).map(|c| a[r][c] * x[c]).sum::<f64>());
            (0.5 * (0..3).map(|r| x[r] * ax[r]).sum::<f64>() + (0..3).map(|r| b[r] * x[r]).sum::<f64>(), add(ax, b))
        };
        let f = el.interpolate(&Dof28::from_fn(&t, q))?;
        for _ in 0..10 {
            let h = f.hessian(random_point(&mut rng, &t))?;
            for r in 0..3 {
                for c in 0..3 {
                    rigidity = rigidity.max((h[r][c] - a[r][c]).abs());
                }
            }
        }
    }

    let (across, mismatch) = across_elements(&mut rng)?;
    let reference = Tet::new([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])?;
    let scaling = basis_scaling_report(&reference, &SCALING_H)?;
    for e in &scaling.eps {
        eps = [eps[0].min(e[0]), eps[1].min(e[1])];
    }
    let value_l2_exponents = range(scaling.rows.iter().filter(|r| r.kind == "value").map(|r| r.exponents[0]));
    let derivative_l2_exponents = range(scaling.rows.iter().filter(|r| r.kind != "value").map(|r| r.exponents[0]));
    let mut report = Wf3dReport {
        seed,
        configurations,
        unisolvence_residual: unisolvence,
        cubic_reproduction: cubic,
        quadratic_rigidity: rigidity,
        c1_within: within,
        c1_across: across,
        face_center_mismatch: mismatch,
        eps_interior: eps[0],
        eps_faces: eps[1],
        scaling,
        value_l2_exponents,
        derivative_l2_exponents,
        corrections: corrections(&mut rng)?,
        pass: false,
    };
    report.pass = report.check().is_empty();
    Ok(report)
}

/// Two tetrahedra sharing the face `{0, 1, 2}`, apexes on either side.
fn random_pair(rng: &mut impl Rng) -> Result<TetMesh> {
    let t = random_tet(rng);
    let f = t.face(3);
    let n = t.outward_normal(3);
    let p = random_convex(rng, &f, 0.3);
    let apex = add(p, scale(rng.random_range(0.5..1.0), n));
    TetMesh::new(vec![f[0], f[1], f[2], t.q[3], apex], vec![[0, 1, 2, 3], [0, 1, 2, 4]])
}

fn across_elements(rng: &mut impl Rng) -> Result<(C1Residuals, f64)> {
    let mut res = C1Residuals::default();
    let mut mismatch = 0.0f64;
    for _ in 0..5 {
        let wf = WfMesh::new(random_pair(rng)?)?;
        let (p0, p1) = (&wf.partitions[0], &wf.partitions[1]);
        mismatch = mismatch.max(norm3(sub(p0.c_f[3], p1.c_f[3])));
        let f = Cubic::random(rng);
        let w = add([0.3, -0.2, 0.5], [0; 3].map(|_| rng.random_range(-0.2..0.2)));
        // A non-polynomial function, so the join is not exact reproduction.
        let smooth = |x: Point3| {
            let (v, g) = f.eval(x);
            let s = super::dot3(w, x);
            (v + s.sin(), add(g, scale(s.cos(), w)))
        };
        let u0 = WfElement::new(p0)?.interpolate(&Dof28::from_fn(&p0.tet, smooth))?;
        let u1 = WfElement::new(p1)?.interpolate(&Dof28::from_fn(&p1.tet, smooth))?;
        for (a, sa) in p0.sub.iter().enumerate().filter(|(_, s)| s.face == 3) {
            let b = p1.sub.iter().position(|s| s.face == 3 && s.edge == sa.edge).expect("shared face cone");
            res.merge(join_residuals(rng, &u0.pieces[a], &u1.pieces[b], 100)?);
        }
    }
    Ok((res, mismatch))
}

/// Four tetrahedra around an interior edge `0–1`, with perturbed vertices.
fn random_ring(rng: &mut impl Rng) -> Result<TetMesh> {
    let mut v = vec![[0.0, 0.0, -1.0], [0.0, 0.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, -1.0, 0.0]];
    for p in &mut v {
        for x in p.iter_mut() {
            *x += rng.random_range(-0.08..0.08);
        }
    }
    TetMesh::new(v, vec![[0, 1, 2, 3], [0, 1, 3, 4], [0, 1, 4, 5], [0, 1, 5, 2]])
}

fn corrections(rng: &mut impl Rng) -> Result<CorrectionReport> {
    let mut r = CorrectionReport::default();
    let wf = WfMesh::new(random_ring(rng)?)?;
    let xi = XiE::new(&wf, [0, 1])?;
    let v = &wf.mesh.vertices;
    r.xi_own_edge = (xi.edge_mean(v[0], v[1]) - 1.0).abs();
    for t in &wf.mesh.tets {
        for &(j, k) in &EDGES {
            if (t[j], t[k]) != (0, 1) {
                r.xi_other_edges = r.xi_other_edges.max(xi.edge_mean(v[t[j]], v[t[k]]).abs());
            }
        }
    }

    let pair = random_pair(rng)?;
    let z = ZetaF::new(&pair, [0, 1, 2])?;
    for side in 0..2 {
        let tet = pair.tet(side);
        for m in 0..4 {
            if z.is_own_face(side, m) {
                r.zeta_own_face = r.zeta_own_face.max((z.normal_mean(side, m, z.normal) - 1.0).abs());
            } else {
                r.zeta_other_faces = r.zeta_other_faces.max(z.normal_mean(side, m, tet.outward_normal(m)).abs());
            }
        }
    }

    let tet = random_tet(rng);
    let centroid = scale(0.25, tet.q.iter().fold([0.0; 3], |a, &p| add(a, p)));
    r.bubble_max = (eval_bt(&tet, centroid)? - 1.0).abs();
    for _ in 0..1000 {
        r.bubble_sampled_max = r.bubble_sampled_max.max(eval_bt(&tet, random_point(rng, &tet))?);
    }

    let s = tet.simplex()?;
    let rule = tetrahedron_rule(14);
    let random_quadratic = |rng: &mut dyn rand::RngCore| {
        super::bernstein::BernsteinPiece::new(s.clone(), 2, (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
    };
    for _ in 0..10 {
        let g = random_quadratic(rng)?;
        let vt = riesz_vt(&tet, |x| g.value(&x))?;
        for _ in 0..3 {
            let w = random_quadratic(rng)?;
            let lhs = rule.integrate(s.volume, |l| {
                65536.0 * l.iter().map(|x| x * x).product::<f64>() * vt.value_bary(l) * w.value_bary(l)
            });
            let rhs = rule.integrate(s.volume, |l| g.value_bary(l) * w.value_bary(l));
            r.riesz = r.riesz.max((lhs - rhs).abs());
        }
    }
    Ok(r)
}
