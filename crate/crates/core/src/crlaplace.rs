//! Extra-stabilised Crouzeix–Raviart discretisation of the Dirichlet
//! Laplacian, whose eigenvalues are lower bounds once `λ_h κ₁² h_max² ≤ 1`.
//!
//! The structure mirrors the Morley case with the Hessian replaced by the
//! gradient: the block unknown is `(u_pw, u_CR)` with `u_pw` discontinuous P1
//! (three vertex values per triangle, triangle-major), coupled by the weight
//! `κ₁⁻² h_T⁻²`. Eliminating `u_pw` gives `K u = λ Σ_T M_T/(1 − λ κ₁² h_T²) u`.

use crate::eigen::{secant_reduced, EigenOptions};
use crate::error::{GlbError, Result};
use crate::linalg::{clusters, solve_gevp, GevpSolver, PencilKind, SparseMatrix, SymmetricPencil};
use crate::afem::{ConvergenceHistory, HistoryRow};
use crate::mesh::{refine_uniform, MeshQuantities, Point2, Triangulation2D};
use crate::morley::{kappa, Simplex};

/// `κ₁` for the CR variant; only `n = 2` is supported.
///
/// This is the Morley `κ₁` with the Bessel-root Poincaré constant.
pub fn kappa1_for_cr(n: usize) -> Result<f64> {
    if n != 2 {
        return Err(GlbError::Input(format!("the Crouzeix–Raviart variant is two-dimensional, got n = {n}")));
    }
    Ok(kappa(2)?.kappa1)
}

/// `λ_CR / (1 + κ₁² λ_CR h_max²)`.
pub fn glb_cr(lambda_cr: f64, h_max: f64, kappa1: f64) -> f64 {
    lambda_cr / (1.0 + kappa1 * kappa1 * lambda_cr * h_max * h_max)
}

/// Midpoint-value dofs on interior edges.
#[derive(Debug, Clone, PartialEq)]
pub struct CrDofMap {
    pub edge_dofs: Vec<Option<usize>>,
    pub total: usize,
}

pub fn cr_dof_map(mesh: &Triangulation2D) -> CrDofMap {
    let mut next = 0;
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
    CrDofMap { edge_dofs, total: next }
}

/// Local CR data of one triangle. Local dof `i` lives on the edge opposite
/// vertex `i`, with basis `ψ_i = 1 − 2λ_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCr {
    pub stiffness: [[f64; 3]; 3],
    /// `∫ ψ_i ψ_j = |T|/3 δ_ij`.
    pub mass: [[f64; 3]; 3],
    /// P1 nodal mass `|T|/12 (1 + δ_ij)`.
    pub p1_mass: [[f64; 3]; 3],
}

/// Vertex values of `ψ_j`: `ψ_j(P_i) = 1 − 2δ_ij`.
pub fn cr_embed(i: usize, j: usize) -> f64 {
    if i == j {
        -1.0
    } else {
        1.0
    }
}

pub fn local_cr(p: [Point2; 3]) -> Result<LocalCr> {
    let s = Simplex::from_triangle(p)?;
    let area = s.volume;
    let mut stiffness = [[0.0; 3]; 3];
    let mut mass = [[0.0; 3]; 3];
    let mut p1_mass = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let g = s.grad_bary[i][0] * s.grad_bary[j][0] + s.grad_bary[i][1] * s.grad_bary[j][1];
            stiffness[i][j] = 4.0 * area * g;
            p1_mass[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
        mass[i][i] = area / 3.0;
    }
    Ok(LocalCr { stiffness, mass, p1_mass })
}

/// CR dof map, local matrices and mesh sizes of one triangulation.
pub struct CrSystem<'m> {
    pub mesh: &'m Triangulation2D,
    pub map: CrDofMap,
    pub local: Vec<LocalCr>,
    pub quantities: MeshQuantities,
}

impl<'m> CrSystem<'m> {
    pub fn new(mesh: &'m Triangulation2D) -> Result<Self> {
        let map = cr_dof_map(mesh);
        if map.total == 0 {
            return Err(GlbError::Input("the mesh has no interior edges".into()));
        }
        let local = (0..mesh.num_triangles()).map(|t| local_cr(mesh.triangle_points(t))).collect::<Result<_>>()?;
        Ok(Self { mesh, map, local, quantities: mesh.quantities() })
    }

    fn local_dofs(&self, t: usize) -> [Option<usize>; 3] {
        self.mesh.triangle_edges()[t].map(|e| self.map.edge_dofs[e])
    }

    fn assemble(&self, weight: impl Fn(usize) -> f64, select: impl Fn(&LocalCr) -> &[[f64; 3]; 3]) -> SparseMatrix {
        let mut t = Vec::with_capacity(9 * self.mesh.num_triangles());
        for (ti, lc) in self.local.iter().enumerate() {
            let w = weight(ti);
            let m = select(lc);
            let idx = self.local_dofs(ti);
            for i in 0..3 {
                let Some(gi) = idx[i] else { continue };
                for j in 0..3 {
                    if let Some(gj) = idx[j] {
                        t.push((gi, gj, w * m[i][j]));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.map.total, t).expect("dof indices are in range")
    }

    pub fn stiffness(&self) -> SparseMatrix {
        self.assemble(|_| 1.0, |l| &l.stiffness)
    }

    pub fn weighted_mass(&self, w: &[f64]) -> SparseMatrix {
        self.assemble(|t| w[t], |l| &l.mass)
    }

    pub fn mass(&self) -> SparseMatrix {
        self.assemble(|_| 1.0, |l| &l.mass)
    }

    /// `κ₁⁻² h_T⁻²` per triangle.
    pub fn stabilisation(&self, kappa1: f64) -> Vec<f64> {
        self.quantities.h_t.iter().map(|h| 1.0 / (kappa1 * kappa1 * h * h)).collect()
    }

    pub fn cr_pencil(&self) -> SymmetricPencil {
        SymmetricPencil { a: self.stiffness(), b: self.mass(), kind: PencilKind::Cr, rank_b: self.map.total }
    }

    pub fn stabilised_pencil(&self, kappa1: f64) -> SymmetricPencil {
        let nt = self.mesh.num_triangles();
        let off = 3 * nt;
        let n = off + self.map.total;
        let c = self.stabilisation(kappa1);
        let mut a = Vec::with_capacity(9 * 4 * nt);
        let mut b = Vec::with_capacity(9 * nt);
        for (t, lc) in self.local.iter().enumerate() {
            let idx = self.local_dofs(t);
            for p in 0..3 {
                for q in 0..3 {
                    a.push((3 * t + p, 3 * t + q, c[t] * lc.p1_mass[p][q]));
                    b.push((3 * t + p, 3 * t + q, lc.p1_mass[p][q]));
                }
                for j in 0..3 {
                    let Some(g) = idx[j] else { continue };
                    let pe: f64 = (0..3).map(|q| lc.p1_mass[p][q] * cr_embed(q, j)).sum();
                    a.push((3 * t + p, off + g, -c[t] * pe));
                    a.push((off + g, 3 * t + p, -c[t] * pe));
                }
            }
        }
        let k = self.stiffness();
        let m = self.weighted_mass(&c);
        for mat in [&k, &m] {
            for r in 0..mat.n {
                for i in mat.row_ptr[r]..mat.row_ptr[r + 1] {
                    a.push((off + r, off + mat.col_idx[i], mat.vals[i]));
                }
            }
        }
        SymmetricPencil {
            a: SparseMatrix::from_triplets(n, a).expect("indices in range"),
            b: SparseMatrix::from_triplets(n, b).expect("indices in range"),
            kind: PencilKind::Cr,
            rank_b: off,
        }
    }

    /// Piecewise P1 vertex values `u_pw = E u_CR / (1 − λ κ₁² h_T²)`.
    pub fn recover_pw(&self, u: &[f64], lambda_h: f64, kappa1: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(3 * self.mesh.num_triangles());
        for t in 0..self.mesh.num_triangles() {
            let c = self.local_dofs(t).map(|d| d.map_or(0.0, |g| u[g]));
            let s = 1.0 - lambda_h * kappa1 * kappa1 * self.quantities.h_t[t].powi(2);
            for i in 0..3 {
                out.push((0..3).map(|j| cr_embed(i, j) * c[j]).sum::<f64>() / s);
            }
        }
        out
    }
}

pub fn assemble_cr_pencil(mesh: &Triangulation2D) -> Result<SymmetricPencil> {
    Ok(CrSystem::new(mesh)?.cr_pencil())
}

pub fn assemble_cr_stabilised(mesh: &Triangulation2D, kappa1: f64) -> Result<SymmetricPencil> {
    Ok(CrSystem::new(mesh)?.stabilised_pencil(kappa1))
}

/// Eigenvalue `k` of the plain and the stabilised CR problem.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CrResult {
    pub k: usize,
    pub lambda_cr: f64,
    pub lambda_h: f64,
    pub glb: f64,
    pub condition_ok: bool,
    /// CR coefficients of the stabilised eigenvector.
    #[serde(skip)]
    pub eigvec_cr: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct CrEigen {
    pub results: Vec<CrResult>,
    pub h_max: f64,
    pub num_dofs: usize,
    pub clusters: Vec<Vec<usize>>,
    pub reduced: bool,
}

/// `λ_CR`, `λ_h`, the post-processed bound and the condition flag for
/// eigenvalues `1..=k`. The switch between the reduced problem and the block
/// pencil follows the Morley solver.
pub fn solve_cr_glb(mesh: &Triangulation2D, k: usize, opts: &EigenOptions) -> Result<CrEigen> {
    let kappa1 = kappa1_for_cr(2)?;
    let sys = CrSystem::new(mesh)?;
    let h_max = sys.quantities.h_max;
    let stiff = sys.stiffness();
    let solver = GevpSolver::new(&stiff, &opts.solver)?;
    let plain = solver.solve(&sys.mass(), sys.map.total, k, &[])?;
    let lambda_cr: Vec<f64> = plain.iter().map(|p| p.lambda).collect();
    let start: Vec<Vec<f64>> = plain.iter().map(|p| p.vector.clone()).collect();

    let reduced = lambda_cr[k - 1] * kappa1 * kappa1 * h_max * h_max < 1.0;
    let pairs: Vec<(f64, Vec<f64>)> = if reduced {
        let scale: Vec<f64> = sys.quantities.h_t.iter().map(|h| kappa1 * kappa1 * h * h).collect();
        secant_reduced(&solver, sys.map.total, &scale, |w| sys.weighted_mass(w), &lambda_cr, opts, &start)?
            .into_iter()
            .map(|r| (r.lambda_h, r.u_m))
            .collect()
    } else {
        let pencil = sys.stabilised_pencil(kappa1);
        let off = pencil.rank_b;
        solve_gevp(&pencil, k, &opts.solver)?.into_iter().map(|p| (p.lambda, p.vector[off..].to_vec())).collect()
    };
    let results: Vec<CrResult> = pairs
        .into_iter()
        .enumerate()
        .map(|(j, (lambda_h, eigvec_cr))| CrResult {
            k: j + 1,
            lambda_cr: lambda_cr[j],
            lambda_h,
            glb: glb_cr(lambda_cr[j], h_max, kappa1),
            condition_ok: lambda_h * kappa1 * kappa1 * h_max * h_max <= 1.0,
            eigvec_cr,
        })
        .collect();
    let lh: Vec<f64> = results.iter().map(|r| r.lambda_h).collect();
    Ok(CrEigen { clusters: clusters(&lh, opts.cluster_tol), results, h_max, num_dofs: sys.map.total, reduced })
}

/// A uniform-refinement history of eigenvalue `k`. The columns `lambdaM`,
/// `lambdaH` and `glb` hold `λ_CR`, `λ_h` and the post-processed bound; the
/// refinement stops after `levels` refinements or before a mesh with more
/// than `max_dofs` CR dofs.
pub fn cr_uniform_history(
    mesh0: &Triangulation2D,
    k: usize,
    levels: usize,
    max_dofs: usize,
    opts: &EigenOptions,
) -> Result<ConvergenceHistory> {
    if k == 0 {
        return Err(GlbError::Input("eigenvalue index k starts at 1".into()));
    }
    let mut mesh = mesh0.clone();
    let mut rows = Vec::new();
    for level in 0..=levels {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        let n = cr_dof_map(&mesh).total;
        if n > max_dofs || n < k {
            if level == 0 {
                return Err(GlbError::Input(format!("initial mesh has {n} CR dofs, budget {max_dofs}, k = {k}")));
            }
            break;
        }
        let sol = solve_cr_glb(&mesh, k, opts)?;
        let r = &sol.results[k - 1];
        rows.push(HistoryRow {
            level,
            num_triangles: mesh.num_triangles(),
            num_dofs: n,
            h_max: sol.h_max,
            lambda_m: r.lambda_cr,
            lambda_h: r.lambda_h,
            glb: r.glb,
            eta_total: None,
            condition_ok: r.condition_ok,
        });
    }
    Ok(ConvergenceHistory { k, theta: 1.0, rows, method: Some("cr".into()) })
}
