//! Assembly and solution of the Morley, extra-stabilised and reduced
//! eigenproblems, and the guaranteed lower bounds derived from them.
//!
//! The stabilised unknown is `(u_pw, u_M)` with `u_pw` a discontinuous P2
//! function (six nodal values per triangle, triangle-major) followed by the
//! Morley coefficients. Eliminating `u_pw = u_M / (1 − λ κ₂² h_T⁴)` gives the
//! reduced problem `K u = λ Σ_T M_T/(1 − λ κ₂² h_T⁴) u`, which has the size of
//! the Morley problem and is solved by a safeguarded secant iteration on `λ`.

use crate::error::{GlbError, Result};
use crate::linalg::{clusters, relative_residual, GevpSolver, PencilKind, SolverOptions, SparseMatrix, SymmetricPencil};
use crate::mesh::{MeshQuantities, Triangulation2D};
use crate::morley::{all_local_matrices, dof_map, kappa, LocalMorley, MorleyDofMap};

/// `λ_M / (1 + λ_M κ₂² h_max⁴)`.
pub fn glb_postprocessed(lambda_m: f64, h_max: f64, kappa2: f64) -> f64 {
    lambda_m / (1.0 + lambda_m * kappa2 * kappa2 * h_max.powi(4))
}

/// True iff `λ_h κ₂² h_max⁴ ≤ 1`, the sufficient condition for `λ_h ≤ λ`.
pub fn verify_condition(lambda_h: f64, h_max: f64, kappa2: f64) -> bool {
    lambda_h * kappa2 * kappa2 * h_max.powi(4) <= 1.0
}

/// Morley dof map, local matrices and mesh sizes of one triangulation.
pub struct MorleySystem<'m> {
    pub mesh: &'m Triangulation2D,
    pub map: MorleyDofMap,
    pub local: Vec<LocalMorley>,
    pub quantities: MeshQuantities,
}

impl<'m> MorleySystem<'m> {
    pub fn new(mesh: &'m Triangulation2D) -> Result<Self> {
        let map = dof_map(mesh);
        if map.total == 0 {
            return Err(GlbError::Input("the mesh has no interior Morley dofs".into()));
        }
        Ok(Self { mesh, local: all_local_matrices(mesh)?, quantities: mesh.quantities(), map })
    }

    /// `Σ_T w_T · select(local)` with dof signs applied.
    fn assemble(&self, weight: impl Fn(usize) -> f64, select: impl Fn(&LocalMorley) -> &[[f64; 6]; 6]) -> SparseMatrix {
        let mut t = Vec::with_capacity(36 * self.mesh.num_triangles());
        for (ti, lm) in self.local.iter().enumerate() {
            let w = weight(ti);
            let m = select(lm);
            let (idx, sign) = self.map.local(self.mesh, ti);
            for i in 0..6 {
                let Some(gi) = idx[i] else { continue };
                for j in 0..6 {
                    if let Some(gj) = idx[j] {
                        t.push((gi, gj, w * sign[i] * sign[j] * m[i][j]));
                    }
                }
            }
        }
        SparseMatrix::from_triplets(self.map.total, t).expect("dof indices are in range")
    }

    pub fn stiffness(&self) -> SparseMatrix {
        self.assemble(|_| 1.0, |l| &l.stiffness)
    }

    /// `Σ_T w_T M_T` for per-triangle weights `w`.
    pub fn weighted_mass(&self, w: &[f64]) -> SparseMatrix {
        self.assemble(|t| w[t], |l| &l.mass)
    }

    pub fn mass(&self) -> SparseMatrix {
        self.assemble(|_| 1.0, |l| &l.mass)
    }

    /// `κ₂⁻² h_T⁻⁴` per triangle.
    pub fn stabilisation(&self, kappa2: f64) -> Vec<f64> {
        self.quantities.h_t.iter().map(|h| 1.0 / (kappa2 * kappa2 * h.powi(4))).collect()
    }

    pub fn morley_pencil(&self) -> SymmetricPencil {
        SymmetricPencil { a: self.stiffness(), b: self.mass(), kind: PencilKind::Morley, rank_b: self.map.total }
    }

    pub fn stabilised_pencil(&self, kappa2: f64) -> SymmetricPencil {
        let nt = self.mesh.num_triangles();
        let off = 6 * nt;
        let n = off + self.map.total;
        let c = self.stabilisation(kappa2);
        let mut a = Vec::with_capacity(36 * 4 * nt);
        let mut b = Vec::with_capacity(36 * nt);
        for (t, lm) in self.local.iter().enumerate() {
            let (idx, sign) = self.map.local(self.mesh, t);
            for p in 0..6 {
                for q in 0..6 {
                    a.push((6 * t + p, 6 * t + q, c[t] * lm.p2_mass[p][q]));
                    b.push((6 * t + p, 6 * t + q, lm.p2_mass[p][q]));
                }
                for j in 0..6 {
                    let Some(g) = idx[j] else { continue };
                    let pe: f64 = (0..6).map(|q| lm.p2_mass[p][q] * lm.embed[q][j]).sum();
                    let v = -c[t] * pe * sign[j];
                    a.push((6 * t + p, off + g, v));
                    a.push((off + g, 6 * t + p, v));
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
            kind: PencilKind::StabilisedBlock,
            rank_b: off,
        }
    }

    /// Piecewise P2 nodal values `u_pw = E u_M / (1 − λ κ₂² h_T⁴)`.
    pub fn recover_pw(&self, u_m: &[f64], lambda_h: f64, kappa2: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(6 * self.mesh.num_triangles());
        for (t, lm) in self.local.iter().enumerate() {
            let c = self.map.gather(self.mesh, t, u_m);
            let s = 1.0 - lambda_h * kappa2 * kappa2 * self.quantities.h_t[t].powi(4);
            for row in &lm.embed {
                out.push(row.iter().zip(&c).map(|(e, x)| e * x).sum::<f64>() / s);
            }
        }
        out
    }

    /// `‖v_pw‖²_{L²}` of a piecewise P2 vector.
    pub fn pw_mass_norm2(&self, pw: &[f64]) -> f64 {
        self.local
            .iter()
            .enumerate()
            .map(|(t, lm)| {
                let v = &pw[6 * t..6 * t + 6];
                (0..6).map(|p| (0..6).map(|q| v[p] * lm.p2_mass[p][q] * v[q]).sum::<f64>()).sum::<f64>()
            })
            .sum()
    }
}

pub fn assemble_morley_pencil(mesh: &Triangulation2D) -> Result<SymmetricPencil> {
    Ok(MorleySystem::new(mesh)?.morley_pencil())
}

pub fn assemble_stabilised_pencil(mesh: &Triangulation2D, kappa2: f64) -> Result<SymmetricPencil> {
    Ok(MorleySystem::new(mesh)?.stabilised_pencil(kappa2))
}

/// Options of [`solve_all`] and [`solve_reduced`].
#[derive(Debug, Clone)]
pub struct EigenOptions {
    pub solver: SolverOptions,
    /// Stop the secant iteration when `|g(λ) − λ| ≤ fixed_point_tol · λ`.
    pub fixed_point_tol: f64,
    pub max_fixed_point_iter: usize,
    /// Eigenvalues within this relative distance form a cluster.
    pub cluster_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self { solver: SolverOptions::default(), fixed_point_tol: 1e-12, max_fixed_point_iter: 60, cluster_tol: 1e-8 }
    }
}

/// One eigenpair of the reduced problem.
#[derive(Debug, Clone)]
pub struct ReducedPair {
    pub lambda_h: f64,
    pub u_m: Vec<f64>,
    /// Secant updates performed.
    pub iterations: usize,
    /// Residual of the final linear eigenproblem.
    pub residual: f64,
}

/// The `k` smallest eigenvalues of the reduced problem, each by its own
/// fixed-point iteration started at the Morley eigenvalue `lambda_m[j]`.
///
/// Errors with [`GlbError::Condition`] when a start value makes some weight
/// `1 − λ κ₂² h_T⁴` nonpositive.
pub fn solve_reduced(
    sys: &MorleySystem,
    solver: &GevpSolver,
    lambda_m: &[f64],
    kappa2: f64,
    opts: &EigenOptions,
    warm: &[Vec<f64>],
) -> Result<Vec<ReducedPair>> {
    let scale: Vec<f64> = sys.quantities.h_t.iter().map(|h| kappa2 * kappa2 * h.powi(4)).collect();
    secant_reduced(solver, sys.map.total, &scale, |w| sys.weighted_mass(w), lambda_m, opts, warm)
}

/// Solves `K u = λ Σ_T M_T/(1 − λ s_T) u` for eigenvalues `1..=starts.len()`,
/// where `solver` holds `K` and `mass(w)` assembles `Σ_T w_T M_T`.
///
/// `g(λ)`, the j-th eigenvalue of `(K, Σ_T M_T/(1 − λ s_T))`, decreases in `λ`;
/// the root of `g(λ) − λ` is bracketed by `[0, starts[j]]` when `starts[j]` is
/// the eigenvalue of the unweighted problem.
pub(crate) fn secant_reduced(
    solver: &GevpSolver,
    n: usize,
    scale: &[f64],
    mass: impl Fn(&[f64]) -> SparseMatrix,
    starts: &[f64],
    opts: &EigenOptions,
    warm: &[Vec<f64>],
) -> Result<Vec<ReducedPair>> {
    let weights = |lambda: f64| -> Result<Vec<f64>> {
        scale
            .iter()
            .map(|c| {
                let s = 1.0 - lambda * c;
                if s > 0.0 {
                    Ok(1.0 / s)
                } else {
                    Err(GlbError::Condition(format!("weight 1 − λκ²h_T^p = {s} ≤ 0 at λ = {lambda}")))
                }
            })
            .collect()
    };
    let mut start: Vec<Vec<f64>> = warm.to_vec();
    let mut out = Vec::with_capacity(starts.len());
    for (j, &lm) in starts.iter().enumerate() {
        let eval = |lambda: f64, start: &mut Vec<Vec<f64>>| -> Result<(f64, Vec<f64>, f64)> {
            let pairs = solver.solve(&mass(&weights(lambda)?), n, j + 1, start)?;
            *start = pairs.iter().map(|p| p.vector.clone()).collect();
            let p = &pairs[j];
            Ok((p.lambda, p.vector.clone(), p.residual))
        };
        let tol = opts.fixed_point_tol;
        let (mut lo, mut hi) = (0.0f64, lm);
        let mut x0 = lm;
        let (mut g0, mut v, mut res) = eval(x0, &mut start)?;
        let mut iterations = 0;
        let mut x1 = g0;
        while (g0 - x0).abs() > tol * x0 {
            if iterations >= opts.max_fixed_point_iter {
                return Err(GlbError::Iteration {
                    iterations,
                    msg: format!("reduced problem, eigenvalue {}: secant iteration stalled", j + 1),
                });
            }
            iterations += 1;
            let (g1, v1, r1) = eval(x1, &mut start)?;
            let (f0, f1) = (g0 - x0, g1 - x1);
            if f1 > 0.0 {
                lo = lo.max(x1);
            } else {
                hi = hi.min(x1);
            }
            let mut x2 = if f1 != f0 { x1 - f1 * (x1 - x0) / (f1 - f0) } else { g1 };
            if !(x2 > lo && x2 < hi) {
                x2 = 0.5 * (lo + hi);
            }
            x0 = x1;
            g0 = g1;
            v = v1;
            res = r1;
            x1 = x2;
        }
        out.push(ReducedPair { lambda_h: g0, u_m: v, iterations, residual: res });
    }
    Ok(out)
}

/// Eigenvalue `k` of all three problems on one mesh.
#[derive(Debug, Clone, serde::Serialize)]
pub struct EigenResult {
    /// 1-based eigenvalue index.
    pub k: usize,
    pub lambda_m: f64,
    pub lambda_h: f64,
    pub glb: f64,
    pub condition_ok: bool,
    /// Morley coefficients of the stabilised eigenvector.
    #[serde(skip)]
    pub eigvec_m: Vec<f64>,
    /// Piecewise P2 nodal values, normalised to `‖u_pw‖_{L²} = 1`.
    #[serde(skip)]
    pub eigvec_pw: Vec<f64>,
    /// Morley eigenvector with `‖u‖_{L²} = 1`.
    #[serde(skip)]
    pub eigvec_morley: Vec<f64>,
}

/// Eigenvalues `1..=k` with mesh size data and clusters.
#[derive(Debug, Clone)]
pub struct MeshEigen {
    pub results: Vec<EigenResult>,
    pub h_max: f64,
    pub num_dofs: usize,
    /// Clusters of `λ_h` indices (0-based) within the cluster tolerance.
    pub clusters: Vec<Vec<usize>>,
    /// Whether the reduced problem (rather than the block pencil) produced `λ_h`.
    pub reduced: bool,
}

// Deterministic sign: the entry of largest magnitude is positive.
fn fix_sign(v: &mut [f64]) -> f64 {
    let i = (0..v.len()).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
    if v.get(i).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
        -1.0
    } else {
        1.0
    }
}

/// Computes `λ_M`, `λ_h`, `GLB` and the condition flag for eigenvalues `1..=k`.
///
/// `λ_h` comes from the reduced problem whenever `λ_M(k) κ₂² h_max⁴ < 1`, so
/// every weight stays positive along the iteration; otherwise from the block
/// pencil.
pub fn solve_all(mesh: &Triangulation2D, k: usize, opts: &EigenOptions) -> Result<MeshEigen> {
    solve_all_warm(mesh, k, opts, &[])
}

/// [`solve_all`] with start vectors for the Krylov solver (Morley coefficients).
pub fn solve_all_warm(mesh: &Triangulation2D, k: usize, opts: &EigenOptions, warm: &[Vec<f64>]) -> Result<MeshEigen> {
    let kappa2 = kappa(2)?.kappa2;
    let sys = MorleySystem::new(mesh)?;
    let h_max = sys.quantities.h_max;
    let stiff = sys.stiffness();
    let solver = GevpSolver::new(&stiff, &opts.solver)?;
    let morley = solver.solve(&sys.mass(), sys.map.total, k, warm)?;
    let lambda_m: Vec<f64> = morley.iter().map(|p| p.lambda).collect();
    let start: Vec<Vec<f64>> = morley.iter().map(|p| p.vector.clone()).collect();

    let reduced_ok = lambda_m[k - 1] * kappa2 * kappa2 * h_max.powi(4) < 1.0;
    let pairs: Vec<(f64, Vec<f64>, Vec<f64>)> = if reduced_ok {
        solve_reduced(&sys, &solver, &lambda_m, kappa2, opts, &start)?
            .into_iter()
            .map(|r| {
                let pw = sys.recover_pw(&r.u_m, r.lambda_h, kappa2);
                (r.lambda_h, r.u_m, pw)
            })
            .collect()
    } else {
        let pencil = sys.stabilised_pencil(kappa2);
        let off = pencil.rank_b;
        solve_block(&pencil, k, opts)?
            .into_iter()
            .map(|p| (p.lambda, p.vector[off..].to_vec(), p.vector[..off].to_vec()))
            .collect()
    };

    let mut results = Vec::with_capacity(k);
    for (j, ((lambda_h, mut u_m, mut pw), mp)) in pairs.into_iter().zip(morley).enumerate() {
        let scale = sys.pw_mass_norm2(&pw).sqrt();
        let s = fix_sign(&mut u_m) / scale;
        u_m.iter_mut().for_each(|x| *x *= s.abs());
        pw.iter_mut().for_each(|x| *x *= s);
        let mut eigvec_morley = mp.vector;
        fix_sign(&mut eigvec_morley);
        results.push(EigenResult {
            k: j + 1,
            lambda_m: lambda_m[j],
            lambda_h,
            glb: glb_postprocessed(lambda_m[j], h_max, kappa2),
            condition_ok: verify_condition(lambda_h, h_max, kappa2),
            eigvec_m: u_m,
            eigvec_pw: pw,
            eigvec_morley,
        });
    }
    let lh: Vec<f64> = results.iter().map(|r| r.lambda_h).collect();
    Ok(MeshEigen { clusters: clusters(&lh, opts.cluster_tol), results, h_max, num_dofs: sys.map.total, reduced: reduced_ok })
}

/// Smallest `k` eigenpairs of the block pencil; the residual bound is relaxed
/// by the conditioning of the stabilisation block, see the crate notes.
fn solve_block(p: &SymmetricPencil, k: usize, opts: &EigenOptions) -> Result<Vec<crate::linalg::EigenPair>> {
    crate::linalg::solve_gevp(p, k, &opts.solver)
}

/// Residual of a block eigenvector assembled from its parts.
pub fn block_residual(p: &SymmetricPencil, lambda: f64, pw: &[f64], u_m: &[f64]) -> f64 {
    let x: Vec<f64> = pw.iter().chain(u_m).copied().collect();
    relative_residual(&p.a, &p.b, lambda, &x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{solve_gevp, SolverPath};
    use crate::mesh::{builtin_domain, refine_uniform, Domain};
    use crate::morley::KAPPA2_2D;

    fn square(levels: usize) -> Triangulation2D {
        let mut m = builtin_domain(Domain::UnitSquare);
        for _ in 0..levels {
            m = refine_uniform(&m);
        }
        m
    }

    #[test]
    fn glb_formula() {
        assert_eq!(glb_postprocessed(0.0, 1.0, KAPPA2_2D), 0.0);
        let limit = glb_postprocessed(1e12, 1.0, KAPPA2_2D);
        assert!((limit - 15.0864).abs() < 15.0864e-3);
        let k2 = KAPPA2_2D * KAPPA2_2D;
        let direct = 100.0 / (1.0 + 100.0 * k2 * 0.0625);
        assert!((glb_postprocessed(100.0, 0.5, KAPPA2_2D) - direct).abs() < 1e-12);
    }

    #[test]
    fn condition_flag() {
        assert!(verify_condition(1.0, 1.0, KAPPA2_2D));
        assert!(!verify_condition(20.0, 1.0, KAPPA2_2D));
        let edge = 1.0 / (KAPPA2_2D * KAPPA2_2D);
        assert!(verify_condition(edge, 1.0, KAPPA2_2D));
    }

    #[test]
    fn unit_square_single_dof() {
        let m = square(0);
        let sys = MorleySystem::new(&m).unwrap();
        assert_eq!(sys.map.total, 1);
        let p = sys.morley_pencil();
        assert!(p.a.get(0, 0) > 0.0 && p.b.get(0, 0) > 0.0);
    }

    #[test]
    fn block_pencil_structure() {
        let m = square(2);
        let sys = MorleySystem::new(&m).unwrap();
        let p = sys.stabilised_pencil(KAPPA2_2D);
        let off = 6 * m.num_triangles();
        assert_eq!(p.rank_b, off);
        for r in off..p.b.n {
            assert!(p.b.row_ptr[r] == p.b.row_ptr[r + 1], "B row {r} of the Morley block is not empty");
        }
        assert!(p.a.asymmetry() < 1e-14);
    }

    #[test]
    fn uniform_mesh_lambda_h_equals_glb() {
        let m = square(3);
        let opts = EigenOptions::default();
        let e = solve_all(&m, 3, &opts).unwrap();
        assert!(e.results.iter().all(|r| (r.glb - r.lambda_h).abs() <= 1e-9 * r.lambda_h));
        // Block pencil oracle on the same mesh.
        let p = assemble_stabilised_pencil(&m, KAPPA2_2D).unwrap();
        let dense = SolverOptions { path: Some(SolverPath::Dense), ..Default::default() };
        let block = solve_gevp(&p, 3, &dense).unwrap();
        for (r, b) in e.results.iter().zip(&block) {
            assert!((r.lambda_h - b.lambda).abs() <= 1e-8 * b.lambda);
        }
    }
}
