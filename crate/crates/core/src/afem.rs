//! Adaptive loop: residual estimator of the Morley eigenfunction, Dörfler
//! marking, newest-vertex bisection and the convergence history.

use crate::eigen::{solve_all_warm, EigenOptions, MorleySystem};
use crate::error::{GlbError, Result};
use crate::mesh::{refine_nvb, refine_uniform, Triangulation2D, NONE};
use crate::morley::dof_map;
use rayon::prelude::*;
use std::fmt::Write as _;

/// Per-triangle squared estimator contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorField {
    pub eta_sq: Vec<f64>,
    pub total: f64,
}

impl EstimatorField {
    pub fn new(eta_sq: Vec<f64>) -> Self {
        let total = eta_sq.iter().sum();
        Self { eta_sq, total }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorOptions {
    /// Boundary edges contribute `|F| |D²u_M τ_F|²`; off drops them.
    pub boundary_jumps: bool,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { boundary_jumps: true }
    }
}

/// Constant Hessian of the Morley function `u_m` on every triangle.
pub fn piecewise_hessians(sys: &MorleySystem, u_m: &[f64]) -> Vec<[[f64; 2]; 2]> {
    (0..sys.mesh.num_triangles())
        .map(|t| {
            let c = sys.map.gather(sys.mesh, t, u_m);
            let mut h = [[0.0; 2]; 2];
            for (ci, hi) in c.iter().zip(&sys.local[t].hessians) {
                for r in 0..2 {
                    for s in 0..2 {
                        h[r][s] += ci * hi[r][s];
                    }
                }
            }
            h
        })
        .collect()
}

/// `η²(T) = |T|² λ_h² ‖u_M‖²_{L²(T)} + |T|^{1/2} Σ_{F⊂∂T} |F| |[D²u_M]_F τ_F|²`.
///
/// The jump is constant on each edge, so its edge integral is exact. On a
/// boundary edge the jump is the one-sided trace.
pub fn estimator(sys: &MorleySystem, lambda_h: f64, u_m: &[f64], opts: EstimatorOptions) -> Result<EstimatorField> {
    if u_m.len() != sys.map.total {
        return Err(GlbError::Input(format!("u_M has {} entries, the Morley space {}", u_m.len(), sys.map.total)));
    }
    let mesh = sys.mesh;
    let hess = piecewise_hessians(sys, u_m);
    let edge_jump: Vec<f64> = (0..mesh.num_edges())
        .map(|e| {
            let [t0, t1] = mesh.edge_triangles()[e];
            if t1 == NONE && !opts.boundary_jumps {
                return 0.0;
            }
            let mut j = hess[t0];
            if t1 != NONE {
                for r in 0..2 {
                    for s in 0..2 {
                        j[r][s] -= hess[t1][r][s];
                    }
                }
            }
            let [a, b] = mesh.edges()[e];
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let len = mesh.edge_length(e);
            let tau = [(pb[0] - pa[0]) / len, (pb[1] - pa[1]) / len];
            let jt = [j[0][0] * tau[0] + j[0][1] * tau[1], j[1][0] * tau[0] + j[1][1] * tau[1]];
            len * (jt[0] * jt[0] + jt[1] * jt[1])
        })
        .collect();
    let eta_sq = (0..mesh.num_triangles())
        .into_par_iter()
        .map(|t| {
            let area = sys.quantities.area_t[t];
            let c = sys.map.gather(mesh, t, u_m);
            let m = &sys.local[t].mass;
            let l2: f64 = (0..6).map(|i| (0..6).map(|j| c[i] * m[i][j] * c[j]).sum::<f64>()).sum();
            let jumps: f64 = mesh.triangle_edges()[t].iter().map(|&e| edge_jump[e]).sum();
            area * area * lambda_h * lambda_h * l2 + area.sqrt() * jumps
        })
        .collect();
    Ok(EstimatorField::new(eta_sq))
}

/// Smallest set, chosen greedily by descending `η²` (ties by id), whose sum
/// reaches `θ · total`. Returned sorted by id.
pub fn mark_doerfler(eta: &EstimatorField, theta: f64) -> Result<Vec<usize>> {
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(GlbError::Input(format!("bulk parameter θ = {theta} outside (0, 1]")));
    }
    let mut order: Vec<usize> = (0..eta.eta_sq.len()).collect();
    order.sort_by(|&a, &b| eta.eta_sq[b].total_cmp(&eta.eta_sq[a]).then(a.cmp(&b)));
    let goal = theta * eta.total;
    let mut sum = 0.0;
    let mut marked = Vec::new();
    for t in order {
        if sum >= goal || eta.eta_sq[t] <= 0.0 {
            break;
        }
        sum += eta.eta_sq[t];
        marked.push(t);
    }
    marked.sort_unstable();
    Ok(marked)
}

/// One level of a convergence history.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct HistoryRow {
    pub level: usize,
    pub num_triangles: usize,
    pub num_dofs: usize,
    pub h_max: f64,
    pub lambda_m: f64,
    pub lambda_h: f64,
    pub glb: f64,
    /// `None` where no estimator was computed.
    pub eta_total: Option<f64>,
    pub condition_ok: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceHistory {
    pub k: usize,
    pub theta: f64,
    pub rows: Vec<HistoryRow>,
    /// Appended as a trailing `method` column when set.
    pub method: Option<String>,
}

pub const CSV_HEADER: &str = "level,nT,hmax,lambdaM,lambdaH,glb,eta2,cond";

impl ConvergenceHistory {
    /// CSV with shortest round-trip decimal representation of every value.
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CSV_HEADER);
        if self.method.is_some() {
            s.push_str(",method");
        }
        s.push('\n');
        for r in &self.rows {
            let eta = r.eta_total.map(|v| format!("{v:?}")).unwrap_or_default();
            let _ = write!(
                s,
                "{},{},{:?},{:?},{:?},{:?},{},{}",
                r.level, r.num_triangles, r.h_max, r.lambda_m, r.lambda_h, r.glb, eta, r.condition_ok
            );
            if let Some(m) = &self.method {
                let _ = write!(s, ",{m}");
            }
            s.push('\n');
        }
        s
    }

    /// Least-squares slope of `−log err` against `log |T|` over the last
    /// `last` rows with positive error.
    pub fn empirical_rate(&self, err: impl Fn(&HistoryRow) -> f64, last: usize) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .filter(|r| err(r) > 0.0)
            .map(|r| ((r.num_triangles as f64).ln(), err(r).ln()))
            .collect();
        fit_rate(&pts[pts.len().saturating_sub(last)..])
    }
}

/// `−slope` of the least-squares line through `(log x, log y)` points.
pub fn fit_rate(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Which eigenpair drives the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Driver {
    /// `(λ_M, u_M)` of the plain Morley problem.
    Morley,
    /// `(λ_h, u_M)` of the extra-stabilised problem.
    #[default]
    Stabilised,
}

#[derive(Debug, Clone)]
pub struct AfemOptions {
    /// 1-based eigenvalue index driving the refinement.
    pub k: usize,
    /// Bulk parameter; `θ = 1` refines uniformly.
    pub theta: f64,
    /// Stop before a mesh with more Morley dofs than this.
    pub max_dofs: usize,
    pub max_levels: usize,
    pub eigen: EigenOptions,
    pub estimator: EstimatorOptions,
    pub driver: Driver,
}

impl Default for AfemOptions {
    fn default() -> Self {
        Self {
            k: 1,
            theta: 0.5,
            max_dofs: 200_000,
            max_levels: 200,
            eigen: EigenOptions::default(),
            estimator: EstimatorOptions::default(),
            driver: Driver::default(),
        }
    }
}

fn at_level(level: usize, e: GlbError) -> GlbError {
    match e {
        GlbError::Iteration { iterations, msg } => GlbError::Iteration { iterations, msg: format!("level {level}: {msg}") },
        GlbError::Condition(m) => GlbError::Condition(format!("level {level}: {m}")),
        GlbError::Factorization(m) => GlbError::Factorization(format!("level {level}: {m}")),
        other => other,
    }
}

/// Solve, estimate, mark and refine until the next mesh exceeds the dof budget.
///
/// `on_level` sees every finished row, e.g. for progress output.
pub fn afem_loop(
    mesh0: &Triangulation2D,
    opts: &AfemOptions,
    mut on_level: impl FnMut(&HistoryRow, &Triangulation2D),
) -> Result<(ConvergenceHistory, Triangulation2D)> {
    if opts.k == 0 {
        return Err(GlbError::Input("eigenvalue index k starts at 1".into()));
    }
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return Err(GlbError::Input(format!("bulk parameter θ = {} outside (0, 1]", opts.theta)));
    }
    let mut mesh = mesh0.clone();
    let mut rows = Vec::new();
    for level in 0..opts.max_levels {
        let n = dof_map(&mesh).total;
        if n > opts.max_dofs || n < opts.k {
            if level == 0 {
                return Err(GlbError::Input(format!("initial mesh has {n} dofs, budget {}", opts.max_dofs)));
            }
            break;
        }
        let sol = solve_all_warm(&mesh, opts.k, &opts.eigen, &[]).map_err(|e| at_level(level, e))?;
        let r = &sol.results[opts.k - 1];
        let sys = MorleySystem::new(&mesh)?;
        let eta = match opts.driver {
            Driver::Morley => estimator(&sys, r.lambda_m, &r.eigvec_morley, opts.estimator)?,
            Driver::Stabilised => {
                // The estimator sees the Morley component normalised in L².
                let norm = sys.mass().inner(&r.eigvec_m, &r.eigvec_m).sqrt();
                let u: Vec<f64> = r.eigvec_m.iter().map(|x| x / norm).collect();
                estimator(&sys, r.lambda_h, &u, opts.estimator)?
            }
        };
        let row = HistoryRow {
            level,
            num_triangles: mesh.num_triangles(),
            num_dofs: n,
            h_max: sol.h_max,
            lambda_m: r.lambda_m,
            lambda_h: r.lambda_h,
            glb: r.glb,
            eta_total: Some(eta.total),
            condition_ok: r.condition_ok,
        };
        on_level(&row, &mesh);
        rows.push(row);
        mesh = if opts.theta >= 1.0 { refine_uniform(&mesh) } else { refine_nvb(&mesh, &mark_doerfler(&eta, opts.theta)?)? };
    }
    Ok((ConvergenceHistory { k: opts.k, theta: opts.theta, rows, method: None }, mesh))
}

/// Eigenvalue `k` on `mesh0` and `levels` uniform refinements of it, without
/// estimator.
pub fn uniform_history(mesh0: &Triangulation2D, k: usize, levels: usize, eigen: &EigenOptions) -> Result<ConvergenceHistory> {
    if k == 0 {
        return Err(GlbError::Input("eigenvalue index k starts at 1".into()));
    }
    let mut mesh = mesh0.clone();
    let mut rows = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        if level > 0 {
            mesh = refine_uniform(&mesh);
        }
        let sol = solve_all_warm(&mesh, k, eigen, &[]).map_err(|e| at_level(level, e))?;
        let r = &sol.results[k - 1];
        rows.push(HistoryRow {
            level,
            num_triangles: mesh.num_triangles(),
            num_dofs: sol.num_dofs,
            h_max: sol.h_max,
            lambda_m: r.lambda_m,
            lambda_h: r.lambda_h,
            glb: r.glb,
            eta_total: None,
            condition_ok: r.condition_ok,
        });
    }
    Ok(ConvergenceHistory { k, theta: 1.0, rows, method: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doerfler_hand_example() {
        let eta = EstimatorField::new(vec![4.0, 3.0, 2.0, 1.0]);
        assert_eq!(mark_doerfler(&eta, 0.5).unwrap(), vec![0, 1]);
        assert_eq!(mark_doerfler(&eta, 1.0).unwrap(), vec![0, 1, 2, 3]);
        assert!(mark_doerfler(&eta, 0.0).is_err());
    }

    #[test]
    fn doerfler_skips_zero_contributions() {
        let eta = EstimatorField::new(vec![0.0, 5.0, 0.0, 1.0]);
        assert_eq!(mark_doerfler(&eta, 1.0).unwrap(), vec![1, 3]);
        assert_eq!(mark_doerfler(&EstimatorField::new(vec![10.0, 1.0, 1.0]), 0.5).unwrap(), vec![0]);
    }

    #[test]
    fn ties_break_by_id() {
        let eta = EstimatorField::new(vec![1.0, 2.0, 2.0, 2.0]);
        assert_eq!(mark_doerfler(&eta, 0.3).unwrap(), vec![1, 2]);
    }

    #[test]
    fn rate_of_power_law() {
        let pts: Vec<(f64, f64)> = [10.0f64, 40.0, 160.0].iter().map(|&n| (n.ln(), (3.0 * n.powf(-0.7)).ln())).collect();
        assert!((fit_rate(&pts).unwrap() - 0.7).abs() < 1e-12);
        assert!(fit_rate(&pts[..1]).is_none());
    }

    #[test]
    fn csv_has_fixed_header() {
        let h = ConvergenceHistory {
            k: 1,
            theta: 1.0,
            rows: vec![HistoryRow {
                level: 0,
                num_triangles: 2,
                num_dofs: 1,
                h_max: 1.5,
                lambda_m: 0.1,
                lambda_h: 0.05,
                glb: 0.05,
                eta_total: None,
                condition_ok: true,
            }],
            method: Some("cr".into()),
        };
        let csv = h.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "level,nT,hmax,lambdaM,lambdaH,glb,eta2,cond,method");
        assert_eq!(lines.next().unwrap(), "0,2,1.5,0.1,0.05,0.05,,true,cr");
    }
}
