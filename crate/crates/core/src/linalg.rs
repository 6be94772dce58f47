//! Sparse symmetric matrices and the generalized eigensolver `A x = λ B x`
//! with `A` positive definite and `B` positive semidefinite.
//!
//! Both paths work on the inverted pencil `B x = μ A x` and report `λ = 1/μ`
//! for the largest `μ > 0`, so a singular `B` never needs a factorisation.
//! The dense path reduces to a standard symmetric problem through the Cholesky
//! factor of `A`. The sparse path is a block Krylov method for `A⁻¹B`, which is
//! self-adjoint in the `A` inner product, with Rayleigh–Ritz extraction and
//! restarts that keep the wanted Ritz vectors.

use crate::error::{GlbError, Result};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Llt as SparseLlt, SymbolicLlt};
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A square sparse matrix in compressed sparse row form, duplicates summed.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
}

impl SparseMatrix {
    /// Builds the matrix from `(row, col, value)` triplets; duplicates are summed
    /// in the order given, so the result is deterministic.
    pub fn from_triplets(n: usize, mut t: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = t.iter().find(|(r, c, _)| *r >= n || *c >= n) {
            return Err(GlbError::Input(format!("entry ({r}, {c}) outside a {n}×{n} matrix")));
        }
        // Stable sort keeps the summation order of duplicates fixed.
        t.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut col_idx = Vec::with_capacity(t.len());
        let mut vals: Vec<f64> = Vec::with_capacity(t.len());
        let mut last = None;
        for (r, c, v) in t {
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry exists") += v;
            } else {
                col_idx.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        Ok(Self { n, row_ptr, col_idx, vals })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, row_ptr: vec![0; n + 1], col_idx: Vec::new(), vals: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        match self.col_idx[range.clone()].binary_search(&c) {
            Ok(i) => self.vals[range.start + i],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|r| {
                (self.row_ptr[r]..self.row_ptr[r + 1]).map(|i| self.vals[i] * x[self.col_idx[i]]).sum()
            })
            .collect()
    }

    /// `xᵀ M y`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        dot(x, &self.matvec(y))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.col_idx[i])] += self.vals[i];
            }
        }
        m
    }

    /// Largest `|M_ij − M_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                worst = worst.max((self.vals[i] - self.get(self.col_idx[i], r)).abs());
            }
        }
        if scale > 0.0 {
            worst / scale
        } else {
            0.0
        }
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.n {
            for i in self.row_ptr[r]..self.row_ptr[r + 1] {
                t.push(Triplet::new(r, self.col_idx[i], self.vals[i]));
            }
        }
        SparseColMat::try_new_from_triplets(self.n, self.n, &t)
            .map_err(|e| GlbError::Factorization(format!("sparse structure: {e:?}")))
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Which discrete problem a pencil encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PencilKind {
    Morley,
    StabilisedBlock,
    Cr,
}

/// A pair `(A, B)` with `A` symmetric positive definite and `B` symmetric
/// positive semidefinite of known rank.
#[derive(Debug, Clone)]
pub struct SymmetricPencil {
    pub a: SparseMatrix,
    pub b: SparseMatrix,
    pub kind: PencilKind,
    /// Rank of `B`, the number of finite eigenvalues.
    pub rank_b: usize,
}

impl SymmetricPencil {
    pub fn dim(&self) -> usize {
        self.a.n
    }
}

/// One generalized eigenpair with `xᵀ B x = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub lambda: f64,
    pub vector: Vec<f64>,
    /// `‖Ax − λBx‖ / (‖Ax‖ + λ‖Bx‖)`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverPath {
    Dense,
    Sparse,
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Bound on the relative residual of every returned pair.
    pub tol: f64,
    /// Problems up to this size use the dense path unless `path` is set.
    pub dense_max: usize,
    pub path: Option<SolverPath>,
    /// Krylov block size; at least 2 so that double eigenvalues are resolved.
    pub block: usize,
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: 1e-8, dense_max: 400, path: None, block: 3, max_iter: 2000, seed: 0x5eed }
    }
}

/// Relative residual `‖Ax − λBx‖ / (‖Ax‖ + λ‖Bx‖)`.
pub fn relative_residual(a: &SparseMatrix, b: &SparseMatrix, lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x);
    let bx = b.matvec(x);
    let r: Vec<f64> = ax.iter().zip(&bx).map(|(p, q)| p - lambda * q).collect();
    let denom = norm(&ax) + lambda.abs() * norm(&bx);
    if denom > 0.0 {
        norm(&r) / denom
    } else {
        norm(&r)
    }
}

/// Groups indices of ascending `values` whose neighbours agree to `rel`.
pub fn clusters(values: &[f64], rel: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        match out.last_mut() {
            Some(last) if (v - values[*last.last().unwrap()]).abs() <= rel * v.abs() => last.push(i),
            _ => out.push(vec![i]),
        }
    }
    out
}

/// The `k` smallest finite eigenvalues of `A x = λ B x`, ascending with
/// multiplicity.
pub fn solve_gevp(p: &SymmetricPencil, k: usize, opts: &SolverOptions) -> Result<Vec<EigenPair>> {
    GevpSolver::new(&p.a, opts)?.solve(&p.b, p.rank_b, k, &[])
}

/// A generalized eigensolver with a fixed, factorised `A`.
///
/// Reusing the factor pays off when `B` changes but `A` does not, as in the
/// fixed-point iteration of the reduced problem.
pub struct GevpSolver<'a> {
    a: &'a SparseMatrix,
    opts: SolverOptions,
    factor: Factor,
}

enum Factor {
    // Lower Cholesky factor.
    Dense(Mat<f64>),
    Sparse(SparseLlt<usize, f64>),
}

impl<'a> GevpSolver<'a> {
    pub fn new(a: &'a SparseMatrix, opts: &SolverOptions) -> Result<Self> {
        let path = opts.path.unwrap_or(if a.n <= opts.dense_max { SolverPath::Dense } else { SolverPath::Sparse });
        let factor = match path {
            SolverPath::Dense => {
                let d = a.to_dense();
                let m = Mat::<f64>::from_fn(a.n, a.n, |r, c| d[(r, c)]);
                let llt = m
                    .llt(Side::Lower)
                    .map_err(|e| GlbError::Factorization(format!("dense Cholesky of A failed: {e:?}")))?;
                Factor::Dense(llt.L().to_owned())
            }
            SolverPath::Sparse => {
                let fa = a.to_faer()?;
                let sym = SymbolicLlt::try_new(fa.symbolic(), Side::Lower)
                    .map_err(|e| GlbError::Factorization(format!("symbolic Cholesky: {e:?}")))?;
                let llt = SparseLlt::try_new_with_symbolic(sym, fa.as_ref(), Side::Lower)
                    .map_err(|e| GlbError::Factorization(format!("sparse Cholesky of A failed: {e:?}")))?;
                Factor::Sparse(llt)
            }
        };
        Ok(Self { a, opts: opts.clone(), factor })
    }

    pub fn path(&self) -> SolverPath {
        match self.factor {
            Factor::Dense(_) => SolverPath::Dense,
            Factor::Sparse(_) => SolverPath::Sparse,
        }
    }

    /// Smallest `k` eigenpairs of `(A, b)`. `start` optionally seeds the Krylov
    /// space (ignored by the dense path).
    pub fn solve(&self, b: &SparseMatrix, rank_b: usize, k: usize, start: &[Vec<f64>]) -> Result<Vec<EigenPair>> {
        if b.n != self.a.n {
            return Err(GlbError::Input(format!("A is {}×{} but B is {}×{}", self.a.n, self.a.n, b.n, b.n)));
        }
        if k == 0 || k > rank_b {
            return Err(GlbError::Input(format!("k = {k} must lie in 1..={rank_b} (rank of B)")));
        }
        let mut pairs = match &self.factor {
            Factor::Dense(l) => dense_solve(l, b, k)?,
            Factor::Sparse(llt) => self.krylov(llt, b, k, start)?,
        };
        for p in &mut pairs {
            p.residual = relative_residual(self.a, b, p.lambda, &p.vector);
        }
        if let Some(bad) = pairs.iter().find(|p| !(p.residual <= self.opts.tol)) {
            return Err(GlbError::Iteration {
                iterations: 0,
                msg: format!("eigenpair λ = {} has residual {:e} > {:e}", bad.lambda, bad.residual, self.opts.tol),
            });
        }
        Ok(pairs)
    }

    fn apply_inverse(&self, llt: &SparseLlt<usize, f64>, rhs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = self.a.n;
        let mut m = Mat::<f64>::from_fn(n, rhs.len(), |r, c| rhs[c][r]);
        llt.solve_in_place(m.as_mut());
        (0..rhs.len()).map(|c| (0..n).map(|r| m[(r, c)]).collect()).collect()
    }

    fn krylov(&self, llt: &SparseLlt<usize, f64>, b: &SparseMatrix, k: usize, start: &[Vec<f64>]) -> Result<Vec<EigenPair>> {
        let n = self.a.n;
        let bs = self.opts.block.max(2);
        let keep = (k + bs).min(n);
        let max_basis = (2 * keep + 4 * bs).max(keep + 2 * bs).min(n);
        let target = 0.1 * self.opts.tol;
        let mut rng = ChaCha8Rng::seed_from_u64(self.opts.seed);
        let random = |rng: &mut ChaCha8Rng| -> Vec<f64> { (0..n).map(|_| rng.random_range(-1.0..1.0)).collect() };

        let mut basis = Basis::default();
        // The start block lies in range(A⁻¹B), where all finite eigenvectors live.
        let mut seed: Vec<Vec<f64>> = start.iter().filter(|s| s.len() == n).cloned().collect();
        while seed.len() < keep.max(bs) {
            seed.push(random(&mut rng));
        }
        let seed: Vec<Vec<f64>> = seed.iter().map(|s| b.matvec(s)).collect();
        for w in self.apply_inverse(llt, &seed) {
            basis.push(self.a, b, w);
        }

        for iter in 0..self.opts.max_iter {
            let m = basis.v.len();
            let h = DMatrix::from_fn(m, m, |i, j| 0.5 * (basis.h[i][j] + basis.h[j][i]));
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
            let wanted = keep.min(m);
            let ritz: Vec<(f64, Vec<f64>)> = order[..wanted]
                .iter()
                .map(|&i| {
                    let y = eig.eigenvectors.column(i);
                    let mut x = vec![0.0; n];
                    for (j, vj) in basis.v.iter().enumerate() {
                        let c = y[j];
                        for (xi, vi) in x.iter_mut().zip(vj) {
                            *xi += c * vi;
                        }
                    }
                    (eig.eigenvalues[i], x)
                })
                .collect();
            let res: Vec<f64> = ritz
                .iter()
                .take(k)
                .map(|(mu, x)| if *mu > 0.0 { relative_residual(self.a, b, 1.0 / mu, x) } else { f64::INFINITY })
                .collect();
            if ritz.len() >= k && res.iter().all(|&r| r <= self.opts.tol) {
                // Ritz vectors stall at a round-off floor that grows with the
                // condition of A; one inverse-iteration step on the block
                // removes the high-frequency part of that error.
                let xs: Vec<Vec<f64>> = ritz[..k].iter().map(|(_, x)| x.clone()).collect();
                let pairs = self.polish(llt, b, &xs)?;
                if pairs.iter().all(|p| p.residual <= target) {
                    return Ok(pairs);
                }
            }
            // Expansion directions: unconverged wanted Ritz vectors by descending
            // residual, so pairs stuck at the round-off floor do not crowd out
            // the rest; padded so the block always has `bs` columns.
            let mut unconverged: Vec<usize> = (0..res.len()).filter(|&i| !(res[i] <= target)).collect();
            unconverged.sort_by(|&i, &j| res[j].total_cmp(&res[i]));
            let mut dirs: Vec<usize> = unconverged.iter().copied().take(bs).collect();
            for i in 0..ritz.len() {
                if dirs.len() >= bs {
                    break;
                }
                if !dirs.contains(&i) {
                    dirs.push(i);
                }
            }
            if m + dirs.len() > max_basis {
                let mut fresh = Basis::default();
                for (_, x) in &ritz {
                    fresh.push(self.a, b, x.clone());
                }
                basis = fresh;
            }
            let rhs: Vec<Vec<f64>> = dirs.iter().map(|&i| b.matvec(&ritz[i].1)).collect();
            let mut added = 0;
            for w in self.apply_inverse(llt, &rhs) {
                if basis.push(self.a, b, w) {
                    added += 1;
                }
            }
            if added == 0 {
                // The Krylov space is invariant; restart the search with fresh directions.
                let fill: Vec<Vec<f64>> = (0..bs).map(|_| b.matvec(&random(&mut rng))).collect();
                for w in self.apply_inverse(llt, &fill) {
                    basis.push(self.a, b, w);
                }
                if basis.v.len() == m && iter > 0 {
                    return Err(GlbError::Iteration {
                        iterations: iter,
                        msg: "Krylov space cannot be extended; k exceeds the number of finite eigenvalues?".into(),
                    });
                }
            }
        }
        Err(GlbError::Iteration { iterations: self.opts.max_iter, msg: "block Krylov eigensolver did not converge".into() })
    }
    /// One block inverse-iteration step `Z = A⁻¹ B X` followed by Rayleigh–Ritz
    /// on `span Z`; pairs come back ascending and B-normalised.
    fn polish(&self, llt: &SparseLlt<usize, f64>, b: &SparseMatrix, xs: &[Vec<f64>]) -> Result<Vec<EigenPair>> {
        let k = xs.len();
        let bx: Vec<Vec<f64>> = xs.iter().map(|x| b.matvec(x)).collect();
        let z = self.apply_inverse(llt, &bx);
        let az: Vec<Vec<f64>> = z.iter().map(|v| self.a.matvec(v)).collect();
        let bz: Vec<Vec<f64>> = z.iter().map(|v| b.matvec(v)).collect();
        let ka = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&z[i], &az[j]) + dot(&z[j], &az[i])));
        let kb = DMatrix::from_fn(k, k, |i, j| 0.5 * (dot(&z[i], &bz[j]) + dot(&z[j], &bz[i])));
        // Small symmetric-definite problem ka y = λ kb y through the Cholesky factor of kb.
        let chol = kb
            .cholesky()
            .ok_or_else(|| GlbError::Factorization("polishing block lost B-definiteness".into()))?;
        let linv = chol.l().try_inverse().ok_or_else(|| GlbError::Factorization("singular polishing block".into()))?;
        let c = &linv * ka * linv.transpose();
        let c = 0.5 * (&c + c.transpose());
        let eig = SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let n = self.a.n;
        let mut pairs = Vec::with_capacity(k);
        for &i in &order {
            let y = linv.transpose() * eig.eigenvectors.column(i);
            let mut x = vec![0.0; n];
            for (j, zj) in z.iter().enumerate() {
                for (xi, v) in x.iter_mut().zip(zj) {
                    *xi += y[j] * v;
                }
            }
            let bn = b.inner(&x, &x).sqrt();
            x.iter_mut().for_each(|v| *v /= bn);
            let lambda = eig.eigenvalues[i];
            let residual = relative_residual(self.a, b, lambda, &x);
            pairs.push(EigenPair { lambda, vector: x, residual });
        }
        Ok(pairs)
    }
}

// A-orthonormal basis V with H = Vᵀ B V.
#[derive(Default)]
struct Basis {
    v: Vec<Vec<f64>>,
    h: Vec<Vec<f64>>,
}

impl Basis {
    /// A-orthogonalises `w` against the basis (two passes) and appends it.
    /// Returns false when `w` is numerically dependent.
    fn push(&mut self, a: &SparseMatrix, b: &SparseMatrix, mut w: Vec<f64>) -> bool {
        let mut aw = a.matvec(&w);
        let start = dot(&w, &aw).max(0.0).sqrt();
        if start == 0.0 {
            return false;
        }
        for _ in 0..2 {
            let coef: Vec<f64> = self.v.iter().map(|v| dot(v, &aw)).collect();
            for (c, v) in coef.iter().zip(&self.v) {
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= c * vi;
                }
            }
            aw = a.matvec(&w);
        }
        let nrm = dot(&w, &aw).max(0.0).sqrt();
        if nrm <= 1e-10 * start {
            return false;
        }
        w.iter_mut().for_each(|x| *x /= nrm);
        let z = b.matvec(&w);
        let row: Vec<f64> = self.v.iter().map(|v| dot(v, &z)).collect();
        for (hi, r) in self.h.iter_mut().zip(&row) {
            hi.push(*r);
        }
        let mut last = row;
        last.push(dot(&w, &z));
        self.h.push(last);
        self.v.push(w);
        true
    }
}

fn dense_solve(l: &Mat<f64>, b: &SparseMatrix, k: usize) -> Result<Vec<EigenPair>> {
    let n = b.n;
    let bd = b.to_dense();
    // C = L⁻¹ B L⁻ᵀ, formed as L⁻¹ (L⁻¹ B)ᵀ using the symmetry of B.
    let mut x = Mat::<f64>::from_fn(n, n, |r, c| bd[(r, c)]);
    l.solve_lower_triangular_in_place(x.as_mut());
    let mut c = x.transpose().to_owned();
    l.solve_lower_triangular_in_place(c.as_mut());
    let c = Mat::<f64>::from_fn(n, n, |i, j| 0.5 * (c[(i, j)] + c[(j, i)]));
    let evd = c
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| GlbError::Factorization(format!("dense eigensolver failed: {e:?}")))?;
    let s = evd.S();
    let u = evd.U();
    let mut pairs = Vec::with_capacity(k);
    // Eigenvalues ascend, so the largest μ sit at the end.
    for j in (0..n).rev().take(k) {
        let mu = s[j];
        if !(mu > 0.0) {
            return Err(GlbError::Input(format!("only {} finite eigenvalues exist", pairs.len())));
        }
        let mut y = Mat::<f64>::from_fn(n, 1, |r, _| u[(r, j)]);
        l.transpose().solve_upper_triangular_in_place(y.as_mut());
        let mut v: Vec<f64> = (0..n).map(|r| y[(r, 0)]).collect();
        let bn = b.inner(&v, &v).sqrt();
        v.iter_mut().for_each(|t| *t /= bn);
        pairs.push(EigenPair { lambda: 1.0 / mu, vector: v, residual: 0.0 });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> SparseMatrix {
        SparseMatrix::from_triplets(v.len(), v.iter().enumerate().map(|(i, &x)| (i, i, x)).collect()).unwrap()
    }

    fn laplace_1d(n: usize) -> (SparseMatrix, SparseMatrix) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for i in 0..n {
            a.push((i, i, 2.0));
            b.push((i, i, 4.0 / 6.0));
            if i + 1 < n {
                for (r, c) in [(i, i + 1), (i + 1, i)] {
                    a.push((r, c, -1.0));
                    b.push((r, c, 1.0 / 6.0));
                }
            }
        }
        (SparseMatrix::from_triplets(n, a).unwrap(), SparseMatrix::from_triplets(n, b).unwrap())
    }

    #[test]
    fn duplicates_are_summed() {
        let m = SparseMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 0, 2.0), (0, 0, 3.0)]).unwrap();
        assert_eq!(m.get(0, 0), 4.0);
        assert_eq!(m.get(1, 0), 2.0);
        assert_eq!(m.get(1, 1), 0.0);
        assert!(SparseMatrix::from_triplets(2, vec![(2, 0, 1.0)]).is_err());
    }

    #[test]
    fn diagonal_pencil_with_singular_b() {
        let p = SymmetricPencil { a: diag(&[1.0, 1.0, 1.0]), b: diag(&[1.0, 0.5, 0.0]), kind: PencilKind::Morley, rank_b: 2 };
        for path in [SolverPath::Dense, SolverPath::Sparse] {
            let opts = SolverOptions { path: Some(path), ..Default::default() };
            let e = solve_gevp(&p, 2, &opts).unwrap();
            assert!((e[0].lambda - 1.0).abs() < 1e-12 && (e[1].lambda - 2.0).abs() < 1e-12, "{path:?}");
            assert!(matches!(solve_gevp(&p, 3, &opts), Err(GlbError::Input(_))));
        }
    }

    #[test]
    fn sparse_path_matches_dense_on_1d_laplacian() {
        let (a, b) = laplace_1d(400);
        let p = SymmetricPencil { a, b, kind: PencilKind::Cr, rank_b: 400 };
        let d = solve_gevp(&p, 5, &SolverOptions { path: Some(SolverPath::Dense), ..Default::default() }).unwrap();
        let s = solve_gevp(&p, 5, &SolverOptions { path: Some(SolverPath::Sparse), ..Default::default() }).unwrap();
        let h: f64 = 1.0 / 401.0;
        for i in 0..5 {
            assert!((d[i].lambda - s[i].lambda).abs() <= 1e-9 * d[i].lambda);
            // P1 eigenvalues of −u'' on a uniform grid, scaled by h².
            let t = (i as f64 + 1.0) * std::f64::consts::PI * h;
            let exact = 6.0 * (1.0 - t.cos()) / (2.0 + t.cos());
            assert!((d[i].lambda - exact).abs() < 1e-10 * exact);
        }
    }

    #[test]
    fn sparse_path_resolves_double_eigenvalues() {
        // Two copies of the same chain: every eigenvalue is double.
        let (a1, b1) = laplace_1d(150);
        let shift = |m: &SparseMatrix| {
            let mut t = Vec::new();
            for r in 0..m.n {
                for i in m.row_ptr[r]..m.row_ptr[r + 1] {
                    t.push((r, m.col_idx[i], m.vals[i]));
                    t.push((r + m.n, m.col_idx[i] + m.n, m.vals[i]));
                }
            }
            SparseMatrix::from_triplets(2 * m.n, t).unwrap()
        };
        let p = SymmetricPencil { a: shift(&a1), b: shift(&b1), kind: PencilKind::Cr, rank_b: 300 };
        let s = solve_gevp(&p, 4, &SolverOptions { path: Some(SolverPath::Sparse), ..Default::default() }).unwrap();
        let vals: Vec<f64> = s.iter().map(|e| e.lambda).collect();
        assert_eq!(clusters(&vals, 1e-8), vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn clusters_group_neighbours() {
        assert_eq!(clusters(&[1.0, 1.0 + 1e-10, 2.0], 1e-8), vec![vec![0, 1], vec![2]]);
        assert!(clusters(&[], 1e-8).is_empty());
    }
}
