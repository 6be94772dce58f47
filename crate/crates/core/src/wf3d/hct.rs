//! The Hsieh–Clough–Tocher cubic on a triangle split at an interior center.

use super::bernstein::{interface_residuals, BernsteinPiece};
use crate::error::{GlbError, Result};
use crate::morley::Simplex;
use nalgebra::{DMatrix, DVector};

pub type Point2 = [f64; 2];

/// Pairs of triangle vertices spanning the sub-triangle edges, in the order
/// of the sub-triangles `(c, V_a, V_b)`.
pub const HCT_EDGES: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Value, gradient at each vertex, and the derivative at the midpoint of each
/// edge of [`HCT_EDGES`] in the direction [`hct_edge_normal`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HctDofs {
    pub value: [f64; 3],
    pub gradient: [Point2; 3],
    pub cross: [f64; 3],
}

impl HctDofs {
    pub fn from_fn(tri: [Point2; 3], f: impl Fn(Point2) -> (f64, Point2)) -> Self {
        let mut d = Self::default();
        for i in 0..3 {
            let (v, g) = f(tri[i]);
            d.value[i] = v;
            d.gradient[i] = g;
        }
        for (e, &(a, b)) in HCT_EDGES.iter().enumerate() {
            let mid = [0.5 * (tri[a][0] + tri[b][0]), 0.5 * (tri[a][1] + tri[b][1])];
            let (_, g) = f(mid);
            let n = hct_edge_normal(tri, e);
            d.cross[e] = g[0] * n[0] + g[1] * n[1];
        }
        d
    }
}

/// The unit tangent `V_b − V_a` of edge `e` rotated clockwise.
pub fn hct_edge_normal(tri: [Point2; 3], e: usize) -> Point2 {
    let (a, b) = HCT_EDGES[e];
    let t = [tri[b][0] - tri[a][0], tri[b][1] - tri[a][1]];
    let l = t[0].hypot(t[1]);
    [t[1] / l, -t[0] / l]
}

/// The interpolation map of one split triangle, factored once and reused
/// for every data vector.
#[derive(Debug, Clone)]
pub struct HctSystem {
    pub tri: [Point2; 3],
    pub center: Point2,
    pieces: Vec<BernsteinPiece>,
    /// Least-squares solution operator of the 33×30 ordinate system.
    pinv: DMatrix<f64>,
}

impl HctSystem {
    pub fn new(tri: [Point2; 3], center: Point2) -> Result<Self> {
        let mut pieces = Vec::with_capacity(3);
        for &(a, b) in &HCT_EDGES {
            let s = Simplex::new(vec![center.to_vec(), tri[a].to_vec(), tri[b].to_vec()])?;
            pieces.push(BernsteinPiece::new(s, 3, vec![0.0; 10])?);
        }
        let mut sys = Self { tri, center, pieces, pinv: DMatrix::zeros(0, 0) };
        let mut mat = DMatrix::zeros(33, 30);
        for j in 0..30 {
            let mut x = vec![0.0; 30];
            x[j] = 1.0;
            let col = sys.equations(&x)?;
            for (i, v) in col.iter().enumerate() {
                mat[(i, j)] = *v;
            }
        }
        let svd = mat.svd(true, true);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 1e-10 * smax) {
            return Err(GlbError::Geometry(format!("HCT system is rank deficient (σ_min/σ_max = {:e})", smin / smax)));
        }
        sys.pinv = svd.pseudo_inverse(1e-12 * smax).map_err(|e| GlbError::Factorization(e.to_string()))?;
        Ok(sys)
    }

    fn with_ordinates(&self, x: &[f64]) -> Vec<BernsteinPiece> {
        self.pieces
            .iter()
            .enumerate()
            .map(|(p, piece)| {
                let mut q = piece.clone();
                q.ordinates.copy_from_slice(&x[10 * p..10 * p + 10]);
                q
            })
            .collect()
    }

    /// 9 vertex conditions, 3 cross derivatives, then 12 `C⁰` and 9 `C¹`
    /// conditions across the three internal edges.
    fn equations(&self, x: &[f64]) -> Result<Vec<f64>> {
        let p = self.with_ordinates(x);
        let mut out = Vec::with_capacity(33);
        for v in 0..3 {
            let piece = HCT_EDGES.iter().position(|&(a, b)| a == v || b == v).expect("every vertex is on an edge");
            out.push(p[piece].value(&self.tri[v]));
            out.extend(p[piece].gradient(&self.tri[v]));
        }
        for (e, &(a, b)) in HCT_EDGES.iter().enumerate() {
            let mid = [0.5 * (self.tri[a][0] + self.tri[b][0]), 0.5 * (self.tri[a][1] + self.tri[b][1])];
            let g = p[e].gradient(&mid);
            let n = hct_edge_normal(self.tri, e);
            out.push(g[0] * n[0] + g[1] * n[1]);
        }
        for (i, j) in [(0, 1), (0, 2), (1, 2)] {
            let (c1, c2) = interface_residuals(&p[i], &p[j])?;
            out.extend(c1);
            out.extend(c2);
        }
        Ok(out)
    }

    /// The three cubic pieces, over `(c, V_a, V_b)` for `(a, b)` in [`HCT_EDGES`].
    pub fn interpolate(&self, dofs: &HctDofs) -> Vec<BernsteinPiece> {
        let mut rhs = DVector::zeros(33);
        for v in 0..3 {
            rhs[3 * v] = dofs.value[v];
            rhs[3 * v + 1] = dofs.gradient[v][0];
            rhs[3 * v + 2] = dofs.gradient[v][1];
        }
        for e in 0..3 {
            rhs[9 + e] = dofs.cross[e];
        }
        let x = &self.pinv * rhs;
        self.with_ordinates(x.as_slice())
    }
}

/// One-shot HCT interpolation.
pub fn hct2d_interpolate(tri: [Point2; 3], center: Point2, dofs: &HctDofs) -> Result<Vec<BernsteinPiece>> {
    Ok(HctSystem::new(tri, center)?.interpolate(dofs))
}
