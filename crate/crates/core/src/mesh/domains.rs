//! Built-in benchmark domains.
//!
//! Every domain is a union of axis-aligned square cells, each split into two
//! right isosceles triangles. The refinement edge is the hypotenuse, so full
//! newest-vertex bisection keeps all triangles congruent.

use super::{longest_edge, Point2, Triangulation2D};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::GlbError;

/// The four benchmark geometries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Domain {
    /// `(0,1)²` split into two triangles.
    UnitSquare,
    /// `(-1,1)² \ [0,1)×(-1,0]`.
    LShape,
    /// Two `2×2` squares joined by the channel `(1,3)×(-1,-0.75)`, with a slit
    /// `[-1,0]×{0}` attached to the left wall.
    DumbbellSlit,
    /// `(-1,1)²` with four slits of length `0.5` attached to the midpoints of
    /// the four sides.
    FourSlit,
}

impl Domain {
    pub const ALL: [Domain; 4] = [Domain::UnitSquare, Domain::LShape, Domain::DumbbellSlit, Domain::FourSlit];

    pub fn name(&self) -> &'static str {
        match self {
            Domain::UnitSquare => "unit_square",
            Domain::LShape => "l_shape",
            Domain::DumbbellSlit => "dumbbell_slit",
            Domain::FourSlit => "four_slit",
        }
    }

    /// Number of slits; each slit attached to the outer boundary leaves the
    /// domain simply connected.
    pub fn num_slits(&self) -> usize {
        match self {
            Domain::UnitSquare | Domain::LShape => 0,
            Domain::DumbbellSlit => 1,
            Domain::FourSlit => 4,
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Domain {
    type Err = GlbError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| GlbError::Input(format!("unknown domain '{s}'")))
    }
}

/// A straight slit on a grid line. Points of the closed segment other than the
/// tip are duplicated, one copy per side.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Slit {
    pub tip: Point2,
    pub base: Point2,
}

impl Slit {
    fn contains_non_tip(&self, p: Point2) -> bool {
        let d = [self.base[0] - self.tip[0], self.base[1] - self.tip[1]];
        let q = [p[0] - self.tip[0], p[1] - self.tip[1]];
        let cross = d[0] * q[1] - d[1] * q[0];
        let t = (d[0] * q[0] + d[1] * q[1]) / (d[0] * d[0] + d[1] * d[1]);
        cross.abs() < 1e-12 && t > 1e-12 && t <= 1.0 + 1e-12
    }

    fn side(&self, c: Point2) -> bool {
        let d = [self.base[0] - self.tip[0], self.base[1] - self.tip[1]];
        let q = [c[0] - self.tip[0], c[1] - self.tip[1]];
        d[0] * q[1] - d[1] * q[0] > 0.0
    }
}

/// Diagonal choice per cell.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Diagonals {
    /// Every cell split along its `(x0,y0)–(x1,y1)` diagonal.
    Rising,
    /// Each cell split along the diagonal through its corner nearest `center`.
    TowardCenter(Point2),
}

/// Builds a triangulation from the unit cells `[x0+ih, x0+(i+1)h] × [y0+jh, ...]`
/// whose centers satisfy `inside`.
pub(crate) fn grid_domain(
    origin: Point2,
    h: f64,
    nx: usize,
    ny: usize,
    inside: impl Fn(Point2) -> bool,
    slits: &[Slit],
    diagonals: Diagonals,
) -> Triangulation2D {
    // Vertex key: grid indices plus one side bit per slit containing the point.
    let mut keys: BTreeMap<(usize, usize, Vec<bool>), usize> = BTreeMap::new();
    let mut vertices: Vec<Point2> = Vec::new();
    let mut triangles = Vec::new();
    let coord = |i: usize, j: usize| [origin[0] + i as f64 * h, origin[1] + j as f64 * h];
    for j in 0..ny {
        for i in 0..nx {
            let center = [origin[0] + (i as f64 + 0.5) * h, origin[1] + (j as f64 + 0.5) * h];
            if !inside(center) {
                continue;
            }
            let mut id = |ii: usize, jj: usize| {
                let p = coord(ii, jj);
                let sig: Vec<bool> =
                    slits.iter().filter(|s| s.contains_non_tip(p)).map(|s| s.side(center)).collect();
                let next = vertices.len();
                *keys.entry((ii, jj, sig)).or_insert_with(|| {
                    vertices.push(p);
                    next
                })
            };
            let v00 = id(i, j);
            let v10 = id(i + 1, j);
            let v11 = id(i + 1, j + 1);
            let v01 = id(i, j + 1);
            let rising = match diagonals {
                Diagonals::Rising => true,
                Diagonals::TowardCenter(c) => (center[0] - c[0]) * (center[1] - c[1]) > 0.0,
            };
            if rising {
                triangles.push([v00, v10, v11]);
                triangles.push([v00, v11, v01]);
            } else {
                triangles.push([v00, v10, v01]);
                triangles.push([v10, v11, v01]);
            }
        }
    }
    let refedge = triangles.iter().map(|&t| longest_edge(&vertices, t)).collect();
    Triangulation2D::new(vertices, triangles, refedge).expect("grid domains are valid triangulations")
}

/// The initial triangulation `T₀` of a benchmark domain.
pub fn builtin_domain(domain: Domain) -> Triangulation2D {
    match domain {
        Domain::UnitSquare => grid_domain([0.0, 0.0], 1.0, 1, 1, |_| true, &[], Diagonals::Rising),
        Domain::LShape => grid_domain(
            [-1.0, -1.0],
            1.0,
            2,
            2,
            |c| !(c[0] > 0.0 && c[1] < 0.0),
            &[],
            Diagonals::TowardCenter([0.0, 0.0]),
        ),
        Domain::DumbbellSlit => grid_domain(
            [-1.0, -1.0],
            0.25,
            24,
            8,
            |c| !(c[0] > 1.0 && c[0] < 3.0 && c[1] > -0.75),
            &[Slit { tip: [0.0, 0.0], base: [-1.0, 0.0] }],
            Diagonals::Rising,
        ),
        Domain::FourSlit => grid_domain(
            [-1.0, -1.0],
            0.5,
            4,
            4,
            |_| true,
            &[
                Slit { tip: [0.5, 0.0], base: [1.0, 0.0] },
                Slit { tip: [0.0, 0.5], base: [0.0, 1.0] },
                Slit { tip: [-0.5, 0.0], base: [-1.0, 0.0] },
                Slit { tip: [0.0, -0.5], base: [0.0, -1.0] },
            ],
            Diagonals::TowardCenter([0.0, 0.0]),
        ),
    }
}
