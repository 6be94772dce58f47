//! Two-dimensional triangulations with slit support and newest-vertex bisection.
//!
//! Adjacency is purely combinatorial: two triangles are neighbours exactly when
//! they share a pair of vertex ids. A slit is modelled by duplicating the
//! vertices along it, so the two sides of a slit never share an edge.

mod domains;
mod io;
mod refine;

pub use domains::{builtin_domain, Domain};
pub use io::{read_mesh, read_mesh_str, write_mesh, write_mesh_string};
pub use refine::{refine_nvb, refine_uniform};

use crate::error::{GlbError, Result};
use std::collections::HashMap;

pub type Point2 = [f64; 2];

/// A conforming triangulation of a polygonal domain.
///
/// Triangles are stored counter-clockwise. `refedge[t] = r` designates the edge
/// opposite local vertex `r` as the refinement edge of triangle `t`.
/// `tri_edges[t][i]` is the edge opposite local vertex `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation2D {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub refedge: Vec<u8>,
    pub generation: usize,
    edges: Vec<[usize; 2]>,
    edge_tris: Vec<[usize; 2]>,
    tri_edges: Vec<[usize; 3]>,
    boundary: Vec<bool>,
}

/// Marks a missing neighbour in `edge_tris`.
pub const NONE: usize = usize::MAX;

/// Per-triangle sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshQuantities {
    pub h_t: Vec<f64>,
    pub h_max: f64,
    pub area_t: Vec<f64>,
    pub shape_reg: f64,
}

pub fn dist(a: Point2, b: Point2) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

pub fn signed_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn sorted_pair(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

impl Triangulation2D {
    /// Builds a triangulation and derives its edge topology.
    ///
    /// Fails when a triangle is not positively oriented, an index is out of
    /// range, or an edge is shared by more than two triangles.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>, refedge: Vec<u8>) -> Result<Self> {
        Self::with_generation(vertices, triangles, refedge, 0)
    }

    pub fn with_generation(
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
        refedge: Vec<u8>,
        generation: usize,
    ) -> Result<Self> {
        if refedge.len() != triangles.len() {
            return Err(GlbError::Input(format!(
                "{} refinement edges for {} triangles",
                refedge.len(),
                triangles.len()
            )));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= vertices.len()) {
                return Err(GlbError::Input(format!("triangle {t} references a missing vertex")));
            }
            if refedge[t] > 2 {
                return Err(GlbError::Input(format!("triangle {t} has refinement edge {}", refedge[t])));
            }
            let a = signed_area(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]);
            if !(a > 0.0) {
                return Err(GlbError::Geometry(format!("triangle {t} has signed area {a}")));
            }
        }
        let mut index: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut pairs: Vec<[usize; 2]> = Vec::with_capacity(triangles.len() * 2);
        for tri in &triangles {
            for i in 0..3 {
                let key = sorted_pair(tri[(i + 1) % 3], tri[(i + 2) % 3]);
                if let std::collections::hash_map::Entry::Vacant(v) = index.entry(key) {
                    v.insert(pairs.len());
                    pairs.push(key);
                }
            }
        }
        // Edges are numbered by sorted vertex pair so numbering is canonical.
        let mut order: Vec<usize> = (0..pairs.len()).collect();
        order.sort_by_key(|&e| pairs[e]);
        let edges: Vec<[usize; 2]> = order.iter().map(|&e| pairs[e]).collect();
        for (new, e) in edges.iter().enumerate() {
            index.insert(*e, new);
        }
        let mut edge_tris = vec![[NONE, NONE]; edges.len()];
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut te = [0; 3];
            for (i, slot) in te.iter_mut().enumerate() {
                let e = index[&sorted_pair(tri[(i + 1) % 3], tri[(i + 2) % 3])];
                *slot = e;
                if edge_tris[e][0] == NONE {
                    edge_tris[e][0] = t;
                } else if edge_tris[e][1] == NONE {
                    edge_tris[e][1] = t;
                } else {
                    return Err(GlbError::Geometry(format!(
                        "edge {:?} is shared by more than two triangles",
                        edges[e]
                    )));
                }
            }
            tri_edges.push(te);
        }
        let boundary = edge_tris.iter().map(|p| p[1] == NONE).collect();
        Ok(Self { vertices, triangles, refedge, generation, edges, edge_tris, tri_edges, boundary })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edge vertex pairs, sorted ascending within and across edges.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// The one or two triangles adjacent to each edge; the second slot holds
    /// [`NONE`] on boundary edges.
    pub fn edge_triangles(&self) -> &[[usize; 2]] {
        &self.edge_tris
    }

    /// Edge ids of each triangle, opposite to local vertices 0, 1, 2.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.tri_edges
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.boundary[e]
    }

    pub fn boundary_edges(&self) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.boundary[e]).collect()
    }

    /// Vertices touched by at least one boundary edge.
    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for (e, edge) in self.edges.iter().enumerate() {
            if self.boundary[e] {
                b[edge[0]] = true;
                b[edge[1]] = true;
            }
        }
        b
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn diameter(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        dist(a, b).max(dist(b, c)).max(dist(c, a))
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        dist(self.vertices[self.edges[e][0]], self.vertices[self.edges[e][1]])
    }

    pub fn quantities(&self) -> MeshQuantities {
        mesh_quantities(self)
    }

    /// Every edge has one (boundary) or two (interior) incident triangles.
    pub fn is_conforming(&self) -> bool {
        self.edge_tris.iter().all(|p| p[0] != NONE)
    }

    /// Minimal interior angle over all triangles, in radians.
    pub fn min_angle(&self) -> f64 {
        let mut m = f64::INFINITY;
        for t in 0..self.num_triangles() {
            let p = self.triangle_points(t);
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (dist(a, b) * dist(a, c));
                m = m.min(cos.clamp(-1.0, 1.0).acos());
            }
        }
        m
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.area(t)).sum()
    }
}

/// Exact diameters and areas per triangle.
pub fn mesh_quantities(mesh: &Triangulation2D) -> MeshQuantities {
    let h_t: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.diameter(t)).collect();
    let area_t: Vec<f64> = (0..mesh.num_triangles()).map(|t| mesh.area(t)).collect();
    let h_max = h_t.iter().cloned().fold(0.0, f64::max);
    let shape_reg = h_t.iter().zip(&area_t).map(|(h, a)| h / a.sqrt()).fold(0.0, f64::max);
    MeshQuantities { h_t, h_max, area_t, shape_reg }
}

/// Index of the longest edge of a triangle (as the opposite local vertex),
/// ties broken by the smallest sorted vertex-id pair.
pub fn longest_edge(vertices: &[Point2], tri: [usize; 3]) -> u8 {
    let mut best = 0u8;
    let mut best_len = -1.0;
    let mut best_key = [usize::MAX; 2];
    for i in 0..3 {
        let a = tri[(i + 1) % 3];
        let b = tri[(i + 2) % 3];
        let len = dist(vertices[a], vertices[b]);
        let key = sorted_pair(a, b);
        // Lengths equal up to rounding count as ties.
        let tol = 1e-12 * len.max(best_len);
        if len > best_len + tol || ((len - best_len).abs() <= tol && key < best_key) {
            best = i as u8;
            best_len = len;
            best_key = key;
        }
    }
    best
}
