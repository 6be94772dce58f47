//! Newest-vertex bisection with conforming closure.

use super::Triangulation2D;
use crate::error::{GlbError, Result};
use std::collections::HashMap;

/// Bisects every marked triangle at its refinement edge and closes the mesh.
///
/// Closure: an edge of a triangle that is marked forces the triangle's own
/// refinement edge to be marked. Each triangle is then split by at most three
/// bisections. Children have the new vertex as their newest vertex.
pub fn refine_nvb(mesh: &Triangulation2D, marked: &[usize]) -> Result<Triangulation2D> {
    let nt = mesh.num_triangles();
    if let Some(&bad) = marked.iter().find(|&&t| t >= nt) {
        return Err(GlbError::Input(format!("triangle id {bad} out of range (|T| = {nt})")));
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }
    let tri_edges = mesh.triangle_edges();
    let edge_tris = mesh.edge_triangles();
    let ref_edge = |t: usize| tri_edges[t][mesh.refedge[t] as usize];

    let mut edge_marked = vec![false; mesh.num_edges()];
    let mut stack = Vec::new();
    for &t in marked {
        let e = ref_edge(t);
        if !edge_marked[e] {
            edge_marked[e] = true;
            stack.push(e);
        }
    }
    while let Some(e) = stack.pop() {
        for &t in &edge_tris[e] {
            if t == super::NONE {
                continue;
            }
            let r = ref_edge(t);
            if !edge_marked[r] {
                edge_marked[r] = true;
                stack.push(r);
            }
        }
    }

    let mut vertices = mesh.vertices.clone();
    let mut midpoint: HashMap<[usize; 2], usize> = HashMap::new();
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if edge_marked[e] {
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            midpoint.insert([a, b], vertices.len());
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let mut triangles = Vec::with_capacity(nt * 2);
    let mut refedge = Vec::with_capacity(nt * 2);
    for t in 0..nt {
        let tri = mesh.triangles[t];
        let r = mesh.refedge[t] as usize;
        // Rotate so the newest vertex comes first; the refinement edge is then (1, 2).
        let rotated = [tri[r], tri[(r + 1) % 3], tri[(r + 2) % 3]];
        bisect(rotated, &midpoint, &mut triangles, &mut refedge);
    }
    Triangulation2D::with_generation(vertices, triangles, refedge, mesh.generation + 1)
}

// `tri = [n, p, q]` counter-clockwise with refinement edge p–q.
fn bisect(tri: [usize; 3], mid: &HashMap<[usize; 2], usize>, out: &mut Vec<[usize; 3]>, re: &mut Vec<u8>) {
    let [n, p, q] = tri;
    let key = if p < q { [p, q] } else { [q, p] };
    match mid.get(&key) {
        None => {
            out.push(tri);
            re.push(0);
        }
        Some(&m) => {
            bisect([m, n, p], mid, out, re);
            bisect([m, q, n], mid, out, re);
        }
    }
}

/// Newest-vertex bisection with every triangle marked.
pub fn refine_uniform(mesh: &Triangulation2D) -> Triangulation2D {
    let all: Vec<usize> = (0..mesh.num_triangles()).collect();
    refine_nvb(mesh, &all).expect("all triangle ids are valid")
}
