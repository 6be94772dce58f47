//! Line-oriented ASCII mesh files.
//!
//! ```text
//! mesh2d v1
//! vertices N
//! x y            (N lines)
//! triangles M
//! v0 v1 v2 r     (M lines, r = local index of the vertex opposite the refinement edge)
//! boundary K
//! va vb          (K lines)
//! ```
//!
//! Coordinates are written with the shortest representation that parses back
//! to the same `f64`, so a round trip is bit-exact.

use super::Triangulation2D;
use crate::error::{GlbError, Result};
use std::fmt::Write as _;
use std::path::Path;

pub fn write_mesh_string(mesh: &Triangulation2D) -> String {
    let mut s = String::new();
    s.push_str("mesh2d v1\n");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for v in &mesh.vertices {
        let _ = writeln!(s, "{:?} {:?}", v[0], v[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", tri[0], tri[1], tri[2], mesh.refedge[t]);
    }
    let b = mesh.boundary_edges();
    let _ = writeln!(s, "boundary {}", b.len());
    for e in b {
        let [a, c] = mesh.edges()[e];
        let _ = writeln!(s, "{a} {c}");
    }
    s
}

pub fn write_mesh(mesh: &Triangulation2D, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Triangulation2D> {
    let text = std::fs::read_to_string(path)?;
    read_mesh_str(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(GlbError::Parse { line: self.last + 1, msg: format!("unexpected end of file, expected {what}") })
    }

    fn header(&mut self, keyword: &str) -> Result<usize> {
        let (line, f) = self.next(keyword)?;
        if f.len() != 2 || f[0] != keyword {
            return Err(GlbError::Parse { line, msg: format!("expected '{keyword} <count>'") });
        }
        f[1].parse().map_err(|_| GlbError::Parse { line, msg: format!("bad count '{}'", f[1]) })
    }
}

fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| GlbError::Parse { line, msg: format!("cannot parse '{s}'") })
}

pub fn read_mesh_str(text: &str) -> Result<Triangulation2D> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, f) = lines.next("header")?;
    if f != ["mesh2d", "v1"] {
        return Err(GlbError::Parse { line, msg: "expected header 'mesh2d v1'".into() });
    }
    let nv = lines.header("vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, f) = lines.next("vertex")?;
        if f.len() != 2 {
            return Err(GlbError::Parse { line, msg: "expected 'x y'".into() });
        }
        vertices.push([parse(line, f[0])?, parse(line, f[1])?]);
    }
    let nt = lines.header("triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    let mut refedge = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (line, f) = lines.next("triangle")?;
        if f.len() != 4 {
            return Err(GlbError::Parse { line, msg: "expected 'v0 v1 v2 refedge'".into() });
        }
        let tri: [usize; 3] = [parse(line, f[0])?, parse(line, f[1])?, parse(line, f[2])?];
        if tri.iter().any(|&v| v >= nv) {
            return Err(GlbError::Parse { line, msg: "vertex index out of range".into() });
        }
        let r: u8 = parse(line, f[3])?;
        if r > 2 {
            return Err(GlbError::Parse { line, msg: "refinement edge must be 0, 1 or 2".into() });
        }
        triangles.push(tri);
        refedge.push(r);
    }
    let boundary_line = lines.last + 1;
    let nb = lines.header("boundary")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, f) = lines.next("boundary edge")?;
        if f.len() != 2 {
            return Err(GlbError::Parse { line, msg: "expected 'va vb'".into() });
        }
        let (a, b): (usize, usize) = (parse(line, f[0])?, parse(line, f[1])?);
        boundary.push(if a < b { [a, b] } else { [b, a] });
    }
    if let Ok((line, _)) = lines.next("end of file") {
        return Err(GlbError::Parse { line, msg: "trailing content".into() });
    }
    let mesh = Triangulation2D::new(vertices, triangles, refedge)
        .map_err(|e| GlbError::Parse { line: 0, msg: e.to_string() })?;
    let mut derived: Vec<[usize; 2]> = mesh.boundary_edges().iter().map(|&e| mesh.edges()[e]).collect();
    derived.sort();
    boundary.sort();
    if derived != boundary {
        return Err(GlbError::Parse {
            line: boundary_line,
            msg: "boundary section disagrees with the edges that have a single triangle".into(),
        });
    }
    Ok(mesh)
}
