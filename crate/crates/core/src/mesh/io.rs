//! ASCII mesh format.
//!
//! ```text
//! cda-mesh 1
//! V <count>
//! x y
//! T <count>
//! i j k tag        (0 background, 1 inclusion)
//! B <count>
//! i j label        (0 outer, 1 interface)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{BoundaryEdge, BoundaryLabel, Mesh, OuterBoundary, Region, Triangle};
use crate::{Error, Result};

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    std::fs::write(path, format_mesh(mesh))?;
    Ok(())
}

pub fn read_mesh(path: &Path) -> Result<Mesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::from("cda-mesh 1\n");
    let _ = writeln!(s, "V {}", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
    }
    let _ = writeln!(s, "T {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let [i, j, k] = t.vertices;
        let _ = writeln!(s, "{i} {j} {k} {}", t.region.tag());
    }
    let _ = writeln!(s, "B {}", mesh.boundary_edges().len());
    for b in mesh.boundary_edges() {
        let _ = writeln!(s, "{} {} {}", b.vertices[0], b.vertices[1], b.label.tag());
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    // Next non-blank line with its 1-based number.
    fn next(&mut self) -> Result<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((i + 1, fields));
            }
        }
        Err(Error::MeshFormat { line: self.last + 1, message: "unexpected end of file".into() })
    }
}

fn err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshFormat { line, message: message.into() }
}

fn field<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| err(line, format!("cannot parse {what} from {s:?}")))
}

fn section(lines: &mut Lines, name: &str) -> Result<usize> {
    let (line, f) = lines.next()?;
    if f.len() != 2 || f[0] != name {
        return Err(err(line, format!("expected `{name} <count>`")));
    }
    field(line, f[1], "count")
}

pub fn parse_mesh(text: &str) -> Result<Mesh> {
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };
    let (line, header) = lines.next()?;
    if header != ["cda-mesh", "1"] {
        return Err(err(line, "expected header `cda-mesh 1`"));
    }

    let nv = section(&mut lines, "V")?;
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, f) = lines.next()?;
        if f.len() != 2 {
            return Err(err(line, "expected `x y`"));
        }
        let p: [f64; 2] = [field(line, f[0], "x")?, field(line, f[1], "y")?];
        if !(p[0].is_finite() && p[1].is_finite()) {
            return Err(err(line, "non-finite coordinate"));
        }
        vertices.push(p);
    }

    let nt = section(&mut lines, "T")?;
    let mut triangles = Vec::with_capacity(nt);
    for t in 0..nt {
        let (line, f) = lines.next()?;
        if f.len() != 4 {
            return Err(err(line, "expected `i j k tag`"));
        }
        let mut vs = [0usize; 3];
        for (slot, s) in vs.iter_mut().zip(&f[..3]) {
            *slot = field(line, s, "vertex index")?;
            if *slot >= nv {
                return Err(err(line, format!("triangle {t} references vertex {slot}, only {nv} vertices")));
            }
        }
        let region = Region::from_tag(field(line, f[3], "region tag")?)
            .ok_or_else(|| err(line, format!("unknown region tag {}", f[3])))?;
        let [a, b, c] = vs.map(|v| vertices[v]);
        let area2 = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
        if area2 <= 0.0 {
            return Err(err(line, format!("triangle {t} is inverted or degenerate (signed area {})", 0.5 * area2)));
        }
        triangles.push(Triangle { vertices: vs, region });
    }

    let nb = section(&mut lines, "B")?;
    let mut boundary = Vec::with_capacity(nb);
    for _ in 0..nb {
        let (line, f) = lines.next()?;
        if f.len() != 3 {
            return Err(err(line, "expected `i j label`"));
        }
        let i: usize = field(line, f[0], "vertex index")?;
        let j: usize = field(line, f[1], "vertex index")?;
        if i >= nv || j >= nv {
            return Err(err(line, format!("boundary edge references vertex beyond {nv} vertices")));
        }
        let label = BoundaryLabel::from_tag(field(line, f[2], "boundary label")?)
            .ok_or_else(|| err(line, format!("unknown boundary label {}", f[2])))?;
        boundary.push(BoundaryEdge { vertices: [i, j], label });
    }
    if let Ok((line, _)) = lines.next() {
        return Err(err(line, "trailing content after B section"));
    }

    let outer = infer_outer(&vertices, &boundary);
    Mesh::with_boundary(vertices, triangles, &boundary, outer)
}

// A circle is recognised when every outer vertex has the same radius.
fn infer_outer(vertices: &[[f64; 2]], boundary: &[BoundaryEdge]) -> OuterBoundary {
    let radii: Vec<f64> = boundary
        .iter()
        .filter(|b| b.label == BoundaryLabel::Outer)
        .flat_map(|b| b.vertices)
        .map(|v| vertices[v][0].hypot(vertices[v][1]))
        .collect();
    let Some(&r0) = radii.first() else { return OuterBoundary::Polygonal };
    if r0 > 0.0 && radii.iter().all(|r| (r - r0).abs() <= 1e-12 * r0) {
        OuterBoundary::Circle { radius: r0 }
    } else {
        OuterBoundary::Polygonal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_mesh, refine, MarkSet};

    #[test]
    fn round_trip_is_bit_identical() {
        let m = generate_disk_mesh(5.0, 4.0, 0.9).unwrap();
        let m = refine(&m, &MarkSet::from_iter([0, 5, 17])).unwrap();
        let back = parse_mesh(&format_mesh(&m)).unwrap();
        assert_eq!(back.vertices(), m.vertices());
        assert_eq!(back.triangles(), m.triangles());
        assert_eq!(back.boundary_edges(), m.boundary_edges());
        assert_eq!(back.outer(), OuterBoundary::Circle { radius: 5.0 });
    }

    const SQUARE: &str = "cda-mesh 1\nV 4\n0 0\n1 0\n1 1\n0 1\nT 2\n0 1 2 0\n0 2 3 0\nB 4\n0 1 0\n1 2 0\n2 3 0\n0 3 0\n";

    #[test]
    fn parses_small_square() {
        let m = parse_mesh(SQUARE).unwrap();
        assert_eq!(m.num_triangles(), 2);
    }

    #[test]
    fn inverted_triangle_names_the_triangle() {
        let text = SQUARE.replace("0 2 3 0", "0 3 2 0");
        match parse_mesh(&text) {
            Err(Error::MeshFormat { line, message }) => {
                assert_eq!(line, 9);
                assert!(message.contains("triangle 1"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_index_is_rejected() {
        let text = SQUARE.replace("0 2 3 0", "0 2 7 0");
        assert!(matches!(parse_mesh(&text), Err(Error::MeshFormat { line: 9, .. })));
    }

    #[test]
    fn bad_header_and_truncation() {
        assert!(matches!(parse_mesh("mesh\n"), Err(Error::MeshFormat { line: 1, .. })));
        assert!(matches!(parse_mesh("cda-mesh 1\nV 2\n0 0\n"), Err(Error::MeshFormat { .. })));
    }

    #[test]
    fn boundary_list_must_match() {
        let text = SQUARE.replace("B 4\n0 1 0\n", "B 4\n0 2 0\n");
        assert!(parse_mesh(&text).is_err());
    }
}
