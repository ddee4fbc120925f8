//! Result files: iteration CSV, legacy ASCII VTK, SVG interface plots.
//!
//! All writers format numbers with Rust's shortest round-trip
//! representation, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use cda_core::cda::IterationRecord;
use cda_core::fem::{Field, SpaceKind};
use cda_core::mesh::Mesh;

pub const CSV_HEADER: &str = "iter,J,directional,Ebar,mu,dofs,retries,seconds";

/// One row per record; `timing = false` writes 0 seconds so that repeated
/// runs compare byte for byte.
pub fn records_csv(records: &[IterationRecord], timing: bool) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in records {
        let seconds = if timing { r.seconds } else { 0.0 };
        let _ = writeln!(
            s,
            "{},{:e},{:e},{:e},{:e},{},{},{:e}",
            r.iteration, r.objective, r.directional, r.e_bar, r.mu, r.dofs, r.retries, seconds
        );
    }
    s
}

/// Named nodal field for [`vtk`]; scalars or 2-vectors.
pub struct NamedField<'a> {
    pub name: &'a str,
    pub field: &'a Field,
}

/// Legacy ASCII unstructured grid with triangle cells, nodal fields and the
/// region tag as cell data.
pub fn vtk(mesh: &Mesh, title: &str, fields: &[NamedField]) -> String {
    let mut s = String::from("# vtk DataFile Version 3.0\n");
    let _ = writeln!(s, "{}", title.replace('\n', " "));
    s.push_str("ASCII\nDATASET UNSTRUCTURED_GRID\n");
    let _ = writeln!(s, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(s, "{} {} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let [a, b, c] = t.vertices;
        let _ = writeln!(s, "3 {a} {b} {c}");
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        s.push_str("5\n");
    }
    let _ = writeln!(s, "CELL_DATA {nt}");
    s.push_str("SCALARS region int 1\nLOOKUP_TABLE default\n");
    for t in mesh.triangles() {
        let _ = writeln!(s, "{}", t.region.tag());
    }
    if !fields.is_empty() {
        let _ = writeln!(s, "POINT_DATA {}", mesh.num_vertices());
    }
    for f in fields {
        let v = f.field.values();
        match f.field.kind() {
            SpaceKind::P1Vec2 => {
                let _ = writeln!(s, "VECTORS {} double", f.name);
                for c in v.chunks(2) {
                    let _ = writeln!(s, "{} {} 0", c[0], c[1]);
                }
            }
            _ => {
                let _ = writeln!(s, "SCALARS {} double 1\nLOOKUP_TABLE default", f.name);
                for x in v {
                    let _ = writeln!(s, "{x}");
                }
            }
        }
    }
    s
}

/// Closed polylines for one SVG layer.
pub struct Layer<'a> {
    pub id: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub loops: &'a [Vec<[f64; 2]>],
}

/// Square SVG of the box `[-extent, extent]²`, one `<g>` group of polylines
/// per layer, y pointing up.
pub fn interface_svg(extent: f64, layers: &[Layer]) -> String {
    let size = 600.0;
    let scale = size / (2.0 * extent);
    let map = |p: [f64; 2]| ((p[0] + extent) * scale, (extent - p[1]) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{size}\" height=\"{size}\" viewBox=\"0 0 {size} {size}\">"
    );
    let (cx, cy) = map([0.0, 0.0]);
    let _ = writeln!(
        s,
        "<rect x=\"0\" y=\"0\" width=\"{size}\" height=\"{size}\" fill=\"white\"/>\n<circle cx=\"{cx}\" cy=\"{cy}\" r=\"1.5\" fill=\"gray\"/>"
    );
    for layer in layers {
        let _ = writeln!(s, "<g id=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{}>", layer.id, layer.color,
            if layer.dashed { " stroke-dasharray=\"6 4\"" } else { "" });
        for lp in layer.loops {
            let mut pts: Vec<String> = lp.iter().map(|&p| {
                let (x, y) = map(p);
                format!("{x:.3},{y:.3}")
            }).collect();
            if let Some(first) = pts.first().cloned() {
                pts.push(first);
            }
            let _ = writeln!(s, "<polyline points=\"{}\"/>", pts.join(" "));
        }
        s.push_str("</g>\n");
    }
    s.push_str("</svg>\n");
    s
}

pub fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let t = if len2 > 0.0 { (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

fn segments(loops: &[Vec<[f64; 2]>]) -> Vec<([f64; 2], [f64; 2])> {
    loops.iter().flat_map(|l| (0..l.len()).map(move |i| (l[i], l[(i + 1) % l.len()]))).collect()
}

// Points along every segment, spaced at most `step`.
fn samples(loops: &[Vec<[f64; 2]>], step: f64) -> Vec<[f64; 2]> {
    let mut out = Vec::new();
    for (a, b) in segments(loops) {
        let n = (((b[0] - a[0]).hypot(b[1] - a[1]) / step).ceil() as usize).max(1);
        for k in 0..n {
            let t = k as f64 / n as f64;
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}

fn directed(from: &[Vec<[f64; 2]>], to: &[Vec<[f64; 2]>], step: f64) -> f64 {
    let segs = segments(to);
    samples(from, step)
        .into_iter()
        .map(|p| segs.iter().map(|&(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two sets of closed polylines,
/// evaluated on points spaced at most `step` along each curve.
pub fn hausdorff(a: &[Vec<[f64; 2]>], b: &[Vec<[f64; 2]>], step: f64) -> f64 {
    directed(a, b, step).max(directed(b, a, step))
}

/// Largest `| |p − center| − radius |` over the vertices of the loops.
pub fn radial_deviation(loops: &[Vec<[f64; 2]>], center: [f64; 2], radius: f64) -> f64 {
    loops.iter().flatten().map(|p| ((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs()).fold(0.0, f64::max)
}
