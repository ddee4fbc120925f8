//! Conforming 2D triangular meshes with region tags.
//!
//! A [`Mesh`] is immutable: generation, refinement and vertex motion all
//! return new meshes. Every constructor runs the conformity checker, so a
//! `Mesh` value always satisfies:
//!
//! - counter-clockwise triangles with strictly positive area,
//! - every edge shared by one (outer boundary) or two triangles,
//! - `Interface` edges separate an `Inclusion` from a `Background` triangle,
//! - interface and outer edges form closed loops.

mod generate;
mod io;
mod lineage;
mod refine;

use std::collections::{BTreeSet, HashMap};

pub use generate::{
    circle_polygon, ellipse_polygon, generate_disk_mesh, generate_disk_mesh_with_inclusions,
    generate_square_mesh, Polygon,
};
pub use io::{format_mesh, parse_mesh, read_mesh, write_mesh};
pub(crate) use lineage::Lineage;
pub(crate) use refine::Green;
pub use refine::{refine, refine_uniform};

use crate::fem::{Field, SpaceKind};
use crate::{Error, Result};

/// Signed areas at or below this fraction of the mean area count as inverted.
pub const INVERSION_THRESHOLD: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Region {
    Background,
    Inclusion,
}

impl Region {
    pub fn tag(self) -> u8 {
        match self {
            Region::Background => 0,
            Region::Inclusion => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Region> {
        match tag {
            0 => Some(Region::Background),
            1 => Some(Region::Inclusion),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryLabel {
    Outer,
    Interface,
}

impl BoundaryLabel {
    pub fn tag(self) -> u8 {
        match self {
            BoundaryLabel::Outer => 0,
            BoundaryLabel::Interface => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<BoundaryLabel> {
        match tag {
            0 => Some(BoundaryLabel::Outer),
            1 => Some(BoundaryLabel::Interface),
            _ => None,
        }
    }
}

/// Analytic description of the outer boundary, used to place new boundary
/// vertices during refinement.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OuterBoundary {
    /// Straight edges; refinement midpoints stay on the segments.
    Polygonal,
    /// Circle centred at the origin; new outer midpoints are projected onto it.
    Circle { radius: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Triangle {
    pub vertices: [usize; 3],
    pub region: Region,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundaryEdge {
    pub vertices: [usize; 2],
    pub label: BoundaryLabel,
}

/// Set of triangle indices selected for refinement.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct MarkSet(BTreeSet<usize>);

impl MarkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn all(num_triangles: usize) -> Self {
        MarkSet((0..num_triangles).collect())
    }

    pub fn insert(&mut self, triangle: usize) {
        self.0.insert(triangle);
    }

    pub fn contains(&self, triangle: usize) -> bool {
        self.0.contains(&triangle)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<usize> for MarkSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        MarkSet(iter.into_iter().collect())
    }
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<[f64; 2]>,
    triangles: Vec<Triangle>,
    boundary: Vec<BoundaryEdge>,
    edges: Vec<[usize; 2]>,
    triangle_edges: Vec<[usize; 3]>,
    edge_triangles: Vec<[Option<usize>; 2]>,
    edge_labels: Vec<Option<BoundaryLabel>>,
    outer: OuterBoundary,
    lineage: Lineage,
    // Parent triangle and bisection midpoint for green-closure children.
    green_parent: Vec<Option<Green>>,
}

impl PartialEq for Mesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
            && self.triangles == other.triangles
            && self.boundary == other.boundary
    }
}

impl Mesh {
    /// Builds a mesh from raw arrays, deriving the edge table and the
    /// boundary labels, then runs the conformity checker.
    pub fn new(vertices: Vec<[f64; 2]>, triangles: Vec<Triangle>, outer: OuterBoundary) -> Result<Mesh> {
        let lineage = Lineage::root(vertices.len());
        let green = vec![None; triangles.len()];
        Mesh::assemble(vertices, triangles, outer, lineage, green)
    }

    /// Like [`Mesh::new`] but also checks that `boundary` lists exactly the
    /// outer and interface edges implied by the triangles.
    pub fn with_boundary(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<Triangle>,
        boundary: &[BoundaryEdge],
        outer: OuterBoundary,
    ) -> Result<Mesh> {
        let mesh = Mesh::new(vertices, triangles, outer)?;
        let given: BTreeSet<BoundaryEdge> = boundary.iter().map(normalized).collect();
        if given.len() != boundary.len() {
            return Err(Error::InvalidMesh("duplicate boundary edge".into()));
        }
        let derived: BTreeSet<BoundaryEdge> = mesh.boundary.iter().copied().collect();
        if let Some(extra) = given.difference(&derived).next() {
            return Err(Error::InvalidMesh(format!(
                "boundary edge ({}, {}) with label {:?} is not a {:?} edge of the triangulation",
                extra.vertices[0], extra.vertices[1], extra.label, extra.label
            )));
        }
        if let Some(missing) = derived.difference(&given).next() {
            return Err(Error::InvalidMesh(format!(
                "{:?} edge ({}, {}) missing from the boundary list",
                missing.label, missing.vertices[0], missing.vertices[1]
            )));
        }
        Ok(mesh)
    }

    pub(crate) fn assemble(
        vertices: Vec<[f64; 2]>,
        triangles: Vec<Triangle>,
        outer: OuterBoundary,
        lineage: Lineage,
        green_parent: Vec<Option<Green>>,
    ) -> Result<Mesh> {
        let nv = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            let [a, b, c] = tri.vertices;
            if a >= nv || b >= nv || c >= nv {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex index out of range (have {nv} vertices)"
                )));
            }
            if a == b || b == c || a == c {
                return Err(Error::InvalidMesh(format!("triangle {t} repeats a vertex")));
            }
        }

        let mut index: HashMap<[usize; 2], usize> = HashMap::with_capacity(triangles.len() * 2);
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            let mut local = [0usize; 3];
            for (i, slot) in local.iter_mut().enumerate() {
                let p = tri.vertices[(i + 1) % 3];
                let q = tri.vertices[(i + 2) % 3];
                let key = if p < q { [p, q] } else { [q, p] };
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push(key);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                let owners = &mut edge_triangles[e];
                if owners[0].is_none() {
                    owners[0] = Some(t);
                } else if owners[1].is_none() {
                    owners[1] = Some(t);
                } else {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({}, {}) is shared by more than two triangles",
                        key[0], key[1]
                    )));
                }
                *slot = e;
            }
            triangle_edges.push(local);
        }

        let mut edge_labels = vec![None; edges.len()];
        let mut boundary = Vec::new();
        for (e, owners) in edge_triangles.iter().enumerate() {
            let label = match owners {
                [Some(_), None] => Some(BoundaryLabel::Outer),
                [Some(s), Some(t)] if triangles[*s].region != triangles[*t].region => {
                    Some(BoundaryLabel::Interface)
                }
                _ => None,
            };
            if let Some(label) = label {
                edge_labels[e] = Some(label);
                boundary.push(BoundaryEdge { vertices: edges[e], label });
            }
        }
        boundary.sort();

        let mesh = Mesh {
            vertices,
            triangles,
            boundary,
            edges,
            triangle_edges,
            edge_triangles,
            edge_labels,
            outer,
            lineage,
            green_parent,
        };
        mesh.check()?;
        Ok(mesh)
    }

    /// Conformity checker: orientation, edge sharing, tag consistency and
    /// loop closure.
    pub fn check(&self) -> Result<()> {
        if self.triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        let mean = self.triangles.iter().enumerate().map(|(t, _)| self.signed_area(t).abs()).sum::<f64>()
            / self.triangles.len() as f64;
        for t in 0..self.triangles.len() {
            let area = self.signed_area(t);
            if !(area > INVERSION_THRESHOLD * mean) {
                return Err(Error::ElementInversion { triangle: t, area });
            }
        }

        let mut used = vec![false; self.vertices.len()];
        for tri in &self.triangles {
            for &v in &tri.vertices {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(Error::InvalidMesh(format!("vertex {v} is not used by any triangle")));
        }

        // Interior edges must be traversed in opposite directions by their two triangles.
        for (e, owners) in self.edge_triangles.iter().enumerate() {
            if let [Some(s), Some(t)] = owners {
                let ds = self.traversal(*s, e);
                let dt = self.traversal(*t, e);
                if ds == dt {
                    return Err(Error::InvalidMesh(format!(
                        "triangles {s} and {t} have inconsistent orientation across edge {e}"
                    )));
                }
            }
        }

        for label in [BoundaryLabel::Outer, BoundaryLabel::Interface] {
            let mut degree = vec![0usize; self.vertices.len()];
            for b in self.boundary.iter().filter(|b| b.label == label) {
                degree[b.vertices[0]] += 1;
                degree[b.vertices[1]] += 1;
            }
            if let Some(v) = degree.iter().position(|d| d % 2 == 1) {
                return Err(Error::InvalidMesh(format!("{label:?} edges do not form closed loops at vertex {v}")));
            }
        }
        if !self.boundary.iter().any(|b| b.label == BoundaryLabel::Outer) {
            return Err(Error::InvalidMesh("mesh has no outer boundary".into()));
        }
        Ok(())
    }

    // true if triangle t traverses edge e from low to high index
    fn traversal(&self, t: usize, e: usize) -> bool {
        let i = self.triangle_edges[t].iter().position(|&x| x == e).unwrap();
        self.triangles[t].vertices[(i + 1) % 3] == self.edges[e][0]
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[Triangle] {
        &self.triangles
    }

    /// Outer and interface edges, sorted by label then vertex pair.
    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Global edges as (low, high) vertex pairs.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    /// Global edge indices of a triangle; local edge `i` is opposite local vertex `i`.
    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.triangle_edges
    }

    pub fn edge_triangles(&self, e: usize) -> [Option<usize>; 2] {
        self.edge_triangles[e]
    }

    pub fn edge_label(&self, e: usize) -> Option<BoundaryLabel> {
        self.edge_labels[e]
    }

    pub fn outer(&self) -> OuterBoundary {
        self.outer
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

    pub(crate) fn lineage(&self) -> &Lineage {
        &self.lineage
    }

    pub(crate) fn green_parents(&self) -> &[Option<Green>] {
        &self.green_parent
    }

    pub fn corners(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t].vertices;
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn signed_area(&self, t: usize) -> f64 {
        let [p, q, r] = self.corners(t);
        0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.triangles[t].region == region)
            .map(|t| self.signed_area(t))
            .sum()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e];
        dist(self.vertices[a], self.vertices[b])
    }

    /// RT0 orientation sign of local edge `i` of triangle `t`: +1 when the
    /// global edge normal (right of low → high) points out of `t`.
    pub fn rt0_sign(&self, t: usize, i: usize) -> f64 {
        let e = self.triangle_edges[t][i];
        if self.triangles[t].vertices[(i + 1) % 3] == self.edges[e][0] {
            1.0
        } else {
            -1.0
        }
    }

    /// Per-vertex flag: true for vertices on an outer edge.
    pub fn outer_vertex_mask(&self) -> Vec<bool> {
        self.label_mask(BoundaryLabel::Outer)
    }

    /// Per-vertex flag: true for vertices on an interface edge.
    pub fn interface_vertex_mask(&self) -> Vec<bool> {
        self.label_mask(BoundaryLabel::Interface)
    }

    fn label_mask(&self, label: BoundaryLabel) -> Vec<bool> {
        let mut mask = vec![false; self.vertices.len()];
        for b in self.boundary.iter().filter(|b| b.label == label) {
            mask[b.vertices[0]] = true;
            mask[b.vertices[1]] = true;
        }
        mask
    }

    pub fn outer_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edge_labels[e] == Some(BoundaryLabel::Outer))
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edge_labels[e] == Some(BoundaryLabel::Interface))
    }

    pub fn min_interface_edge_length(&self) -> Option<f64> {
        self.interface_edges().map(|e| self.edge_length(e)).reduce(f64::min)
    }

    pub fn mean_interface_edge_length(&self) -> Option<f64> {
        let lengths: Vec<f64> = self.interface_edges().map(|e| self.edge_length(e)).collect();
        (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64)
    }

    pub fn max_edge_length(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Closed vertex loops formed by the edges carrying `label`.
    pub fn loops(&self, label: BoundaryLabel) -> Vec<Vec<usize>> {
        let mut adjacency: HashMap<usize, Vec<usize>> = HashMap::new();
        let mut starts = BTreeSet::new();
        for b in self.boundary.iter().filter(|b| b.label == label) {
            let [p, q] = b.vertices;
            adjacency.entry(p).or_default().push(q);
            adjacency.entry(q).or_default().push(p);
            starts.insert(p);
        }
        for list in adjacency.values_mut() {
            list.sort_unstable();
        }
        let mut visited_edges: BTreeSet<[usize; 2]> = BTreeSet::new();
        let mut loops = Vec::new();
        for &start in &starts {
            let next = adjacency[&start].iter().copied().find(|&n| !visited_edges.contains(&key(start, n)));
            let Some(mut next) = next else { continue };
            let mut path = vec![start];
            let mut current = start;
            loop {
                visited_edges.insert(key(current, next));
                if next == start {
                    break;
                }
                path.push(next);
                current = next;
                match adjacency[&current].iter().copied().find(|&n| !visited_edges.contains(&key(current, n))) {
                    Some(n) => next = n,
                    None => break,
                }
            }
            loops.push(path);
        }
        loops
    }

    /// Interface loops as coordinate polylines (closed, first point not repeated).
    pub fn interface_polylines(&self) -> Vec<Vec<[f64; 2]>> {
        self.loops(BoundaryLabel::Interface)
            .into_iter()
            .map(|l| l.into_iter().map(|v| self.vertices[v]).collect())
            .collect()
    }

    /// Returns a copy with the given vertex coordinates, keeping connectivity,
    /// tags and lineage. Runs the conformity checker.
    pub(crate) fn with_vertices(&self, vertices: Vec<[f64; 2]>) -> Result<Mesh> {
        let mesh = Mesh { vertices, ..self.clone() };
        let mean = self.mean_area();
        for t in 0..mesh.triangles.len() {
            let area = mesh.signed_area(t);
            if !(area > INVERSION_THRESHOLD * mean) {
                return Err(Error::ElementInversion { triangle: t, area });
            }
        }
        Ok(mesh)
    }

    fn mean_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.signed_area(t).abs()).sum::<f64>() / self.triangles.len() as f64
    }

    /// True when both meshes descend from the same generated root mesh.
    pub fn same_hierarchy(&self, other: &Mesh) -> bool {
        self.lineage.same_family(&other.lineage)
    }

    /// True when every vertex of `coarse` is also a vertex of this mesh, so
    /// that the coarse P1 space is contained in this mesh's.
    pub fn contains_vertices_of(&self, coarse: &Mesh) -> bool {
        if !self.same_hierarchy(coarse) {
            return false;
        }
        let mine: std::collections::HashSet<u64> = self.lineage.keys().iter().copied().collect();
        coarse.lineage.keys().iter().all(|k| mine.contains(k))
    }
}

fn key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

fn normalized(b: &BoundaryEdge) -> BoundaryEdge {
    BoundaryEdge { vertices: key(b.vertices[0], b.vertices[1]), label: b.label }
}

pub(crate) fn dist(p: [f64; 2], q: [f64; 2]) -> f64 {
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

/// Minimum over triangles of 2·inradius / circumradius; 1 for an equilateral mesh.
pub fn quality(mesh: &Mesh) -> f64 {
    (0..mesh.num_triangles()).map(|t| triangle_quality(mesh.corners(t))).fold(1.0, f64::min)
}

pub fn triangle_quality([p, q, r]: [[f64; 2]; 3]) -> f64 {
    let a = dist(q, r);
    let b = dist(p, r);
    let c = dist(p, q);
    let area = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])).abs();
    // r_in = 2A / (a+b+c), R = abc / 4A
    16.0 * area * area / ((a + b + c) * a * b * c)
}

/// Moves every vertex by `mu` times the nodal displacement.
///
/// The displacement must vanish at outer vertices. Fails with
/// [`Error::ElementInversion`] if any triangle collapses or flips.
pub fn move_vertices(mesh: &Mesh, displacement: &Field, mu: f64) -> Result<Mesh> {
    if displacement.kind() != SpaceKind::P1Vec2 || displacement.len() != 2 * mesh.num_vertices() {
        return Err(Error::InvalidArgument(
            "displacement must be a P1 vector field on this mesh".into(),
        ));
    }
    let theta = displacement.values();
    let outer = mesh.outer_vertex_mask();
    for (v, on_outer) in outer.iter().enumerate() {
        if *on_outer && (theta[2 * v] != 0.0 || theta[2 * v + 1] != 0.0) {
            return Err(Error::InvalidArgument(format!("displacement is nonzero at outer vertex {v}")));
        }
    }
    let vertices = mesh
        .vertices
        .iter()
        .enumerate()
        .map(|(v, p)| [p[0] + mu * theta[2 * v], p[1] + mu * theta[2 * v + 1]])
        .collect();
    mesh.with_vertices(vertices)
}

/// Displacement of a few Gauss-Seidel smoothing sweeps. Each free vertex is
/// pulled towards the mean apex of the equilateral triangles over the edges
/// opposite to it; a move is kept only when the worst quality of its star
/// improves. Outer and interface vertices stay put.
pub fn smoothing_displacement(mesh: &Mesh, sweeps: usize) -> Field {
    let fixed: Vec<bool> =
        mesh.outer_vertex_mask().iter().zip(mesh.interface_vertex_mask()).map(|(&o, i)| o || i).collect();
    let mut star = vec![Vec::new(); mesh.num_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        for &v in &tri.vertices {
            star[v].push(t);
        }
    }
    let mut current = mesh.vertices.clone();
    // opposite edge (a, b) of v, ordered so that (v, a, b) has the orientation of t
    let opposite = |t: usize, v: usize| {
        let [p, q, r] = mesh.triangles()[t].vertices;
        if v == p {
            (q, r)
        } else if v == q {
            (r, p)
        } else {
            (p, q)
        }
    };
    let worst = |pts: &[[f64; 2]], v: usize, at: [f64; 2]| {
        star[v].iter().fold(f64::INFINITY, |m, &t| {
            let (a, b) = opposite(t, v);
            let area = (pts[a][0] - at[0]) * (pts[b][1] - at[1]) - (pts[b][0] - at[0]) * (pts[a][1] - at[1]);
            let sign = mesh.signed_area(t).signum();
            if area * sign <= 0.0 {
                return f64::NEG_INFINITY;
            }
            m.min(triangle_quality([at, pts[a], pts[b]]))
        })
    };
    for _ in 0..sweeps {
        let mut moved = false;
        for v in 0..current.len() {
            if fixed[v] || star[v].is_empty() {
                continue;
            }
            let mut target = [0.0, 0.0];
            for &t in &star[v] {
                let (a, b) = opposite(t, v);
                let (pa, pb) = (current[a], current[b]);
                let d = [pb[0] - pa[0], pb[1] - pa[1]];
                let side = mesh.signed_area(t).signum() * 0.5 * 3f64.sqrt();
                target[0] += 0.5 * (pa[0] + pb[0]) - side * d[1];
                target[1] += 0.5 * (pa[1] + pb[1]) + side * d[0];
            }
            let n = star[v].len() as f64;
            let old = current[v];
            let mut best = (worst(&current, v, old), old);
            let mut consider = |at: [f64; 2]| {
                let q = worst(&current, v, at);
                if q > best.0 {
                    best = (q, at);
                }
            };
            consider([0.5 * (old[0] + target[0] / n), 0.5 * (old[1] + target[1] / n)]);
            // pattern search on the star's worst quality
            let shortest = star[v]
                .iter()
                .flat_map(|&t| {
                    let (a, b) = opposite(t, v);
                    [dist(old, current[a]), dist(old, current[b])]
                })
                .fold(f64::INFINITY, f64::min);
            for scale in [0.2, 0.05] {
                for k in 0..8 {
                    let angle = std::f64::consts::FRAC_PI_4 * k as f64;
                    consider([old[0] + scale * shortest * angle.cos(), old[1] + scale * shortest * angle.sin()]);
                }
            }
            if best.1 != old {
                current[v] = best.1;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
    let values = current.iter().zip(&mesh.vertices).flat_map(|(p, q)| [p[0] - q[0], p[1] - q[1]]).collect();
    Field::new(SpaceKind::P1Vec2, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![
            Triangle { vertices: [0, 1, 2], region: Region::Background },
            Triangle { vertices: [0, 2, 3], region: Region::Background },
        ];
        Mesh::new(vertices, triangles, OuterBoundary::Polygonal).unwrap()
    }

    #[test]
    fn equilateral_quality_is_one() {
        let q = triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]]);
        assert!((q - 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_isoceles_quality() {
        // 2 r / R with r = (2 - √2)/2 and R = √2/2.
        let q = triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!((q - 2.0 * (2f64.sqrt() - 1.0)).abs() < 1e-14);
    }

    #[test]
    fn sliver_quality_is_small() {
        let q = triangle_quality([[0.0, 0.0], [1.0, 0.0], [0.5, 0.01]]);
        assert!(q < 0.05);
    }

    #[test]
    fn edge_table_and_labels() {
        let m = unit_square();
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.outer_edges().count(), 4);
        assert_eq!(m.interface_edges().count(), 0);
        assert_eq!(m.loops(BoundaryLabel::Outer), vec![vec![0, 1, 2, 3]]);
        assert!((m.total_area() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clockwise_triangle_is_rejected() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let triangles = vec![Triangle { vertices: [0, 2, 1], region: Region::Background }];
        let err = Mesh::new(vertices, triangles, OuterBoundary::Polygonal).unwrap_err();
        assert!(matches!(err, Error::ElementInversion { triangle: 0, .. }));
    }

    #[test]
    fn interface_edges_follow_region_changes() {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![
            Triangle { vertices: [0, 1, 2], region: Region::Inclusion },
            Triangle { vertices: [0, 2, 3], region: Region::Background },
        ];
        // a single interface edge is not a closed loop
        let err = Mesh::new(vertices, triangles, OuterBoundary::Polygonal).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn rt0_signs_agree_across_shared_edge() {
        let m = unit_square();
        for e in 0..m.num_edges() {
            if let [Some(s), Some(t)] = m.edge_triangles(e) {
                let i = m.triangle_edges()[s].iter().position(|&x| x == e).unwrap();
                let j = m.triangle_edges()[t].iter().position(|&x| x == e).unwrap();
                assert_eq!(m.rt0_sign(s, i), -m.rt0_sign(t, j));
            }
        }
    }
}
