//! Red–green refinement.
//!
//! Marked triangles are split into four (red). Neighbours left with exactly
//! one split edge are bisected (green); neighbours with two or more split
//! edges are promoted to red. Green pairs are merged back into their parent
//! before every refinement so that green children are never split again.

use std::collections::{HashMap, HashSet};

use super::{BoundaryLabel, MarkSet, Mesh, OuterBoundary, Triangle};
use crate::{Error, Result};

/// Bookkeeping for a green child: the parent triangle, its bisected edge
/// and the midpoint vertex on that edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Green {
    pub parent: [usize; 3],
    pub edge: [usize; 2],
    pub midpoint: usize,
}

#[derive(Clone, Copy)]
struct Work {
    tri: Triangle,
    marked: bool,
}

fn key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

struct Splitter<'m> {
    mesh: &'m Mesh,
    vertices: Vec<[f64; 2]>,
    midpoint: HashMap<[usize; 2], usize>,
    outer: HashSet<[usize; 2]>,
    new_pairs: Vec<[usize; 2]>,
}

impl Splitter<'_> {
    fn mid(&self, p: usize, q: usize) -> Option<usize> {
        self.midpoint.get(&key(p, q)).copied()
    }

    fn split(&mut self, p: usize, q: usize) -> usize {
        let k = key(p, q);
        if let Some(&m) = self.midpoint.get(&k) {
            return m;
        }
        let (a, b) = (self.vertices[p], self.vertices[q]);
        let mut m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
        if self.outer.contains(&k) {
            if let OuterBoundary::Circle { radius } = self.mesh.outer() {
                let r = m[0].hypot(m[1]);
                m = [m[0] * radius / r, m[1] * radius / r];
            }
        }
        let id = self.vertices.len();
        self.vertices.push(m);
        self.midpoint.insert(k, id);
        self.new_pairs.push(k);
        if self.outer.contains(&k) {
            self.outer.insert(key(p, id));
            self.outer.insert(key(id, q));
        }
        id
    }

    // An edge needs splitting in its owner when it already carries a
    // midpoint whose half-edges are split further: a green bisection
    // would leave a hanging node.
    fn deep(&self, p: usize, q: usize) -> bool {
        match self.mid(p, q) {
            Some(m) => self.mid(p, m).is_some() || self.mid(m, q).is_some(),
            None => false,
        }
    }
}

/// Refines the marked triangles and closes the mesh conformingly.
///
/// Region tags and boundary labels are inherited. When the outer boundary is
/// a circle, new outer midpoints are projected onto it; interface midpoints
/// stay on the straight interface segments.
pub fn refine(mesh: &Mesh, marks: &MarkSet) -> Result<Mesh> {
    if let Some(bad) = marks.iter().find(|&t| t >= mesh.num_triangles()) {
        return Err(Error::InvalidArgument(format!(
            "marked triangle {bad} out of range ({} triangles)",
            mesh.num_triangles()
        )));
    }
    if marks.is_empty() {
        return Ok(mesh.clone());
    }

    let mut s = Splitter {
        mesh,
        vertices: mesh.vertices().to_vec(),
        midpoint: HashMap::new(),
        outer: mesh
            .boundary_edges()
            .iter()
            .filter(|b| b.label == BoundaryLabel::Outer)
            .map(|b| b.vertices)
            .collect(),
        new_pairs: Vec::new(),
    };

    // Merge green pairs back into their parents.
    let mut work: Vec<Work> = Vec::with_capacity(mesh.num_triangles());
    let mut group_of: HashMap<[usize; 3], usize> = HashMap::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let marked = marks.contains(t);
        match mesh.green_parents()[t] {
            None => work.push(Work { tri: *tri, marked }),
            Some(green) => {
                if let Some(&b) = group_of.get(&green.parent) {
                    work[b].marked |= marked;
                } else {
                    group_of.insert(green.parent, work.len());
                    let [p, q] = green.edge;
                    s.midpoint.insert(key(p, q), green.midpoint);
                    if s.outer.contains(&key(p, green.midpoint)) {
                        s.outer.insert(key(p, q));
                    }
                    work.push(Work {
                        tri: Triangle { vertices: green.parent, region: tri.region },
                        marked,
                    });
                }
            }
        }
    }

    // Red sweeps until no triangle needs a red split.
    loop {
        let mut changed = false;
        let mut next = Vec::with_capacity(work.len());
        for w in work {
            let [x, y, z] = w.tri.vertices;
            let edges = [(x, y), (y, z), (z, x)];
            let count = edges.iter().filter(|(p, q)| s.mid(*p, *q).is_some()).count();
            let deep = edges.iter().any(|&(p, q)| s.deep(p, q));
            if w.marked || count >= 2 || deep {
                changed = true;
                let mxy = s.split(x, y);
                let myz = s.split(y, z);
                let mzx = s.split(z, x);
                for vertices in [[x, mxy, mzx], [mxy, y, myz], [mzx, myz, z], [mxy, myz, mzx]] {
                    next.push(Work { tri: Triangle { vertices, region: w.tri.region }, marked: false });
                }
            } else {
                next.push(w);
            }
        }
        work = next;
        if !changed {
            break;
        }
    }

    // Green closure: at most one split edge remains per triangle.
    let mut triangles = Vec::with_capacity(work.len() + work.len() / 2);
    let mut green = Vec::with_capacity(triangles.capacity());
    for w in &work {
        let [x, y, z] = w.tri.vertices;
        let region = w.tri.region;
        match [(x, y, z), (y, z, x), (z, x, y)].into_iter().find(|&(_, p, q)| s.mid(p, q).is_some()) {
            Some((r, p, q)) => {
                let m = s.mid(p, q).unwrap();
                let info = Some(Green { parent: w.tri.vertices, edge: [p, q], midpoint: m });
                triangles.push(Triangle { vertices: [r, p, m], region });
                triangles.push(Triangle { vertices: [r, m, q], region });
                green.push(info);
                green.push(info);
            }
            None => {
                triangles.push(w.tri);
                green.push(None);
            }
        }
    }

    let lineage = mesh.lineage().extended(&s.new_pairs);
    Mesh::assemble(s.vertices, triangles, mesh.outer(), lineage, green)
}

/// Uniform refinement: every triangle is split into four.
pub fn refine_uniform(mesh: &Mesh) -> Result<Mesh> {
    refine(mesh, &MarkSet::all(mesh.num_triangles()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_mesh, Region};

    fn square() -> Mesh {
        let vertices = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        let triangles = vec![
            Triangle { vertices: [0, 1, 2], region: Region::Background },
            Triangle { vertices: [0, 2, 3], region: Region::Background },
        ];
        Mesh::new(vertices, triangles, OuterBoundary::Polygonal).unwrap()
    }

    #[test]
    fn uniform_refinement_quarters_areas() {
        let m = square();
        let fine = refine_uniform(&m).unwrap();
        assert_eq!(fine.num_triangles(), 8);
        for t in 0..fine.num_triangles() {
            assert!((fine.signed_area(t) - 0.125).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_marks_is_identity() {
        let m = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let same = refine(&m, &MarkSet::new()).unwrap();
        assert_eq!(same, m);
    }

    #[test]
    fn single_mark_closes_with_green() {
        let m = square();
        let fine = refine(&m, &[0].into_iter().collect()).unwrap();
        // red split of triangle 0 plus a green bisection of triangle 1
        assert_eq!(fine.num_triangles(), 6);
        assert_eq!(fine.green_parents().iter().filter(|g| g.is_some()).count(), 2);
        fine.check().unwrap();
    }

    #[test]
    fn green_children_are_merged_before_refining_again() {
        let m = square();
        let once = refine(&m, &[0].into_iter().collect()).unwrap();
        let green_child = once.green_parents().iter().position(|g| g.is_some()).unwrap();
        let twice = refine(&once, &[green_child].into_iter().collect()).unwrap();
        // the green parent is restored and split red: both originals are red now
        assert_eq!(twice.num_triangles(), 8);
        assert!(twice.green_parents().iter().all(|g| g.is_none()));
        let min_q = crate::mesh::quality(&twice);
        assert!((min_q - crate::mesh::quality(&refine_uniform(&m).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn refining_next_to_a_green_pair_stays_conforming() {
        let m = square();
        let once = refine(&m, &[0].into_iter().collect()).unwrap();
        // corner child touching the half of the diagonal shared with the green pair
        let twice = refine(&once, &[0].into_iter().collect()).unwrap();
        twice.check().unwrap();
        assert!((twice.total_area() - 1.0).abs() < 1e-14);
        let thrice = refine(&twice, &[0, 1].into_iter().collect()).unwrap();
        thrice.check().unwrap();
        assert!((thrice.total_area() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn disk_boundary_midpoints_are_projected() {
        let m = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let fine = refine_uniform(&m).unwrap();
        let outer = fine.outer_vertex_mask();
        for (v, p) in fine.vertices().iter().enumerate() {
            if outer[v] {
                assert!(((p[0] * p[0] + p[1] * p[1]).sqrt() - 5.0).abs() < 1e-12);
            }
        }
        // interface midpoints stay on chords, inside the circle
        let iface = fine.interface_vertex_mask();
        let inside = fine
            .vertices()
            .iter()
            .enumerate()
            .filter(|(v, p)| iface[*v] && (p[0] * p[0] + p[1] * p[1]).sqrt() < 4.0 - 1e-9)
            .count();
        assert!(inside > 0);
    }
}
