//! P1 interpolation between meshes of one refinement hierarchy.

use std::collections::HashMap;

use super::{Field, SpaceKind};
use crate::mesh::Mesh;
use crate::{Error, Result};

/// Interpolation from a coarse mesh to a mesh refined from it. Every fine
/// vertex is a weighted average of coarse vertices, resolved through the
/// recorded midpoint genealogy.
#[derive(Clone, Debug)]
pub struct Prolongation {
    coarse_vertices: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Prolongation {
    pub fn new(coarse: &Mesh, fine: &Mesh) -> Result<Self> {
        if !coarse.same_hierarchy(fine) {
            return Err(Error::NotInHierarchy);
        }
        let coarse_index: HashMap<u64, usize> =
            coarse.lineage().keys().iter().enumerate().map(|(i, &k)| (k, i)).collect();
        let mut memo: HashMap<u64, Vec<(usize, f64)>> = HashMap::new();
        let mut rows = Vec::with_capacity(fine.num_vertices());
        for &k in fine.lineage().keys() {
            rows.push(resolve(k, fine, &coarse_index, &mut memo)?);
        }
        Ok(Prolongation { coarse_vertices: coarse.num_vertices(), rows })
    }

    pub fn fine_vertices(&self) -> usize {
        self.rows.len()
    }

    pub fn coarse_vertices(&self) -> usize {
        self.coarse_vertices
    }

    /// Nodal values on the fine mesh; scalar or interleaved 2-vector fields.
    pub fn apply(&self, coarse: &Field) -> Result<Field> {
        let comps = self.components(coarse.kind(), coarse.len(), self.coarse_vertices)?;
        let c = coarse.values();
        let mut out = vec![0.0; comps * self.rows.len()];
        for (v, row) in self.rows.iter().enumerate() {
            for comp in 0..comps {
                out[comps * v + comp] = row.iter().map(|&(i, w)| w * c[comps * i + comp]).sum();
            }
        }
        Ok(Field::new(coarse.kind(), out))
    }

    /// Transpose: pulls a fine covector back to the coarse dofs.
    pub fn transpose_apply(&self, fine: &Field) -> Result<Field> {
        let comps = self.components(fine.kind(), fine.len(), self.rows.len())?;
        let f = fine.values();
        let mut out = vec![0.0; comps * self.coarse_vertices];
        for (v, row) in self.rows.iter().enumerate() {
            for &(i, w) in row {
                for comp in 0..comps {
                    out[comps * i + comp] += w * f[comps * v + comp];
                }
            }
        }
        Ok(Field::new(fine.kind(), out))
    }

    fn components(&self, kind: SpaceKind, len: usize, vertices: usize) -> Result<usize> {
        let comps = match kind {
            SpaceKind::P1Scalar => 1,
            SpaceKind::P1Vec2 => 2,
            SpaceKind::Rt0 => return Err(Error::InvalidArgument("prolongation is defined for P1 fields".into())),
        };
        if len != comps * vertices {
            return Err(Error::InvalidArgument(format!("field has {len} dofs, expected {}", comps * vertices)));
        }
        Ok(comps)
    }
}

fn resolve(
    key: u64,
    fine: &Mesh,
    coarse_index: &HashMap<u64, usize>,
    memo: &mut HashMap<u64, Vec<(usize, f64)>>,
) -> Result<Vec<(usize, f64)>> {
    if let Some(&i) = coarse_index.get(&key) {
        return Ok(vec![(i, 1.0)]);
    }
    if let Some(row) = memo.get(&key) {
        return Ok(row.clone());
    }
    let (a, b) = fine.lineage().parents(key).ok_or(Error::NotInHierarchy)?;
    let mut row = resolve(a, fine, coarse_index, memo)?;
    row.iter_mut().for_each(|e| e.1 *= 0.5);
    for (i, w) in resolve(b, fine, coarse_index, memo)? {
        match row.iter_mut().find(|e| e.0 == i) {
            Some(e) => e.1 += 0.5 * w,
            None => row.push((i, 0.5 * w)),
        }
    }
    row.sort_by_key(|e| e.0);
    memo.insert(key, row.clone());
    Ok(row)
}

/// Interpolates a coarse P1 field onto a mesh refined from its mesh.
pub fn prolong(coarse_field: &Field, coarse: &Mesh, fine: &Mesh) -> Result<Field> {
    Prolongation::new(coarse, fine)?.apply(coarse_field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_disk_mesh, refine, refine_uniform, MarkSet};

    #[test]
    fn linear_functions_are_reproduced() {
        let coarse = generate_disk_mesh(3.0, 2.0, 0.8).unwrap();
        let mid = refine(&coarse, &MarkSet::from_iter([0, 3, 10, 11])).unwrap();
        let fine = refine(&mid, &MarkSet::from_iter([1, 2, 5])).unwrap();
        let f = |p: [f64; 2]| 1.0 + 2.0 * p[0] - 0.5 * p[1];
        let c = Field::interpolate(&coarse, f);
        let out = prolong(&c, &coarse, &fine).unwrap();
        let outer = fine.outer_vertex_mask();
        for (v, &p) in fine.vertices().iter().enumerate() {
            // projected outer midpoints leave the chord, skip them
            if !outer[v] {
                assert!((out.values()[v] - f(p)).abs() < 1e-12);
            }
        }
        for v in 0..coarse.num_vertices() {
            assert_eq!(out.values()[v], c.values()[v]);
        }
    }

    #[test]
    fn unrelated_meshes_are_rejected() {
        let a = generate_disk_mesh(3.0, 2.0, 0.8).unwrap();
        let b = generate_disk_mesh(3.0, 2.0, 0.8).unwrap();
        assert!(matches!(Prolongation::new(&a, &refine_uniform(&b).unwrap()), Err(Error::NotInHierarchy)));
    }

    #[test]
    fn transpose_is_adjoint() {
        let coarse = generate_disk_mesh(3.0, 2.0, 0.8).unwrap();
        let fine = refine_uniform(&coarse).unwrap();
        let p = Prolongation::new(&coarse, &fine).unwrap();
        let x: Vec<f64> = (0..2 * coarse.num_vertices()).map(|i| (i as f64).cos()).collect();
        let y: Vec<f64> = (0..2 * fine.num_vertices()).map(|i| (i as f64 * 0.3).sin()).collect();
        let px = p.apply(&Field::new(SpaceKind::P1Vec2, x.clone())).unwrap();
        let pty = p.transpose_apply(&Field::new(SpaceKind::P1Vec2, y.clone())).unwrap();
        let lhs: f64 = px.values().iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = pty.values().iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }
}
