//! P1 and RT0 finite elements: spaces, quadrature, assembly, sparse SPD
//! solves and transfer between nested meshes.

pub(crate) mod assemble;
pub mod quadrature;
mod solve;
mod sparse;
mod transfer;

pub use assemble::{
    assemble_hdiv, assemble_state, energy_norm, flux_at, gradient, p1_gradients, state_matrix,
    vector_gradient, Conductivity, FluxInputs, FluxKind, StateData,
};
pub use solve::{solve_spd, LinearSystem, SpdSolver, RESIDUAL_TOLERANCE};
pub use sparse::{CsrMatrix, TripletBuilder};
pub use transfer::{prolong, Prolongation};

use crate::mesh::Mesh;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceKind {
    P1Scalar,
    /// Two components per vertex, interleaved: dof `2v + c`.
    P1Vec2,
    /// One dof per edge: total flux through the edge along its global normal.
    Rt0,
}

/// A finite element space on a given mesh, described by its kind and size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeSpace {
    pub kind: SpaceKind,
    pub num_dofs: usize,
}

impl FeSpace {
    pub fn new(mesh: &Mesh, kind: SpaceKind) -> FeSpace {
        let num_dofs = match kind {
            SpaceKind::P1Scalar => mesh.num_vertices(),
            SpaceKind::P1Vec2 => 2 * mesh.num_vertices(),
            SpaceKind::Rt0 => mesh.num_edges(),
        };
        FeSpace { kind, num_dofs }
    }

    /// Global RT0 orientation sign of each local edge of triangle `t`.
    pub fn rt0_signs(mesh: &Mesh, t: usize) -> [f64; 3] {
        [mesh.rt0_sign(t, 0), mesh.rt0_sign(t, 1), mesh.rt0_sign(t, 2)]
    }
}

/// Coefficient vector of a finite element function.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    kind: SpaceKind,
    values: Vec<f64>,
}

impl Field {
    pub fn new(kind: SpaceKind, values: Vec<f64>) -> Field {
        Field { kind, values }
    }

    pub fn zeros(space: FeSpace) -> Field {
        Field { kind: space.kind, values: vec![0.0; space.num_dofs] }
    }

    /// Checks that the field lives in `space`.
    pub fn on(self, space: FeSpace) -> Result<Field> {
        if self.kind != space.kind || self.values.len() != space.num_dofs {
            return Err(Error::InvalidArgument(format!(
                "field of kind {:?} with {} dofs does not match space {:?} with {} dofs",
                self.kind,
                self.values.len(),
                space.kind,
                space.num_dofs
            )));
        }
        Ok(self)
    }

    pub fn kind(&self) -> SpaceKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Nodal interpolation of `f` on the vertices.
    pub fn interpolate(mesh: &Mesh, f: impl Fn([f64; 2]) -> f64) -> Field {
        Field::new(SpaceKind::P1Scalar, mesh.vertices().iter().map(|&p| f(p)).collect())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field::new(self.kind, self.values.iter().map(|v| c * v).collect())
    }

    /// `self - other`; both must have the same kind and length.
    pub fn sub(&self, other: &Field) -> Field {
        assert_eq!(self.kind, other.kind);
        assert_eq!(self.len(), other.len());
        Field::new(self.kind, self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
