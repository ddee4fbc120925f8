//! Certified descent for shape optimization, specialised to the
//! electrical impedance tomography (EIT) inclusion-identification problem.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: conforming triangular meshes with region tags, red–green
//!   refinement, vertex motion and an ASCII file format.
//! - [`fem`]: quadrature, P1 / P1² / RT0 spaces, assembly, sparse SPD
//!   solves and nested-mesh transfer.
//! - [`eit`]: state problems, the Kohn–Vogelius functional, its volumetric
//!   shape gradient and the analytical Bessel reference solution.
//! - [`descent`]: the H¹ Riesz representative of the shape gradient.
//! - [`certify`]: influence functions, equilibrated fluxes, guaranteed
//!   energy-norm bounds and the certification predicate.
//! - [`cda`]: the certified descent driver.





pub mod cda;
pub mod certify;
pub mod descent;
pub mod eit;
mod error;
pub mod fem;
pub mod mesh;

pub use error::{Error, Result};
