//! Descent direction: the Riesz representative of minus the shape gradient
//! in `(θ, δθ)_X = ∫ ∇θ : ∇δθ + θ·δθ`, with θ = 0 on the outer boundary.

use crate::fem::{state_matrix, Conductivity, CsrMatrix, Field, SpaceKind, SpdSolver};
use crate::mesh::Mesh;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DescentResult {
    pub theta: Field,
    /// `⟨d_h J, θ⟩`, equal to `−‖θ‖²_X`.
    pub directional: f64,
}

/// Factorized X-product of a mesh; the same scalar matrix serves both
/// components.
pub struct DescentSolver {
    matrix: CsrMatrix,
    solver: SpdSolver,
    outer: Vec<bool>,
}

impl DescentSolver {
    pub fn new(mesh: &Mesh) -> Result<Self> {
        let unit = Conductivity::new(1.0, 1.0)?;
        let matrix = state_matrix(mesh, &unit);
        let outer = mesh.outer_vertex_mask();
        let constrained: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| outer[v]).collect();
        let solver = SpdSolver::new(&matrix, &constrained)?;
        Ok(DescentSolver { matrix, solver, outer })
    }

    pub fn solve(&self, covector: &[f64]) -> Result<DescentResult> {
        let nv = self.outer.len();
        if covector.len() != 2 * nv {
            return Err(Error::InvalidArgument(format!(
                "covector has {} entries, expected {}",
                covector.len(),
                2 * nv
            )));
        }
        if let Some(v) = (0..nv).find(|&v| self.outer[v] && (covector[2 * v] != 0.0 || covector[2 * v + 1] != 0.0)) {
            return Err(Error::InvalidArgument(format!("covector is nonzero at outer vertex {v}")));
        }
        let zeros = vec![0.0; nv];
        let mut theta = vec![0.0; 2 * nv];
        for c in 0..2 {
            let rhs: Vec<f64> = (0..nv).map(|v| -covector[2 * v + c]).collect();
            let x = self.solver.solve(&rhs, &zeros)?;
            for v in 0..nv {
                theta[2 * v + c] = x[v];
            }
        }
        let directional = covector.iter().zip(&theta).map(|(a, b)| a * b).sum();
        Ok(DescentResult { theta: Field::new(SpaceKind::P1Vec2, theta), directional })
    }

    /// `‖θ‖²_X`.
    pub fn norm_squared(&self, theta: &Field) -> f64 {
        let nv = self.outer.len();
        (0..2)
            .map(|c| {
                let x: Vec<f64> = (0..nv).map(|v| theta.values()[2 * v + c]).collect();
                self.matrix.form(&x, &x)
            })
            .sum()
    }
}

/// Solves `(θ, δθ)_X = −⟨d_h J, δθ⟩` for all δθ vanishing on the outer boundary.
pub fn solve_descent(mesh: &Mesh, covector: &[f64]) -> Result<DescentResult> {
    DescentSolver::new(mesh)?.solve(covector)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disk_mesh;

    fn covector(mesh: &Mesh) -> Vec<f64> {
        let outer = mesh.outer_vertex_mask();
        mesh.vertices()
            .iter()
            .enumerate()
            .flat_map(|(v, p)| if outer[v] { [0.0, 0.0] } else { [p[1].sin(), 0.3 * p[0]] })
            .collect()
    }

    #[test]
    fn zero_covector_gives_zero_direction() {
        let mesh = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let r = solve_descent(&mesh, &vec![0.0; 2 * mesh.num_vertices()]).unwrap();
        assert_eq!(r.directional, 0.0);
        assert!(r.theta.values().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn directional_is_minus_norm_squared() {
        let mesh = generate_disk_mesh(5.0, 4.0, 0.8).unwrap();
        let s = DescentSolver::new(&mesh).unwrap();
        let l = covector(&mesh);
        let r = s.solve(&l).unwrap();
        assert!(r.directional < 0.0);
        assert!((r.directional + s.norm_squared(&r.theta)).abs() <= 1e-10 * r.directional.abs());
        let outer = mesh.outer_vertex_mask();
        for v in 0..mesh.num_vertices() {
            if outer[v] {
                assert_eq!(r.theta.values()[2 * v], 0.0);
                assert_eq!(r.theta.values()[2 * v + 1], 0.0);
            }
        }
        // scaling
        let r3 = s.solve(&l.iter().map(|x| 3.0 * x).collect::<Vec<_>>()).unwrap();
        assert!((r3.directional - 9.0 * r.directional).abs() <= 1e-10 * r3.directional.abs());
        for (a, b) in r3.theta.values().iter().zip(r.theta.values()) {
            assert!((a - 3.0 * b).abs() <= 1e-10 * (1.0 + a.abs()));
        }
    }

    #[test]
    fn rejects_nonzero_outer_entries() {
        let mesh = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let v = mesh.outer_vertex_mask().iter().position(|&o| o).unwrap();
        let mut l = vec![0.0; 2 * mesh.num_vertices()];
        l[2 * v] = 1.0;
        assert!(matches!(solve_descent(&mesh, &l), Err(Error::InvalidArgument(_))));
    }
}
