//! Sparse symmetric positive definite solves.
//!
//! Constrained dofs are eliminated symmetrically; the reduced matrix is
//! factored once with a sparse Cholesky decomposition and the factor can be
//! reused for several right-hand sides.

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMat, SymbolicSparseColMat};
use faer::{Conj, Mat, Side};

use super::{norm, CsrMatrix};
use crate::{Error, Result};

/// Required normwise backward error `‖b − A x‖ / (‖A‖ ‖x‖ + ‖b‖)` of every
/// solve, in the max norm over the free dofs.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

const MAX_REFINEMENT_STEPS: usize = 3;

/// Symmetric matrix, right-hand side and prescribed dof values.
#[derive(Clone, Debug)]
pub struct LinearSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    /// `(dof, value)` pairs, sorted by dof without duplicates.
    pub constraints: Vec<(usize, f64)>,
}

impl LinearSystem {
    pub fn new(matrix: CsrMatrix, rhs: Vec<f64>, mut constraints: Vec<(usize, f64)>) -> Self {
        constraints.sort_by_key(|c| c.0);
        constraints.dedup_by_key(|c| c.0);
        LinearSystem { matrix, rhs, constraints }
    }

    /// Relative residual of `x` on the unconstrained rows.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let constrained: Vec<bool> = mask(self.matrix.dim(), self.constraints.iter().map(|c| c.0));
        let ax = self.matrix.mul_vec(x);
        let mut r = Vec::new();
        let mut b = Vec::new();
        for i in 0..x.len() {
            if !constrained[i] {
                r.push(self.rhs[i] - ax[i]);
                // lifted right-hand side: b_f − A_fc x_c
                let lift: f64 = self.matrix.row(i).filter(|(j, _)| constrained[*j]).map(|(j, v)| v * x[j]).sum();
                b.push(self.rhs[i] - lift);
            }
        }
        relative(norm(&r), norm(&b))
    }
}

fn relative(r: f64, b: f64) -> f64 {
    if b > 0.0 {
        r / b
    } else {
        r
    }
}

fn mask(n: usize, dofs: impl Iterator<Item = usize>) -> Vec<bool> {
    let mut m = vec![false; n];
    for d in dofs {
        m[d] = true;
    }
    m
}

/// Reusable factorization of a matrix with a fixed set of constrained dofs.
pub struct SpdSolver {
    matrix: CsrMatrix,
    free: Vec<usize>,
    reduced_index: Vec<Option<usize>>,
    llt: Option<Llt<usize, f64>>,
}

impl SpdSolver {
    pub fn new(matrix: &CsrMatrix, constrained: &[usize]) -> Result<Self> {
        faer::set_global_parallelism(faer::Par::Seq);
        let n = matrix.dim();
        let is_constrained = mask(n, constrained.iter().copied());
        let free: Vec<usize> = (0..n).filter(|&i| !is_constrained[i]).collect();
        let mut reduced_index = vec![None; n];
        for (k, &i) in free.iter().enumerate() {
            reduced_index[i] = Some(k);
        }
        let m = free.len();
        if m == 0 {
            return Ok(SpdSolver { matrix: matrix.clone(), free, reduced_index, llt: None });
        }

        // Lower triangle in CSC equals the upper triangle of the symmetric CSR rows.
        let mut col_ptr = Vec::with_capacity(m + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for (k, &i) in free.iter().enumerate() {
            for (j, v) in matrix.row(i) {
                if let Some(kj) = reduced_index[j] {
                    if kj >= k {
                        row_idx.push(kj);
                        values.push(v);
                    }
                }
            }
            col_ptr.push(row_idx.len());
        }
        let symbolic = SymbolicSparseColMat::<usize>::new_checked(m, m, col_ptr, None, row_idx);
        let a = SparseColMat::<usize, f64>::new(symbolic, values);
        let breakdown = |e: &dyn std::fmt::Debug| Error::SolverBreakdown(format!("Cholesky failed: {e:?}"));
        let sym = SymbolicLlt::try_new(a.symbolic(), Side::Lower).map_err(|e| breakdown(&e))?;
        let llt = Llt::try_new_with_symbolic(sym, a.as_ref(), Side::Lower).map_err(|e| breakdown(&e))?;
        Ok(SpdSolver { matrix: matrix.clone(), free, reduced_index, llt: Some(llt) })
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    fn solve_reduced(&self, b: &[f64]) -> Vec<f64> {
        let mut rhs = Mat::<f64>::zeros(b.len(), 1);
        for (k, &v) in b.iter().enumerate() {
            rhs[(k, 0)] = v;
        }
        if let Some(llt) = &self.llt {
            llt.solve_in_place_with_conj(Conj::No, rhs.as_mut());
        }
        (0..b.len()).map(|k| rhs[(k, 0)]).collect()
    }

    /// Solves with right-hand side `rhs`; constrained dofs take their values
    /// from `prescribed` (entries at free dofs are ignored).
    pub fn solve(&self, rhs: &[f64], prescribed: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        assert_eq!(rhs.len(), n);
        assert_eq!(prescribed.len(), n);
        let mut x: Vec<f64> =
            (0..n).map(|i| if self.reduced_index[i].is_none() { prescribed[i] } else { 0.0 }).collect();
        if self.free.is_empty() {
            return Ok(x);
        }
        let lifted: Vec<f64> = self
            .free
            .iter()
            .map(|&i| {
                rhs[i] - self.matrix.row(i).filter(|(j, _)| self.reduced_index[*j].is_none()).map(|(j, v)| v * x[j]).sum::<f64>()
            })
            .collect();
        if lifted.iter().all(|&b| b == 0.0) {
            return Ok(x);
        }
        let inf = |v: &[f64]| v.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let a_norm = self
            .free
            .iter()
            .map(|&i| self.matrix.row(i).map(|(_, v)| v.abs()).sum::<f64>())
            .fold(0.0f64, f64::max);
        let mut xf = self.solve_reduced(&lifted);
        let mut res = f64::INFINITY;
        for step in 0..=MAX_REFINEMENT_STEPS {
            for (k, &i) in self.free.iter().enumerate() {
                x[i] = xf[k];
            }
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = self.free.iter().map(|&i| rhs[i] - ax[i]).collect();
            let rhs_free: Vec<f64> = self.free.iter().map(|&i| rhs[i]).collect();
            res = inf(&r) / (a_norm * inf(&x) + inf(&rhs_free));
            if !res.is_finite() {
                break;
            }
            if res <= RESIDUAL_TOLERANCE || step == MAX_REFINEMENT_STEPS {
                break;
            }
            let dx = self.solve_reduced(&r);
            for (xk, d) in xf.iter_mut().zip(dx) {
                *xk += d;
            }
        }
        if res <= RESIDUAL_TOLERANCE {
            Ok(x)
        } else {
            Err(Error::SolverBreakdown(format!("backward error {res:.3e} above {RESIDUAL_TOLERANCE:e}")))
        }
    }
}

/// Solves a constrained SPD system.
pub fn solve_spd(system: &LinearSystem) -> Result<Vec<f64>> {
    let n = system.matrix.dim();
    if system.rhs.len() != n {
        return Err(Error::InvalidArgument(format!("rhs has {} entries, matrix dimension {n}", system.rhs.len())));
    }
    if let Some(&(d, _)) = system.constraints.iter().find(|c| c.0 >= n) {
        return Err(Error::InvalidArgument(format!("constrained dof {d} out of range")));
    }
    let dofs: Vec<usize> = system.constraints.iter().map(|c| c.0).collect();
    let mut prescribed = vec![0.0; n];
    for &(d, v) in &system.constraints {
        prescribed[d] = v;
    }
    SpdSolver::new(&system.matrix, &dofs)?.solve(&system.rhs, &prescribed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_returns_rhs() {
        let b = vec![1.0, -2.0, 3.5];
        let x = solve_spd(&LinearSystem::new(CsrMatrix::identity(3), b.clone(), vec![])).unwrap();
        assert_eq!(x, b);
    }

    #[test]
    fn two_by_two() {
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let x = solve_spd(&LinearSystem::new(a, vec![1.0, 1.0], vec![])).unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15 && (x[1] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constraint_is_eliminated() {
        // [[2,1],[1,2]] with x1 = 1: 2 x0 + 1 = 1 → x0 = 0
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let sys = LinearSystem::new(a, vec![1.0, 0.0], vec![(1, 1.0)]);
        let x = solve_spd(&sys).unwrap();
        assert_eq!(x[1], 1.0);
        assert!(x[0].abs() < 1e-15);
        assert!(sys.residual(&x) < 1e-15);
    }

    #[test]
    fn indefinite_matrix_is_reported() {
        let a = CsrMatrix::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        let err = solve_spd(&LinearSystem::new(a, vec![1.0, 0.0], vec![])).unwrap_err();
        assert!(matches!(err, Error::SolverBreakdown(_)));
    }
}
