//! The certified descent driver.
//!
//! Each outer iteration solves the states, computes the descent direction,
//! bounds the error in the shape derivative and refines until the direction
//! is certified. A certified direction is then followed with an Armijo line
//! search. In the two-mesh strategy the direction lives on a coarse mesh and
//! everything else on a nested fine mesh.

use std::time::Instant;

use crate::certify::{bound_energy_error, certified, equilibrate_flux, mark_for_refinement, BoundInputs, CertBound, Certifier};
use crate::descent::DescentSolver;
use crate::eit::{
    objective, shape_gradient_vector, zero_outer, BoundaryFlux, Conductivity, DirichletTrace, EitSetup, StatePair,
    StateSolver,
};
use crate::fem::{assemble::neumann_load, energy_norm, Field, FluxInputs, FluxKind, Prolongation, SpaceKind};
use crate::mesh::{move_vertices, quality, refine, refine_uniform, smoothing_displacement, Mesh};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Strategy {
    OneMesh,
    TwoMesh,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CdaConfig {
    /// Stop once `|⟨d_h J, θ⟩| + Ē ≤ tol`.
    pub tol: f64,
    /// Armijo constant in (0, 1).
    pub alpha: f64,
    /// Initial step as a fraction of the smallest edge length per unit displacement.
    pub mu0: f64,
    pub backtrack: f64,
    pub max_backtracks: usize,
    pub dorfler: f64,
    pub strategy: Strategy,
    /// Uniform refinements from the descent mesh to the state mesh.
    pub fine_levels: usize,
    pub max_dofs: usize,
    pub max_iters: usize,
    /// Refinements allowed within one iteration before giving up.
    pub max_retries: usize,
    /// Smoothing sweeps over the background of the descent mesh after each
    /// accepted step; 0 disables mesh regularization.
    pub smoothing_sweeps: usize,
}

impl Default for CdaConfig {
    fn default() -> Self {
        CdaConfig {
            tol: 1e-6,
            alpha: 0.1,
            mu0: 0.4,
            backtrack: 0.5,
            max_backtracks: 25,
            dorfler: 0.3,
            strategy: Strategy::TwoMesh,
            fine_levels: 1,
            max_dofs: 200_000,
            max_iters: 100,
            max_retries: 8,
            smoothing_sweeps: 0,
        }
    }
}

impl CdaConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(what.to_string()));
        if !(self.tol >= 0.0 && self.tol.is_finite()) {
            return bad("tol must be finite and non-negative");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad("alpha must lie in (0, 1)");
        }
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return bad("mu0 must be positive");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        if !(self.dorfler > 0.0 && self.dorfler <= 1.0) {
            return bad("dorfler fraction must lie in (0, 1]");
        }
        if self.max_dofs == 0 {
            return bad("max_dofs must be positive");
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub objective: f64,
    pub directional: f64,
    pub e_bar: f64,
    pub mu: f64,
    /// State unknowns on the mesh the states were solved on.
    pub dofs: usize,
    pub retries: usize,
    pub seconds: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    CertifiedStop,
    DofCap,
    MaxIters,
    LineSearchFailure,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::CertifiedStop => "CERTIFIED_STOP",
            StopReason::DofCap => "DOF_CAP",
            StopReason::MaxIters => "MAX_ITERS",
            StopReason::LineSearchFailure => "LINE_SEARCH_FAILURE",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CdaOutcome {
    /// Mesh carrying the states.
    pub mesh: Mesh,
    /// Mesh carrying θ; the state mesh for [`Strategy::OneMesh`].
    pub descent_mesh: Mesh,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// States and the last certified direction on `mesh`, before the final move.
    pub states: Vec<StatePair>,
    pub theta: Option<Field>,
}

/// Backtracking on `J(μ) ≤ J0 + α μ d`.
///
/// `eval` returns `None` when the trial configuration is inadmissible
/// (inverted elements); this is treated as a failed trial. Returns the
/// accepted step, its objective and the number of backtracks.
pub fn backtracking_armijo(
    j0: f64,
    directional: f64,
    mu0: f64,
    alpha: f64,
    factor: f64,
    max_backtracks: usize,
    mut eval: impl FnMut(f64) -> Result<Option<f64>>,
) -> Result<(f64, f64, usize)> {
    if !(directional < 0.0) {
        return Err(Error::InvalidArgument(format!("not a descent direction: directional {directional}")));
    }
    let mut mu = mu0;
    for k in 0..=max_backtracks {
        if let Some(j) = eval(mu)? {
            if j <= j0 + alpha * mu * directional {
                return Ok((mu, j, k));
            }
        }
        mu *= factor;
    }
    Err(Error::MaxBacktracks(max_backtracks))
}

/// Largest step so that no vertex moves more than `fraction` of its
/// shortest incident edge.
pub fn initial_step(mesh: &Mesh, theta: &Field, fraction: f64) -> f64 {
    let mut shortest = vec![f64::INFINITY; mesh.num_vertices()];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        let len = mesh.edge_length(e);
        shortest[a] = shortest[a].min(len);
        shortest[b] = shortest[b].min(len);
    }
    let th = theta.values();
    let mut mu = f64::INFINITY;
    for (v, &len) in shortest.iter().enumerate() {
        let norm = th[2 * v].hypot(th[2 * v + 1]);
        if norm > 0.0 {
            mu = mu.min(len / norm);
        }
    }
    fraction * mu
}

/// Armijo step along `theta` on a single mesh.
pub fn armijo_step(
    mesh: &Mesh,
    setup: &EitSetup,
    theta: &Field,
    j0: f64,
    directional: f64,
    config: &CdaConfig,
) -> Result<(f64, f64)> {
    let mu0 = initial_step(mesh, theta, config.mu0);
    let (mu, j, _) = backtracking_armijo(j0, directional, mu0, config.alpha, config.backtrack, config.max_backtracks, |mu| {
        match move_vertices(mesh, theta, mu) {
            Ok(moved) => Ok(Some(evaluate_objective(&moved, setup)?)),
            Err(Error::ElementInversion { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    })?;
    Ok((mu, j))
}

fn evaluate_objective(mesh: &Mesh, setup: &EitSetup) -> Result<f64> {
    let solver = StateSolver::new(mesh, &setup.conductivity)?;
    let pairs = solver.all_states(mesh, setup)?;
    Ok(objective(solver.matrix(), &pairs))
}

// One certified pass on the current meshes.
struct Pass {
    states: Vec<StatePair>,
    objective: f64,
    theta_coarse: Field,
    theta_fine: Field,
    bound: CertBound,
}

struct Meshes {
    fine: Mesh,
    coarse: Option<Mesh>,
}

impl Meshes {
    fn descent(&self) -> &Mesh {
        self.coarse.as_ref().unwrap_or(&self.fine)
    }
}

fn certify_pass(meshes: &Meshes, setup: &EitSetup) -> Result<Pass> {
    let fine = &meshes.fine;
    let solver = StateSolver::new(fine, &setup.conductivity)?;
    let states = solver.all_states(fine, setup)?;
    let objective = objective(solver.matrix(), &states);
    let covector = shape_gradient_vector(fine, setup, &states);
    let (theta_coarse, theta_fine, directional) = match &meshes.coarse {
        None => {
            let d = DescentSolver::new(fine)?.solve(&covector)?;
            (d.theta.clone(), d.theta, d.directional)
        }
        Some(coarse) => {
            let p = Prolongation::new(coarse, fine)?;
            let mut lc = p.transpose_apply(&Field::new(SpaceKind::P1Vec2, covector))?.into_values();
            zero_outer(coarse, &mut lc);
            let d = DescentSolver::new(coarse)?.solve(&lc)?;
            let tf = p.apply(&d.theta)?;
            (d.theta, tf, d.directional)
        }
    };
    let bound = Certifier::new(fine, &setup.conductivity)?.certify(fine, &solver, setup, &states, &theta_fine, directional)?;
    Ok(Pass { states, objective, theta_coarse, theta_fine, bound })
}

// Refines the coarse mesh once when its interface is much coarser than the
// fine one and the result stays nested in the fine mesh.
fn maybe_refine_coarse(meshes: &mut Meshes) -> Result<()> {
    let Some(coarse) = &meshes.coarse else { return Ok(()) };
    let (Some(hc), Some(hf)) = (coarse.min_interface_edge_length(), meshes.fine.min_interface_edge_length()) else {
        return Ok(());
    };
    if hc > 4.0 * hf {
        let refined = refine_uniform(coarse)?;
        if meshes.fine.contains_vertices_of(&refined) {
            meshes.coarse = Some(refined);
        }
    }
    Ok(())
}

// Smooths the background of the descent mesh, carrying the state mesh
// along. Kept only when no element inverts, the minimum quality does not
// drop and the Armijo inequality of the accepted step still holds.
fn regularize(meshes: &Meshes, setup: &EitSetup, sweeps: usize, armijo_bound: f64) -> Result<Option<Meshes>> {
    let descent = meshes.descent();
    let delta = smoothing_displacement(descent, sweeps);
    if delta.values().iter().all(|&d| d == 0.0) {
        return Ok(None);
    }
    let moved = (|| {
        Ok(match &meshes.coarse {
            None => Meshes { fine: move_vertices(&meshes.fine, &delta, 1.0)?, coarse: None },
            Some(coarse) => {
                let fine_delta = Prolongation::new(coarse, &meshes.fine)?.apply(&delta)?;
                Meshes { fine: move_vertices(&meshes.fine, &fine_delta, 1.0)?, coarse: Some(move_vertices(coarse, &delta, 1.0)?) }
            }
        })
    })();
    let moved = match moved {
        Ok(m) => m,
        Err(Error::ElementInversion { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if quality(moved.descent()) < quality(descent) || evaluate_objective(&moved.fine, setup)? > armijo_bound {
        return Ok(None);
    }
    Ok(Some(moved))
}

/// Runs the certified descent algorithm from `initial`, which is the
/// descent mesh for [`Strategy::TwoMesh`].
pub fn run_cda(initial: &Mesh, setup: &EitSetup, config: &CdaConfig) -> Result<CdaOutcome> {
    config.validate()?;
    let mut meshes = match config.strategy {
        Strategy::TwoMesh if config.fine_levels > 0 => {
            let mut fine = initial.clone();
            for _ in 0..config.fine_levels {
                fine = refine_uniform(&fine)?;
            }
            Meshes { fine, coarse: Some(initial.clone()) }
        }
        _ => Meshes { fine: initial.clone(), coarse: None },
    };

    let mut records = Vec::new();
    let mut last: Option<(Vec<StatePair>, Field)> = None;
    let finish = |meshes: Meshes, records, stop, last: Option<(Vec<StatePair>, Field)>| {
        let (states, theta) = match last {
            Some((s, t)) => (s, Some(t)),
            None => (Vec::new(), None),
        };
        let descent_mesh = meshes.descent().clone();
        Ok(CdaOutcome { mesh: meshes.fine, descent_mesh, records, stop, states, theta })
    };

    for iteration in 0.. {
        if iteration == config.max_iters {
            return finish(meshes, records, StopReason::MaxIters, last);
        }
        let start = Instant::now();
        let mut retries = 0;
        let pass = loop {
            if meshes.fine.num_vertices() > config.max_dofs {
                return finish(meshes, records, StopReason::DofCap, last);
            }
            let pass = certify_pass(&meshes, setup)?;
            if certified(&pass.bound) {
                break pass;
            }
            if retries == config.max_retries {
                return finish(meshes, records, StopReason::DofCap, last);
            }
            let marks = mark_for_refinement(&pass.bound.eta, config.dorfler);
            meshes.fine = refine(&meshes.fine, &marks)?;
            maybe_refine_coarse(&mut meshes)?;
            retries += 1;
        };

        let directional = pass.bound.directional;
        let mu0 = initial_step(meshes.descent(), &pass.theta_coarse, config.mu0);
        let mut moved = None;
        let search = backtracking_armijo(
            pass.objective,
            directional,
            mu0,
            config.alpha,
            config.backtrack,
            config.max_backtracks,
            |mu| {
                let trial = (|| {
                    let fine = move_vertices(&meshes.fine, &pass.theta_fine, mu)?;
                    let coarse = match &meshes.coarse {
                        Some(c) => Some(move_vertices(c, &pass.theta_coarse, mu)?),
                        None => None,
                    };
                    Ok(Meshes { fine, coarse })
                })();
                match trial {
                    Ok(m) => {
                        let j = evaluate_objective(&m.fine, setup)?;
                        moved = Some(m);
                        Ok(Some(j))
                    }
                    Err(Error::ElementInversion { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            },
        );
        let (mu, _, _) = match search {
            Ok(found) => found,
            Err(Error::MaxBacktracks(_)) => {
                last = Some((pass.states, pass.theta_fine));
                return finish(meshes, records, StopReason::LineSearchFailure, last);
            }
            Err(e) => return Err(e),
        };
        records.push(IterationRecord {
            iteration,
            objective: pass.objective,
            directional,
            e_bar: pass.bound.e_bar,
            mu,
            dofs: meshes.fine.num_vertices(),
            retries,
            seconds: start.elapsed().as_secs_f64(),
        });
        meshes = moved.expect("accepted step has a mesh");
        if config.smoothing_sweeps > 0 {
            let armijo_bound = pass.objective + config.alpha * mu * directional;
            if let Some(smoothed) = regularize(&meshes, setup, config.smoothing_sweeps, armijo_bound)? {
                meshes = smoothed;
            }
        }
        last = Some((pass.states, pass.theta_fine));
        if directional.abs() + pass.bound.e_bar <= config.tol {
            return finish(meshes, records, StopReason::CertifiedStop, last);
        }
    }
    unreachable!()
}

/// Dirichlet data synthesized from a Neumann solve on the target geometry.
#[derive(Clone, Debug)]
pub struct SynthesizedData {
    pub trace: DirichletTrace,
    pub mesh: Mesh,
    /// Uniform refinements applied to the target mesh.
    pub levels: usize,
    pub bound: f64,
    pub norm: f64,
}

/// Solves the Neumann problem on successive uniform refinements of `target`
/// until the state error bound is below `tol_data` times the energy norm of
/// the solution, and samples its trace on the outer boundary.
pub fn synthesize_dirichlet_data(
    target: &Mesh,
    cond: &Conductivity,
    flux: &BoundaryFlux,
    tol_data: f64,
    max_levels: usize,
) -> Result<SynthesizedData> {
    let mut mesh = target.clone();
    for levels in 0..=max_levels {
        let (u, bound, norm) = neumann_state_bound(&mesh, cond, flux)?;
        if bound <= tol_data * norm {
            let trace = DirichletTrace::sample(&mesh, &u)?;
            return Ok(SynthesizedData { trace, mesh, levels, bound, norm });
        }
        if levels < max_levels {
            mesh = refine_uniform(&mesh)?;
        }
    }
    Err(Error::RefinementCap(max_levels))
}

// Neumann solution, its error bound and its energy norm.
fn neumann_state_bound(mesh: &Mesh, cond: &Conductivity, flux: &BoundaryFlux) -> Result<(Field, f64, f64)> {
    let g = |p: [f64; 2]| flux.eval(p);
    let u = StateSolver::new(mesh, cond)?.solve_free(&neumann_load(mesh, &g))?;
    let sigma = equilibrate_flux(mesh, cond, FluxKind::StateN, &FluxInputs { g: Some(&g), u: None, theta: None })?;
    let bound = bound_energy_error(mesh, cond, FluxKind::StateN, &BoundInputs { u: &u, flux: &sigma, theta: None, r: None })?;
    let norm = energy_norm(mesh, cond, &u);
    Ok((u, bound.value, norm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn armijo_accepts_first_trial_on_quadratic() {
        let (mu, j, k) = backtracking_armijo(1.0, -2.0, 1.0, 0.1, 0.5, 25, |mu| Ok(Some((1.0 - mu).powi(2)))).unwrap();
        assert_eq!((mu, j, k), (1.0, 0.0, 0));
    }

    #[test]
    fn armijo_backtracks_and_skips_inadmissible_trials() {
        let (mu, j, k) = backtracking_armijo(1.0, -2.0, 4.0, 0.1, 0.5, 25, |mu| {
            Ok(if mu > 1.5 { None } else { Some((1.0 - mu).powi(2)) })
        })
        .unwrap();
        assert_eq!((mu, k), (1.0, 2));
        assert!(j < 1.0);
    }

    #[test]
    fn armijo_rejects_ascent_and_reports_failure() {
        assert!(matches!(
            backtracking_armijo(1.0, 0.0, 1.0, 0.1, 0.5, 25, |_| Ok(Some(0.0))),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            backtracking_armijo(1.0, -1.0, 1.0, 0.1, 0.5, 3, |_| Ok(Some(2.0))),
            Err(Error::MaxBacktracks(3))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(CdaConfig::default().validate().is_ok());
        assert!(CdaConfig { alpha: 1.0, ..Default::default() }.validate().is_err());
        assert!(CdaConfig { backtrack: 0.0, ..Default::default() }.validate().is_err());
        assert!(CdaConfig { dorfler: 0.0, ..Default::default() }.validate().is_err());
    }
}
