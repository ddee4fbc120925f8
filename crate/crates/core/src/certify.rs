//! Guaranteed bounds on the error in the shape derivative.
//!
//! For each measurement, the state errors `e_N`, `e_D` and the influence
//! function errors `ε_N`, `ε_D` are bounded in energy norm with equilibrated
//! RT0 fluxes (complementary energy). The error in `⟨d_h J, θ⟩` is then bounded by
//! `Ē = Σ_j |||e_N|||·|||ε_N||| + |||e_D|||·|||ε_D|||`.

use crate::eit::{dg_du_form, EitSetup, StatePair, StateSolver};
use crate::fem::quadrature::{point, triangle3};
use crate::fem::{
    assemble::m_matrix, assemble_hdiv, flux_at, gradient, vector_gradient, Conductivity, Field, FluxInputs,
    FluxKind, LinearSystem, SpaceKind, SpdSolver,
};
use crate::mesh::{MarkSet, Mesh};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InfluenceKind {
    /// Full H¹ space, paired with the Neumann state.
    N,
    /// Zero trace on the outer boundary, paired with the Dirichlet state.
    D,
}

/// Solves `a(δ, r) = ∂G/∂u(u)[θ, δ]` for all test functions `δ` of the kind's space.
pub fn solve_influence(
    mesh: &Mesh,
    setup: &EitSetup,
    u: &Field,
    theta: &Field,
    kind: InfluenceKind,
) -> Result<Field> {
    let solver = StateSolver::new(mesh, &setup.conductivity)?;
    influence_with(&solver, mesh, &setup.conductivity, u, theta, kind)
}

fn influence_with(
    solver: &StateSolver,
    mesh: &Mesh,
    cond: &Conductivity,
    u: &Field,
    theta: &Field,
    kind: InfluenceKind,
) -> Result<Field> {
    let rhs = dg_du_form(mesh, cond, u, theta);
    match kind {
        InfluenceKind::N => solver.solve_free(&rhs),
        InfluenceKind::D => solver.solve_constrained(mesh, &rhs, &|_| 0.0),
    }
}

/// RT0 flux of the given kind.
pub fn equilibrate_flux(mesh: &Mesh, cond: &Conductivity, kind: FluxKind, inputs: &FluxInputs<'_>) -> Result<Field> {
    let system = assemble_hdiv(mesh, cond, kind, inputs)?;
    Ok(Field::new(SpaceKind::Rt0, crate::fem::solve_spd(&system)?))
}

/// Fields entering an energy bound. `theta` and `r` are set for adjoint kinds.
#[derive(Clone, Copy)]
pub struct BoundInputs<'a> {
    pub u: &'a Field,
    pub flux: &'a Field,
    pub theta: Option<&'a Field>,
    pub r: Option<&'a Field>,
}

/// Energy-norm bound and its squared per-element contributions.
#[derive(Clone, Debug, PartialEq)]
pub struct EnergyBound {
    pub value: f64,
    pub elements: Vec<f64>,
}

/// Complementary-energy bound.
///
/// State kinds: `∫ k⁻¹|σ − k∇u|² + |div σ − u|²`. Adjoint kinds:
/// `∫ k⁻¹|ξ + k M(θ)∇u − k∇r|² + |div ξ − (div θ) u − r|²`.
pub fn bound_energy_error(mesh: &Mesh, cond: &Conductivity, kind: FluxKind, f: &BoundInputs<'_>) -> Result<EnergyBound> {
    let adjoint = matches!(kind, FluxKind::AdjN | FluxKind::AdjD);
    let (theta, r) = if adjoint {
        (Some(f.theta.ok_or(Error::MissingInput("theta"))?.values()), Some(f.r.ok_or(Error::MissingInput("r"))?.values()))
    } else {
        (None, None)
    };
    let u = f.u.values();
    let sigma = f.flux.values();
    let quad = triangle3();
    let mut elements = Vec::with_capacity(mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let c = mesh.corners(t);
        let area = mesh.signed_area(t);
        let k = cond.on(mesh, t);
        let vs = mesh.triangles()[t].vertices;
        let gu = gradient(mesh, t, u);
        // target vector field k∇u (state) or k∇r − kM∇u (adjoint), and the
        // scalar coefficients of the divergence residual
        let (target, div_theta, gr) = match (theta, r) {
            (Some(th), Some(r)) => {
                let jac = vector_gradient(mesh, t, th);
                let m = m_matrix(&jac);
                let gr = gradient(mesh, t, r);
                let mgu = [m[0][0] * gu[0] + m[0][1] * gu[1], m[1][0] * gu[0] + m[1][1] * gu[1]];
                ([k * (gr[0] - mgu[0]), k * (gr[1] - mgu[1])], jac[0][0] + jac[1][1], Some(r))
            }
            _ => ([k * gu[0], k * gu[1]], 0.0, None),
        };
        let mut sum = 0.0;
        for (l, w) in quad {
            let x = point(&c, l);
            let (s, div) = flux_at(mesh, t, sigma, x);
            let uh: f64 = (0..3).map(|i| l[i] * u[vs[i]]).sum();
            let scalar = match gr {
                Some(r) => div_theta * uh + (0..3).map(|i| l[i] * r[vs[i]]).sum::<f64>(),
                None => uh,
            };
            let d = [s[0] - target[0], s[1] - target[1]];
            sum += w * ((d[0] * d[0] + d[1] * d[1]) / k + (div - scalar).powi(2));
        }
        elements.push(area * sum);
    }
    let value = elements.iter().sum::<f64>().sqrt();
    Ok(EnergyBound { value, elements })
}

/// The four bounds of one measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementBounds {
    pub e_n: EnergyBound,
    pub r_n: EnergyBound,
    pub e_d: EnergyBound,
    pub r_d: EnergyBound,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CertBound {
    pub measurements: Vec<MeasurementBounds>,
    pub e_bar: f64,
    pub directional: f64,
    /// Per-element refinement indicators.
    pub eta: Vec<f64>,
}

/// Assembles `Ē` and the indicators
/// `η_K² = Σ_j cN_K rN² + dN_K eN² + cD_K rD² + dD_K eD²`.
pub fn combined_bound(measurements: Vec<MeasurementBounds>, directional: f64) -> CertBound {
    let n = measurements.first().map_or(0, |m| m.e_n.elements.len());
    let mut eta2 = vec![0.0; n];
    let mut e_bar = 0.0;
    for m in &measurements {
        e_bar += m.e_n.value * m.r_n.value + m.e_d.value * m.r_d.value;
        let (en2, rn2, ed2, rd2) = (m.e_n.value.powi(2), m.r_n.value.powi(2), m.e_d.value.powi(2), m.r_d.value.powi(2));
        for (k, e) in eta2.iter_mut().enumerate() {
            *e += m.e_n.elements[k] * rn2 + m.r_n.elements[k] * en2 + m.e_d.elements[k] * rd2 + m.r_d.elements[k] * ed2;
        }
    }
    CertBound { measurements, e_bar, directional, eta: eta2.into_iter().map(f64::sqrt).collect() }
}

/// `⟨d_h J, θ⟩ + Ē < 0`.
pub fn certified(bound: &CertBound) -> bool {
    bound.directional + bound.e_bar < 0.0
}

/// Dörfler marking: the smallest greedy set of largest indicators whose
/// squares reach `fraction` of the total.
pub fn mark_for_refinement(eta: &[f64], fraction: f64) -> MarkSet {
    assert!(fraction > 0.0 && fraction <= 1.0, "Dörfler fraction must lie in (0, 1]");
    let mut order: Vec<usize> = (0..eta.len()).filter(|&k| eta[k] > 0.0).collect();
    if fraction >= 1.0 {
        return order.into_iter().collect();
    }
    order.sort_by(|&a, &b| eta[b].total_cmp(&eta[a]).then(a.cmp(&b)));
    let total: f64 = eta.iter().map(|e| e * e).sum();
    let goal = fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    let mut marks = MarkSet::new();
    for k in order {
        if acc >= goal {
            break;
        }
        acc += eta[k] * eta[k];
        marks.insert(k);
    }
    marks
}

/// Factorized flux operators of a mesh, reused across measurements.
pub struct Certifier {
    cond: Conductivity,
    neumann: SpdSolver,
    dirichlet: SpdSolver,
    outer_edges: Vec<usize>,
}

impl Certifier {
    pub fn new(mesh: &Mesh, cond: &Conductivity) -> Result<Self> {
        let zero = |_: [f64; 2]| 0.0;
        let u0 = vec![0.0; mesh.num_vertices()];
        let LinearSystem { matrix, .. } =
            assemble_hdiv(mesh, cond, FluxKind::StateD, &FluxInputs { u: Some(u0.as_slice()), g: Some(&zero), theta: None })?;
        let outer_edges: Vec<usize> = mesh.outer_edges().collect();
        Ok(Certifier {
            cond: *cond,
            neumann: SpdSolver::new(&matrix, &outer_edges)?,
            dirichlet: SpdSolver::new(&matrix, &[])?,
            outer_edges,
        })
    }

    pub fn flux(&self, mesh: &Mesh, kind: FluxKind, inputs: &FluxInputs<'_>) -> Result<Field> {
        let system = assemble_hdiv(mesh, &self.cond, kind, inputs)?;
        let mut prescribed = vec![0.0; system.rhs.len()];
        for &(e, v) in &system.constraints {
            prescribed[e] = v;
        }
        let solver = match kind {
            FluxKind::StateN | FluxKind::AdjN => &self.neumann,
            FluxKind::StateD | FluxKind::AdjD => &self.dirichlet,
        };
        debug_assert!(matches!(kind, FluxKind::StateD | FluxKind::AdjD) || system.constraints.len() == self.outer_edges.len());
        Ok(Field::new(SpaceKind::Rt0, solver.solve(&system.rhs, &prescribed)?))
    }

    /// All four bounds of one measurement for the frozen direction `theta`.
    pub fn measurement_bounds(
        &self,
        mesh: &Mesh,
        states: &StateSolver,
        setup: &EitSetup,
        j: usize,
        pair: &StatePair,
        theta: &Field,
    ) -> Result<MeasurementBounds> {
        let cond = &self.cond;
        let flux = &setup.measurements[j].flux;
        let g = |p: [f64; 2]| flux.eval(p);
        let r_n = influence_with(states, mesh, cond, &pair.u_n, theta, InfluenceKind::N)?;
        let r_d = influence_with(states, mesh, cond, &pair.u_d, theta, InfluenceKind::D)?;
        let (un, ud, th) = (pair.u_n.values(), pair.u_d.values(), theta.values());

        let sn = self.flux(mesh, FluxKind::StateN, &FluxInputs { g: Some(&g), u: Some(un), theta: None })?;
        let sd = self.flux(mesh, FluxKind::StateD, &FluxInputs { g: None, u: Some(ud), theta: None })?;
        let xn = self.flux(mesh, FluxKind::AdjN, &FluxInputs { g: None, u: Some(un), theta: Some(th) })?;
        let xd = self.flux(mesh, FluxKind::AdjD, &FluxInputs { g: None, u: Some(ud), theta: Some(th) })?;

        let state = |u: &Field, s: &Field, kind| bound_energy_error(mesh, cond, kind, &BoundInputs { u, flux: s, theta: None, r: None });
        let adj = |u: &Field, s: &Field, r: &Field, kind| {
            bound_energy_error(mesh, cond, kind, &BoundInputs { u, flux: s, theta: Some(theta), r: Some(r) })
        };
        Ok(MeasurementBounds {
            e_n: state(&pair.u_n, &sn, FluxKind::StateN)?,
            r_n: adj(&pair.u_n, &xn, &r_n, FluxKind::AdjN)?,
            e_d: state(&pair.u_d, &sd, FluxKind::StateD)?,
            r_d: adj(&pair.u_d, &xd, &r_d, FluxKind::AdjD)?,
        })
    }

    /// Bounds for all measurements combined with `directional`.
    pub fn certify(
        &self,
        mesh: &Mesh,
        states: &StateSolver,
        setup: &EitSetup,
        pairs: &[StatePair],
        theta: &Field,
        directional: f64,
    ) -> Result<CertBound> {
        let per = pairs
            .iter()
            .enumerate()
            .map(|(j, p)| self.measurement_bounds(mesh, states, setup, j, p, theta))
            .collect::<Result<Vec<_>>>()?;
        Ok(combined_bound(per, directional))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(v: f64) -> EnergyBound {
        EnergyBound { value: v, elements: vec![v * v] }
    }

    #[test]
    fn combined_bound_formula() {
        let m = MeasurementBounds { e_n: single(1.0), r_n: single(2.0), e_d: single(3.0), r_d: single(4.0) };
        let b = combined_bound(vec![m], -20.0);
        assert_eq!(b.e_bar, 14.0);
        assert!(certified(&b));
        let zero = MeasurementBounds { e_n: single(0.0), r_n: single(0.0), e_d: single(0.0), r_d: single(0.0) };
        assert_eq!(combined_bound(vec![zero], 0.0).e_bar, 0.0);
    }

    #[test]
    fn indicator_bookkeeping() {
        let eb = |v: &[f64]| EnergyBound { value: v.iter().sum::<f64>().sqrt(), elements: v.to_vec() };
        let m = MeasurementBounds {
            e_n: eb(&[1.0, 2.0, 0.5]),
            r_n: eb(&[0.1, 0.2, 0.3]),
            e_d: eb(&[2.0, 0.0, 1.0]),
            r_d: eb(&[0.4, 0.4, 0.1]),
        };
        let (en, rn, ed, rd) = (m.e_n.value, m.r_n.value, m.e_d.value, m.r_d.value);
        let b = combined_bound(vec![m.clone(), m], -1.0);
        let sum: f64 = b.eta.iter().map(|e| e * e).sum();
        let expect = 2.0 * 2.0 * ((en * rn).powi(2) + (ed * rd).powi(2));
        assert!((sum - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn certification_is_strict() {
        let mk = |d: f64, e: f64| CertBound { measurements: vec![], e_bar: e, directional: d, eta: vec![] };
        assert!(certified(&mk(-1.0, 0.5)));
        assert!(!certified(&mk(-1.0, 1.5)));
        assert!(!certified(&mk(0.0, 0.0)));
    }

    #[test]
    fn dorfler_examples() {
        let m = mark_for_refinement(&[3.0, 1.0, 1.0, 1.0], 0.5);
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0]);
        let all = mark_for_refinement(&[0.0, 1e-9, 2.0, 0.0, 3.0], 1.0);
        assert_eq!(all.iter().collect::<Vec<_>>(), vec![1, 2, 4]);
        for n in [7, 10, 13] {
            assert_eq!(mark_for_refinement(&vec![1.0; n], 0.3).len(), (0.3 * n as f64).ceil() as usize);
        }
        assert!(mark_for_refinement(&[0.0; 4], 0.3).is_empty());
    }
}
