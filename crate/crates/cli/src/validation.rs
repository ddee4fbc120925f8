//! Estimator validation on the concentric-disk problem.
//!
//! Each level is meshed afresh at half the previous size so that the
//! polygonal interface converges to the circle. Dirichlet data is the
//! analytic trace, hence the Neumann and Dirichlet states share the analytic
//! solution. Influence functions and the shape-gradient errors are compared
//! against a reference computed after two uniform refinements of the level.

use std::time::Instant;

use cda_core::certify::Certifier;
use cda_core::descent::DescentSolver;
use cda_core::eit::{
    dg_du_form, g_operator, shape_gradient_vector, AnalyticReference, Branch, BoundaryFlux, Conductivity,
    DirichletTrace, EitSetup, Measurement, StateSolver,
};
use cda_core::fem::quadrature::{point, triangle7};
use cda_core::fem::{energy_norm, gradient, Field, Prolongation};
use cda_core::mesh::{generate_disk_mesh, refine_uniform, Mesh, Region};

use crate::fit_rate;

#[derive(Clone, Debug)]
pub struct ValidationConfig {
    pub rho_e: f64,
    pub rho_i: f64,
    pub k_i: f64,
    pub k_e: f64,
    pub h0: f64,
    pub levels: usize,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        ValidationConfig { rho_e: 5.0, rho_i: 4.0, k_i: 10.0, k_e: 1.0, h0: 1.0, levels: 4 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelReport {
    pub h: f64,
    pub dofs: usize,
    /// True energy errors of `u_N`, `u_D` against the analytic solution.
    pub err_n: f64,
    pub err_d: f64,
    /// Energy errors of the influence functions against the reference.
    pub err_rn: f64,
    pub err_rd: f64,
    pub bound_n: f64,
    pub bound_d: f64,
    pub bound_rn: f64,
    pub bound_rd: f64,
    /// Error in the shape derivative along θ^h, and its linearization.
    pub e_ref: f64,
    pub e_lin_ref: f64,
    pub e_bar: f64,
    pub directional: f64,
    /// `‖θ^h‖_X`.
    pub theta_norm: f64,
    pub seconds: f64,
}

impl LevelReport {
    pub fn effectivity_n(&self) -> f64 {
        self.bound_n / self.err_n
    }

    pub fn effectivity_d(&self) -> f64 {
        self.bound_d / self.err_d
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub levels: Vec<LevelReport>,
    pub rate_err_n: f64,
    pub rate_err_d: f64,
    pub rate_bound_n: f64,
    pub rate_bound_d: f64,
    pub rate_e_bar: f64,
    /// Rate of `Ē / ‖θ^h‖_X`; θ^h itself vanishes with h on this problem.
    pub rate_e_bar_normalized: f64,
}

/// `|||u − u_h|||` against the analytic solution, integrated with the
/// branch of each element's region.
pub fn analytic_energy_error(mesh: &Mesh, cond: &Conductivity, exact: &AnalyticReference, u: &Field) -> f64 {
    let quad = triangle7();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let c = mesh.corners(t);
        let area = mesh.signed_area(t);
        let tri = mesh.triangles()[t];
        let branch = match tri.region {
            Region::Inclusion => Branch::Inner,
            Region::Background => Branch::Outer,
        };
        let k = cond.on(mesh, t);
        let gh = gradient(mesh, t, u.values());
        for &(l, w) in quad.iter() {
            let x = point(&c, l);
            let (g, val) = exact.eval(x, branch);
            let uh: f64 = (0..3).map(|i| l[i] * u.values()[tri.vertices[i]]).sum();
            total += w * area * (k * ((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2)) + (val - uh).powi(2));
        }
    }
    total.sqrt()
}

pub fn validation_setup(cfg: &ValidationConfig, exact: &AnalyticReference) -> cda_core::Result<EitSetup> {
    let ex = *exact;
    let trace = DirichletTrace::function(move |p| ex.eval(p, Branch::Outer).1);
    EitSetup::new(
        Conductivity::new(cfg.k_i, cfg.k_e)?,
        vec![Measurement { flux: BoundaryFlux::Cosine { m: 5 }, trace }],
    )
}

fn level(cfg: &ValidationConfig, exact: &AnalyticReference, setup: &EitSetup, h: f64) -> cda_core::Result<LevelReport> {
    let start = Instant::now();
    let cond = setup.conductivity;
    let mesh = generate_disk_mesh(cfg.rho_e, cfg.rho_i, h)?;
    let states = StateSolver::new(&mesh, &cond)?;
    let pairs = states.all_states(&mesh, setup)?;
    let pair = &pairs[0];
    let covector = shape_gradient_vector(&mesh, setup, &pairs);
    let descent = DescentSolver::new(&mesh)?.solve(&covector)?;
    let theta = &descent.theta;
    let certifier = Certifier::new(&mesh, &cond)?;
    let bound = certifier.certify(&mesh, &states, setup, &pairs, theta, descent.directional)?;
    let b = &bound.measurements[0];

    let err_n = analytic_energy_error(&mesh, &cond, exact, &pair.u_n);
    let err_d = analytic_energy_error(&mesh, &cond, exact, &pair.u_d);

    // reference on two uniform refinements
    let fine = refine_uniform(&refine_uniform(&mesh)?)?;
    let p = Prolongation::new(&mesh, &fine)?;
    let fstates = StateSolver::new(&fine, &cond)?;
    let fref = fstates.states(&fine, setup, 0)?;
    let th = p.apply(theta)?;
    let un = p.apply(&pair.u_n)?;
    let ud = p.apply(&pair.u_d)?;

    let rn = states.solve_free(&dg_du_form(&mesh, &cond, &pair.u_n, theta))?;
    let rd = states.solve_constrained(&mesh, &dg_du_form(&mesh, &cond, &pair.u_d, theta), &|_| 0.0)?;
    let hn = dg_du_form(&fine, &cond, &un, &th);
    let hd = dg_du_form(&fine, &cond, &ud, &th);
    let rn_ref = fstates.solve_free(&hn)?;
    let rd_ref = fstates.solve_constrained(&fine, &hd, &|_| 0.0)?;
    let err_rn = energy_norm(&fine, &cond, &rn_ref.sub(&p.apply(&rn)?));
    let err_rd = energy_norm(&fine, &cond, &rd_ref.sub(&p.apply(&rd)?));

    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let e_lin_ref = dot(&hn, fref.u_n.sub(&un).values()) - dot(&hd, fref.u_d.sub(&ud).values());
    let exact_dir = g_operator(&fine, &cond, &fref.u_n, &th) - g_operator(&fine, &cond, &fref.u_d, &th);
    let discrete_dir = g_operator(&fine, &cond, &un, &th) - g_operator(&fine, &cond, &ud, &th);
    let e_ref = exact_dir - discrete_dir;

    Ok(LevelReport {
        h: mesh.max_edge_length(),
        dofs: mesh.num_vertices(),
        err_n,
        err_d,
        err_rn,
        err_rd,
        bound_n: b.e_n.value,
        bound_d: b.e_d.value,
        bound_rn: b.r_n.value,
        bound_rd: b.r_d.value,
        e_ref,
        e_lin_ref,
        e_bar: bound.e_bar,
        directional: descent.directional,
        theta_norm: (-descent.directional).sqrt(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn run_validation(cfg: &ValidationConfig) -> cda_core::Result<ValidationReport> {
    let exact = AnalyticReference::solved(cfg.rho_i, cfg.rho_e, cfg.k_i, cfg.k_e);
    let setup = validation_setup(cfg, &exact)?;
    let levels = (0..cfg.levels)
        .map(|l| level(cfg, &exact, &setup, cfg.h0 / 2f64.powi(l as i32)))
        .collect::<cda_core::Result<Vec<_>>>()?;
    let rate = |f: &dyn Fn(&LevelReport) -> f64| {
        let pts: Vec<(f64, f64)> = levels.iter().map(|l| (l.h, f(l))).collect();
        fit_rate(&pts)
    };
    Ok(ValidationReport {
        rate_err_n: rate(&|l| l.err_n),
        rate_err_d: rate(&|l| l.err_d),
        rate_bound_n: rate(&|l| l.bound_n),
        rate_bound_d: rate(&|l| l.bound_d),
        rate_e_bar: rate(&|l| l.e_bar),
        rate_e_bar_normalized: rate(&|l| l.e_bar / l.theta_norm),
        levels,
    })
}

