use cda_core::eit::{AnalyticReference, Branch};
use cda_core::fem::{
    assemble_hdiv, assemble_state, solve_spd, Conductivity, FluxInputs, FluxKind, StateData, RESIDUAL_TOLERANCE,
};
use cda_core::mesh::{generate_disk_mesh, refine_uniform};

fn flux(p: [f64; 2]) -> f64 {
    (5.0 * p[1].atan2(p[0])).cos()
}

#[test]
fn state_systems_meet_the_residual_contract() {
    let cond = Conductivity::new(10.0, 1.0).unwrap();
    let exact = AnalyticReference::validation();
    let trace = move |p: [f64; 2]| exact.eval(p, Branch::Outer).1;
    for h in [1.0, 0.5, 0.25] {
        let mesh = generate_disk_mesh(5.0, 4.0, h).unwrap();
        for data in [StateData::Neumann(&flux), StateData::Dirichlet(&trace)] {
            let system = assemble_state(&mesh, &cond, data);
            let x = solve_spd(&system).unwrap();
            let r = system.residual(&x);
            assert!(r <= RESIDUAL_TOLERANCE, "h={h}: residual {r:e}");
        }
    }
}

#[test]
fn flux_systems_meet_the_residual_contract() {
    let cond = Conductivity::new(10.0, 1.0).unwrap();
    let mut mesh = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
    for _ in 0..3 {
        let u = solve_spd(&assemble_state(&mesh, &cond, StateData::Neumann(&flux))).unwrap();
        for kind in [FluxKind::StateN, FluxKind::StateD] {
            let inputs = FluxInputs { g: Some(&flux), u: Some(&u), theta: None };
            let system = assemble_hdiv(&mesh, &cond, kind, &inputs).unwrap();
            let x = solve_spd(&system).unwrap();
            let r = system.residual(&x);
            assert!(r <= RESIDUAL_TOLERANCE, "{kind:?} on {} edges: residual {r:e}", mesh.num_edges());
        }
        mesh = refine_uniform(&mesh).unwrap();
    }
}
