use cda_core::certify::{bound_energy_error, equilibrate_flux, BoundInputs};
use cda_core::eit::{AnalyticReference, Branch};
use cda_core::fem::quadrature::{point, triangle7};
use cda_core::fem::{assemble_state, solve_spd, Conductivity, Field, FluxInputs, FluxKind, StateData};
use cda_core::mesh::{generate_disk_mesh, Mesh, Region};

// |||u - u_h||| with the exact solution, each element integrated on its four
// midpoint children so the quadrature differs from the one inside the bound
fn exact_error(mesh: &Mesh, cond: &Conductivity, exact: &AnalyticReference, u: &Field) -> f64 {
    let quad = triangle7();
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let tri = mesh.triangles()[t];
        let [a, b, c] = mesh.corners(t);
        let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
        let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
        let branch = if tri.region == Region::Inclusion { Branch::Inner } else { Branch::Outer };
        let k = cond.value(tri.region);
        let area = mesh.signed_area(t) / 4.0;
        let vals = [u.values()[tri.vertices[0]], u.values()[tri.vertices[1]], u.values()[tri.vertices[2]]];
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let (d1, d2) = (vals[1] - vals[0], vals[2] - vals[0]);
        let gh = [(d1 * (c[1] - a[1]) - d2 * (b[1] - a[1])) / det, (d2 * (b[0] - a[0]) - d1 * (c[0] - a[0])) / det];
        // barycentric coordinates of x in the parent, from the affine map
        let bary = |x: [f64; 2]| {
            let l1 = ((x[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (x[1] - a[1])) / det;
            let l2 = ((b[0] - a[0]) * (x[1] - a[1]) - (x[0] - a[0]) * (b[1] - a[1])) / det;
            [1.0 - l1 - l2, l1, l2]
        };
        for child in [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]] {
            for &(l, w) in quad.iter() {
                let x = point(&child, l);
                let (g, v) = exact.eval(x, branch);
                let lp = bary(x);
                let uh = lp[0] * vals[0] + lp[1] * vals[1] + lp[2] * vals[2];
                total += w * area * (k * ((g[0] - gh[0]).powi(2) + (g[1] - gh[1]).powi(2)) + (v - uh).powi(2));
            }
        }
    }
    total.sqrt()
}

#[test]
fn state_bounds_dominate_the_true_error() {
    let exact = AnalyticReference::validation();
    let cond = Conductivity::new(exact.k_i, exact.k_e).unwrap();
    let g = |p: [f64; 2]| (5.0 * p[1].atan2(p[0])).cos();
    let trace = move |p: [f64; 2]| exact.eval(p, Branch::Outer).1;
    for h in [1.0, 0.7, 0.5, 0.35] {
        let mesh = generate_disk_mesh(exact.rho_e, exact.rho_i, h).unwrap();
        for (kind, data) in [(FluxKind::StateN, StateData::Neumann(&g)), (FluxKind::StateD, StateData::Dirichlet(&trace))] {
            let u = Field::new(cda_core::fem::SpaceKind::P1Scalar, solve_spd(&assemble_state(&mesh, &cond, data)).unwrap());
            let inputs = FluxInputs { g: Some(&g), u: Some(u.values()), theta: None };
            let flux = equilibrate_flux(&mesh, &cond, kind, &inputs).unwrap();
            let bound = bound_energy_error(&mesh, &cond, kind, &BoundInputs { u: &u, flux: &flux, theta: None, r: None }).unwrap();
            let err = exact_error(&mesh, &cond, &exact, &u);
            assert!(bound.value >= err, "{kind:?} h={h}: bound {:.6e} < error {err:.6e}", bound.value);
            assert!(bound.value <= 3.0 * err, "{kind:?} h={h}: bound {:.6e} far above error {err:.6e}", bound.value);
            let sum: f64 = bound.elements.iter().sum();
            assert!((sum - bound.value.powi(2)).abs() <= 1e-10 * sum.max(1e-300));
        }
    }
}
