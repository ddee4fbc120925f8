use cda_core::cda::{run_cda, synthesize_dirichlet_data, CdaConfig, CdaOutcome, StopReason, Strategy};
use cda_core::eit::{concentric_trace_factor, BoundaryFlux, Conductivity, DirichletTrace, EitSetup, Measurement};
use cda_core::mesh::{generate_disk_mesh, move_vertices, quality, smoothing_displacement, Mesh};

// Concentric target of radius 4 in the disk of radius 5, measured with the
// first cosine and sine fluxes.
fn setup() -> EitSetup {
    let f = concentric_trace_factor(1, 4.0, 5.0, 10.0, 1.0);
    let cond = Conductivity::new(10.0, 1.0).unwrap();
    let m = vec![
        Measurement {
            flux: BoundaryFlux::Cosine { m: 1 },
            trace: DirichletTrace::function(move |p| f * p[1].atan2(p[0]).cos()),
        },
        Measurement {
            flux: BoundaryFlux::Sine { m: 1 },
            trace: DirichletTrace::function(move |p| f * p[1].atan2(p[0]).sin()),
        },
    ];
    EitSetup::new(cond, m).unwrap()
}

fn initial() -> Mesh {
    generate_disk_mesh(5.0, 3.0, 1.0).unwrap()
}

fn config(strategy: Strategy, fine_levels: usize, max_iters: usize) -> CdaConfig {
    CdaConfig { strategy, fine_levels, max_iters, max_retries: 16, ..CdaConfig::default() }
}

fn same_records(a: &CdaOutcome, b: &CdaOutcome, tol: f64) {
    assert_eq!(a.stop, b.stop);
    assert_eq!(a.records.len(), b.records.len());
    let close = |x: f64, y: f64| (x - y).abs() <= tol * x.abs().max(y.abs()).max(1e-300);
    for (r, s) in a.records.iter().zip(&b.records) {
        assert_eq!((r.iteration, r.dofs, r.retries), (s.iteration, s.dofs, s.retries));
        for (x, y) in [(r.objective, s.objective), (r.directional, s.directional), (r.e_bar, s.e_bar), (r.mu, s.mu)] {
            assert!(close(x, y), "{x:e} vs {y:e}");
        }
    }
}

#[test]
fn short_run_is_certified_and_monotone() {
    let out = run_cda(&initial(), &setup(), &config(Strategy::TwoMesh, 1, 4)).unwrap();
    assert_eq!(out.stop, StopReason::MaxIters);
    assert_eq!(out.records.len(), 4);
    for r in &out.records {
        assert!(r.directional + r.e_bar < 0.0, "iteration {} not certified", r.iteration);
        assert!(r.mu > 0.0);
    }
    for w in out.records.windows(2) {
        assert!(w[1].objective < w[0].objective);
        assert!(w[1].dofs >= w[0].dofs);
    }
    out.mesh.check().unwrap();
    out.descent_mesh.check().unwrap();
    assert!(out.mesh.contains_vertices_of(&out.descent_mesh));
}

#[test]
fn loose_tolerance_stops_after_first_step() {
    let cfg = CdaConfig { tol: 1e6, ..config(Strategy::TwoMesh, 1, 50) };
    let out = run_cda(&initial(), &setup(), &cfg).unwrap();
    assert_eq!(out.stop, StopReason::CertifiedStop);
    assert_eq!(out.records.len(), 1);
    assert!(out.theta.is_some());
}

#[test]
fn two_mesh_without_fine_levels_is_one_mesh() {
    let a = run_cda(&initial(), &setup(), &config(Strategy::TwoMesh, 0, 3)).unwrap();
    let b = run_cda(&initial(), &setup(), &config(Strategy::OneMesh, 0, 3)).unwrap();
    same_records(&a, &b, 1e-10);
}

#[test]
fn runs_are_deterministic() {
    let cfg = CdaConfig { smoothing_sweeps: 5, ..config(Strategy::TwoMesh, 1, 3) };
    let a = run_cda(&initial(), &setup(), &cfg).unwrap();
    let b = run_cda(&initial(), &setup(), &cfg).unwrap();
    same_records(&a, &b, 0.0);
    assert_eq!(a.mesh.vertices(), b.mesh.vertices());
}

#[test]
fn dof_cap_is_respected() {
    let cfg = CdaConfig { max_dofs: 50, ..config(Strategy::TwoMesh, 1, 10) };
    let out = run_cda(&initial(), &setup(), &cfg).unwrap();
    assert_eq!(out.stop, StopReason::DofCap);
    assert!(out.records.is_empty());
}

#[test]
fn synthesized_data_levels() {
    let target = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
    let cond = Conductivity::new(10.0, 1.0).unwrap();
    let zero = BoundaryFlux::Custom(std::sync::Arc::new(|_| 0.0));
    let d = synthesize_dirichlet_data(&target, &cond, &zero, 1e-3, 3).unwrap();
    assert_eq!(d.levels, 0);
    assert_eq!(d.trace.eval([5.0, 0.0]), 0.0);

    let flux = BoundaryFlux::Cosine { m: 1 };
    let loose = synthesize_dirichlet_data(&target, &cond, &flux, 0.2, 4).unwrap();
    let tight = synthesize_dirichlet_data(&target, &cond, &flux, 0.05, 4).unwrap();
    assert!(tight.levels > loose.levels);
    assert!(tight.bound <= 0.05 * tight.norm);
    // both traces approximate the concentric solution
    let f = concentric_trace_factor(1, 4.0, 5.0, 10.0, 1.0);
    let err = (tight.trace.eval([0.0, 5.0]) - 0.0).abs() + (tight.trace.eval([5.0, 0.0]) - f).abs();
    assert!(err < 0.05 * f.abs(), "trace error {err:e}");
}

#[test]
fn smoothing_keeps_fixed_vertices_and_quality() {
    let mesh = generate_disk_mesh(5.0, 2.0, 0.8).unwrap();
    let d = smoothing_displacement(&mesh, 10);
    let outer = mesh.outer_vertex_mask();
    let interface = mesh.interface_vertex_mask();
    for v in 0..mesh.num_vertices() {
        if outer[v] || interface[v] {
            assert_eq!((d.values()[2 * v], d.values()[2 * v + 1]), (0.0, 0.0));
        }
    }
    assert!(d.values().iter().any(|&x| x != 0.0));
    let smoothed = move_vertices(&mesh, &d, 1.0).unwrap();
    smoothed.check().unwrap();
    assert!(quality(&smoothed) >= quality(&mesh));
}
