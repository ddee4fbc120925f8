//! Experiment drivers behind the command line.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use cda_core::cda::{run_cda, CdaOutcome};
use cda_core::eit::{objective, shape_gradient_vector, EitSetup, StateSolver};
use cda_core::fem::{energy_norm, Field, SpaceKind};
use cda_core::mesh::{move_vertices, write_mesh, Mesh};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{DomainShape, InclusionShape, RunConfig};
use crate::export::{self, hausdorff, interface_svg, radial_deviation, records_csv, vtk, Layer, NamedField};
use crate::scenario::{domain_mesh, inclusion_polygon, initial_mesh, scenario};
use crate::validation::{run_validation, ValidationReport};

pub struct RunReport {
    pub outcome: CdaOutcome,
    pub initial: Mesh,
    pub target: Mesh,
    /// Hausdorff distance between the final and target interfaces.
    pub hausdorff: f64,
    /// Largest radial deviation of the final interface vertices from a
    /// circular target; `None` for other targets.
    pub radial_deviation: Option<f64>,
    /// Mean interface edge length of the final descent mesh, which carries
    /// the reconstructed shape.
    pub interface_edge: f64,
    pub seconds: f64,
}

impl RunReport {
    /// Every accepted step certified and strictly decreasing.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let records = &self.outcome.records;
        for r in records {
            if r.directional + r.e_bar >= 0.0 {
                out.push(format!("iteration {}: directional + Ebar = {:e} not negative", r.iteration, r.directional + r.e_bar));
            }
        }
        for w in records.windows(2) {
            if w[1].objective >= w[0].objective {
                out.push(format!("iteration {}: J did not decrease ({:e} -> {:e})", w[1].iteration, w[0].objective, w[1].objective));
            }
        }
        out
    }
}

fn target_loops(config: &RunConfig) -> cda_core::Result<Vec<Vec<[f64; 2]>>> {
    // finely sampled exact shapes; the polygon fitted into the target mesh is
    // only used to synthesize data
    config
        .target
        .inclusions
        .iter()
        .map(|s| {
            let mut fine = s.clone();
            fine.vertices = 1024;
            Ok(inclusion_polygon(&fine, config.domain.h)?.vertices().to_vec())
        })
        .collect()
}

pub fn cmd_run(config: &RunConfig) -> anyhow::Result<RunReport> {
    let start = Instant::now();
    let scenario = scenario(config)?;
    let initial = initial_mesh(config)?;
    let outcome = run_cda(&initial, &scenario.setup, &config.cda)?;
    let target = target_loops(config)?;
    let fin = outcome.descent_mesh.interface_polylines();
    let interface_edge = outcome.descent_mesh.mean_interface_edge_length().unwrap_or(0.0);
    let step = interface_edge.max(1e-3) / 8.0;
    let radial = match config.target.inclusions.as_slice() {
        [t] if t.shape == InclusionShape::Circle => Some(radial_deviation(&fin, t.center, t.semi_axes[0])),
        _ => None,
    };
    Ok(RunReport {
        hausdorff: hausdorff(&fin, &target, step),
        radial_deviation: radial,
        interface_edge,
        outcome,
        initial,
        target: scenario.target,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes `records.csv`, the meshes, `interface.svg` and `final.vtk`.
pub fn write_run(config: &RunConfig, report: &RunReport, out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", out.display()))?;
    let o = &report.outcome;
    export::write(&out.join("records.csv"), &records_csv(&o.records, config.timing))?;
    for (name, mesh) in [("initial.mesh", &report.initial), ("final.mesh", &o.mesh), ("final_descent.mesh", &o.descent_mesh)] {
        write_mesh(mesh, &out.join(name))?;
    }
    let initial = report.initial.interface_polylines();
    let target = target_loops(config)?;
    let fin = o.descent_mesh.interface_polylines();
    let svg = interface_svg(
        config.domain.size * 1.02,
        &[
            Layer { id: "initial", color: "green", dashed: true, loops: &initial },
            Layer { id: "target", color: "black", dashed: false, loops: &target },
            Layer { id: "final", color: "red", dashed: false, loops: &fin },
        ],
    );
    export::write(&out.join("interface.svg"), &svg)?;
    let mut fields = Vec::new();
    if let Some(s) = o.states.first() {
        fields.push(NamedField { name: "u_N", field: &s.u_n });
        fields.push(NamedField { name: "u_D", field: &s.u_d });
    }
    if let Some(theta) = &o.theta {
        fields.push(NamedField { name: "theta", field: theta });
    }
    export::write(&out.join("final.vtk"), &vtk(&o.mesh, "final state, measurement 0", &fields))?;
    Ok(())
}

pub fn run_summary(report: &RunReport) -> String {
    let o = &report.outcome;
    let mut s = String::new();
    let _ = writeln!(s, "stop reason        {}", o.stop.as_str());
    let _ = writeln!(s, "accepted steps     {}", o.records.len());
    if let (Some(first), Some(last)) = (o.records.first(), o.records.last()) {
        let _ = writeln!(s, "J                  {:.4e} -> {:.4e}", first.objective, last.objective);
        let _ = writeln!(s, "dofs               {} -> {}", first.dofs, last.dofs);
    }
    let _ = writeln!(s, "hausdorff          {:.4e}", report.hausdorff);
    if let Some(r) = report.radial_deviation {
        let _ = writeln!(s, "radial deviation   {r:.4e}");
    }
    let _ = writeln!(s, "interface edge     {:.4e}", report.interface_edge);
    let _ = writeln!(s, "seconds            {:.1}", report.seconds);
    s
}

/// Smooth random θ vanishing on the outer boundary: a polynomial times a
/// bump that is zero on the circle or the square.
pub fn random_theta(mesh: &Mesh, config: &RunConfig, rng: &mut ChaCha8Rng) -> Field {
    let c: [f64; 6] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
    let r = config.domain.size;
    let outer = mesh.outer_vertex_mask();
    let values = mesh
        .vertices()
        .iter()
        .enumerate()
        .flat_map(|(v, p)| {
            let (x, y) = (p[0] / r, p[1] / r);
            let bump = if outer[v] {
                0.0
            } else {
                match config.domain.shape {
                    DomainShape::Disk => 1.0 - x * x - y * y,
                    DomainShape::Square => (1.0 - x * x) * (1.0 - y * y),
                }
            };
            [bump * (c[0] + c[1] * x + c[2] * y), bump * (c[3] + c[4] * x * y + c[5] * y)]
        })
        .collect();
    Field::new(SpaceKind::P1Vec2, values)
}

#[derive(Clone, Debug)]
pub struct GradcheckRow {
    pub mesh: usize,
    pub sample: usize,
    pub step: f64,
    pub exact: f64,
    pub fd: f64,
}

impl GradcheckRow {
    pub fn mismatch(&self) -> f64 {
        if self.exact == 0.0 && self.fd == 0.0 {
            0.0
        } else {
            (self.exact - self.fd).abs() / self.exact.abs()
        }
    }
}

fn objective_on(mesh: &Mesh, setup: &EitSetup) -> cda_core::Result<f64> {
    let solver = StateSolver::new(mesh, &setup.conductivity)?;
    Ok(objective(solver.matrix(), &solver.all_states(mesh, setup)?))
}

/// Central differences of `J` along seeded random θ against the discrete
/// shape derivative. Sample 0 of every mesh is θ ≡ 0.
pub fn cmd_gradcheck(config: &RunConfig) -> anyhow::Result<Vec<GradcheckRow>> {
    let scenario = scenario(config)?;
    let setup = &scenario.setup;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut rows = Vec::new();
    for (m, &h) in config.gradcheck.mesh_sizes.iter().enumerate() {
        let mesh = domain_mesh(config, &config.initial, h)?;
        let solver = StateSolver::new(&mesh, &setup.conductivity)?;
        let pairs = solver.all_states(&mesh, setup)?;
        let l = shape_gradient_vector(&mesh, setup, &pairs);
        for sample in 0..=config.gradcheck.samples {
            let theta = if sample == 0 {
                Field::new(SpaceKind::P1Vec2, vec![0.0; 2 * mesh.num_vertices()])
            } else {
                random_theta(&mesh, config, &mut rng)
            };
            let exact: f64 = l.iter().zip(theta.values()).map(|(a, b)| a * b).sum();
            for &t in &config.gradcheck.steps {
                let fd = (objective_on(&move_vertices(&mesh, &theta, t)?, setup)?
                    - objective_on(&move_vertices(&mesh, &theta, -t)?, setup)?)
                    / (2.0 * t);
                rows.push(GradcheckRow { mesh: m, sample, step: t, exact, fd });
            }
        }
    }
    Ok(rows)
}

pub fn gradcheck_table(rows: &[GradcheckRow]) -> String {
    let mut s = String::from("mesh,sample,t,exact,central_difference,relative_mismatch\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{:e},{:e},{:e},{:e}", r.mesh, r.sample, r.step, r.exact, r.fd, r.mismatch());
    }
    s
}

/// Rows at the acceptance step `t = 1e-4` whose mismatch exceeds the
/// configured tolerance.
pub fn gradcheck_failures<'a>(config: &RunConfig, rows: &'a [GradcheckRow]) -> Vec<&'a GradcheckRow> {
    rows.iter().filter(|r| r.step == 1e-4 && !(r.mismatch() <= config.gradcheck.tolerance)).collect()
}

pub struct ForwardReport {
    pub mesh: Mesh,
    pub setup: EitSetup,
    pub states: Vec<cda_core::eit::StatePair>,
    pub objective: f64,
    pub energy: Vec<(f64, f64)>,
}

/// Neumann and Dirichlet states on the initial geometry.
pub fn cmd_forward(config: &RunConfig) -> anyhow::Result<ForwardReport> {
    let scenario = scenario(config)?;
    let mesh = initial_mesh(config)?;
    let solver = StateSolver::new(&mesh, &scenario.setup.conductivity)?;
    let states = solver.all_states(&mesh, &scenario.setup)?;
    let cond = scenario.setup.conductivity;
    let energy = states.iter().map(|s| (energy_norm(&mesh, &cond, &s.u_n), energy_norm(&mesh, &cond, &s.u_d))).collect();
    Ok(ForwardReport { objective: objective(solver.matrix(), &states), setup: scenario.setup, mesh, states, energy })
}

pub fn write_forward(report: &ForwardReport, out: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(out).map_err(|e| anyhow::anyhow!("cannot create {}: {e}", out.display()))?;
    write_mesh(&report.mesh, &out.join("mesh.mesh"))?;
    let names: Vec<(String, String)> = (0..report.states.len()).map(|j| (format!("u_N_{j}"), format!("u_D_{j}"))).collect();
    let fields: Vec<NamedField> = report
        .states
        .iter()
        .zip(&names)
        .flat_map(|(s, (n, d))| [NamedField { name: n, field: &s.u_n }, NamedField { name: d, field: &s.u_d }])
        .collect();
    export::write(&out.join("forward.vtk"), &vtk(&report.mesh, "forward states", &fields))
}

pub fn cmd_convergence(config: &RunConfig) -> anyhow::Result<ValidationReport> {
    Ok(run_validation(&config.validation)?)
}

pub fn convergence_table(report: &ValidationReport, timing: bool) -> String {
    let mut s = String::from(
        "h,dofs,err_N,err_D,bound_N,bound_D,eff_N,eff_D,err_rN,err_rD,bound_rN,bound_rD,E_ref,Etilde_ref,Ebar,directional,seconds\n",
    );
    for l in &report.levels {
        let _ = writeln!(
            s,
            "{:e},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            l.h,
            l.dofs,
            l.err_n,
            l.err_d,
            l.bound_n,
            l.bound_d,
            l.effectivity_n(),
            l.effectivity_d(),
            l.err_rn,
            l.err_rd,
            l.bound_rn,
            l.bound_rd,
            l.e_ref,
            l.e_lin_ref,
            l.e_bar,
            l.directional,
            if timing { l.seconds } else { 0.0 }
        );
    }
    s
}

/// Effectivities below one, and levels where Ē fails to bound `|Ẽ_ref|`.
pub fn convergence_failures(report: &ValidationReport) -> Vec<String> {
    let mut out = Vec::new();
    for (i, l) in report.levels.iter().enumerate() {
        for (name, eff) in [("N", l.effectivity_n()), ("D", l.effectivity_d())] {
            if !(eff >= 1.0) {
                out.push(format!("level {i}: effectivity {name} = {eff:.4}"));
            }
        }
        if !(l.e_bar >= l.e_lin_ref.abs()) {
            out.push(format!("level {i}: Ebar {:e} below |Etilde_ref| {:e}", l.e_bar, l.e_lin_ref.abs()));
        }
    }
    out
}
