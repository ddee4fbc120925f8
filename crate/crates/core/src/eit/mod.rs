//! EIT physics: boundary data, state problems, the Kohn–Vogelius functional
//! and its volumetric shape gradient.

mod analytic;
pub mod bessel;

use std::f64::consts::PI;
use std::sync::Arc;

pub use analytic::{concentric_trace_factor, AnalyticReference, Branch};

pub use crate::fem::Conductivity;
use crate::fem::{
    assemble::m_matrix, assemble::neumann_load, gradient, p1_gradients, state_matrix, vector_gradient, CsrMatrix,
    Field, SpaceKind, SpdSolver,
};
use crate::mesh::{BoundaryLabel, Mesh};
use crate::{Error, Result};

/// Analytic Neumann flux `g` on the outer boundary.
#[derive(Clone)]
pub enum BoundaryFlux {
    Zero,
    /// `cos(m ϑ)`.
    Cosine { m: u32 },
    /// `sin(m ϑ)`.
    Sine { m: u32 },
    /// `sgn(s)|s|^b a^c` with `s = x + a y`.
    Power { a: f64, b: f64, c: i32 },
    Custom(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for BoundaryFlux {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BoundaryFlux::Zero => write!(f, "Zero"),
            BoundaryFlux::Cosine { m } => write!(f, "Cosine {{ m: {m} }}"),
            BoundaryFlux::Sine { m } => write!(f, "Sine {{ m: {m} }}"),
            BoundaryFlux::Power { a, b, c } => write!(f, "Power {{ a: {a}, b: {b}, c: {c} }}"),
            BoundaryFlux::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl BoundaryFlux {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            BoundaryFlux::Zero => 0.0,
            BoundaryFlux::Cosine { m } => (*m as f64 * p[1].atan2(p[0])).cos(),
            BoundaryFlux::Sine { m } => (*m as f64 * p[1].atan2(p[0])).sin(),
            BoundaryFlux::Power { a, b, c } => {
                let s = p[0] + a * p[1];
                s.signum() * s.abs().powf(*b) * a.powi(*c)
            }
            BoundaryFlux::Custom(f) => f(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    /// The single flux `cos 5ϑ`; index 0 only.
    Single,
    /// The measurement family, indices `1..=10`.
    Family,
}

pub const FAMILY_SIZE: usize = 10;

/// Boundary flux number `j` of the given kind.
pub fn boundary_data(kind: DataKind, j: usize) -> Result<BoundaryFlux> {
    match kind {
        DataKind::Single if j == 0 => Ok(BoundaryFlux::Cosine { m: 5 }),
        DataKind::Family if (1..=FAMILY_SIZE).contains(&j) => Ok(BoundaryFlux::Power {
            a: 1.0 + 0.1 * j as f64,
            b: (j as f64 + 1.0) / 2.0,
            c: (j % 2) as i32,
        }),
        _ => Err(Error::InvalidArgument(format!("measurement index {j} out of range for {kind:?}"))),
    }
}

/// Dirichlet datum on the outer boundary.
#[derive(Clone)]
pub enum DirichletTrace {
    /// Piecewise linear trace sampled on a boundary polyline: segments with
    /// endpoint values.
    Sampled(Arc<Vec<([f64; 2], [f64; 2], f64, f64)>>),
    Function(Arc<dyn Fn([f64; 2]) -> f64 + Send + Sync>),
}

impl std::fmt::Debug for DirichletTrace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DirichletTrace::Sampled(s) => write!(f, "Sampled({} segments)", s.len()),
            DirichletTrace::Function(_) => write!(f, "Function"),
        }
    }
}

impl DirichletTrace {
    /// Trace of a P1 field on the outer boundary of its mesh.
    pub fn sample(mesh: &Mesh, u: &Field) -> Result<Self> {
        if u.kind() != SpaceKind::P1Scalar || u.len() != mesh.num_vertices() {
            return Err(Error::InvalidArgument("trace must be a P1 field on the sampling mesh".into()));
        }
        let v = u.values();
        let segments = mesh
            .boundary_edges()
            .iter()
            .filter(|b| b.label == BoundaryLabel::Outer)
            .map(|b| {
                let [p, q] = b.vertices;
                (mesh.vertices()[p], mesh.vertices()[q], v[p], v[q])
            })
            .collect();
        Ok(DirichletTrace::Sampled(Arc::new(segments)))
    }

    pub fn function(f: impl Fn([f64; 2]) -> f64 + Send + Sync + 'static) -> Self {
        DirichletTrace::Function(Arc::new(f))
    }

    /// Linear interpolation along the nearest sampled segment.
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            DirichletTrace::Function(f) => f(p),
            DirichletTrace::Sampled(segments) => {
                let mut best = (f64::INFINITY, 0.0);
                for &(a, b, va, vb) in segments.iter() {
                    let d = [b[0] - a[0], b[1] - a[1]];
                    let len2 = d[0] * d[0] + d[1] * d[1];
                    let s = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
                    let q = [a[0] + s * d[0], a[1] + s * d[1]];
                    let dist2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
                    if dist2 < best.0 {
                        best = (dist2, va + s * (vb - va));
                    }
                }
                best.1
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct Measurement {
    pub flux: BoundaryFlux,
    pub trace: DirichletTrace,
}

#[derive(Clone, Debug)]
pub struct EitSetup {
    pub conductivity: Conductivity,
    pub measurements: Vec<Measurement>,
}

impl EitSetup {
    pub fn new(conductivity: Conductivity, measurements: Vec<Measurement>) -> Result<Self> {
        if measurements.is_empty() {
            return Err(Error::InvalidArgument("at least one measurement is required".into()));
        }
        Ok(EitSetup { conductivity, measurements })
    }
}

/// Neumann and Dirichlet solutions for one measurement.
#[derive(Clone, Debug, PartialEq)]
pub struct StatePair {
    pub u_n: Field,
    pub u_d: Field,
}

/// Factorized state operator of a mesh, shared by the Neumann and Dirichlet
/// problems and by the influence functions.
pub struct StateSolver {
    matrix: CsrMatrix,
    neumann: SpdSolver,
    dirichlet: SpdSolver,
    outer: Vec<usize>,
}

impl StateSolver {
    pub fn new(mesh: &Mesh, cond: &Conductivity) -> Result<Self> {
        let matrix = state_matrix(mesh, cond);
        let mask = mesh.outer_vertex_mask();
        let outer: Vec<usize> = (0..mesh.num_vertices()).filter(|&v| mask[v]).collect();
        let neumann = SpdSolver::new(&matrix, &[])?;
        let dirichlet = SpdSolver::new(&matrix, &outer)?;
        Ok(StateSolver { matrix, neumann, dirichlet, outer })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    /// Solves `a(u, v) = rhs(v)` over the full space.
    pub fn solve_free(&self, rhs: &[f64]) -> Result<Field> {
        let zeros = vec![0.0; rhs.len()];
        Ok(Field::new(SpaceKind::P1Scalar, self.neumann.solve(rhs, &zeros)?))
    }

    /// Solves `a(u, v) = rhs(v)` for `v` vanishing on the outer boundary,
    /// with `u = trace` at the outer vertices.
    pub fn solve_constrained(&self, mesh: &Mesh, rhs: &[f64], trace: &dyn Fn([f64; 2]) -> f64) -> Result<Field> {
        let mut prescribed = vec![0.0; rhs.len()];
        for &v in &self.outer {
            prescribed[v] = trace(mesh.vertices()[v]);
        }
        Ok(Field::new(SpaceKind::P1Scalar, self.dirichlet.solve(rhs, &prescribed)?))
    }

    pub fn states(&self, mesh: &Mesh, setup: &EitSetup, j: usize) -> Result<StatePair> {
        let m = setup
            .measurements
            .get(j)
            .ok_or_else(|| Error::InvalidArgument(format!("measurement {j} out of range")))?;
        let g = |p: [f64; 2]| m.flux.eval(p);
        let u_n = self.solve_free(&neumann_load(mesh, &g))?;
        let zeros = vec![0.0; mesh.num_vertices()];
        let u_d = self.solve_constrained(mesh, &zeros, &|p| m.trace.eval(p))?;
        Ok(StatePair { u_n, u_d })
    }

    pub fn all_states(&self, mesh: &Mesh, setup: &EitSetup) -> Result<Vec<StatePair>> {
        (0..setup.measurements.len()).map(|j| self.states(mesh, setup, j)).collect()
    }
}

/// Neumann and Dirichlet solutions for measurement `j`.
pub fn solve_states(mesh: &Mesh, setup: &EitSetup, j: usize) -> Result<StatePair> {
    StateSolver::new(mesh, &setup.conductivity)?.states(mesh, setup, j)
}

/// `J = ½ a(u_N − u_D, u_N − u_D)` for one measurement.
pub fn kohn_vogelius(mesh: &Mesh, setup: &EitSetup, pair: &StatePair) -> f64 {
    let d = pair.u_n.sub(&pair.u_d);
    0.5 * state_matrix(mesh, &setup.conductivity).form(d.values(), d.values())
}

/// Sum of the Kohn–Vogelius functional over all measurements.
pub fn objective(matrix: &CsrMatrix, pairs: &[StatePair]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            let d = p.u_n.sub(&p.u_d);
            0.5 * matrix.form(d.values(), d.values())
        })
        .sum()
}

// ∫_K u² for linear u.
fn square_integral(area: f64, u: [f64; 3]) -> f64 {
    area / 6.0 * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2] + u[0] * u[1] + u[1] * u[2] + u[0] * u[2])
}

/// `⟨G(u), θ⟩ = ½ ∫ k M(θ)∇u·∇u − (div θ) u²`.
pub fn g_operator(mesh: &Mesh, cond: &Conductivity, u: &Field, theta: &Field) -> f64 {
    let (u, th) = (u.values(), theta.values());
    let mut total = 0.0;
    for t in 0..mesh.num_triangles() {
        let area = mesh.signed_area(t);
        let k = cond.on(mesh, t);
        let gu = gradient(mesh, t, u);
        let jac = vector_gradient(mesh, t, th);
        let m = m_matrix(&jac);
        let mgu = [m[0][0] * gu[0] + m[0][1] * gu[1], m[1][0] * gu[0] + m[1][1] * gu[1]];
        let vs = mesh.triangles()[t].vertices.map(|v| u[v]);
        total += 0.5 * (k * area * (mgu[0] * gu[0] + mgu[1] * gu[1]) - (jac[0][0] + jac[1][1]) * square_integral(area, vs));
    }
    total
}

// Local ⟨G(u), φ_a e_c⟩ on triangle `t`, indexed `[a][c]`.
fn g_local(mesh: &Mesh, cond: &Conductivity, t: usize, u: &[f64]) -> [[f64; 2]; 3] {
    let (g, area) = p1_gradients(&mesh.corners(t));
    let k = cond.on(mesh, t);
    let gu = gradient(mesh, t, u);
    let gu2 = gu[0] * gu[0] + gu[1] * gu[1];
    let u2 = square_integral(area, mesh.triangles()[t].vertices.map(|v| u[v]));
    std::array::from_fn(|a| {
        let ga_gu = g[a][0] * gu[0] + g[a][1] * gu[1];
        std::array::from_fn(|c| 0.5 * (k * area * (2.0 * ga_gu * gu[c] - g[a][c] * gu2) - g[a][c] * u2))
    })
}

/// Covector `L` of the discrete shape derivative on the P1 vector space:
/// `⟨d_h J, θ⟩ = L·θ` for θ vanishing on the outer boundary. Outer entries
/// are zero.
pub fn shape_gradient_vector(mesh: &Mesh, setup: &EitSetup, pairs: &[StatePair]) -> Vec<f64> {
    let mut out = vec![0.0; 2 * mesh.num_vertices()];
    for p in pairs {
        for t in 0..mesh.num_triangles() {
            let gn = g_local(mesh, &setup.conductivity, t, p.u_n.values());
            let gd = g_local(mesh, &setup.conductivity, t, p.u_d.values());
            for (a, &v) in mesh.triangles()[t].vertices.iter().enumerate() {
                for c in 0..2 {
                    out[2 * v + c] += gn[a][c] - gd[a][c];
                }
            }
        }
    }
    zero_outer(mesh, &mut out);
    out
}

/// Zeroes the entries of an interleaved covector at outer vertices.
pub fn zero_outer(mesh: &Mesh, covector: &mut [f64]) {
    for (v, on) in mesh.outer_vertex_mask().into_iter().enumerate() {
        if on {
            covector[2 * v] = 0.0;
            covector[2 * v + 1] = 0.0;
        }
    }
}

/// `δr ↦ ∫ k M(θ)∇u·∇δr − (div θ) u δr` on the P1 scalar basis.
pub fn dg_du_form(mesh: &Mesh, cond: &Conductivity, u: &Field, theta: &Field) -> Vec<f64> {
    let (u, th) = (u.values(), theta.values());
    let mut out = vec![0.0; mesh.num_vertices()];
    for t in 0..mesh.num_triangles() {
        let (g, area) = p1_gradients(&mesh.corners(t));
        let k = cond.on(mesh, t);
        let gu = gradient(mesh, t, u);
        let jac = vector_gradient(mesh, t, th);
        let div = jac[0][0] + jac[1][1];
        let m = m_matrix(&jac);
        let mgu = [m[0][0] * gu[0] + m[0][1] * gu[1], m[1][0] * gu[0] + m[1][1] * gu[1]];
        let vs = mesh.triangles()[t].vertices;
        let sum_u: f64 = vs.iter().map(|&v| u[v]).sum();
        for (b, &v) in vs.iter().enumerate() {
            let u_phi = area / 12.0 * (u[v] + sum_u);
            out[v] += k * area * (mgu[0] * g[b][0] + mgu[1] * g[b][1]) - div * u_phi;
        }
    }
    out
}

/// Angle of `p` in `[0, 2π)`.
pub fn polar_angle(p: [f64; 2]) -> f64 {
    p[1].atan2(p[0]).rem_euclid(2.0 * PI)
}
