//! Element loops for the state and flux problems.

use super::quadrature::{edge4, point, triangle3};
use super::{Field, LinearSystem, SpaceKind, TripletBuilder};
use crate::fem::CsrMatrix;
use crate::mesh::{Mesh, Region};
use crate::{Error, Result};

/// Piecewise constant conductivity: `k_i` in the inclusion, `k_e` outside.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conductivity {
    k_i: f64,
    k_e: f64,
}

impl Conductivity {
    pub fn new(k_i: f64, k_e: f64) -> Result<Self> {
        if !(k_i > 0.0 && k_e > 0.0 && k_i.is_finite() && k_e.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "conductivities must be positive, got k_I={k_i}, k_E={k_e}"
            )));
        }
        Ok(Conductivity { k_i, k_e })
    }

    pub fn k_i(&self) -> f64 {
        self.k_i
    }

    pub fn k_e(&self) -> f64 {
        self.k_e
    }

    pub fn value(&self, region: Region) -> f64 {
        match region {
            Region::Inclusion => self.k_i,
            Region::Background => self.k_e,
        }
    }

    pub fn on(&self, mesh: &Mesh, t: usize) -> f64 {
        self.value(mesh.triangles()[t].region)
    }
}

/// Boundary datum of a state problem.
#[derive(Clone, Copy)]
pub enum StateData<'a> {
    /// Neumann flux `g`, integrated along outer edges.
    Neumann(&'a dyn Fn([f64; 2]) -> f64),
    /// Dirichlet trace, interpolated at outer vertices.
    Dirichlet(&'a dyn Fn([f64; 2]) -> f64),
}

/// Gradients of the three barycentric functions and the area.
pub fn p1_gradients(c: &[[f64; 2]; 3]) -> ([[f64; 2]; 3], f64) {
    let det = (c[1][0] - c[0][0]) * (c[2][1] - c[0][1]) - (c[2][0] - c[0][0]) * (c[1][1] - c[0][1]);
    let mut g = [[0.0; 2]; 3];
    for (i, gi) in g.iter_mut().enumerate() {
        let (p, q) = (c[(i + 1) % 3], c[(i + 2) % 3]);
        *gi = [(p[1] - q[1]) / det, (q[0] - p[0]) / det];
    }
    (g, 0.5 * det)
}

/// Gradient of a P1 scalar field on triangle `t`.
pub fn gradient(mesh: &Mesh, t: usize, u: &[f64]) -> [f64; 2] {
    let (g, _) = p1_gradients(&mesh.corners(t));
    let vs = mesh.triangles()[t].vertices;
    let mut out = [0.0; 2];
    for i in 0..3 {
        out[0] += u[vs[i]] * g[i][0];
        out[1] += u[vs[i]] * g[i][1];
    }
    out
}

/// Jacobian `[c][d] = ∂_d θ_c` of an interleaved P1 vector field on `t`.
pub fn vector_gradient(mesh: &Mesh, t: usize, theta: &[f64]) -> [[f64; 2]; 2] {
    let (g, _) = p1_gradients(&mesh.corners(t));
    let vs = mesh.triangles()[t].vertices;
    let mut out = [[0.0; 2]; 2];
    for i in 0..3 {
        for (c, row) in out.iter_mut().enumerate() {
            row[0] += theta[2 * vs[i] + c] * g[i][0];
            row[1] += theta[2 * vs[i] + c] * g[i][1];
        }
    }
    out
}

/// Value and divergence of an RT0 field on triangle `t` at point `x`.
pub fn flux_at(mesh: &Mesh, t: usize, sigma: &[f64], x: [f64; 2]) -> ([f64; 2], f64) {
    let c = mesh.corners(t);
    let area = mesh.signed_area(t);
    let edges = mesh.triangle_edges()[t];
    let mut v = [0.0; 2];
    let mut div = 0.0;
    for i in 0..3 {
        let coef = mesh.rt0_sign(t, i) * sigma[edges[i]];
        v[0] += coef * (x[0] - c[i][0]) / (2.0 * area);
        v[1] += coef * (x[1] - c[i][1]) / (2.0 * area);
        div += coef / area;
    }
    (v, div)
}

/// Matrix of `a(u, v) = ∫ k ∇u·∇v + u v` on P1.
pub fn state_matrix(mesh: &Mesh, cond: &Conductivity) -> CsrMatrix {
    let mut b = TripletBuilder::with_capacity(mesh.num_vertices(), 9 * mesh.num_triangles());
    for t in 0..mesh.num_triangles() {
        let (g, area) = p1_gradients(&mesh.corners(t));
        let k = cond.on(mesh, t);
        let vs = mesh.triangles()[t].vertices;
        for i in 0..3 {
            for j in 0..3 {
                let stiff = k * area * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                let mass = area / 12.0 * if i == j { 2.0 } else { 1.0 };
                b.add(vs[i], vs[j], stiff + mass);
            }
        }
    }
    b.build()
}

/// Outer-edge Neumann load `∫_∂D g v ds`.
pub(crate) fn neumann_load(mesh: &Mesh, g: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
    let mut rhs = vec![0.0; mesh.num_vertices()];
    for e in mesh.outer_edges() {
        let [a, b] = mesh.edges()[e];
        let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[b]);
        let len = mesh.edge_length(e);
        for (s, w) in edge4() {
            let x = [pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])];
            let gx = g(x) * w * len;
            rhs[a] += gx * (1.0 - s);
            rhs[b] += gx * s;
        }
    }
    rhs
}

/// P1 Galerkin system of the Neumann or Dirichlet state problem.
pub fn assemble_state(mesh: &Mesh, cond: &Conductivity, data: StateData<'_>) -> LinearSystem {
    let matrix = state_matrix(mesh, cond);
    match data {
        StateData::Neumann(g) => LinearSystem::new(matrix, neumann_load(mesh, g), vec![]),
        StateData::Dirichlet(ud) => {
            let outer = mesh.outer_vertex_mask();
            let constraints = (0..mesh.num_vertices())
                .filter(|&v| outer[v])
                .map(|v| (v, ud(mesh.vertices()[v])))
                .collect();
            LinearSystem::new(matrix, vec![0.0; mesh.num_vertices()], constraints)
        }
    }
}

/// `√a(v, v)`.
pub fn energy_norm(mesh: &Mesh, cond: &Conductivity, v: &Field) -> f64 {
    assert_eq!(v.kind(), SpaceKind::P1Scalar);
    state_matrix(mesh, cond).form(v.values(), v.values()).max(0.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FluxKind {
    StateN,
    StateD,
    AdjN,
    AdjD,
}

/// Data entering the flux problems. `g` is needed for `StateN`, `u` for the
/// state and adjoint kinds, `theta` for the adjoint kinds.
#[derive(Clone, Copy, Default)]
pub struct FluxInputs<'a> {
    pub g: Option<&'a dyn Fn([f64; 2]) -> f64>,
    pub u: Option<&'a [f64]>,
    pub theta: Option<&'a [f64]>,
}

/// RT0 system for `∫ k⁻¹ σ·δσ + div σ div δσ` with the right-hand side and
/// essential normal trace of the given kind.
pub fn assemble_hdiv(mesh: &Mesh, cond: &Conductivity, kind: FluxKind, inputs: &FluxInputs<'_>) -> Result<LinearSystem> {
    let ne = mesh.num_edges();
    let mut b = TripletBuilder::with_capacity(ne, 9 * mesh.num_triangles());
    let mut rhs = vec![0.0; ne];
    let adjoint = matches!(kind, FluxKind::AdjN | FluxKind::AdjD);
    let u = match kind {
        FluxKind::StateN => None,
        _ => Some(inputs.u.ok_or(Error::MissingInput("u"))?),
    };
    let theta = if adjoint { Some(inputs.theta.ok_or(Error::MissingInput("theta"))?) } else { None };
    let g = if kind == FluxKind::StateN { Some(inputs.g.ok_or(Error::MissingInput("g"))?) } else { None };

    let quad = triangle3();
    for t in 0..mesh.num_triangles() {
        let c = mesh.corners(t);
        let area = mesh.signed_area(t);
        let k = cond.on(mesh, t);
        let edges = mesh.triangle_edges()[t];
        let s = [mesh.rt0_sign(t, 0), mesh.rt0_sign(t, 1), mesh.rt0_sign(t, 2)];
        let mut local = [[0.0; 3]; 3];
        for (l, w) in quad {
            let x = point(&c, l);
            let phi: [[f64; 2]; 3] =
                std::array::from_fn(|i| [(x[0] - c[i][0]) / (2.0 * area), (x[1] - c[i][1]) / (2.0 * area)]);
            for i in 0..3 {
                for j in 0..3 {
                    local[i][j] += w * area * (phi[i][0] * phi[j][0] + phi[i][1] * phi[j][1]) / k;
                }
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                b.add(edges[i], edges[j], s[i] * s[j] * (local[i][j] + 1.0 / area));
            }
        }

        if let (Some(u), Some(theta)) = (u, theta) {
            let gu = gradient(mesh, t, u);
            let jac = vector_gradient(mesh, t, theta);
            let div_theta = jac[0][0] + jac[1][1];
            let m = m_matrix(&jac);
            let mgu = [m[0][0] * gu[0] + m[0][1] * gu[1], m[1][0] * gu[0] + m[1][1] * gu[1]];
            let vs = mesh.triangles()[t].vertices;
            // ∫ u over K, u linear
            let u_int = area * (u[vs[0]] + u[vs[1]] + u[vs[2]]) / 3.0;
            for i in 0..3 {
                // ∫ φ_i = (centroid − p_i) |K| / (2|K|)
                let centroid = [(c[0][0] + c[1][0] + c[2][0]) / 3.0, (c[0][1] + c[1][1] + c[2][1]) / 3.0];
                let phi_int = [0.5 * (centroid[0] - c[i][0]), 0.5 * (centroid[1] - c[i][1])];
                let val = div_theta * u_int / area - (mgu[0] * phi_int[0] + mgu[1] * phi_int[1]);
                rhs[edges[i]] += s[i] * val;
            }
        }
    }

    let mut constraints = Vec::new();
    for e in mesh.outer_edges() {
        let t = mesh.edge_triangles(e)[0].expect("outer edge has an owner");
        let i = mesh.triangle_edges()[t].iter().position(|&x| x == e).unwrap();
        let sign = mesh.rt0_sign(t, i);
        let [a, bv] = mesh.edges()[e];
        match kind {
            FluxKind::StateN => {
                let g = g.unwrap();
                let (pa, pb) = (mesh.vertices()[a], mesh.vertices()[bv]);
                let len = mesh.edge_length(e);
                let flux: f64 = edge4()
                    .iter()
                    .map(|&(s, w)| w * len * g([pa[0] + s * (pb[0] - pa[0]), pa[1] + s * (pb[1] - pa[1])]))
                    .sum();
                constraints.push((e, sign * flux));
            }
            FluxKind::AdjN => constraints.push((e, 0.0)),
            FluxKind::StateD => {
                let u = u.unwrap();
                rhs[e] += sign * 0.5 * (u[a] + u[bv]);
            }
            FluxKind::AdjD => {}
        }
    }
    Ok(LinearSystem::new(b.build(), rhs, constraints))
}

/// `M(θ) = ∇θ + ∇θᵀ − (div θ) I`.
pub(crate) fn m_matrix(jac: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    let div = jac[0][0] + jac[1][1];
    let off = jac[0][1] + jac[1][0];
    [[2.0 * jac[0][0] - div, off], [off, 2.0 * jac[1][1] - div]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{solve_spd, FeSpace};
    use crate::mesh::{generate_disk_mesh, OuterBoundary, Triangle};

    fn right_triangle() -> Mesh {
        let tri = Triangle { vertices: [0, 1, 2], region: Region::Background };
        Mesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![tri], OuterBoundary::Polygonal).unwrap()
    }

    #[test]
    fn reference_element_blocks() {
        let m = right_triangle();
        let a = state_matrix(&m, &Conductivity::new(1.0, 1.0).unwrap());
        let stiff = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                let mass = if i == j { 2.0 } else { 1.0 } / 24.0;
                assert!((a.get(i, j) - stiff[i][j] - mass).abs() < 1e-15, "({i},{j})");
            }
        }
    }

    #[test]
    fn m_matrix_of_rigid_translation_is_zero() {
        assert_eq!(m_matrix(&[[0.0, 0.0], [0.0, 0.0]]), [[0.0; 2]; 2]);
        // pure rotation: ∇θ antisymmetric, div 0
        assert_eq!(m_matrix(&[[0.0, -1.0], [1.0, 0.0]]), [[0.0; 2]; 2]);
    }

    #[test]
    fn hdiv_matrix_is_symmetric_with_positive_diagonal() {
        let m = generate_disk_mesh(5.0, 4.0, 1.0).unwrap();
        let cond = Conductivity::new(10.0, 1.0).unwrap();
        let u: Vec<f64> = m.vertices().iter().map(|p| p[0] * p[1]).collect();
        let theta: Vec<f64> = m.vertices().iter().flat_map(|p| [p[1], -0.3 * p[0]]).collect();
        let g = |x: [f64; 2]| x[0];
        for kind in [FluxKind::StateN, FluxKind::StateD, FluxKind::AdjN, FluxKind::AdjD] {
            let sys = assemble_hdiv(&m, &cond, kind, &FluxInputs { g: Some(&g), u: Some(&u), theta: Some(&theta) }).unwrap();
            assert!(sys.matrix.asymmetry() < 1e-14);
            assert!(sys.matrix.diagonal().iter().all(|&d| d > 0.0));
            let x = solve_spd(&sys).unwrap();
            assert!(sys.residual(&x) <= 1e-12);
        }
    }

    #[test]
    fn missing_inputs() {
        let m = right_triangle();
        let cond = Conductivity::new(1.0, 1.0).unwrap();
        let u = vec![0.0; 3];
        let err = assemble_hdiv(&m, &cond, FluxKind::AdjN, &FluxInputs { u: Some(&u), ..Default::default() });
        assert!(matches!(err, Err(Error::MissingInput("theta"))));
        assert!(matches!(assemble_hdiv(&m, &cond, FluxKind::StateN, &FluxInputs::default()), Err(Error::MissingInput("g"))));
    }

    #[test]
    fn flux_divergence_is_piecewise_constant_and_integrates_to_boundary_flux() {
        let m = generate_disk_mesh(2.0, 1.0, 0.7).unwrap();
        let sigma: Vec<f64> = (0..m.num_edges()).map(|e| (e as f64 * 0.37).sin()).collect();
        let total_div: f64 = (0..m.num_triangles()).map(|t| flux_at(&m, t, &sigma, m.corners(t)[0]).1 * m.signed_area(t)).sum();
        let boundary: f64 = m
            .outer_edges()
            .map(|e| {
                let t = m.edge_triangles(e)[0].unwrap();
                let i = m.triangle_edges()[t].iter().position(|&x| x == e).unwrap();
                m.rt0_sign(t, i) * sigma[e]
            })
            .sum();
        assert!((total_div - boundary).abs() < 1e-12);
        assert_eq!(FeSpace::new(&m, SpaceKind::Rt0).num_dofs, m.num_edges());
    }
}
