//! Meshes and measurement setups built from a [`RunConfig`].

use std::f64::consts::PI;

use cda_core::cda::synthesize_dirichlet_data;
use cda_core::eit::{
    boundary_data, concentric_trace_factor, BoundaryFlux, Conductivity, DataKind, DirichletTrace, EitSetup,
    Measurement,
};
use cda_core::mesh::{
    ellipse_polygon, generate_disk_mesh, generate_disk_mesh_with_inclusions, generate_square_mesh, Mesh, Polygon,
};

use crate::config::{DataSource, DomainShape, InclusionShape, InclusionSpec, MeasurementKind, RunConfig};

/// Boundary polygon of an inclusion; without an explicit vertex count the
/// perimeter is split into pieces no longer than `h`.
pub fn inclusion_polygon(spec: &InclusionSpec, h: f64) -> cda_core::Result<Polygon> {
    let [a, b] = spec.semi_axes;
    let n = if spec.vertices > 0 {
        spec.vertices
    } else {
        // Ramanujan's perimeter approximation
        let perimeter = PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
        ((perimeter / h).ceil() as usize).max(12)
    };
    ellipse_polygon(spec.center, a, b, spec.angle, n)
}

fn is_centred_circle(spec: &InclusionSpec) -> bool {
    spec.shape == InclusionShape::Circle && spec.center == [0.0, 0.0] && spec.vertices == 0
}

/// Mesh of the domain with the given inclusions fitted.
pub fn domain_mesh(config: &RunConfig, inclusions: &[InclusionSpec], h: f64) -> cda_core::Result<Mesh> {
    let d = &config.domain;
    match d.shape {
        DomainShape::Disk if inclusions.len() == 1 && is_centred_circle(&inclusions[0]) => {
            generate_disk_mesh(d.size, inclusions[0].semi_axes[0], h)
        }
        DomainShape::Disk => {
            let polys = inclusions.iter().map(|s| inclusion_polygon(s, h)).collect::<cda_core::Result<Vec<_>>>()?;
            generate_disk_mesh_with_inclusions(d.size, &polys, h)
        }
        DomainShape::Square => {
            let polys = inclusions.iter().map(|s| inclusion_polygon(s, h)).collect::<cda_core::Result<Vec<_>>>()?;
            generate_square_mesh(d.size, &polys, h)
        }
    }
}

pub fn initial_mesh(config: &RunConfig) -> cda_core::Result<Mesh> {
    domain_mesh(config, &config.initial, config.domain.h)
}

pub fn target_mesh(config: &RunConfig) -> cda_core::Result<Mesh> {
    domain_mesh(config, &config.target.inclusions, config.target.h)
}

pub fn conductivity(config: &RunConfig) -> cda_core::Result<Conductivity> {
    Conductivity::new(config.eit.k_i, config.eit.k_e)
}

pub fn fluxes(config: &RunConfig) -> cda_core::Result<Vec<BoundaryFlux>> {
    let m = config.eit.order;
    Ok(match config.eit.measurements {
        MeasurementKind::Single => vec![BoundaryFlux::Cosine { m }],
        MeasurementKind::Pair => vec![BoundaryFlux::Cosine { m }, BoundaryFlux::Sine { m }],
        MeasurementKind::Family => {
            (1..=config.eit.count).map(|j| boundary_data(DataKind::Family, j)).collect::<cda_core::Result<_>>()?
        }
    })
}

/// Measurement set with Dirichlet data from the configured target.
pub struct Scenario {
    pub setup: EitSetup,
    /// Target mesh and the refinement levels used per measurement when the
    /// data were synthesized.
    pub target: Mesh,
    pub data_levels: Vec<usize>,
}

pub fn scenario(config: &RunConfig) -> cda_core::Result<Scenario> {
    let cond = conductivity(config)?;
    let target = target_mesh(config)?;
    let mut measurements = Vec::new();
    let mut data_levels = Vec::new();
    for flux in fluxes(config)? {
        let trace = match config.target.data {
            DataSource::Analytic => analytic_trace(config, &flux),
            DataSource::Synthesized => {
                let data =
                    synthesize_dirichlet_data(&target, &cond, &flux, config.target.tol_data, config.target.max_levels)?;
                data_levels.push(data.levels);
                data.trace
            }
        };
        measurements.push(Measurement { flux, trace });
    }
    Ok(Scenario { setup: EitSetup::new(cond, measurements)?, target, data_levels })
}

fn analytic_trace(config: &RunConfig, flux: &BoundaryFlux) -> DirichletTrace {
    let e = &config.eit;
    let f = concentric_trace_factor(e.order, config.target.inclusions[0].semi_axes[0], config.domain.size, e.k_i, e.k_e);
    let m = e.order as f64;
    match flux {
        BoundaryFlux::Sine { .. } => DirichletTrace::function(move |p| f * (m * p[1].atan2(p[0])).sin()),
        _ => DirichletTrace::function(move |p| f * (m * p[1].atan2(p[0])).cos()),
    }
}
