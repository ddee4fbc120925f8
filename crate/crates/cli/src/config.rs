//! Experiment configuration: flat `key = value` text in bracketed sections.
//!
//! ```ini
//! [experiment]
//! seed = 1
//!
//! [domain]
//! shape = disk
//! size = 5
//! h = 0.7
//!
//! [initial]
//! shape = circle
//! center = 0 0
//! semi_axes = 2 2
//!
//! [target]
//! shape = circle
//! center = 0 0
//! semi_axes = 4 4
//! data = analytic
//!
//! [eit]
//! k_i = 10
//! k_e = 1
//! measurements = pair
//! order = 1
//!
//! [cda]
//! strategy = two_mesh
//! tol = 1e-6
//! ```
//!
//! `[initial]` and `[target]` may be repeated, one section per inclusion.
//! Unknown sections and keys are rejected.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use cda_core::cda::{CdaConfig, Strategy};
use ini::{Ini, Properties};

use crate::validation::ValidationConfig;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
    #[error("[{section}] {key}: {message}")]
    Value { section: String, key: String, message: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("[{section}] unknown key {key}")]
    UnknownKey { section: String, key: String },
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainShape {
    Disk,
    Square,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub shape: DomainShape,
    /// Radius of the disk or half width of the square.
    pub size: f64,
    pub h: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InclusionShape {
    Circle,
    Ellipse,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InclusionSpec {
    pub shape: InclusionShape,
    pub center: [f64; 2],
    pub semi_axes: [f64; 2],
    pub angle: f64,
    /// Polygon vertex count; 0 picks one from the mesh size.
    pub vertices: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataSource {
    /// Closed-form trace; centred circular target in a disk only.
    Analytic,
    /// Trace of a Neumann solve on a mesh of the target.
    Synthesized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetSpec {
    pub inclusions: Vec<InclusionSpec>,
    pub data: DataSource,
    pub h: f64,
    pub tol_data: f64,
    pub max_levels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeasurementKind {
    /// `cos(M ϑ)`.
    Single,
    /// `cos(M ϑ)` and `sin(M ϑ)`.
    Pair,
    /// The first `count` members of the power family.
    Family,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EitSpec {
    pub k_i: f64,
    pub k_e: f64,
    pub measurements: MeasurementKind,
    pub order: u32,
    pub count: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradcheckSpec {
    pub mesh_sizes: Vec<f64>,
    pub samples: usize,
    pub steps: Vec<f64>,
    pub tolerance: f64,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub domain: DomainSpec,
    pub initial: Vec<InclusionSpec>,
    pub target: TargetSpec,
    pub eit: EitSpec,
    pub cda: CdaConfig,
    pub validation: ValidationConfig,
    pub gradcheck: GradcheckSpec,
    /// Write measured wall times to the CSV; zeros otherwise.
    pub timing: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        check_names(&ini)?;
        let empty = Properties::new();
        let sec = |name: &str| Section { name: name.to_string(), props: ini.section(Some(name)).unwrap_or(&empty) };

        let experiment = sec("experiment");
        let seed = experiment.get("seed", 0u64)?;

        let d = sec("domain");
        let domain = DomainSpec {
            shape: d.choice("shape", DomainShape::Disk, &[("disk", DomainShape::Disk), ("square", DomainShape::Square)])?,
            size: d.get("size", 5.0)?,
            h: d.get("h", 0.7)?,
        };

        let initial = inclusions(&ini, "initial", &[default_circle(2.0)])?;
        let t = sec("target");
        let target = TargetSpec {
            inclusions: inclusions(&ini, "target", &[default_circle(4.0)])?,
            data: t.choice(
                "data",
                DataSource::Synthesized,
                &[("analytic", DataSource::Analytic), ("synthesized", DataSource::Synthesized)],
            )?,
            h: t.get("h", 0.5)?,
            tol_data: t.get("tol_data", 0.05)?,
            max_levels: t.get("max_levels", 5usize)?,
        };

        let e = sec("eit");
        let eit = EitSpec {
            k_i: e.get("k_i", 10.0)?,
            k_e: e.get("k_e", 1.0)?,
            measurements: e.choice(
                "measurements",
                MeasurementKind::Single,
                &[("single", MeasurementKind::Single), ("pair", MeasurementKind::Pair), ("family", MeasurementKind::Family)],
            )?,
            order: e.get("order", 5u32)?,
            count: e.get("count", cda_core::eit::FAMILY_SIZE)?,
        };

        let c = sec("cda");
        let base = CdaConfig::default();
        let cda = CdaConfig {
            tol: c.get("tol", base.tol)?,
            alpha: c.get("alpha", base.alpha)?,
            mu0: c.get("mu0", base.mu0)?,
            backtrack: c.get("backtrack", base.backtrack)?,
            max_backtracks: c.get("max_backtracks", base.max_backtracks)?,
            dorfler: c.get("dorfler", base.dorfler)?,
            strategy: c.choice(
                "strategy",
                base.strategy,
                &[("one_mesh", Strategy::OneMesh), ("two_mesh", Strategy::TwoMesh)],
            )?,
            fine_levels: c.get("fine_levels", base.fine_levels)?,
            max_dofs: c.get("max_dofs", base.max_dofs)?,
            max_iters: c.get("max_iters", base.max_iters)?,
            max_retries: c.get("max_retries", base.max_retries)?,
            smoothing_sweeps: c.get("smoothing_sweeps", base.smoothing_sweeps)?,
        };

        let v = sec("convergence");
        let vd = ValidationConfig::default();
        let validation = ValidationConfig {
            rho_e: v.get("rho_e", vd.rho_e)?,
            rho_i: v.get("rho_i", vd.rho_i)?,
            k_i: v.get("k_i", vd.k_i)?,
            k_e: v.get("k_e", vd.k_e)?,
            h0: v.get("h0", vd.h0)?,
            levels: v.get("levels", vd.levels)?,
        };

        let g = sec("gradcheck");
        let gradcheck = GradcheckSpec {
            mesh_sizes: g.list("mesh_sizes", vec![1.2, 0.9, 0.7])?,
            samples: g.get("samples", 5usize)?,
            steps: g.list("steps", vec![1e-3, 1e-4, 1e-5])?,
            tolerance: g.get("tolerance", 1e-4)?,
        };

        let timing = sec("output").get("timing", true)?;

        let config = RunConfig { seed, domain, initial, target, eit, cda, validation, gradcheck, timing };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        let d = &self.domain;
        if !(d.size > 0.0 && d.h > 0.0 && d.h < d.size) {
            return invalid(format!("domain needs 0 < h < size, got size {} h {}", d.size, d.h));
        }
        for inc in self.initial.iter().chain(&self.target.inclusions) {
            if !(inc.semi_axes[0] > 0.0 && inc.semi_axes[1] > 0.0) {
                return invalid(format!("inclusion semi-axes must be positive, got {:?}", inc.semi_axes));
            }
            if inc.shape == InclusionShape::Circle && inc.semi_axes[0] != inc.semi_axes[1] {
                return invalid(format!("circle with unequal semi-axes {:?}", inc.semi_axes));
            }
        }
        if self.target.data == DataSource::Analytic {
            let centred = self.target.inclusions.len() == 1
                && self.target.inclusions[0].shape == InclusionShape::Circle
                && self.target.inclusions[0].center == [0.0, 0.0];
            if d.shape != DomainShape::Disk || !centred || self.eit.measurements == MeasurementKind::Family {
                return invalid(
                    "analytic data needs a disk, one centred circular target and single or pair measurements".into(),
                );
            }
        }
        if !(self.target.tol_data > 0.0 && self.target.h > 0.0) {
            return invalid("target h and tol_data must be positive".into());
        }
        if !(self.eit.k_i > 0.0 && self.eit.k_e > 0.0) {
            return invalid("conductivities must be positive".into());
        }
        if self.eit.measurements == MeasurementKind::Family
            && !(1..=cda_core::eit::FAMILY_SIZE).contains(&self.eit.count)
        {
            return invalid(format!("family count must lie in 1..={}", cda_core::eit::FAMILY_SIZE));
        }
        let g = &self.gradcheck;
        if g.mesh_sizes.iter().any(|&h| h <= 0.0) || g.steps.iter().any(|&t| t <= 0.0) || g.tolerance <= 0.0 {
            return invalid("gradcheck sizes, steps and tolerance must be positive".into());
        }
        if self.validation.levels == 0 || self.validation.h0 <= 0.0 {
            return invalid("convergence needs at least one level and h0 > 0".into());
        }
        self.cda.validate().map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

fn default_circle(radius: f64) -> InclusionSpec {
    InclusionSpec { shape: InclusionShape::Circle, center: [0.0, 0.0], semi_axes: [radius, radius], angle: 0.0, vertices: 0 }
}

const KEYS: &[(&str, &[&str])] = &[
    ("experiment", &["seed"]),
    ("domain", &["shape", "size", "h"]),
    ("initial", &["shape", "center", "semi_axes", "angle", "vertices"]),
    (
        "target",
        &["shape", "center", "semi_axes", "angle", "vertices", "data", "h", "tol_data", "max_levels"],
    ),
    ("eit", &["k_i", "k_e", "measurements", "order", "count"]),
    (
        "cda",
        &[
            "tol",
            "alpha",
            "mu0",
            "backtrack",
            "max_backtracks",
            "dorfler",
            "strategy",
            "fine_levels",
            "max_dofs",
            "max_iters",
            "max_retries",
            "smoothing_sweeps",
        ],
    ),
    ("convergence", &["rho_e", "rho_i", "k_i", "k_e", "h0", "levels"]),
    ("gradcheck", &["mesh_sizes", "samples", "steps", "tolerance"]),
    ("output", &["timing"]),
];

fn check_names(ini: &Ini) -> Result<()> {
    let known: HashMap<&str, &[&str]> = KEYS.iter().copied().collect();
    for (name, props) in ini.iter() {
        let Some(name) = name else {
            if let Some((key, _)) = props.iter().next() {
                return Err(ConfigError::UnknownKey { section: String::new(), key: key.to_string() });
            }
            continue;
        };
        let keys = known.get(name).ok_or_else(|| ConfigError::UnknownSection(name.to_string()))?;
        if let Some((key, _)) = props.iter().find(|(k, _)| !keys.contains(k)) {
            return Err(ConfigError::UnknownKey { section: name.to_string(), key: key.to_string() });
        }
    }
    Ok(())
}

fn inclusions(ini: &Ini, name: &str, default: &[InclusionSpec]) -> Result<Vec<InclusionSpec>> {
    let specs: Vec<InclusionSpec> = ini
        .section_all(Some(name))
        .map(|props| {
            let s = Section { name: name.to_string(), props };
            let center = s.pair("center", [0.0, 0.0])?;
            let semi_axes = s.pair("semi_axes", [0.0, 0.0])?;
            Ok(InclusionSpec {
                shape: s.choice(
                    "shape",
                    InclusionShape::Circle,
                    &[("circle", InclusionShape::Circle), ("ellipse", InclusionShape::Ellipse)],
                )?,
                center,
                semi_axes,
                angle: s.get("angle", 0.0)?,
                vertices: s.get("vertices", 0usize)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(if specs.is_empty() { default.to_vec() } else { specs })
}

struct Section<'a> {
    name: String,
    props: &'a Properties,
}

impl Section<'_> {
    fn error(&self, key: &str, message: String) -> ConfigError {
        ConfigError::Value { section: self.name.clone(), key: key.to_string(), message }
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        match self.props.get(key) {
            None => Ok(default),
            Some(v) => v.trim().parse().map_err(|e: T::Err| self.error(key, format!("{e} ({v:?})"))),
        }
    }

    fn list(&self, key: &str, default: Vec<f64>) -> Result<Vec<f64>> {
        match self.props.get(key) {
            None => Ok(default),
            Some(v) => v
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<f64>().map_err(|e| self.error(key, format!("{e} ({s:?})"))))
                .collect(),
        }
    }

    fn pair(&self, key: &str, default: [f64; 2]) -> Result<[f64; 2]> {
        let v = self.list(key, default.to_vec())?;
        <[f64; 2]>::try_from(v.as_slice()).map_err(|_| self.error(key, format!("expected two numbers, got {}", v.len())))
    }

    fn choice<T: Copy>(&self, key: &str, default: T, options: &[(&str, T)]) -> Result<T> {
        match self.props.get(key) {
            None => Ok(default),
            Some(v) => options.iter().find(|(n, _)| n.eq_ignore_ascii_case(v.trim())).map(|o| o.1).ok_or_else(|| {
                let names: Vec<&str> = options.iter().map(|o| o.0).collect();
                self.error(key, format!("{v:?} is not one of {}", names.join(", ")))
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        let c = RunConfig::parse("").unwrap();
        assert_eq!(c.domain.shape, DomainShape::Disk);
        assert_eq!(c.initial, vec![default_circle(2.0)]);
        assert_eq!(c.cda.max_retries, 8);
        assert!(c.timing);
    }

    #[test]
    fn repeated_sections_give_several_inclusions() {
        let text = "[domain]\nshape = square\nsize = 4\n[initial]\nsemi_axes = 1 1\ncenter = -2 0\n\
                    [initial]\nshape = ellipse\ncenter = 2, 0\nsemi_axes = 1 0.5\nangle = 0.3\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.initial.len(), 2);
        assert_eq!(c.initial[1].center, [2.0, 0.0]);
        assert_eq!(c.initial[1].shape, InclusionShape::Ellipse);
    }

    #[test]
    fn typos_are_reported() {
        assert!(matches!(RunConfig::parse("[cda]\ntoll = 1\n"), Err(ConfigError::UnknownKey { .. })));
        assert!(matches!(RunConfig::parse("[cdaa]\n"), Err(ConfigError::UnknownSection(_))));
        assert!(matches!(RunConfig::parse("[cda]\nstrategy = three\n"), Err(ConfigError::Value { .. })));
        assert!(matches!(RunConfig::parse("[cda]\nalpha = 1.5\n"), Err(ConfigError::Invalid(_))));
        assert!(matches!(RunConfig::parse("[domain]\nh = x\n"), Err(ConfigError::Value { .. })));
    }

    #[test]
    fn analytic_data_needs_a_centred_circle() {
        let text = "[target]\ndata = analytic\ncenter = 1 0\nsemi_axes = 2 2\n";
        assert!(matches!(RunConfig::parse(text), Err(ConfigError::Invalid(_))));
    }
}
