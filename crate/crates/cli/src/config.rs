use std::path::{Path, PathBuf};

use capax_core::geometry::{load_mesh, make_ellipsoid_at, make_icosphere, Surface};
use capax_core::kernels::DEFAULT_MAX_ORDER;
use capax_core::{MultiIndex, TaylorPoly};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const DEFAULT_QUAD_ORDER: usize = 12;
pub const DEFAULT_K_MAX: usize = capax_core::series::DEFAULT_K_MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Newtonian,
    Direct,
    Series,
    Compare,
    Eigen,
    Converge,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Newtonian => "newtonian",
            Mode::Direct => "direct",
            Mode::Series => "series",
            Mode::Compare => "compare",
            Mode::Eigen => "eigen",
            Mode::Converge => "converge",
        }
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum GeometrySpec {
    Sphere {
        #[serde(default = "unit")]
        radius: f64,
        #[serde(default)]
        center: [f64; 3],
        order: Option<usize>,
    },
    Ellipsoid {
        axes: [f64; 3],
        #[serde(default)]
        center: [f64; 3],
        order: Option<usize>,
    },
    Icosphere {
        #[serde(default = "unit")]
        radius: f64,
        level: usize,
    },
    Mesh {
        path: PathBuf,
    },
}

impl Default for GeometrySpec {
    fn default() -> Self {
        GeometrySpec::Sphere { radius: 1.0, center: [0.0; 3], order: None }
    }
}

impl GeometrySpec {
    /// Builds the surface; `quad_order` is the spectral degree when none is given,
    /// `base` resolves relative mesh paths.
    pub fn build(&self, quad_order: usize, base: &Path) -> Result<Surface, CliError> {
        let s = match self {
            GeometrySpec::Sphere { radius, center, order } => {
                make_ellipsoid_at(*center, [*radius; 3], order.unwrap_or(quad_order))
            }
            GeometrySpec::Ellipsoid { axes, center, order } => make_ellipsoid_at(*center, *axes, order.unwrap_or(quad_order)),
            GeometrySpec::Icosphere { radius, level } => make_icosphere(*radius, *level),
            GeometrySpec::Mesh { path } => load_mesh(base.join(path)),
        };
        s.map_err(CliError::from_core)
    }

    /// Same shape at refinement `level` (spectral degree or icosphere level).
    pub fn at_level(&self, level: usize) -> Result<GeometrySpec, CliError> {
        Ok(match self {
            GeometrySpec::Sphere { radius, center, .. } => GeometrySpec::Sphere { radius: *radius, center: *center, order: Some(level) },
            GeometrySpec::Ellipsoid { axes, center, .. } => GeometrySpec::Ellipsoid { axes: *axes, center: *center, order: Some(level) },
            GeometrySpec::Icosphere { radius, .. } => GeometrySpec::Icosphere { radius: *radius, level },
            GeometrySpec::Mesh { .. } => return Err(CliError::Config("mesh geometries have no refinement levels".into())),
        })
    }

    /// Radius when this is a sphere centered at the origin.
    pub fn centered_sphere_radius(&self) -> Option<f64> {
        match self {
            GeometrySpec::Sphere { radius, center, .. } if *center == [0.0; 3] => Some(*radius),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub beta: [u32; 3],
    pub coeff: f64,
}

/// Taylor coefficients `D^beta u(0) / beta!` at the hole center.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    #[serde(default)]
    pub label: Option<String>,
    /// Shorthand for a constant term.
    #[serde(default)]
    pub constant: Option<f64>,
    #[serde(default)]
    pub terms: Vec<Term>,
}

impl FunctionSpec {
    pub fn constant(c: f64) -> Self {
        FunctionSpec { label: None, constant: Some(c), terms: Vec::new() }
    }

    pub fn to_poly(&self, field: &str) -> Result<TaylorPoly, CliError> {
        let mut p = TaylorPoly::zero(3);
        if let Some(c) = self.constant {
            p.add_term(MultiIndex::zero(3), c);
        }
        for t in &self.terms {
            let beta = MultiIndex::new(t.beta.to_vec());
            if beta.order() > DEFAULT_MAX_ORDER {
                return Err(CliError::Config(format!(
                    "{field}: term {:?} has degree {} above the maximum {DEFAULT_MAX_ORDER}",
                    t.beta,
                    beta.order()
                )));
            }
            if !t.coeff.is_finite() {
                return Err(CliError::Config(format!("{field}: coefficient of {:?} is not finite", t.beta)));
            }
            p.add_term(beta, t.coeff);
        }
        Ok(p)
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.beta == [0, 0, 0] || t.coeff == 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    /// Geometric spacing when true, linear otherwise.
    #[serde(default)]
    pub geometric: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scenario", rename_all = "snake_case", deny_unknown_fields)]
pub enum EigenSpec {
    /// Unit ball, first eigenvalue `pi^2`.
    BallFirst {
        #[serde(default = "default_taylor_degree")]
        taylor_degree: usize,
    },
    /// Unit ball, triple eigenvalue with modes `j_1(k r) x_i / r`.
    BallSecond {
        #[serde(default = "default_taylor_degree")]
        taylor_degree: usize,
    },
    Custom {
        eigenvalue: f64,
        basis: Vec<FunctionSpec>,
        #[serde(default)]
        gram: Option<Vec<Vec<f64>>>,
    },
}

fn default_taylor_degree() -> usize {
    6
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Quantity {
    Newtonian,
    Area,
    Capacity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeSpec {
    pub quantity: Quantity,
    /// Spectral degrees or icosphere levels, coarse to fine.
    pub levels: Vec<usize>,
    /// Geometry refined for `newtonian` and `area`; defaults to the hole.
    #[serde(default)]
    pub geometry: Option<GeometrySpec>,
    /// Order used for the first Richardson step, before one can be observed.
    #[serde(default)]
    pub declared_order: Option<f64>,
    /// Known exact value, for the error column.
    #[serde(default)]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub mode: Option<Mode>,
    #[serde(default)]
    pub outer: Option<GeometrySpec>,
    #[serde(default)]
    pub inner: Option<GeometrySpec>,
    #[serde(default)]
    pub u_a: Option<FunctionSpec>,
    #[serde(default)]
    pub u_b: Option<FunctionSpec>,
    #[serde(default)]
    pub epsilons: Vec<f64>,
    #[serde(default)]
    pub epsilon_range: Option<EpsilonRange>,
    #[serde(default)]
    pub k_max: Option<usize>,
    #[serde(default)]
    pub quad_order: Option<usize>,
    #[serde(default)]
    pub polar_theta: Option<usize>,
    #[serde(default)]
    pub polar_phi: Option<usize>,
    #[serde(default)]
    pub eigen: Option<EigenSpec>,
    #[serde(default)]
    pub converge: Option<ConvergeSpec>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Agreement thresholds used to flag rows in `compare` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { relative: 1e-4, absolute: 5e-6 }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.message().trim_end())))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn k_max(&self) -> usize {
        self.k_max.unwrap_or(DEFAULT_K_MAX)
    }

    pub fn quad_order(&self) -> usize {
        self.quad_order.unwrap_or(DEFAULT_QUAD_ORDER)
    }

    pub fn outer(&self) -> GeometrySpec {
        self.outer.clone().unwrap_or_default()
    }

    pub fn inner(&self) -> GeometrySpec {
        self.inner.clone().unwrap_or_default()
    }

    pub fn u_a(&self) -> FunctionSpec {
        self.u_a.clone().unwrap_or_else(|| FunctionSpec::constant(1.0))
    }

    /// Defaults to `u_a`.
    pub fn u_b(&self) -> FunctionSpec {
        self.u_b.clone().unwrap_or_else(|| self.u_a())
    }

    /// Explicit list followed by the range, in the given order.
    pub fn epsilon_list(&self) -> Result<Vec<f64>, CliError> {
        let mut out = self.epsilons.clone();
        if let Some(r) = &self.epsilon_range {
            if r.count == 0 {
                return Err(CliError::Config("epsilon_range.count must be positive".into()));
            }
            if r.geometric && (r.start <= 0.0 || r.stop <= 0.0) {
                return Err(CliError::Config("epsilon_range: geometric spacing needs positive end points".into()));
            }
            for i in 0..r.count {
                let t = if r.count == 1 { 0.0 } else { i as f64 / (r.count - 1) as f64 };
                out.push(if r.geometric { r.start * (r.stop / r.start).powf(t) } else { r.start + t * (r.stop - r.start) });
            }
        }
        if let Some(e) = out.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(CliError::Config(format!("epsilons: {e} is not a positive number")));
        }
        Ok(out)
    }

    /// Checks field-level constraints that do not need geometry.
    pub fn validate(&self, mode: Mode) -> Result<(), CliError> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(CliError::Config(format!("mode: config says '{}' but the subcommand is '{}'", m.name(), mode.name())));
            }
        }
        if self.k_max() + 1 > DEFAULT_MAX_ORDER {
            return Err(CliError::Config(format!("k_max: {} exceeds the supported maximum {}", self.k_max(), DEFAULT_MAX_ORDER - 1)));
        }
        if self.quad_order() < 2 {
            return Err(CliError::Config("quad_order: must be at least 2".into()));
        }
        self.u_a().to_poly("u_a")?;
        self.u_b().to_poly("u_b")?;
        let eps = self.epsilon_list()?;
        match mode {
            Mode::Direct | Mode::Compare if eps.is_empty() => {
                Err(CliError::Config("epsilons: at least one value is required".into()))
            }
            Mode::Eigen if self.eigen.is_none() => Err(CliError::Config("eigen: section is required for eigen mode".into())),
            Mode::Converge => match &self.converge {
                None => Err(CliError::Config("converge: section is required for converge mode".into())),
                Some(c) if c.levels.len() < 2 => {
                    Err(CliError::Config(format!("converge.levels: need at least 2 refinement levels, got {}", c.levels.len())))
                }
                Some(c) if c.quantity == Quantity::Capacity && eps.is_empty() => {
                    Err(CliError::Config("epsilons: capacity convergence needs one epsilon".into()))
                }
                _ => Ok(()),
            },
            _ => Ok(()),
        }
    }
}
