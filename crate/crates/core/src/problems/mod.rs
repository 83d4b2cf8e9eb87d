//! Benchmark problems in dimensionless form, their reference solutions and
//! the discrete error norms.

mod loading;
mod manufactured;
mod norms;
mod terzaghi;

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use loading::{loading2d_problem, loading_traction, LOADING_C0, LOADING_HEIGHT, LOADING_TIME};
pub use manufactured::manufactured_problem;
pub use norms::{error_norms, l2_norm, observed_order, ErrorAccumulator, ErrorReport, FieldErrors, Snapshot};
pub use terzaghi::{terzaghi_pressure, terzaghi_problem, terzaghi_subsidence, TerzaghiConstants, SERIES_TOLERANCE};

use crate::boundary::{ElasticBoundary, FlowBoundary, ScalarFn, VectorFn};
use crate::error::{Error, Result};
use crate::lattice::Grid;

/// Stress data `(t, x) -> [sigma_11, sigma_12, sigma_22]`.
pub type TensorFn = Arc<dyn Fn(f64, [f64; 2]) -> [f64; 3] + Send + Sync>;

/// Material and coupling coefficients of the dimensionless system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub lam: f64,
    pub mu: f64,
    pub kappa: f64,
    pub alpha: f64,
    /// Storage coefficient of a dimensional problem, `None` when the problem
    /// is posed directly in dimensionless form.
    pub c0: Option<f64>,
}

impl PhysicalParams {
    /// Lame coefficients `lambda = E nu / (1 - nu^2)`, `mu = E / (2 (1 + nu))`.
    pub fn lame_from_young(e: f64, nu: f64) -> (f64, f64) {
        (e * nu / (1.0 - nu * nu), e / (2.0 * (1.0 + nu)))
    }

    /// Poisson ratio recovered from the Lame pair.
    pub fn poisson_ratio(&self) -> f64 {
        self.lam / (self.lam + 2.0 * self.mu)
    }

    /// Young's modulus recovered from the Lame pair.
    pub fn young_modulus(&self) -> f64 {
        2.0 * self.mu * (1.0 + self.poisson_ratio())
    }
}

/// Rule fixing the time step from the lattice width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum DtRule {
    /// `dt = dx^2`.
    Viscous,
    /// `dt = c dx^2`.
    Scaled(f64),
    /// `dt = t_f / n`.
    Steps(usize),
}

impl DtRule {
    pub fn time_step(&self, dx: f64, t_final: f64) -> Result<f64> {
        let dt = match *self {
            DtRule::Viscous => dx * dx,
            DtRule::Scaled(c) if c > 0.0 && c.is_finite() => c * dx * dx,
            DtRule::Steps(n) if n > 0 => t_final / n as f64,
            other => return Err(Error::InvalidArgument(format!("invalid time-step rule {other:?}"))),
        };
        Ok(dt)
    }
}

impl fmt::Display for DtRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DtRule::Viscous => write!(f, "viscous"),
            DtRule::Scaled(c) => write!(f, "scaled:{c}"),
            DtRule::Steps(n) => write!(f, "nt:{n}"),
        }
    }
}

impl From<DtRule> for String {
    fn from(rule: DtRule) -> String {
        rule.to_string()
    }
}

impl TryFrom<String> for DtRule {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl std::str::FromStr for DtRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse time-step rule `{s}`"));
        if s == "viscous" {
            return Ok(DtRule::Viscous);
        }
        if let Some(c) = s.strip_prefix("scaled:") {
            return c.parse().map(DtRule::Scaled).map_err(|_| bad());
        }
        if let Some(n) = s.strip_prefix("nt:") {
            return n.parse().map(DtRule::Steps).map_err(|_| bad());
        }
        Err(bad())
    }
}

/// Shape of the computational domain in lattice cells for a given `nx`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainShape {
    /// `(0,1)^2` with `nx` cells per side.
    UnitSquare,
    /// `(0, width_cells dx) x (0, 1)` with `nx` cells in height.
    Column { width_cells: usize },
}

impl DomainShape {
    pub fn cells(&self, nx: usize) -> (usize, usize) {
        match *self {
            DomainShape::UnitSquare => (nx, nx),
            DomainShape::Column { width_cells } => (width_cells, nx),
        }
    }
}

/// Multipliers turning dimensionless output into the units of the original
/// problem statement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub length: f64,
    pub time: f64,
    pub pressure: f64,
    pub displacement: f64,
    pub stress: f64,
}

impl Scaling {
    pub const IDENTITY: Scaling = Scaling {
        length: 1.0,
        time: 1.0,
        pressure: 1.0,
        displacement: 1.0,
        stress: 1.0,
    };
}

impl Default for Scaling {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Known reference solution pieces of a problem.
#[derive(Clone, Default)]
pub struct AnalyticalFields {
    pub pressure: Option<ScalarFn>,
    pub displacement: Option<VectorFn>,
    pub stress: Option<TensorFn>,
    /// Surface subsidence `S(t)`.
    pub subsidence: Option<Arc<dyn Fn(f64) -> f64 + Send + Sync>>,
    pub terzaghi: Option<TerzaghiConstants>,
    /// Errors are accumulated from this time level on.
    pub first_error_step: usize,
}

impl fmt::Debug for AnalyticalFields {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticalFields")
            .field("pressure", &self.pressure.is_some())
            .field("displacement", &self.displacement.is_some())
            .field("stress", &self.stress.is_some())
            .field("subsidence", &self.subsidence.is_some())
            .field("terzaghi", &self.terzaghi)
            .field("first_error_step", &self.first_error_step)
            .finish()
    }
}

/// Everything the coupled solver needs to know about a problem, in
/// dimensionless form.
#[derive(Clone)]
pub struct ProblemDefinition {
    pub name: String,
    pub params: PhysicalParams,
    pub shape: DomainShape,
    pub t_final: f64,
    pub dt_rule: DtRule,
    pub flow_boundary: FlowBoundary,
    pub elastic_boundary: ElasticBoundary,
    /// Solid body force `f(t, x)`.
    pub force: Option<VectorFn>,
    /// Fluid source `s(t, x)`.
    pub source: Option<ScalarFn>,
    /// Divergence of the fluid body force, `div g(t, x)`.
    pub fluid_force_divergence: Option<ScalarFn>,
    pub exact: AnalyticalFields,
    pub scaling: Scaling,
}

impl fmt::Debug for ProblemDefinition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDefinition")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("shape", &self.shape)
            .field("t_final", &self.t_final)
            .field("dt_rule", &self.dt_rule)
            .field("exact", &self.exact)
            .finish_non_exhaustive()
    }
}

impl ProblemDefinition {
    /// Grid with `nx` cells per unit length under the given (or default)
    /// time-step rule.
    pub fn grid(&self, nx: usize, dt_rule: Option<DtRule>) -> Result<Grid> {
        if nx == 0 {
            return Err(Error::InvalidArgument("nx must be positive".into()));
        }
        let (cx, cy) = self.shape.cells(nx);
        let dx = 1.0 / nx as f64;
        let dt = dt_rule.unwrap_or(self.dt_rule).time_step(dx, self.t_final)?;
        Grid::new(cx, cy, dx, dt)
    }

    /// Number of time steps reaching `t_final`.
    pub fn steps(&self, grid: &Grid) -> usize {
        (self.t_final / grid.dt).round().max(1.0) as usize
    }

    /// A problem with no data at all on the periodic unit square.
    pub fn zero(params: PhysicalParams) -> Self {
        use crate::boundary::{BoundarySpec, ElasticCondition, FlowCondition};
        Self {
            name: "zero".into(),
            params,
            shape: DomainShape::UnitSquare,
            t_final: 1.0,
            dt_rule: DtRule::Viscous,
            flow_boundary: BoundarySpec::uniform(FlowCondition::Periodic),
            elastic_boundary: BoundarySpec::uniform(ElasticCondition::Periodic),
            force: None,
            source: None,
            fluid_force_divergence: None,
            exact: AnalyticalFields::default(),
            scaling: Scaling::IDENTITY,
        }
    }
}
