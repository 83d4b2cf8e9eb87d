//! Run configuration, single runs and parameter sweeps.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::coupling::{CouplingConfig, Simulation};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::field::{ScalarField, StressField, VectorField};
use crate::lattice::Grid;
use crate::problems::{
    loading2d_problem, manufactured_problem, observed_order, terzaghi_problem, DtRule, ErrorAccumulator,
    FieldErrors, ProblemDefinition, Scaling, Snapshot,
};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    #[default]
    Manufactured,
    Terzaghi,
    Loading2d,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 3] = [ProblemKind::Manufactured, ProblemKind::Terzaghi, ProblemKind::Loading2d];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Manufactured => "manufactured",
            ProblemKind::Terzaghi => "terzaghi",
            ProblemKind::Loading2d => "loading2d",
        }
    }

    fn default_alpha(self) -> f64 {
        match self {
            ProblemKind::Manufactured => 0.8,
            ProblemKind::Terzaghi | ProblemKind::Loading2d => 1.0,
        }
    }
}

impl fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ProblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProblemKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown problem `{s}`")))
    }
}

/// Pseudo-steps per time step, possibly tied to the resolution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum PseudoSteps {
    /// `N`.
    Absolute(usize),
    /// `xC`: `C nx`.
    PerCell(f64),
    /// `q:C`: `C nx^2`.
    Quadratic(f64),
}

impl PseudoSteps {
    pub fn resolve(&self, nx: usize) -> Result<usize> {
        let n = match *self {
            PseudoSteps::Absolute(n) => n as f64,
            PseudoSteps::PerCell(c) => (c * nx as f64).round(),
            PseudoSteps::Quadratic(c) => (c * (nx * nx) as f64).round(),
        };
        if !(n >= 1.0) {
            return Err(Error::Config(format!("pseudo-step rule `{self}` gives {n} steps at nx = {nx}")));
        }
        Ok(n as usize)
    }
}

impl Default for PseudoSteps {
    fn default() -> Self {
        PseudoSteps::PerCell(1.0)
    }
}

impl fmt::Display for PseudoSteps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PseudoSteps::Absolute(n) => write!(f, "{n}"),
            PseudoSteps::PerCell(c) => write!(f, "x{c}"),
            PseudoSteps::Quadratic(c) => write!(f, "q:{c}"),
        }
    }
}

impl FromStr for PseudoSteps {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse pseudo-step rule `{s}` (expected N, xC or q:C)"));
        let positive = |c: f64| if c > 0.0 && c.is_finite() { Ok(c) } else { Err(bad()) };
        if let Some(c) = s.strip_prefix('x') {
            return Ok(PseudoSteps::PerCell(positive(c.parse().map_err(|_| bad())?)?));
        }
        if let Some(c) = s.strip_prefix("q:") {
            return Ok(PseudoSteps::Quadratic(positive(c.parse().map_err(|_| bad())?)?));
        }
        s.parse().map(PseudoSteps::Absolute).map_err(|_| bad())
    }
}

impl From<PseudoSteps> for String {
    fn from(p: PseudoSteps) -> String {
        p.to_string()
    }
}

impl TryFrom<String> for PseudoSteps {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Vtk,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn vtk(self) -> bool {
        matches!(self, OutputFormat::Vtk | OutputFormat::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "vtk" => Ok(OutputFormat::Vtk),
            "both" => Ok(OutputFormat::Both),
            _ => Err(Error::Config(format!("unknown output format `{s}`"))),
        }
    }
}

/// Settings of one run. Unset optional values take the problem defaults.
///
/// The TOML form uses the field names below, for example
///
/// ```toml
/// problem = "terzaghi"
/// alpha = 1.0
/// r = 0.5
/// nx = 50
/// ne = "x3"
/// dt_rule = "scaled:0.25"
/// snapshots = [0.001, 1.0]
/// format = "both"
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub alpha: Option<f64>,
    pub r: f64,
    pub nx: usize,
    pub ne: PseudoSteps,
    pub dt_rule: Option<DtRule>,
    pub tf: Option<f64>,
    pub out: Option<PathBuf>,
    /// Dimensionless output times.
    pub snapshots: Vec<f64>,
    pub format: OutputFormat,
    pub parallelism: Parallelism,
    /// Time steps between progress messages; defaults to a tenth of the run.
    pub progress_every: Option<usize>,
    /// Width of the Terzaghi column in cells.
    pub column_width: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Manufactured,
            alpha: None,
            r: 0.5,
            nx: 32,
            ne: PseudoSteps::default(),
            dt_rule: None,
            tf: None,
            out: None,
            snapshots: Vec::new(),
            format: OutputFormat::Csv,
            parallelism: Parallelism::Auto,
            progress_every: None,
            column_width: 4,
        }
    }
}

/// A configuration with every default filled in.
#[derive(Clone, Debug)]
pub struct ResolvedRun {
    pub config: RunConfig,
    pub problem: ProblemDefinition,
    pub grid: Grid,
    pub n_t: usize,
    pub n_e: usize,
    /// Time levels at which fields are kept.
    pub snapshot_steps: Vec<usize>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolve(&self) -> Result<ResolvedRun> {
        if self.nx < 2 {
            return Err(Error::Config(format!("nx must be at least 2, got {}", self.nx)));
        }
        let alpha = self.alpha.unwrap_or(self.problem.default_alpha());
        let mut problem = match self.problem {
            ProblemKind::Manufactured => manufactured_problem(alpha)?,
            ProblemKind::Terzaghi => terzaghi_problem(alpha, self.column_width)?,
            ProblemKind::Loading2d => loading2d_problem()?,
        };
        problem.params.alpha = alpha;
        if let Some(tf) = self.tf {
            if !(tf > 0.0 && tf.is_finite()) {
                return Err(Error::Config(format!("final time must be positive, got {tf}")));
            }
            problem.t_final = tf;
        }
        let dt_rule = self.dt_rule.unwrap_or(problem.dt_rule);
        let grid = problem.grid(self.nx, Some(dt_rule))?;
        let n_t = problem.steps(&grid);
        let n_e = self.ne.resolve(self.nx)?;
        CouplingConfig { r: self.r, n_e, n_t, alpha }
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;
        let mut snapshot_steps = Vec::new();
        for &ts in &self.snapshots {
            if !(0.0..=problem.t_final * (1.0 + 1e-12)).contains(&ts) {
                return Err(Error::Config(format!(
                    "snapshot time {ts} outside [0, {}]",
                    problem.t_final
                )));
            }
            snapshot_steps.push(((ts / grid.dt).round() as usize).min(n_t));
        }
        snapshot_steps.sort_unstable();
        snapshot_steps.dedup();
        let config = RunConfig {
            alpha: Some(alpha),
            dt_rule: Some(dt_rule),
            tf: Some(problem.t_final),
            ..self.clone()
        };
        Ok(ResolvedRun { config, problem, grid, n_t, n_e, snapshot_steps })
    }
}

/// Scalar log of one time level. Errors are absolute spatial `L2` errors.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub p_error: Option<f64>,
    pub eta_error: Option<f64>,
    pub sigma_error: Option<f64>,
    pub subsidence: f64,
    pub subsidence_exact: Option<f64>,
    pub max_p: f64,
    pub max_eta: f64,
    pub max_sigma: f64,
}

/// Owned field values at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSnapshot {
    pub step: usize,
    pub t: f64,
    pub pressure: ScalarField,
    pub eta: VectorField,
    pub sigma: StressField,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorTotals {
    pub p: Option<FieldErrors>,
    pub eta: Option<FieldErrors>,
    pub sigma: Option<FieldErrors>,
    pub subsidence: Option<FieldErrors>,
}

impl ErrorTotals {
    fn all_finite(&self) -> bool {
        [self.p, self.eta, self.sigma, self.subsidence]
            .iter()
            .flatten()
            .all(|e| e.absolute.is_finite() && e.relative.map_or(true, f64::is_finite))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    /// The configuration with all defaults resolved.
    pub config: RunConfig,
    pub cells: [usize; 2],
    pub dx: f64,
    pub dt: f64,
    pub n_t: usize,
    pub n_e: usize,
    pub threaded: bool,
    pub steps_completed: usize,
    pub diverged: bool,
    pub divergence: Option<String>,
    /// Space-time errors over the completed steps.
    pub errors: ErrorTotals,
    pub final_subsidence: f64,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub summary: RunSummary,
    pub steps: Vec<StepRecord>,
    pub snapshots: Vec<FieldSnapshot>,
    /// Fields at the last completed time level.
    pub final_fields: Option<FieldSnapshot>,
    pub grid: Grid,
    pub scaling: Scaling,
}

fn vector_max(v: &VectorField) -> f64 {
    v.x.data.iter().zip(&v.y.data).fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
}

fn stress_max(s: &StressField) -> f64 {
    s.components().iter().fold(0.0, |m, c| m.max(c.max_abs()))
}

fn owned(step: usize, sim: &Simulation) -> FieldSnapshot {
    FieldSnapshot {
        step,
        t: sim.state.t,
        pressure: sim.state.pressure.clone(),
        eta: sim.state.eta.clone(),
        sigma: sim.state.sigma.clone(),
    }
}

/// Executes the coupled solver. Divergence is reported in the summary, not
/// as an error.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    run_with(config, |_, _| {})
}

/// As [`run`], calling `observer` after every elasticity stage.
pub fn run_with(config: &RunConfig, mut observer: impl FnMut(&Simulation, &StepRecord)) -> Result<RunOutput> {
    let resolved = config.resolve()?;
    let ResolvedRun { config, problem, grid, n_t, n_e, snapshot_steps } = resolved;
    let exact = problem.exact.clone();
    let scaling = problem.scaling;
    let coupling = CouplingConfig { r: config.r, n_e, n_t, alpha: problem.params.alpha };
    let started = Instant::now();
    let mut sim = Simulation::new(problem, grid, coupling, config.parallelism)?;
    log::info!(
        "{}: {}x{} cells, dt = {:e}, {} steps of {} pseudo-steps",
        config.problem,
        grid.nx,
        grid.ny,
        grid.dt,
        n_t,
        n_e
    );
    let stride = config.progress_every.unwrap_or((n_t / 10).max(1)).max(1);
    let mut acc = ErrorAccumulator::new(&exact, grid);
    let mut steps = Vec::with_capacity(n_t + 1);
    let mut snapshots = Vec::new();
    let mut final_fields = None;
    let mut divergence = None;

    for k in 0..=n_t {
        if let Err(e) = sim.elastic_stage() {
            match e {
                Error::Divergence { .. } => {
                    log::warn!("{e}");
                    divergence = Some(e.to_string());
                    break;
                }
                other => return Err(other),
            }
        }
        let s = &sim.state;
        let errs = acc.push(&Snapshot { step: k, t: s.t, pressure: &s.pressure, eta: &s.eta, sigma: &s.sigma });
        let record = StepRecord {
            step: k,
            t: s.t,
            p_error: errs.p,
            eta_error: errs.eta,
            sigma_error: errs.sigma,
            subsidence: errs.subsidence,
            subsidence_exact: errs.subsidence_exact,
            max_p: s.pressure.max_abs(),
            max_eta: vector_max(&s.eta),
            max_sigma: stress_max(&s.sigma),
        };
        observer(&sim, &record);
        steps.push(record);
        if snapshot_steps.binary_search(&k).is_ok() {
            snapshots.push(owned(k, &sim));
        }
        if k == n_t {
            final_fields = Some(owned(k, &sim));
            break;
        }
        if k > 0 && k % stride == 0 {
            log::info!("step {k}/{n_t}, t = {:.6}, max |p| = {:.6e}", s.t, record.max_p);
        }
        sim.flow_update()?;
    }
    if final_fields.is_none() {
        final_fields = snapshots.last().cloned();
    }

    let report = acc.finish();
    let errors = ErrorTotals { p: report.p, eta: report.eta, sigma: report.sigma, subsidence: report.subsidence };
    if divergence.is_none() && !errors.all_finite() {
        divergence = Some("error norms are not finite".into());
    }
    let summary = RunSummary {
        cells: [grid.nx, grid.ny],
        dx: grid.dx,
        dt: grid.dt,
        n_t,
        n_e,
        threaded: sim.is_threaded(),
        steps_completed: steps.len().saturating_sub(1),
        diverged: divergence.is_some(),
        divergence,
        errors,
        final_subsidence: steps.last().map_or(0.0, |s| s.subsidence),
        wall_time_s: started.elapsed().as_secs_f64(),
        config,
    };
    Ok(RunOutput { summary, steps, snapshots, final_fields, grid, scaling })
}

/// Values swept over; empty axes keep the base configuration value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepAxes {
    pub nx: Vec<usize>,
    pub ne: Vec<PseudoSteps>,
    pub r: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub nx: usize,
    pub ne: String,
    pub n_e: usize,
    pub r: f64,
    pub diverged: bool,
    pub e_p: Option<f64>,
    pub e_eta: Option<f64>,
    pub e_sigma: Option<f64>,
    /// Observed orders against the previous `nx` of the same `(ne, r)`.
    pub order_p: Option<f64>,
    pub order_eta: Option<f64>,
    pub order_sigma: Option<f64>,
}

fn order_between(prev: Option<f64>, cur: Option<f64>, nx_prev: usize, nx: usize) -> Option<f64> {
    let (a, b) = (prev?, cur?);
    let o = if nx == 2 * nx_prev {
        observed_order(a, b)
    } else {
        (a / b).ln() / (nx as f64 / nx_prev as f64).ln()
    };
    o.is_finite().then_some(o)
}

/// Relative errors over the grid of swept values. A run that diverges is
/// marked in its row and the sweep carries on.
pub fn sweep(base: &RunConfig, axes: &SweepAxes) -> Result<Vec<SweepRow>> {
    if axes.nx.is_empty() && axes.ne.is_empty() && axes.r.is_empty() {
        return Err(Error::Config("sweep needs at least one axis".into()));
    }
    if axes.nx.len() == 1 {
        return Err(Error::Config("need at least two nx values for observed orders".into()));
    }
    if axes.ne.len() == 1 || axes.r.len() == 1 {
        return Err(Error::Config("every swept axis needs at least two values".into()));
    }
    let nxs = if axes.nx.is_empty() { vec![base.nx] } else { axes.nx.clone() };
    let nes = if axes.ne.is_empty() { vec![base.ne] } else { axes.ne.clone() };
    let rs = if axes.r.is_empty() { vec![base.r] } else { axes.r.clone() };

    let mut rows: Vec<SweepRow> = Vec::new();
    for &r in &rs {
        for &ne in &nes {
            for (idx, &nx) in nxs.iter().enumerate() {
                let cfg = RunConfig { nx, ne, r, out: None, snapshots: Vec::new(), ..base.clone() };
                let out = run(&cfg)?;
                let s = &out.summary;
                let rel = |e: Option<FieldErrors>| if s.diverged { None } else { e.and_then(|e| e.relative) };
                let mut row = SweepRow {
                    nx,
                    ne: ne.to_string(),
                    n_e: s.n_e,
                    r,
                    diverged: s.diverged,
                    e_p: rel(s.errors.p),
                    e_eta: rel(s.errors.eta),
                    e_sigma: rel(s.errors.sigma),
                    order_p: None,
                    order_eta: None,
                    order_sigma: None,
                };
                if idx > 0 {
                    let prev = rows.last().expect("previous row of the same series");
                    let nx_prev = nxs[idx - 1];
                    row.order_p = order_between(prev.e_p, row.e_p, nx_prev, nx);
                    row.order_eta = order_between(prev.e_eta, row.e_eta, nx_prev, nx);
                    row.order_sigma = order_between(prev.e_sigma, row.e_sigma, nx_prev, nx);
                }
                log::info!("sweep nx = {nx}, ne = {ne}, r = {r}: diverged = {}", row.diverged);
                rows.push(row);
            }
        }
    }
    Ok(rows)
}
