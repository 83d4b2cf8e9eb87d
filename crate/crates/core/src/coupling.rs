//! One physical time step of the coupled scheme: `N_E` elasticity
//! pseudo-steps driven by the current pressure, then one pressure update
//! driven by the volumetric strain rate.
//!
//! Divergences of the displacement are kept in lattice units, `eps` times
//! the physical divergence; the coupling source
//! `-(alpha/eps) d/dt div` therefore acts on physical quantities.

use serde::{Deserialize, Serialize};

use crate::boundary::{apply_links, elastic_links, Edge, FlowBoundary, FlowCondition};
use crate::elasticity::{collide_cell, elastic_init, ElasticParams, ElasticState, Moments};
use crate::error::{Error, Result};
use crate::exec::{for_each_row, plane_rows, Parallelism};
use crate::field::{ScalarField, StressField, VectorField};
use crate::flow::{self, flow_init, flow_relaxation_rate, FlowState};
use crate::lattice::{stream_into, DistributionField, Grid, VelocitySet};
use crate::problems::ProblemDefinition;

/// Fields whose magnitude exceeds this are reported as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    /// Weight of the semi-implicit part of the volumetric source.
    pub r: f64,
    /// Pseudo-steps per time step.
    pub n_e: usize,
    pub n_t: usize,
    /// Biot-Willis coefficient. Zero switches the coupling off.
    pub alpha: f64,
}

impl CouplingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.r) {
            return Err(Error::InvalidArgument(format!("r must lie in [0, 1], got {}", self.r)));
        }
        if self.n_e == 0 {
            return Err(Error::InvalidArgument("need at least one pseudo-step per time step".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidArgument(format!(
                "Biot-Willis coefficient must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Everything that evolves in time.
#[derive(Clone, Debug)]
pub struct CoupledState {
    pub flow: FlowState,
    pub elastic: ElasticState,
    /// Time of the latest elasticity stage.
    pub t: f64,
    /// Index of the current time level.
    pub step: usize,
    /// `s - kappa div g - (alpha/eps)(1-r) d_t div(t - dt)`, frozen per step.
    pub explicit_source_part: ScalarField,
    /// Full effective source used by the latest pressure update.
    pub source: ScalarField,
    pub pressure: ScalarField,
    pub eta: VectorField,
    pub sigma: StressField,
}

/// How the padded pressure is completed beyond one edge.
#[derive(Clone, Debug)]
enum Ghost {
    Periodic,
    /// Wall values at the face points, one per node along the edge.
    Dirichlet(Vec<f64>),
    Even,
}

fn ghost_rules(spec: &FlowBoundary, t: f64, grid: &Grid) -> [Ghost; 4] {
    Edge::ALL.map(|edge| match spec.edge(edge) {
        FlowCondition::Periodic => Ghost::Periodic,
        FlowCondition::NoFlow => Ghost::Even,
        FlowCondition::DirichletPressure(p_d) => {
            let n = edge.normal();
            Ghost::Dirichlet(
                edge.nodes(grid)
                    .into_iter()
                    .map(|(i, j)| {
                        let [x, y] = grid.position(i, j);
                        p_d(t, [x + 0.5 * grid.dx * n[0] as f64, y + 0.5 * grid.dx * n[1] as f64])
                    })
                    .collect(),
            )
        }
    })
}

/// Copies `p` into the `(nx+2) x (ny+2)` array `pad` and fills the ghost
/// ring: first the bottom and top rows, then the left and right columns over
/// all padded rows.
fn fill_padded(p: &[f64], nx: usize, ny: usize, rules: &[Ghost; 4], pad: &mut [f64]) {
    let w = nx + 2;
    for j in 0..ny {
        pad[(j + 1) * w + 1..(j + 1) * w + 1 + nx].copy_from_slice(&p[j * nx..(j + 1) * nx]);
    }
    // Bottom (row 0) and top (row ny + 1).
    for (rule, ghost, inner, across) in [(&rules[2], 0, 1, ny), (&rules[3], ny + 1, ny, 1)] {
        for i in 1..=nx {
            pad[ghost * w + i] = match rule {
                Ghost::Periodic => pad[across * w + i],
                Ghost::Even => pad[inner * w + i],
                Ghost::Dirichlet(v) => 2.0 * v[i - 1] - pad[inner * w + i],
            };
        }
    }
    // Left (column 0) and right (column nx + 1).
    for (rule, ghost, inner, across) in [(&rules[0], 0, 1, nx), (&rules[1], nx + 1, nx, 1)] {
        for jj in 0..ny + 2 {
            pad[jj * w + ghost] = match rule {
                Ghost::Periodic => pad[jj * w + across],
                Ghost::Even => pad[jj * w + inner],
                Ghost::Dirichlet(v) => 2.0 * v[jj.clamp(1, ny) - 1] - pad[jj * w + inner],
            };
        }
    }
}

/// Central gradient at padded position `(pi, pj)`:
/// `(3/dx) sum_i w_i e_i p(x + dx e_i)`.
#[inline]
fn gradient_at(pad: &[f64], w: usize, pi: usize, pj: usize, scale: f64) -> [f64; 2] {
    let at = |di: isize, dj: isize| pad[(pj as isize + dj) as usize * w + (pi as isize + di) as usize];
    let (e, n, wst, s) = (at(1, 0), at(0, 1), at(-1, 0), at(0, -1));
    let (ne, nw, sw, se) = (at(1, 1), at(-1, 1), at(-1, -1), at(1, -1));
    let gx = 4.0 * (e - wst) + (ne - nw - sw + se);
    let gy = 4.0 * (n - s) + (ne + nw - sw - se);
    [scale * gx, scale * gy]
}

/// `3 / (36 dx)`: the weight denominator folded into the gradient prefactor.
fn gradient_scale(dx: f64) -> f64 {
    3.0 / (36.0 * dx)
}

/// Central-difference pressure gradient, with the ghost values implied by
/// the pressure walls at time `t`.
pub fn pressure_gradient(p: &ScalarField, grid: &Grid, bcs: &FlowBoundary, t: f64) -> Result<VectorField> {
    bcs.validate()?;
    let (nx, ny) = (grid.nx, grid.ny);
    let mut pad = vec![0.0; (nx + 2) * (ny + 2)];
    fill_padded(&p.data, nx, ny, &ghost_rules(bcs, t, grid), &mut pad);
    let mut out = VectorField::for_grid(grid);
    let scale = gradient_scale(grid.dx);
    for j in 0..ny {
        for i in 0..nx {
            let [gx, gy] = gradient_at(&pad, nx + 2, i + 1, j + 1, scale);
            out.x.set(i, j, gx);
            out.y.set(i, j, gy);
        }
    }
    Ok(out)
}

/// `s - kappa div g - (alpha/eps)(1 - r)(div(t-dt) - div(t-2dt)) / dt`.
pub fn explicit_source_part(
    base: &ScalarField,
    div_tm1: &ScalarField,
    div_tm2: &ScalarField,
    alpha: f64,
    eps: f64,
    dt: f64,
    r: f64,
) -> ScalarField {
    let c = alpha / eps * (1.0 - r) / dt;
    let mut out = base.clone();
    for ((o, a), b) in out.data.iter_mut().zip(&div_tm1.data).zip(&div_tm2.data) {
        *o -= c * (a - b);
    }
    out
}

/// Fully explicit effective source.
pub fn effective_source_explicit(
    base: &ScalarField,
    div_tm1: &ScalarField,
    div_tm2: &ScalarField,
    alpha: f64,
    eps: f64,
    dt: f64,
) -> ScalarField {
    explicit_source_part(base, div_tm1, div_tm2, alpha, eps, dt, 0.0)
}

/// Semi-implicit effective source: the frozen explicit part minus
/// `(alpha/eps) r (div(tau - dtau, t) - div(t - dt)) / dt`.
pub fn effective_source_semi_implicit(
    explicit_part: &ScalarField,
    div_prev_tau: &ScalarField,
    div_tm1: &ScalarField,
    alpha: f64,
    eps: f64,
    dt: f64,
    r: f64,
) -> Result<ScalarField> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::InvalidArgument(format!("r must lie in [0, 1], got {r}")));
    }
    let c = alpha / eps * r / dt;
    let mut out = explicit_part.clone();
    for ((o, a), b) in out.data.iter_mut().zip(&div_prev_tau.data).zip(&div_tm1.data) {
        *o -= c * (a - b);
    }
    Ok(out)
}

/// `f_eff = f - alpha grad p`.
pub fn effective_force(force: &VectorField, grad_p: &VectorField, alpha: f64) -> VectorField {
    let mut out = force.clone();
    for (o, g) in out.x.data.iter_mut().zip(&grad_p.x.data) {
        *o -= alpha * g;
    }
    for (o, g) in out.y.data.iter_mut().zip(&grad_p.y.data) {
        *o -= alpha * g;
    }
    out
}

fn check_finite(values: &[f64], t: f64, tau: usize, field: &str) -> Result<()> {
    for v in values {
        if !v.is_finite() {
            return Err(Error::Divergence {
                t,
                tau,
                field: field.into(),
                reason: "has non-finite entries".into(),
            });
        }
        if v.abs() > DIVERGENCE_THRESHOLD {
            return Err(Error::Divergence {
                t,
                tau,
                field: field.into(),
                reason: format!("exceeds {DIVERGENCE_THRESHOLD:e} in magnitude"),
            });
        }
    }
    Ok(())
}

/// Elastic collision with the force `f - alpha grad p` evaluated inline.
#[allow(clippy::too_many_arguments)]
fn collide_coupled(
    g: &DistributionField,
    pad: &[f64],
    fx: &[f64],
    fy: &[f64],
    alpha: f64,
    dx: f64,
    params: &ElasticParams,
    g_star: &mut DistributionField,
    div: &mut [f64],
    threaded: bool,
) {
    let (nx, ny) = (g.nx, g.ny);
    let n = nx * ny;
    let kv = params.div_factor();
    let scale = gradient_scale(dx);
    let rows: Vec<_> = plane_rows::<8>(&mut g_star.values, nx, ny)
        .into_iter()
        .zip(div.chunks_mut(nx))
        .collect();
    for_each_row(rows, threaded, |j, (out, div_row)| {
        let base = j * nx;
        let gin: [&[f64]; 8] = std::array::from_fn(|d| &g.values[d * n + base..][..nx]);
        for i in 0..nx {
            let cell: [f64; 8] = std::array::from_fn(|d| gin[d][i]);
            let m = Moments::from_distributions(&cell);
            let [gx, gy] = gradient_at(pad, nx + 2, i + 1, j + 1, scale);
            let f_eff = [fx[base + i] - alpha * gx, fy[base + i] - alpha * gy];
            let (post, _) = collide_cell(&m, f_eff, params);
            div_row[i] = -kv * m.ms;
            let gs = post.to_distributions();
            for d in 0..8 {
                out[d][i] = gs[d];
            }
        }
    });
}

/// Coupled solver for one problem on one grid.
pub struct Simulation {
    pub grid: Grid,
    pub problem: ProblemDefinition,
    pub config: CouplingConfig,
    pub state: CoupledState,
    params: ElasticParams,
    threaded: bool,
    // Per-step data and scratch buffers.
    base_source: ScalarField,
    force: VectorField,
    pad: Vec<f64>,
    p_base: Vec<f64>,
    p_work: Vec<f64>,
    div_cur: Vec<f64>,
    g_star: DistributionField,
    f_star: DistributionField,
    elastic_done: bool,
}

impl Simulation {
    /// Initialises distributions so that `p = 0` and `eta = 0` at `t = 0`.
    pub fn new(problem: ProblemDefinition, grid: Grid, config: CouplingConfig, parallelism: Parallelism) -> Result<Self> {
        config.validate()?;
        problem.flow_boundary.validate()?;
        problem.elastic_boundary.validate()?;
        let pp = problem.params;
        let params = ElasticParams::new(pp.lam, pp.mu, grid.dx)?;
        let omega = flow_relaxation_rate(pp.kappa, &grid)?;
        let threaded = parallelism.threaded(grid.cells());

        let mut sim = Self {
            grid,
            config,
            params,
            threaded,
            base_source: ScalarField::for_grid(&grid),
            force: VectorField::for_grid(&grid),
            pad: vec![0.0; (grid.nx + 2) * (grid.ny + 2)],
            p_base: vec![0.0; grid.cells()],
            p_work: vec![0.0; grid.cells()],
            div_cur: vec![0.0; grid.cells()],
            g_star: DistributionField::for_grid(VelocitySet::D2Q8, &grid),
            f_star: DistributionField::for_grid(VelocitySet::D2Q9, &grid),
            elastic_done: false,
            state: CoupledState {
                flow: FlowState::new(DistributionField::for_grid(VelocitySet::D2Q9, &grid), omega, &grid),
                elastic: ElasticState::new(DistributionField::for_grid(VelocitySet::D2Q8, &grid), params)?,
                t: 0.0,
                step: 0,
                explicit_source_part: ScalarField::for_grid(&grid),
                source: ScalarField::for_grid(&grid),
                pressure: ScalarField::for_grid(&grid),
                eta: VectorField::for_grid(&grid),
                sigma: StressField::for_grid(&grid),
            },
            problem,
        };

        sim.load_data(0.0);
        let kappa_div_g = sim.fluid_divergence(0.0);
        let source0 = sim.problem.source.as_ref().map_or_else(
            || ScalarField::for_grid(&grid),
            |s| ScalarField::from_fn(&grid, |x| s(0.0, x)),
        );
        sim.state.flow.f = flow_init(&source0, &kappa_div_g, pp.kappa, &grid);
        let p0 = flow::flow_pressure(&sim.state.flow.f, &sim.base_source, &grid);
        let grad = pressure_gradient(&p0, &grid, &sim.problem.flow_boundary, 0.0)?;
        let f_eff0 = effective_force(&sim.force, &grad, config.alpha);
        sim.state.elastic = ElasticState::new(elastic_init(&f_eff0, &params), params)?;
        sim.state.pressure = p0;
        Ok(sim)
    }

    pub fn params(&self) -> &ElasticParams {
        &self.params
    }

    pub fn is_threaded(&self) -> bool {
        self.threaded
    }

    fn fluid_divergence(&self, t: f64) -> ScalarField {
        match &self.problem.fluid_force_divergence {
            Some(g) => ScalarField::from_fn(&self.grid, |x| g(t, x)),
            None => ScalarField::for_grid(&self.grid),
        }
    }

    /// Evaluates `s - kappa div g` and `f` at time `t`.
    fn load_data(&mut self, t: f64) {
        let grid = self.grid;
        match &self.problem.source {
            Some(s) => self.base_source.fill_from(&grid, |x| s(t, x)),
            None => self.base_source.data.fill(0.0),
        }
        if let Some(g) = &self.problem.fluid_force_divergence {
            let kappa = self.problem.params.kappa;
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    let k = grid.index(i, j);
                    self.base_source.data[k] -= kappa * g(t, grid.position(i, j));
                }
            }
        }
        match &self.problem.force {
            Some(f) => self.force.fill_from(&grid, |x| f(t, x)),
            None => {
                self.force.x.data.fill(0.0);
                self.force.y.data.fill(0.0);
            }
        }
    }

    /// Elasticity stage at the current time: `N_E` pseudo-steps, then the
    /// extraction of `p`, `eta` and `sigma` at this time level.
    pub fn elastic_stage(&mut self) -> Result<()> {
        let grid = self.grid;
        let t = self.state.t;
        let cfg = self.config;
        let (alpha, r, eps, dt) = (cfg.alpha, cfg.r, self.params.eps, grid.dt);
        let (nx, ny) = (grid.nx, grid.ny);
        self.load_data(t);

        let es = &mut self.state.elastic;
        self.state.explicit_source_part = explicit_source_part(
            &self.base_source,
            &es.div_eta_prev_t,
            &es.div_eta_prev_t2,
            alpha,
            eps,
            dt,
            r,
        );
        flow::zeroth_moment_into(&self.state.flow.f, &mut self.p_base);
        for (p, s) in self.p_base.iter_mut().zip(&self.state.explicit_source_part.data) {
            *p += 0.5 * dt * s;
        }
        let rules = ghost_rules(&self.problem.flow_boundary, t, &grid);
        let links = elastic_links(&self.problem.elastic_boundary, eps, t, &grid)?;
        let wrap = self.problem.elastic_boundary.wrap();
        // Pressure correction per unit change of the lattice divergence.
        let implicit = alpha * r / (2.0 * eps);
        es.div_eta_prev_tau.data.copy_from_slice(&es.div_eta_prev_t.data);
        fill_padded(&self.p_base, nx, ny, &rules, &mut self.pad);

        for tau in 0..cfg.n_e {
            if implicit != 0.0 && tau > 0 {
                for k in 0..grid.cells() {
                    self.p_work[k] =
                        self.p_base[k] - implicit * (es.div_eta_prev_tau.data[k] - es.div_eta_prev_t.data[k]);
                }
                fill_padded(&self.p_work, nx, ny, &rules, &mut self.pad);
            }
            collide_coupled(
                &es.g,
                &self.pad,
                &self.force.x.data,
                &self.force.y.data,
                alpha,
                grid.dx,
                &self.params,
                &mut self.g_star,
                &mut self.div_cur,
                self.threaded,
            );
            check_finite(&self.div_cur, t, tau, "div_eta")?;
            stream_into(&self.g_star, &mut es.g, wrap, self.threaded);
            apply_links(&mut es.g, &self.g_star, &es.g_prev, &links);
            std::mem::swap(&mut es.g_prev, &mut self.g_star);
            es.div_eta_prev_tau.data.copy_from_slice(&self.div_cur);
        }
        self.extract()?;
        self.elastic_done = true;
        Ok(())
    }

    /// Solution fields carried by `g(N_E)` at the current time.
    fn extract(&mut self) -> Result<()> {
        let grid = self.grid;
        let t = self.state.t;
        let cfg = self.config;
        let (alpha, eps, dt) = (cfg.alpha, self.params.eps, grid.dt);
        let (nx, ny) = (grid.nx, grid.ny);
        let n = grid.cells();
        let es = &mut self.state.elastic;
        let moments: Vec<Moments> = (0..n)
            .map(|k| Moments::from_distributions(&std::array::from_fn(|d| es.g.values[d * n + k])))
            .collect();
        let ks = self.params.bar_s_factor();
        let kv = self.params.div_factor();
        let kd = self.params.bar_d_factor();
        for (k, m) in moments.iter().enumerate() {
            es.div_eta.data[k] = -kv * m.ms;
        }
        self.state.source = effective_source_semi_implicit(
            &self.state.explicit_source_part,
            &es.div_eta,
            &es.div_eta_prev_t,
            alpha,
            eps,
            dt,
            cfg.r,
        )?;
        flow::zeroth_moment_into(&self.state.flow.f, &mut self.state.pressure.data);
        for (p, s) in self.state.pressure.data.iter_mut().zip(&self.state.source.data) {
            *p += 0.5 * dt * s;
        }
        check_finite(&self.state.pressure.data, t, cfg.n_e, "pressure")?;
        let rules = ghost_rules(&self.problem.flow_boundary, t, &grid);
        fill_padded(&self.state.pressure.data, nx, ny, &rules, &mut self.pad);
        let h = self.params.half_force_scale();
        let scale = gradient_scale(grid.dx);
        let inv_eps = 1.0 / eps;
        for j in 0..ny {
            for i in 0..nx {
                let k = grid.index(i, j);
                let m = &moments[k];
                let [gx, gy] = gradient_at(&self.pad, nx + 2, i + 1, j + 1, scale);
                let f = [self.force.x.data[k] - alpha * gx, self.force.y.data[k] - alpha * gy];
                self.state.eta.x.data[k] = m.m10 + h * f[0];
                self.state.eta.y.data[k] = m.m01 + h * f[1];
                let (bs, bd, b11) = (ks * m.ms, kd * m.md, kd * m.m11);
                self.state.sigma.xx.data[k] = -0.5 * inv_eps * (bs + bd);
                self.state.sigma.xy.data[k] = -inv_eps * b11;
                self.state.sigma.yy.data[k] = -0.5 * inv_eps * (bs - bd);
            }
        }
        Ok(())
    }

    /// Pressure update from `t` to `t + dt` with the source of the latest
    /// elasticity stage, then the roll of the divergence history.
    pub fn flow_update(&mut self) -> Result<()> {
        if !self.elastic_done {
            return Err(Error::InvalidArgument("flow update needs a preceding elasticity stage".into()));
        }
        let grid = self.grid;
        flow::advance(
            &mut self.state.flow,
            &mut self.f_star,
            &self.state.source.data,
            &self.problem.flow_boundary,
            self.state.t,
            &grid,
            self.threaded,
        )?;
        let es = &mut self.state.elastic;
        std::mem::swap(&mut es.div_eta_prev_t2, &mut es.div_eta_prev_t);
        es.div_eta_prev_t.data.copy_from_slice(&es.div_eta.data);
        self.state.step += 1;
        self.state.t = self.state.step as f64 * grid.dt;
        self.elastic_done = false;
        Ok(())
    }

    /// Full time step: elasticity stage at `t`, pressure update to `t + dt`.
    pub fn time_step(&mut self) -> Result<()> {
        self.elastic_stage()?;
        self.flow_update()
    }
}
