//! Single-relaxation-time D2Q9 scheme for the pressure diffusion-reaction
//! equation `dp/dt - kappa Lap p = s_eff`.
//!
//! The relaxation rate `omega` is kept in physical units (1/time); the
//! dimensionless rate `omega * dt` is what must lie in `(0, 2)`.

use crate::boundary::{apply_links, flow_links, FlowBoundary};
use crate::error::{Error, Result};
use crate::exec::{for_each_row, plane_rows};
use crate::field::ScalarField;
use crate::lattice::{stream_into, DistributionField, Grid, VelocitySet};

/// Dimensionless rates above this are reported as sitting at the stability margin.
pub const STABILITY_MARGIN: f64 = 1.99;

/// Relaxation rate for permeability `kappa`, from `kappa = cs2 (1/omega - dt/2)`.
pub fn flow_relaxation_rate(kappa: f64, grid: &Grid) -> Result<f64> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "permeability must be positive and finite, got {kappa}"
        )));
    }
    let omega = 1.0 / (kappa / grid.cs2() + 0.5 * grid.dt);
    let omega_dt = omega * grid.dt;
    if !(omega_dt > 0.0 && omega_dt < 2.0) {
        return Err(Error::Stability {
            omega_dt,
            hint: format!("cs2 = {} and dt = {}", grid.cs2(), grid.dt),
        });
    }
    if omega_dt > STABILITY_MARGIN {
        log::warn!(
            "flow relaxation rate omega*dt = {omega_dt} is at the stability margin (kappa = {kappa})"
        );
    }
    Ok(omega)
}

/// True when the dimensionless rate is within the stability margin of 2.
pub fn near_stability_margin(omega: f64, grid: &Grid) -> bool {
    omega * grid.dt > STABILITY_MARGIN
}

/// The effective source and its parts. The coupling part is the volumetric
/// term `-(alpha/eps) d/dt div(eta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceField {
    pub source: ScalarField,
    /// `-kappa div(g)`.
    pub fluid_force: ScalarField,
    pub coupling: ScalarField,
}

impl SourceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            source: ScalarField::for_grid(grid),
            fluid_force: ScalarField::for_grid(grid),
            coupling: ScalarField::for_grid(grid),
        }
    }

    /// A source with only the `s` part set.
    pub fn from_source(source: ScalarField) -> Self {
        let (nx, ny) = (source.nx, source.ny);
        Self {
            source,
            fluid_force: ScalarField::zeros(nx, ny),
            coupling: ScalarField::zeros(nx, ny),
        }
    }

    /// `s_eff = s - kappa div(g) + coupling`.
    pub fn total(&self) -> ScalarField {
        let mut out = self.source.clone();
        for ((o, g), c) in out
            .data
            .iter_mut()
            .zip(&self.fluid_force.data)
            .zip(&self.coupling.data)
        {
            *o = *o + g + c;
        }
        out
    }
}

/// Distributions, the pressure they currently represent, and the rate.
#[derive(Clone, Debug)]
pub struct FlowState {
    pub f: DistributionField,
    pub pressure: ScalarField,
    pub omega: f64,
}

impl FlowState {
    pub fn new(f: DistributionField, omega: f64, grid: &Grid) -> Self {
        Self {
            f,
            pressure: ScalarField::for_grid(grid),
            omega,
        }
    }
}

/// `p = sum_i f_i + dt/2 s_eff`.
pub fn flow_pressure(f: &DistributionField, s_eff: &ScalarField, grid: &Grid) -> ScalarField {
    let mut p = ScalarField::for_grid(grid);
    zeroth_moment_into(f, &mut p.data);
    for (p, s) in p.data.iter_mut().zip(&s_eff.data) {
        *p += 0.5 * grid.dt * s;
    }
    p
}

/// `sum_i f_i` per cell.
pub(crate) fn zeroth_moment_into(f: &DistributionField, out: &mut [f64]) {
    out.copy_from_slice(f.plane(0));
    for d in 1..f.set.len() {
        for (o, v) in out.iter_mut().zip(f.plane(d)) {
            *o += v;
        }
    }
}

/// `f_i^eq = w_i p`.
pub fn flow_equilibrium(p: &ScalarField) -> DistributionField {
    let set = VelocitySet::D2Q9;
    let mut out = DistributionField::zeros(set, p.nx, p.ny);
    for d in 0..9 {
        let w = set.weight(d);
        for (o, p) in out.plane_mut(d).iter_mut().zip(&p.data) {
            *o = w * p;
        }
    }
    out
}

/// Post-collision distributions
/// `f* = f - omega dt (f - w p) + dt (1 - omega dt / 2) w s_eff`,
/// with `p` taken from `state.pressure`.
pub fn flow_collide(state: &FlowState, s_eff: &ScalarField, grid: &Grid) -> DistributionField {
    let set = VelocitySet::D2Q9;
    let omega_dt = state.omega * grid.dt;
    let source_scale = grid.dt * (1.0 - 0.5 * omega_dt);
    let mut out = state.f.clone();
    for d in 0..9 {
        let w = set.weight(d);
        let plane = out.plane_mut(d);
        for (k, v) in plane.iter_mut().enumerate() {
            let feq = w * state.pressure.data[k];
            *v = *v - omega_dt * (*v - feq) + source_scale * w * s_eff.data[k];
        }
    }
    out
}

/// Initial distributions `f_i = -dt/2 w_i (s - kappa div g)` at `t = 0`,
/// which make the reconstructed pressure vanish.
pub fn flow_init(s0: &ScalarField, div_g0: &ScalarField, kappa: f64, grid: &Grid) -> DistributionField {
    let set = VelocitySet::D2Q9;
    let mut out = DistributionField::for_grid(set, grid);
    for d in 0..9 {
        let w = set.weight(d);
        for ((o, s), dg) in out.plane_mut(d).iter_mut().zip(&s0.data).zip(&div_g0.data) {
            *o = -0.5 * grid.dt * w * (s - kappa * dg);
        }
    }
    out
}

/// Fused pressure evaluation and collision used by the time stepper.
pub(crate) fn collide_into(
    f: &DistributionField,
    s_eff: &[f64],
    omega_dt: f64,
    dt: f64,
    pressure: &mut [f64],
    f_star: &mut DistributionField,
    threaded: bool,
) {
    let (nx, ny) = (f.nx, f.ny);
    let w: [f64; 9] = std::array::from_fn(|d| VelocitySet::D2Q9.weight(d));
    let source_scale = dt * (1.0 - 0.5 * omega_dt);
    let rows: Vec<_> = plane_rows::<9>(&mut f_star.values, nx, ny)
        .into_iter()
        .zip(pressure.chunks_mut(nx))
        .collect();
    for_each_row(rows, threaded, |j, (out, p_row)| {
        let base = j * nx;
        let s_row = &s_eff[base..base + nx];
        let fin: [&[f64]; 9] = std::array::from_fn(|d| &f.values[d * nx * ny + base..][..nx]);
        for i in 0..nx {
            let mut sum = 0.0;
            for plane in &fin {
                sum += plane[i];
            }
            let s = s_row[i];
            let p = sum + 0.5 * dt * s;
            p_row[i] = p;
            for d in 0..9 {
                let v = fin[d][i];
                out[d][i] = v - omega_dt * (v - w[d] * p) + source_scale * w[d] * s;
            }
        }
    });
}

/// Stand-alone pressure solver: collide, stream, then rebuild wall slots.
#[derive(Clone, Debug)]
pub struct FlowSolver {
    pub grid: Grid,
    pub state: FlowState,
    pub boundary: FlowBoundary,
    pub t: f64,
    f_star: DistributionField,
    threaded: bool,
}

impl FlowSolver {
    pub fn new(grid: Grid, kappa: f64, f0: DistributionField, boundary: FlowBoundary) -> Result<Self> {
        boundary.validate()?;
        let omega = flow_relaxation_rate(kappa, &grid)?;
        let f_star = f0.clone();
        Ok(Self {
            grid,
            state: FlowState::new(f0, omega, &grid),
            boundary,
            t: 0.0,
            f_star,
            threaded: false,
        })
    }

    pub fn with_threads(mut self, threaded: bool) -> Self {
        self.threaded = threaded;
        self
    }

    /// Advances one time step with the effective source `s_eff(t)`. On
    /// return `state.pressure` holds `p(t)` and `state.f` the distributions
    /// at `t + dt`.
    pub fn step(&mut self, s_eff: &ScalarField) -> Result<()> {
        advance(
            &mut self.state,
            &mut self.f_star,
            &s_eff.data,
            &self.boundary,
            self.t,
            &self.grid,
            self.threaded,
        )?;
        self.t += self.grid.dt;
        Ok(())
    }

    /// Pressure represented by the current distributions for a given source.
    pub fn pressure(&self, s_eff: &ScalarField) -> ScalarField {
        flow_pressure(&self.state.f, s_eff, &self.grid)
    }
}

/// One flow update from `t` to `t + dt`, shared with the coupled stepper.
pub(crate) fn advance(
    state: &mut FlowState,
    f_star: &mut DistributionField,
    s_eff: &[f64],
    boundary: &FlowBoundary,
    t: f64,
    grid: &Grid,
    threaded: bool,
) -> Result<()> {
    collide_into(
        &state.f,
        s_eff,
        state.omega * grid.dt,
        grid.dt,
        &mut state.pressure.data,
        f_star,
        threaded,
    );
    stream_into(f_star, &mut state.f, boundary.wrap(), threaded);
    let links = flow_links(boundary, t + grid.dt, grid);
    apply_links(&mut state.f, f_star, f_star, &links);
    let missing = crate::boundary::missing_on_walls(&state.f, boundary, grid);
    if missing > 0 {
        return Err(Error::Boundary(format!(
            "{missing} pressure distribution slots unset after wall reconstruction"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{BoundarySpec, FlowCondition};

    fn unit_grid(n: usize) -> Grid {
        Grid::new(n, n, 1.0, 1.0).unwrap()
    }

    #[test]
    fn relaxation_rate_examples() {
        let g = unit_grid(2);
        assert!((flow_relaxation_rate(0.1, &g).unwrap() - 1.25).abs() < 1e-14);
        assert!((flow_relaxation_rate(1.0 / 6.0, &g).unwrap() - 1.0).abs() < 1e-14);
        let near = flow_relaxation_rate(1e-9, &g).unwrap();
        assert!(near < 2.0 && near > 1.999);
        assert!(near_stability_margin(near, &g));
        assert!(flow_relaxation_rate(0.0, &g).is_err());
        assert!(flow_relaxation_rate(-1.0, &g).is_err());
        // kappa so small that omega rounds to 2 exactly.
        assert!(matches!(
            flow_relaxation_rate(1e-30, &g),
            Err(Error::Stability { .. })
        ));
    }

    #[test]
    fn relaxation_rate_viscous_scaling() {
        // dt = dx^2: the dimensionless rate is 1 / (3 kappa + 1/2).
        let dx = 1.0 / 32.0;
        let g = Grid::new(32, 32, dx, dx * dx).unwrap();
        let omega = flow_relaxation_rate(0.1, &g).unwrap();
        assert!((omega * g.dt - 1.25).abs() < 1e-12);
    }

    #[test]
    fn pressure_examples() {
        let g = unit_grid(3);
        let set = VelocitySet::D2Q9;
        let mut f = DistributionField::for_grid(set, &g);
        for d in 0..9 {
            f.plane_mut(d).fill(3.0 * set.weight(d));
        }
        let p = flow_pressure(&f, &ScalarField::for_grid(&g), &g);
        assert!(p.data.iter().all(|v| (v - 3.0).abs() < 1e-15));

        let zero = DistributionField::for_grid(set, &g);
        let p = flow_pressure(&zero, &ScalarField::constant(3, 3, 2.0), &g);
        assert!(p.data.iter().all(|v| *v == 1.0));

        for d in 0..9 {
            f.plane_mut(d).fill(set.weight(d));
        }
        let p = flow_pressure(&f, &ScalarField::constant(3, 3, -2.0), &g);
        assert!(p.data.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn equilibrium_examples() {
        let one = flow_equilibrium(&ScalarField::constant(1, 1, 1.0));
        assert_eq!(one.get(0, 0, 0), 4.0 / 9.0);
        assert_eq!(one.get(1, 0, 0), 1.0 / 9.0);
        assert_eq!(one.get(5, 0, 0), 1.0 / 36.0);
        let zero = flow_equilibrium(&ScalarField::zeros(2, 2));
        assert!(zero.values.iter().all(|v| *v == 0.0));
        let mut p = ScalarField::zeros(2, 2);
        p.set(1, 1, 2.0);
        assert_eq!(flow_equilibrium(&p).get(1, 1, 1), 2.0 / 9.0);
    }

    #[test]
    fn collide_examples() {
        let g = unit_grid(2);
        // Equilibrium is a fixed point without source.
        let p = ScalarField::constant(2, 2, 0.7);
        let mut state = FlowState::new(flow_equilibrium(&p), 1.3, &g);
        state.pressure = p.clone();
        let out = flow_collide(&state, &ScalarField::zeros(2, 2), &g);
        for (a, b) in out.values.iter().zip(&state.f.values) {
            assert!((a - b).abs() < 1e-16);
        }

        // Full relaxation lands on equilibrium.
        let mut state = FlowState::new(DistributionField::for_grid(VelocitySet::D2Q9, &g), 1.0, &g);
        state.f.plane_mut(3).fill(0.25);
        state.pressure = flow_pressure(&state.f, &ScalarField::zeros(2, 2), &g);
        let out = flow_collide(&state, &ScalarField::zeros(2, 2), &g);
        let eq = flow_equilibrium(&state.pressure);
        for (a, b) in out.values.iter().zip(&eq.values) {
            assert!((a - b).abs() < 1e-16);
        }
    }

    #[test]
    fn collide_with_source_matches_scalar_recomputation() {
        let g = unit_grid(1);
        let set = VelocitySet::D2Q9;
        let s = ScalarField::constant(1, 1, 1.0);
        let mut state = FlowState::new(DistributionField::for_grid(set, &g), 1.0, &g);
        state.pressure = flow_pressure(&state.f, &s, &g);
        assert_eq!(state.pressure.data[0], 0.5);
        let out = flow_collide(&state, &s, &g);
        for d in 0..9 {
            let w = set.weight(d);
            // Relaxation towards w * 1/2 plus the (1 - 1/2) w source.
            let oracle = 0.0 - 1.0 * (0.0 - w * 0.5) + (1.0 - 0.5) * w * 1.0;
            assert!((out.get(d, 0, 0) - oracle).abs() < 1e-16);
            assert!((out.get(d, 0, 0) - w).abs() < 1e-16);
        }
    }

    #[test]
    fn fused_collision_matches_reference() {
        let g = Grid::new(5, 4, 0.25, 0.0625).unwrap();
        let set = VelocitySet::D2Q9;
        let mut f = DistributionField::for_grid(set, &g);
        for (k, v) in f.values.iter_mut().enumerate() {
            *v = ((k * 37 % 11) as f64 - 5.0) * 0.01;
        }
        let s = ScalarField::from_fn(&g, |x| x[0] - 2.0 * x[1]);
        let omega = flow_relaxation_rate(0.1, &g).unwrap();
        let mut state = FlowState::new(f.clone(), omega, &g);
        state.pressure = flow_pressure(&f, &s, &g);
        let reference = flow_collide(&state, &s, &g);
        let mut out = f.clone();
        let mut p = vec![0.0; g.cells()];
        collide_into(&f, &s.data, omega * g.dt, g.dt, &mut p, &mut out, false);
        for (a, b) in p.iter().zip(&state.pressure.data) {
            assert!((a - b).abs() < 1e-15);
        }
        for (a, b) in out.values.iter().zip(&reference.values) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn init_examples() {
        let g = unit_grid(2);
        let zero = ScalarField::zeros(2, 2);
        let f = flow_init(&zero, &zero, 0.1, &g);
        assert!(f.values.iter().all(|v| *v == 0.0));

        let f = flow_init(&ScalarField::constant(2, 2, 2.0), &zero, 0.1, &g);
        for d in 0..9 {
            assert_eq!(f.get(d, 1, 1), -VelocitySet::D2Q9.weight(d));
        }

        let s0 = ScalarField::from_fn(&g, |x| 3.0 * x[0] - x[1]);
        let dg = ScalarField::from_fn(&g, |x| x[0] * x[1]);
        let kappa = 0.3;
        let f = flow_init(&s0, &dg, kappa, &g);
        let mut truncated = s0.clone();
        for (t, d) in truncated.data.iter_mut().zip(&dg.data) {
            *t -= kappa * d;
        }
        let p = flow_pressure(&f, &truncated, &g);
        assert!(p.max_abs() < 1e-15);
    }

    #[test]
    fn source_field_total() {
        let mut s = SourceField::zeros(&unit_grid(2));
        s.source.data.fill(1.0);
        s.fluid_force.data.fill(-0.25);
        s.coupling.data.fill(2.0);
        assert!(s.total().data.iter().all(|v| *v == 2.75));
    }

    fn periodic() -> FlowBoundary {
        BoundarySpec::uniform(FlowCondition::Periodic)
    }

    #[test]
    fn constant_pressure_is_stationary() {
        let n = 8;
        let dx = 1.0 / n as f64;
        let g = Grid::new(n, n, dx, dx * dx).unwrap();
        let f0 = flow_equilibrium(&ScalarField::constant(n, n, 1.7));
        let mut solver = FlowSolver::new(g, 0.1, f0, periodic()).unwrap();
        let zero = ScalarField::zeros(n, n);
        for _ in 0..50 {
            solver.step(&zero).unwrap();
            assert!(solver.state.pressure.data.iter().all(|p| (p - 1.7).abs() < 1e-14));
        }
    }

    #[test]
    fn zero_source_conserves_mass() {
        let n = 8;
        let g = Grid::new(n, n, 1.0, 1.0).unwrap();
        let mut f0 = DistributionField::for_grid(VelocitySet::D2Q9, &g);
        for (k, v) in f0.values.iter_mut().enumerate() {
            *v = 1.0 + ((k * 13) % 7) as f64 * 0.1;
        }
        let total0: f64 = f0.values.iter().sum();
        let mut solver = FlowSolver::new(g, 0.1, f0, periodic()).unwrap();
        let zero = ScalarField::zeros(n, n);
        for _ in 0..100 {
            solver.step(&zero).unwrap();
        }
        let total: f64 = solver.state.f.values.iter().sum();
        assert!(((total - total0) / total0).abs() < 1e-12);
    }

    #[test]
    fn constant_pressure_with_dirichlet_walls_is_stationary() {
        let n = 6;
        let g = Grid::new(n, n, 1.0, 1.0).unwrap();
        let p_d = 0.8;
        let walls = BoundarySpec {
            left: FlowCondition::Periodic,
            right: FlowCondition::Periodic,
            bottom: FlowCondition::DirichletPressure(std::sync::Arc::new(move |_, _| p_d)),
            top: FlowCondition::DirichletPressure(std::sync::Arc::new(move |_, _| p_d)),
        };
        let f0 = flow_equilibrium(&ScalarField::constant(n, n, p_d));
        let mut solver = FlowSolver::new(g, 0.2, f0.clone(), walls).unwrap();
        let zero = ScalarField::zeros(n, n);
        for _ in 0..20 {
            solver.step(&zero).unwrap();
        }
        for (a, b) in solver.state.f.values.iter().zip(&f0.values) {
            assert!((a - b).abs() < 1e-13);
        }
    }
    fn diffusion_error(n: usize) -> f64 {
        use std::f64::consts::PI;
        let kappa = 0.1;
        let dx = 1.0 / n as f64;
        let g = Grid::new(n, n, dx, dx * dx).unwrap();
        let mode = |x: [f64; 2]| (2.0 * PI * x[0]).sin() * (2.0 * PI * x[1]).sin();
        let f0 = flow_equilibrium(&ScalarField::from_fn(&g, mode));
        let mut solver = FlowSolver::new(g, kappa, f0, periodic()).unwrap();
        let zero = ScalarField::zeros(n, n);
        let steps = (0.1 / g.dt).round() as usize;
        for _ in 0..steps {
            solver.step(&zero).unwrap();
        }
        let t = steps as f64 * g.dt;
        let decay = (-8.0 * PI * PI * kappa * t).exp();
        let p = solver.pressure(&zero);
        let exact = ScalarField::from_fn(&g, |x| decay * mode(x));
        let sum: f64 = p.data.iter().zip(&exact.data).map(|(a, b)| (a - b).powi(2)).sum();
        dx * sum.sqrt()
    }

    #[test]
    fn pure_diffusion_decays_at_second_order() {
        let coarse = diffusion_error(32);
        let fine = diffusion_error(64);
        let order = (coarse / fine).log2();
        assert!(order >= 1.8, "observed order {order}");
    }
}
