//! D2Q8 multiple-relaxation-time scheme for quasi-static linear elasticity,
//! iterated in pseudo time towards `div sigma + f_eff = 0`.
//!
//! Direction order is `10, 01, -10, 0-1, 11, -11, -1-1, 1-1`, i.e. the D2Q9
//! set without the rest velocity.
//!
//! The half-collision moments follow the closed forms
//! `bar m_s = X/(X+1) m_s` with `X = 3(lambda+mu)` and
//! `bar m_d = 6mu/(6mu+1) m_d`; post-collision values are `m* = 2 bar m - m`.
//! Displacements are physical, stresses are `sigma_hat / eps`.

use crate::boundary::{apply_links, elastic_links, ElasticBoundary};
use crate::error::{Error, Result};
use crate::exec::{for_each_row, plane_rows};
use crate::field::{ScalarField, StressField, VectorField};
use crate::lattice::{stream_into, DistributionField, Grid, VelocitySet};

/// Tolerance on `|12(lambda + mu) - 4|` below which `m_f` is undefined.
const SINGULAR_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ElasticParams {
    pub lam: f64,
    pub mu: f64,
    /// Lattice parameter, always 1/3.
    pub theta: f64,
    /// Length ratio, equal to the lattice width of the dimensionless grid.
    pub eps: f64,
}

impl ElasticParams {
    pub fn new(lam: f64, mu: f64, eps: f64) -> Result<Self> {
        if !(lam.is_finite() && mu.is_finite() && eps.is_finite()) {
            return Err(Error::InvalidArgument("elastic parameters must be finite".into()));
        }
        if !(mu > 0.0) || !(lam + mu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need mu > 0 and lambda + mu > 0, got lambda = {lam}, mu = {mu}"
            )));
        }
        if !(eps > 0.0) {
            return Err(Error::InvalidArgument(format!("length ratio must be positive, got {eps}")));
        }
        let sum = lam + mu;
        if (12.0 * sum - 4.0).abs() < SINGULAR_TOLERANCE {
            return Err(Error::SingularCoefficient { sum });
        }
        Ok(Self {
            lam,
            mu,
            theta: 1.0 / 3.0,
            eps,
        })
    }

    /// Tabulated rate for `m_s`. It acts on the half-collision value
    /// `bar m_s`, so it may exceed 2; the rate seen by `m_s` itself is
    /// `2 (1 - bar_s_factor())`, which always lies in (0, 2).
    pub fn omega_s(&self) -> f64 {
        2.0 / (3.0 * (self.lam + self.mu))
    }

    pub fn omega_d(&self) -> f64 {
        1.0 / (3.0 * self.mu)
    }

    pub fn omega_11(&self) -> f64 {
        self.omega_d()
    }

    /// Rate shared by `m_12`, `m_21` and `m_f`.
    pub fn omega_high(&self) -> f64 {
        1.0
    }

    /// `bar m_s / m_s`.
    pub fn bar_s_factor(&self) -> f64 {
        let x = 3.0 * (self.lam + self.mu);
        x / (x + 1.0)
    }

    /// `-div eta / m_s` in lattice units. The trace of the stress is
    /// `-bar m_s = 2 (lambda + mu) div eta`.
    pub fn div_factor(&self) -> f64 {
        self.bar_s_factor() / (2.0 * (self.lam + self.mu))
    }

    /// `bar m_d / m_d`, also used for `m_11`.
    pub fn bar_d_factor(&self) -> f64 {
        6.0 * self.mu / (6.0 * self.mu + 1.0)
    }

    /// `m*_22 / m_s`.
    pub fn m22_factor(&self) -> f64 {
        -1.0 / (12.0 * (self.lam + self.mu) + 4.0)
    }

    /// Coefficient of `m_s` in `m_f = m_22 + c m_s`.
    pub fn mf_coefficient(&self) -> f64 {
        1.0 / (12.0 * (self.lam + self.mu) - 4.0)
    }

    /// Half of a force step, `eps^2 / 2`.
    pub fn half_force_scale(&self) -> f64 {
        0.5 * self.eps * self.eps
    }
}

/// Raw and combined moments of one node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub m10: f64,
    pub m01: f64,
    pub m11: f64,
    pub ms: f64,
    pub md: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl Moments {
    pub fn from_distributions(g: &[f64; 8]) -> Self {
        let [g0, g1, g2, g3, g4, g5, g6, g7] = *g;
        let diag = g4 + g5 + g6 + g7;
        Self {
            m10: g0 - g2 + g4 - g5 - g6 + g7,
            m01: g1 - g3 + g4 + g5 - g6 - g7,
            m11: g4 - g5 + g6 - g7,
            ms: g0 + g1 + g2 + g3 + 2.0 * diag,
            md: g0 + g2 - g1 - g3,
            m12: g4 - g5 - g6 + g7,
            m21: g4 + g5 - g6 - g7,
            m22: diag,
        }
    }

    pub fn to_distributions(&self) -> [f64; 8] {
        let ax = 0.5 * (self.m10 - self.m12);
        let ay = 0.5 * (self.m01 - self.m21);
        let plus = 0.25 * (self.ms + self.md) - 0.5 * self.m22;
        let minus = 0.25 * (self.ms - self.md) - 0.5 * self.m22;
        let q = 0.25;
        [
            ax + plus,
            ay + minus,
            -ax + plus,
            -ay + minus,
            q * (self.m11 + self.m12 + self.m21 + self.m22),
            q * (-self.m11 - self.m12 + self.m21 + self.m22),
            q * (self.m11 - self.m12 - self.m21 + self.m22),
            q * (-self.m11 + self.m12 - self.m21 + self.m22),
        ]
    }

    pub fn mf(&self, params: &ElasticParams) -> f64 {
        self.m22 + params.mf_coefficient() * self.ms
    }

    /// Moments in the order `10, 01, 11, s, d, 12, 21, 22`.
    pub fn to_array(&self) -> [f64; 8] {
        [
            self.m10, self.m01, self.m11, self.ms, self.md, self.m12, self.m21, self.m22,
        ]
    }

    pub fn from_array(a: [f64; 8]) -> Self {
        Self {
            m10: a[0],
            m01: a[1],
            m11: a[2],
            ms: a[3],
            md: a[4],
            m12: a[5],
            m21: a[6],
            m22: a[7],
        }
    }
}

/// Half-collision moments of one node.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct HalfMoments {
    pub m10: f64,
    pub m01: f64,
    pub ms: f64,
    pub md: f64,
    pub m11: f64,
}

/// Collision of one node: half force, relaxation, half force.
/// Returns the post-collision moments and the half-collision values.
#[inline]
pub fn collide_cell(m: &Moments, f_eff: [f64; 2], params: &ElasticParams) -> (Moments, HalfMoments) {
    let h = params.half_force_scale();
    let kd = params.bar_d_factor();
    let bar = HalfMoments {
        m10: m.m10 + h * f_eff[0],
        m01: m.m01 + h * f_eff[1],
        ms: params.bar_s_factor() * m.ms,
        md: kd * m.md,
        m11: kd * m.m11,
    };
    let post = Moments {
        m10: bar.m10 + h * f_eff[0],
        m01: bar.m01 + h * f_eff[1],
        m11: 2.0 * bar.m11 - m.m11,
        ms: 2.0 * bar.ms - m.ms,
        md: 2.0 * bar.md - m.md,
        m12: bar.m10 / 3.0,
        m21: bar.m01 / 3.0,
        m22: params.m22_factor() * m.ms,
    };
    (post, bar)
}

/// Moment fields plus the half-collision values once they are known.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentField {
    pub m_10: ScalarField,
    pub m_01: ScalarField,
    pub m_11: ScalarField,
    pub m_s: ScalarField,
    pub m_d: ScalarField,
    pub m_12: ScalarField,
    pub m_21: ScalarField,
    pub m_22: ScalarField,
    pub m_f: ScalarField,
    pub bar_m_10: ScalarField,
    pub bar_m_01: ScalarField,
    pub bar_m_s: ScalarField,
    pub bar_m_d: ScalarField,
    pub bar_m_11: ScalarField,
}

impl MomentField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        let z = ScalarField::zeros(nx, ny);
        Self {
            m_10: z.clone(),
            m_01: z.clone(),
            m_11: z.clone(),
            m_s: z.clone(),
            m_d: z.clone(),
            m_12: z.clone(),
            m_21: z.clone(),
            m_22: z.clone(),
            m_f: z.clone(),
            bar_m_10: z.clone(),
            bar_m_01: z.clone(),
            bar_m_s: z.clone(),
            bar_m_d: z.clone(),
            bar_m_11: z,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.m_10.nx, self.m_10.ny)
    }

    pub fn cell(&self, k: usize) -> Moments {
        Moments {
            m10: self.m_10.data[k],
            m01: self.m_01.data[k],
            m11: self.m_11.data[k],
            ms: self.m_s.data[k],
            md: self.m_d.data[k],
            m12: self.m_12.data[k],
            m21: self.m_21.data[k],
            m22: self.m_22.data[k],
        }
    }

    fn set_cell(&mut self, k: usize, m: &Moments, params: &ElasticParams) {
        self.m_10.data[k] = m.m10;
        self.m_01.data[k] = m.m01;
        self.m_11.data[k] = m.m11;
        self.m_s.data[k] = m.ms;
        self.m_d.data[k] = m.md;
        self.m_12.data[k] = m.m12;
        self.m_21.data[k] = m.m21;
        self.m_22.data[k] = m.m22;
        self.m_f.data[k] = m.mf(params);
    }
}

fn require_q8(g: &DistributionField) -> Result<()> {
    if g.set != VelocitySet::D2Q8 {
        return Err(Error::InvalidArgument("elasticity needs D2Q8 distributions".into()));
    }
    Ok(())
}

fn cell_distributions(g: &DistributionField, k: usize) -> [f64; 8] {
    let n = g.nx * g.ny;
    std::array::from_fn(|d| g.values[d * n + k])
}

/// Raw and combined moments of every node.
pub fn moments_forward(g: &DistributionField, params: &ElasticParams) -> Result<MomentField> {
    require_q8(g)?;
    let mut out = MomentField::zeros(g.nx, g.ny);
    for k in 0..g.nx * g.ny {
        let m = Moments::from_distributions(&cell_distributions(g, k));
        out.set_cell(k, &m, params);
    }
    Ok(out)
}

/// Both half-force sub-steps. Returns the moments with `m_10, m_01` holding
/// the post-collision values `m*` and `bar_m_10, bar_m_01` the midpoints.
pub fn half_force(m: &MomentField, f_eff: &VectorField, params: &ElasticParams) -> MomentField {
    let h = params.half_force_scale();
    let mut out = m.clone();
    for k in 0..out.m_10.data.len() {
        let fx = f_eff.x.data[k];
        let fy = f_eff.y.data[k];
        out.bar_m_10.data[k] = m.m_10.data[k] + h * fx;
        out.bar_m_01.data[k] = m.m_01.data[k] + h * fy;
        out.m_10.data[k] = out.bar_m_10.data[k] + h * fx;
        out.m_01.data[k] = out.bar_m_01.data[k] + h * fy;
    }
    out
}

/// Relaxes every non-conserved moment. Expects `half_force` to have run, so
/// that `m_10, m_01` are already post-collision and `bar_m_10, bar_m_01` set.
pub fn collide_moments(m: &MomentField, params: &ElasticParams) -> MomentField {
    let ks = params.bar_s_factor();
    let kd = params.bar_d_factor();
    let k22 = params.m22_factor();
    let mut out = m.clone();
    for k in 0..out.m_s.data.len() {
        let ms = m.m_s.data[k];
        let md = m.m_d.data[k];
        let m11 = m.m_11.data[k];
        out.bar_m_s.data[k] = ks * ms;
        out.bar_m_d.data[k] = kd * md;
        out.bar_m_11.data[k] = kd * m11;
        out.m_s.data[k] = 2.0 * out.bar_m_s.data[k] - ms;
        out.m_d.data[k] = 2.0 * out.bar_m_d.data[k] - md;
        out.m_11.data[k] = 2.0 * out.bar_m_11.data[k] - m11;
        out.m_12.data[k] = m.bar_m_10.data[k] / 3.0;
        out.m_21.data[k] = m.bar_m_01.data[k] / 3.0;
        out.m_22.data[k] = k22 * ms;
        out.m_f.data[k] = 0.0;
    }
    out
}

/// Distributions from (post-collision) moments, using `m_22`.
pub fn back_transform(mstar: &MomentField) -> DistributionField {
    let (nx, ny) = mstar.shape();
    let mut g = DistributionField::zeros(VelocitySet::D2Q8, nx, ny);
    let n = nx * ny;
    for k in 0..n {
        let cell = mstar.cell(k).to_distributions();
        for (d, v) in cell.iter().enumerate() {
            g.values[d * n + k] = *v;
        }
    }
    g
}

/// Displacement `(bar m_10, bar m_01)` and stress
/// `-1/2 [[bar m_s + bar m_d, 2 bar m_11], [2 bar m_11, bar m_s - bar m_d]] / eps`.
pub fn extract_solution(m: &MomentField, params: &ElasticParams) -> (VectorField, StressField) {
    let (nx, ny) = m.shape();
    let eta = VectorField {
        x: m.bar_m_10.clone(),
        y: m.bar_m_01.clone(),
    };
    let mut sigma = StressField::zeros(nx, ny);
    let scale = -0.5 / params.eps;
    for k in 0..nx * ny {
        let s = m.bar_m_s.data[k];
        let d = m.bar_m_d.data[k];
        sigma.xx.data[k] = scale * (s + d);
        sigma.xy.data[k] = scale * 2.0 * m.bar_m_11.data[k];
        sigma.yy.data[k] = scale * (s - d);
    }
    (eta, sigma)
}

/// `-bar m_s / (2 (lambda + mu))`, the divergence of the displacement in
/// lattice units (`eps` times the physical divergence).
pub fn divergence_eta(m: &MomentField, params: &ElasticParams) -> ScalarField {
    let c = -1.0 / (2.0 * (params.lam + params.mu));
    let mut out = m.bar_m_s.clone();
    for v in &mut out.data {
        *v *= c;
    }
    out
}

/// Initial moments `m_{10,01} = -eps^2/2 f`, `m_{12,21} = -eps^2/6 f`, others
/// zero, which make the displacement vanish after the first half force.
pub fn elastic_init(f_eff0: &VectorField, params: &ElasticParams) -> DistributionField {
    let (nx, ny) = (f_eff0.x.nx, f_eff0.x.ny);
    let e2 = params.eps * params.eps;
    let mut m = MomentField::zeros(nx, ny);
    for k in 0..nx * ny {
        let f = [f_eff0.x.data[k], f_eff0.y.data[k]];
        m.m_10.data[k] = -0.5 * e2 * f[0];
        m.m_01.data[k] = -0.5 * e2 * f[1];
        m.m_12.data[k] = -e2 / 6.0 * f[0];
        m.m_21.data[k] = -e2 / 6.0 * f[1];
    }
    back_transform(&m)
}

/// Distributions and divergence history of the elasticity sub-problem.
#[derive(Clone, Debug)]
pub struct ElasticState {
    pub g: DistributionField,
    /// Post-collision distributions of the previous pseudo step.
    pub g_prev: DistributionField,
    /// Lattice divergence from the latest collision.
    pub div_eta: ScalarField,
    pub div_eta_prev_tau: ScalarField,
    /// Divergence at `t - dt`.
    pub div_eta_prev_t: ScalarField,
    /// Divergence at `t - 2 dt`.
    pub div_eta_prev_t2: ScalarField,
    pub params: ElasticParams,
}

impl ElasticState {
    /// State built from initial distributions. The divergence history is
    /// seeded with the divergence of `g`, so the first backward difference
    /// vanishes.
    pub fn new(g: DistributionField, params: ElasticParams) -> Result<Self> {
        require_q8(&g)?;
        let ms = moments_forward(&g, &params)?;
        let kv = params.div_factor();
        let mut div = ms.m_s.clone();
        for v in &mut div.data {
            *v *= -kv;
        }
        Ok(Self {
            g_prev: g.clone(),
            g,
            div_eta: div.clone(),
            div_eta_prev_tau: div.clone(),
            div_eta_prev_t: div.clone(),
            div_eta_prev_t2: div,
            params,
        })
    }
}

/// Fused moments, collision and back-transform. Writes `g*` and the lattice
/// lattice divergence of every node.
pub(crate) fn collide_into(
    g: &DistributionField,
    fx: &[f64],
    fy: &[f64],
    params: &ElasticParams,
    g_star: &mut DistributionField,
    div: &mut [f64],
    threaded: bool,
) {
    let (nx, ny) = (g.nx, g.ny);
    let n = nx * ny;
    let kv = params.div_factor();
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
            let (post, _) = collide_cell(&m, [fx[base + i], fy[base + i]], params);
            div_row[i] = -kv * m.ms;
            let gs = post.to_distributions();
            for d in 0..8 {
                out[d][i] = gs[d];
            }
        }
    });
}

/// Fields extracted from converged distributions.
#[derive(Clone, Debug, PartialEq)]
pub struct ElasticSolution {
    pub eta: VectorField,
    pub sigma: StressField,
    /// Lattice divergence, `eps` times the physical one.
    pub div_eta: ScalarField,
}

/// Displacement, stress and divergence carried by `g` under force `f_eff`.
pub fn solution_from(g: &DistributionField, f_eff: &VectorField, params: &ElasticParams) -> Result<ElasticSolution> {
    let m = moments_forward(g, params)?;
    let forced = half_force(&m, f_eff, params);
    let collided = collide_moments(&forced, params);
    let (eta, sigma) = extract_solution(&collided, params);
    Ok(ElasticSolution {
        eta,
        sigma,
        div_eta: divergence_eta(&collided, params),
    })
}

/// Stand-alone pseudo-time solver for a fixed force.
#[derive(Clone, Debug)]
pub struct ElasticSolver {
    pub grid: Grid,
    pub g: DistributionField,
    pub g_prev: DistributionField,
    pub params: ElasticParams,
    pub boundary: ElasticBoundary,
    /// Physical time at which boundary data are evaluated.
    pub t: f64,
    g_star: DistributionField,
    div: Vec<f64>,
    threaded: bool,
}

impl ElasticSolver {
    pub fn new(grid: Grid, params: ElasticParams, g0: DistributionField, boundary: ElasticBoundary) -> Result<Self> {
        require_q8(&g0)?;
        boundary.validate()?;
        Ok(Self {
            grid,
            g_prev: g0.clone(),
            g_star: g0.clone(),
            g: g0,
            params,
            boundary,
            t: 0.0,
            div: vec![0.0; grid.cells()],
            threaded: false,
        })
    }

    pub fn with_threads(mut self, threaded: bool) -> Self {
        self.threaded = threaded;
        self
    }

    /// One pseudo step: collide, stream, rebuild wall slots.
    pub fn step(&mut self, f_eff: &VectorField) -> Result<()> {
        let links = elastic_links(&self.boundary, self.params.eps, self.t, &self.grid)?;
        collide_into(
            &self.g,
            &f_eff.x.data,
            &f_eff.y.data,
            &self.params,
            &mut self.g_star,
            &mut self.div,
            self.threaded,
        );
        stream_into(&self.g_star, &mut self.g, self.boundary.wrap(), self.threaded);
        apply_links(&mut self.g, &self.g_star, &self.g_prev, &links);
        std::mem::swap(&mut self.g_prev, &mut self.g_star);
        Ok(())
    }

    pub fn solution(&self, f_eff: &VectorField) -> Result<ElasticSolution> {
        solution_from(&self.g, f_eff, &self.params)
    }

    /// Iterates until the largest displacement change per step is below
    /// `tol`, returning the number of steps taken.
    pub fn relax(&mut self, f_eff: &VectorField, tol: f64, max_steps: usize) -> Result<usize> {
        let mut last = self.solution(f_eff)?.eta;
        for step in 1..=max_steps {
            self.step(f_eff)?;
            if step % 16 != 0 {
                continue;
            }
            let eta = self.solution(f_eff)?.eta;
            let change = eta
                .x
                .data
                .iter()
                .zip(&last.x.data)
                .chain(eta.y.data.iter().zip(&last.y.data))
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
                / 16.0;
            if !change.is_finite() {
                return Err(Error::Divergence {
                    t: self.t,
                    tau: step,
                    field: "eta".into(),
                    reason: "non-finite displacement".into(),
                });
            }
            if change < tol {
                return Ok(step);
            }
            last = eta;
        }
        Ok(max_steps)
    }
}
