//! Terzaghi consolidation of a column loaded from above, posed on a strip a
//! few cells wide with periodic sides.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{AnalyticalFields, DomainShape, DtRule, PhysicalParams, ProblemDefinition, Scaling};
use crate::boundary::{BoundarySpec, ElasticCondition, FlowCondition};
use crate::error::{Error, Result};

/// Default truncation threshold on the series term envelope.
pub const SERIES_TOLERANCE: f64 = 1e-14;
const MAX_TERMS: usize = 1_000_000;
/// Below this value of `c_f t` the series are replaced by their limits.
const SHORT_TIME: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerzaghiConstants {
    pub alpha: f64,
    pub lam: f64,
    pub mu: f64,
    pub kappa: f64,
    /// Applied load `varpi = alpha + (lambda + 2 mu) / alpha`.
    pub load: f64,
    pub c_f: f64,
    pub p0: f64,
    pub s0: f64,
    pub s_inf: f64,
}

impl TerzaghiConstants {
    /// Constants for `E = 1`, `nu = 0.8` and the permeability
    /// `kappa = (25 + 9 alpha^2) / 25`.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Biot-Willis coefficient must lie in (0, 1], got {alpha}"
            )));
        }
        let lam = 20.0 / 9.0;
        let mu = 5.0 / 18.0;
        let m = lam + 2.0 * mu;
        let kappa = (25.0 + 9.0 * alpha * alpha) / 25.0;
        let load = alpha + m / alpha;
        let undrained = m + alpha * alpha;
        Ok(Self {
            alpha,
            lam,
            mu,
            kappa,
            load,
            c_f: m * kappa / undrained,
            p0: alpha * load / undrained,
            s0: load / undrained,
            s_inf: load / m,
        })
    }

    /// Displacement right after loading, `(0, -p0 x2 / alpha)`.
    pub fn instantaneous_displacement(&self, x2: f64) -> [f64; 2] {
        [0.0, -self.p0 * x2 / self.alpha]
    }
}

fn check_time(t: f64, tol: f64) -> Result<()> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!(
            "series solution needs t > 0, got {t}; use p0 / S0 for the instantaneous response"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("series tolerance must be positive, got {tol}")));
    }
    Ok(())
}

/// Sums `term(k)` until the envelope `bound(k)` drops below `tol`.
fn sum_series(tol: f64, term: impl Fn(f64) -> f64, bound: impl Fn(f64) -> f64) -> f64 {
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        let kh = k as f64 + 0.5;
        sum += term(kh);
        if bound(kh) < tol {
            break;
        }
    }
    sum
}

/// Pore pressure at height `x2` and time `t > 0`.
pub fn terzaghi_pressure(t: f64, x2: f64, c: &TerzaghiConstants, tol: f64) -> Result<f64> {
    check_time(t, tol)?;
    if !(-1e-12..=1.0 + 1e-12).contains(&x2) {
        return Err(Error::Domain(format!("height must lie in [0, 1], got {x2}")));
    }
    let ct = c.c_f * t;
    if ct < SHORT_TIME {
        return Ok(if x2 < 1.0 { c.p0 } else { 0.0 });
    }
    let sum = sum_series(
        tol,
        |kh| {
            let sign = if (kh - 0.5) as u64 % 2 == 0 { 1.0 } else { -1.0 };
            2.0 * sign / (kh * PI) * (-kh * kh * PI * PI * ct).exp() * (kh * PI * x2).cos()
        },
        |kh| 2.0 / (kh * PI) * (-kh * kh * PI * PI * ct).exp(),
    );
    Ok(c.p0 * sum)
}

/// Surface subsidence `S(t)` for `t > 0`.
pub fn terzaghi_subsidence(t: f64, c: &TerzaghiConstants, tol: f64) -> Result<f64> {
    check_time(t, tol)?;
    let ct = c.c_f * t;
    if ct < SHORT_TIME {
        return Ok(c.s0);
    }
    let sum = sum_series(
        tol,
        |kh| 2.0 / (kh * kh * PI * PI) * (-kh * kh * PI * PI * ct).exp(),
        |kh| 2.0 / (kh * kh * PI * PI) * (-kh * kh * PI * PI * ct).exp(),
    );
    Ok(c.s_inf + (c.s0 - c.s_inf) * sum)
}

/// Column of `width_cells` lattice cells, drained and loaded at the top,
/// fixed and impermeable at the bottom.
pub fn terzaghi_problem(alpha: f64, width_cells: usize) -> Result<ProblemDefinition> {
    let c = TerzaghiConstants::new(alpha)?;
    if width_cells == 0 {
        return Err(Error::InvalidArgument("column width must be at least one cell".into()));
    }
    let load = c.load;
    let flow_boundary = BoundarySpec {
        left: FlowCondition::Periodic,
        right: FlowCondition::Periodic,
        bottom: FlowCondition::NoFlow,
        top: FlowCondition::DirichletPressure(Arc::new(|_, _| 0.0)),
    };
    let elastic_boundary = BoundarySpec {
        left: ElasticCondition::Periodic,
        right: ElasticCondition::Periodic,
        bottom: ElasticCondition::DirichletDisplacement(Arc::new(|_, _| [0.0, 0.0])),
        top: ElasticCondition::Traction(Arc::new(move |_, _| [0.0, -load])),
    };
    let pressure = Arc::new(move |t: f64, x: [f64; 2]| {
        if t <= 0.0 {
            0.0
        } else {
            terzaghi_pressure(t, x[1].clamp(0.0, 1.0), &c, SERIES_TOLERANCE).unwrap_or(f64::NAN)
        }
    });
    let subsidence = Arc::new(move |t: f64| {
        if t <= 0.0 {
            0.0
        } else {
            terzaghi_subsidence(t, &c, SERIES_TOLERANCE).unwrap_or(f64::NAN)
        }
    });
    Ok(ProblemDefinition {
        name: "terzaghi".into(),
        params: PhysicalParams {
            lam: c.lam,
            mu: c.mu,
            kappa: c.kappa,
            alpha,
            c0: None,
        },
        shape: DomainShape::Column { width_cells },
        t_final: 1.0,
        dt_rule: DtRule::Scaled(0.25),
        flow_boundary,
        elastic_boundary,
        force: None,
        source: None,
        fluid_force_divergence: None,
        exact: AnalyticalFields {
            pressure: Some(pressure),
            displacement: None,
            stress: None,
            subsidence: Some(subsidence),
            terzaghi: Some(c),
            // The data jump at t = 0; errors start after the first step.
            first_error_step: 1,
        },
        scaling: Scaling::IDENTITY,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn constants_at_full_coupling() {
        let c = TerzaghiConstants::new(1.0).unwrap();
        assert!(close(c.kappa, 34.0 / 25.0, 1e-15));
        assert!(close(c.load, 34.0 / 9.0, 1e-14));
        assert!(close(c.p0, 1.0, 1e-14));
        for alpha in [0.8, 0.9, 1.0] {
            let c = TerzaghiConstants::new(alpha).unwrap();
            let m = c.lam + 2.0 * c.mu;
            assert!(close(c.c_f, m * c.kappa / (m + alpha * alpha), 1e-15));
            assert!(close(c.s0, c.load / (m + alpha * alpha), 1e-15));
            assert!(close(c.s_inf, c.load / m, 1e-15));
            // The permeability choice makes c_f = 1 for every alpha.
            assert!(close(c.c_f, 1.0, 1e-14));
        }
        assert!(TerzaghiConstants::new(0.0).is_err());
    }

    #[test]
    fn pressure_examples() {
        let c = TerzaghiConstants::new(1.0).unwrap();
        for t in [1e-3, 0.1, 1.0] {
            assert!(terzaghi_pressure(t, 1.0, &c, SERIES_TOLERANCE).unwrap().abs() < 1e-12);
        }
        // Short-time limit approached by the full sum of 1e5 terms.
        let p = terzaghi_pressure(1e-8, 0.5, &c, SERIES_TOLERANCE).unwrap();
        assert!(close(p, c.p0, 1e-6), "{p}");
        // Single-mode decay at c_f t = 1.
        let t = 1.0 / c.c_f;
        let lead = c.p0 * 4.0 / PI * (-PI * PI * c.c_f * t / 4.0).exp() * (PI * 0.3 / 2.0).cos();
        assert!(close(terzaghi_pressure(t, 0.3, &c, SERIES_TOLERANCE).unwrap(), lead, 1e-4));
        assert!(terzaghi_pressure(0.0, 0.5, &c, SERIES_TOLERANCE).is_err());
        assert!(terzaghi_pressure(-1.0, 0.5, &c, SERIES_TOLERANCE).is_err());
    }

    #[test]
    fn subsidence_limits() {
        let c = TerzaghiConstants::new(0.9).unwrap();
        assert!(close(terzaghi_subsidence(1e3, &c, SERIES_TOLERANCE).unwrap(), c.s_inf, 1e-14));
        assert!(close(terzaghi_subsidence(1e-9, &c, SERIES_TOLERANCE).unwrap(), c.s0, 1e-4));
        assert!(close(terzaghi_subsidence(1e-13, &c, SERIES_TOLERANCE).unwrap(), c.s0, 0.0));
        // sum 2 / ((k + 1/2)^2 pi^2) = 1
        let total: f64 = (0..200_000)
            .map(|k| 2.0 / ((k as f64 + 0.5).powi(2) * PI * PI))
            .sum();
        assert!(close(total, 1.0, 1e-5));
    }

    #[test]
    fn subsidence_increases_monotonically() {
        for alpha in [0.8, 0.9, 1.0] {
            let c = TerzaghiConstants::new(alpha).unwrap();
            let mut last = 0.0;
            for k in 1..=400 {
                let t = 1e-5 * 1.03f64.powi(k);
                let s = terzaghi_subsidence(t, &c, SERIES_TOLERANCE).unwrap();
                assert!(s >= last, "alpha {alpha}, t {t}");
                assert!(s <= c.s_inf + 1e-14);
                last = s;
            }
        }
    }

    #[test]
    fn pressure_solves_heat_equation() {
        let c = TerzaghiConstants::new(1.0).unwrap();
        let p = |t: f64, x: f64| terzaghi_pressure(t, x, &c, SERIES_TOLERANCE).unwrap();
        let (ht, hx) = (1e-4, 1e-3);
        for &t in &[0.05, 0.1, 0.3, 0.7] {
            for &x in &[0.1, 0.35, 0.6, 0.9] {
                let dt = (-p(t + 2.0 * ht, x) + 8.0 * p(t + ht, x) - 8.0 * p(t - ht, x) + p(t - 2.0 * ht, x))
                    / (12.0 * ht);
                let dxx = (-p(t, x + 2.0 * hx) + 16.0 * p(t, x + hx) - 30.0 * p(t, x) + 16.0 * p(t, x - hx)
                    - p(t, x - 2.0 * hx))
                    / (12.0 * hx * hx);
                let r = dt - c.c_f * dxx;
                assert!(r.abs() < 1e-8, "residual {r} at t={t}, x={x}");
            }
        }
    }

    #[test]
    fn problem_layout() {
        let pb = terzaghi_problem(1.0, 4).unwrap();
        let grid = pb.grid(100, None).unwrap();
        assert_eq!((grid.nx, grid.ny), (4, 100));
        assert!(close(grid.dt, 0.25e-4, 1e-18));
        assert_eq!(pb.exact.first_error_step, 1);
        assert!(terzaghi_problem(1.0, 0).is_err());
    }
}
