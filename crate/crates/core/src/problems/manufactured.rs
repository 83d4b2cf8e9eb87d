//! Periodic problem with a manufactured solution on the unit square.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{AnalyticalFields, DomainShape, DtRule, PhysicalParams, ProblemDefinition, Scaling};
use crate::boundary::{BoundarySpec, ElasticCondition, FlowCondition};
use crate::error::{Error, Result};

/// Material with `E = 0.11`, `nu = 0.8`, `kappa = 1/10`.
fn params(alpha: f64) -> PhysicalParams {
    PhysicalParams {
        lam: 11.0 / 45.0,
        mu: 11.0 / 360.0,
        kappa: 0.1,
        alpha,
        c0: None,
    }
}

pub fn manufactured_problem(alpha: f64) -> Result<ProblemDefinition> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Biot-Willis coefficient must lie in (0, 1], got {alpha}"
        )));
    }
    if !(0.5..=1.0).contains(&alpha) {
        log::warn!("manufactured problem is studied for alpha in [0.5, 1], got {alpha}");
    }
    let p = params(alpha);
    let (lam, mu, kappa) = (p.lam, p.mu, p.kappa);
    let rate = 8.0 * PI * PI * kappa;
    let amp = move |t: f64| 1.0 - (-rate * t).exp();
    let two_pi = 2.0 * PI;
    let b = 16.0 * lam + 30.0 * mu;

    let pressure = Arc::new(move |t: f64, x: [f64; 2]| {
        -b * PI / alpha * amp(t) * (two_pi * x[0]).sin() * (two_pi * x[1]).sin()
    });
    let displacement = Arc::new(move |t: f64, x: [f64; 2]| {
        let (s1, c1) = (two_pi * x[0]).sin_cos();
        let (s2, c2) = (two_pi * x[1]).sin_cos();
        let a = 0.5 * amp(t);
        [9.0 * a * c1 * s2, 7.0 * a * s1 * c2]
    });
    let stress = Arc::new(move |t: f64, x: [f64; 2]| {
        let (s1, c1) = (two_pi * x[0]).sin_cos();
        let (s2, c2) = (two_pi * x[1]).sin_cos();
        let a = 0.5 * amp(t);
        [
            -(32.0 * PI * lam + 36.0 * PI * mu) * a * s1 * s2,
            32.0 * PI * mu * a * c1 * c2,
            -(32.0 * PI * lam + 28.0 * PI * mu) * a * s1 * s2,
        ]
    });
    let force = Arc::new(move |t: f64, x: [f64; 2]| {
        let a = 0.5 * amp(t);
        [16.0 * PI * PI * mu * a * (two_pi * x[0]).cos() * (two_pi * x[1]).sin(), 0.0]
    });
    let source = Arc::new(move |t: f64, x: [f64; 2]| {
        -8.0 * PI.powi(3) * kappa * (16.0 * alpha * (-rate * t).exp() + b / alpha)
            * (two_pi * x[0]).sin()
            * (two_pi * x[1]).sin()
    });

    Ok(ProblemDefinition {
        name: "manufactured".into(),
        params: p,
        shape: DomainShape::UnitSquare,
        t_final: 1.0,
        dt_rule: DtRule::Viscous,
        flow_boundary: BoundarySpec::uniform(FlowCondition::Periodic),
        elastic_boundary: BoundarySpec::uniform(ElasticCondition::Periodic),
        force: Some(force),
        source: Some(source),
        fluid_force_divergence: None,
        exact: AnalyticalFields {
            pressure: Some(pressure),
            displacement: Some(displacement),
            stress: Some(stress),
            subsidence: None,
            terzaghi: None,
            first_error_step: 0,
        },
        scaling: Scaling::IDENTITY,
    })
}
