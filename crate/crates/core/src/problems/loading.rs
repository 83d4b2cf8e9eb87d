//! Two-dimensional consolidation under a cosine-shaped surface load.
//!
//! The problem is stated in dimensional units on `(0, 100)^2` up to
//! `t_f = 2e6`. It is solved in dimensionless form with `L = H = 100`,
//! `T = t_f` and `P = 1/c0`.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{AnalyticalFields, DomainShape, DtRule, PhysicalParams, ProblemDefinition, Scaling};
use crate::boundary::{BoundarySpec, ElasticCondition, FlowCondition};
use crate::error::Result;

pub const LOADING_HEIGHT: f64 = 100.0;
pub const LOADING_TIME: f64 = 2e6;
pub const LOADING_C0: f64 = 1e-6;
const YOUNG: f64 = 1e5;
const POISSON: f64 = 0.9;
const PERMEABILITY: f64 = 1e-9;

/// Dimensional surface traction at horizontal position `x1`.
pub fn loading_traction(x1: f64) -> [f64; 2] {
    [0.0, -1e4 * (1.0 - ((x1 + 25.0) / 50.0 * PI).cos())]
}

pub fn loading2d_problem() -> Result<ProblemDefinition> {
    let (lam, mu) = PhysicalParams::lame_from_young(YOUNG, POISSON);
    let length = LOADING_HEIGHT;
    let c0 = LOADING_C0;
    let kappa = LOADING_TIME * PERMEABILITY / (c0 * length * length);
    // sigma_hat = c0 L sigma / H; with L = H this is c0 sigma.
    let traction = Arc::new(move |_t: f64, x: [f64; 2]| {
        let t = loading_traction(x[0] * length);
        [c0 * t[0], c0 * t[1]]
    });
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
        top: ElasticCondition::Traction(traction),
    };
    Ok(ProblemDefinition {
        name: "loading2d".into(),
        params: PhysicalParams {
            lam: c0 * lam,
            mu: c0 * mu,
            kappa,
            alpha: 1.0,
            c0: Some(c0),
        },
        shape: DomainShape::UnitSquare,
        t_final: 1.0,
        dt_rule: DtRule::Viscous,
        flow_boundary,
        elastic_boundary,
        force: None,
        source: None,
        fluid_force_divergence: None,
        exact: AnalyticalFields::default(),
        scaling: Scaling {
            length,
            time: LOADING_TIME,
            pressure: 1.0 / c0,
            displacement: length,
            stress: 1.0 / c0,
        },
    })
}
