//! Discrete `L2` error norms in space and in space-time.

use serde::{Deserialize, Serialize};

use super::AnalyticalFields;
use crate::field::{ScalarField, StressField, VectorField};
use crate::lattice::Grid;

/// Numerical fields at time level `step`.
#[derive(Clone, Copy, Debug)]
pub struct Snapshot<'a> {
    pub step: usize,
    pub t: f64,
    pub pressure: &'a ScalarField,
    pub eta: &'a VectorField,
    pub sigma: &'a StressField,
}

/// Absolute and relative space-time error of one quantity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldErrors {
    pub absolute: f64,
    /// `None` when the reference norm vanishes.
    pub relative: Option<f64>,
}

/// Spatial errors at one time level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepErrors {
    pub step: usize,
    pub t: f64,
    pub p: Option<f64>,
    pub eta: Option<f64>,
    pub sigma: Option<f64>,
    /// Average of `-eta_2` over the top row of cells.
    pub subsidence: f64,
    pub subsidence_exact: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub steps: Vec<StepErrors>,
    pub p: Option<FieldErrors>,
    pub eta: Option<FieldErrors>,
    pub sigma: Option<FieldErrors>,
    pub subsidence: Option<FieldErrors>,
}

/// `log2(e_coarse / e_fine)` for a halved lattice width.
pub fn observed_order(coarse: f64, fine: f64) -> f64 {
    (coarse / fine).log2()
}

/// `dx (sum_m v_m^2)^{1/2}`.
pub fn l2_norm(values: &[f64], dx: f64) -> f64 {
    dx * values.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Clone, Copy, Debug, Default)]
struct Sums {
    err: f64,
    reference: f64,
    used: bool,
}

impl Sums {
    fn add(&mut self, err: f64, reference: f64) {
        self.err += err * err;
        self.reference += reference * reference;
        self.used = true;
    }

    fn finish(&self, dt: f64) -> Option<FieldErrors> {
        if !self.used {
            return None;
        }
        let absolute = dt * self.err.sqrt();
        let reference = dt * self.reference.sqrt();
        Some(FieldErrors {
            absolute,
            relative: (reference > 0.0).then(|| absolute / reference),
        })
    }
}

/// Running accumulation of per-step errors against the reference solution.
pub struct ErrorAccumulator<'a> {
    exact: &'a AnalyticalFields,
    grid: Grid,
    steps: Vec<StepErrors>,
    p: Sums,
    eta: Sums,
    sigma: Sums,
    subsidence: Sums,
}

impl<'a> ErrorAccumulator<'a> {
    pub fn new(exact: &'a AnalyticalFields, grid: Grid) -> Self {
        Self {
            exact,
            grid,
            steps: Vec::new(),
            p: Sums::default(),
            eta: Sums::default(),
            sigma: Sums::default(),
            subsidence: Sums::default(),
        }
    }

    pub fn push(&mut self, snap: &Snapshot<'_>) -> StepErrors {
        let grid = &self.grid;
        let dx = grid.dx;
        let top = grid.ny - 1;
        let subsidence = -snap.eta.y.row(top).iter().sum::<f64>() / grid.nx as f64;
        let mut out = StepErrors {
            step: snap.step,
            t: snap.t,
            subsidence,
            ..Default::default()
        };
        let counted = snap.step >= self.exact.first_error_step;
        let position = |k: usize| grid.position(k % grid.nx, k / grid.nx);

        if let Some(p) = &self.exact.pressure {
            let (mut e, mut r) = (0.0, 0.0);
            for (k, v) in snap.pressure.data.iter().enumerate() {
                let ex = p(snap.t, position(k));
                e += (v - ex).powi(2);
                r += ex * ex;
            }
            let (e, r) = (dx * e.sqrt(), dx * r.sqrt());
            out.p = Some(e);
            if counted {
                self.p.add(e, r);
            }
        }
        if let Some(eta) = &self.exact.displacement {
            let (mut e, mut r) = (0.0, 0.0);
            for k in 0..grid.cells() {
                let ex = eta(snap.t, position(k));
                e += (snap.eta.x.data[k] - ex[0]).powi(2) + (snap.eta.y.data[k] - ex[1]).powi(2);
                r += ex[0] * ex[0] + ex[1] * ex[1];
            }
            let (e, r) = (dx * e.sqrt(), dx * r.sqrt());
            out.eta = Some(e);
            if counted {
                self.eta.add(e, r);
            }
        }
        if let Some(sigma) = &self.exact.stress {
            let (mut e, mut r) = (0.0, 0.0);
            for k in 0..grid.cells() {
                let ex = sigma(snap.t, position(k));
                let num = [snap.sigma.xx.data[k], snap.sigma.xy.data[k], snap.sigma.yy.data[k]];
                for c in 0..3 {
                    e += (num[c] - ex[c]).powi(2);
                    r += ex[c] * ex[c];
                }
            }
            let (e, r) = (dx * e.sqrt(), dx * r.sqrt());
            out.sigma = Some(e);
            if counted {
                self.sigma.add(e, r);
            }
        }
        if let Some(s) = &self.exact.subsidence {
            let ex = s(snap.t);
            out.subsidence_exact = Some(ex);
            if counted {
                self.subsidence.add(subsidence - ex, ex);
            }
        }
        self.steps.push(out);
        out
    }

    pub fn finish(self) -> ErrorReport {
        let dt = self.grid.dt;
        ErrorReport {
            p: self.p.finish(dt),
            eta: self.eta.finish(dt),
            sigma: self.sigma.finish(dt),
            subsidence: self.subsidence.finish(dt),
            steps: self.steps,
        }
    }
}

/// Errors of a recorded history against the reference solution.
pub fn error_norms(history: &[Snapshot<'_>], exact: &AnalyticalFields, grid: &Grid) -> ErrorReport {
    let mut acc = ErrorAccumulator::new(exact, *grid);
    for snap in history {
        acc.push(snap);
    }
    acc.finish()
}
