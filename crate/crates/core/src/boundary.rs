//! Reconstruction of the distributions that streaming leaves undefined at
//! non-periodic walls.
//!
//! Each wall scheme has the same shape: the slot of the incoming direction
//! `opp(i)` at a wall node is rebuilt from the outgoing direction `i` of the
//! same node,
//!
//! ```text
//! f_opp(i)(x) = sign * source_i(x) + offset
//! ```
//!
//! where `source` is either the current post-collision field or the one from
//! the previous pseudo-step. The walls are compiled into a list of
//! [`BoundaryLink`]s once per (pseudo-)time level and then applied in a tight
//! loop.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{is_missing, DistributionField, Grid, VelocitySet};

/// Scalar boundary or source data `(t, x) -> value`.
pub type ScalarFn = Arc<dyn Fn(f64, [f64; 2]) -> f64 + Send + Sync>;
/// Vector boundary or force data `(t, x) -> value`.
pub type VectorFn = Arc<dyn Fn(f64, [f64; 2]) -> [f64; 2] + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Left,
    Right,
    Bottom,
    Top,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::Left, Edge::Right, Edge::Bottom, Edge::Top];

    /// Outward unit normal.
    pub fn normal(self) -> [i32; 2] {
        match self {
            Edge::Left => [-1, 0],
            Edge::Right => [1, 0],
            Edge::Bottom => [0, -1],
            Edge::Top => [0, 1],
        }
    }

    /// Lattice nodes adjacent to this edge.
    pub fn nodes(self, grid: &Grid) -> Vec<(usize, usize)> {
        match self {
            Edge::Left => (0..grid.ny).map(|j| (0, j)).collect(),
            Edge::Right => (0..grid.ny).map(|j| (grid.nx - 1, j)).collect(),
            Edge::Bottom => (0..grid.nx).map(|i| (i, 0)).collect(),
            Edge::Top => (0..grid.nx).map(|i| (i, grid.ny - 1)).collect(),
        }
    }
}

/// Pressure conditions.
#[derive(Clone)]
pub enum FlowCondition {
    Periodic,
    /// Prescribed pressure `p_D(t, x)`.
    DirichletPressure(ScalarFn),
    /// Homogeneous Neumann (no-flow) wall.
    NoFlow,
}

/// Displacement conditions.
#[derive(Clone)]
pub enum ElasticCondition {
    Periodic,
    /// Prescribed displacement `eta_D(t, x)`.
    DirichletDisplacement(VectorFn),
    /// Prescribed traction `sigma n = t(t, x)`.
    Traction(VectorFn),
}

impl fmt::Debug for FlowCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowCondition::Periodic => "Periodic",
            FlowCondition::DirichletPressure(_) => "DirichletPressure",
            FlowCondition::NoFlow => "NoFlow",
        })
    }
}

impl fmt::Debug for ElasticCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ElasticCondition::Periodic => "Periodic",
            ElasticCondition::DirichletDisplacement(_) => "DirichletDisplacement",
            ElasticCondition::Traction(_) => "Traction",
        })
    }
}

pub trait Condition {
    fn is_periodic(&self) -> bool;
}

impl Condition for FlowCondition {
    fn is_periodic(&self) -> bool {
        matches!(self, FlowCondition::Periodic)
    }
}

impl Condition for ElasticCondition {
    fn is_periodic(&self) -> bool {
        matches!(self, ElasticCondition::Periodic)
    }
}

/// One condition per edge of the rectangular domain.
#[derive(Clone, Debug)]
pub struct BoundarySpec<C> {
    pub left: C,
    pub right: C,
    pub bottom: C,
    pub top: C,
}

pub type FlowBoundary = BoundarySpec<FlowCondition>;
pub type ElasticBoundary = BoundarySpec<ElasticCondition>;

impl<C: Condition> BoundarySpec<C> {
    pub fn uniform(c: C) -> Self
    where
        C: Clone,
    {
        Self {
            left: c.clone(),
            right: c.clone(),
            bottom: c.clone(),
            top: c,
        }
    }

    pub fn edge(&self, edge: Edge) -> &C {
        match edge {
            Edge::Left => &self.left,
            Edge::Right => &self.right,
            Edge::Bottom => &self.bottom,
            Edge::Top => &self.top,
        }
    }

    /// Periodic edges must come in opposing pairs.
    pub fn validate(&self) -> Result<()> {
        if self.left.is_periodic() != self.right.is_periodic() {
            return Err(Error::Boundary(
                "left and right edges must both be periodic or both be walls".into(),
            ));
        }
        if self.bottom.is_periodic() != self.top.is_periodic() {
            return Err(Error::Boundary(
                "bottom and top edges must both be periodic or both be walls".into(),
            ));
        }
        Ok(())
    }

    /// Per-axis periodicity flags for streaming.
    pub fn wrap(&self) -> [bool; 2] {
        [self.left.is_periodic(), self.bottom.is_periodic()]
    }
}

/// Which post-collision field a link reads from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinkSource {
    /// Post-collision distributions of the current step.
    Current,
    /// Post-collision distributions of the previous pseudo-step.
    Previous,
}

/// A single missing slot and the rule that refills it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryLink {
    /// Flat cell index `j * nx + i`.
    pub cell: usize,
    /// Direction whose slot is missing after streaming.
    pub incoming: usize,
    /// Opposite direction that left the node towards the wall.
    pub outgoing: usize,
    pub sign: f64,
    pub source: LinkSource,
    pub offset: f64,
}

/// Visits every (edge, node, outgoing direction) triple where the outgoing
/// velocity crosses a non-periodic edge. Each missing slot is visited once;
/// at corners the first edge in [`Edge::ALL`] order claims it.
fn for_each_wall_crossing<C: Condition>(
    spec: &BoundarySpec<C>,
    set: &VelocitySet,
    grid: &Grid,
    mut visit: impl FnMut(Edge, &C, usize, usize, usize),
) {
    let mut claimed = vec![false; set.len() * grid.cells()];
    for edge in Edge::ALL {
        let cond = spec.edge(edge);
        if cond.is_periodic() {
            continue;
        }
        let n = edge.normal();
        for (i, j) in edge.nodes(grid) {
            for (out, c) in set.velocities.iter().enumerate() {
                if c[0] * n[0] + c[1] * n[1] <= 0 {
                    continue;
                }
                let incoming = set.opposite[out];
                let slot = incoming * grid.cells() + grid.index(i, j);
                if std::mem::replace(&mut claimed[slot], true) {
                    continue;
                }
                visit(edge, cond, i, j, out);
            }
        }
    }
}

/// Midpoint between node `(i, j)` and the wall along direction `c`.
fn face_point(grid: &Grid, i: usize, j: usize, c: [i32; 2]) -> [f64; 2] {
    let [x, y] = grid.position(i, j);
    [
        x + 0.5 * grid.dx * c[0] as f64,
        y + 0.5 * grid.dx * c[1] as f64,
    ]
}

/// Compiles the pressure walls at time `t_next` (the time level the rebuilt
/// distributions belong to).
///
/// Dirichlet walls use the halfway anti-bounce-back rule
/// `f_opp(i) = -f*_i + 2 w_i p_D`; no-flow walls the halfway bounce-back
/// `f_opp(i) = f*_i`.
pub fn flow_links(spec: &FlowBoundary, t_next: f64, grid: &Grid) -> Vec<BoundaryLink> {
    let set = VelocitySet::D2Q9;
    let mut links = Vec::new();
    for_each_wall_crossing(spec, &set, grid, |_, cond, i, j, out| {
        let c = set.velocities[out];
        let (sign, offset) = match cond {
            FlowCondition::DirichletPressure(p_d) => {
                (-1.0, 2.0 * set.weight(out) * p_d(t_next, face_point(grid, i, j, c)))
            }
            FlowCondition::NoFlow => (1.0, 0.0),
            FlowCondition::Periodic => unreachable!(),
        };
        links.push(BoundaryLink {
            cell: grid.index(i, j),
            incoming: set.opposite[out],
            outgoing: out,
            sign,
            source: LinkSource::Current,
            offset,
        });
    });
    links
}

/// Traction correction terms for a wall with outward normal `normal`,
/// keyed by incoming direction.
///
/// The axis direction entering the domain picks up the normal traction
/// component `-n . t`; the two diagonal entering directions pick up
/// `-c1 c2 sigma_12 / 2`, with `sigma_12` recovered from the tangential
/// traction component.
pub fn traction_corrections(normal: [i32; 2], traction: [f64; 2]) -> Result<Vec<([i32; 2], f64)>> {
    let [n1, n2] = normal;
    let shear = match (n1, n2) {
        (1 | -1, 0) => n1 as f64 * traction[1],
        (0, 1 | -1) => n2 as f64 * traction[0],
        _ => {
            return Err(Error::InvalidArgument(format!(
                "traction walls must be axis aligned, got normal {normal:?}"
            )))
        }
    };
    let axis = [-n1, -n2];
    let normal_part = -(n1 as f64 * traction[0] + n2 as f64 * traction[1]);
    let tangent = [n2.abs(), n1.abs()];
    let mut out = vec![(axis, normal_part)];
    for s in [1, -1] {
        let c = [axis[0] + s * tangent[0], axis[1] + s * tangent[1]];
        out.push((c, -0.5 * (c[0] * c[1]) as f64 * shear));
    }
    Ok(out)
}

/// Compiles the displacement walls at time `t` for pseudo-stepping.
///
/// Dirichlet walls use the fullway bounce-back rule
/// `g_opp(c)(tau + 1) = g*_c(tau - 1) - 6 w_c c . eta_D`; traction walls the
/// halfway anti-bounce-back `g_opp(c)(tau + 1) = -g*_c(tau) + eps * corr`.
pub fn elastic_links(spec: &ElasticBoundary, eps: f64, t: f64, grid: &Grid) -> Result<Vec<BoundaryLink>> {
    let set = VelocitySet::D2Q8;
    let mut links = Vec::new();
    let mut failure = None;
    for_each_wall_crossing(spec, &set, grid, |edge, cond, i, j, out| {
        let c = set.velocities[out];
        let incoming = set.opposite[out];
        let x_face = face_point(grid, i, j, c);
        let (sign, source, offset) = match cond {
            ElasticCondition::DirichletDisplacement(eta_d) => {
                let eta = eta_d(t, x_face);
                let proj = c[0] as f64 * eta[0] + c[1] as f64 * eta[1];
                (1.0, LinkSource::Previous, -6.0 * set.weight(out) * proj)
            }
            ElasticCondition::Traction(traction) => {
                let corr = traction_corrections(edge.normal(), traction(t, x_face))
                    .map(|list| {
                        list.into_iter()
                            .find(|(d, _)| *d == set.velocities[incoming])
                            .map_or(0.0, |(_, v)| v)
                    });
                match corr {
                    Ok(v) => (-1.0, LinkSource::Current, eps * v),
                    Err(e) => {
                        failure.get_or_insert(e);
                        (-1.0, LinkSource::Current, 0.0)
                    }
                }
            }
            ElasticCondition::Periodic => unreachable!(),
        };
        links.push(BoundaryLink {
            cell: grid.index(i, j),
            incoming,
            outgoing: out,
            sign,
            source,
            offset,
        });
    });
    match failure {
        Some(e) => Err(e),
        None => Ok(links),
    }
}

/// Applies compiled links to a freshly streamed field.
pub fn apply_links(
    field: &mut DistributionField,
    current: &DistributionField,
    previous: &DistributionField,
    links: &[BoundaryLink],
) {
    let n = field.nx * field.ny;
    for link in links {
        let src = match link.source {
            LinkSource::Current => current,
            LinkSource::Previous => previous,
        };
        field.values[link.incoming * n + link.cell] =
            link.sign * src.values[link.outgoing * n + link.cell] + link.offset;
    }
}

/// Counts sentinel slots left on the wall nodes of `spec`.
pub fn missing_on_walls<C: Condition>(field: &DistributionField, spec: &BoundarySpec<C>, grid: &Grid) -> usize {
    let n = grid.cells();
    let mut count = 0;
    for edge in Edge::ALL {
        if spec.edge(edge).is_periodic() {
            continue;
        }
        for (i, j) in edge.nodes(grid) {
            let cell = grid.index(i, j);
            count += (0..field.set.len())
                .filter(|d| is_missing(field.values[d * n + cell]))
                .count();
        }
    }
    count
}

fn ensure_filled<C: Condition>(field: &DistributionField, spec: &BoundarySpec<C>, grid: &Grid) -> Result<()> {
    match missing_on_walls(field, spec, grid) {
        0 => Ok(()),
        k => Err(Error::Boundary(format!(
            "{k} distribution slots remain unset after applying wall conditions"
        ))),
    }
}

/// Fills the pressure distributions missing after streaming, with boundary
/// data evaluated at `t_next`.
pub fn apply_flow_bcs(
    f: &mut DistributionField,
    f_star: &DistributionField,
    spec: &FlowBoundary,
    t_next: f64,
    grid: &Grid,
) -> Result<()> {
    spec.validate()?;
    let links = flow_links(spec, t_next, grid);
    apply_links(f, f_star, f_star, &links);
    ensure_filled(f, spec, grid)
}

/// Fills the displacement distributions missing after pseudo-streaming.
pub fn apply_elastic_bcs(
    g_new: &mut DistributionField,
    g_star: &DistributionField,
    g_prev: &DistributionField,
    spec: &ElasticBoundary,
    eps: f64,
    t: f64,
    grid: &Grid,
) -> Result<()> {
    spec.validate()?;
    let links = elastic_links(spec, eps, t, grid)?;
    apply_links(g_new, g_star, g_prev, &links);
    ensure_filled(g_new, spec, grid)
}
