//! Velocity sets, grid geometry, distribution storage and streaming.
//!
//! Direction numbering follows the usual D2Q9 convention
//!
//! ```text
//!   6   2   5
//!    \  |  /
//!   3 - 0 - 1
//!    /  |  \
//!   7   4   8
//! ```
//!
//! D2Q8 drops the rest velocity, so D2Q8 index `k` is D2Q9 index `k + 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{for_each_row, plane_rows};

/// Common denominator of all lattice weights.
pub const WEIGHT_DENOMINATOR: i64 = 36;

/// Reserved NaN payload marking distribution slots that streaming could not
/// fill. Boundary schemes must overwrite every one of them.
pub const MISSING: f64 = f64::from_bits(0x7ff8_dead_beef_0001);

/// True when `value` carries the [`MISSING`] sentinel payload.
#[inline]
pub fn is_missing(value: f64) -> bool {
    value.to_bits() == MISSING.to_bits()
}

const Q9_VELOCITIES: [[i32; 2]; 9] = [
    [0, 0],
    [1, 0],
    [0, 1],
    [-1, 0],
    [0, -1],
    [1, 1],
    [-1, 1],
    [-1, -1],
    [1, -1],
];
const Q9_WEIGHTS: [i64; 9] = [16, 4, 4, 4, 4, 1, 1, 1, 1];
const Q9_OPPOSITE: [usize; 9] = [0, 3, 4, 1, 2, 7, 8, 5, 6];

const Q8_OPPOSITE: [usize; 8] = [2, 3, 0, 1, 6, 7, 4, 5];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SetKind {
    Q9,
    Q8,
}

/// A discrete velocity set with rational weights `weight_numerators[i] / 36`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VelocitySet {
    pub kind: SetKind,
    pub velocities: &'static [[i32; 2]],
    pub weight_numerators: &'static [i64],
    pub opposite: &'static [usize],
}

impl VelocitySet {
    pub const D2Q9: VelocitySet = VelocitySet {
        kind: SetKind::Q9,
        velocities: &Q9_VELOCITIES,
        weight_numerators: &Q9_WEIGHTS,
        opposite: &Q9_OPPOSITE,
    };

    /// The reduced set without the rest velocity; weights are the D2Q9 ones.
    pub const D2Q8: VelocitySet = VelocitySet {
        kind: SetKind::Q8,
        velocities: split_rest(&Q9_VELOCITIES),
        weight_numerators: split_rest(&Q9_WEIGHTS),
        opposite: &Q8_OPPOSITE,
    };

    pub fn len(&self) -> usize {
        self.velocities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.velocities.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weight_numerators[i] as f64 / WEIGHT_DENOMINATOR as f64
    }

    pub fn weights(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.weight(i)).collect()
    }

    /// Index of the direction with the given integer velocity.
    pub fn index_of(&self, c: [i32; 2]) -> Option<usize> {
        self.velocities.iter().position(|&v| v == c)
    }
}

const fn split_rest<T>(all: &'static [T; 9]) -> &'static [T] {
    all.split_at(1).1
}

/// Index of the direction opposite to `i`.
pub fn opposite_index(i: usize, set: &VelocitySet) -> Result<usize> {
    set.opposite.get(i).copied().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "direction index {i} out of range for a {}-velocity set",
            set.len()
        ))
    })
}

/// Uniform lattice of `nx * ny` square cells of width `dx`, advanced with time
/// step `dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dt: f64,
    /// Nodes sit at cell centres, half a lattice width away from the walls.
    pub offset: bool,
}

impl Grid {
    pub fn new(nx: usize, ny: usize, dx: f64, dt: f64) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least one cell per axis, got {nx}x{ny}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "grid spacing and time step must be positive, got dx={dx}, dt={dt}"
            )));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            dt,
            offset: true,
        })
    }

    /// Squared lattice speed of sound `dx^2 / (3 dt^2)`.
    pub fn cs2(&self) -> f64 {
        self.dx * self.dx / (3.0 * self.dt * self.dt)
    }

    pub fn cells(&self) -> usize {
        self.nx * self.ny
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    /// Physical position of node `(i, j)`.
    #[inline]
    pub fn position(&self, i: usize, j: usize) -> [f64; 2] {
        let shift = if self.offset { 0.5 } else { 0.0 };
        [
            (i as f64 + shift) * self.dx,
            (j as f64 + shift) * self.dx,
        ]
    }

    /// Physical extent of the lattice.
    pub fn extent(&self) -> [f64; 2] {
        [self.nx as f64 * self.dx, self.ny as f64 * self.dx]
    }
}

/// Direction-major distribution storage: `values[(d * ny + j) * nx + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionField {
    pub set: VelocitySet,
    pub nx: usize,
    pub ny: usize,
    pub values: Vec<f64>,
}

impl DistributionField {
    pub fn zeros(set: VelocitySet, nx: usize, ny: usize) -> Self {
        Self {
            set,
            nx,
            ny,
            values: vec![0.0; set.len() * nx * ny],
        }
    }

    pub fn for_grid(set: VelocitySet, grid: &Grid) -> Self {
        Self::zeros(set, grid.nx, grid.ny)
    }

    #[inline]
    pub fn idx(&self, d: usize, i: usize, j: usize) -> usize {
        (d * self.ny + j) * self.nx + i
    }

    #[inline]
    pub fn get(&self, d: usize, i: usize, j: usize) -> f64 {
        self.values[self.idx(d, i, j)]
    }

    #[inline]
    pub fn set(&mut self, d: usize, i: usize, j: usize, value: f64) {
        let k = self.idx(d, i, j);
        self.values[k] = value;
    }

    pub fn plane(&self, d: usize) -> &[f64] {
        let n = self.nx * self.ny;
        &self.values[d * n..(d + 1) * n]
    }

    pub fn plane_mut(&mut self, d: usize) -> &mut [f64] {
        let n = self.nx * self.ny;
        &mut self.values[d * n..(d + 1) * n]
    }

    /// Sum of one direction's values over the grid.
    pub fn direction_total(&self, d: usize) -> f64 {
        self.plane(d).iter().sum()
    }

    pub fn count_missing(&self) -> usize {
        self.values.iter().filter(|v| is_missing(**v)).count()
    }

    pub fn shape_matches(&self, grid: &Grid) -> bool {
        self.nx == grid.nx && self.ny == grid.ny
    }
}

/// Streams `field` one node along each velocity. Periodic axes wrap; on the
/// other axes the vacated slots are set to [`MISSING`].
pub fn stream(field: &DistributionField, grid: &Grid, wrap: [bool; 2]) -> Result<DistributionField> {
    if !field.shape_matches(grid) {
        return Err(Error::InvalidArgument(format!(
            "field shape {}x{} does not match grid {}x{}",
            field.nx, field.ny, grid.nx, grid.ny
        )));
    }
    let mut out = field.clone();
    stream_into(field, &mut out, wrap, false);
    Ok(out)
}

/// Allocation-free streaming from `src` into `dst` (same shape and set).
pub fn stream_into(src: &DistributionField, dst: &mut DistributionField, wrap: [bool; 2], threaded: bool) {
    debug_assert_eq!(src.values.len(), dst.values.len());
    match src.set.kind {
        SetKind::Q9 => stream_rows::<9>(src, dst, wrap, threaded),
        SetKind::Q8 => stream_rows::<8>(src, dst, wrap, threaded),
    }
}

fn stream_rows<const Q: usize>(
    src: &DistributionField,
    dst: &mut DistributionField,
    wrap: [bool; 2],
    threaded: bool,
) {
    let (nx, ny) = (src.nx, src.ny);
    let velocities = src.set.velocities;
    let rows = plane_rows::<Q>(&mut dst.values, nx, ny);
    for_each_row(rows, threaded, |j, mut out| {
        for (d, out_row) in out.iter_mut().enumerate() {
            let [cx, cy] = velocities[d];
            let js = j as i64 - cy as i64;
            let js = if (0..ny as i64).contains(&js) {
                js as usize
            } else if wrap[1] {
                js.rem_euclid(ny as i64) as usize
            } else {
                out_row.fill(MISSING);
                continue;
            };
            let start = (d * ny + js) * nx;
            let src_row = &src.values[start..start + nx];
            shift_row(src_row, out_row, cx, wrap[0]);
        }
    });
}

#[inline]
fn shift_row(src: &[f64], dst: &mut [f64], cx: i32, wrap: bool) {
    let nx = src.len();
    match cx {
        0 => dst.copy_from_slice(src),
        1 => {
            dst[1..].copy_from_slice(&src[..nx - 1]);
            dst[0] = if wrap { src[nx - 1] } else { MISSING };
        }
        -1 => {
            dst[..nx - 1].copy_from_slice(&src[1..]);
            dst[nx - 1] = if wrap { src[0] } else { MISSING };
        }
        _ => unreachable!("lattice velocities are unit steps"),
    }
}
