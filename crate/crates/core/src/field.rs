//! Dense cell-centred fields.

use crate::lattice::Grid;

/// Row-major scalar field, `data[j * nx + i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self::constant(nx, ny, 0.0)
    }

    pub fn constant(nx: usize, ny: usize, value: f64) -> Self {
        Self {
            nx,
            ny,
            data: vec![value; nx * ny],
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::zeros(grid.nx, grid.ny)
    }

    /// Samples `f(x)` at every node of `grid`.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let mut out = Self::for_grid(grid);
        out.fill_from(grid, f);
        out
    }

    pub fn fill_from(&mut self, grid: &Grid, f: impl Fn([f64; 2]) -> f64) {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                self.data[j * grid.nx + i] = f(grid.position(i, j));
            }
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.nx + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[j * self.nx + i] = value;
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.nx..(j + 1) * self.nx]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub x: ScalarField,
    pub y: ScalarField,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            x: ScalarField::zeros(nx, ny),
            y: ScalarField::zeros(nx, ny),
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::zeros(grid.nx, grid.ny)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 2]) -> Self {
        let mut out = Self::for_grid(grid);
        out.fill_from(grid, f);
        out
    }

    pub fn fill_from(&mut self, grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 2]) {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [a, b] = f(grid.position(i, j));
                self.x.set(i, j, a);
                self.y.set(i, j, b);
            }
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> [f64; 2] {
        [self.x.get(i, j), self.y.get(i, j)]
    }
}

/// Symmetric 2x2 tensor field stored by its three independent components.
#[derive(Clone, Debug, PartialEq)]
pub struct StressField {
    pub xx: ScalarField,
    pub xy: ScalarField,
    pub yy: ScalarField,
}

impl StressField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Self {
            xx: ScalarField::zeros(nx, ny),
            xy: ScalarField::zeros(nx, ny),
            yy: ScalarField::zeros(nx, ny),
        }
    }

    pub fn for_grid(grid: &Grid) -> Self {
        Self::zeros(grid.nx, grid.ny)
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 3]) -> Self {
        let mut out = Self::for_grid(grid);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let [a, b, c] = f(grid.position(i, j));
                out.xx.set(i, j, a);
                out.xy.set(i, j, b);
                out.yy.set(i, j, c);
            }
        }
        out
    }

    pub fn components(&self) -> [&ScalarField; 3] {
        [&self.xx, &self.xy, &self.yy]
    }
}
