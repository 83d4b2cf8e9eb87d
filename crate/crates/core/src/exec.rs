//! Row-level execution policy shared by the per-cell kernels.
//!
//! Every kernel in the solver is a loop over grid rows whose iterations write
//! disjoint output rows. With the `parallel` feature the rows are distributed
//! over the rayon pool; without it (or when [`Parallelism::Sequential`] is
//! requested) the same closure runs in a plain loop, so both paths produce
//! bitwise identical results.

use serde::{Deserialize, Serialize};

/// Grids smaller than this run sequentially under [`Parallelism::Auto`].
pub const AUTO_PARALLEL_MIN_CELLS: usize = 64 * 64;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parallelism {
    /// Threads for large grids, a plain loop for small ones.
    #[default]
    Auto,
    Sequential,
    Parallel,
}

impl Parallelism {
    /// Whether a kernel over `cells` lattice nodes should use the thread pool.
    pub fn threaded(self, cells: usize) -> bool {
        let available = cfg!(feature = "parallel");
        match self {
            Parallelism::Sequential => false,
            Parallelism::Parallel => available,
            Parallelism::Auto => available && cells >= AUTO_PARALLEL_MIN_CELLS,
        }
    }
}

impl std::str::FromStr for Parallelism {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s {
            "auto" => Ok(Parallelism::Auto),
            "sequential" => Ok(Parallelism::Sequential),
            "parallel" => Ok(Parallelism::Parallel),
            _ => Err(crate::Error::Config(format!("unknown parallelism `{s}`"))),
        }
    }
}

/// Runs `f(row_index, item)` for every item, in parallel when `threaded`.
pub(crate) fn for_each_row<T, F>(items: Vec<T>, threaded: bool, f: F)
where
    T: Send,
    F: Fn(usize, T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if threaded {
        use rayon::prelude::*;
        items
            .into_par_iter()
            .enumerate()
            .for_each(|(j, item)| f(j, item));
        return;
    }
    let _ = threaded;
    for (j, item) in items.into_iter().enumerate() {
        f(j, item);
    }
}

/// Splits `Q` contiguous planes of `nx * ny` values into per-row groups of
/// mutable slices, one array of `Q` row slices per grid row.
pub(crate) fn plane_rows<const Q: usize>(
    data: &mut [f64],
    nx: usize,
    ny: usize,
) -> Vec<[&mut [f64]; Q]> {
    debug_assert_eq!(data.len(), Q * nx * ny);
    let mut rows: Vec<std::slice::ChunksMut<'_, f64>> =
        data.chunks_mut(nx * ny).map(|plane| plane.chunks_mut(nx)).collect();
    (0..ny)
        .map(|_| std::array::from_fn(|d| rows[d].next().expect("row count")))
        .collect()
}
