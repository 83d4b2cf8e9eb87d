//! Result files: field dumps, step logs, run summaries and sweep tables.
//!
//! Field files are written in the units of the original problem statement
//! (see [`Scaling`]); logs and summaries stay dimensionless.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::driver::{FieldSnapshot, OutputFormat, RunOutput, RunSummary, StepRecord, SweepRow};
use crate::error::Result;
use crate::lattice::Grid;
use crate::problems::Scaling;

/// Decimal rendering that round-trips every `f64`.
pub fn exact(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(exact).unwrap_or_default()
}

pub fn write_fields_csv(path: &Path, snap: &FieldSnapshot, grid: &Grid, scaling: &Scaling) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "i,j,x,y,p,eta1,eta2,sig11,sig12,sig22")?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let [x, y] = grid.position(i, j);
            let k = grid.index(i, j);
            let vals = [
                x * scaling.length,
                y * scaling.length,
                snap.pressure.data[k] * scaling.pressure,
                snap.eta.x.data[k] * scaling.displacement,
                snap.eta.y.data[k] * scaling.displacement,
                snap.sigma.xx.data[k] * scaling.stress,
                snap.sigma.xy.data[k] * scaling.stress,
                snap.sigma.yy.data[k] * scaling.stress,
            ];
            write!(w, "{i},{j}")?;
            for v in vals {
                write!(w, ",{}", exact(v))?;
            }
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Legacy VTK structured points, ASCII, one point per cell centre.
pub fn write_fields_vtk(path: &Path, snap: &FieldSnapshot, grid: &Grid, scaling: &Scaling) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let n = grid.cells();
    let [x0, y0] = grid.position(0, 0);
    let h = grid.dx * scaling.length;
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "porolbm step {} t {}", snap.step, exact(snap.t * scaling.time))?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET STRUCTURED_POINTS")?;
    writeln!(w, "DIMENSIONS {} {} 1", grid.nx, grid.ny)?;
    writeln!(w, "ORIGIN {} {} 0", exact(x0 * scaling.length), exact(y0 * scaling.length))?;
    writeln!(w, "SPACING {} {} 1", exact(h), exact(h))?;
    writeln!(w, "POINT_DATA {n}")?;
    writeln!(w, "SCALARS p double 1")?;
    writeln!(w, "LOOKUP_TABLE default")?;
    for v in &snap.pressure.data {
        writeln!(w, "{}", exact(v * scaling.pressure))?;
    }
    writeln!(w, "VECTORS eta double")?;
    for k in 0..n {
        let d = scaling.displacement;
        writeln!(w, "{} {} 0", exact(snap.eta.x.data[k] * d), exact(snap.eta.y.data[k] * d))?;
    }
    writeln!(w, "TENSORS sigma double")?;
    for k in 0..n {
        let s = scaling.stress;
        let (a, b, c) = (
            exact(snap.sigma.xx.data[k] * s),
            exact(snap.sigma.xy.data[k] * s),
            exact(snap.sigma.yy.data[k] * s),
        );
        writeln!(w, "{a} {b} 0\n{b} {c} 0\n0 0 0")?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_errors_csv(path: &Path, steps: &[StepRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "step,t,p_error,eta_error,sigma_error,subsidence,subsidence_exact,max_p,max_eta,max_sigma"
    )?;
    for s in steps {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            s.step,
            exact(s.t),
            opt(s.p_error),
            opt(s.eta_error),
            opt(s.sigma_error),
            exact(s.subsidence),
            opt(s.subsidence_exact),
            exact(s.max_p),
            exact(s.max_eta),
            exact(s.max_sigma)
        )?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary(path: &Path, summary: &RunSummary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary)?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<RunSummary> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

/// Writes `summary.json`, `errors.csv` and the requested field snapshots
/// into `dir`. Returns the paths written.
pub fn write_run(dir: &Path, out: &RunOutput, format: OutputFormat) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let summary = dir.join("summary.json");
    write_summary(&summary, &out.summary)?;
    written.push(summary);
    let errors = dir.join("errors.csv");
    write_errors_csv(&errors, &out.steps)?;
    written.push(errors);
    for snap in &out.snapshots {
        if format.csv() {
            let p = dir.join(format!("fields_t{}.csv", snap.step));
            write_fields_csv(&p, snap, &out.grid, &out.scaling)?;
            written.push(p);
        }
        if format.vtk() {
            let p = dir.join(format!("fields_t{}.vtk", snap.step));
            write_fields_vtk(&p, snap, &out.grid, &out.scaling)?;
            written.push(p);
        }
    }
    Ok(written)
}

pub fn write_sweep_csv(path: &Path, rows: &[SweepRow]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "nx,ne,n_e,r,diverged,e_p,e_eta,e_sigma,order_p,order_eta,order_sigma")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.nx,
            r.ne,
            r.n_e,
            r.r,
            r.diverged,
            opt(r.e_p),
            opt(r.e_eta),
            opt(r.e_sigma),
            opt(r.order_p),
            opt(r.order_eta),
            opt(r.order_sigma)
        )?;
    }
    w.flush()?;
    Ok(())
}
