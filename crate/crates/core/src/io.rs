//! CSV and JSON exchange formats.
//!
//! * density CSV: header `r,p`, one row per node;
//! * field CSV: header `r,<name>` (used for custom energy densities);
//! * density JSON: `{"bounds": [a, b], "n": n, "values": [...]}`;
//! * trajectory CSV: one [`TrajectoryRecord`] per row, columns in
//!   [`RECORD_COLUMNS`] order.
//!
//! Floats are written in shortest round-trip form, so reading a written
//! file reproduces the in-memory values bit for bit.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::DensityField;
use crate::diagnostics::{TrajectoryRecord, RECORD_COLUMNS};
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::integrator::Trajectory;

/// Two-column CSV with a header row.
pub fn write_field_csv<W: Write>(out: W, name: &str, nodes: &[f64], values: &[f64]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["r", name])?;
    for (r, v) in nodes.iter().zip(values) {
        wtr.serialize((r, v))?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a two-column CSV written by [`write_field_csv`]; returns `(r, values)`.
pub fn read_field_csv<R: Read>(input: R) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.len() != 2 {
        return Err(Error::Parse(format!(
            "expected 2 columns, header has {}",
            headers.len()
        )));
    }
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    for row in rdr.deserialize::<(f64, f64)>() {
        let (r, v) = row.map_err(|e| Error::Parse(e.to_string()))?;
        nodes.push(r);
        values.push(v);
    }
    Ok((nodes, values))
}

pub fn write_density_csv<W: Write>(out: W, p: &DensityField) -> Result<()> {
    write_field_csv(out, "p", p.grid().nodes(), p.values())
}

/// Read node values for `grid` from a two-column CSV, checking that the
/// file's coordinates are the grid nodes.
pub fn read_values_for_grid<R: Read>(input: R, grid: &Grid) -> Result<Vec<f64>> {
    let (nodes, values) = read_field_csv(input)?;
    grid.check_len(&values)?;
    let tol = 1e-9 * (grid.bounds().1 - grid.bounds().0).max(1.0);
    for (i, (a, b)) in nodes.iter().zip(grid.nodes()).enumerate() {
        if (a - b).abs() > tol {
            return Err(Error::Parse(format!(
                "row {i}: coordinate {a} does not match grid node {b}"
            )));
        }
    }
    Ok(values)
}

pub fn save_density_csv(path: &Path, p: &DensityField) -> Result<()> {
    write_density_csv(File::create(path)?, p)
}

pub fn load_values_csv(path: &Path, grid: &Grid) -> Result<Vec<f64>> {
    read_values_for_grid(File::open(path)?, grid)
}

/// JSON form of a density for scenario replay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub bounds: [f64; 2],
    pub n: usize,
    pub values: Vec<f64>,
}

impl DensityJson {
    pub fn from_density(p: &DensityField) -> Self {
        let (a, b) = p.grid().bounds();
        Self {
            bounds: [a, b],
            n: p.grid().len(),
            values: p.values().to_vec(),
        }
    }

    /// Rebuild the grid and validate the density on it.
    pub fn into_density(self, floor: f64) -> Result<DensityField> {
        let grid = Arc::new(Grid::uniform(self.bounds[0], self.bounds[1], self.n)?);
        DensityField::new(grid, self.values, floor)
    }
}

pub fn write_trajectory_csv<W: Write>(out: W, records: &[TrajectoryRecord]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(RECORD_COLUMNS)?;
    for r in records {
        wtr.serialize(r.as_row())?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_trajectory_csv<R: Read>(input: R) -> Result<Vec<TrajectoryRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RECORD_COLUMNS.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected trajectory header {headers:?}"
        )));
    }
    rdr.deserialize::<[f64; 11]>()
        .map(|row| {
            let v = row.map_err(|e| Error::Parse(e.to_string()))?;
            Ok(TrajectoryRecord {
                t: v[0],
                entropy: v[1],
                lyapunov: v[2],
                vdot_analytic: v[3],
                vdot_numeric: v[4],
                mass_residual: v[5],
                energy_residual: v[6],
                dist_l2: v[7],
                dist_linf: v[8],
                angle: v[9],
                gh_moment_k2: v[10],
            })
        })
        .collect()
}

/// Compact JSON summary of a finished run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySummary {
    pub converged: bool,
    pub steps: usize,
    pub final_entropy: f64,
    pub limit_entropy: f64,
    pub final_dist_linf: f64,
    pub final_dist_l2: f64,
    pub final_rhs_norm: f64,
}

impl TrajectorySummary {
    pub fn from_trajectory(t: &Trajectory) -> Self {
        let last = t.final_record();
        Self {
            converged: t.converged,
            steps: t.steps,
            final_entropy: last.entropy,
            limit_entropy: t.limit_entropy,
            final_dist_linf: last.dist_linf,
            final_dist_l2: last.dist_l2,
            final_rhs_norm: t.final_rhs_norm,
        }
    }
}
