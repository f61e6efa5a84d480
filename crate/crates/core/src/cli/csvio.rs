//! CSV schemas read and written by the command-line tools.
//!
//! All files are comma-separated with a mandatory header row and `.` as the
//! decimal separator. Floats are written in shortest round-trip form.

use std::fs::File;
use std::path::Path;

use serde::Deserialize;

use crate::distribution::WeightMap;
use crate::error::{Error, Result};
use crate::estimator::{Part, TimingSample};
use crate::grid::{Assignment, BlockGrid, BlockId, BlockQuantities};
use crate::metrics::IntervalReport;

pub const TIMING_HEADER: [&str; 14] = [
    "block_id", "step", "C", "F", "B", "P_L", "P_S", "K", "S", "m_lbm", "m_bh", "m_coup1", "m_coup2", "m_rb",
];
pub const REPORT_HEADER: [&str; 7] = ["step", "strategy", "n_procs", "LI", "edge_cut", "max_load", "total_load"];
pub const ASSIGNMENT_HEADER: [&str; 5] = ["block_id", "i", "j", "k", "owner"];
pub const WEIGHTS_HEADER: [&str; 2] = ["block_id", "weight"];

fn schema(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        csv::ErrorKind::Deserialize { err, .. } => schema(path, line, err.to_string()),
        other => schema(path, line, format!("{other:?}")),
    }
}

/// Opens `path` and checks its header row against `expected`.
fn open(path: &Path, expected: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let header = rdr.headers().map_err(|e| csv_error(path, e))?.clone();
    if header.is_empty() {
        return Err(schema(path, 1, "empty file (missing header)"));
    }
    if header.iter().ne(expected.iter().copied()) {
        return Err(schema(
            path,
            1,
            format!("expected header '{}', found '{}'", expected.join(","), header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

/// Deserializes every row, attaching line numbers to failures.
fn rows<T: for<'de> Deserialize<'de>>(path: &Path, expected: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut rdr = open(path, expected)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(None)
            .map_err(|e| schema(path, line, e.to_string()))?;
        out.push((line, row));
    }
    if out.is_empty() {
        return Err(schema(path, 2, "no data rows"));
    }
    Ok(out)
}

fn render(header: &[&str], records: impl Iterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Deserialize)]
struct TimingRow {
    block_id: usize,
    step: u64,
    #[serde(rename = "C")]
    c: u64,
    #[serde(rename = "F")]
    f: u64,
    #[serde(rename = "B")]
    b: u64,
    #[serde(rename = "P_L")]
    p_l: u64,
    #[serde(rename = "P_S")]
    p_s: u64,
    #[serde(rename = "K")]
    k: u64,
    #[serde(rename = "S")]
    s: u64,
    m_lbm: f64,
    m_bh: f64,
    m_coup1: f64,
    m_coup2: f64,
    m_rb: f64,
}

pub fn read_timing_csv(path: &Path) -> Result<Vec<TimingSample>> {
    rows::<TimingRow>(path, &TIMING_HEADER)?
        .into_iter()
        .map(|(line, r)| {
            let q = BlockQuantities {
                cells: r.c,
                fluid: r.f,
                near_boundary: r.b,
                local_particles: r.p_l,
                shadow_particles: r.p_s,
                contacts: r.k,
                sub_cycles: r.s,
            };
            q.validate().map_err(|e| schema(path, line, e.to_string()))?;
            TimingSample::new(BlockId(r.block_id), r.step, q, [r.m_lbm, r.m_bh, r.m_coup1, r.m_coup2, r.m_rb])
                .map_err(|e| schema(path, line, e.to_string()))
        })
        .collect()
}

pub fn render_timing_csv(samples: &[TimingSample]) -> Vec<u8> {
    render(
        &TIMING_HEADER,
        samples.iter().map(|s| {
            let q = &s.quantities;
            let mut r: Vec<String> = [
                s.block_id.index() as u64,
                s.step,
                q.cells,
                q.fluid,
                q.near_boundary,
                q.local_particles,
                q.shadow_particles,
                q.contacts,
                q.sub_cycles,
            ]
            .iter()
            .map(u64::to_string)
            .collect();
            r.extend(Part::ALL.iter().map(|&p| s.timing(p).to_string()));
            r
        }),
    )
}

/// One parsed row of a report file.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ReportRow {
    pub step: u64,
    pub strategy: String,
    pub n_procs: usize,
    #[serde(rename = "LI")]
    pub load_imbalance: f64,
    pub edge_cut: u64,
    pub max_load: f64,
    pub total_load: f64,
}

pub fn read_report_csv(path: &Path) -> Result<Vec<ReportRow>> {
    let rows = rows::<ReportRow>(path, &REPORT_HEADER)?;
    for (line, r) in &rows {
        let values = [r.load_imbalance, r.max_load, r.total_load];
        if r.n_procs == 0 || values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(schema(path, *line, "report values must be finite and non-negative"));
        }
    }
    Ok(rows.into_iter().map(|(_, r)| r).collect())
}

pub fn render_report_csv(reports: &[IntervalReport]) -> Vec<u8> {
    render(
        &REPORT_HEADER,
        reports.iter().map(|r| {
            vec![
                r.step.to_string(),
                r.strategy.clone(),
                r.n_procs().to_string(),
                r.load_imbalance.to_string(),
                r.edge_cut.to_string(),
                r.max_load.to_string(),
                r.total_load.to_string(),
            ]
        }),
    )
}

#[derive(Deserialize)]
struct AssignmentRow {
    block_id: usize,
    i: usize,
    j: usize,
    k: usize,
    owner: usize,
}

/// Reads an assignment for `grid`; every block must appear exactly once with
/// coordinates matching its id.
pub fn read_assignment_csv(path: &Path, grid: &BlockGrid, n_procs: usize) -> Result<Assignment> {
    let mut entries = Vec::new();
    for (line, r) in rows::<AssignmentRow>(path, &ASSIGNMENT_HEADER)? {
        let id = BlockId(r.block_id);
        let coord = grid.coord_of(id).map_err(|e| schema(path, line, e.to_string()))?;
        if coord != [r.i, r.j, r.k] {
            return Err(schema(
                path,
                line,
                format!("block {id} is at {coord:?}, row says {:?}", [r.i, r.j, r.k]),
            ));
        }
        entries.push((id, r.owner));
    }
    Assignment::from_entries(grid, n_procs, &entries).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn render_assignment_csv(grid: &BlockGrid, assignment: &Assignment) -> Vec<u8> {
    render(
        &ASSIGNMENT_HEADER,
        grid.ids().map(|id| {
            let [i, j, k] = grid.coord_of(id).expect("id from grid");
            [id.index(), i, j, k, assignment.owner(id)]
                .iter()
                .map(usize::to_string)
                .collect()
        }),
    )
}

#[derive(Deserialize)]
struct WeightRow {
    block_id: usize,
    weight: f64,
}

/// Reads one positive weight per block of `grid`.
pub fn read_weights_csv(path: &Path, grid: &BlockGrid) -> Result<WeightMap> {
    let mut weights: Vec<Option<f64>> = vec![None; grid.len()];
    for (line, r) in rows::<WeightRow>(path, &WEIGHTS_HEADER)? {
        if r.block_id >= grid.len() {
            return Err(schema(path, line, format!("block {} outside a grid of {} blocks", r.block_id, grid.len())));
        }
        if !(r.weight.is_finite() && r.weight > 0.0) {
            return Err(schema(path, line, format!("weight must be positive and finite, got {}", r.weight)));
        }
        if weights[r.block_id].replace(r.weight).is_some() {
            return Err(schema(path, line, format!("duplicate weight for block {}", r.block_id)));
        }
    }
    let mut out = Vec::with_capacity(grid.len());
    for (i, w) in weights.into_iter().enumerate() {
        out.push(w.ok_or_else(|| Error::Data(format!("{}: missing weight for block {i}", path.display())))?);
    }
    WeightMap::new(grid, out)
}

pub fn render_weights_csv(weights: &WeightMap) -> Vec<u8> {
    render(
        &WEIGHTS_HEADER,
        weights
            .as_slice()
            .iter()
            .enumerate()
            .map(|(i, w)| vec![i.to_string(), w.to_string()]),
    )
}
