//! Output tables (CSV or JSON) with provenance headers, and the trajectory
//! CSV reader.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Deserialize;
use serde_json::{json, Map, Value};
use topowork_core::dynamics::{PhasePoint, Trajectory};
use topowork_core::FieldParams;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// One table entry. Reals are written with 17 significant digits so they
/// parse back to the identical `f64`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match *self {
            Cell::Real(v) if v.is_nan() => "nan".into(),
            Cell::Real(v) if v.is_infinite() => if v > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Real(v) => format!("{v:.16e}"),
            Cell::Int(i) => i.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match *self {
            Cell::Real(v) if v.is_finite() => json!(v),
            Cell::Int(i) => json!(i),
            _ => Value::Null,
        }
    }
}

/// Ordered `key = value` pairs echoed at the top of every output file.
#[derive(Debug, Clone, Default)]
pub struct Header(Vec<(String, String)>);

impl Header {
    pub fn new(command: &str) -> Self {
        let mut h = Header::default();
        h.push("generator", format!("topowork {}", env!("CARGO_PKG_VERSION")));
        h.push("command", command);
        h.push("hbar", 1);
        h
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    /// Replaces the value of an existing key, or appends it.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some((_, v)) => *v = value.to_string(),
            None => self.push(key, value),
        }
    }

    pub fn params(&mut self, p: &FieldParams) {
        self.push("alpha", p.alpha);
        self.push("nu", p.nu);
        self.push("gamma", p.gamma);
        self.push("omega_tilde", p.omega_tilde);
        self.push("k", p.k);
        self.push("period", p.period());
        self.push("wavelength", p.wavelength());
    }
}

pub struct Table {
    pub columns: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &'static [&'static str]) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, header: &Header, out: W) -> io::Result<()> {
        let mut out = BufWriter::new(out);
        for (k, v) in &header.0 {
            writeln!(out, "# {k} = {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv))?;
        }
        w.flush()
    }

    pub fn write_json<W: Write>(&self, header: &Header, out: W) -> io::Result<()> {
        let meta: Map<String, Value> = header
            .0
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, cell)| (c.to_string(), cell.json()))
                        .collect(),
                )
            })
            .collect();
        let mut out = BufWriter::new(out);
        serde_json::to_writer(&mut out, &json!({ "meta": meta, "rows": rows }))?;
        writeln!(out)?;
        out.flush()
    }

    pub fn write_file(&self, header: &Header, path: &Path, format: Format) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        match format {
            Format::Csv => self.write_csv(header, file),
            Format::Json => self.write_json(header, file),
        }
        .map_err(|e| CliError::io(path, e))
    }
}

pub const TRAJECTORY_COLUMNS: [&str; 4] = ["traj_id", "t", "x", "v"];

pub fn trajectory_table(trajectories: &[Trajectory]) -> Table {
    let mut table = Table::new(&TRAJECTORY_COLUMNS);
    for (id, traj) in trajectories.iter().enumerate() {
        for s in &traj.samples {
            table.push(vec![
                Cell::Int(id as i64),
                Cell::Real(s.t),
                Cell::Real(s.x),
                Cell::Real(s.v),
            ]);
        }
    }
    table
}

#[derive(Debug, Deserialize)]
struct TrajectoryRow {
    traj_id: u64,
    t: f64,
    x: f64,
    v: f64,
}

/// Relative tolerance on the sample spacing of a trajectory read from file.
const SPACING_TOL: f64 = 1e-9;

/// Reads a `traj_id,t,x,v` CSV (comment lines allowed) written by the
/// `trajectories` command. Rows of one trajectory must be contiguous and
/// evenly spaced in `t`; the step is recovered from the spacing.
pub fn read_trajectories(path: &Path, params: FieldParams, mass: f64) -> Result<Vec<Trajectory>, CliError> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| CliError::input(path, e))?.clone();
    if headers.iter().ne(TRAJECTORY_COLUMNS) {
        return Err(CliError::Input(format!(
            "{}: expected columns {}, found {}",
            path.display(),
            TRAJECTORY_COLUMNS.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }

    let mut groups: Vec<(u64, Vec<PhasePoint>)> = Vec::new();
    for row in reader.deserialize::<TrajectoryRow>() {
        let row = row.map_err(|e| CliError::input(path, e))?;
        let point = PhasePoint {
            t: row.t,
            x: row.x,
            v: row.v,
        };
        match groups.last_mut() {
            Some((id, samples)) if *id == row.traj_id => samples.push(point),
            _ => {
                if groups.iter().any(|(id, _)| *id == row.traj_id) {
                    return Err(CliError::Input(format!(
                        "{}: rows of trajectory {} are not contiguous",
                        path.display(),
                        row.traj_id
                    )));
                }
                groups.push((row.traj_id, vec![point]));
            }
        }
    }
    if groups.is_empty() {
        return Err(CliError::Input(format!("{}: no trajectory rows", path.display())));
    }

    groups
        .into_iter()
        .map(|(id, samples)| {
            let dt = match samples.len() {
                0 | 1 => 0.0,
                n => (samples[n - 1].t - samples[0].t) / (n - 1) as f64,
            };
            let uneven = samples
                .windows(2)
                .any(|w| !((w[1].t - w[0].t - dt).abs() <= SPACING_TOL * dt.abs().max(1.0)) || dt <= 0.0);
            if uneven {
                return Err(CliError::Input(format!(
                    "{}: trajectory {id} is not evenly spaced in t",
                    path.display()
                )));
            }
            Ok(Trajectory {
                mass,
                params,
                dt,
                samples,
            })
        })
        .collect()
}
