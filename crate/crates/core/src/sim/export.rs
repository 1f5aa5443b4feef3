//! Trace files: `trace.csv` with one row per output time per grid node, and a
//! `manifest.json` describing the run.
//!
//! CSV columns, in order: `t`, one coordinate per spatial direction (named
//! after the model's directions), `phi_i` for each field, `phidot_i` for each
//! field, `s1`. Numbers use the shortest representation that round-trips.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use super::{Grid, SimState, SimTrace};
use crate::error::{Error, Result};
use crate::models::ModelSpec;

pub const TRACE_SCHEMA: &str = "kcontact.trace/1";
pub const CSV_NAME: &str = "trace.csv";
pub const MANIFEST_NAME: &str = "manifest.json";

pub fn csv_columns(trace: &SimTrace) -> Vec<String> {
    let mut cols = vec!["t".to_string()];
    cols.extend(trace.directions.iter().skip(1).cloned());
    cols.extend((0..trace.n).map(|i| format!("phi_{i}")));
    cols.extend((0..trace.n).map(|i| format!("phidot_{i}")));
    cols.push("s1".to_string());
    cols
}

/// Manifest for `trace`; entries of `extra` are merged at the top level.
pub fn manifest(trace: &SimTrace, extra: Map<String, Value>) -> Value {
    let mut m = json!({
        "schema_version": TRACE_SCHEMA,
        "model": trace.model,
        "parameters": trace.spec,
        "n": trace.n,
        "k": trace.k,
        "directions": trace.directions,
        "grid": trace.grid,
        "dt": trace.dt,
        "output_every": trace.output_every,
        "samples": trace.states.len(),
        "t_start": trace.states.first().map_or(0.0, |s| s.t),
        "t_end": trace.t_end(),
        "gauge": "s^1(0) = 0, s^a = 0 for a >= 2, ds^1/dt = L",
        "notes": trace.notes,
        "csv": CSV_NAME,
        "columns": csv_columns(trace),
    });
    let obj = m.as_object_mut().expect("manifest is an object");
    obj.extend(extra);
    m
}

pub fn write_trace(dir: &Path, trace: &SimTrace, extra: Map<String, Value>) -> Result<()> {
    trace.check()?;
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(fs::File::create(dir.join(CSV_NAME))?);
    writeln!(w, "{}", csv_columns(trace).join(","))?;
    let len = trace.grid.len();
    let coords: Vec<Vec<f64>> = (0..len).map(|node| trace.grid.coords(node)).collect();
    let mut line = String::new();
    for state in &trace.states {
        for (node, x) in coords.iter().enumerate() {
            line.clear();
            line.push_str(&state.t.to_string());
            let fields = (0..trace.n)
                .map(|i| state.phi[i * len + node])
                .chain((0..trace.n).map(|i| state.phidot[i * len + node]));
            for v in x.iter().copied().chain(fields).chain(std::iter::once(state.s1[node])) {
                line.push(',');
                line.push_str(&v.to_string());
            }
            writeln!(w, "{line}")?;
        }
    }
    w.flush()?;
    let text = serde_json::to_string_pretty(&manifest(trace, extra))?;
    fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(())
}

fn field<'a>(m: &'a Value, key: &str) -> Result<&'a Value> {
    m.get(key)
        .ok_or_else(|| Error::InvalidTrace(format!("manifest is missing \"{key}\"")))
}

fn parse<T: serde::de::DeserializeOwned>(m: &Value, key: &str) -> Result<T> {
    serde_json::from_value(field(m, key)?.clone())
        .map_err(|e| Error::InvalidTrace(format!("manifest field \"{key}\": {e}")))
}

/// Reads a trace directory written by [`write_trace`], returning the trace and
/// the raw manifest. The halo states are not stored, so time derivatives of a
/// loaded trace use neighbouring samples.
pub fn read_trace(dir: &Path) -> Result<(SimTrace, Value)> {
    let text = fs::read_to_string(dir.join(MANIFEST_NAME))?;
    let m: Value = serde_json::from_str(&text)?;
    if field(&m, "schema_version")? != TRACE_SCHEMA {
        return Err(Error::InvalidTrace(format!(
            "unsupported schema {}",
            m["schema_version"]
        )));
    }
    let n: usize = parse(&m, "n")?;
    let k: usize = parse(&m, "k")?;
    let grid: Grid = parse(&m, "grid")?;
    let spec: Option<ModelSpec> = parse(&m, "parameters")?;
    let mut trace = SimTrace {
        model: parse(&m, "model")?,
        spec,
        n,
        k,
        directions: parse(&m, "directions")?,
        grid,
        dt: parse(&m, "dt")?,
        output_every: parse(&m, "output_every")?,
        notes: parse(&m, "notes")?,
        states: Vec::new(),
        halo: Vec::new(),
    };
    let expected = csv_columns(&trace);
    let len = trace.grid.len();
    let ncol = expected.len();
    let reader = BufReader::new(fs::File::open(dir.join(CSV_NAME))?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::InvalidTrace("empty csv".into()))??;
    if header.split(',').map(str::trim).ne(expected.iter().map(String::as_str)) {
        return Err(Error::InvalidTrace(format!(
            "csv header {header:?} does not match manifest"
        )));
    }
    let mut row = 0usize;
    let mut current = SimState::zeros(n, &trace.grid);
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::InvalidTrace(format!("csv line {}: {e}", lineno + 2)))?;
        if vals.len() != ncol {
            return Err(Error::InvalidTrace(format!(
                "csv line {} has {} columns",
                lineno + 2,
                vals.len()
            )));
        }
        let node = row % len;
        if node == 0 {
            current.t = vals[0];
        }
        let off = k;
        for i in 0..n {
            current.phi[i * len + node] = vals[off + i];
            current.phidot[i * len + node] = vals[off + n + i];
        }
        current.s1[node] = vals[off + 2 * n];
        row += 1;
        if node + 1 == len {
            trace.states.push(current.clone());
        }
    }
    if row % len != 0 {
        return Err(Error::InvalidTrace("csv ends with a partial time slice".into()));
    }
    trace.check()?;
    Ok((trace, m))
}
