use std::fs;
use std::path::Path;

use kcontact::PhasePoint;
use nalgebra::DMatrix;
use serde_json::{json, Value};

use crate::failure::{CliResult, Failure};

pub fn matrix(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn point_json(z: &PhasePoint) -> Value {
    json!({ "q": z.q, "v": z.v, "s": z.s })
}

/// Pretty JSON with a trailing newline, to `path` or stdout.
pub fn emit(report: &Value, path: Option<&Path>) -> CliResult<()> {
    let text = serde_json::to_string_pretty(report).expect("reports serialize") + "\n";
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::config(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
