use std::path::PathBuf;

use kcontact::sim::{self, export, probe};
use kcontact::symmetry::{dissipated_quantity, dissipation_law_check};
use kcontact::{Grid, InitialCondition, ModelSpec};
use serde_json::{json, Map, Value};

use crate::config::{default_symmetries, symmetry_field, ModelConfig};
use crate::failure::{CliResult, Failure};

pub const DEFAULT_COURANT: f64 = 0.4;

pub struct SimulateInput {
    pub model: ModelConfig,
    pub grid: Grid,
    pub dt: Option<f64>,
    pub courant: Option<f64>,
    pub t_end: f64,
    pub output_every: usize,
    pub initial: Option<Vec<InitialCondition>>,
    pub out: PathBuf,
    pub symmetries: Option<Vec<String>>,
}

/// One unit mode `Π sin(x_d − lower_d)` in field 0, at rest.
pub fn default_initial(dim: usize) -> Vec<InitialCondition> {
    vec![InitialCondition::Mode {
        field: 0,
        amplitude: 1.0,
        velocity: 0.0,
        wavenumbers: vec![1.0; dim],
    }]
}

pub fn run(input: &SimulateInput) -> CliResult<Value> {
    let (spec, model) = input.model.build()?;
    let grid = &input.grid;
    let dt = match (input.dt, input.courant, grid.min_spacing()) {
        (Some(_), Some(_), _) => return Err(Failure::config("give dt or courant, not both")),
        (Some(dt), None, _) => dt,
        (None, c, Some(h)) => c.unwrap_or(DEFAULT_COURANT) * h,
        (None, _, None) => return Err(Failure::config("models without spatial directions need an explicit dt")),
    };
    let initial = input.initial.clone().unwrap_or_else(|| default_initial(grid.dim()));
    let state = InitialCondition::superpose(model.n(), grid, &initial)?;
    let trace = sim::run(&model, grid, dt, input.t_end, &state, input.output_every)?;

    let el = probe::trace_el_residual(&model, &trace)?;
    let s = probe::s_accumulation_check(&model, &trace)?;
    let names: Vec<String> = match &input.symmetries {
        Some(list) => list.clone(),
        None => default_symmetries(&spec).into_iter().map(String::from).collect(),
    };
    let mut dissipation = Vec::new();
    for name in &names {
        let y = symmetry_field(name, &spec, model.n(), model.k())?;
        let r = dissipation_law_check(&model, &dissipated_quantity(&y), &trace)?;
        dissipation.push(json!({ "symmetry": name, "residual": r.max, "points": r.points }));
    }

    let mut extra = Map::new();
    extra.insert("initial".into(), json!(initial));
    extra.insert("requested_dt".into(), json!(dt));
    extra.insert(
        "diagnostics".into(),
        json!({
            "el_residual": { "max": el.max, "points": el.points },
            "s_accumulation": {
                "discrepancy": s.discrepancy,
                "relative": s.relative(),
                "l_inf": s.l_inf,
                "t_span": s.t_span,
            },
            "dissipation": dissipation,
        }),
    );
    if let ModelSpec::Inverse(cfg) = &spec {
        extra.insert("expression".into(), json!(cfg.render()?));
    }
    export::write_trace(&input.out, &trace, extra.clone())?;
    Ok(export::manifest(&trace, extra))
}
