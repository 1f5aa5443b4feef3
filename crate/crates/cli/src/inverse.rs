use kcontact::inverse::roundtrip_check;
use kcontact::ModelSpec;
use serde_json::{json, Value};

use crate::config::{check_range, random_second_jets, ModelConfig};
use crate::failure::{CliResult, Failure};

pub const INVERSE_SCHEMA: &str = "kcontact.inverse/1";
const ROUNDTRIP_TOL: f64 = 1e-9;

pub struct InverseInput {
    pub model: ModelConfig,
    pub seed: u64,
    pub samples: usize,
    pub range: f64,
}

/// Returns the report and whether the round trip met its tolerance.
pub fn run(input: &InverseInput) -> CliResult<(Value, bool)> {
    let pde = match input.model.spec()? {
        ModelSpec::Inverse(cfg) => cfg,
        _ => return Err(Failure::config("inverse needs a PDE (--spec file or model.pde)")),
    };
    let spec = pde.to_spec()?;
    let coefficients = spec.validate()?;
    let jets = random_second_jets(input.seed, input.samples, check_range(input.range)?, spec.k());
    let residual = roundtrip_check(&spec, &jets)?;
    let pass = residual <= ROUNDTRIP_TOL;
    let report = json!({
        "schema_version": INVERSE_SCHEMA,
        "command": "inverse",
        "pde": pde,
        "directions": pde.directions(),
        "expression": pde.render()?,
        "s_coefficients": coefficients,
        "roundtrip": {
            "seed": input.seed,
            "samples": input.samples,
            "residual": residual,
            "tolerance": ROUNDTRIP_TOL,
            "pass": pass,
        },
    });
    Ok((report, pass))
}
