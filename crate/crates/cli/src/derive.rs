use kcontact::contact::{energy, hessian, legendre, reeb, reeb_derivative_of_energy, verify_reeb};
use kcontact::dynamics::assemble_sopde;
use kcontact::{evaluate_jet, LagrangianModel, ModelSpec, PhasePoint, DEFAULT_RANK_TOL};
use serde_json::{json, Value};

use crate::config::{check_range, parse_point, random_points, ModelConfig};
use crate::failure::CliResult;
use crate::report::{matrix, point_json};

pub const DERIVE_SCHEMA: &str = "kcontact.derive/1";
const REEB_FD_STEP: f64 = 1e-5;

pub struct DeriveInput {
    pub model: ModelConfig,
    pub points: Vec<String>,
    pub seed: u64,
    pub samples: usize,
    pub range: f64,
}

fn point_report(model: &LagrangianModel, z: &PhasePoint) -> CliResult<Value> {
    let jet = evaluate_jet(model, z)?;
    let hess = hessian(&jet, DEFAULT_RANK_TOL);
    let p = legendre(&jet, z).p;
    let mut out = json!({
        "point": point_json(z),
        "lagrangian": jet.l,
        "energy": energy(&jet, z),
        "momenta": p,
        "dl_dq": jet.dldq,
        "dl_ds": jet.dlds,
        "hessian": {
            "matrix": matrix(&hess.w),
            "regular": hess.regular,
            "condition": hess.cond,
        },
        "reeb": Value::Null,
        "reeb_energy_derivative": Value::Null,
        "sopde": Value::Null,
        "verify_reeb": Value::Null,
    });
    if hess.regular {
        let r = reeb(&jet, &hess)?;
        let fields: Vec<Value> = r
            .vcomp
            .iter()
            .enumerate()
            .map(|(alpha, vc)| json!({ "s": alpha, "v": vc.iter().copied().collect::<Vec<f64>>() }))
            .collect();
        let sopde = assemble_sopde(model, z)?;
        let check = verify_reeb(model, z, REEB_FD_STEP)?;
        out["reeb"] = Value::from(fields);
        out["reeb_energy_derivative"] = json!(reeb_derivative_of_energy(&jet, z, &r));
        out["sopde"] = json!({ "gamma": sopde.gamma, "g": matrix(&sopde.g) });
        out["verify_reeb"] = json!({ "eta": check.eta, "deta": check.deta, "deta_fd": check.deta_fd });
    }
    Ok(out)
}

pub fn run(input: &DeriveInput) -> CliResult<Value> {
    let (spec, model) = input.model.build()?;
    let (n, k) = (model.n(), model.k());
    let points = if input.points.is_empty() {
        random_points(input.seed, input.samples, check_range(input.range)?, n, k)
    } else {
        input
            .points
            .iter()
            .map(|p| parse_point(p, n, k))
            .collect::<CliResult<_>>()?
    };
    let expression = match &spec {
        ModelSpec::Inverse(cfg) => Value::from(cfg.render()?),
        _ => Value::Null,
    };
    let reports = points
        .iter()
        .map(|z| point_report(&model, z))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(json!({
        "schema_version": DERIVE_SCHEMA,
        "command": "derive",
        "model": model.name(),
        "parameters": spec,
        "n": n,
        "k": k,
        "directions": model.directions(),
        "expression": expression,
        "seed": if input.points.is_empty() { json!(input.seed) } else { Value::Null },
        "points": reports,
    }))
}
