//! Run configuration: an optional JSON file overlaid by command-line flags.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use kcontact::inverse::PdeConfig;
use kcontact::{
    Boundary, Grid, InitialCondition, LagrangianModel, ModelSpec, PhasePoint, Poly2, SecondJet, StringParams,
    SymmetryField,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::failure::{CliResult, Failure};

pub const CONFIG_SCHEMA: &str = "kcontact.config/1";

/// Model name plus parameters. Parameters a model does not take are rejected.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub mu: Option<f64>,
    pub gamma: Option<f64>,
    pub rho: Option<f64>,
    pub tau: Option<f64>,
    pub lambda: Option<f64>,
    /// Constant magnetic field for the string in the symmetric gauge.
    pub b: Option<f64>,
    pub a1: Option<Poly2>,
    pub a2: Option<Poly2>,
    pub phi: Option<Poly2>,
    pub omega: Option<f64>,
    pub eps: Option<f64>,
    /// PDE for the `inverse` model.
    pub pde: Option<PdeConfig>,
}

impl ModelConfig {
    fn given(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut mark = |set: bool, key: &'static str| {
            if set {
                keys.push(key);
            }
        };
        mark(self.n.is_some(), "n");
        mark(self.k.is_some(), "k");
        mark(self.mu.is_some(), "mu");
        mark(self.gamma.is_some(), "gamma");
        mark(self.rho.is_some(), "rho");
        mark(self.tau.is_some(), "tau");
        mark(self.lambda.is_some(), "lambda");
        mark(self.b.is_some(), "b");
        mark(self.a1.is_some(), "a1");
        mark(self.a2.is_some(), "a2");
        mark(self.phi.is_some(), "phi");
        mark(self.omega.is_some(), "omega");
        mark(self.eps.is_some(), "eps");
        mark(self.pde.is_some(), "pde");
        keys
    }

    /// Registry entry, with defaults for parameters left out.
    pub fn spec(&self) -> CliResult<ModelSpec> {
        let name = match (&self.name, &self.pde) {
            (Some(name), _) => name.as_str(),
            (None, Some(_)) => "inverse",
            (None, None) => {
                return Err(Failure::config(
                    "no model given (use --model or \"model\": {\"name\": ...})",
                ))
            }
        };
        let allowed: &[&str] = match name {
            "free" => &["n", "k"],
            "membrane" => &["mu", "gamma"],
            "string" => &["rho", "tau", "lambda", "gamma", "b", "a1", "a2", "phi"],
            "oscillator" => &["omega", "gamma"],
            "s_coupled" => &["eps"],
            "inverse" => &["pde"],
            other => {
                return Err(Failure::config(format!(
                    "unknown model \"{other}\" (known: free, membrane, string, oscillator, s_coupled, inverse)"
                )))
            }
        };
        if let Some(bad) = self.given().into_iter().find(|key| !allowed.contains(key)) {
            return Err(Failure::config(format!(
                "model \"{name}\" does not take parameter \"{bad}\""
            )));
        }
        let gamma = self.gamma.unwrap_or(0.0);
        let spec = match name {
            "free" => {
                let (n, k) = (self.n.unwrap_or(1), self.k.unwrap_or(2));
                if n == 0 || k == 0 {
                    return Err(Failure::config("free model needs n >= 1 and k >= 1"));
                }
                ModelSpec::Free { n, k }
            }
            "membrane" => ModelSpec::Membrane {
                mu: self.mu.unwrap_or(1.0),
                gamma,
            },
            "string" => {
                let (rho, tau, lambda) = (
                    self.rho.unwrap_or(1.0),
                    self.tau.unwrap_or(1.0),
                    self.lambda.unwrap_or(0.0),
                );
                let phi = self.phi.clone().unwrap_or_default();
                let mut p = StringParams::symmetric_gauge(rho, tau, lambda, gamma, self.b.unwrap_or(0.0), phi);
                match (&self.a1, &self.a2, self.b) {
                    (None, None, _) => {}
                    (_, _, Some(_)) => return Err(Failure::config("give either b or the potentials a1/a2, not both")),
                    (a1, a2, None) => {
                        p.a1 = a1.clone().unwrap_or_default();
                        p.a2 = a2.clone().unwrap_or_default();
                    }
                }
                ModelSpec::String(p)
            }
            "oscillator" => ModelSpec::Oscillator {
                omega: self.omega.unwrap_or(1.0),
                gamma,
            },
            "s_coupled" => ModelSpec::SCoupled {
                eps: self.eps.unwrap_or(0.0),
            },
            _ => {
                let pde = self
                    .pde
                    .clone()
                    .ok_or_else(|| Failure::config("inverse model needs a PDE (--spec file or \"pde\")"))?;
                ModelSpec::Inverse(pde)
            }
        };
        Ok(spec)
    }

    pub fn build(&self) -> CliResult<(ModelSpec, LagrangianModel)> {
        let spec = self.spec()?;
        let model = spec.build()?;
        Ok((spec, model))
    }
}

/// Model selection flags shared by every subcommand.
#[derive(Args, Clone, Debug, Default)]
pub struct ModelArgs {
    /// Model name: free, membrane, string, oscillator, s_coupled, inverse.
    #[arg(long)]
    pub model: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Magnetic field of the string model (symmetric gauge).
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: Option<f64>,
    /// JSON file with the PDE `{ "a": [[..]], "d": [..], "g": [..] }` for the inverse model.
    #[arg(long)]
    pub spec: Option<PathBuf>,
}

impl ModelArgs {
    /// Overlays the flags on `base`. A different `--model` discards the file's parameters.
    pub fn apply(&self, base: Option<ModelConfig>) -> CliResult<ModelConfig> {
        let mut m = base.unwrap_or_default();
        if let Some(name) = &self.model {
            if m.name.as_deref() != Some(name.as_str()) {
                m = ModelConfig::default();
            }
            m.name = Some(name.clone());
        }
        if let Some(path) = &self.spec {
            m.pde = Some(read_json(path)?);
            if m.name.is_none() {
                m.name = Some("inverse".into());
            }
        }
        macro_rules! overlay {
            ($($f:ident),*) => { $( if self.$f.is_some() { m.$f = self.$f; } )* };
        }
        overlay!(n, k, mu, gamma, rho, tau, lambda, b, omega, eps);
        Ok(m)
    }
}

/// Everything a config file may hold. Subcommands ignore sections they do
/// not use; unknown keys are an error.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<String>,
    pub model: Option<ModelConfig>,
    /// Sample points in the `q=..;v=..;s=..` syntax.
    pub points: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    /// Half-width of the box random sample coordinates are drawn from.
    pub range: Option<f64>,
    pub grid: Option<Grid>,
    pub dt: Option<f64>,
    pub courant: Option<f64>,
    pub t_end: Option<f64>,
    pub output_every: Option<usize>,
    pub initial: Option<Vec<InitialCondition>>,
    pub out: Option<PathBuf>,
    pub suites: Option<Vec<String>>,
    pub trace: Option<PathBuf>,
    pub symmetry: Option<String>,
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let cfg: RunConfig = read_json(path)?;
    match cfg.schema_version.as_deref() {
        None | Some(CONFIG_SCHEMA) => Ok(cfg),
        Some(other) => Err(Failure::config(format!("unsupported config schema \"{other}\""))),
    }
}

fn parse_list(text: &str) -> CliResult<Vec<f64>> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Failure::config(format!("bad number \"{}\" in point", x.trim())))
        })
        .collect()
}

/// Parses `q=0.5;v=1,2,-1;s=0.1,0,0`. Velocities are flat with
/// `v[i * k + α] = ∂qⁱ/∂t^α`; omitted groups are zero.
pub fn parse_point(text: &str, n: usize, k: usize) -> CliResult<PhasePoint> {
    let mut z = PhasePoint::zeros(n, k);
    for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (key, values) = part
            .split_once('=')
            .ok_or_else(|| Failure::config(format!("point component \"{part}\" is not key=values")))?;
        let values = parse_list(values)?;
        let target = match key.trim() {
            "q" => &mut z.q,
            "v" => &mut z.v,
            "s" => &mut z.s,
            other => return Err(Failure::config(format!("unknown point component \"{other}\""))),
        };
        if values.len() != target.len() {
            return Err(Failure::config(format!(
                "point component {} has {} values, model needs {}",
                key.trim(),
                values.len(),
                target.len()
            )));
        }
        target.copy_from_slice(&values);
    }
    if z.coords().iter().any(|x| !x.is_finite()) {
        return Err(Failure::config("point has non-finite coordinates"));
    }
    Ok(z)
}

/// `count` points with every coordinate uniform in `[-range, range]`.
pub fn random_points(seed: u64, count: usize, range: f64, n: usize, k: usize) -> Vec<PhasePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_point(&mut rng, range, n, k)).collect()
}

pub fn random_point(rng: &mut ChaCha8Rng, range: f64, n: usize, k: usize) -> PhasePoint {
    let c: Vec<f64> = (0..n + n * k + k).map(|_| rng.gen_range(-range..=range)).collect();
    PhasePoint::from_coords(n, k, &c)
}

pub fn check_range(range: f64) -> CliResult<f64> {
    if range > 0.0 && range.is_finite() {
        Ok(range)
    } else {
        Err(Failure::config(format!("sample range must be positive, got {range}")))
    }
}

/// Symmetry generators by name: `du` (= `dq0`), `dq<i>`, `ds<α>`, `scaling`
/// and, for the string model, `stringY`.
pub fn symmetry_field(name: &str, spec: &ModelSpec, n: usize, k: usize) -> CliResult<SymmetryField> {
    let index = |rest: &str, bound: usize| -> CliResult<usize> {
        match rest.parse::<usize>() {
            Ok(i) if i < bound => Ok(i),
            _ => Err(Failure::config(format!("symmetry \"{name}\" out of range"))),
        }
    };
    match name {
        "du" => Ok(SymmetryField::translation_q(n, k, 0)),
        "scaling" => Ok(SymmetryField::scaling_lift(n, k)),
        "stringY" => match spec {
            ModelSpec::String(p) => Ok(SymmetryField::string_potential(p)),
            _ => Err(Failure::config("symmetry stringY is defined for the string model only")),
        },
        _ if name.starts_with("dq") => Ok(SymmetryField::translation_q(n, k, index(&name[2..], n)?)),
        _ if name.starts_with("ds") => Ok(SymmetryField::translation_s(n, k, index(&name[2..], k)?)),
        _ => Err(Failure::config(format!(
            "unknown symmetry \"{name}\" (known: du, dq<i>, ds<a>, scaling, stringY)"
        ))),
    }
}

/// Symmetries whose dissipated quantities `simulate` records by default.
pub fn default_symmetries(spec: &ModelSpec) -> Vec<&'static str> {
    match spec {
        ModelSpec::Membrane { .. } => vec!["du"],
        ModelSpec::String(_) => vec!["stringY"],
        _ => vec![],
    }
}

/// Grid flags applied uniformly to every spatial axis.
#[derive(Args, Clone, Debug, Default)]
pub struct GridArgs {
    /// Points per spatial axis.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    pub lower: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub upper: Option<f64>,
    /// dirichlet or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
}

impl GridArgs {
    fn any(&self) -> bool {
        self.points.is_some() || self.lower.is_some() || self.upper.is_some() || self.boundary.is_some()
    }

    /// Grid for `dim` spatial axes: the file's grid with flags overlaid, or
    /// `[0, π]` with 101 Dirichlet points per axis.
    pub fn apply(&self, base: Option<Grid>, dim: usize) -> CliResult<Grid> {
        let mut grid = match base {
            Some(g) => g,
            None => Grid {
                axes: vec![kcontact::Axis::new(0.0, PI, 101, Boundary::Dirichlet); dim],
            },
        };
        if grid.dim() != dim {
            return Err(Failure::config(format!(
                "grid has {} axes, model needs {dim} spatial axes",
                grid.dim()
            )));
        }
        if self.any() {
            let boundary = match self.boundary.as_deref() {
                None => None,
                Some("dirichlet") => Some(Boundary::Dirichlet),
                Some("periodic") => Some(Boundary::Periodic),
                Some(other) => return Err(Failure::config(format!("unknown boundary \"{other}\""))),
            };
            for a in &mut grid.axes {
                a.points = self.points.unwrap_or(a.points);
                a.lower = self.lower.unwrap_or(a.lower);
                a.upper = self.upper.unwrap_or(a.upper);
                a.boundary = boundary.unwrap_or(a.boundary);
            }
        }
        Ok(Grid::new(grid.axes)?)
    }
}

/// Second jets of a single field (`n = 1`) with symmetric second derivatives.
pub fn random_second_jets(seed: u64, count: usize, range: f64, k: usize) -> Vec<SecondJet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let z = random_point(&mut rng, range, 1, k);
            let mut a = vec![0.0; k * k];
            for al in 0..k {
                for be in al..k {
                    let x = rng.gen_range(-range..=range);
                    a[al * k + be] = x;
                    a[be * k + al] = x;
                }
            }
            let dsdt = DMatrix::from_fn(k, k, |_, _| rng.gen_range(-range..=range));
            SecondJet::new(z, a, dsdt)
        })
        .collect()
}
