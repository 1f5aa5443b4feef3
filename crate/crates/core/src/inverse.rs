//! Lagrangians for prescribed linear second-order equations
//! `A^{αβ}u_{αβ} + D^α u_α + G(u) = 0` with constant invertible `A`.
//!
//! The construction is `L = ½A^{αβ}u_αu_β − (A⁻¹D)_α s^α − ḡ(u)` with
//! `ḡ' = G`, `ḡ(0) = 0`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::contact::{rank_test, DEFAULT_RANK_TOL};
use crate::dynamics::{el_residual_with_jet, SecondJet};
use crate::error::{Error, Result};
use crate::hyperdual::HyperDual;
use crate::jet::{default_directions, evaluate_jet, LagrangianModel};

/// Tolerance of the adaptive quadrature used for `ḡ`.
pub const QUADRATURE_TOL: f64 = 1e-10;

pub type ScalarFn = Arc<dyn Fn(HyperDual) -> HyperDual + Send + Sync>;

/// The zeroth-order term `G(u)`.
#[derive(Clone)]
pub enum GTerm {
    /// `G(u) = Σ_j c_j u^j`; the antiderivative is taken in closed form.
    Polynomial(Vec<f64>),
    /// Arbitrary `G`; `ḡ` by adaptive Simpson quadrature from 0.
    Function(ScalarFn),
}

impl fmt::Debug for GTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GTerm::Polynomial(c) => f.debug_tuple("Polynomial").field(c).finish(),
            GTerm::Function(_) => f.write_str("Function(..)"),
        }
    }
}

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `∫_a^b f` by adaptive Simpson with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(f, a, b, fa, fm, fb, whole, tol, 50)
}

impl GTerm {
    pub fn zero() -> Self {
        GTerm::Polynomial(Vec::new())
    }

    pub fn value(&self, u: f64) -> f64 {
        match self {
            GTerm::Polynomial(c) => c.iter().rev().fold(0.0, |acc, cj| acc * u + cj),
            GTerm::Function(g) => g(HyperDual::constant(u)).re,
        }
    }

    /// `ḡ(u)` on Taylor numbers, `ḡ(0) = 0`.
    pub fn antiderivative(&self, u: HyperDual) -> HyperDual {
        match self {
            GTerm::Polynomial(c) => c
                .iter()
                .enumerate()
                .map(|(j, cj)| u.powi(j as i32 + 1) * (cj / (j as f64 + 1.0)))
                .sum(),
            GTerm::Function(g) => {
                let x = u.re;
                let gv = g(HyperDual::variable(x));
                let f = |t: f64| g(HyperDual::constant(t)).re;
                let gbar = adaptive_simpson(&f, 0.0, x, QUADRATURE_TOL);
                u.chain(gbar, gv.re, gv.e1)
            }
        }
    }

    pub fn scaled(&self, c: f64) -> GTerm {
        match self {
            GTerm::Polynomial(p) => GTerm::Polynomial(p.iter().map(|x| x * c).collect()),
            GTerm::Function(g) => {
                let g = g.clone();
                GTerm::Function(Arc::new(move |u| g(u) * c))
            }
        }
    }
}

/// `A^{αβ}u_{αβ} + D^α u_α + G(u) = 0` with constant symmetric `A`.
#[derive(Clone, Debug)]
pub struct PdeSpec {
    pub a: DMatrix<f64>,
    pub d: Vec<f64>,
    pub g: GTerm,
}

impl PdeSpec {
    pub fn new(a: DMatrix<f64>, d: Vec<f64>, g: GTerm) -> Self {
        PdeSpec { a, d, g }
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    /// Multiplies `A`, `D` and `G` by `c`.
    pub fn scaled(&self, c: f64) -> PdeSpec {
        PdeSpec {
            a: &self.a * c,
            d: self.d.iter().map(|x| x * c).collect(),
            g: self.g.scaled(c),
        }
    }

    /// Left-hand side of the equation at `u`, first derivatives `du` and
    /// second derivatives `a[α * k + β]`.
    pub fn evaluate(&self, u: f64, du: &[f64], second: &[f64]) -> f64 {
        let k = self.k();
        let mut r = self.g.value(u);
        for al in 0..k {
            r += self.d[al] * du[al];
            for be in 0..k {
                r += self.a[(al, be)] * second[al * k + be];
            }
        }
        r
    }

    /// Symmetry and invertibility of `A`; returns `A⁻¹D`.
    pub fn validate(&self) -> Result<Vec<f64>> {
        let k = self.k();
        if k == 0 {
            return Err(Error::InvalidSpec("k must be at least 1".into()));
        }
        if self.a.nrows() != k || self.a.ncols() != k {
            return Err(Error::InvalidSpec(format!(
                "A is {}x{} but D has length {k}",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if self.a.iter().chain(&self.d).any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpec("non-finite coefficient".into()));
        }
        let scale = self.a.amax().max(f64::MIN_POSITIVE);
        if (&self.a - self.a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::InvalidSpec("A is not symmetric".into()));
        }
        if !rank_test(&self.a, DEFAULT_RANK_TOL).0 {
            return Err(Error::Parabolic);
        }
        let inv = self.a.clone().try_inverse().ok_or(Error::Parabolic)?;
        let c = inv * nalgebra::DVector::from_column_slice(&self.d);
        Ok(c.iter().copied().collect())
    }
}

/// The `n = 1` model whose Euler–Lagrange equation is the given PDE.
pub fn build_lagrangian(spec: &PdeSpec) -> Result<LagrangianModel> {
    build_named(spec, default_directions(spec.k()))
}

fn build_named(spec: &PdeSpec, directions: Vec<String>) -> Result<LagrangianModel> {
    let c = spec.validate()?;
    let k = spec.k();
    if directions.len() != k {
        return Err(Error::InvalidSpec(format!(
            "{} direction names for k = {k}",
            directions.len()
        )));
    }
    let a = spec.a.clone();
    let g = spec.g.clone();
    let model = LagrangianModel::new(
        "inverse",
        1,
        k,
        move |q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]| {
            let mut quad = HyperDual::ZERO;
            for al in 0..k {
                quad += v[al] * v[al] * a[(al, al)];
                for be in al + 1..k {
                    quad += v[al] * v[be] * (2.0 * a[(al, be)]);
                }
            }
            let diss: HyperDual = (0..k).map(|al| s[al] * c[al]).sum();
            quad * 0.5 - diss - g.antiderivative(q[0])
        },
    );
    Ok(model.with_directions(directions))
}

/// Max `|rEL − (A^{αβ}a_{αβ} + D^α v_α + G(q))|` over the given second jets.
pub fn roundtrip_check(spec: &PdeSpec, samples: &[SecondJet]) -> Result<f64> {
    let model = build_lagrangian(spec)?;
    let k = spec.k();
    let mut worst = 0.0f64;
    for sj in samples {
        let jet = evaluate_jet(&model, &sj.z)?;
        let r = el_residual_with_jet(&jet, sj);
        let direct = spec.evaluate(sj.z.q[0], &sj.z.v, &sj.a[..k * k]);
        worst = worst.max((r.r_el[0] - direct).abs());
    }
    Ok(worst)
}

fn term(coef: f64, body: &str, first: bool) -> String {
    let sign = if coef < 0.0 {
        "-"
    } else if first {
        ""
    } else {
        "+"
    };
    let mag = coef.abs();
    if mag == 1.0 {
        format!("{sign}{body}")
    } else {
        format!("{sign}{mag}*{body}")
    }
}

/// Human-readable form of the built Lagrangian, e.g.
/// `0.5*(u_t^2-u_z^2)+0.3*s_z-0.5*2*u^2`.
pub fn render_lagrangian(spec: &PdeSpec, directions: &[String]) -> Result<String> {
    let c = spec.validate()?;
    let k = spec.k();
    let mut quad = String::new();
    for al in 0..k {
        for be in al..k {
            let (coef, body) = if al == be {
                (spec.a[(al, al)], format!("u_{}^2", directions[al]))
            } else {
                (
                    2.0 * spec.a[(al, be)],
                    format!("u_{}*u_{}", directions[al], directions[be]),
                )
            };
            if coef != 0.0 {
                quad.push_str(&term(coef, &body, quad.is_empty()));
            }
        }
    }
    let mut out = format!("0.5*({quad})");
    for (al, cal) in c.iter().enumerate() {
        if *cal != 0.0 {
            out.push_str(&term(-cal, &format!("s_{}", directions[al]), false));
        }
    }
    match &spec.g {
        GTerm::Polynomial(p) => {
            for (j, gj) in p.iter().enumerate() {
                if *gj == 0.0 {
                    continue;
                }
                let sign = if *gj < 0.0 { "+" } else { "-" };
                let mag = gj.abs();
                out.push_str(&match j {
                    0 => format!("{sign}{mag}*u"),
                    1 => format!("{sign}0.5*{mag}*u^2"),
                    _ => format!("{sign}{mag}/{}*u^{}", j + 1, j + 1),
                });
            }
        }
        GTerm::Function(_) => out.push_str("-gbar(u)"),
    }
    Ok(out)
}

/// Serializable form of a [`PdeSpec`] with polynomial `G`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdeConfig {
    /// Rows of `A`.
    pub a: Vec<Vec<f64>>,
    pub d: Vec<f64>,
    /// Coefficients of `G(u) = Σ_j g_j u^j`.
    #[serde(default)]
    pub g: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub directions: Option<Vec<String>>,
}

impl PdeConfig {
    pub fn to_spec(&self) -> Result<PdeSpec> {
        let k = self.d.len();
        if self.a.len() != k || self.a.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidSpec(format!("A must be {k}x{k} to match D")));
        }
        let a = DMatrix::from_fn(k, k, |i, j| self.a[i][j]);
        Ok(PdeSpec::new(a, self.d.clone(), GTerm::Polynomial(self.g.clone())))
    }

    pub fn directions(&self) -> Vec<String> {
        self.directions
            .clone()
            .unwrap_or_else(|| default_directions(self.d.len()))
    }

    pub fn build(&self) -> Result<LagrangianModel> {
        build_named(&self.to_spec()?, self.directions())
    }

    pub fn render(&self) -> Result<String> {
        render_lagrangian(&self.to_spec()?, &self.directions())
    }

    /// `A = diag(1, −μ², −μ²)`, `D = (γ, 0, 0)`, `G = 0`.
    pub fn membrane(mu: f64, gamma: f64) -> Self {
        let m2 = -mu * mu;
        PdeConfig {
            a: vec![vec![1.0, 0.0, 0.0], vec![0.0, m2, 0.0], vec![0.0, 0.0, m2]],
            d: vec![gamma, 0.0, 0.0],
            g: vec![],
            directions: None,
        }
    }

    /// `A = diag(1, −1)`, `D = (0, c)`, `G = m u`.
    pub fn telegraph(c: f64, m: f64) -> Self {
        PdeConfig {
            a: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            d: vec![0.0, c],
            g: vec![0.0, m],
            directions: None,
        }
    }
}
