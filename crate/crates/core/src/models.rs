//! Built-in Lagrangian models and the serializable registry that names them.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hyperdual::HyperDual;
use crate::inverse::PdeConfig;
use crate::jet::LagrangianModel;

/// One monomial `c · x^px · y^py`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub px: u32,
    pub py: u32,
    pub c: f64,
}

/// Polynomial in two variables.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Poly2 {
    pub terms: Vec<Monomial>,
}

impl Poly2 {
    pub fn new(terms: Vec<Monomial>) -> Self {
        Poly2 { terms }
    }

    pub fn zero() -> Self {
        Poly2::default()
    }

    pub fn monomial(px: u32, py: u32, c: f64) -> Self {
        Poly2::new(vec![Monomial { px, py, c }])
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|m| m.c == 0.0)
    }

    pub fn eval(&self, x: HyperDual, y: HyperDual) -> HyperDual {
        self.terms
            .iter()
            .map(|m| x.powi(m.px as i32) * y.powi(m.py as i32) * m.c)
            .sum()
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.terms
            .iter()
            .map(|m| m.c * x.powi(m.px as i32) * y.powi(m.py as i32))
            .sum()
    }

    pub fn d_dx(&self) -> Poly2 {
        Poly2::new(
            self.terms
                .iter()
                .filter(|m| m.px > 0)
                .map(|m| Monomial {
                    px: m.px - 1,
                    py: m.py,
                    c: m.c * m.px as f64,
                })
                .collect(),
        )
    }

    pub fn d_dy(&self) -> Poly2 {
        Poly2::new(
            self.terms
                .iter()
                .filter(|m| m.py > 0)
                .map(|m| Monomial {
                    px: m.px,
                    py: m.py - 1,
                    c: m.c * m.py as f64,
                })
                .collect(),
        )
    }
}

/// Parameters of the charged string with dissipation, `n = 2` (fields `x, y`),
/// `k = 2` (directions `t, z`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringParams {
    pub rho: f64,
    pub tau: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Vector potential `(A₁, A₂)` as functions of the field values `(x, y)`.
    pub a1: Poly2,
    pub a2: Poly2,
    /// Scalar potential `φ(x, y)`.
    #[serde(default)]
    pub phi: Poly2,
}

impl StringParams {
    /// Constant magnetic field `B` in the symmetric gauge `A₁ = −½By`, `A₂ = ½Bx`.
    pub fn symmetric_gauge(rho: f64, tau: f64, lambda: f64, gamma: f64, b: f64, phi: Poly2) -> Self {
        StringParams {
            rho,
            tau,
            lambda,
            gamma,
            a1: Poly2::monomial(0, 1, -0.5 * b),
            a2: Poly2::monomial(1, 0, 0.5 * b),
            phi,
        }
    }
}

/// Registry entry for every built-in model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    /// `L = ½ Σ (vⁱ_α)²`.
    Free { n: usize, k: usize },
    /// `L = ½u_t² − (μ²/2)(u_x² + u_y²) − γ s^t`.
    Membrane { mu: f64, gamma: f64 },
    /// `L = ½ρ(x_t²+y_t²) − ½τ(x_z²+y_z²) − λ(φ − A₁x_t − A₂y_t) + γ s^t`.
    String(StringParams),
    /// Contact mechanics, `L = ½v² − ½ω²q² − γ s`.
    Oscillator { omega: f64, gamma: f64 },
    /// `n = k = 1`, `L = ½v² + ε s v`: the Reeb field has a velocity component.
    SCoupled { eps: f64 },
    /// Lagrangian built for `A^{αβ}u_{αβ} + D^α u_α + G(u) = 0`.
    Inverse(PdeConfig),
}

impl ModelSpec {
    pub fn build(&self) -> Result<LagrangianModel> {
        let model = match self {
            ModelSpec::Free { n, k } => free(*n, *k),
            ModelSpec::Membrane { mu, gamma } => membrane(*mu, *gamma),
            ModelSpec::String(p) => string(p.clone()),
            ModelSpec::Oscillator { omega, gamma } => oscillator(*omega, *gamma),
            ModelSpec::SCoupled { eps } => s_coupled(*eps),
            ModelSpec::Inverse(cfg) => cfg.build()?,
        };
        Ok(model.with_spec(self.clone()))
    }

    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Free { .. } => "free",
            ModelSpec::Membrane { .. } => "membrane",
            ModelSpec::String(_) => "string",
            ModelSpec::Oscillator { .. } => "oscillator",
            ModelSpec::SCoupled { .. } => "s_coupled",
            ModelSpec::Inverse(_) => "inverse",
        }
    }
}

pub fn free(n: usize, k: usize) -> LagrangianModel {
    LagrangianModel::new("free", n, k, |_q: &[HyperDual], v: &[HyperDual], _s: &[HyperDual]| {
        v.iter().map(|&x| x * x).sum::<HyperDual>() * 0.5
    })
}

pub fn membrane(mu: f64, gamma: f64) -> LagrangianModel {
    let mu2 = mu * mu;
    LagrangianModel::new(
        "membrane",
        1,
        3,
        move |_q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]| {
            let (ut, ux, uy) = (v[0], v[1], v[2]);
            ut * ut * 0.5 - (ux * ux + uy * uy) * (0.5 * mu2) - s[0] * gamma
        },
    )
}

pub fn string(p: StringParams) -> LagrangianModel {
    LagrangianModel::new(
        "string",
        2,
        2,
        move |q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]| {
            let (x, y) = (q[0], q[1]);
            let (xt, xz, yt, yz) = (v[0], v[1], v[2], v[3]);
            let a1 = p.a1.eval(x, y);
            let a2 = p.a2.eval(x, y);
            let phi = p.phi.eval(x, y);
            (xt * xt + yt * yt) * (0.5 * p.rho)
                - (xz * xz + yz * yz) * (0.5 * p.tau)
                - (phi - a1 * xt - a2 * yt) * p.lambda
                + s[0] * p.gamma
        },
    )
}

pub fn oscillator(omega: f64, gamma: f64) -> LagrangianModel {
    LagrangianModel::new(
        "oscillator",
        1,
        1,
        move |q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]| {
            (v[0] * v[0] - q[0] * q[0] * (omega * omega)) * 0.5 - s[0] * gamma
        },
    )
}

pub fn s_coupled(eps: f64) -> LagrangianModel {
    LagrangianModel::new(
        "s_coupled",
        1,
        1,
        move |_q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]| v[0] * v[0] * 0.5 + s[0] * v[0] * eps,
    )
}
