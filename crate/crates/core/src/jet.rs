//! Phase-space points of `⊕ᵏTQ × ℝᵏ`, Lagrangian models and their second-order jets.
//!
//! Velocities are stored flat: the pair `(i, α)` lives at index `i * k + α`.
//! The same convention is used for momenta, Hessian rows/columns and every
//! other `(i, α)`-indexed block in the crate.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hyperdual::HyperDual;
use crate::models::ModelSpec;

/// A point `(qⁱ, vⁱ_α, s^α)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint {
    pub q: Vec<f64>,
    /// Flat `n × k`, `(i, α) ↦ i * k + α`.
    pub v: Vec<f64>,
    pub s: Vec<f64>,
}

impl PhasePoint {
    pub fn new(q: Vec<f64>, v: Vec<f64>, s: Vec<f64>) -> Self {
        PhasePoint { q, v, s }
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        PhasePoint::new(vec![0.0; n], vec![0.0; n * k], vec![0.0; k])
    }

    pub fn n(&self) -> usize {
        self.q.len()
    }

    pub fn k(&self) -> usize {
        self.s.len()
    }

    #[inline]
    pub fn vel(&self, i: usize, alpha: usize) -> f64 {
        self.v[i * self.k() + alpha]
    }

    /// Coordinates concatenated as `(q, v, s)`.
    pub fn coords(&self) -> Vec<f64> {
        let mut c = Vec::with_capacity(self.q.len() + self.v.len() + self.s.len());
        c.extend_from_slice(&self.q);
        c.extend_from_slice(&self.v);
        c.extend_from_slice(&self.s);
        c
    }

    pub fn from_coords(n: usize, k: usize, c: &[f64]) -> Self {
        PhasePoint::new(
            c[..n].to_vec(),
            c[n..n + n * k].to_vec(),
            c[n + n * k..n + n * k + k].to_vec(),
        )
    }

    pub fn check_dims(&self, n: usize, k: usize) -> Result<()> {
        check_len("q", n, self.q.len())?;
        check_len("v", n * k, self.v.len())?;
        check_len("s", k, self.s.len())?;
        if let Some(c) = self.q.iter().chain(&self.v).chain(&self.s).position(|x| !x.is_finite()) {
            return Err(Error::NonFinite {
                coordinate: coordinate_name(n, k, c),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Human-readable name of coordinate `c` in the `(q, v, s)` ordering.
pub fn coordinate_name(n: usize, k: usize, c: usize) -> String {
    if c < n {
        format!("q[{c}]")
    } else if c < n + n * k {
        let f = c - n;
        format!("v[{}][{}]", f / k, f % k)
    } else {
        format!("s[{}]", c - n - n * k)
    }
}

/// Value, first derivatives and the velocity-involving second-derivative
/// blocks of a Lagrangian at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub l: f64,
    pub dldq: Vec<f64>,
    /// Flat `n × k`.
    pub dldv: Vec<f64>,
    pub dlds: Vec<f64>,
    /// `W`, `nk × nk`, symmetric.
    pub d2ldvdv: DMatrix<f64>,
    /// `nk × n`.
    pub d2ldvdq: DMatrix<f64>,
    /// `nk × k`.
    pub d2ldvds: DMatrix<f64>,
}

impl Jet2 {
    pub fn n(&self) -> usize {
        self.dldq.len()
    }

    pub fn k(&self) -> usize {
        self.dlds.len()
    }
}

/// Lagrangian density evaluated on second-order Taylor numbers.
pub trait Density: Send + Sync {
    /// `q` has length `n`, `v` is flat `n × k`, `s` has length `k`.
    fn eval(&self, q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]) -> HyperDual;
}

impl<F> Density for F
where
    F: Fn(&[HyperDual], &[HyperDual], &[HyperDual]) -> HyperDual + Send + Sync,
{
    fn eval(&self, q: &[HyperDual], v: &[HyperDual], s: &[HyperDual]) -> HyperDual {
        self(q, v, s)
    }
}

/// A field theory: dimensions `(n, k)` and a Lagrangian density.
#[derive(Clone)]
pub struct LagrangianModel {
    name: String,
    n: usize,
    k: usize,
    directions: Vec<String>,
    spec: Option<ModelSpec>,
    density: Arc<dyn Density>,
}

impl fmt::Debug for LagrangianModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LagrangianModel")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("spec", &self.spec)
            .finish()
    }
}

/// Default labels of the independent variables: `t` first, then spatial names.
pub fn default_directions(k: usize) -> Vec<String> {
    match k {
        1 => vec!["t".into()],
        2 => vec!["t".into(), "z".into()],
        3 => vec!["t".into(), "x".into(), "y".into()],
        _ => std::iter::once("t".to_string())
            .chain((1..k).map(|a| format!("x{a}")))
            .collect(),
    }
}

impl LagrangianModel {
    pub fn new(name: impl Into<String>, n: usize, k: usize, density: impl Density + 'static) -> Self {
        assert!(n >= 1 && k >= 1, "a model needs n >= 1 and k >= 1");
        LagrangianModel {
            name: name.into(),
            n,
            k,
            directions: default_directions(k),
            spec: None,
            density: Arc::new(density),
        }
    }

    pub fn with_directions(mut self, directions: Vec<String>) -> Self {
        assert_eq!(directions.len(), self.k);
        self.directions = directions;
        self
    }

    pub(crate) fn with_spec(mut self, spec: ModelSpec) -> Self {
        self.spec = Some(spec);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn directions(&self) -> &[String] {
        &self.directions
    }

    /// The registry entry this model was built from, if any.
    pub fn spec(&self) -> Option<&ModelSpec> {
        self.spec.as_ref()
    }

    pub fn density(&self) -> &dyn Density {
        self.density.as_ref()
    }

    /// Lagrangian value only.
    pub fn value(&self, z: &PhasePoint) -> Result<f64> {
        z.check_dims(self.n, self.k)?;
        let lift = |x: &[f64]| x.iter().map(|&a| HyperDual::constant(a)).collect::<Vec<_>>();
        let l = self.density.eval(&lift(&z.q), &lift(&z.v), &lift(&z.s)).re;
        if !l.is_finite() {
            return Err(Error::NonFinite { coordinate: "L".into() });
        }
        Ok(l)
    }

    /// Value and full gradient in `(q, v, s)` ordering, by first-order sweeps.
    pub fn gradient(&self, z: &PhasePoint) -> Result<(f64, Vec<f64>)> {
        z.check_dims(self.n, self.k)?;
        let mut x: Vec<HyperDual> = z.coords().into_iter().map(HyperDual::constant).collect();
        let (n, nk) = (self.n, self.n * self.k);
        let mut grad = vec![0.0; x.len()];
        let mut value = 0.0;
        for c in 0..x.len() {
            x[c].e1 = 1.0;
            let f = self.density.eval(&x[..n], &x[n..n + nk], &x[n + nk..]);
            x[c].e1 = 0.0;
            value = f.re;
            grad[c] = f.e1;
        }
        if !value.is_finite() {
            return Err(Error::NonFinite { coordinate: "L".into() });
        }
        if let Some(c) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                coordinate: format!("dL/d{}", coordinate_name(self.n, self.k, c)),
            });
        }
        Ok((value, grad))
    }
}

/// Exact value, gradient and velocity-involving Hessian blocks of `L` at `z`.
///
/// One hyper-dual pass per pair `(v_a, w)` with `w` ranging over the upper
/// triangle of velocities, then configuration and dissipation coordinates.
pub fn evaluate_jet(model: &LagrangianModel, z: &PhasePoint) -> Result<Jet2> {
    let (n, k) = (model.n, model.k);
    z.check_dims(n, k)?;
    let nk = n * k;
    let mut q: Vec<HyperDual> = z.q.iter().map(|&a| HyperDual::constant(a)).collect();
    let mut v: Vec<HyperDual> = z.v.iter().map(|&a| HyperDual::constant(a)).collect();
    let mut s: Vec<HyperDual> = z.s.iter().map(|&a| HyperDual::constant(a)).collect();
    let density = model.density.as_ref();

    let mut jet = Jet2 {
        l: 0.0,
        dldq: vec![0.0; n],
        dldv: vec![0.0; nk],
        dlds: vec![0.0; k],
        d2ldvdv: DMatrix::zeros(nk, nk),
        d2ldvdq: DMatrix::zeros(nk, n),
        d2ldvds: DMatrix::zeros(nk, k),
    };

    for a in 0..nk {
        v[a].e1 = 1.0;
        for b in a..nk {
            v[b].e2 = 1.0;
            let f = density.eval(&q, &v, &s);
            v[b].e2 = 0.0;
            if b == a {
                jet.l = f.re;
                jet.dldv[a] = f.e1;
            }
            jet.d2ldvdv[(a, b)] = f.e12;
            jet.d2ldvdv[(b, a)] = f.e12;
        }
        for j in 0..n {
            q[j].e2 = 1.0;
            let f = density.eval(&q, &v, &s);
            q[j].e2 = 0.0;
            if a == 0 {
                jet.dldq[j] = f.e2;
            }
            jet.d2ldvdq[(a, j)] = f.e12;
        }
        for beta in 0..k {
            s[beta].e2 = 1.0;
            let f = density.eval(&q, &v, &s);
            s[beta].e2 = 0.0;
            if a == 0 {
                jet.dlds[beta] = f.e2;
            }
            jet.d2ldvds[(a, beta)] = f.e12;
        }
        v[a].e1 = 0.0;
    }

    check_jet_finite(&jet, k)?;
    Ok(jet)
}

fn check_jet_finite(jet: &Jet2, k: usize) -> Result<()> {
    let bad = |coordinate: String| Err(Error::NonFinite { coordinate });
    if !jet.l.is_finite() {
        return bad("L".into());
    }
    if let Some(i) = jet.dldq.iter().position(|x| !x.is_finite()) {
        return bad(format!("dL/dq[{i}]"));
    }
    if let Some(f) = jet.dldv.iter().position(|x| !x.is_finite()) {
        return bad(format!("dL/dv[{}][{}]", f / k, f % k));
    }
    if let Some(a) = jet.dlds.iter().position(|x| !x.is_finite()) {
        return bad(format!("dL/ds[{a}]"));
    }
    let blocks = [("v", &jet.d2ldvdv), ("q", &jet.d2ldvdq), ("s", &jet.d2ldvds)];
    for (label, m) in blocks {
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if !m[(r, c)].is_finite() {
                    let col = if label == "v" {
                        format!("v[{}][{}]", c / k, c % k)
                    } else {
                        format!("{label}[{c}]")
                    };
                    return bad(format!("d2L/dv[{}][{}]d{col}", r / k, r % k));
                }
            }
        }
    }
    Ok(())
}

/// Worst relative discrepancy `|fd − exact| / max(1, |exact|)` between
/// `evaluate_jet` and central differences with step `h`.
///
/// First derivatives are differenced from values of `L`; the second-order
/// blocks are differenced from the first-order blocks at shifted points.
pub fn fd_check(model: &LagrangianModel, z: &PhasePoint, h: f64) -> Result<f64> {
    assert!(h > 0.0, "finite-difference step must be positive");
    let (n, k) = (model.n, model.k);
    let jet = evaluate_jet(model, z)?;
    let base = z.coords();
    let dim = base.len();
    let nk = n * k;
    let shifted = |c: usize, delta: f64| {
        let mut x = base.clone();
        x[c] += delta;
        PhasePoint::from_coords(n, k, &x)
    };
    let rel = |fd: f64, exact: f64| (fd - exact).abs() / exact.abs().max(1.0);

    let mut worst = rel(model.value(z)?, jet.l);
    let mut first = vec![0.0; dim];
    first[..n].copy_from_slice(&jet.dldq);
    first[n..n + nk].copy_from_slice(&jet.dldv);
    first[n + nk..].copy_from_slice(&jet.dlds);

    for c in 0..dim {
        let lp = model.value(&shifted(c, h))?;
        let lm = model.value(&shifted(c, -h))?;
        worst = worst.max(rel((lp - lm) / (2.0 * h), first[c]));

        // column c of the second-order blocks: d(dL/dv_a)/dx_c
        let jp = evaluate_jet(model, &shifted(c, h))?;
        let jm = evaluate_jet(model, &shifted(c, -h))?;
        for a in 0..nk {
            let fd = (jp.dldv[a] - jm.dldv[a]) / (2.0 * h);
            let exact = if c < n {
                jet.d2ldvdq[(a, c)]
            } else if c < n + nk {
                jet.d2ldvdv[(a, c - n)]
            } else {
                jet.d2ldvds[(a, c - n - nk)]
            };
            worst = worst.max(rel(fd, exact));
        }
    }
    Ok(worst)
}

/// Largest relative asymmetry of the `W` block.
pub fn hessian_asymmetry(jet: &Jet2) -> f64 {
    let w = &jet.d2ldvdv;
    let mut worst: f64 = 0.0;
    for r in 0..w.nrows() {
        for c in r + 1..w.ncols() {
            let scale = w[(r, c)].abs().max(w[(c, r)].abs()).max(f64::MIN_POSITIVE);
            worst = worst.max((w[(r, c)] - w[(c, r)]).abs() / scale);
        }
    }
    worst
}
