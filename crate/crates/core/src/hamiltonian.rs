//! Legendre-transformed side: inverse Legendre map, Hamiltonian and the
//! Hamilton–De Donder–Weyl residuals in canonical coordinates.
//!
//! Derivatives of `H` come from duality at the Legendre preimage:
//! `∂H/∂p^α_i = vⁱ_α`, `∂H/∂qⁱ = −∂L/∂qⁱ`, `∂H/∂s^α = −∂L/∂s^α`.

use nalgebra::DVector;

use crate::contact::{energy, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::jet::{check_len, evaluate_jet, LagrangianModel, PhasePoint};

pub const NEWTON_MAX_ITER: usize = 50;
pub const NEWTON_TOL: f64 = 1e-10;

/// `(qⁱ, p^α_i, s^α)`; `p` is flat `n × k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentumPoint {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
}

impl MomentumPoint {
    pub fn new(q: Vec<f64>, p: Vec<f64>, s: Vec<f64>) -> Self {
        MomentumPoint { q, p, s }
    }

    pub fn check_dims(&self, n: usize, k: usize) -> Result<()> {
        check_len("q", n, self.q.len())?;
        check_len("p", n * k, self.p.len())?;
        check_len("s", k, self.s.len())
    }
}

/// Newton iteration on `v ↦ ∂L/∂v(q, v, s) − p` with the fibre Hessian as Jacobian.
/// The initial guess defaults to `v0 = p`.
pub fn legendre_inverse(model: &LagrangianModel, mp: &MomentumPoint, v0: Option<&[f64]>) -> Result<PhasePoint> {
    let (n, k) = (model.n(), model.k());
    mp.check_dims(n, k)?;
    let v0 = v0.unwrap_or(&mp.p);
    check_len("initial guess", n * k, v0.len())?;
    let scale = mp.p.iter().fold(1.0_f64, |m, p| m.max(p.abs()));
    let mut z = PhasePoint::new(mp.q.clone(), v0.to_vec(), mp.s.clone());
    let mut residual = f64::INFINITY;
    for _ in 0..NEWTON_MAX_ITER {
        let jet = evaluate_jet(model, &z)?;
        let r = DVector::from_iterator(n * k, jet.dldv.iter().zip(&mp.p).map(|(a, b)| a - b));
        residual = r.amax();
        if residual <= NEWTON_TOL * scale {
            return Ok(z);
        }
        let w = crate::contact::symmetrized(&jet.d2ldvdv);
        if !crate::contact::rank_test(&w, DEFAULT_RANK_TOL).0 {
            return Err(Error::NotRegular);
        }
        let step = w.lu().solve(&r).ok_or(Error::NotRegular)?;
        for (v, d) in z.v.iter_mut().zip(step.iter()) {
            *v -= d;
        }
        if z.v.iter().any(|v| !v.is_finite()) {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: NEWTON_MAX_ITER,
        residual,
    })
}

/// `H = E_L ∘ FL⁻¹`.
pub fn hamiltonian_value(model: &LagrangianModel, mp: &MomentumPoint) -> Result<f64> {
    let z = legendre_inverse(model, mp, None)?;
    let jet = evaluate_jet(model, &z)?;
    Ok(energy(&jet, &z))
}

/// Value and duality-derived gradient of `H` at a momentum point.
#[derive(Clone, Debug, PartialEq)]
pub struct HamiltonianJet {
    pub h: f64,
    pub dh_dq: Vec<f64>,
    /// Flat `n × k`; equals the velocities of the Legendre preimage.
    pub dh_dp: Vec<f64>,
    pub dh_ds: Vec<f64>,
    pub preimage: PhasePoint,
}

pub fn hamiltonian_jet(model: &LagrangianModel, mp: &MomentumPoint, v0: Option<&[f64]>) -> Result<HamiltonianJet> {
    let z = legendre_inverse(model, mp, v0)?;
    let jet = evaluate_jet(model, &z)?;
    Ok(HamiltonianJet {
        h: energy(&jet, &z),
        dh_dq: jet.dldq.iter().map(|x| -x).collect(),
        dh_dp: z.v.clone(),
        dh_ds: jet.dlds.iter().map(|x| -x).collect(),
        preimage: z,
    })
}

/// Momentum-space map sampled on a uniform grid in the `k` independent
/// variables, row-major with direction 0 slowest.
#[derive(Clone, Debug)]
pub struct MomentumField {
    pub spacing: Vec<f64>,
    pub shape: Vec<usize>,
    pub points: Vec<MomentumPoint>,
}

impl MomentumField {
    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.shape.len()];
        for d in (0..self.shape.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.shape[d + 1];
        }
        strides
    }
}

/// Largest residual of each of the three canonical-coordinate equations.
#[derive(Clone, Debug, PartialEq)]
pub struct HdwResidual {
    /// `∂qⁱ/∂t^α − ∂H/∂p^α_i`
    pub q_eq: f64,
    /// `Σ_α ∂p^α_i/∂t^α + ∂H/∂qⁱ + p^α_i ∂H/∂s^α`
    pub p_eq: f64,
    /// `Σ_α ∂s^α/∂t^α − (p^α_i ∂H/∂p^α_i − H)`
    pub s_eq: f64,
    pub points: usize,
}

impl HdwResidual {
    pub fn max(&self) -> f64 {
        self.q_eq.max(self.p_eq).max(self.s_eq)
    }
}

/// Hamilton–De Donder–Weyl residuals at every interior grid point, with path
/// derivatives by second-order central differences.
pub fn hdw_residual(model: &LagrangianModel, field: &MomentumField) -> Result<HdwResidual> {
    let (n, k) = (model.n(), model.k());
    check_len("grid directions", k, field.shape.len())?;
    check_len("grid spacings", k, field.spacing.len())?;
    let total: usize = field.shape.iter().product();
    check_len("grid points", total, field.points.len())?;
    if field.shape.iter().any(|&s| s < 3) {
        return Err(Error::InvalidGrid(
            "hdw_residual needs at least 3 samples per direction".into(),
        ));
    }
    let strides = field.strides();
    let mut out = HdwResidual {
        q_eq: 0.0,
        p_eq: 0.0,
        s_eq: 0.0,
        points: 0,
    };
    let mut idx = vec![0usize; k];
    for flat in 0..total {
        let mut rem = flat;
        for d in 0..k {
            idx[d] = rem / strides[d];
            rem %= strides[d];
        }
        if idx.iter().zip(&field.shape).any(|(&i, &s)| i == 0 || i + 1 == s) {
            continue;
        }
        let mp = &field.points[flat];
        mp.check_dims(n, k)?;
        let hj = hamiltonian_jet(model, mp, None)?;
        let diff = |alpha: usize, get: &dyn Fn(&MomentumPoint) -> f64| {
            let fwd = &field.points[flat + strides[alpha]];
            let bwd = &field.points[flat - strides[alpha]];
            (get(fwd) - get(bwd)) / (2.0 * field.spacing[alpha])
        };
        for i in 0..n {
            for alpha in 0..k {
                let dq = diff(alpha, &|m: &MomentumPoint| m.q[i]);
                out.q_eq = out.q_eq.max((dq - hj.dh_dp[i * k + alpha]).abs());
            }
            let mut r = 0.0;
            for alpha in 0..k {
                r += diff(alpha, &|m: &MomentumPoint| m.p[i * k + alpha]);
                r += mp.p[i * k + alpha] * hj.dh_ds[alpha];
            }
            r += hj.dh_dq[i];
            out.p_eq = out.p_eq.max(r.abs());
        }
        let div_s: f64 = (0..k).map(|alpha| diff(alpha, &|m: &MomentumPoint| m.s[alpha])).sum();
        let pv: f64 = mp.p.iter().zip(&hj.dh_dp).map(|(p, v)| p * v).sum();
        out.s_eq = out.s_eq.max((div_s - (pv - hj.h)).abs());
        out.points += 1;
    }
    Ok(out)
}

/// Contraction `Σ_α i(X_α)Ω^α` with `Ω^α = −H dη^α + dH ∧ η^α`, together with
/// `Σ_α i(X_α)η^α + H`, for a k-vector field on momentum space.
///
/// `x[α]` lists the components of `X_α` in `(q, p, s)` ordering. Returns the
/// max-norm of both residuals; errors where `H` vanishes.
pub fn no_reeb_residual(model: &LagrangianModel, mp: &MomentumPoint, x: &[Vec<f64>]) -> Result<(f64, f64)> {
    let (n, k) = (model.n(), model.k());
    let nk = n * k;
    check_len("k-vector field", k, x.len())?;
    for xa in x {
        check_len("vector field components", n + nk + k, xa.len())?;
    }
    let hj = hamiltonian_jet(model, mp, None)?;
    if hj.h.abs() < 1e-12 {
        return Err(Error::VanishingHamiltonian(hj.h));
    }
    let mut dh = Vec::with_capacity(n + nk + k);
    dh.extend_from_slice(&hj.dh_dq);
    dh.extend_from_slice(&hj.dh_dp);
    dh.extend_from_slice(&hj.dh_ds);

    // η^α as a covector in (q, p, s): −p^α_i on dqⁱ, 1 on ds^α.
    let eta = |alpha: usize| {
        let mut e = vec![0.0; n + nk + k];
        for i in 0..n {
            e[i] = -mp.p[i * k + alpha];
        }
        e[n + nk + alpha] = 1.0;
        e
    };
    let apply = |form: &[f64], v: &[f64]| form.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();

    let mut omega = vec![0.0; n + nk + k];
    let mut contraction = hj.h;
    for (alpha, xa) in x.iter().enumerate() {
        let e = eta(alpha);
        let eta_x = apply(&e, xa);
        let xh = apply(&dh, xa);
        contraction += eta_x;
        // i(X)dη^α with dη^α = dqⁱ ∧ dp^α_i
        for i in 0..n {
            let p_idx = n + i * k + alpha;
            omega[p_idx] -= hj.h * xa[i];
            omega[i] += hj.h * xa[p_idx];
        }
        for c in 0..omega.len() {
            omega[c] += xh * e[c] - eta_x * dh[c];
        }
    }
    let omega_max = omega.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    Ok((omega_max, contraction.abs()))
}
