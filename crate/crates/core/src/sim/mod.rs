//! Method-of-lines integrator for the Euler–Lagrange equations.
//!
//! The evolution direction is `t` (direction 0); the remaining `k − 1`
//! directions are discretized on a [`Grid`]. The state is `(φ, φ̇, s¹)` with
//! `s^α ≡ 0` for `α ≥ 2` and `s¹(0) = 0`, advanced by classical RK4 with
//! `φ̈` from [`evolution_rhs`](crate::dynamics::evolution_rhs) and `ṡ¹ = L`.

pub mod convergence;
pub mod export;
pub mod grid;
pub mod initial;
pub mod probe;
pub mod stencil;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::evolution_rhs_with_jet;
use crate::error::{Error, Result};
use crate::jet::{evaluate_jet, LagrangianModel, PhasePoint};
use crate::models::ModelSpec;

pub use grid::{Axis, Boundary, Grid};
pub use initial::InitialCondition;

/// Safety factor in `dt ≤ CFL_FACTOR · h / c_max`.
pub const CFL_FACTOR: f64 = 0.4;

/// Fields on the grid at one time. `phi` and `phidot` hold field `i` at
/// `i * grid.len() + node`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub phi: Vec<f64>,
    pub phidot: Vec<f64>,
    pub s1: Vec<f64>,
}

impl SimState {
    pub fn zeros(n: usize, grid: &Grid) -> Self {
        let m = grid.len();
        SimState {
            t: 0.0,
            phi: vec![0.0; n * m],
            phidot: vec![0.0; n * m],
            s1: vec![0.0; m],
        }
    }

    pub fn n(&self) -> usize {
        self.phi.len() / self.s1.len().max(1)
    }

    pub fn field<'a>(&'a self, i: usize, grid: &Grid) -> &'a [f64] {
        let m = grid.len();
        &self.phi[i * m..(i + 1) * m]
    }

    pub fn field_dot<'a>(&'a self, i: usize, grid: &Grid) -> &'a [f64] {
        let m = grid.len();
        &self.phidot[i * m..(i + 1) * m]
    }

    pub fn check_shape(&self, n: usize, grid: &Grid) -> Result<()> {
        let m = grid.len();
        if self.phi.len() != n * m || self.phidot.len() != n * m || self.s1.len() != m {
            return Err(Error::InvalidGrid(format!(
                "state shape ({}, {}, {}) does not match n = {n} on {m} nodes",
                self.phi.len(),
                self.phidot.len(),
                self.s1.len()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite()
            && self
                .phi
                .iter()
                .chain(&self.phidot)
                .chain(&self.s1)
                .all(|x| x.is_finite())
    }

    fn axpy(&self, c: f64, r: &Rates) -> SimState {
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + c * y).collect();
        SimState {
            t: self.t + c,
            phi: add(&self.phi, &r.dphi),
            phidot: add(&self.phidot, &r.dphidot),
            s1: add(&self.s1, &r.ds1),
        }
    }
}

/// Phase point at `node` with spatial derivatives by [`stencil::first`].
pub fn phase_point(n: usize, k: usize, grid: &Grid, state: &SimState, node: usize) -> PhasePoint {
    let m = grid.len();
    let mut z = PhasePoint::zeros(n, k);
    for i in 0..n {
        let f = &state.phi[i * m..(i + 1) * m];
        z.q[i] = f[node];
        z.v[i * k] = state.phidot[i * m + node];
        for a in 1..k {
            z.v[i * k + a] = stencil::first(grid, f, node, a - 1);
        }
    }
    z.s[0] = state.s1[node];
    z
}

struct Rates {
    dphi: Vec<f64>,
    dphidot: Vec<f64>,
    ds1: Vec<f64>,
}

fn check_layout(model: &LagrangianModel, grid: &Grid) -> Result<()> {
    if grid.dim() + 1 != model.k() {
        return Err(Error::InvalidGrid(format!(
            "model has k = {} but grid has {} spatial axes",
            model.k(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `(φ̈ⁱ, L)` at one node; Dirichlet end nodes stay at rest.
fn node_rate(model: &LagrangianModel, grid: &Grid, y: &SimState, node: usize) -> Result<(Vec<f64>, f64)> {
    let (n, k) = (model.n(), model.k());
    let m = k - 1;
    let z = phase_point(n, k, grid, y, node);
    if grid.is_boundary(node) {
        return Ok((vec![0.0; n], model.value(&z)?));
    }
    let len = grid.len();
    let mut spatial = vec![0.0; n * m * m];
    let mut mixed = vec![0.0; n * m];
    for i in 0..n {
        let f = &y.phi[i * len..(i + 1) * len];
        let fdot = &y.phidot[i * len..(i + 1) * len];
        for a in 0..m {
            mixed[i * m + a] = stencil::first(grid, fdot, node, a);
            for b in a..m {
                let d2 = stencil::hessian(grid, f, node, a, b);
                spatial[(i * m + a) * m + b] = d2;
                spatial[(i * m + b) * m + a] = d2;
            }
        }
    }
    let jet = evaluate_jet(model, &z)?;
    let accel = evolution_rhs_with_jet(&jet, &z, &spatial, &mixed)?;
    Ok((accel, jet.l))
}

fn rates(model: &LagrangianModel, grid: &Grid, y: &SimState) -> Result<Rates> {
    if !y.is_finite() {
        return Err(Error::BlowUp { t: y.t });
    }
    let n = model.n();
    let len = grid.len();
    let per_node: Vec<(Vec<f64>, f64)> = (0..len)
        .into_par_iter()
        .map(|node| node_rate(model, grid, y, node))
        .collect::<Result<_>>()
        .map_err(|e| match e {
            Error::NonFinite { .. } => Error::BlowUp { t: y.t },
            e => e,
        })?;
    let mut dphidot = vec![0.0; n * len];
    let mut ds1 = vec![0.0; len];
    for (node, (accel, l)) in per_node.into_iter().enumerate() {
        for i in 0..n {
            dphidot[i * len + node] = accel[i];
        }
        ds1[node] = l;
    }
    let mut dphi = y.phidot.clone();
    for node in (0..len).filter(|&nd| grid.is_boundary(nd)) {
        for i in 0..n {
            dphi[i * len + node] = 0.0;
        }
    }
    Ok(Rates { dphi, dphidot, ds1 })
}

fn rk4(model: &LagrangianModel, grid: &Grid, y: &SimState, dt: f64) -> Result<SimState> {
    let k1 = rates(model, grid, y)?;
    let k2 = rates(model, grid, &y.axpy(0.5 * dt, &k1))?;
    let k3 = rates(model, grid, &y.axpy(0.5 * dt, &k2))?;
    let k4 = rates(model, grid, &y.axpy(dt, &k3))?;
    let comb = |a: &[f64], r: [&[f64]; 4]| -> Vec<f64> {
        (0..a.len())
            .map(|j| a[j] + dt / 6.0 * (r[0][j] + 2.0 * r[1][j] + 2.0 * r[2][j] + r[3][j]))
            .collect()
    };
    let next = SimState {
        t: y.t + dt,
        phi: comb(&y.phi, [&k1.dphi, &k2.dphi, &k3.dphi, &k4.dphi]),
        phidot: comb(&y.phidot, [&k1.dphidot, &k2.dphidot, &k3.dphidot, &k4.dphidot]),
        s1: comb(&y.s1, [&k1.ds1, &k2.ds1, &k3.ds1, &k4.ds1]),
    };
    if !next.is_finite() {
        return Err(Error::BlowUp { t: next.t });
    }
    Ok(next)
}

/// Largest characteristic speed squared per spatial direction at one point:
/// eigenvalues of `−(W^{tt})⁻¹ W^{aa}`.
fn speeds_sq(model: &LagrangianModel, z: &PhasePoint) -> Result<Vec<f64>> {
    let (n, k) = (model.n(), model.k());
    let jet = evaluate_jet(model, z)?;
    let w = &jet.d2ldvdv;
    let block = |a: usize| nalgebra::DMatrix::from_fn(n, n, |i, j| w[(i * k + a, j * k + a)]);
    let w_tt = block(0);
    let inv = w_tt.try_inverse().ok_or(Error::NotEvolvable)?;
    let mut out = Vec::with_capacity(k - 1);
    for a in 1..k {
        let m = -(&inv * block(a));
        let scale = m.amax().max(1e-300);
        let mut worst = f64::INFINITY;
        let mut best = 0.0f64;
        for ev in m.complex_eigenvalues().iter() {
            if ev.im.abs() > 1e-9 * scale {
                return Err(Error::NotHyperbolic {
                    direction: a,
                    speed_sq: ev.re,
                });
            }
            worst = worst.min(ev.re);
            best = best.max(ev.re);
        }
        if worst < -1e-12 * scale {
            return Err(Error::NotHyperbolic {
                direction: a,
                speed_sq: worst,
            });
        }
        out.push(best);
    }
    Ok(out)
}

/// `CFL_FACTOR · min_a h_a / c_a` over all nodes of `state`; infinite when
/// there are no spatial directions or all speeds vanish.
pub fn cfl_limit(model: &LagrangianModel, grid: &Grid, state: &SimState) -> Result<f64> {
    check_layout(model, grid)?;
    state.check_shape(model.n(), grid)?;
    if grid.dim() == 0 {
        return Ok(f64::INFINITY);
    }
    let (n, k) = (model.n(), model.k());
    let per_node: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|node| speeds_sq(model, &phase_point(n, k, grid, state, node)))
        .collect::<Result<_>>()?;
    let mut limit = f64::INFINITY;
    for c2 in &per_node {
        for (a, &s) in c2.iter().enumerate() {
            if s > 0.0 {
                limit = limit.min(CFL_FACTOR * grid.spacing(a) / s.sqrt());
            }
        }
    }
    Ok(limit)
}

fn check_step(dt: f64, limit: f64) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveStep);
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, limit });
    }
    Ok(())
}

/// One RK4 step after validating `dt` against the CFL limit at `state`.
pub fn step(model: &LagrangianModel, state: &SimState, grid: &Grid, dt: f64) -> Result<SimState> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveStep);
    }
    check_step(dt, cfl_limit(model, grid, state)?)?;
    rk4(model, grid, state, dt)
}

/// Output of [`run`]: states at a uniform cadence plus run metadata.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimTrace {
    pub model: String,
    pub spec: Option<ModelSpec>,
    pub n: usize,
    pub k: usize,
    pub directions: Vec<String>,
    pub grid: Grid,
    /// Step actually taken (`t_end / steps`, at most the requested `dt`).
    pub dt: f64,
    pub output_every: usize,
    pub notes: Vec<String>,
    pub states: Vec<SimState>,
    /// When `output_every > 1`, the states one step before and after each
    /// stored state (absent for the first and last), so time derivatives can
    /// be taken at spacing `dt`. Not exported.
    #[serde(skip)]
    pub halo: Vec<Option<(SimState, SimState)>>,
}

impl SimTrace {
    /// Time between consecutive stored states.
    pub fn output_interval(&self) -> f64 {
        self.dt * self.output_every as f64
    }

    /// States around sample `j` for central time differences, with their
    /// half-separation: the halo if recorded, else the neighbouring samples.
    pub fn time_neighbors(&self, j: usize) -> Option<(&SimState, &SimState, f64)> {
        if let Some(Some((before, after))) = self.halo.get(j) {
            return Some((before, after, self.dt));
        }
        if j == 0 || j + 1 >= self.states.len() {
            return None;
        }
        Some((&self.states[j - 1], &self.states[j + 1], self.output_interval()))
    }

    /// Samples at which [`time_neighbors`](Self::time_neighbors) is available.
    pub fn interior_samples(&self) -> Vec<usize> {
        (0..self.states.len())
            .filter(|&j| self.time_neighbors(j).is_some())
            .collect()
    }

    pub fn t_end(&self) -> f64 {
        self.states.last().map_or(0.0, |s| s.t)
    }

    pub fn check(&self) -> Result<()> {
        if self.states.is_empty() {
            return Err(Error::InvalidTrace("no states".into()));
        }
        if self.grid.dim() + 1 != self.k {
            return Err(Error::InvalidTrace("grid dimension does not match k".into()));
        }
        for s in &self.states {
            s.check_shape(self.n, &self.grid)
                .map_err(|e| Error::InvalidTrace(e.to_string()))?;
        }
        let dt_out = self.output_interval();
        for w in self.states.windows(2) {
            if !(w[1].t > w[0].t) || ((w[1].t - w[0].t) - dt_out).abs() > 1e-9 * dt_out.max(1.0) {
                return Err(Error::InvalidTrace(
                    "output times are not uniform and increasing".into(),
                ));
            }
        }
        Ok(())
    }
}

/// `true` when `∂L/∂s` changes with `s¹` at the first node of `state`.
fn s_feedback(model: &LagrangianModel, grid: &Grid, state: &SimState) -> Result<bool> {
    let mut z = phase_point(model.n(), model.k(), grid, state, 0);
    let (_, g0) = model.gradient(&z)?;
    z.s[0] += 1.0;
    let (_, g1) = model.gradient(&z)?;
    let off = model.n() * (model.k() + 1);
    Ok(g0[off..] != g1[off..])
}

/// Integrate from `initial` to `t_end`, storing every `output_every`-th state.
///
/// The number of steps is rounded up to a multiple of `output_every`, so the
/// step taken may be slightly below `dt`; the final state is always stored.
pub fn run(
    model: &LagrangianModel,
    grid: &Grid,
    dt: f64,
    t_end: f64,
    initial: &SimState,
    output_every: usize,
) -> Result<SimTrace> {
    check_layout(model, grid)?;
    initial.check_shape(model.n(), grid)?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NonPositiveStep);
    }
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidSpec(format!(
            "t_end must be finite and nonnegative, got {t_end}"
        )));
    }
    let output_every = output_every.max(1);
    let limit = cfl_limit(model, grid, initial)?;
    check_step(dt, limit)?;
    let raw = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let steps = raw.div_ceil(output_every) * output_every;
    let dt_eff = if steps == 0 { dt } else { t_end / steps as f64 };

    let mut notes = vec!["s-gauge: s^1(0) = 0, s^a = 0 for a >= 2, ds^1/dt = L".to_string()];
    if s_feedback(model, grid, initial)? {
        notes.push("s-coupled, no analytic oracle".to_string());
    }

    let mut state = initial.clone();
    let t0 = state.t;
    let mut states = vec![state.clone()];
    let with_halo = output_every > 1;
    let mut halo: Vec<Option<(SimState, SimState)>> = if with_halo { vec![None] } else { vec![] };
    let mut before: Option<SimState> = None;
    for j in 1..=steps {
        let prev = state;
        state = rk4(model, grid, &prev, dt_eff)?;
        // Re-anchor time to avoid accumulated rounding in the cadence.
        state.t = t0 + j as f64 * dt_eff;
        if with_halo {
            if let Some(b) = before.take() {
                let last = halo.len() - 1;
                halo[last] = Some((b, state.clone()));
            }
        }
        if j % output_every == 0 {
            states.push(state.clone());
            if with_halo {
                halo.push(None);
                if j < steps {
                    before = Some(prev);
                }
            }
        }
    }
    Ok(SimTrace {
        model: model.name().to_string(),
        spec: model.spec().cloned(),
        n: model.n(),
        k: model.k(),
        directions: model.directions().to_vec(),
        grid: grid.clone(),
        dt: dt_eff,
        output_every,
        notes,
        states,
        halo,
    })
}

/// Discrete energy `Σ_nodes (Σ_i p^t_i φ̇ⁱ − L + Σ_α s^α ∂L/∂s^α) · ΔV`, with
/// spatial velocities taken as forward differences.
///
/// For Lagrangians quadratic in the spatial gradients this is exactly the
/// energy conserved by the semi-discrete scheme when `∂L/∂s = 0`.
pub fn energy_monitor(model: &LagrangianModel, grid: &Grid, state: &SimState) -> Result<f64> {
    check_layout(model, grid)?;
    state.check_shape(model.n(), grid)?;
    let (n, k) = (model.n(), model.k());
    let len = grid.len();
    let density: Vec<f64> = (0..len)
        .into_par_iter()
        .map(|node| {
            let mut z = phase_point(n, k, grid, state, node);
            for i in 0..n {
                let f = &state.phi[i * len..(i + 1) * len];
                for a in 1..k {
                    z.v[i * k + a] = stencil::forward(grid, f, node, a - 1);
                }
            }
            let (l, g) = model.gradient(&z)?;
            let dldv = &g[n..n + n * k];
            let dlds = &g[n + n * k..];
            let kinetic: f64 = (0..n).map(|i| dldv[i * k] * z.v[i * k]).sum();
            let s_part: f64 = z.s.iter().zip(dlds).map(|(s, d)| s * d).sum();
            Ok(kinetic - l + s_part)
        })
        .collect::<Result<_>>()?;
    Ok(density.iter().sum::<f64>() * grid.cell_volume())
}
