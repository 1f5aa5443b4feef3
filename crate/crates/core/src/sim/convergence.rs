//! Reference solutions and grid-refinement studies.

use super::{run, Grid, SimState, SimTrace};
use crate::error::{Error, Result};
use crate::jet::LagrangianModel;

/// A known solution `φ(t, x)` over the spatial coordinates of a [`Grid`].
pub trait ReferenceSolution: Sync {
    fn n(&self) -> usize;
    fn value(&self, t: f64, x: &[f64]) -> Vec<f64>;
    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64>;

    /// Reference data at time `t` on `grid`, with `s¹ = 0`.
    fn sample(&self, grid: &Grid, t: f64) -> SimState {
        let n = self.n();
        let len = grid.len();
        let mut state = SimState::zeros(n, grid);
        state.t = t;
        for node in 0..len {
            let x = grid.coords(node);
            let (u, v) = (self.value(t, &x), self.velocity(t, &x));
            for i in 0..n {
                state.phi[i * len + node] = u[i];
                state.phidot[i * len + node] = v[i];
            }
        }
        state
    }
}

/// Solution `x(t)` of `ẍ + δẋ + Ω²x = 0` with `x(0) = A`, `ẋ(0) = V`, returned
/// as `(x, ẋ)`. Covers the under-, critically and over-damped cases.
pub fn damped_amplitude(omega_sq: f64, damping: f64, a: f64, v: f64, t: f64) -> (f64, f64) {
    let decay = (-0.5 * damping * t).exp();
    let w2 = omega_sq - 0.25 * damping * damping;
    let b = v + 0.5 * damping * a;
    // x = e^{−δt/2} (A c(t) + B s(t)), with c, s the even/odd fundamental pair.
    let (c, s, dc, ds) = if w2 > 0.0 {
        let w = w2.sqrt();
        let (sn, cs) = (w * t).sin_cos();
        (cs, sn / w, -w * sn, cs)
    } else if w2 < 0.0 {
        let w = (-w2).sqrt();
        let (sh, ch) = ((w * t).sinh(), (w * t).cosh());
        (ch, sh / w, w * sh, ch)
    } else {
        (1.0, t, 0.0, 1.0)
    };
    let x = decay * (a * c + b * s);
    let xdot = -0.5 * damping * x + decay * (a * dc + b * ds);
    (x, xdot)
}

/// Separable mode `φⁱ = x(t) Π_d sin(k_d (x_d − lower_d))` of a damped wave
/// equation `φ_tt − Σ c_d² φ_dd + δ φ_t = 0`, in field `field` only.
#[derive(Clone, Debug, PartialEq)]
pub struct DampedMode {
    pub n: usize,
    pub field: usize,
    pub amplitude: f64,
    pub velocity: f64,
    pub wavenumbers: Vec<f64>,
    pub lower: Vec<f64>,
    /// `Ω² = Σ c_d² k_d²`.
    pub omega_sq: f64,
    pub damping: f64,
}

impl DampedMode {
    /// Mode of `u_tt − μ²Δu + γu_t = 0` starting from rest with amplitude 1.
    pub fn membrane(mu: f64, gamma: f64, kx: f64, ky: f64, grid: &Grid) -> Self {
        DampedMode {
            n: 1,
            field: 0,
            amplitude: 1.0,
            velocity: 0.0,
            wavenumbers: vec![kx, ky],
            lower: grid.axes.iter().map(|a| a.lower).collect(),
            omega_sq: mu * mu * (kx * kx + ky * ky),
            damping: gamma,
        }
    }

    /// One polarization of `ρx_tt − τx_zz − γρx_t = 0` (the string with no
    /// field coupling).
    pub fn string(rho: f64, tau: f64, gamma: f64, field: usize, amplitude: f64, kz: f64, grid: &Grid) -> Self {
        DampedMode {
            n: 2,
            field,
            amplitude,
            velocity: 0.0,
            wavenumbers: vec![kz],
            lower: grid.axes.iter().map(|a| a.lower).collect(),
            omega_sq: tau / rho * kz * kz,
            damping: -gamma,
        }
    }

    fn profile(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.wavenumbers)
            .zip(&self.lower)
            .map(|((xd, kd), lo)| (kd * (xd - lo)).sin())
            .product()
    }
}

impl ReferenceSolution for DampedMode {
    fn n(&self) -> usize {
        self.n
    }

    fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        out[self.field] =
            damped_amplitude(self.omega_sq, self.damping, self.amplitude, self.velocity, t).0 * self.profile(x);
        out
    }

    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        out[self.field] =
            damped_amplitude(self.omega_sq, self.damping, self.amplitude, self.velocity, t).1 * self.profile(x);
        out
    }
}

/// Sum of reference solutions with the same `n`.
impl<R: ReferenceSolution> ReferenceSolution for [R] {
    fn n(&self) -> usize {
        self[0].n()
    }

    fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for r in self {
            for (o, u) in out.iter_mut().zip(r.value(t, x)) {
                *o += u;
            }
        }
        out
    }

    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for r in self {
            for (o, u) in out.iter_mut().zip(r.velocity(t, x)) {
                *o += u;
            }
        }
        out
    }
}

/// Gaussian pulse `A exp(−r²/w²)`, `r` the nearest periodic image of
/// `z − z₀ − c t`, solving `u_tt − c²u_zz = 0` on a periodic interval.
#[derive(Clone, Debug, PartialEq)]
pub struct TravelingWave {
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub speed: f64,
    pub period: f64,
}

impl TravelingWave {
    fn offset(&self, t: f64, x: &[f64]) -> f64 {
        let r = x[0] - self.center - self.speed * t;
        r - self.period * (r / self.period).round()
    }
}

impl ReferenceSolution for TravelingWave {
    fn n(&self) -> usize {
        1
    }

    fn value(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let r = self.offset(t, x);
        vec![self.amplitude * (-r * r / (self.width * self.width)).exp()]
    }

    fn velocity(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let r = self.offset(t, x);
        let w2 = self.width * self.width;
        vec![self.speed * 2.0 * r / w2 * self.amplitude * (-r * r / w2).exp()]
    }
}

/// Max-norm of `φ − φ_ref` over every stored state and node.
pub fn trace_error(trace: &SimTrace, reference: &dyn ReferenceSolution) -> f64 {
    let len = trace.grid.len();
    let mut err = 0.0f64;
    for state in &trace.states {
        for node in 0..len {
            let u = reference.value(state.t, &trace.grid.coords(node));
            for (i, ui) in u.iter().enumerate() {
                err = err.max((state.phi[i * len + node] - ui).abs());
            }
        }
    }
    err
}

/// Least-squares slope of `log(error)` against `log(h)`; `None` with fewer than
/// two samples or any error that is zero or non-finite.
pub fn observed_order(h: &[f64], errors: &[f64]) -> Option<f64> {
    if h.len() != errors.len() || h.len() < 2 {
        return None;
    }
    if errors.iter().chain(h).any(|e| !(*e > 0.0) || !e.is_finite()) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|x| x.ln()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: Option<f64>,
}

/// Runs `model` from the reference data on each grid with `dt = courant · h`
/// and measures the max-norm error against the reference.
pub fn el_convergence(
    model: &LagrangianModel,
    reference: &dyn ReferenceSolution,
    grids: &[Grid],
    courant: f64,
    t_end: f64,
    output_every: usize,
) -> Result<ConvergenceReport> {
    if grids.len() < 3 {
        return Err(Error::InvalidGrid(format!(
            "refinement study needs at least 3 grids, got {}",
            grids.len()
        )));
    }
    let mut h = Vec::with_capacity(grids.len());
    let mut errors = Vec::with_capacity(grids.len());
    for grid in grids {
        let hg = grid
            .min_spacing()
            .ok_or_else(|| Error::InvalidGrid("refinement study needs spatial axes".into()))?;
        let trace = run(
            model,
            grid,
            courant * hg,
            t_end,
            &reference.sample(grid, 0.0),
            output_every,
        )?;
        h.push(hg);
        errors.push(trace_error(&trace, reference));
    }
    let order = observed_order(&h, &errors);
    Ok(ConvergenceReport { h, errors, order })
}
