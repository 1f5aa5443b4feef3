use serde::{Deserialize, Serialize};

use super::grid::{Boundary, Grid};
use super::SimState;
use crate::error::{Error, Result};

/// Initial data for one field; `s¹` always starts at zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialCondition {
    Zero,
    /// `φ = amplitude · Π_d sin(k_d (x_d − lower_d))`, `φ̇ = velocity · (same profile)`.
    Mode {
        field: usize,
        amplitude: f64,
        #[serde(default)]
        velocity: f64,
        wavenumbers: Vec<f64>,
    },
    /// Gaussian bump moving with constant `velocity`: `φ̇ = −velocity · ∇φ`.
    /// Periodic axes use the nearest image of `center`.
    Gaussian {
        field: usize,
        amplitude: f64,
        center: Vec<f64>,
        width: f64,
        #[serde(default)]
        velocity: Vec<f64>,
    },
}

impl InitialCondition {
    /// Several initial conditions summed.
    pub fn superpose(n: usize, grid: &Grid, parts: &[InitialCondition]) -> Result<SimState> {
        let mut state = SimState::zeros(n, grid);
        for p in parts {
            p.add_to(n, grid, &mut state)?;
        }
        Ok(state)
    }

    pub fn to_state(&self, n: usize, grid: &Grid) -> Result<SimState> {
        InitialCondition::superpose(n, grid, std::slice::from_ref(self))
    }

    fn add_to(&self, n: usize, grid: &Grid, state: &mut SimState) -> Result<()> {
        let len = grid.len();
        let check_field = |field: usize| {
            if field >= n {
                Err(Error::InvalidSpec(format!(
                    "initial condition for field {field}, model has n = {n}"
                )))
            } else {
                Ok(())
            }
        };
        let check_dim = |what: &str, found: usize| {
            if found != grid.dim() {
                Err(Error::InvalidSpec(format!(
                    "{what} has {found} entries, grid has {} axes",
                    grid.dim()
                )))
            } else {
                Ok(())
            }
        };
        match self {
            InitialCondition::Zero => {}
            InitialCondition::Mode {
                field,
                amplitude,
                velocity,
                wavenumbers,
            } => {
                check_field(*field)?;
                check_dim("wavenumbers", wavenumbers.len())?;
                for node in 0..len {
                    let x = grid.coords(node);
                    let profile: f64 = x
                        .iter()
                        .zip(wavenumbers)
                        .zip(&grid.axes)
                        .map(|((xd, kd), a)| (kd * (xd - a.lower)).sin())
                        .product();
                    state.phi[field * len + node] += amplitude * profile;
                    state.phidot[field * len + node] += velocity * profile;
                }
            }
            InitialCondition::Gaussian {
                field,
                amplitude,
                center,
                width,
                velocity,
            } => {
                check_field(*field)?;
                check_dim("center", center.len())?;
                if !velocity.is_empty() {
                    check_dim("velocity", velocity.len())?;
                }
                if !(*width > 0.0) {
                    return Err(Error::InvalidSpec("gaussian width must be positive".into()));
                }
                for node in 0..len {
                    let x = grid.coords(node);
                    let d: Vec<f64> = x
                        .iter()
                        .zip(center)
                        .zip(&grid.axes)
                        .map(|((xd, cd), a)| {
                            let mut r = xd - cd;
                            if a.boundary == Boundary::Periodic {
                                let period = a.upper - a.lower;
                                r -= period * (r / period).round();
                            }
                            r
                        })
                        .collect();
                    let r2: f64 = d.iter().map(|r| r * r).sum();
                    let g = amplitude * (-r2 / (width * width)).exp();
                    state.phi[field * len + node] += g;
                    // ∂g/∂x_d = −2 r_d / w² · g
                    let adv: f64 = velocity.iter().zip(&d).map(|(c, r)| c * r).sum();
                    state.phidot[field * len + node] += 2.0 * adv / (width * width) * g;
                }
            }
        }
        for node in (0..len).filter(|&nd| grid.is_boundary(nd)) {
            for i in 0..n {
                state.phi[i * len + node] = 0.0;
                state.phidot[i * len + node] = 0.0;
            }
        }
        Ok(())
    }
}
