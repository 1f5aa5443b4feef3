//! Infinitesimal symmetries, their dissipated quantities and dissipation laws
//! along discrete solutions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::contact::{self, energy_dq, energy_ds, energy_dv, hessian, reeb, DEFAULT_RANK_TOL};
use crate::error::{Error, Result};
use crate::hyperdual::HyperDual;
use crate::jet::{evaluate_jet, LagrangianModel, PhasePoint};
use crate::models::StringParams;
use crate::sim::probe::{fold_nodes, TraceResidual};
use crate::sim::{phase_point, SimState, SimTrace};

type ComponentFn = dyn Fn(&[HyperDual]) -> Vec<HyperDual> + Send + Sync;

/// Vector field `Y = Yqⁱ ∂/∂qⁱ + Yvⁱ_α ∂/∂vⁱ_α + Ys^α ∂/∂s^α` on phase space.
///
/// Components are given on Taylor numbers over the coordinates `(q, v, s)`
/// so the Jacobian is exact.
#[derive(Clone)]
pub struct SymmetryField {
    name: String,
    n: usize,
    k: usize,
    f: Arc<ComponentFn>,
}

impl fmt::Debug for SymmetryField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymmetryField")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("k", &self.k)
            .finish()
    }
}

impl SymmetryField {
    /// `f` receives the `n + nk + k` coordinates and returns as many components.
    pub fn new(
        name: impl Into<String>,
        n: usize,
        k: usize,
        f: impl Fn(&[HyperDual]) -> Vec<HyperDual> + Send + Sync + 'static,
    ) -> Self {
        SymmetryField {
            name: name.into(),
            n,
            k,
            f: Arc::new(f),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.n + self.n * self.k + self.k
    }

    fn check(&self, z: &PhasePoint) -> Result<()> {
        z.check_dims(self.n, self.k)
    }

    fn eval(&self, c: &[HyperDual]) -> Vec<HyperDual> {
        let out = (self.f)(c);
        assert_eq!(
            out.len(),
            self.dim(),
            "symmetry field {} returned wrong length",
            self.name
        );
        out
    }

    /// Components `(Yq, Yv, Ys)` concatenated.
    pub fn components(&self, z: &PhasePoint) -> Result<Vec<f64>> {
        self.check(z)?;
        let c: Vec<HyperDual> = z.coords().into_iter().map(HyperDual::constant).collect();
        Ok(self.eval(&c).iter().map(|x| x.re).collect())
    }

    /// `J[(c, d)] = ∂Y^c/∂x^d` over the `(q, v, s)` coordinates.
    pub fn jacobian(&self, z: &PhasePoint) -> Result<DMatrix<f64>> {
        self.check(z)?;
        let dim = self.dim();
        let mut c: Vec<HyperDual> = z.coords().into_iter().map(HyperDual::constant).collect();
        let mut jac = DMatrix::zeros(dim, dim);
        for d in 0..dim {
            c[d].e1 = 1.0;
            for (row, y) in self.eval(&c).iter().enumerate() {
                jac[(row, d)] = y.e1;
            }
            c[d].e1 = 0.0;
        }
        Ok(jac)
    }

    /// `a·self + b·other`.
    pub fn combine(&self, a: f64, other: &SymmetryField, b: f64) -> SymmetryField {
        assert_eq!((self.n, self.k), (other.n, other.k));
        let (f, g) = (self.f.clone(), other.f.clone());
        SymmetryField::new(
            format!("{a}*{}+{b}*{}", self.name, other.name),
            self.n,
            self.k,
            move |c| f(c).into_iter().zip(g(c)).map(|(x, y)| x * a + y * b).collect(),
        )
    }

    pub fn zero(n: usize, k: usize) -> Self {
        SymmetryField::new("zero", n, k, move |_| vec![HyperDual::ZERO; n + n * k + k])
    }

    /// `∂/∂qⁱ`.
    pub fn translation_q(n: usize, k: usize, i: usize) -> Self {
        assert!(i < n);
        SymmetryField::new(format!("dq{i}"), n, k, move |_| {
            let mut y = vec![HyperDual::ZERO; n + n * k + k];
            y[i] = HyperDual::ONE;
            y
        })
    }

    /// `∂/∂s^α`.
    pub fn translation_s(n: usize, k: usize, alpha: usize) -> Self {
        assert!(alpha < k);
        SymmetryField::new(format!("ds{alpha}"), n, k, move |_| {
            let mut y = vec![HyperDual::ZERO; n + n * k + k];
            y[n + n * k + alpha] = HyperDual::ONE;
            y
        })
    }

    /// Lift of the field scaling `qⁱ ∂/∂qⁱ`: `qⁱ ∂/∂qⁱ + vⁱ_α ∂/∂vⁱ_α`.
    pub fn scaling_lift(n: usize, k: usize) -> Self {
        SymmetryField::new("scaling", n, k, move |c| {
            let mut y = c[..n + n * k].to_vec();
            y.extend(std::iter::repeat(HyperDual::ZERO).take(k));
            y
        })
    }

    /// `Y = (∂A₂/∂x) ∂/∂x + (∂A₁/∂y) ∂/∂y` for the string model.
    pub fn string_potential(p: &StringParams) -> Self {
        let (a2x, a1y) = (p.a2.d_dx(), p.a1.d_dy());
        SymmetryField::new("stringY", 2, 2, move |c| {
            let (x, y) = (c[0], c[1]);
            let mut out = vec![HyperDual::ZERO; 2 + 4 + 2];
            out[0] = a2x.eval(x, y);
            out[1] = a1y.eval(x, y);
            out
        })
    }
}

/// Coefficients of `L_Y η^α` (one row per `α`, one column per coordinate) and
/// the value of `Y(E_L)`, at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct LieDerivatives {
    pub eta: DMatrix<f64>,
    pub energy: f64,
}

pub fn lie_derivatives(model: &LagrangianModel, y: &SymmetryField, z: &PhasePoint) -> Result<LieDerivatives> {
    let (n, k) = (model.n(), model.k());
    if (y.n, y.k) != (n, k) {
        return Err(Error::InvalidSpec(format!(
            "symmetry field {} has (n, k) = ({}, {}), model has ({n}, {k})",
            y.name, y.n, y.k
        )));
    }
    let jet = evaluate_jet(model, z)?;
    let comp = y.components(z)?;
    let jac = y.jacobian(z)?;
    let nk = n * k;
    let dim = n + nk + k;
    let (yq, yv, ys) = (&comp[..n], &comp[n..n + nk], &comp[n + nk..]);
    let yv_vec = DVector::from_column_slice(yv);
    let ys_vec = DVector::from_column_slice(ys);
    // Y(p^α_i) for every flat pair (i, α).
    let yp = &jet.d2ldvdq * DVector::from_column_slice(yq) + &jet.d2ldvdv * &yv_vec + &jet.d2ldvds * &ys_vec;

    let mut eta = DMatrix::zeros(k, dim);
    for alpha in 0..k {
        for c in 0..dim {
            let mut v = jac[(n + nk + alpha, c)];
            for i in 0..n {
                v -= jet.dldv[i * k + alpha] * jac[(i, c)];
            }
            if c < n {
                v -= yp[c * k + alpha];
            }
            eta[(alpha, c)] = v;
        }
    }
    let energy =
        contact::dot(&energy_dq(&jet, z), yq) + energy_dv(&jet, z).dot(&yv_vec) + contact::dot(&energy_ds(&jet, z), ys);
    Ok(LieDerivatives { eta, energy })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SymmetryReport {
    pub is_symmetry: bool,
    pub max_residual: f64,
    /// Largest coefficient of any `L_Y η^α`.
    pub eta_residual: f64,
    /// Largest `|Y(E_L)|`.
    pub energy_residual: f64,
}

/// Evaluates `L_Y η_L^α` and `Y(E_L)` at every point.
pub fn check_contact_symmetry(
    model: &LagrangianModel,
    y: &SymmetryField,
    points: &[PhasePoint],
    tol: f64,
) -> Result<SymmetryReport> {
    let mut eta_residual = 0.0f64;
    let mut energy_residual = 0.0f64;
    for z in points {
        let d = lie_derivatives(model, y, z)?;
        eta_residual = eta_residual.max(d.eta.amax());
        energy_residual = energy_residual.max(d.energy.abs());
    }
    let max_residual = eta_residual.max(energy_residual);
    Ok(SymmetryReport {
        is_symmetry: max_residual <= tol,
        max_residual,
        eta_residual,
        energy_residual,
    })
}

/// Max-norm of `[Y, (R_L)_α]` over the points. `Y((R_L)_α)` is taken by central
/// differences of the Reeb components along `Y` with step `h`.
pub fn reeb_bracket_check(model: &LagrangianModel, y: &SymmetryField, points: &[PhasePoint], h: f64) -> Result<f64> {
    let (n, k) = (model.n(), model.k());
    let nk = n * k;
    let dim = n + nk + k;
    let reeb_at = |z: &PhasePoint| -> Result<Vec<DVector<f64>>> {
        let jet = evaluate_jet(model, z)?;
        let r = reeb(&jet, &hessian(&jet, DEFAULT_RANK_TOL))?;
        Ok(r.vcomp
            .iter()
            .enumerate()
            .map(|(alpha, vc)| {
                let mut full = DVector::zeros(dim);
                full.rows_mut(n, nk).copy_from(vc);
                full[n + nk + alpha] = 1.0;
                full
            })
            .collect())
    };
    let mut worst = 0.0f64;
    for z in points {
        let comp = DVector::from_vec(y.components(z)?);
        let jac = y.jacobian(z)?;
        let shift = |sign: f64| {
            let c: Vec<f64> = z
                .coords()
                .iter()
                .zip(comp.iter())
                .map(|(x, d)| x + sign * h * d)
                .collect();
            PhasePoint::from_coords(n, k, &c)
        };
        let (rp, rm, r0) = (reeb_at(&shift(1.0))?, reeb_at(&shift(-1.0))?, reeb_at(z)?);
        for alpha in 0..k {
            let y_of_r = (&rp[alpha] - &rm[alpha]) / (2.0 * h);
            let r_of_y = &jac * &r0[alpha];
            worst = worst.max((y_of_r - r_of_y).amax());
        }
    }
    Ok(worst)
}

/// `F^α = −i(Y)η_L^α = Σ_i p^α_i Yqⁱ − Ys^α`.
#[derive(Clone, Debug)]
pub struct DissipatedQuantity {
    pub y: SymmetryField,
}

impl DissipatedQuantity {
    pub fn eval(&self, model: &LagrangianModel, z: &PhasePoint) -> Result<Vec<f64>> {
        let (n, k) = (model.n(), model.k());
        let (_, g) = model.gradient(z)?;
        Ok(flux_from(n, k, &g, &self.y.components(z)?))
    }
}

fn flux_from(n: usize, k: usize, grad: &[f64], comp: &[f64]) -> Vec<f64> {
    let p = &grad[n..n + n * k];
    (0..k)
        .map(|alpha| (0..n).map(|i| p[i * k + alpha] * comp[i]).sum::<f64>() - comp[n + n * k + alpha])
        .collect()
}

pub fn dissipated_quantity(y: &SymmetryField) -> DissipatedQuantity {
    DissipatedQuantity { y: y.clone() }
}

/// Flux `F^α` at every node of `state`, flat `node * k + α`.
fn flux_field<F>(trace: &SimTrace, state: &SimState, flux: &F) -> Result<Vec<f64>>
where
    F: Fn(&PhasePoint) -> Result<Vec<f64>> + Sync,
{
    let per_node: Vec<Vec<f64>> = (0..trace.grid.len())
        .into_par_iter()
        .map(|node| flux(&phase_point(trace.n, trace.k, &trace.grid, state, node)))
        .collect::<Result<_>>()?;
    Ok(per_node.concat())
}

/// Max-norm over the trace of `div F + Σ_α c_α F^α`, with `F` from `flux` and
/// `c` from `coeff` at the centre point. Nodes within two of a Dirichlet end
/// are skipped so every difference is central.
fn law_residual<F, C>(model: &LagrangianModel, trace: &SimTrace, flux: F, coeff: C) -> Result<TraceResidual>
where
    F: Fn(&PhasePoint) -> Result<Vec<f64>> + Sync,
    C: Fn(&PhasePoint) -> Result<Vec<f64>> + Sync,
{
    if (model.n(), model.k()) != (trace.n, trace.k) {
        return Err(Error::InvalidTrace("trace dimensions do not match the model".into()));
    }
    trace.check()?;
    let k = trace.k;
    let grid = &trace.grid;
    let nodes = grid.nodes_with_margin(2);
    let mut total = TraceResidual::empty();
    for j in trace.interior_samples() {
        let (before, after, delta) = trace.time_neighbors(j).expect("interior sample");
        let centre = &trace.states[j];
        let fb = flux_field(trace, before, &flux)?;
        let fa = flux_field(trace, after, &flux)?;
        let fc = flux_field(trace, centre, &flux)?;
        let part = fold_nodes(&nodes, |node| {
            let mut div = (fa[node * k] - fb[node * k]) / (2.0 * delta);
            for a in 1..k {
                let p = grid.neighbor(node, a - 1, 1).expect("interior node");
                let m = grid.neighbor(node, a - 1, -1).expect("interior node");
                div += (fc[p * k + a] - fc[m * k + a]) / (2.0 * grid.spacing(a - 1));
            }
            let c = coeff(&phase_point(trace.n, k, grid, centre, node))?;
            let src: f64 = (0..k).map(|a| c[a] * fc[node * k + a]).sum();
            Ok(Some((div + src).abs()))
        })?;
        total = total.merge(part);
    }
    Ok(total)
}

/// Residual of `div(∂L/∂vⁱ_α) − Σ_α (∂L/∂s^α)(∂L/∂vⁱ_α) = 0` along the trace
/// for a cyclic coordinate `i`.
pub fn momentum_dissipation_check(model: &LagrangianModel, i: usize, trace: &SimTrace) -> Result<TraceResidual> {
    let (n, k) = (model.n(), model.k());
    if i >= n {
        return Err(Error::InvalidSpec(format!("coordinate {i} out of range for n = {n}")));
    }
    trace.check()?;
    let last = trace.states.len() - 1;
    for state in [&trace.states[0], &trace.states[last / 2], &trace.states[last]] {
        for node in 0..trace.grid.len() {
            let z = phase_point(n, k, &trace.grid, state, node);
            let (l, g) = model.gradient(&z)?;
            if g[i].abs() > 1e-12 * (1.0 + l.abs()) {
                return Err(Error::NotCyclic {
                    index: i,
                    value: g[i].abs(),
                });
            }
        }
    }
    law_residual(
        model,
        trace,
        |z| {
            let (_, g) = model.gradient(z)?;
            Ok((0..k).map(|a| g[n + i * k + a]).collect())
        },
        |z| {
            let (_, g) = model.gradient(z)?;
            Ok(g[n + n * k..].iter().map(|d| -d).collect())
        },
    )
}

/// Residual of `div(F∘σ) + [(R_L)_α(E_L) F^α]∘σ` along the trace.
pub fn dissipation_law_check(
    model: &LagrangianModel,
    f: &DissipatedQuantity,
    trace: &SimTrace,
) -> Result<TraceResidual> {
    law_residual(
        model,
        trace,
        |z| f.eval(model, z),
        |z| {
            let jet = evaluate_jet(model, z)?;
            let r = reeb(&jet, &hessian(&jet, DEFAULT_RANK_TOL))?;
            Ok(contact::reeb_derivative_of_energy(&jet, z, &r))
        },
    )
}
