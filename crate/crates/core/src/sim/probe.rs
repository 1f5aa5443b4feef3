//! Quantities sampled from a [`SimTrace`]: second jets, Euler–Lagrange
//! residuals, the `s`-accumulation check and the momentum push-forward.

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{phase_point, stencil, SimState, SimTrace};
use crate::dynamics::{el_residual_with_jet, SecondJet};
use crate::error::{Error, Result};
use crate::hamiltonian::{MomentumField, MomentumPoint};
use crate::jet::{evaluate_jet, LagrangianModel};

fn check_model(model: &LagrangianModel, trace: &SimTrace) -> Result<()> {
    if model.n() != trace.n || model.k() != trace.k {
        return Err(Error::InvalidTrace(format!(
            "trace has (n, k) = ({}, {}), model has ({}, {})",
            trace.n,
            trace.k,
            model.n(),
            model.k()
        )));
    }
    trace.check()
}

/// Second jet of the discrete solution at sample `j`, `node`; `None` on a
/// Dirichlet end node or where no time neighbours exist.
pub fn second_jet(trace: &SimTrace, j: usize, node: usize) -> Option<SecondJet> {
    let grid = &trace.grid;
    if grid.is_boundary(node) {
        return None;
    }
    let (before, after, delta) = trace.time_neighbors(j)?;
    let (n, k) = (trace.n, trace.k);
    let state = &trace.states[j];
    let len = grid.len();
    let z = phase_point(n, k, grid, state, node);
    let mut a = vec![0.0; n * k * k];
    for i in 0..n {
        let f = state.field(i, grid);
        let fdot = state.field_dot(i, grid);
        let at = |al: usize, be: usize| (i * k + al) * k + be;
        a[at(0, 0)] = (after.phidot[i * len + node] - before.phidot[i * len + node]) / (2.0 * delta);
        for al in 1..k {
            let mixed = stencil::first(grid, fdot, node, al - 1);
            a[at(0, al)] = mixed;
            a[at(al, 0)] = mixed;
            for be in al..k {
                let d2 = stencil::hessian(grid, f, node, al - 1, be - 1);
                a[at(al, be)] = d2;
                a[at(be, al)] = d2;
            }
        }
    }
    let mut dsdt = DMatrix::zeros(k, k);
    dsdt[(0, 0)] = (after.s1[node] - before.s1[node]) / (2.0 * delta);
    Some(SecondJet::new(z, a, dsdt))
}

/// Largest residual over a trace and the number of points inspected.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceResidual {
    pub max: f64,
    pub points: usize,
}

impl TraceResidual {
    pub(crate) fn merge(self, other: TraceResidual) -> TraceResidual {
        TraceResidual {
            max: self.max.max(other.max),
            points: self.points + other.points,
        }
    }

    pub(crate) fn empty() -> TraceResidual {
        TraceResidual { max: 0.0, points: 0 }
    }
}

/// Max-norm of `f(node)` over `nodes`, in parallel.
pub(crate) fn fold_nodes<F>(nodes: &[usize], f: F) -> Result<TraceResidual>
where
    F: Fn(usize) -> Result<Option<f64>> + Sync,
{
    nodes
        .par_iter()
        .map(|&node| {
            Ok(match f(node)? {
                Some(r) => TraceResidual { max: r, points: 1 },
                None => TraceResidual::empty(),
            })
        })
        .try_reduce(TraceResidual::empty, |a, b| Ok(a.merge(b)))
}

/// Map `f(j, node)` over every interior sample and every node at least
/// `margin` nodes inside, folding the max-norm.
pub(crate) fn fold_trace<F>(trace: &SimTrace, margin: usize, f: F) -> Result<TraceResidual>
where
    F: Fn(usize, usize) -> Result<Option<f64>> + Sync,
{
    let nodes = trace.grid.nodes_with_margin(margin);
    let mut total = TraceResidual::empty();
    for j in trace.interior_samples() {
        total = total.merge(fold_nodes(&nodes, |node| f(j, node))?);
    }
    Ok(total)
}

/// Max-norm of the Euler–Lagrange residual `(rEL, rS)` of the trace resampled
/// into second jets, over interior samples and non-boundary nodes.
pub fn trace_el_residual(model: &LagrangianModel, trace: &SimTrace) -> Result<TraceResidual> {
    check_model(model, trace)?;
    fold_trace(trace, 1, |j, node| {
        let Some(sj) = second_jet(trace, j, node) else {
            return Ok(None);
        };
        let jet = evaluate_jet(model, &sj.z)?;
        Ok(Some(el_residual_with_jet(&jet, &sj).max_abs()))
    })
}

/// Result of comparing `s¹(t_end)` with trapezoid quadrature of `L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SAccumulation {
    pub discrepancy: f64,
    /// `‖L‖∞` over all stored samples.
    pub l_inf: f64,
    pub t_span: f64,
}

impl SAccumulation {
    /// Discrepancy relative to `‖L‖∞ · t_span` (zero when both vanish).
    pub fn relative(&self) -> f64 {
        let scale = self.l_inf * self.t_span;
        if scale == 0.0 {
            self.discrepancy
        } else {
            self.discrepancy / scale
        }
    }
}

fn l_field(model: &LagrangianModel, trace: &SimTrace, state: &SimState) -> Result<Vec<f64>> {
    (0..trace.grid.len())
        .into_par_iter()
        .map(|node| model.value(&phase_point(trace.n, trace.k, &trace.grid, state, node)))
        .collect()
}

/// Pointwise `|s¹(t_end) − s¹(t_0) − ∫L dt|` with the integral by the
/// trapezoid rule over the stored samples.
pub fn s_accumulation_check(model: &LagrangianModel, trace: &SimTrace) -> Result<SAccumulation> {
    check_model(model, trace)?;
    let len = trace.grid.len();
    let h = trace.output_interval();
    let mut integral = vec![0.0; len];
    let mut l_inf = 0.0f64;
    let last = trace.states.len() - 1;
    for (j, state) in trace.states.iter().enumerate() {
        let l = l_field(model, trace, state)?;
        let w = if j == 0 || j == last { 0.5 * h } else { h };
        for (acc, x) in integral.iter_mut().zip(&l) {
            *acc += w * x;
            l_inf = l_inf.max(x.abs());
        }
    }
    let (first, end) = (&trace.states[0], &trace.states[last]);
    let discrepancy = (0..len)
        .map(|node| (end.s1[node] - first.s1[node] - if last == 0 { 0.0 } else { integral[node] }).abs())
        .fold(0.0, f64::max);
    Ok(SAccumulation {
        discrepancy,
        l_inf,
        t_span: end.t - first.t,
    })
}

/// Legendre image of the discrete solution around sample `j`: three time
/// slices at the time-neighbour spacing, with Dirichlet end nodes dropped.
pub fn push_forward(model: &LagrangianModel, trace: &SimTrace, j: usize) -> Result<MomentumField> {
    check_model(model, trace)?;
    let (before, after, delta) = trace
        .time_neighbors(j)
        .ok_or_else(|| Error::InvalidTrace(format!("sample {j} has no time neighbours")))?;
    let grid = &trace.grid;
    let (n, k) = (trace.n, trace.k);
    let nodes = grid.nodes_with_margin(1);
    let mut shape = vec![3];
    let mut spacing = vec![delta];
    for (d, a) in grid.axes.iter().enumerate() {
        let drop = if a.boundary == super::Boundary::Dirichlet { 2 } else { 0 };
        shape.push(a.points - drop);
        spacing.push(grid.spacing(d));
    }
    let mut points = Vec::with_capacity(3 * nodes.len());
    for state in [before, &trace.states[j], after] {
        let slice: Vec<MomentumPoint> = nodes
            .par_iter()
            .map(|&node| {
                let z = phase_point(n, k, grid, state, node);
                let (_, g) = model.gradient(&z)?;
                Ok(MomentumPoint::new(z.q.clone(), g[n..n + n * k].to_vec(), z.s.clone()))
            })
            .collect::<Result<_>>()?;
        points.extend(slice);
    }
    Ok(MomentumField { spacing, shape, points })
}

#[cfg(test)]
mod tests {
    use super::super::{run, Boundary, Grid, InitialCondition, SimState};
    use super::*;
    use crate::models;

    #[test]
    fn zero_trace_has_zero_residuals() {
        let model = models::membrane(1.0, 0.3);
        let grid = Grid::uniform(2, 0.0, 1.0, 10, Boundary::Dirichlet).unwrap();
        let trace = run(&model, &grid, 0.02, 0.2, &SimState::zeros(1, &grid), 1).unwrap();
        let r = trace_el_residual(&model, &trace).unwrap();
        assert_eq!(r.max, 0.0);
        assert_eq!(r.points, (trace.states.len() - 2) * 64);
        let s = s_accumulation_check(&model, &trace).unwrap();
        assert_eq!(s.discrepancy, 0.0);
    }

    #[test]
    fn halo_and_plain_neighbours_agree_on_cadence() {
        let model = models::membrane(1.0, 0.0);
        let grid = Grid::uniform(2, 0.0, std::f64::consts::PI, 12, Boundary::Dirichlet).unwrap();
        let init = InitialCondition::Mode {
            field: 0,
            amplitude: 1.0,
            velocity: 0.0,
            wavenumbers: vec![1.0, 1.0],
        }
        .to_state(1, &grid)
        .unwrap();
        let dense = run(&model, &grid, 0.05, 1.0, &init, 1).unwrap();
        let sparse = run(&model, &grid, 0.05, 1.0, &init, 5).unwrap();
        assert_eq!(sparse.states.len(), 5);
        assert_eq!(sparse.interior_samples(), vec![1, 2, 3]);
        let (b, a, d) = sparse.time_neighbors(2).unwrap();
        assert_eq!(d, dense.dt);
        assert_eq!(b, &dense.states[9]);
        assert_eq!(a, &dense.states[11]);
        let field = push_forward(&model, &sparse, 2).unwrap();
        assert_eq!(field.shape, vec![3, 10, 10]);
    }
}
