//! Second-order finite-difference stencils on one scalar field of a [`Grid`].

use super::grid::Grid;

/// `∂f/∂x_d` at `node`: central where both neighbours exist, one-sided
/// second order on a Dirichlet end node.
pub fn first(grid: &Grid, f: &[f64], node: usize, d: usize) -> f64 {
    let h = grid.spacing(d);
    match (grid.neighbor(node, d, -1), grid.neighbor(node, d, 1)) {
        (Some(m), Some(p)) => (f[p] - f[m]) / (2.0 * h),
        (None, Some(p)) => {
            let pp = grid.neighbor(node, d, 2).expect("axis has at least 8 points");
            (-3.0 * f[node] + 4.0 * f[p] - f[pp]) / (2.0 * h)
        }
        (Some(m), None) => {
            let mm = grid.neighbor(node, d, -2).expect("axis has at least 8 points");
            (3.0 * f[node] - 4.0 * f[m] + f[mm]) / (2.0 * h)
        }
        (None, None) => unreachable!("axis has at least 8 points"),
    }
}

/// Forward difference `(f[j+1] − f[j]) / h`, zero past a Dirichlet end.
pub fn forward(grid: &Grid, f: &[f64], node: usize, d: usize) -> f64 {
    grid.neighbor(node, d, 1)
        .map_or(0.0, |p| (f[p] - f[node]) / grid.spacing(d))
}

/// Compact `∂²f/∂x_d²`; the node must not sit on a Dirichlet end.
pub fn second(grid: &Grid, f: &[f64], node: usize, d: usize) -> f64 {
    let h = grid.spacing(d);
    let m = grid.neighbor(node, d, -1).expect("interior node");
    let p = grid.neighbor(node, d, 1).expect("interior node");
    (f[p] - 2.0 * f[node] + f[m]) / (h * h)
}

/// Cross `∂²f/∂x_d∂x_e` on the four diagonal neighbours, `d ≠ e`.
pub fn cross(grid: &Grid, f: &[f64], node: usize, d: usize, e: usize) -> f64 {
    let at = |a: isize, b: isize| {
        let n1 = grid.neighbor(node, d, a).expect("interior node");
        f[grid.neighbor(n1, e, b).expect("interior node")]
    };
    (at(1, 1) - at(1, -1) - at(-1, 1) + at(-1, -1)) / (4.0 * grid.spacing(d) * grid.spacing(e))
}

/// `∂²f/∂x_d∂x_e`, compact on the diagonal.
pub fn hessian(grid: &Grid, f: &[f64], node: usize, d: usize, e: usize) -> f64 {
    if d == e {
        second(grid, f, node, d)
    } else {
        cross(grid, f, node, d, e)
    }
}

#[cfg(test)]
mod tests {
    use super::super::grid::{Axis, Boundary};
    use super::*;

    fn sample(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|n| f(&grid.coords(n))).collect()
    }

    #[test]
    fn quadratics_are_exact() {
        let g = Grid::new(vec![
            Axis::new(-1.0, 1.0, 11, Boundary::Dirichlet),
            Axis::new(0.0, 2.0, 9, Boundary::Dirichlet),
        ])
        .unwrap();
        let f = sample(&g, |x| {
            1.0 + 2.0 * x[0] - x[1] + 0.5 * x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1]
        });
        for node in 0..g.len() {
            let x = g.coords(node);
            assert!((first(&g, &f, node, 0) - (2.0 + x[0] + 3.0 * x[1])).abs() < 1e-12);
            assert!((first(&g, &f, node, 1) - (-1.0 + 3.0 * x[0] - 2.0 * x[1])).abs() < 1e-12);
            if !g.is_boundary(node) {
                assert!((hessian(&g, &f, node, 0, 0) - 1.0).abs() < 1e-10);
                assert!((hessian(&g, &f, node, 1, 1) + 2.0).abs() < 1e-10);
                assert!((hessian(&g, &f, node, 0, 1) - 3.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn periodic_second_order() {
        let errs: Vec<f64> = [32, 64]
            .iter()
            .map(|&pts| {
                let g = Grid::new(vec![Axis::new(0.0, 1.0, pts, Boundary::Periodic)]).unwrap();
                let tau = std::f64::consts::TAU;
                let f = sample(&g, |x| (tau * x[0]).sin());
                (0..g.len())
                    .map(|n| (second(&g, &f, n, 0) + tau * tau * f[n]).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
    }
}
