use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Field pinned to zero on both end nodes, which are part of the grid.
    Dirichlet,
    /// Node `points` coincides with node 0 and is not stored.
    Periodic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lower: f64,
    pub upper: f64,
    pub points: usize,
    pub boundary: Boundary,
}

impl Axis {
    pub fn new(lower: f64, upper: f64, points: usize, boundary: Boundary) -> Self {
        Axis {
            lower,
            upper,
            points,
            boundary,
        }
    }

    pub fn spacing(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => (self.upper - self.lower) / (self.points - 1) as f64,
            Boundary::Periodic => (self.upper - self.lower) / self.points as f64,
        }
    }

    pub fn coord(&self, i: usize) -> f64 {
        self.lower + i as f64 * self.spacing()
    }

    /// Same extent with the spacing halved.
    pub fn refined(&self) -> Axis {
        let points = match self.boundary {
            Boundary::Dirichlet => 2 * self.points - 1,
            Boundary::Periodic => 2 * self.points,
        };
        Axis { points, ..self.clone() }
    }
}

/// Tensor-product grid over the spatial directions `α ≥ 2`, row-major with
/// the first axis slowest. With no axes the grid is a single point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Self> {
        for (d, a) in axes.iter().enumerate() {
            if a.points < 8 {
                return Err(Error::InvalidGrid(format!(
                    "axis {d} has {} points, need at least 8",
                    a.points
                )));
            }
            if !(a.upper > a.lower) || !a.lower.is_finite() || !a.upper.is_finite() {
                return Err(Error::InvalidGrid(format!("axis {d} has empty or non-finite extent")));
            }
        }
        Ok(Grid { axes })
    }

    /// Square `[lower, upper]^dim` grid.
    pub fn uniform(dim: usize, lower: f64, upper: f64, points: usize, boundary: Boundary) -> Result<Self> {
        Grid::new(vec![Axis::new(lower, upper, points, boundary); dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self, d: usize) -> f64 {
        self.axes[d].spacing()
    }

    pub fn min_spacing(&self) -> Option<f64> {
        self.axes.iter().map(Axis::spacing).reduce(f64::min)
    }

    pub fn refined(&self) -> Grid {
        Grid {
            axes: self.axes.iter().map(Axis::refined).collect(),
        }
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dim()];
        for d in (0..self.dim().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * self.axes[d + 1].points;
        }
        strides
    }

    pub fn index(&self, node: usize) -> Vec<usize> {
        let strides = self.strides();
        let mut rem = node;
        strides
            .iter()
            .map(|s| {
                let i = rem / s;
                rem %= s;
                i
            })
            .collect()
    }

    pub fn node(&self, index: &[usize]) -> usize {
        self.strides().iter().zip(index).map(|(s, i)| s * i).sum()
    }

    pub fn coords(&self, node: usize) -> Vec<f64> {
        self.index(node)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.coord(i))
            .collect()
    }

    #[inline]
    fn stride(&self, d: usize) -> usize {
        self.axes[d + 1..].iter().map(|a| a.points).product()
    }

    /// Neighbour `offset` steps along axis `d`, wrapping on periodic axes.
    #[inline]
    pub fn neighbor(&self, node: usize, d: usize, offset: isize) -> Option<usize> {
        let stride = self.stride(d);
        let axis = &self.axes[d];
        let i = (node / stride) % axis.points;
        let n = axis.points as isize;
        let j = i as isize + offset;
        let j = match axis.boundary {
            Boundary::Periodic => j.rem_euclid(n),
            Boundary::Dirichlet if (0..n).contains(&j) => j,
            Boundary::Dirichlet => return None,
        };
        Some((node as isize + (j - i as isize) * stride as isize) as usize)
    }

    /// Distance (in nodes) to the nearest Dirichlet boundary node; `usize::MAX`
    /// when no axis is Dirichlet.
    pub fn boundary_distance(&self, node: usize) -> usize {
        let mut dist = usize::MAX;
        let mut rem = node;
        for a in self.axes.iter().rev() {
            let i = rem % a.points;
            rem /= a.points;
            if a.boundary == Boundary::Dirichlet {
                dist = dist.min(i.min(a.points - 1 - i));
            }
        }
        dist
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_distance(node) == 0
    }

    /// Nodes at least `margin` nodes away from every Dirichlet boundary.
    pub fn nodes_with_margin(&self, margin: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&n| self.boundary_distance(n) >= margin)
            .collect()
    }

    /// Cell volume `Π h_d` (1 for the point grid).
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(Axis::spacing).product()
    }
}
