use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform 1-D grid on `[tmin, tmax]` with `n` cells and `n + 1` nodes.
///
/// Atoms of a line measure sit at cell midpoints; profile values sit at
/// nodes. All log-line quantities in the crate share this layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub tmin: f64,
    pub tmax: f64,
    pub n: usize,
}

impl Grid1 {
    pub fn new(tmin: f64, tmax: f64, n: usize) -> Result<Self> {
        if !(tmin.is_finite() && tmax.is_finite()) || tmin >= tmax {
            return Err(Error::InvalidParameter(format!(
                "grid bounds [{tmin}, {tmax}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid needs >= 2 cells, got {n}")));
        }
        Ok(Self { tmin, tmax, n })
    }

    /// Cell width.
    pub fn step(&self) -> f64 {
        (self.tmax - self.tmin) / self.n as f64
    }

    /// Node `k`, for `k` in `0..=n`.
    pub fn node(&self, k: usize) -> f64 {
        self.tmin + k as f64 * self.step()
    }

    /// Midpoint of cell `c`, for `c` in `0..n`.
    pub fn midpoint(&self, c: usize) -> f64 {
        self.tmin + (c as f64 + 0.5) * self.step()
    }

    pub fn n_nodes(&self) -> usize {
        self.n + 1
    }

    /// Index of the cell whose closure contains `t` (clamped to the range).
    pub fn cell_of(&self, t: f64) -> usize {
        let raw = ((t - self.tmin) / self.step()).floor() as isize;
        raw.clamp(0, self.n as isize - 1) as usize
    }

    pub fn contains(&self, t: f64) -> bool {
        t >= self.tmin && t <= self.tmax
    }
}

/// Uniform square grid on `[tmin, tmax]^2` with `n` cells per side.
/// Vertex `(i, j)` maps to row-major index `i * (n + 1) + j`, where `i`
/// indexes the first coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2 {
    pub tmin: f64,
    pub tmax: f64,
    pub n: usize,
}

impl Grid2 {
    pub fn new(tmin: f64, tmax: f64, n: usize) -> Result<Self> {
        if !(tmin.is_finite() && tmax.is_finite()) || tmin >= tmax {
            return Err(Error::InvalidParameter(format!(
                "grid bounds [{tmin}, {tmax}]"
            )));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!("grid needs >= 2 cells, got {n}")));
        }
        Ok(Self { tmin, tmax, n })
    }

    pub fn step(&self) -> f64 {
        (self.tmax - self.tmin) / self.n as f64
    }

    pub fn side(&self) -> usize {
        self.n + 1
    }

    pub fn n_vertices(&self) -> usize {
        self.side() * self.side()
    }

    pub fn vertex(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.tmin + i as f64 * self.step(),
            self.tmin + j as f64 * self.step(),
        )
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.side() + j
    }
}

/// Compensated (Neumaier) summation; keeps mass bookkeeping well below the
/// 1e-12 tolerances asserted by the conservation identities.
pub fn neumaier_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_and_midpoints() {
        let g = Grid1::new(-1.0, 1.0, 4).unwrap();
        assert_eq!(g.step(), 0.5);
        assert_eq!(g.node(0), -1.0);
        assert_eq!(g.node(4), 1.0);
        assert_eq!(g.midpoint(0), -0.75);
        assert_eq!(g.cell_of(0.6), 3);
        assert_eq!(g.cell_of(-2.0), 0);
    }

    #[test]
    fn neumaier_beats_naive_on_cancellation() {
        let xs = vec![1e16, 1.0, -1e16, 1.0];
        assert_eq!(neumaier_sum(xs), 2.0);
    }
}
