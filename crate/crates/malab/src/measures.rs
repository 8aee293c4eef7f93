//! Positive measures on the extended log-line and on the planar grid, with
//! explicit bookkeeping of the charge carried by the two polar points
//! (z = 0 and z = ∞ in the radial picture).

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{neumaier_sum, Grid1, Grid2};

/// Charges smaller than this count as zero when deciding whether a measure
/// touches the polar points.
pub const POLAR_TOL: f64 = 1e-12;

/// Positive measure on the extended log-line: one atom per grid cell
/// (sitting at the cell midpoint) plus explicit charges at ±∞.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LineMeasure {
    pub grid: Grid1,
    pub atoms: Vec<f64>,
    pub charge_neg_inf: f64,
    pub charge_pos_inf: f64,
}

impl LineMeasure {
    pub fn new(grid: Grid1, atoms: Vec<f64>, charge_neg_inf: f64, charge_pos_inf: f64) -> Result<Self> {
        if atoms.len() != grid.n {
            return Err(Error::InvalidInput(format!(
                "expected {} atoms, got {}",
                grid.n,
                atoms.len()
            )));
        }
        if atoms.iter().any(|a| !a.is_finite() || *a < -1e-15)
            || charge_neg_inf < 0.0
            || charge_pos_inf < 0.0
        {
            return Err(Error::InvalidInput("measure masses must be nonnegative".into()));
        }
        Ok(Self {
            grid,
            atoms,
            charge_neg_inf,
            charge_pos_inf,
        })
    }

    pub fn zero(grid: Grid1) -> Self {
        Self {
            grid,
            atoms: vec![0.0; grid.n],
            charge_neg_inf: 0.0,
            charge_pos_inf: 0.0,
        }
    }

    pub fn interior_mass(&self) -> f64 {
        neumaier_sum(self.atoms.iter().copied())
    }

    pub fn total_mass(&self) -> f64 {
        self.interior_mass() + self.charge_neg_inf + self.charge_pos_inf
    }

    /// No charge at either polar point. In the radial model the only polar
    /// sets a circle-invariant measure can hit are z = 0 and z = ∞.
    pub fn is_non_pluripolar(&self) -> bool {
        self.charge_neg_inf <= POLAR_TOL && self.charge_pos_inf <= POLAR_TOL
    }

    /// `charge(−∞) + Σ { atoms at midpoints ≤ t }`; nondecreasing in `t`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        if !self.grid.contains(t) {
            return Err(Error::OutOfRange(format!(
                "t = {t} outside [{}, {}]",
                self.grid.tmin, self.grid.tmax
            )));
        }
        let k = ((t - self.grid.tmin) / self.grid.step() - 0.5).floor();
        let upto = if k < 0.0 { 0 } else { (k as usize + 1).min(self.grid.n) };
        Ok(self.charge_neg_inf + neumaier_sum(self.atoms[..upto].iter().copied()))
    }

    /// CDF sampled at every node, computed in one compensated pass.
    pub fn cdf_at_nodes(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.grid.n_nodes());
        let mut sum = self.charge_neg_inf;
        let mut comp = 0.0f64;
        out.push(sum);
        for &a in &self.atoms {
            let t = sum + a;
            if sum.abs() >= a.abs() {
                comp += (sum - t) + a;
            } else {
                comp += (a - t) + sum;
            }
            sum = t;
            out.push(sum + comp);
        }
        out
    }

    /// Sup-distance between CDFs sampled at the common nodes, together with
    /// the charge discrepancies at ±∞.
    pub fn kolmogorov_distance(&self, other: &LineMeasure) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("kolmogorov distance needs a common grid".into()));
        }
        let a = self.cdf_at_nodes();
        let b = other.cdf_at_nodes();
        let sup = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max);
        let d_tot = (self.total_mass() - other.total_mass()).abs();
        let d_neg = (self.charge_neg_inf - other.charge_neg_inf).abs();
        let d_pos = (self.charge_pos_inf - other.charge_pos_inf).abs();
        Ok(sup.max(d_tot).max(d_neg).max(d_pos))
    }

    /// Truncated reweighting `c_j · min(f, j) · m`, with `c_j` chosen so the
    /// total matches the mass of `f·m`. Returns the measure and `c_j`.
    pub fn scale_min_density(&self, f: &[f64], j: f64) -> Result<(LineMeasure, f64)> {
        if f.len() != self.atoms.len() {
            return Err(Error::InvalidInput("density length mismatch".into()));
        }
        if !self.is_non_pluripolar() {
            return Err(Error::PreconditionViolation(
                "truncated reweighting needs a non-pluripolar measure".into(),
            ));
        }
        if f.iter().any(|x| *x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidInput("density must be nonnegative".into()));
        }
        if !(j > 0.0) {
            return Err(Error::InvalidParameter(format!("truncation level {j}")));
        }
        let target = neumaier_sum(f.iter().zip(&self.atoms).map(|(fi, a)| fi * a));
        let truncated: Vec<f64> = f
            .iter()
            .zip(&self.atoms)
            .map(|(fi, a)| fi.min(j) * a)
            .collect();
        let denom = neumaier_sum(truncated.iter().copied());
        if denom <= 0.0 {
            return Err(Error::DegenerateTruncation);
        }
        let c_j = target / denom;
        let atoms = truncated.iter().map(|a| c_j * a).collect();
        Ok((
            LineMeasure {
                grid: self.grid,
                atoms,
                charge_neg_inf: 0.0,
                charge_pos_inf: 0.0,
            },
            c_j,
        ))
    }

    /// CSV rows `(t_midpoint, mass)`; the header carries the grid spec and
    /// the charges at ±∞.
    pub fn to_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# grid tmin={} tmax={} n={} charge_neg_inf={} charge_pos_inf={}",
            self.grid.tmin, self.grid.tmax, self.grid.n, self.charge_neg_inf, self.charge_pos_inf
        )?;
        writeln!(out, "t_midpoint,mass")?;
        for (c, a) in self.atoms.iter().enumerate() {
            writeln!(out, "{},{}", self.grid.midpoint(c), a)?;
        }
        Ok(())
    }
}

/// Atomic measure on the vertices of a planar grid. Masses are stored in
/// units of the simplex area, so a full-mass measure has `total_norm = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarMeasure {
    pub grid2: Grid2,
    /// row-major, one entry per vertex
    pub vertex_masses: Vec<f64>,
    pub total_norm: f64,
}

impl PlanarMeasure {
    pub fn new(grid2: Grid2, vertex_masses: Vec<f64>) -> Result<Self> {
        if vertex_masses.len() != grid2.n_vertices() {
            return Err(Error::InvalidInput(format!(
                "expected {} vertex masses, got {}",
                grid2.n_vertices(),
                vertex_masses.len()
            )));
        }
        let total_norm = neumaier_sum(vertex_masses.iter().copied());
        Ok(Self {
            grid2,
            vertex_masses,
            total_norm,
        })
    }

    pub fn mass(&self, i: usize, j: usize) -> f64 {
        self.vertex_masses[self.grid2.index(i, j)]
    }

    /// CSV rows `(i, j, t1, t2, mass)`.
    pub fn to_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,j,t1,t2,mass")?;
        let side = self.grid2.side();
        for i in 0..side {
            for j in 0..side {
                let (t1, t2) = self.grid2.vertex(i, j);
                writeln!(out, "{i},{j},{t1},{t2},{}", self.mass(i, j))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_on_unit(grid: Grid1) -> LineMeasure {
        // mass 1 spread uniformly over cells with midpoints in [0, 1]
        let mut atoms = vec![0.0; grid.n];
        let cells: Vec<usize> = (0..grid.n)
            .filter(|&c| {
                let m = grid.midpoint(c);
                (0.0..=1.0).contains(&m)
            })
            .collect();
        for &c in &cells {
            atoms[c] = 1.0 / cells.len() as f64;
        }
        LineMeasure::new(grid, atoms, 0.0, 0.0).unwrap()
    }

    #[test]
    fn cdf_of_uniform_mass() {
        let grid = Grid1::new(-2.0, 3.0, 500).unwrap();
        let m = uniform_on_unit(grid);
        assert!((m.cdf(0.5).unwrap() - 0.5).abs() < 2.0 * grid.step());
        // exhaustion at the right end
        assert!((m.cdf(grid.tmax).unwrap() - (m.total_mass() - m.charge_pos_inf)).abs() < 1e-12);
    }

    #[test]
    fn cdf_single_atom_location() {
        let grid = Grid1::new(-1.0, 1.0, 20).unwrap();
        let mut atoms = vec![0.0; 20];
        let c = grid.cell_of(0.0);
        atoms[c] = 1.0;
        let m = LineMeasure::new(grid, atoms, 0.0, 0.0).unwrap();
        assert_eq!(m.cdf(-0.1).unwrap(), 0.0);
        assert_eq!(m.cdf(grid.tmax).unwrap(), 1.0);
        assert!(m.cdf(-1.5).is_err());
    }

    #[test]
    fn kolmogorov_identity_and_disjoint_atoms() {
        let grid = Grid1::new(-2.0, 3.0, 100).unwrap();
        let m = uniform_on_unit(grid);
        assert_eq!(m.kolmogorov_distance(&m).unwrap(), 0.0);

        let mut a0 = vec![0.0; 100];
        a0[grid.cell_of(0.0)] = 1.0;
        let mut a1 = vec![0.0; 100];
        a1[grid.cell_of(1.0)] = 1.0;
        let ma = LineMeasure::new(grid, a0, 0.0, 0.0).unwrap();
        let mb = LineMeasure::new(grid, a1, 0.0, 0.0).unwrap();
        assert_eq!(ma.kolmogorov_distance(&mb).unwrap(), 1.0);

        let other = LineMeasure::zero(Grid1::new(-2.0, 3.0, 101).unwrap());
        assert!(ma.kolmogorov_distance(&other).is_err());
    }

    #[test]
    fn kolmogorov_shift_by_one_cell() {
        // oracle: direct CDF comparison; shifting uniform mass by one cell
        // moves the CDF by exactly one cell's share.
        let grid = Grid1::new(-2.0, 3.0, 500).unwrap();
        let m = uniform_on_unit(grid);
        let per_cell = m.atoms.iter().cloned().fold(0.0f64, f64::max);
        let mut shifted = vec![0.0; grid.n];
        for c in 0..grid.n - 1 {
            shifted[c + 1] = m.atoms[c];
        }
        let ms = LineMeasure::new(grid, shifted, 0.0, 0.0).unwrap();
        let d = m.kolmogorov_distance(&ms).unwrap();
        assert!((d - per_cell).abs() < 1e-12);
    }

    #[test]
    fn scale_min_density_inactive_cap() {
        let grid = Grid1::new(-2.0, 3.0, 50).unwrap();
        let m = uniform_on_unit(grid);
        let f = vec![1.0; 50];
        let (scaled, c) = m.scale_min_density(&f, 2.0).unwrap();
        assert_eq!(c, 1.0);
        assert!(m.kolmogorov_distance(&scaled).unwrap() < 1e-15);
    }

    #[test]
    fn scale_min_density_caps_and_rescales() {
        // oracle: one cell of density 10 capped at 5, then rescaled
        let grid = Grid1::new(0.0, 1.0, 4).unwrap();
        let m = LineMeasure::new(grid, vec![0.25; 4], 0.0, 0.0).unwrap();
        let f = vec![1.0, 10.0, 1.0, 1.0];
        let (scaled, c) = m.scale_min_density(&f, 5.0).unwrap();
        let target = 0.25 * (1.0 + 10.0 + 1.0 + 1.0);
        let truncated = 0.25 * (1.0 + 5.0 + 1.0 + 1.0);
        assert!((c - target / truncated).abs() < 1e-12);
        assert!(c > 1.0);
        assert!((scaled.atoms[1] - c * 5.0 * 0.25).abs() < 1e-12);
        assert!((scaled.total_mass() - target).abs() < 1e-12);

        let zero = m.scale_min_density(&vec![0.0; 4], 5.0);
        assert!(matches!(zero, Err(Error::DegenerateTruncation)));
    }

    #[test]
    fn scale_min_density_sweep_monotone() {
        let grid = Grid1::new(0.0, 1.0, 8).unwrap();
        let m = LineMeasure::new(grid, vec![0.125; 8], 0.0, 0.0).unwrap();
        let f: Vec<f64> = (0..8).map(|i| 1.0 + i as f64).collect();
        let atoms_full: Vec<f64> = f.iter().zip(&m.atoms).map(|(fi, a)| fi * a).collect();
        let full = LineMeasure::new(grid, atoms_full, 0.0, 0.0).unwrap();
        let mut prev_c = f64::INFINITY;
        let mut prev_d = f64::INFINITY;
        for j in [1.0, 2.0, 4.0, 8.0, 16.0] {
            let (scaled, c) = m.scale_min_density(&f, j).unwrap();
            assert!(c <= prev_c + 1e-12, "c_j must decrease in j");
            // no cell grows by more than the factor c_j
            for (s, (fi, a)) in scaled.atoms.iter().zip(f.iter().zip(&m.atoms)) {
                assert!(*s <= c * fi * a + 1e-12);
            }
            let d = scaled.kolmogorov_distance(&full).unwrap();
            assert!(d <= prev_d + 1e-12, "distance to f·m must shrink");
            prev_c = c;
            prev_d = d;
        }
        assert!(prev_d < 1e-12);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let grid = Grid1::new(-1.0, 1.0, 4).unwrap();
        let m = LineMeasure::new(grid, vec![0.1, 0.2, 0.3, 0.1], 0.2, 0.1).unwrap();
        let mut buf = Vec::new();
        m.to_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("charge_neg_inf=0.2"));
        assert!(text.lines().count() == 2 + 4);

        let json = serde_json::to_string(&m).unwrap();
        let back: LineMeasure = serde_json::from_str(&json).unwrap();
        assert_eq!(back.atoms, m.atoms);
        assert_eq!(back.charge_pos_inf, m.charge_pos_inf);
        assert_eq!(back.grid, m.grid);
    }
}
