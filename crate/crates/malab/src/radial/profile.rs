//! Circle-invariant quasi-psh functions on the Riemann sphere, encoded as
//! discrete convex potentials on the log-line.
//!
//! A profile stores node values of `psi = g + phi`, where `g` is the
//! Fubini-Study potential in the log coordinate, together with the two
//! asymptotic slopes. Convexity of `psi` with slopes in `[0, 1]` is exactly
//! the positivity of the perturbed reference form; the slope deficits at the
//! ends are the Lelong numbers at z = 0 and z = ∞, and they carry the mass
//! that the non-polar part of the operator never sees.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{neumaier_sum, Grid1};
use crate::measures::{LineMeasure, POLAR_TOL};
use crate::weights::Weight;

/// Fubini-Study potential in the log coordinate, `g(t) = ½·log(1 + e^{2t})`,
/// computed overflow-safely. Normalized so the reference mass is 1.
pub fn fs_potential(t: f64) -> f64 {
    t.max(0.0) + 0.5 * (-2.0 * t.abs()).exp().ln_1p()
}

/// `g'(t) = e^{2t} / (1 + e^{2t}) ∈ (0, 1)`.
pub fn fs_slope(t: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * t).exp())
}

/// `g''(t)`, the density of the reference measure on the log-line.
pub fn fs_curvature(t: f64) -> f64 {
    let s = fs_slope(t);
    2.0 * s * (1.0 - s)
}

/// Slack allowed in the discrete convexity test, relative to the value scale.
pub const CONVEXITY_TOL: f64 = 1e-12;

/// Discretized convex potential `psi = g + phi` with asymptotic slopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RadialProfile {
    pub grid: Grid1,
    pub psi: Vec<f64>,
    pub slope_neg: f64,
    pub slope_pos: f64,
}

impl RadialProfile {
    pub fn new(grid: Grid1, psi: Vec<f64>, slope_neg: f64, slope_pos: f64) -> Result<Self> {
        let p = Self {
            grid,
            psi,
            slope_neg,
            slope_pos,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.psi.len() != self.grid.n_nodes() {
            return Err(Error::InvalidInput(format!(
                "expected {} psi values, got {}",
                self.grid.n_nodes(),
                self.psi.len()
            )));
        }
        if self.psi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("psi values must be finite".into()));
        }
        if !(0.0..=1.0 + 1e-12).contains(&self.slope_neg)
            || !(0.0..=1.0 + 1e-12).contains(&self.slope_pos)
            || self.slope_neg > self.slope_pos + 1e-12
        {
            return Err(Error::ModelViolation(format!(
                "asymptotic slopes ({}, {}) outside 0 <= s- <= s+ <= 1",
                self.slope_neg, self.slope_pos
            )));
        }
        let scale = self
            .psi
            .iter()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let tol = CONVEXITY_TOL * scale;
        for k in 1..self.grid.n {
            let second = self.psi[k - 1] - 2.0 * self.psi[k] + self.psi[k + 1];
            if second < -tol {
                return Err(Error::ModelViolation(format!(
                    "convexity fails at node {k} (t = {}): second difference {second:.3e}",
                    self.grid.node(k)
                )));
            }
        }
        let d = self.grid.step();
        let first = (self.psi[1] - self.psi[0]) / d;
        let last = (self.psi[self.grid.n] - self.psi[self.grid.n - 1]) / d;
        if self.slope_neg > first + 1e-9 || last > self.slope_pos + 1e-9 {
            return Err(Error::ModelViolation(format!(
                "edge slopes inconsistent: s- = {} vs first {first}, last {last} vs s+ = {}",
                self.slope_neg, self.slope_pos
            )));
        }
        Ok(())
    }

    /// Slope of `psi` on cell `c`.
    pub fn cell_slope(&self, c: usize) -> f64 {
        (self.psi[c + 1] - self.psi[c]) / self.grid.step()
    }

    /// `phi` at node `k`.
    pub fn phi(&self, k: usize) -> f64 {
        self.psi[k] - fs_potential(self.grid.node(k))
    }

    /// `phi` at the midpoint of cell `c` (linear interpolation of `psi`).
    pub fn phi_mid(&self, c: usize) -> f64 {
        0.5 * (self.psi[c] + self.psi[c + 1]) - fs_potential(self.grid.midpoint(c))
    }

    /// Lelong number at z = 0 (left slope).
    pub fn lelong_origin(&self) -> f64 {
        self.slope_neg
    }

    /// Lelong number at z = ∞ (right slope deficit).
    pub fn lelong_infinity(&self) -> f64 {
        1.0 - self.slope_pos
    }

    /// Both polar charges vanish, i.e. the non-polar operator carries the
    /// full cohomological mass. In the radial model this characterizes the
    /// maximal class, since all other circle-invariant mass sits on
    /// non-polar circles.
    pub fn has_full_mass(&self) -> bool {
        self.lelong_origin() <= POLAR_TOL && self.lelong_infinity() <= POLAR_TOL
    }

    /// Supremum of `phi` over the sphere: grid nodes plus the explicit tail
    /// formulas. Errors when the supremum sits at a finite point beyond the
    /// grid (rather than extrapolate).
    pub fn sup_phi(&self) -> Result<f64> {
        let n = self.grid.n;
        let mut best = f64::NEG_INFINITY;
        for k in 0..=n {
            best = best.max(self.phi(k));
        }
        // Left tail: phi(t) = psi(t0) + s-·(t − t0) − g(t). If s- = 0 the sup
        // is the limit psi(t0) at −∞; if 0 < s- < g'(t0) the tail has an
        // interior maximum beyond the grid.
        let t0 = self.grid.tmin;
        if self.slope_neg <= POLAR_TOL {
            best = best.max(self.psi[0]);
        } else if self.slope_neg < fs_slope(t0) {
            let t_star = 0.5 * (self.slope_neg / (1.0 - self.slope_neg)).ln();
            let v = self.psi[0] + self.slope_neg * (t_star - t0) - fs_potential(t_star);
            if v > best + 1e-9 {
                return Err(Error::GridTooNarrow(format!(
                    "left tail maximum {v:.6e} at t = {t_star:.3} beyond tmin = {t0}"
                )));
            }
        }
        // Right tail: phi(t) = psi(tN) + s+·(t − tN) − g(t). For s+ = 1 the
        // limit at +∞ is psi(tN) − tN; for s+ < 1 an interior maximum can sit
        // beyond the grid when g'(tN) < s+.
        let tn = self.grid.tmax;
        if self.slope_pos >= 1.0 - POLAR_TOL {
            best = best.max(self.psi[n] - tn);
        } else if self.slope_pos > fs_slope(tn) {
            let t_star = 0.5 * (self.slope_pos / (1.0 - self.slope_pos)).ln();
            let v = self.psi[n] + self.slope_pos * (t_star - tn) - fs_potential(t_star);
            if v > best + 1e-9 {
                return Err(Error::GridTooNarrow(format!(
                    "right tail maximum {v:.6e} at t = {t_star:.3} beyond tmax = {tn}"
                )));
            }
        }
        Ok(best)
    }

    /// Translate `phi` by `c`.
    pub fn shift(&self, c: f64) -> RadialProfile {
        RadialProfile {
            grid: self.grid,
            psi: self.psi.iter().map(|x| x + c).collect(),
            slope_neg: self.slope_neg,
            slope_pos: self.slope_pos,
        }
    }

    /// Translate so that `sup phi = 0`.
    pub fn normalized(&self) -> Result<RadialProfile> {
        Ok(self.shift(-self.sup_phi()?))
    }

    /// Non-polar Monge-Ampère measure: the interior Stieltjes measure of the
    /// slope function, with the two edge cells absorbing the slope gaps to
    /// the asymptotic values and the Lelong numbers stored as charges.
    /// Conservation `Σ atoms + ν₀ + ν∞ = 1` holds to rounding by
    /// construction.
    pub fn ma_measure(&self) -> LineMeasure {
        let n = self.grid.n;
        let mut atoms = vec![0.0; n];
        atoms[0] = (self.cell_slope(0) - self.slope_neg).max(0.0);
        for c in 1..n {
            atoms[c] = (self.cell_slope(c) - self.cell_slope(c - 1)).max(0.0);
        }
        atoms[n - 1] += (self.slope_pos - self.cell_slope(n - 1)).max(0.0);
        LineMeasure {
            grid: self.grid,
            atoms,
            charge_neg_inf: self.lelong_origin(),
            charge_pos_inf: self.lelong_infinity(),
        }
    }

    /// Bounded canonical approximant `max(phi, −j)`, i.e.
    /// `psi_j = max(psi, g − j)` with slopes recomputed. The result always
    /// has zero Lelong numbers.
    pub fn canonical_cut(&self, j: f64) -> Result<RadialProfile> {
        if !(j > 0.0) || !j.is_finite() {
            return Err(Error::InvalidParameter(format!("cut level {j}")));
        }
        let psi: Vec<f64> = (0..self.grid.n_nodes())
            .map(|k| self.psi[k].max(fs_potential(self.grid.node(k)) - j))
            .collect();
        Ok(RadialProfile {
            grid: self.grid,
            psi,
            slope_neg: 0.0,
            slope_pos: 1.0,
        })
    }

    /// Attenuated singularity `phi ↦ −(−phi)^q`, `0 < q < 1`, valid for
    /// profiles with `sup phi ≤ −1`. Kills Lelong numbers while keeping the
    /// potential unbounded; convexity of the result is re-validated and a
    /// failure is reported, not repaired.
    pub fn attenuate(&self, q: f64) -> Result<RadialProfile> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParameter(format!("attenuation exponent {q}")));
        }
        let sup = self.sup_phi()?;
        if sup > -1.0 + 1e-12 {
            return Err(Error::PreconditionViolation(format!(
                "attenuation needs sup phi <= -1, got {sup}"
            )));
        }
        let psi: Vec<f64> = (0..self.grid.n_nodes())
            .map(|k| {
                let g = fs_potential(self.grid.node(k));
                let a = -(self.psi[k] - g);
                g - a.powf(q)
            })
            .collect();
        let p = RadialProfile {
            grid: self.grid,
            psi,
            slope_neg: 0.0,
            slope_pos: 1.0,
        };
        p.validate()
            .map_err(|e| Error::ModelViolation(format!("attenuation broke the model: {e}")))?;
        Ok(p)
    }

    /// Composition `phi ↦ chi(phi)` for a convex weight with `chi' ≤ 1`
    /// (so the composition stays admissible). Requires `phi ≤ 0`.
    pub fn compose_weight(&self, w: &Weight) -> Result<RadialProfile> {
        let sup = self.sup_phi()?;
        if sup > 1e-9 {
            return Err(Error::PreconditionViolation(format!(
                "composition needs phi <= 0, got sup {sup}"
            )));
        }
        let psi: Vec<f64> = (0..self.grid.n_nodes())
            .map(|k| {
                let g = fs_potential(self.grid.node(k));
                g + w.eval((self.psi[k] - g).min(0.0))
            })
            .collect();
        let p = RadialProfile {
            grid: self.grid,
            psi,
            slope_neg: 0.0,
            slope_pos: 1.0,
        };
        p.validate()
            .map_err(|e| Error::ModelViolation(format!("composition broke the model: {e}")))?;
        Ok(p)
    }

    /// Reference profile `phi ≡ 0`.
    pub fn reference(grid: Grid1) -> RadialProfile {
        let psi = (0..grid.n_nodes()).map(|k| fs_potential(grid.node(k))).collect();
        RadialProfile {
            grid,
            psi,
            slope_neg: 0.0,
            slope_pos: 1.0,
        }
    }

    /// Green-type profile `psi(t) = t` (`phi = log|z| − g`): all mass is the
    /// unit charge at the origin.
    pub fn green(grid: Grid1) -> RadialProfile {
        let psi = (0..grid.n_nodes()).map(|k| grid.node(k)).collect();
        RadialProfile {
            grid,
            psi,
            slope_neg: 1.0,
            slope_pos: 1.0,
        }
    }

    /// Build from per-cell slopes (must be nondecreasing within
    /// `[slope_neg, slope_pos]`), anchored at `psi(t0) = psi0`.
    pub fn from_cell_slopes(
        grid: Grid1,
        slopes: &[f64],
        psi0: f64,
        slope_neg: f64,
        slope_pos: f64,
    ) -> Result<RadialProfile> {
        if slopes.len() != grid.n {
            return Err(Error::InvalidInput("one slope per cell required".into()));
        }
        let mut psi = Vec::with_capacity(grid.n_nodes());
        psi.push(psi0);
        let d = grid.step();
        for &s in slopes {
            let last = *psi.last().unwrap();
            psi.push(last + d * s);
        }
        RadialProfile::new(grid, psi, slope_neg, slope_pos)
    }
}

/// Pointwise maximum of two profiles on a common grid. The maximum of convex
/// functions is convex, so validation always passes; the asymptotic slopes
/// are those of the dominating tails (minimum on the left, maximum on the
/// right), which makes the Lelong numbers of the result the minima of the
/// inputs'.
pub fn max_profiles(a: &RadialProfile, b: &RadialProfile) -> Result<RadialProfile> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("max of profiles needs a common grid".into()));
    }
    let psi: Vec<f64> = a
        .psi
        .iter()
        .zip(&b.psi)
        .map(|(x, y)| x.max(*y))
        .collect();
    let slope_neg = if (a.slope_neg - b.slope_neg).abs() <= f64::EPSILON {
        a.slope_neg
    } else {
        a.slope_neg.min(b.slope_neg)
    };
    let slope_pos = a.slope_pos.max(b.slope_pos);
    Ok(RadialProfile {
        grid: a.grid,
        psi,
        slope_neg,
        slope_pos,
    })
}

/// Midpoint combination `(psi_a + psi_b) / 2`; slopes average exactly.
pub fn average_profiles(a: &RadialProfile, b: &RadialProfile) -> Result<RadialProfile> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch("average of profiles needs a common grid".into()));
    }
    let psi = a
        .psi
        .iter()
        .zip(&b.psi)
        .map(|(x, y)| 0.5 * (x + y))
        .collect();
    Ok(RadialProfile {
        grid: a.grid,
        psi,
        slope_neg: 0.5 * (a.slope_neg + b.slope_neg),
        slope_pos: 0.5 * (a.slope_pos + b.slope_pos),
    })
}

/// Total interior mass of `m` restricted to cells where `pred(phi_mid)` holds.
pub fn mass_where(
    m: &LineMeasure,
    p: &RadialProfile,
    mut pred: impl FnMut(f64) -> bool,
) -> f64 {
    neumaier_sum(
        (0..m.grid.n)
            .filter(|&c| pred(p.phi_mid(c)))
            .map(|c| m.atoms[c]),
    )
}
