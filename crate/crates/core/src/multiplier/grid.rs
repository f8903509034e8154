//! Frequency grids: log-uniform radii times deterministic direction sets.

use serde::{Deserialize, Serialize};

use super::{norm2, Frame};
use crate::error::{Error, Result};
use crate::sampling::{anisotropic_directions, sphere_points};

/// Optional restriction of the grid to a sub-region of `R^n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionConstraint {
    /// `|Q(B^T)^index ξ|² < c|ξ|²`.
    LowDirection { index: usize, c: f64 },
    /// `|ξ| ≥ radius`.
    OutsideBall { radius: f64 },
}

impl RegionConstraint {
    pub fn contains(&self, frame: &Frame, xi: &[f64]) -> bool {
        match *self {
            RegionConstraint::LowDirection { index, c } => norm2(&frame.direction(index, xi)) < c * norm2(xi),
            RegionConstraint::OutsideBall { radius } => norm2(xi) >= radius * radius,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointwiseRegion {
    pub r_min: f64,
    pub r_max: f64,
    pub n_radial: usize,
    pub n_angular: usize,
    /// Levels per coordinate of the anisotropic direction lattice; 0 disables it.
    #[serde(default)]
    pub aniso_levels: usize,
    /// Decades spanned by the anisotropic lattice; defaults to `log10(r_max)`.
    #[serde(default)]
    pub aniso_decades: Option<f64>,
    #[serde(default)]
    pub region_constraint: Option<RegionConstraint>,
}

impl Default for PointwiseRegion {
    fn default() -> Self {
        Self {
            r_min: 1.0,
            r_max: 1e4,
            n_radial: 64,
            n_angular: 256,
            aniso_levels: 16,
            aniso_decades: None,
            region_constraint: None,
        }
    }
}

impl PointwiseRegion {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.r_max.is_finite()) {
            return Err(Error::Config(format!(
                "region radii must satisfy 0 < r_min < r_max, got [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.n_radial < 8 || self.n_angular < 8 {
            return Err(Error::Config(format!(
                "region needs at least 8 radial and angular points, got {} and {}",
                self.n_radial, self.n_angular
            )));
        }
        Ok(())
    }

    /// Both resolutions doubled.
    pub fn refined(&self) -> Self {
        Self {
            n_radial: 2 * self.n_radial,
            n_angular: 2 * self.n_angular,
            aniso_levels: 2 * self.aniso_levels,
            ..self.clone()
        }
    }

    /// Outer radius multiplied by `factor`, radial density preserved.
    pub fn extended(&self, factor: f64) -> Self {
        let decades = (self.r_max / self.r_min).log10();
        let extra = factor.log10();
        let n_radial = ((self.n_radial as f64) * (decades + extra) / decades).ceil() as usize;
        Self {
            r_max: self.r_max * factor,
            n_radial,
            aniso_decades: self.aniso_decades.map(|d| d + extra),
            ..self.clone()
        }
    }

    pub fn with_constraint(&self, constraint: Option<RegionConstraint>) -> Self {
        Self {
            region_constraint: constraint,
            ..self.clone()
        }
    }

    pub fn radii(&self) -> Vec<f64> {
        let (a, b) = (self.r_min.ln(), self.r_max.ln());
        (0..self.n_radial)
            .map(|k| (a + (b - a) * k as f64 / (self.n_radial - 1) as f64).exp())
            .collect()
    }

    pub fn directions(&self, dim: usize) -> Vec<Vec<f64>> {
        let mut dirs = sphere_points(dim, self.n_angular);
        let decades = self.aniso_decades.unwrap_or_else(|| self.r_max.log10().max(1.0));
        dirs.extend(anisotropic_directions(dim, decades, self.aniso_levels));
        dirs
    }

    /// All grid points, filtered by the region constraint when a frame is given.
    pub fn points(&self, dim: usize, frame: Option<&Frame>) -> Vec<Vec<f64>> {
        let dirs = self.directions(dim);
        let mut pts = Vec::with_capacity(dirs.len() * self.n_radial);
        for r in self.radii() {
            for d in &dirs {
                let p: Vec<f64> = d.iter().map(|x| r * x).collect();
                let keep = match (self.region_constraint, frame) {
                    (Some(c), Some(f)) => c.contains(f, &p),
                    _ => true,
                };
                if keep {
                    pts.push(p);
                }
            }
        }
        pts
    }
}
