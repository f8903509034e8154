use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Periodic box `[-L/2, L/2)^d` with `N` points per axis. For time-dependent
/// operators axis 0 is `t` and the space axes follow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralGrid {
    /// Number of space axes.
    pub space_dim: usize,
    pub time_axis: bool,
    pub points_per_axis: usize,
    pub box_length: f64,
}

impl SpectralGrid {
    pub fn new(space_dim: usize, time_axis: bool, points_per_axis: usize, box_length: f64) -> Result<Self> {
        let g = Self {
            space_dim,
            time_axis,
            points_per_axis,
            box_length,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.space_dim == 0 {
            return Err(Error::Config("spectral grid needs at least one space axis".into()));
        }
        if self.points_per_axis < 4 || !self.points_per_axis.is_power_of_two() {
            return Err(Error::Config(format!(
                "points_per_axis must be a power of two ≥ 4, got {}",
                self.points_per_axis
            )));
        }
        if !(self.box_length.is_finite() && self.box_length > 0.0) {
            return Err(Error::Config("box_length must be positive".into()));
        }
        Ok(())
    }

    /// Total number of axes.
    pub fn axes(&self) -> usize {
        self.space_dim + usize::from(self.time_axis)
    }

    /// Grid axis of space coordinate `i`.
    pub fn space_axis(&self, i: usize) -> usize {
        i + usize::from(self.time_axis)
    }

    pub fn shape(&self) -> Vec<usize> {
        vec![self.points_per_axis; self.axes()]
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.axes() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points_per_axis as f64
    }

    /// `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.axes() as i32)
    }

    /// `x_j = (j - N/2) L/N`.
    pub fn coordinate(&self, j: usize) -> f64 {
        (j as f64 - (self.points_per_axis / 2) as f64) * self.spacing()
    }

    /// Frequency `k/L` in FFT order, `k ∈ [-N/2, N/2)`.
    pub fn frequency(&self, k: usize) -> f64 {
        let n = self.points_per_axis;
        let signed = if k < n / 2 { k as isize } else { k as isize - n as isize };
        signed as f64 / self.box_length
    }

    pub fn is_nyquist(&self, k: usize) -> bool {
        k == self.points_per_axis / 2
    }

    /// Multi-index of flat position `flat` (row-major).
    pub fn index(&self, mut flat: usize, out: &mut [usize]) {
        let n = self.points_per_axis;
        for a in (0..out.len()).rev() {
            out[a] = flat % n;
            flat /= n;
        }
    }
}
