//! Uniform periodic grid over many lattice periods and its discrete Fourier
//! transform.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_SITES: usize = 512;
pub const DEFAULT_POINTS_PER_SITE: usize = 32;

/// `n_sites · points_per_site` points, spacing π/points_per_site, covering
/// ξ ∈ [−n_sites·π/2, n_sites·π/2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpatialGrid {
    pub n_sites: usize,
    pub points_per_site: usize,
}

impl Default for SpatialGrid {
    fn default() -> Self {
        Self { n_sites: DEFAULT_SITES, points_per_site: DEFAULT_POINTS_PER_SITE }
    }
}

impl SpatialGrid {
    pub fn new(n_sites: usize, points_per_site: usize) -> Result<Self> {
        if n_sites < 2 || !n_sites.is_multiple_of(2) {
            return Err(Error::invalid("n_sites", format!("must be even and ≥ 2, got {n_sites}")));
        }
        if points_per_site < 2 || !points_per_site.is_multiple_of(2) {
            return Err(Error::invalid("points_per_site", format!("must be even and ≥ 2, got {points_per_site}")));
        }
        Ok(Self { n_sites, points_per_site })
    }

    pub fn len(&self) -> usize {
        self.n_sites * self.points_per_site
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spacing(&self) -> f64 {
        PI / self.points_per_site as f64
    }

    /// Box length n_sites·π.
    pub fn length(&self) -> f64 {
        self.n_sites as f64 * PI
    }

    pub fn origin(&self) -> f64 {
        -(self.len() as f64 / 2.0) * self.spacing()
    }

    #[inline]
    pub fn position(&self, j: usize) -> f64 {
        (j as f64 - (self.len() / 2) as f64) * self.spacing()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.position(j)).collect()
    }

    /// Momentum spacing 2/n_sites (units of k).
    pub fn momentum_spacing(&self) -> f64 {
        2.0 / self.n_sites as f64
    }

    /// Signed integer label of FFT bin `j` (k = label · momentum_spacing).
    #[inline]
    pub fn momentum_label(&self, j: usize) -> i64 {
        let n = self.len();
        if j < n / 2 {
            j as i64
        } else {
            j as i64 - n as i64
        }
    }

    #[inline]
    pub fn momentum(&self, j: usize) -> f64 {
        self.momentum_label(j) as f64 * self.momentum_spacing()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.momentum(j)).collect()
    }

    /// FFT bin holding momentum label `label`, if representable.
    #[inline]
    pub fn bin(&self, label: i64) -> Option<usize> {
        let half = (self.len() / 2) as i64;
        if label >= -half && label < half {
            Some(label.rem_euclid(self.len() as i64) as usize)
        } else {
            None
        }
    }
}

/// Planned forward/inverse transforms between grid values ψ_j and plane-wave
/// amplitudes a_k with ψ_j = Σ_k a_k e^{ikξ_j}.
#[derive(Clone)]
pub struct Fourier {
    grid: SpatialGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Fourier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fourier").field("grid", &self.grid).finish()
    }
}

impl Fourier {
    pub fn new(grid: SpatialGrid) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid.len());
        let inverse = planner.plan_fft_inverse(grid.len());
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self { grid, forward, inverse, scratch: vec![Complex64::new(0.0, 0.0); scratch_len] }
    }

    pub fn grid(&self) -> SpatialGrid {
        self.grid
    }

    /// In place: grid values → amplitudes a_k. The grid origin at −N/2·Δξ
    /// contributes a factor (−1)^label.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
        let scale = 1.0 / self.grid.len() as f64;
        for (j, a) in data.iter_mut().enumerate() {
            *a *= if j % 2 == 0 { scale } else { -scale };
        }
    }

    /// In place: amplitudes a_k → grid values.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        for (j, a) in data.iter_mut().enumerate() {
            if j % 2 == 1 {
                *a = -*a;
            }
        }
        self.inverse.process_with_scratch(data, &mut self.scratch);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn plane_wave_lands_in_its_bin() {
        let grid = SpatialGrid::new(8, 4).unwrap();
        let mut f = Fourier::new(grid);
        let label = 3;
        let k = label as f64 * grid.momentum_spacing();
        let mut data: Vec<Complex64> =
            grid.positions().iter().map(|&x| Complex64::from_polar(1.0, k * x)).collect();
        f.forward(&mut data);
        for (j, a) in data.iter().enumerate() {
            let expect = if grid.momentum_label(j) == label { 1.0 } else { 0.0 };
            assert_abs_diff_eq!(a.re, expect, epsilon = 1e-12);
            assert_abs_diff_eq!(a.im, 0.0, epsilon = 1e-12);
        }
        f.inverse(&mut data);
        for (x, v) in grid.positions().iter().zip(&data) {
            assert_abs_diff_eq!((v - Complex64::from_polar(1.0, k * x)).norm(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_geometry() {
        let g = SpatialGrid::default();
        assert_eq!(g.len(), 16384);
        assert_abs_diff_eq!(g.position(g.len() / 2), 0.0);
        assert_abs_diff_eq!(g.length(), 512.0 * PI, epsilon = 1e-9);
        assert_eq!(g.bin(-1), Some(g.len() - 1));
        assert_eq!(g.bin(g.len() as i64 / 2), None);
        assert!(SpatialGrid::new(3, 4).is_err());
        assert!(SpatialGrid::new(4, 3).is_err());
    }
}
