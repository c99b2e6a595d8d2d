//! Initial wave packet: a weighted superposition of lowest-band Bloch states,
//! Ψ_i = Σ_q f(q) φ₀(q), evaluated on a periodic spatial grid.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bands::{overlap, BandStructure};
use crate::error::{Error, Result};
use crate::grid::{Fourier, SpatialGrid};

/// f(±1)/f(0) above this means the packet is not localized in q.
pub const LOCALIZATION_LIMIT: f64 = 1e-4;

/// Complex wavefunction on a [`SpatialGrid`].
///
/// `values` are periodic on the box; the lab-frame wavefunction is
/// `e^{i·momentum_shift·ξ} · values(ξ)`. The shift is the accumulated
/// momentum kick ∫F dt of a tilted lattice and is zero for a freshly built
/// packet.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WavePacket {
    pub grid: SpatialGrid,
    pub values: Vec<Complex64>,
    pub momentum_shift: f64,
}

impl WavePacket {
    pub fn new(grid: SpatialGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        Ok(Self { grid, values, momentum_shift: 0.0 })
    }

    /// Sample a function of ξ on the grid.
    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.positions().into_iter().map(f).collect();
        Self { grid, values, momentum_shift: 0.0 }
    }

    /// Σ |ψ_j|² Δξ.
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn normalize(&mut self) {
        let s = 1.0 / self.norm().sqrt();
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Wavefunction in the lab gauge.
    pub fn lab_values(&self) -> Vec<Complex64> {
        if self.momentum_shift == 0.0 {
            return self.values.clone();
        }
        self.values
            .iter()
            .enumerate()
            .map(|(j, v)| v * Complex64::from_polar(1.0, self.momentum_shift * self.grid.position(j)))
            .collect()
    }

    /// ⟨self|other⟩ in the lab gauge.
    pub fn inner(&self, other: &WavePacket) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch("inner product of packets on different grids".into()));
        }
        let dk = other.momentum_shift - self.momentum_shift;
        let sum: Complex64 = if dk == 0.0 {
            self.values.iter().zip(&other.values).map(|(a, b)| a.conj() * b).sum()
        } else {
            self.values
                .iter()
                .zip(&other.values)
                .enumerate()
                .map(|(j, (a, b))| a.conj() * b * Complex64::from_polar(1.0, dk * self.grid.position(j)))
                .sum()
        };
        Ok(sum * self.grid.spacing())
    }

    /// ⟨ξ⟩ in internal units.
    pub fn mean_position(&self) -> f64 {
        let (num, den) = self
            .values
            .iter()
            .enumerate()
            .fold((0.0, 0.0), |(n, d), (j, v)| (n + self.grid.position(j) * v.norm_sqr(), d + v.norm_sqr()));
        num / den
    }

    /// r.m.s. spread of ξ in lattice constants.
    pub fn rms_width(&self) -> f64 {
        let mean = self.mean_position();
        let (num, den) = self.values.iter().enumerate().fold((0.0, 0.0), |(n, d), (j, v)| {
            let dx = self.grid.position(j) - mean;
            (n + dx * dx * v.norm_sqr(), d + v.norm_sqr())
        });
        (num / den).sqrt() / PI
    }
}

/// Gaussian weights f(q) = exp(−q²/w²), peak normalized to one. `width` is w
/// in units of k, i.e. w·a/π.
pub fn gaussian_weights(width: f64, q_grid: &[f64]) -> Result<Vec<f64>> {
    if !(width.is_finite() && width > 0.0) {
        return Err(Error::invalid("w", format!("width must be positive, got {width}")));
    }
    let edge = (-1.0 / (width * width)).exp();
    if edge > LOCALIZATION_LIMIT {
        return Err(Error::invalid(
            "w",
            format!("f(zone edge)/f(0) = {edge:.2e} exceeds {LOCALIZATION_LIMIT:e}: packet not localized in q"),
        ));
    }
    Ok(q_grid.iter().map(|q| (-q * q / (width * width)).exp()).collect())
}

/// Raised-cosine weights cos²(πq/2h) on |q| < h, zero outside.
pub fn raised_cosine_weights(half_width: f64, q_grid: &[f64]) -> Result<Vec<f64>> {
    if !(half_width > 0.0 && half_width <= 1.0) {
        return Err(Error::invalid("half_width", format!("must be in (0, 1], got {half_width}")));
    }
    Ok(q_grid
        .iter()
        .map(|q| if q.abs() < half_width { (PI * q / (2.0 * half_width)).cos().powi(2) } else { 0.0 })
        .collect())
}

/// Σ_q f(q) φ₀(q, ξ), normalized to one.
///
/// `bands` must live on the commensurate grid q = 2m/n_sites (see
/// [`BandStructure::solve_commensurate`]); the duplicate zone-edge point is
/// counted once.
pub fn build_packet(bands: &BandStructure, weights: &[f64], grid: SpatialGrid) -> Result<WavePacket> {
    build_band_packet(bands, 0, weights, grid)
}

/// Same as [`build_packet`] for an arbitrary band.
pub fn build_band_packet(bands: &BandStructure, band: usize, weights: &[f64], grid: SpatialGrid) -> Result<WavePacket> {
    if band >= bands.n_bands() {
        return Err(Error::OutOfRange { index: band, available: bands.n_bands() });
    }
    if weights.len() != bands.q_grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} weights for {} quasimomenta",
            weights.len(),
            bands.q_grid.len()
        )));
    }
    let labels = commensurate_labels(&bands.q_grid, grid)?;
    let coeffs = &bands.coefficients[band];
    let cutoff = bands.cutoff as i64;
    let w_max = weights.iter().cloned().fold(0.0, f64::max);
    if w_max <= 0.0 {
        return Err(Error::invalid("weights", "all weights vanish"));
    }

    for i in 0..weights.len() - 1 {
        let significant = weights[i].abs().max(weights[i + 1].abs()) > 1e-10 * w_max;
        if significant {
            let o = overlap(&coeffs[i], &coeffs[i + 1]);
            if o.re <= 0.0 {
                return Err(Error::GaugeDiscontinuity {
                    q_left: bands.q_grid[i],
                    q_right: bands.q_grid[i + 1],
                    overlap: o.re,
                });
            }
        }
    }

    let stride = grid.n_sites as i64;
    let mut amps = vec![Complex64::new(0.0, 0.0); grid.len()];
    let mut seen = std::collections::HashSet::new();
    for (i, &m) in labels.iter().enumerate() {
        // q = −1 and q = +1 are the same Bloch state.
        let folded = m.rem_euclid(stride);
        if !seen.insert(folded) || weights[i] == 0.0 {
            continue;
        }
        for (l, c) in (-cutoff..=cutoff).zip(&coeffs[i]) {
            let amp = c * weights[i];
            match grid.bin(m + stride * l) {
                Some(b) => amps[b] += amp,
                None if amp.norm() < 1e-12 * w_max => {}
                None => {
                    return Err(Error::GridMismatch(format!(
                        "plane wave q + 2l = {} exceeds the grid's momentum range; increase points_per_site",
                        bands.q_grid[i] + 2.0 * l as f64
                    )))
                }
            }
        }
    }
    let mut fourier = Fourier::new(grid);
    fourier.inverse(&mut amps);
    let mut packet = WavePacket::new(grid, amps)?;
    packet.normalize();
    Ok(packet)
}

/// Momentum labels m with q = m·2/n_sites, or an error if any q is off the
/// grid.
pub(crate) fn commensurate_labels(q_grid: &[f64], grid: SpatialGrid) -> Result<Vec<i64>> {
    let dk = grid.momentum_spacing();
    q_grid
        .iter()
        .map(|&q| {
            let m = (q / dk).round();
            if (m * dk - q).abs() > 1e-9 {
                Err(Error::Incommensurate(format!("q = {q} is not a multiple of {dk}")))
            } else {
                Ok(m as i64)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{PotentialSpec, Spin};
    use approx::assert_abs_diff_eq;

    fn small_grid() -> SpatialGrid {
        SpatialGrid::new(64, 16).unwrap()
    }

    #[test]
    fn gaussian_weight_shape() {
        let q = [-1.0, -0.1, 0.0, 0.1, 1.0];
        let f = gaussian_weights(0.1, &q).unwrap();
        assert_eq!(f[2], 1.0);
        assert_abs_diff_eq!(f[1], (-1.0f64).exp(), epsilon = 1e-15);
        assert!(f[0] < 1e-8 && f[4] < 1e-8);
        assert!(gaussian_weights(0.5, &q).is_err());
        assert!(gaussian_weights(-0.1, &q).is_err());
    }

    #[test]
    fn single_weight_gives_bloch_state() {
        let grid = small_grid();
        let p = PotentialSpec::new(Spin::One, 5.0, 0.0).unwrap();
        let bands = BandStructure::solve_commensurate(&p, grid.n_sites, 2, 7).unwrap();
        let mut w = vec![0.0; bands.q_grid.len()];
        w[bands.index_nearest(0.0)] = 1.0;
        let psi = build_packet(&bands, &w, grid).unwrap();
        assert_abs_diff_eq!(psi.norm(), 1.0, epsilon = 1e-12);
        let d = psi.density();
        let per = grid.points_per_site;
        for j in 0..grid.len() - per {
            assert_abs_diff_eq!(d[j], d[j + per], epsilon = 1e-12);
        }
    }

    #[test]
    fn free_packet_is_gaussian() {
        // Σ_m e^{-q_m²/w²} e^{iq_m ξ} ≈ (w/Δq)√π e^{−w²ξ²/4} by Poisson summation
        // (aliases suppressed by e^{−(π n_sites w/2)²}).
        let grid = SpatialGrid::new(128, 8).unwrap();
        let bands = BandStructure::solve_commensurate(&PotentialSpec::free(Spin::One), grid.n_sites, 1, 3).unwrap();
        let w = 0.1;
        let f = gaussian_weights(w, &bands.q_grid).unwrap();
        let psi = build_packet(&bands, &f, grid).unwrap();
        let norm = (w * w / (2.0 * PI)).sqrt().sqrt();
        for (j, v) in psi.values.iter().enumerate() {
            let x = grid.position(j);
            let exact = norm * (-w * w * x * x / 4.0).exp();
            assert_abs_diff_eq!(v.re, exact, epsilon = 1e-6);
            assert_abs_diff_eq!(v.im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn incommensurate_bands_rejected() {
        let grid = small_grid();
        let bands = BandStructure::solve(&PotentialSpec::free(Spin::One), 37, 1, 3).unwrap();
        let f = vec![1.0; 37];
        assert!(matches!(build_packet(&bands, &f, grid), Err(Error::Incommensurate(_))));
    }

    #[test]
    fn weight_length_mismatch() {
        let grid = small_grid();
        let bands = BandStructure::solve_commensurate(&PotentialSpec::free(Spin::One), 64, 1, 3).unwrap();
        assert!(build_packet(&bands, &[1.0; 3], grid).is_err());
    }

    #[test]
    fn raised_cosine_support() {
        let f = raised_cosine_weights(0.2, &[-0.3, -0.1, 0.0, 0.2]).unwrap();
        assert_eq!(f[0], 0.0);
        assert_abs_diff_eq!(f[1], 0.5, epsilon = 1e-12);
        assert_eq!(f[2], 1.0);
        assert_eq!(f[3], 0.0);
    }
}
