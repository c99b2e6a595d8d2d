//! Observables on wave packets and two-component (spinor) states.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bands::{bloch_states, BandStructure};
use crate::error::{Error, Result};
use crate::grid::{Fourier, SpatialGrid};
use crate::lattice::PotentialSpec;
use crate::packet::WavePacket;

/// ⟨ξ⟩ in lattice constants.
pub fn center_of_mass(psi: &WavePacket) -> f64 {
    psi.mean_position() / PI
}

/// Plane-wave amplitudes a_k of the periodic part, ψ = e^{iAξ} Σ a_k e^{ikξ}.
pub fn amplitudes(psi: &WavePacket) -> Vec<Complex64> {
    let mut a = psi.values.clone();
    Fourier::new(psi.grid).forward(&mut a);
    a
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentumDistribution {
    /// Momenta in units of k (so the zone edge π/a is ±1), ascending.
    pub momenta: Vec<f64>,
    /// Density with Σ density·Δk equal to the packet norm.
    pub density: Vec<f64>,
}

impl MomentumDistribution {
    pub fn spacing(&self) -> f64 {
        if self.momenta.len() > 1 {
            self.momenta[1] - self.momenta[0]
        } else {
            1.0
        }
    }

    pub fn total(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.spacing()
    }

    /// Momentum of the global maximum.
    pub fn peak(&self) -> f64 {
        let i = self
            .density
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.momenta[i]
    }

    /// Density at the momentum nearest to `p`.
    pub fn density_at(&self, p: f64) -> f64 {
        let i = self
            .momenta
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - p).abs().total_cmp(&(b.1 - p).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        self.density[i]
    }
}

/// |ψ̃(p)|² over the physical momentum p = k + A (unfolded).
pub fn momentum_distribution(psi: &WavePacket) -> MomentumDistribution {
    let grid = psi.grid;
    let a = amplitudes(psi);
    let dk = grid.momentum_spacing();
    let scale = grid.length() / dk;
    let mut pairs: Vec<(f64, f64)> =
        (0..grid.len()).map(|j| (grid.momentum(j) + psi.momentum_shift, a[j].norm_sqr() * scale)).collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));
    MomentumDistribution { momenta: pairs.iter().map(|p| p.0).collect(), density: pairs.iter().map(|p| p.1).collect() }
}

/// Momentum distribution folded into the first zone [−1, 1).
pub fn folded_momentum_distribution(psi: &WavePacket) -> MomentumDistribution {
    let unfolded = momentum_distribution(psi);
    let grid = psi.grid;
    let dk = grid.momentum_spacing();
    let n = grid.n_sites;
    let mut density = vec![0.0; n];
    for (p, d) in unfolded.momenta.iter().zip(&unfolded.density) {
        let q = (p + 1.0).rem_euclid(2.0) - 1.0;
        let idx = (((q + 1.0) / dk).round() as usize) % n;
        density[idx] += d;
    }
    let momenta = (0..n).map(|i| -1.0 + i as f64 * dk).collect();
    MomentumDistribution { momenta, density }
}

/// ⟨p⟩ in units of ħk.
pub fn mean_momentum(psi: &WavePacket) -> f64 {
    let d = momentum_distribution(psi);
    let num: f64 = d.momenta.iter().zip(&d.density).map(|(p, w)| p * w).sum();
    num / d.density.iter().sum::<f64>()
}

/// ⟨p² + V⟩ (E_r), without any tilt term.
pub fn energy(psi: &WavePacket, potential: &PotentialSpec) -> f64 {
    let d = momentum_distribution(psi);
    let kinetic: f64 = d.momenta.iter().zip(&d.density).map(|(p, w)| p * p * w).sum::<f64>() * d.spacing();
    let pot: f64 = psi
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| potential.value(psi.grid.position(j)) * v.norm_sqr())
        .sum::<f64>()
        * psi.grid.spacing();
    (kinetic + pot) / psi.norm()
}

/// ⟨∂V/∂ξ⟩.
pub fn mean_potential_gradient(psi: &WavePacket, potential: &PotentialSpec) -> f64 {
    let (num, den) = psi.values.iter().enumerate().fold((0.0, 0.0), |(n, d), (j, v)| {
        (n + potential.gradient(psi.grid.position(j)) * v.norm_sqr(), d + v.norm_sqr())
    });
    num / den
}

/// Decomposition of packets into Bloch bands of a fixed lattice.
///
/// Handles packets carrying a momentum shift: the block of plane waves with
/// labels r + n_sites·j has physical quasimomentum (r + A/Δk)·Δk, folded into
/// the zone. When A is a multiple of Δk the commensurate band table is reused,
/// otherwise the Bloch problem is solved at the shifted quasimomenta.
#[derive(Debug, Clone)]
pub struct BandProjector {
    grid: SpatialGrid,
    n_bands: usize,
    cutoff: usize,
    bands: BandStructure,
}

struct Block {
    /// Grid bin (if representable) for each plane-wave index l + L.
    bins: Vec<Option<usize>>,
    vectors: Vec<Vec<Complex64>>,
}

impl BandProjector {
    pub fn new(potential: &PotentialSpec, grid: SpatialGrid, n_bands: usize, cutoff: usize) -> Result<Self> {
        let bands = BandStructure::solve_commensurate(potential, grid.n_sites, n_bands, cutoff)?;
        Ok(Self { grid, n_bands, cutoff, bands })
    }

    pub fn bands(&self) -> &BandStructure {
        &self.bands
    }

    pub fn n_bands(&self) -> usize {
        self.n_bands
    }

    fn blocks(&self, shift: f64) -> Result<Vec<Block>> {
        let ns = self.grid.n_sites as i64;
        let dk = self.grid.momentum_spacing();
        let s = shift / dk;
        let s_int = s.round();
        let commensurate = (s - s_int).abs() < 1e-9;
        let cutoff = self.cutoff as i64;
        let mut blocks = Vec::with_capacity(ns as usize);
        for r in 0..ns {
            // physical label r + s; fold into [−ns/2, ns/2)
            let (n0, vectors) = if commensurate {
                let phys = r + s_int as i64;
                let folded = (phys + ns / 2).rem_euclid(ns) - ns / 2;
                let n0 = (phys - folded) / ns;
                let idx = (folded + ns / 2) as usize;
                let vectors = (0..self.n_bands).map(|n| self.bands.coefficients[n][idx].clone()).collect();
                (n0, vectors)
            } else {
                let raw = (r as f64 + s) * dk;
                let n0 = ((raw + 1.0) / 2.0).floor();
                let q = raw - 2.0 * n0;
                let states = bloch_states(&self.bands.potential, q, self.n_bands, self.cutoff)?;
                (n0 as i64, states.vectors)
            };
            let bins = (-cutoff..=cutoff).map(|l| self.grid.bin(r + ns * (l - n0))).collect();
            blocks.push(Block { bins, vectors });
        }
        Ok(blocks)
    }

    fn check(&self, psi: &WavePacket) -> Result<()> {
        if psi.grid != self.grid {
            return Err(Error::GridMismatch("packet and projector grids differ".into()));
        }
        Ok(())
    }

    /// P_n = Σ_q |⟨φ_n(q)|ψ⟩|² for n < n_bands; the sum falls short of the
    /// norm by the population of higher bands.
    pub fn populations(&self, psi: &WavePacket) -> Result<Vec<f64>> {
        self.check(psi)?;
        let a = amplitudes(psi);
        let length = self.grid.length();
        let mut pops = vec![0.0; self.n_bands];
        for block in self.blocks(psi.momentum_shift)? {
            for (n, v) in block.vectors.iter().enumerate() {
                let proj: Complex64 =
                    v.iter().zip(&block.bins).filter_map(|(c, b)| b.map(|b| c.conj() * a[b])).sum();
                pops[n] += proj.norm_sqr() * length;
            }
        }
        Ok(pops)
    }

    /// Component of ψ in band `band`.
    pub fn project(&self, psi: &WavePacket, band: usize) -> Result<WavePacket> {
        self.check(psi)?;
        if band >= self.n_bands {
            return Err(Error::OutOfRange { index: band, available: self.n_bands });
        }
        let a = amplitudes(psi);
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.len()];
        for block in self.blocks(psi.momentum_shift)? {
            let v = &block.vectors[band];
            let proj: Complex64 = v.iter().zip(&block.bins).filter_map(|(c, b)| b.map(|b| c.conj() * a[b])).sum();
            for (c, b) in v.iter().zip(&block.bins) {
                if let Some(b) = b {
                    out[*b] += c * proj;
                }
            }
        }
        Fourier::new(self.grid).inverse(&mut out);
        Ok(WavePacket { grid: self.grid, values: out, momentum_shift: psi.momentum_shift })
    }

    /// Centre of mass (lattice constants) of the band-`band` component.
    pub fn band_center_of_mass(&self, psi: &WavePacket, band: usize) -> Result<f64> {
        Ok(center_of_mass(&self.project(psi, band)?))
    }
}

/// α|0⟩ψ₀ + β|1⟩ψ₁.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpinorState {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub psi0: WavePacket,
    pub psi1: WavePacket,
}

impl SpinorState {
    pub fn new(alpha: Complex64, beta: Complex64, psi0: WavePacket, psi1: WavePacket) -> Result<Self> {
        let total = alpha.norm_sqr() + beta.norm_sqr();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("alpha/beta", format!("|α|² + |β|² = {total}, expected 1")));
        }
        if psi0.grid != psi1.grid {
            return Err(Error::GridMismatch("spinor components on different grids".into()));
        }
        Ok(Self { alpha, beta, psi0, psi1 })
    }

    /// |α|² norm(ψ₀) + |β|² norm(ψ₁).
    pub fn norm(&self) -> f64 {
        self.alpha.norm_sqr() * self.psi0.norm() + self.beta.norm_sqr() * self.psi1.norm()
    }

    fn has_both(&self) -> bool {
        self.alpha.norm_sqr() > 1e-14 && self.beta.norm_sqr() > 1e-14
    }
}

/// |⟨ξ⟩₁ − ⟨ξ⟩₀| in lattice constants, or `None` for a single-component state.
pub fn separation(state: &SpinorState) -> Option<f64> {
    state.has_both().then(|| (center_of_mass(&state.psi1) - center_of_mass(&state.psi0)).abs())
}

/// Separation of the lowest-band components of the two packets.
pub fn lowest_band_separation(state: &SpinorState, proj0: &BandProjector, proj1: &BandProjector) -> Result<Option<f64>> {
    if !state.has_both() {
        return Ok(None);
    }
    let c0 = proj0.band_center_of_mass(&state.psi0, 0)?;
    let c1 = proj1.band_center_of_mass(&state.psi1, 0)?;
    Ok(Some((c1 - c0).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fidelity {
    pub modulus: f64,
    /// arg⟨ψ_i|ψ(t)⟩ in (−π, π].
    pub phase: f64,
}

pub fn return_fidelity(psi_t: &WavePacket, psi_i: &WavePacket) -> Result<Fidelity> {
    let o = psi_i.inner(psi_t)?;
    Ok(Fidelity { modulus: o.norm(), phase: o.arg() })
}

/// Relative phase χ = phase₁ − phase₀, wrapped into (−π, π].
pub fn relative_phase(phase1: f64, phase0: f64) -> f64 {
    wrap_phase(phase1 - phase0)
}

pub fn wrap_phase(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y == -PI {
        PI
    } else {
        y
    }
}

/// Unwrap a phase series so consecutive values differ by less than π.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let d = p - prev;
            if d > PI {
                offset -= 2.0 * PI;
            } else if d < -PI {
                offset += 2.0 * PI;
            }
        }
        out.push(p + offset);
    }
    out
}

/// SU(2) rotation of the internal state,
///
/// ```text
/// U = [  cos(θ/2)          −e^{−iφ} sin(θ/2) ]
///     [  e^{iφ} sin(θ/2)    cos(θ/2)         ]
/// ```
///
/// applied to (αψ₀, βψ₁). The external wavefunctions superpose pointwise, so
/// the result generally has non-Gaussian, non-normalized components; they are
/// renormalized into new amplitudes.
pub fn microwave_rotation(state: &SpinorState, polar: f64, azimuth: f64) -> Result<SpinorState> {
    if state.psi0.grid != state.psi1.grid {
        return Err(Error::GridMismatch("spinor components on different grids".into()));
    }
    let (c, s) = ((polar / 2.0).cos(), (polar / 2.0).sin());
    let e = Complex64::from_polar(1.0, azimuth);
    // Components sharing a momentum shift combine in the periodic frame.
    let shared = state.psi0.momentum_shift == state.psi1.momentum_shift;
    let (a0, a1, shift) = if shared {
        (state.psi0.values.clone(), state.psi1.values.clone(), state.psi0.momentum_shift)
    } else {
        (state.psi0.lab_values(), state.psi1.lab_values(), 0.0)
    };
    let u00 = Complex64::new(c, 0.0) * state.alpha;
    let u01 = -e.conj() * s * state.beta;
    let u10 = e * s * state.alpha;
    let u11 = Complex64::new(c, 0.0) * state.beta;
    let new0: Vec<Complex64> = a0.iter().zip(&a1).map(|(x, y)| u00 * x + u01 * y).collect();
    let new1: Vec<Complex64> = a0.iter().zip(&a1).map(|(x, y)| u10 * x + u11 * y).collect();
    let (alpha, psi0) = split_amplitude(state.psi0.grid, new0, shift, &state.psi0);
    let (beta, psi1) = split_amplitude(state.psi1.grid, new1, shift, &state.psi1);
    Ok(SpinorState { alpha, beta, psi0, psi1 })
}

fn split_amplitude(
    grid: SpatialGrid,
    values: Vec<Complex64>,
    shift: f64,
    fallback: &WavePacket,
) -> (Complex64, WavePacket) {
    let packet = WavePacket { grid, values, momentum_shift: shift };
    let norm = packet.norm().sqrt();
    if norm < 1e-300 {
        return (Complex64::new(0.0, 0.0), fallback.clone());
    }
    let mut p = packet;
    p.values.iter_mut().for_each(|v| *v /= norm);
    (Complex64::new(norm, 0.0), p)
}

/// Two-peak interference amplitudes of the |1⟩ component after a rotation,
/// swept over the rotation azimuth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VisibilityScan {
    pub azimuths: Vec<f64>,
    /// |β'|²·n(p) of the rotated |1⟩ component at p = +peak.
    pub plus: Vec<f64>,
    /// Same at p = −peak.
    pub minus: Vec<f64>,
    pub visibility_plus: f64,
    pub visibility_minus: f64,
}

impl VisibilityScan {
    fn from_series(azimuths: Vec<f64>, plus: Vec<f64>, minus: Vec<f64>) -> Self {
        Self { visibility_plus: visibility(&plus), visibility_minus: visibility(&minus), azimuths, plus, minus }
    }

    /// Visibility of the stronger of the two peaks.
    pub fn visibility(&self) -> f64 {
        let mp = self.plus.iter().cloned().fold(0.0, f64::max);
        let mm = self.minus.iter().cloned().fold(0.0, f64::max);
        if mp >= mm {
            self.visibility_plus
        } else {
            self.visibility_minus
        }
    }
}

/// (max − min)/(max + min).
pub fn visibility(values: &[f64]) -> f64 {
    let max = values.iter().cloned().fold(f64::MIN, f64::max);
    let min = values.iter().cloned().fold(f64::MAX, f64::min);
    if max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

fn peak_amplitudes(state: &SpinorState, polar: f64, azimuth: f64, peak: f64) -> Result<(f64, f64)> {
    let rotated = microwave_rotation(state, polar, azimuth)?;
    let weight = rotated.beta.norm_sqr();
    let dist = momentum_distribution(&rotated.psi1);
    Ok((weight * dist.density_at(peak), weight * dist.density_at(-peak)))
}

/// Peak amplitudes of the coherent state versus azimuth.
pub fn coherence_scan(state: &SpinorState, polar: f64, azimuths: &[f64], peak: f64) -> Result<VisibilityScan> {
    let mut plus = Vec::with_capacity(azimuths.len());
    let mut minus = Vec::with_capacity(azimuths.len());
    for &phi in azimuths {
        let (p, m) = peak_amplitudes(state, polar, phi, peak)?;
        plus.push(p);
        minus.push(m);
    }
    Ok(VisibilityScan::from_series(azimuths.to_vec(), plus, minus))
}

/// Control: the same scan averaged over `samples` random relative phases
/// between the components (stratified over [0, 2π)), i.e. an incoherent
/// mixture of the two packets.
pub fn dephased_scan(
    state: &SpinorState,
    polar: f64,
    azimuths: &[f64],
    peak: f64,
    samples: usize,
    seed: u64,
) -> Result<VisibilityScan> {
    let samples = samples.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phases: Vec<f64> =
        (0..samples).map(|i| 2.0 * PI * (i as f64 + rng.random::<f64>()) / samples as f64).collect();
    let mut plus = vec![0.0; azimuths.len()];
    let mut minus = vec![0.0; azimuths.len()];
    for phase in phases {
        let mut s = state.clone();
        s.beta *= Complex64::from_polar(1.0, phase);
        for (i, &phi) in azimuths.iter().enumerate() {
            let (p, m) = peak_amplitudes(&s, polar, phi, peak)?;
            plus[i] += p / samples as f64;
            minus[i] += m / samples as f64;
        }
    }
    Ok(VisibilityScan::from_series(azimuths.to_vec(), plus, minus))
}

/// `n` equally spaced azimuths on [0, 2π).
pub fn azimuth_sweep(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}
