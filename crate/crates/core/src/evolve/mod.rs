//! Time evolution of a packet in a tilted lattice,
//! i∂ₜψ = [−∂²_ξ + V(ξ) − (F/π)ξ] ψ in internal units.
//!
//! [`evolve`] is the production integrator (comoving gauge, spectral Strang
//! splitting). [`evolve_direct_oracle`] integrates the same equation with
//! Crank–Nicolson finite differences on a hard-walled grid and serves as an
//! independent check.

mod direct;
mod spectral;

pub use direct::{crop_to, evolve_direct_oracle, second_derivative_weights, DirectConfig};
pub use spectral::evolve;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::PotentialSpec;
use crate::packet::WavePacket;
use crate::schedule::ForceSchedule;

pub const DEFAULT_DT: f64 = 0.1;

/// Operator splitting used by [`evolve`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Splitting {
    /// Second order, one FFT pair per step.
    #[default]
    Strang,
    /// Fourth order Runge–Kutta–Nyström, six FFT pairs per step.
    Rkn4,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub potential: PotentialSpec,
    pub schedule: ForceSchedule,
    /// τ_r
    pub dt: f64,
    /// τ_r
    pub t_final: f64,
    /// Snapshot times; each is rounded to the nearest step.
    pub snapshot_times: Vec<f64>,
    /// Record the observable series every this many steps.
    pub sample_every: usize,
    /// Bands used for populations and the lowest-band centre of mass
    /// (0 disables both).
    pub tracked_bands: usize,
    /// Plane-wave cutoff for the band projections.
    pub cutoff: usize,
    /// Run the domain-overflow pre-check.
    pub check_domain: bool,
    #[serde(default)]
    pub splitting: Splitting,
    /// Packet whose overlap with the evolving state is recorded per sample.
    #[serde(skip)]
    pub reference: Option<WavePacket>,
}

impl EvolutionConfig {
    pub fn new(potential: PotentialSpec, schedule: ForceSchedule, dt: f64, t_final: f64) -> Self {
        Self {
            potential,
            schedule,
            dt,
            t_final,
            snapshot_times: Vec::new(),
            sample_every: 1,
            tracked_bands: 0,
            cutoff: crate::bands::DEFAULT_CUTOFF,
            check_domain: true,
            splitting: Splitting::Strang,
            reference: None,
        }
    }

    /// Number of steps; t_final must be a multiple of dt.
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::invalid("t_final", "must be non-negative"));
        }
        let n = (self.t_final / self.dt).round();
        if (n * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(Error::invalid("dt", format!("t_final = {} is not a multiple of dt = {}", self.t_final, self.dt)));
        }
        Ok(n as usize)
    }

    pub fn validate(&self) -> Result<usize> {
        let n = self.steps()?;
        if self.sample_every == 0 {
            return Err(Error::invalid("sample_every", "must be ≥ 1"));
        }
        for &t in &self.snapshot_times {
            if !(0.0..=self.t_final + 1e-9).contains(&t) {
                return Err(Error::invalid("snapshot_times", format!("{t} outside [0, {}]", self.t_final)));
            }
        }
        for t in self.schedule.switch_times() {
            let k = (t / self.dt).round();
            if (k * self.dt - t).abs() > 1e-9 * t.max(1.0) {
                return Err(Error::invalid("schedule", format!("switch at t = {t} is not a multiple of dt")));
            }
        }
        Ok(n)
    }

    pub(crate) fn snapshot_steps(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.snapshot_times.iter().map(|t| (t / self.dt).round() as usize).collect();
        s.sort_unstable();
        s.dedup();
        s
    }
}

/// Observables at one time.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Sample {
    /// τ_r
    pub t: f64,
    /// Full-grid ⟨ξ⟩ in lattice constants.
    pub com: f64,
    /// Centre of mass of the lowest-band component (lattice constants).
    pub lowest_band_com: Option<f64>,
    pub norm: f64,
    /// ⟨p⟩ (ħk).
    pub mean_momentum: f64,
    /// ⟨∂V/∂ξ⟩.
    pub mean_gradient: f64,
    /// ⟨p² + V⟩ (E_r), tilt excluded.
    pub energy: f64,
    /// Probabilities of the tracked bands.
    pub populations: Vec<f64>,
    /// ⟨reference|ψ(t)⟩ when a reference packet is configured.
    pub overlap: Option<Complex64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvolutionRecord {
    pub samples: Vec<Sample>,
    pub snapshots: Vec<(f64, WavePacket)>,
    pub final_state: WavePacket,
}

impl EvolutionRecord {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Sample nearest to `t`.
    pub fn sample_at(&self, t: f64) -> Option<&Sample> {
        self.samples.iter().min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
    }

    pub fn snapshot_at(&self, t: f64) -> Option<&WavePacket> {
        self.snapshots.iter().min_by(|a, b| (a.0 - t).abs().total_cmp(&(b.0 - t).abs())).map(|s| &s.1)
    }

    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.samples.first().map_or(1.0, |s| s.norm);
        self.samples.iter().map(|s| (s.norm - n0).abs()).fold(0.0, f64::max)
    }
}
