//! Single-band semiclassical dynamics in closed form.
//!
//! ħq̇ = F and ṙ = ∂E_n/ħ∂q integrate to
//! Δr(t) = [E_n(q₀ + Ft/ħ) − E_n(q₀)]/F, so no ODE solver is involved; the
//! dispersion is interpolated from a [`BandStructure`]. Piecewise force
//! protocols restart the closed form at every switch with the current
//! quasimomentum and displacement.

use serde::{Deserialize, Serialize};

use crate::bands::BandStructure;
use crate::error::{Error, Result};
use crate::schedule::ForceSchedule;
use crate::units::internal_force;

/// Wrap a quasimomentum into [−1, 1).
pub fn wrap_quasimomentum(q: f64) -> f64 {
    (q + 1.0).rem_euclid(2.0) - 1.0
}

#[derive(Debug, Clone)]
pub struct SemiclassicalRun<'a> {
    pub bands: &'a BandStructure,
    pub band: usize,
    /// Fa/E_r.
    pub force: f64,
    /// Initial quasimomentum (units of k).
    pub q0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// τ_r
    pub t: f64,
    pub q: f64,
    /// Displacement in lattice constants.
    pub displacement: f64,
}

impl<'a> SemiclassicalRun<'a> {
    pub fn new(bands: &'a BandStructure, band: usize, force: f64, q0: f64) -> Result<Self> {
        if !(force.is_finite() && force > 0.0) {
            return Err(Error::invalid("force", format!("Fa/E_r must be positive, got {force}")));
        }
        if q0.abs() > 1.0 {
            return Err(Error::invalid("q0", format!("|q0| must be ≤ 1, got {q0}")));
        }
        if band >= bands.n_bands() {
            return Err(Error::OutOfRange { index: band, available: bands.n_bands() });
        }
        Ok(Self { bands, band, force, q0 })
    }

    /// q(t) = q₀ + (F/π)·t, wrapped into the first zone.
    pub fn quasimomentum(&self, t: f64) -> f64 {
        wrap_quasimomentum(self.q0 + internal_force(self.force) * t)
    }

    /// Δr(t) in lattice constants.
    pub fn displacement(&self, t: f64) -> Result<f64> {
        let e = self.bands.energy_at(self.band, self.q0 + internal_force(self.force) * t)?;
        let e0 = self.bands.energy_at(self.band, self.q0)?;
        Ok((e - e0) / self.force)
    }

    pub fn trajectory(&self, times: &[f64]) -> Result<Vec<TrajectoryPoint>> {
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("t_grid", "times must be sorted"));
        }
        times
            .iter()
            .map(|&t| Ok(TrajectoryPoint { t, q: self.quasimomentum(t), displacement: self.displacement(t)? }))
            .collect()
    }

    /// Δr at t = T/2, equal to B/F for q₀ = 0 on the lowest band.
    pub fn max_displacement(&self) -> Result<f64> {
        Ok(self.bands.band_width(self.band)? / self.force)
    }
}

/// Semiclassical trajectory under a piecewise-constant force, restarting the
/// closed form at each switch. Zero-force segments move at the group velocity
/// ∂E/∂q of the frozen quasimomentum.
pub fn piecewise_trajectory(
    bands: &BandStructure,
    band: usize,
    schedule: &ForceSchedule,
    q0: f64,
    times: &[f64],
) -> Result<Vec<TrajectoryPoint>> {
    if band >= bands.n_bands() {
        return Err(Error::OutOfRange { index: band, available: bands.n_bands() });
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("t_grid", "times must be sorted"));
    }
    let energy = |q: f64| bands.energy_at(band, q);
    // State (q, r) at the start of each segment, r in internal length units.
    let segs = schedule.segments();
    let mut starts = Vec::with_capacity(segs.len());
    let (mut q, mut r) = (q0, 0.0);
    for (i, s) in segs.iter().enumerate() {
        starts.push((q, r));
        let end = schedule.segment_end(i);
        if end.is_finite() {
            let (q_end, r_end) = advance(&energy, q, r, s.force, end - s.start)?;
            q = q_end;
            r = r_end;
        }
    }
    times
        .iter()
        .map(|&t| {
            let i = segs.iter().rposition(|s| s.start <= t).unwrap_or(0);
            let (qs, rs) = starts[i];
            let (q, r) = advance(&energy, qs, rs, segs[i].force, t - segs[i].start)?;
            Ok(TrajectoryPoint { t, q: wrap_quasimomentum(q), displacement: r / std::f64::consts::PI })
        })
        .collect()
}

fn advance(energy: &impl Fn(f64) -> Result<f64>, q: f64, r: f64, force: f64, dt: f64) -> Result<(f64, f64)> {
    let f = internal_force(force);
    if f == 0.0 {
        let h = 1e-5;
        let v = (energy(q + h)? - energy(q - h)?) / (2.0 * h);
        return Ok((q, r + v * dt));
    }
    let q1 = q + f * dt;
    Ok((q1, r + (energy(q1)? - energy(q)?) / f))
}
