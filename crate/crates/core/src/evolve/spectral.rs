//! Comoving-gauge split-step propagation.
//!
//! With ψ = e^{iA(t)ξ} ψ̃ and dA/dt = F/π the tilt disappears and ψ̃ obeys
//! i∂ₜψ̃ = [(p + A(t))² + V(ξ)] ψ̃, which is periodic on the box. One Strang
//! step applies e^{−iV dt/2}, the exact kinetic factor
//! exp(−i∫(k + A(s))² ds) in the plane-wave basis, and e^{−iV dt/2} again.
//! A fourth-order six-stage Runge–Kutta–Nyström splitting of the same
//! factors is available as an alternative.

use num_complex::Complex64;

use super::{EvolutionConfig, EvolutionRecord, Sample, Splitting};
use crate::bands::BandStructure;
use crate::error::{Error, Result};
use crate::grid::{Fourier, SpatialGrid};
use crate::lattice::PotentialSpec;
use crate::observe::{self, BandProjector};
use crate::packet::WavePacket;
use crate::semiclassical::piecewise_trajectory;
use crate::units::internal_force;

/// Propagate `psi0` according to `cfg`.
pub fn evolve(psi0: &WavePacket, cfg: &EvolutionConfig) -> Result<EvolutionRecord> {
    let n_steps = cfg.validate()?;
    let grid = psi0.grid;
    if cfg.check_domain {
        check_domain(psi0, cfg)?;
    }
    let projector = if cfg.tracked_bands > 0 {
        Some(BandProjector::new(&cfg.potential, grid, cfg.tracked_bands, cfg.cutoff)?)
    } else {
        None
    };

    let dt = cfg.dt;
    let mut stepper = Stepper::new(grid, &cfg.potential, dt, cfg.splitting);

    let mut psi = psi0.clone();
    let mut kick = psi0.momentum_shift;
    let snapshot_steps = cfg.snapshot_steps();
    let mut samples = Vec::with_capacity(n_steps / cfg.sample_every + 2);
    let mut snapshots = Vec::with_capacity(snapshot_steps.len());

    for step in 0..=n_steps {
        let t = step as f64 * dt;
        psi.momentum_shift = kick;
        if step % cfg.sample_every == 0 || step == n_steps {
            samples.push(sample(&psi, t, cfg, projector.as_ref())?);
        }
        if snapshot_steps.binary_search(&step).is_ok() {
            snapshots.push((t, psi.clone()));
        }
        if step == n_steps {
            break;
        }
        // Force is constant over the step (switches sit on step boundaries).
        let f = internal_force(cfg.schedule.force_at(t + 0.5 * dt));
        stepper.step(&mut psi.values, kick, f);
        kick += f * dt;
    }

    psi.momentum_shift = kick;
    Ok(EvolutionRecord { samples, snapshots, final_state: psi })
}

enum Op {
    /// Pointwise e^{−iVh}.
    Potential(Vec<Complex64>),
    /// Exact kinetic factor over a substep of length h, with e^{−ihk²}.
    Kinetic(f64, Vec<Complex64>),
}

/// Precomputed factors for one full step of a splitting.
struct Stepper {
    fourier: Fourier,
    labels: Vec<i64>,
    dk: f64,
    powers: Vec<Complex64>,
    ops: Vec<Op>,
}

/// Alternating (potential, kinetic) weights ending with a potential weight.
fn weights(splitting: Splitting) -> (Vec<f64>, Vec<f64>) {
    match splitting {
        Splitting::Strang => (vec![0.5, 0.5], vec![1.0]),
        Splitting::Rkn4 => {
            // Blanes & Moan (2002), SRKN₆ᵇ.
            let b1 = 0.082_984_406_417_405_2;
            let b2 = 0.396_309_801_498_368;
            let b3 = -0.039_056_304_922_348_6;
            let b4 = 1.0 - 2.0 * (b1 + b2 + b3);
            let a1 = 0.245_298_957_184_271;
            let a2 = 0.604_872_665_711_080;
            let a3 = 0.5 - (a1 + a2);
            (vec![b1, b2, b3, b4, b3, b2, b1], vec![a1, a2, a3, a3, a2, a1])
        }
    }
}

impl Stepper {
    fn new(grid: SpatialGrid, potential: &PotentialSpec, dt: f64, splitting: Splitting) -> Self {
        let x = grid.positions();
        let (pw, kw) = weights(splitting);
        let mut ops = Vec::with_capacity(pw.len() + kw.len());
        for (i, &b) in pw.iter().enumerate() {
            let h = b * dt;
            ops.push(Op::Potential(x.iter().map(|&x| Complex64::from_polar(1.0, -h * potential.value(x))).collect()));
            if let Some(&a) = kw.get(i) {
                let h = a * dt;
                let free = (0..grid.len())
                    .map(|j| {
                        let k = grid.momentum(j);
                        Complex64::from_polar(1.0, -h * k * k)
                    })
                    .collect();
                ops.push(Op::Kinetic(h, free));
            }
        }
        Self {
            fourier: Fourier::new(grid),
            labels: (0..grid.len()).map(|j| grid.momentum_label(j)).collect(),
            dk: grid.momentum_spacing(),
            powers: vec![Complex64::new(1.0, 0.0); grid.len() / 2 + 1],
            ops,
        }
    }

    /// Advance comoving values by one step starting from shift `kick` under
    /// internal force `f`.
    fn step(&mut self, values: &mut [Complex64], kick: f64, f: f64) {
        let mut a = kick;
        for op in &self.ops {
            match op {
                Op::Potential(factor) => {
                    for (v, p) in values.iter_mut().zip(factor) {
                        *v *= p;
                    }
                }
                Op::Kinetic(h, free) => {
                    let h = *h;
                    let mid = a + 0.5 * f * h;
                    // ∫(k + A)² ds over the substep = h·[(k + A_mid)² + f²h²/12]
                    let global = Complex64::from_polar(1.0, -h * (mid * mid + f * f * h * h / 12.0));
                    fill_powers(&mut self.powers, -2.0 * h * mid * self.dk);
                    self.fourier.forward(values);
                    for (j, v) in values.iter_mut().enumerate() {
                        let l = self.labels[j];
                        let shift = if l >= 0 { self.powers[l as usize] } else { self.powers[(-l) as usize].conj() };
                        *v *= free[j] * shift * global;
                    }
                    self.fourier.inverse(values);
                    a += f * h;
                }
            }
        }
    }
}

/// powers[n] = e^{i·n·angle}, recomputed exactly every 64 entries.
fn fill_powers(powers: &mut [Complex64], angle: f64) {
    let z = Complex64::from_polar(1.0, angle);
    for (n, p) in powers.iter_mut().enumerate() {
        *p = if n % 64 == 0 { Complex64::from_polar(1.0, angle * n as f64) } else { Complex64::new(0.0, 0.0) };
    }
    for n in 1..powers.len() {
        if n % 64 != 0 {
            powers[n] = powers[n - 1] * z;
        }
    }
}

pub(crate) fn sample(psi: &WavePacket, t: f64, cfg: &EvolutionConfig, projector: Option<&BandProjector>) -> Result<Sample> {
    let norm = psi.norm();
    let dist = observe::momentum_distribution(psi);
    let dp = dist.spacing();
    let (mut p1, mut p2) = (0.0, 0.0);
    for (p, w) in dist.momenta.iter().zip(&dist.density) {
        p1 += p * w * dp;
        p2 += p * p * w * dp;
    }
    let (mut pot, mut grad) = (0.0, 0.0);
    for (j, v) in psi.values.iter().enumerate() {
        let x = psi.grid.position(j);
        pot += cfg.potential.value(x) * v.norm_sqr();
        grad += cfg.potential.gradient(x) * v.norm_sqr();
    }
    pot *= psi.grid.spacing();
    grad *= psi.grid.spacing();
    let (populations, lowest_band_com) = match projector {
        Some(p) => (p.populations(psi)?, Some(p.band_center_of_mass(psi, 0)?)),
        None => (Vec::new(), None),
    };
    let overlap = match &cfg.reference {
        Some(r) => Some(r.inner(psi)?),
        None => None,
    };
    Ok(Sample {
        t,
        overlap,
        com: observe::center_of_mass(psi),
        lowest_band_com,
        norm,
        mean_momentum: p1 / norm,
        mean_gradient: grad / norm,
        energy: (p2 + pot) / norm,
        populations,
    })
}

/// Semiclassical lowest-band excursion plus five packet widths must stay
/// inside the periodic box.
fn check_domain(psi0: &WavePacket, cfg: &EvolutionConfig) -> Result<()> {
    let excursion = predicted_excursion(cfg)?;
    let start = observe::center_of_mass(psi0);
    let needed = start.abs() + excursion + 5.0 * psi0.rms_width();
    let available = psi0.grid.n_sites as f64 / 2.0;
    if needed > available {
        return Err(Error::DomainOverflow { needed, available });
    }
    Ok(())
}

/// Largest |Δr| (lattice constants) of the lowest-band semiclassical
/// trajectory over the run.
pub(crate) fn predicted_excursion(cfg: &EvolutionConfig) -> Result<f64> {
    if cfg.schedule.max_force() == 0.0 {
        return Ok(0.0);
    }
    let bands = BandStructure::solve(&cfg.potential, 129, 1, cfg.cutoff)?;
    let n = 1024;
    let times: Vec<f64> = (0..=n).map(|i| cfg.t_final * i as f64 / n as f64).collect();
    let traj = piecewise_trajectory(&bands, 0, &cfg.schedule, 0.0, &times)?;
    Ok(traj.iter().map(|p| p.displacement.abs()).fold(0.0, f64::max))
}
