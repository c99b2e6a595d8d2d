//! Unit system and SI conversions.
//!
//! Internally everything is dimensionless: energies in recoil energies E_r,
//! lengths in 1/k (so one lattice period is π and the first Brillouin zone
//! is q ∈ [−1, 1]), times in τ_r = ħ/E_r. In these units the kinetic
//! operator is −∂²/∂ξ² and a force enters the Hamiltonian as −(Fa/E_r)/π · ξ.
//!
//! Forces are passed around as the ratio `Fa/E_r`, which is what one quotes
//! when describing a tilted lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Planck constant, J·s (exact since the 2019 SI redefinition).
pub const PLANCK: f64 = 6.626_070_15e-34;
/// Reduced Planck constant h/2π, J·s (CODATA 2018: 1.054 571 817... × 10⁻³⁴).
pub const HBAR: f64 = PLANCK / (2.0 * PI);
/// Atomic mass constant, kg (CODATA 2018).
pub const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;
/// Mass of ⁸⁷Rb in u (AME 2016).
pub const RB87_MASS_U: f64 = 86.909_180_531;
/// Mass of ⁸⁷Rb, kg.
pub const RB87_MASS: f64 = RB87_MASS_U * ATOMIC_MASS_UNIT;
/// Standard gravity used by default, m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;
/// Lattice laser wavelength resolving the Rb D-line fine structure, m.
pub const SPIN_DEPENDENT_WAVELENGTH: f64 = 785e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    /// Lattice laser wavelength λ in metres.
    pub laser_wavelength: f64,
    /// Atomic mass in kg.
    pub atom_mass: f64,
    /// Gravitational acceleration in m/s².
    pub gravity: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self {
            laser_wavelength: SPIN_DEPENDENT_WAVELENGTH,
            atom_mass: RB87_MASS,
            gravity: STANDARD_GRAVITY,
        }
    }
}

/// Recoil energy in joules together with E_r/h in hertz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoilEnergy {
    pub joules: f64,
    pub hertz: f64,
}

/// Bloch period in internal time units and in SI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlochPeriod {
    pub recoil_times: f64,
    pub seconds: f64,
}

impl BlochPeriod {
    pub fn millis(&self) -> f64 {
        self.seconds * 1e3
    }
}

impl UnitSystem {
    pub fn new(laser_wavelength: f64, atom_mass: f64, gravity: f64) -> Result<Self> {
        let units = Self { laser_wavelength, atom_mass, gravity };
        units.validate()?;
        Ok(units)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.laser_wavelength.is_finite() && self.laser_wavelength > 0.0) {
            return Err(Error::invalid("laser_wavelength", "must be positive"));
        }
        if !(self.atom_mass.is_finite() && self.atom_mass > 0.0) {
            return Err(Error::invalid("atom_mass", "must be positive"));
        }
        if !(self.gravity.is_finite() && self.gravity >= 0.0) {
            return Err(Error::invalid("gravity", "must be non-negative"));
        }
        Ok(())
    }

    /// k = 2π/λ, 1/m.
    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.laser_wavelength
    }

    /// a = λ/2, m.
    pub fn lattice_constant(&self) -> f64 {
        self.laser_wavelength / 2.0
    }

    /// E_r = ħ²k²/2m, both in joules and as a frequency.
    pub fn recoil_energy(&self) -> RecoilEnergy {
        let k = self.wave_number();
        let joules = HBAR * HBAR * k * k / (2.0 * self.atom_mass);
        RecoilEnergy { joules, hertz: joules / PLANCK }
    }

    /// τ_r = ħ/E_r, s.
    pub fn recoil_time(&self) -> f64 {
        HBAR / self.recoil_energy().joules
    }

    /// Dimensionless force Fa/E_r for a lattice tilted by `tilt_angle` against
    /// the horizontal, with F = m g sin φ.
    pub fn force_from_tilt(&self, tilt_angle: f64) -> Result<f64> {
        if !(0.0..=PI / 2.0).contains(&tilt_angle) {
            return Err(Error::invalid("tilt_angle", format!("{tilt_angle} rad is outside [0, π/2]")));
        }
        let force = self.atom_mass * self.gravity * tilt_angle.sin();
        Ok(force * self.lattice_constant() / self.recoil_energy().joules)
    }

    /// Inverse of [`force_from_tilt`](Self::force_from_tilt): the tilt angle
    /// (radians) producing a given Fa/E_r.
    pub fn tilt_from_force(&self, force: f64) -> Result<f64> {
        let full = self.force_from_tilt(PI / 2.0)?;
        if !(0.0..=full).contains(&force) {
            return Err(Error::invalid(
                "force",
                format!("Fa/E_r = {force} exceeds the vertical-lattice value {full:.4}"),
            ));
        }
        Ok((force / full).asin())
    }

    /// Bloch period T = 2πħ/(aF) for the dimensionless force `force` = Fa/E_r.
    pub fn bloch_period(&self, force: f64) -> Result<BlochPeriod> {
        let recoil_times = bloch_period(force)?;
        Ok(BlochPeriod { recoil_times, seconds: recoil_times * self.recoil_time() })
    }

    pub fn energy_to_si(&self, energy: f64) -> f64 {
        energy * self.recoil_energy().joules
    }

    pub fn energy_from_si(&self, joules: f64) -> f64 {
        joules / self.recoil_energy().joules
    }

    /// Internal length (units of 1/k) to metres.
    pub fn length_to_si(&self, xi: f64) -> f64 {
        xi / self.wave_number()
    }

    pub fn length_from_si(&self, metres: f64) -> f64 {
        metres * self.wave_number()
    }

    pub fn time_to_si(&self, t: f64) -> f64 {
        t * self.recoil_time()
    }

    pub fn time_from_si(&self, seconds: f64) -> f64 {
        seconds / self.recoil_time()
    }
}

/// Bloch period in units of τ_r: T = 2π/(Fa/E_r). Depends on nothing but the
/// force, in particular not on the lattice depth or the mixing angle.
pub fn bloch_period(force: f64) -> Result<f64> {
    if force == 0.0 {
        return Err(Error::ZeroForce);
    }
    if !(force.is_finite() && force > 0.0) {
        return Err(Error::invalid("force", format!("Fa/E_r must be positive, got {force}")));
    }
    Ok(2.0 * PI / force)
}

/// Force Fa/E_r expressed as the coefficient f of −f·ξ in internal units.
#[inline]
pub fn internal_force(force: f64) -> f64 {
    force / PI
}

/// Position ξ (units of 1/k) in lattice constants.
#[inline]
pub fn xi_to_sites(xi: f64) -> f64 {
    xi / PI
}

#[inline]
pub fn sites_to_xi(sites: f64) -> f64 {
    sites * PI
}
