//! Spin-dependent dipole potentials of a lin-angle-lin lattice.
//!
//! With ξ = kx the two internal states see
//!
//! ```text
//! V₁(ξ; θ) = V_m cos²(ξ − θ/2)
//! V₀(ξ; θ) = ¾ V_m cos²(ξ + θ/2) + ¼ V_m cos²(ξ − θ/2)
//! ```
//!
//! Both contain a single spatial harmonic, so each is stored exactly as
//! `mean + c e^{2iξ} + c̄ e^{−2iξ}`.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Internal state of the atom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    /// |0⟩ = |F=1, m_F=−1⟩
    Zero,
    /// |1⟩ = |F=2, m_F=−2⟩
    One,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Zero, Spin::One];

    pub fn index(self) -> usize {
        match self {
            Spin::Zero => 0,
            Spin::One => 1,
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

impl TryFrom<u8> for Spin {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            0 => Ok(Spin::Zero),
            1 => Ok(Spin::One),
            _ => Err(Error::invalid("spin", format!("{v} is not 0 or 1"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotentialSpec {
    /// Constant part of V (E_r).
    pub mean: f64,
    /// Coefficient c of e^{2iξ} (E_r).
    pub harmonic: Complex64,
    pub spin: Spin,
    pub depth: f64,
    pub mixing_angle: f64,
}

impl PotentialSpec {
    /// Fourier form of the dipole potential for `spin` at depth `depth` (V_m,
    /// in E_r) and polarization angle `mixing_angle` (θ).
    ///
    /// cos²(ξ ∓ θ/2) = ½ + ¼ e^{∓iθ} e^{2iξ} + c.c., so spin 1 has
    /// c = (V_m/4) e^{−iθ} and spin 0 has c = (3V_m/16) e^{iθ} + (V_m/16) e^{−iθ}.
    pub fn new(spin: Spin, depth: f64, mixing_angle: f64) -> Result<Self> {
        if !(depth.is_finite() && depth >= 0.0) {
            return Err(Error::invalid("depth", format!("V_m must be non-negative, got {depth}")));
        }
        if !mixing_angle.is_finite() {
            return Err(Error::invalid("mixing_angle", "must be finite"));
        }
        let minus = Complex64::from_polar(1.0, -mixing_angle);
        let plus = Complex64::from_polar(1.0, mixing_angle);
        let harmonic = match spin {
            Spin::One => minus * (depth / 4.0),
            Spin::Zero => plus * (3.0 * depth / 16.0) + minus * (depth / 16.0),
        };
        Ok(Self { mean: depth / 2.0, harmonic, spin, depth, mixing_angle })
    }

    /// A potential-free "lattice" (free particle), handy for analytic limits.
    pub fn free(spin: Spin) -> Self {
        Self { mean: 0.0, harmonic: Complex64::new(0.0, 0.0), spin, depth: 0.0, mixing_angle: 0.0 }
    }

    #[inline]
    pub fn value(&self, xi: f64) -> f64 {
        self.mean + 2.0 * (self.harmonic * Complex64::from_polar(1.0, 2.0 * xi)).re
    }

    /// ∂V/∂ξ.
    #[inline]
    pub fn gradient(&self, xi: f64) -> f64 {
        -4.0 * (self.harmonic * Complex64::from_polar(1.0, 2.0 * xi)).im
    }

    pub fn evaluate(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&xi| self.value(xi)).collect()
    }

    /// Half the peak-to-peak modulation, 2|c|.
    pub fn amplitude(&self) -> f64 {
        2.0 * self.harmonic.norm()
    }

    pub fn minimum(&self) -> f64 {
        self.mean - self.amplitude()
    }

    pub fn maximum(&self) -> f64 {
        self.mean + self.amplitude()
    }
}
