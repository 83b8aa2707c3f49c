//! Physical constants and unit conventions.
//!
//! The internal unit system is (nm, fs, eV): geometry in nanometres, time in
//! femtoseconds, energy in electron-volts. Those are the natural scales of
//! semiconductor-heterostructure tunneling and keep every quantity within
//! comfortable f64 range.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// ħ in eV·fs.
pub const HBAR: f64 = 0.6582119569;

/// ħ²/(2mₑ) in eV·nm² for the bare electron mass.
pub const HBAR2_OVER_2ME: f64 = 0.0380998212;

/// Default effective-mass ratio m/mₑ (GaAs conduction band).
pub const DEFAULT_MASS_RATIO: f64 = 0.067;

/// Physical parameters of a run: ħ plus the effective mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    /// Effective-mass ratio m/mₑ.
    pub mass_ratio: f64,
}

impl Default for PhysicalParams {
    fn default() -> Self {
        PhysicalParams {
            mass_ratio: DEFAULT_MASS_RATIO,
        }
    }
}

impl PhysicalParams {
    pub fn new(mass_ratio: f64) -> Result<Self> {
        if !(mass_ratio.is_finite() && mass_ratio > 0.0) {
            return Err(Error::validation(format!(
                "mass_ratio must be a positive finite number, got {mass_ratio}"
            )));
        }
        Ok(PhysicalParams { mass_ratio })
    }

    /// ħ in eV·fs.
    pub fn hbar(&self) -> f64 {
        HBAR
    }

    /// c₂ = ħ²/(2m) in eV·nm²; the dispersion constant E = c₂k².
    pub fn hbar2_over_2m(&self) -> f64 {
        HBAR2_OVER_2ME / self.mass_ratio
    }

    /// Complex energy Eₙ = c₂κₙ² of a complex momentum (eV).
    pub fn energy_of(&self, kappa: Complex64) -> Complex64 {
        self.hbar2_over_2m() * kappa * kappa
    }

    /// The prefactor √(ħ/2m) = √(c₂/ħ) entering the Faddeyeva time argument
    /// (units nm·fs^(−1/2)).
    pub fn sqrt_hbar_over_2m(&self) -> f64 {
        (self.hbar2_over_2m() / HBAR).sqrt()
    }
}
