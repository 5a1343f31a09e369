//! Physical constants (CODATA 2018) in the eV / nm / fs unit system.

/// ħ²/(2 mₑ) in eV·nm².
pub const HBAR2_OVER_2ME: f64 = 0.038_099_821_2;

/// ħ in eV·fs.
pub const HBAR_EV_FS: f64 = 0.658_211_956_9;

/// ħ·c in eV·nm.
pub const HBAR_C_EV_NM: f64 = 197.326_980_4;

/// mₑ·c² in eV.
pub const ELECTRON_REST_ENERGY_EV: f64 = 510_998.95;

/// Boltzmann constant in eV/K.
pub const BOLTZMANN_EV_PER_K: f64 = 8.617_333_262e-5;

/// Elementary charge in C (also J per eV).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Electron rest mass in kg.
pub const ELECTRON_MASS_KG: f64 = 9.109_383_701_5e-31;

/// ħ in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    /// ħ²/(2 mₑ), eV·nm².
    pub hbar2_over_2me: f64,
    /// ħ, eV·fs.
    pub hbar: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self {
            hbar2_over_2me: HBAR2_OVER_2ME,
            hbar: HBAR_EV_FS,
        }
    }
}

/// Kinetic prefactor ħ²/(2m) for a carrier of effective mass `mass_factor · mₑ`.
#[inline]
pub fn kinetic_prefactor(mass_factor: f64) -> f64 {
    HBAR2_OVER_2ME / mass_factor
}

/// Free-space wavenumber √(2mE)/ħ in nm⁻¹.
#[inline]
pub fn wavenumber(energy: f64, mass_factor: f64) -> f64 {
    (energy / kinetic_prefactor(mass_factor)).sqrt()
}

/// Group velocity ħk/m in nm/fs.
#[inline]
pub fn velocity(energy: f64, mass_factor: f64) -> f64 {
    2.0 * kinetic_prefactor(mass_factor) * wavenumber(energy, mass_factor) / HBAR_EV_FS
}
