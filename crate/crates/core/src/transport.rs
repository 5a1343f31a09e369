//! Band offsets and Tsu-Esaki current densities.
//!
//! The current is evaluated in its transverse-integrated form
//!
//! ```text
//! J = e m* kT / (2π² ħ³) ∫ dE 𝒯(E) [ln(1 + e^{(E_F − E)/kT}) − ln(1 + e^{(E_F − E − eV)/kT})]
//! ```
//!
//! with energies in eV and J in A/m².

use rayon::prelude::*;

use crate::constants::{BOLTZMANN_EV_PER_K, ELECTRON_MASS_KG, ELEMENTARY_CHARGE, HBAR_SI};
use crate::engine::PreparedEngine;
use crate::error::{Result, TunnelError};

/// Electron affinities and band gaps of a heterojunction, eV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialPair {
    pub chi1: f64,
    pub chi2: f64,
    pub eg1: f64,
    pub eg2: f64,
}

/// `(ΔE_c, ΔE_v) = (χ1 − χ2, E_G2 − E_G1 − ΔE_c)`.
pub fn band_offsets(m: &MaterialPair) -> Result<(f64, f64)> {
    if !(m.eg1 > 0.0 && m.eg2 > 0.0) {
        return Err(TunnelError::invalid("band gaps must be positive"));
    }
    let dec = m.chi1 - m.chi2;
    Ok((dec, m.eg2 - m.eg1 - dec))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviceConfig {
    /// eV, measured from the emitter conduction band edge.
    pub fermi_level: f64,
    /// K
    pub temperature: f64,
    /// m*/mₑ
    pub mass_factor: f64,
    /// V
    pub bias: f64,
    /// Fraction of the bias by which the barrier levels drop relative to
    /// the emitter; 𝒯 is evaluated at `E + level_shift · bias`. Zero keeps
    /// the potential untilted.
    pub level_shift: f64,
    /// Simpson panels over the energy window (even).
    pub n_energy: usize,
}

impl Default for DeviceConfig {
    fn default() -> Self {
        DeviceConfig {
            fermi_level: 0.05,
            temperature: 300.0,
            mass_factor: 0.067,
            bias: 0.0,
            level_shift: 0.0,
            n_energy: 4000,
        }
    }
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature > 0.0) {
            return Err(TunnelError::invalid("temperature must be > 0"));
        }
        if !(self.mass_factor > 0.0) {
            return Err(TunnelError::invalid("mass_factor must be > 0"));
        }
        if !(self.bias >= 0.0) || !self.bias.is_finite() {
            return Err(TunnelError::invalid("bias must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.level_shift) {
            return Err(TunnelError::invalid("level_shift must lie in [0, 1]"));
        }
        if self.n_energy < 2 || self.n_energy % 2 != 0 {
            return Err(TunnelError::invalid("n_energy must be even and >= 2"));
        }
        Ok(())
    }

    pub fn kt(&self) -> f64 {
        BOLTZMANN_EV_PER_K * self.temperature
    }

    /// Upper end of the longitudinal energy integral.
    pub fn energy_cutoff(&self) -> f64 {
        self.fermi_level.max(0.0) + 20.0 * self.kt() + self.bias
    }

    /// `e m* mₑ e² / (2π² ħ³)`: converts ∫ dE kT(...) in eV² to A/m².
    pub fn prefactor(&self) -> f64 {
        let q = ELEMENTARY_CHARGE;
        q * self.mass_factor * ELECTRON_MASS_KG * q * q / (2.0 * std::f64::consts::PI.powi(2) * HBAR_SI.powi(3))
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `kT [ln(1 + e^{(E_F − E)/kT}) − ln(1 + e^{(E_F − E − V)/kT})]`, eV.
pub fn supply_function(energy: f64, dev: &DeviceConfig) -> f64 {
    let kt = dev.kt();
    kt * (softplus((dev.fermi_level - energy) / kt) - softplus((dev.fermi_level - energy - dev.bias) / kt))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurrentDensity {
    pub bias: f64,
    /// A/m²
    pub j: f64,
    /// Estimated contribution beyond the energy cutoff, A/m².
    pub tail: f64,
    /// Set when the tail estimate exceeds `TAIL_TOLERANCE · |J|`.
    pub tail_flag: bool,
}

/// Relative tail contribution above which a current is flagged.
pub const TAIL_TOLERANCE: f64 = 1e-6;

/// Current density for an arbitrary transmission function `t(E)`.
pub fn tsu_esaki_with<F: Fn(f64) -> Result<f64> + Sync>(t: F, dev: &DeviceConfig) -> Result<CurrentDensity> {
    dev.validate()?;
    if dev.bias == 0.0 {
        return Ok(CurrentDensity {
            bias: 0.0,
            j: 0.0,
            tail: 0.0,
            tail_flag: false,
        });
    }
    let e_hi = dev.energy_cutoff();
    let n = dev.n_energy;
    let h = e_hi / n as f64;
    let shift = dev.level_shift * dev.bias;
    // The lower endpoint is nudged off E = 0, where wavenumbers vanish.
    let e_lo = 1e-9 * e_hi;
    let vals = (0..=n)
        .into_par_iter()
        .map(|i| {
            let e = if i == 0 { e_lo } else { i as f64 * h };
            let tv = t(e + shift)?;
            if !tv.is_finite() {
                return Err(TunnelError::Domain(format!("transmission undefined at E = {} eV", e + shift)));
            }
            Ok(tv * supply_function(e, dev))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut sum = vals[0] + vals[n];
    for (i, v) in vals.iter().enumerate().take(n).skip(1) {
        sum += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let integral = sum * h / 3.0;
    let pref = dev.prefactor();
    let j = pref * integral;
    // The supply function decays like e^{−E/kT} beyond the cutoff.
    let tail = pref * vals[n].abs() * dev.kt();
    Ok(CurrentDensity {
        bias: dev.bias,
        j,
        tail,
        tail_flag: tail > TAIL_TOLERANCE * j.abs(),
    })
}

/// Current density with transmissions from a prepared engine.
pub fn tsu_esaki_current(dev: &DeviceConfig, engine: &PreparedEngine) -> Result<CurrentDensity> {
    tsu_esaki_with(|e| engine_transmission(engine, e), dev)
}

fn engine_transmission(engine: &PreparedEngine, e: f64) -> Result<f64> {
    let p = engine.point(e)?;
    if p.is_valid() {
        return Ok(p.transmission);
    }
    // A grid point on a rectangular barrier top: step off it.
    let q = engine.point(e * (1.0 + 1e-9))?;
    if q.is_valid() {
        Ok(q.transmission)
    } else {
        Err(TunnelError::Domain(format!(
            "transmission unavailable at E = {e} eV: {}",
            p.flag.map(|f| f.to_string()).unwrap_or_default()
        )))
    }
}

/// Current densities over an ascending list of biases.
pub fn iv_curve(dev: &DeviceConfig, engine: &PreparedEngine, biases: &[f64]) -> Result<Vec<CurrentDensity>> {
    if biases.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(TunnelError::invalid("biases must be non-decreasing"));
    }
    biases
        .iter()
        .map(|&bias| tsu_esaki_current(&DeviceConfig { bias, ..*dev }, engine))
        .collect()
}
