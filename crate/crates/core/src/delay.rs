//! Group delay (phase time) `τ = ħ ∂α/∂E`.
//!
//! Every delay here is a central finite difference of a transmitted phase.
//! The three stencil phases are unwrapped against the centre value, and the
//! step is halved until two successive estimates agree.

use std::f64::consts::PI;

use crate::constants::{kinetic_prefactor, velocity, wavenumber, HBAR_EV_FS};
use crate::error::{Result, TunnelError};
use crate::potentials::{DoubleBarrierSpec, Potential};
use crate::rect::{rect_double_phase, rect_double_transmission, rect_single, RectDoubleParams};
use crate::wkb::{turning_points, wkb_factors, WkbOptions};

/// Half-width of the resonance and anti-resonance windows, rad.
pub const CLASSIFY_WINDOW: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceClass {
    Off,
    Resonance,
    AntiResonance,
}

impl ResonanceClass {
    pub fn name(&self) -> &'static str {
        match self {
            ResonanceClass::Off => "off",
            ResonanceClass::Resonance => "resonance",
            ResonanceClass::AntiResonance => "anti-resonance",
        }
    }
}

/// Classifies a round-trip well phase (`2 k1 a`, or `2 T2`).
pub fn classify(round_trip: f64) -> ResonanceClass {
    let r = round_trip.rem_euclid(2.0 * PI);
    if r < CLASSIFY_WINDOW || 2.0 * PI - r < CLASSIFY_WINDOW {
        ResonanceClass::Resonance
    } else if (r - PI).abs() < CLASSIFY_WINDOW {
        ResonanceClass::AntiResonance
    } else {
        ResonanceClass::Off
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayMethod {
    /// Exact phase of the rectangular double barrier.
    RectDouble,
    /// Exact phase of the first rectangular barrier alone.
    RectSingle,
    /// `arctan(2 tan T2 / T1²)` with factors integrated from the potential.
    Wkb,
    /// `arctan(2 tan T2 / T1²)` with `T1 = e^{−κ w2}`, `T2 = k1 a`.
    WkbRect,
}

impl DelayMethod {
    pub fn name(&self) -> &'static str {
        match self {
            DelayMethod::RectDouble => "rect-double",
            DelayMethod::RectSingle => "rect-single",
            DelayMethod::Wkb => "wkb",
            DelayMethod::WkbRect => "wkb-rect",
        }
    }
}

impl std::str::FromStr for DelayMethod {
    type Err = TunnelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect-double" => Ok(DelayMethod::RectDouble),
            "rect-single" => Ok(DelayMethod::RectSingle),
            "wkb" => Ok(DelayMethod::Wkb),
            "wkb-rect" => Ok(DelayMethod::WkbRect),
            other => Err(TunnelError::invalid(format!("unknown delay method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupDelay {
    /// fs
    pub tau: f64,
    pub energy: f64,
    pub method: DelayMethod,
    pub class: ResonanceClass,
    /// Step that produced `tau`.
    pub de: f64,
    /// False when step halving stopped before two estimates agreed.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayOptions {
    /// Initial step as a fraction of E.
    pub de_rel: f64,
    /// Relative agreement required between the estimates at `dE` and `dE/2`.
    pub tolerance: f64,
    pub max_halvings: usize,
    pub wkb: WkbOptions,
}

impl Default for DelayOptions {
    fn default() -> Self {
        DelayOptions {
            de_rel: 1e-4,
            tolerance: 1e-3,
            max_halvings: 40,
            wkb: WkbOptions::default(),
        }
    }
}

/// Brings `x` within π of `reference`.
fn align(x: f64, reference: f64) -> f64 {
    x - 2.0 * PI * ((x - reference) / (2.0 * PI)).round()
}

/// `ħ (α(E+dE) − α(E−dE)) / 2dE` with the stencil unwrapped.
///
/// A stencil whose phase moves by more than π/2 per step is ambiguous; it
/// is retried once with `dE/10` before giving up.
pub fn central_delay<F: Fn(f64) -> Result<f64>>(phase: &F, energy: f64, de: f64) -> Result<f64> {
    if !(de > 0.0) {
        return Err(TunnelError::invalid("dE must be > 0"));
    }
    let mut de = de;
    for _ in 0..2 {
        if de >= energy {
            return Err(TunnelError::Domain(format!("dE = {de} must be smaller than E = {energy}")));
        }
        let p0 = phase(energy)?;
        let pm = align(phase(energy - de)?, p0);
        let pp = align(phase(energy + de)?, p0);
        if !(p0.is_finite() && pm.is_finite() && pp.is_finite()) {
            return Err(TunnelError::Unwrap { energy });
        }
        if (pp - p0).abs() < 0.5 * PI && (p0 - pm).abs() < 0.5 * PI {
            return Ok(HBAR_EV_FS * (pp - pm) / (2.0 * de));
        }
        de /= 10.0;
    }
    Err(TunnelError::Unwrap { energy })
}

/// Central difference with automatic step halving.
///
/// Steps whose stencil cannot be unwrapped (a resonance narrower than the
/// step) are skipped. Returns `(τ, dE used, converged)`.
pub fn refined_delay<F: Fn(f64) -> Result<f64>>(phase: &F, energy: f64, opts: &DelayOptions) -> Result<(f64, f64, bool)> {
    if !(energy > 0.0) {
        return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
    }
    if !(opts.de_rel > 0.0 && opts.de_rel < 1.0) {
        return Err(TunnelError::invalid("de_rel must be in (0, 1)"));
    }
    let min_de = 1e-13 * energy;
    let mut de = opts.de_rel * energy;
    let mut last: Option<(f64, f64)> = None;
    let mut prev: Option<f64> = None;
    for _ in 0..=opts.max_halvings {
        match central_delay(phase, energy, de) {
            Ok(tau) => {
                if let Some(p) = prev {
                    let scale = tau.abs().max(p.abs()).max(f64::MIN_POSITIVE);
                    if (tau - p).abs() <= opts.tolerance * scale {
                        return Ok((tau, de, true));
                    }
                }
                prev = Some(tau);
                last = Some((tau, de));
            }
            Err(TunnelError::Unwrap { .. }) => prev = None,
            Err(e) => return Err(e),
        }
        de *= 0.5;
        if de < min_de {
            break;
        }
    }
    last.map(|(tau, de)| (tau, de, false)).ok_or(TunnelError::Unwrap { energy })
}

fn rect_phase(p: &RectDoubleParams, e: f64) -> Result<f64> {
    if rect_double_transmission(p, e)? == 0.0 {
        return Err(TunnelError::Unwrap { energy: e });
    }
    rect_double_phase(p, e)
}

/// Exact phase time of a rectangular double barrier, `ħ ∂/∂E arg[T e^{ik1 b}]`,
/// with a fixed step `de`.
pub fn phase_time_rect_double(p: &RectDoubleParams, energy: f64, de: f64) -> Result<GroupDelay> {
    p.validate()?;
    let tau = central_delay(&|e| rect_phase(p, e), energy, de)?;
    Ok(GroupDelay {
        tau,
        energy,
        method: DelayMethod::RectDouble,
        class: classify(2.0 * wavenumber(energy, p.mass_factor) * p.a),
        de,
        converged: true,
    })
}

/// Phase time of a single rectangular barrier of height `v0` and length `l`.
pub fn phase_time_rect_single(v0: f64, l: f64, energy: f64, de: f64, mass_factor: f64) -> Result<GroupDelay> {
    let tau = central_delay(&|e| Ok(rect_single(v0, l, e, mass_factor)?.alpha), energy, de)?;
    Ok(GroupDelay {
        tau,
        energy,
        method: DelayMethod::RectSingle,
        class: ResonanceClass::Off,
        de,
        converged: true,
    })
}

/// `arctan(2 tan T2 / T1²)`, continued through the poles of `tan T2`.
pub fn wkb_delay_phase(ln_t1: f64, t2: f64) -> f64 {
    let t1sq = (2.0 * ln_t1).exp();
    (2.0 * t2.sin()).atan2(t1sq * t2.cos())
}

fn wkb_potential_phase(p: &Potential, e: f64, opts: &WkbOptions) -> Result<(f64, f64)> {
    let tp = turning_points(p, e, opts.mode)?;
    let f = wkb_factors(p, e, &tp, opts.n_simpson)?;
    Ok((wkb_delay_phase(f.ln_t1, f.t2), f.t2))
}

/// WKB group delay of a double barrier with a fixed step `de`.
pub fn phase_time_wkb(p: &Potential, energy: f64, de: f64, opts: &WkbOptions) -> Result<GroupDelay> {
    let (_, t2) = wkb_potential_phase(p, energy, opts)?;
    let tau = central_delay(&|e| Ok(wkb_potential_phase(p, e, opts)?.0), energy, de)?;
    Ok(GroupDelay {
        tau,
        energy,
        method: DelayMethod::Wkb,
        class: classify(2.0 * t2),
        de,
        converged: true,
    })
}

/// `(ln T1, T2) = (−κ w2, k1 a)` for a rectangular double barrier.
pub fn rect_wkb_factors(p: &RectDoubleParams, energy: f64) -> Result<(f64, f64)> {
    if !(energy > 0.0 && energy < p.v2) {
        return Err(TunnelError::Domain(format!(
            "rectangular WKB factors need 0 < E < V2, got E = {energy}"
        )));
    }
    let c = kinetic_prefactor(p.mass_factor);
    let kappa = ((p.v2 - energy) / c).sqrt();
    Ok((-kappa * p.w2, wavenumber(energy, p.mass_factor) * p.a))
}

/// Group delay for any method, with step refinement.
pub fn phase_time(spec: &DoubleBarrierSpec, eps_tail: f64, energy: f64, method: DelayMethod, opts: &DelayOptions) -> Result<GroupDelay> {
    let (res, class) = match method {
        DelayMethod::RectDouble => {
            let p = RectDoubleParams::from_spec(spec)?;
            (
                refined_delay(&|e| rect_phase(&p, e), energy, opts)?,
                classify(2.0 * wavenumber(energy, p.mass_factor) * p.a),
            )
        }
        DelayMethod::RectSingle => {
            let p = RectDoubleParams::from_spec(spec)?;
            (
                refined_delay(&|e| Ok(rect_single(p.v1, p.w1, e, p.mass_factor)?.alpha), energy, opts)?,
                ResonanceClass::Off,
            )
        }
        DelayMethod::WkbRect => {
            let p = RectDoubleParams::from_spec(spec)?;
            let (_, t2) = rect_wkb_factors(&p, energy)?;
            let phase = |e: f64| {
                let (l1, t2) = rect_wkb_factors(&p, e)?;
                Ok(wkb_delay_phase(l1, t2))
            };
            (refined_delay(&phase, energy, opts)?, classify(2.0 * t2))
        }
        DelayMethod::Wkb => {
            let pot = Potential::new(spec, eps_tail)?;
            let (_, t2) = wkb_potential_phase(&pot, energy, &opts.wkb)?;
            let phase = |e: f64| Ok(wkb_potential_phase(&pot, e, &opts.wkb)?.0);
            (refined_delay(&phase, energy, opts)?, classify(2.0 * t2))
        }
    };
    let (tau, de, converged) = res;
    Ok(GroupDelay {
        tau,
        energy,
        method,
        class,
        de,
        converged,
    })
}

/// Opaque-barrier limit `2m/(ħ k1 k2)` in fs.
pub fn hartman_limit(energy: f64, v: f64, mass_factor: f64) -> Result<f64> {
    if !(energy > 0.0 && energy < v) {
        return Err(TunnelError::Domain(format!("Hartman limit needs 0 < E < V, got E = {energy}, V = {v}")));
    }
    let c = kinetic_prefactor(mass_factor);
    let k1 = (energy / c).sqrt();
    let k2 = ((v - energy) / c).sqrt();
    Ok(HBAR_EV_FS / (c * k1 * k2))
}

/// Single-barrier quantities entering the resonance and anti-resonance
/// delays.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleBarrierRefs {
    pub r0: f64,
    pub t0: f64,
    /// nm/fs
    pub v: f64,
    /// nm⁻¹
    pub kappa: f64,
    /// nm
    pub length: f64,
    /// eV
    pub v0: f64,
}

impl SingleBarrierRefs {
    fn base(v0: f64, energy: f64, mass_factor: f64) -> Result<(f64, f64)> {
        if !(energy > 0.0 && energy < v0) {
            return Err(TunnelError::Domain(format!("need 0 < E < V0, got E = {energy}, V0 = {v0}")));
        }
        let kappa = ((v0 - energy) / kinetic_prefactor(mass_factor)).sqrt();
        Ok((kappa, velocity(energy, mass_factor)))
    }

    /// WKB values `T0 = (1/T + T/4)⁻²`, `R0 = 1 − T0` with `T = e^{−κL}`.
    pub fn wkb(v0: f64, length: f64, energy: f64, mass_factor: f64) -> Result<Self> {
        let (kappa, v) = Self::base(v0, energy, mass_factor)?;
        let t = (-kappa * length).exp();
        let t0 = (1.0 / t + t / 4.0).powi(-2);
        Ok(SingleBarrierRefs {
            r0: 1.0 - t0,
            t0,
            v,
            kappa,
            length,
            v0,
        })
    }

    /// Exact rectangular-barrier probabilities.
    pub fn exact(v0: f64, length: f64, energy: f64, mass_factor: f64) -> Result<Self> {
        let (kappa, v) = Self::base(v0, energy, mass_factor)?;
        let s = rect_single(v0, length, energy, mass_factor)?;
        Ok(SingleBarrierRefs {
            r0: s.reflection,
            t0: s.transmission,
            v,
            kappa,
            length,
            v0,
        })
    }

    /// `(1 + R0)/T0 · a/v`
    pub fn resonance_delay(&self, a: f64) -> f64 {
        (1.0 + self.r0) / self.t0 * a / self.v
    }

    /// `T0/(1 + R0) · a/v`
    pub fn anti_resonance_delay(&self, a: f64) -> f64 {
        self.t0 / (1.0 + self.r0) * a / self.v
    }
}
