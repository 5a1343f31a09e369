//! Direct RK4 integration of the stationary Schrödinger equation.
//!
//! The second-order equation is integrated as the first-order system
//! `ψ' = φ₂`, `φ₂' = (2m/ħ²)(V − E)ψ`. Transmission is extracted by
//! integrating backward from a pure outgoing wave `e^{ikx}` at `x_max` and
//! decomposing the solution at `x_min` into incident and reflected waves.

use num_complex::Complex64;

use crate::constants::kinetic_prefactor;
use crate::engine::{Engine, PointFlag, TransmissionPoint};
use crate::error::{Result, TunnelError};
use crate::potentials::{Potential, Side};

/// |ψ| above which [`integrate_rk4`] gives up.
pub const OVERFLOW_LIMIT: f64 = 1e30;

/// Renormalization threshold used by the scattering solver.
const RESCALE_LIMIT: f64 = 1e100;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// (ψ, dψ/dx).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveState {
    pub phi1: Complex64,
    pub phi2: Complex64,
}

impl WaveState {
    pub fn new(phi1: Complex64, phi2: Complex64) -> Self {
        WaveState { phi1, phi2 }
    }

    /// Plane wave `e^{ikx}` evaluated at `x`.
    pub fn plane_wave(k: f64, x: f64) -> Self {
        let psi = Complex64::from_polar(1.0, k * x);
        WaveState { phi1: psi, phi2: I * k * psi }
    }

    fn axpy(self, h: f64, d: WaveState) -> Self {
        WaveState {
            phi1: self.phi1 + d.phi1 * h,
            phi2: self.phi2 + d.phi2 * h,
        }
    }

    fn scale(self, s: f64) -> Self {
        WaveState {
            phi1: self.phi1 * s,
            phi2: self.phi2 * s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Target step in nm.
    pub step: f64,
    /// Largest tolerated relative flux error before a point is flagged.
    pub max_flux_error: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            step: 1e-4,
            max_flux_error: 1e-6,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(TunnelError::invalid(format!("step must be > 0, got {}", self.step)));
        }
        if !(self.max_flux_error > 0.0) {
            return Err(TunnelError::invalid("max_flux_error must be > 0"));
        }
        Ok(())
    }
}

/// One RK4 step of signed length `h` given V at the start, midpoint and end.
#[inline]
fn rk4_step(y: WaveState, h: f64, q0: f64, qm: f64, q1: f64) -> WaveState {
    // q = (V − E)/C, so φ₂' = q ψ.
    let f = |s: WaveState, q: f64| WaveState {
        phi1: s.phi2,
        phi2: s.phi1 * q,
    };
    let k1 = f(y, q0);
    let k2 = f(y.axpy(0.5 * h, k1), qm);
    let k3 = f(y.axpy(0.5 * h, k2), qm);
    let k4 = f(y.axpy(h, k3), q1);
    WaveState {
        phi1: y.phi1 + (k1.phi1 + 2.0 * k2.phi1 + 2.0 * k3.phi1 + k4.phi1) * (h / 6.0),
        phi2: y.phi2 + (k1.phi2 + 2.0 * k2.phi2 + 2.0 * k3.phi2 + k4.phi2) * (h / 6.0),
    }
}

/// V at both ends of a step taken from the inside of the step, so a jump
/// sitting exactly on a step boundary is never straddled.
#[inline]
fn step_ends(p: &Potential, x0: f64, x1: f64) -> (f64, f64) {
    if x1 > x0 {
        (p.eval_side(x0, Side::Right), p.eval_side(x1, Side::Left))
    } else {
        (p.eval_side(x0, Side::Left), p.eval_side(x1, Side::Right))
    }
}

/// Fixed-step RK4 from `from` to `to`; the last step is shortened to land
/// exactly on `to`. Returns every visited `(x, state)` including the start.
pub fn integrate_rk4(
    p: &Potential,
    energy: f64,
    from: f64,
    to: f64,
    y0: WaveState,
    h: f64,
) -> Result<Vec<(f64, WaveState)>> {
    if !(h > 0.0) {
        return Err(TunnelError::invalid("step must be > 0"));
    }
    if from == to {
        return Err(TunnelError::invalid("integration interval is empty"));
    }
    let c = kinetic_prefactor(p.mass_factor());
    let dir = (to - from).signum();
    let mut out = Vec::with_capacity(((to - from).abs() / h).ceil() as usize + 1);
    let mut x = from;
    let mut y = y0;
    out.push((x, y));
    while (to - x) * dir > 0.0 {
        let x1 = if (to - x).abs() <= h * (1.0 + 1e-12) { to } else { x + dir * h };
        let (v0, v1) = step_ends(p, x, x1);
        let vm = p.eval(0.5 * (x + x1));
        y = rk4_step(y, x1 - x, (v0 - energy) / c, (vm - energy) / c, (v1 - energy) / c);
        x = x1;
        if y.phi1.norm() > OVERFLOW_LIMIT || !y.phi1.is_finite() {
            return Err(TunnelError::Overflow { x });
        }
        out.push((x, y));
    }
    Ok(out)
}

/// Incident, reflected and transmitted amplitudes normalized to `A = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringAmplitudes {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
}

impl ScatteringAmplitudes {
    /// |A|² − |B|² − |C|², relative to |A|².
    pub fn flux_error(&self) -> f64 {
        ((self.a.norm_sqr() - self.b.norm_sqr() - self.c.norm_sqr()) / self.a.norm_sqr()).abs()
    }
}

/// Result of one backward integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSolution {
    pub energy: f64,
    pub transmission: f64,
    /// ln 𝒯, accurate even when 𝒯 underflows.
    pub ln_transmission: f64,
    /// Phase of `C/A` plus `k (x_max − x_min)`: the phase accumulated by the
    /// transmitted wave across the potential window.
    pub phase: f64,
    pub amplitudes: ScatteringAmplitudes,
    pub flux_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Step {
    h: f64,
    v0: f64,
    vm: f64,
    v1: f64,
}

/// Potential tabulated on the backward integration grid of one [`Potential`].
///
/// The grid depends only on the potential and the step, so a sweep over
/// many energies reuses it.
#[derive(Debug, Clone)]
pub struct NumericSolver {
    steps: Vec<Step>,
    x_min: f64,
    x_max: f64,
    c: f64,
    opts: SolverOptions,
}

impl NumericSolver {
    pub fn new(p: &Potential, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let (x_min, x_max) = (p.x_min(), p.x_max());
        let mut nodes: Vec<f64> = vec![x_min];
        nodes.extend(p.breakpoints().into_iter().filter(|&b| b > x_min && b < x_max));
        nodes.push(x_max);

        let mut steps = Vec::new();
        for seg in nodes.windows(2).rev() {
            let (lo, hi) = (seg[0], seg[1]);
            let len = hi - lo;
            if len <= 0.0 {
                continue;
            }
            let n = (len / opts.step).ceil().max(1.0) as usize;
            let h = len / n as f64;
            for j in 0..n {
                let x0 = if j == 0 { hi } else { hi - j as f64 * h };
                let x1 = if j + 1 == n { lo } else { hi - (j + 1) as f64 * h };
                let (v0, v1) = step_ends(p, x0, x1);
                steps.push(Step {
                    h: x1 - x0,
                    v0,
                    vm: p.eval(0.5 * (x0 + x1)),
                    v1,
                });
            }
        }
        Ok(NumericSolver {
            steps,
            x_min,
            x_max,
            c: kinetic_prefactor(p.mass_factor()),
            opts,
        })
    }

    /// Number of RK4 steps per solve.
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    pub fn solve(&self, energy: f64) -> Result<NumericSolution> {
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
        }
        let c = self.c;
        let k = (energy / c).sqrt();
        let mut y = WaveState::plane_wave(k, self.x_max);
        let mut log_scale = 0.0;
        for s in &self.steps {
            y = rk4_step(y, s.h, (s.v0 - energy) / c, (s.vm - energy) / c, (s.v1 - energy) / c);
            let m = y.phi1.norm().max(y.phi2.norm() / k);
            if m > RESCALE_LIMIT {
                y = y.scale(1.0 / m);
                log_scale += m.ln();
            }
        }
        if !y.phi1.is_finite() || !y.phi2.is_finite() {
            return Err(TunnelError::Overflow { x: self.x_min });
        }

        // Amplitudes at x_min, still carrying the factor e^{−log_scale}.
        let a = 0.5 * (y.phi1 + y.phi2 / (I * k)) * Complex64::from_polar(1.0, -k * self.x_min);
        let b = 0.5 * (y.phi1 - y.phi2 / (I * k)) * Complex64::from_polar(1.0, k * self.x_min);
        let a_norm = a.norm();
        if a_norm == 0.0 {
            return Err(TunnelError::Domain(format!("vanishing incident amplitude at E = {energy} eV")));
        }
        let ln_transmission = -2.0 * (a_norm.ln() + log_scale);
        let t = (1.0 / a) * (-log_scale).exp();
        let amplitudes = ScatteringAmplitudes {
            a: Complex64::new(1.0, 0.0),
            b: b / a,
            c: t,
        };
        let flux_error = amplitudes.flux_error();
        Ok(NumericSolution {
            energy,
            transmission: ln_transmission.exp(),
            ln_transmission,
            phase: -a.arg() + k * (self.x_max - self.x_min),
            amplitudes,
            flux_error,
        })
    }

    /// [`solve`](Self::solve) packaged as a flagged [`TransmissionPoint`].
    pub fn point(&self, energy: f64) -> Result<TransmissionPoint> {
        let s = self.solve(energy)?;
        let flag = if s.flux_error > self.opts.max_flux_error {
            Some(PointFlag::FluxViolation(s.flux_error))
        } else {
            None
        };
        Ok(TransmissionPoint {
            energy,
            transmission: s.transmission,
            phase: s.phase,
            engine: Engine::Numeric,
            flag,
        })
    }
}

/// Transmission of `p` at `energy` by backward RK4 integration.
///
/// Flux-conservation violations above `opts.max_flux_error` are flagged on
/// the returned point rather than treated as errors.
pub fn transmission_numeric(p: &Potential, energy: f64, opts: &SolverOptions) -> Result<TransmissionPoint> {
    NumericSolver::new(p, *opts)?.point(energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{DoubleBarrierSpec, DEFAULT_EPS_TAIL};
    use crate::rect::{rect_double_transmission, RectDoubleParams};

    #[test]
    fn free_particle_is_plane_wave() {
        let p = Potential::free(1.0);
        let k = (1.5 / kinetic_prefactor(1.0)).sqrt();
        let traj = integrate_rk4(&p, 1.5, 0.0, 2.0, WaveState::plane_wave(k, 0.0), 1e-3).unwrap();
        let (x, y) = traj.last().unwrap();
        assert_eq!(*x, 2.0);
        assert!((y.phi1 - Complex64::from_polar(1.0, k * 2.0)).norm() < 1e-9);
    }

    #[test]
    fn last_step_is_shortened() {
        let p = Potential::free(1.0);
        let traj = integrate_rk4(&p, 1.0, 0.0, 0.25, WaveState::plane_wave(1.0, 0.0), 0.1).unwrap();
        let xs: Vec<f64> = traj.iter().map(|t| t.0).collect();
        assert_eq!(xs.len(), 4);
        assert_eq!(*xs.last().unwrap(), 0.25);
        let back = integrate_rk4(&p, 1.0, 0.25, 0.0, WaveState::plane_wave(1.0, 0.25), 0.1).unwrap();
        assert_eq!(back.last().unwrap().0, 0.0);
    }

    #[test]
    fn constant_barrier_grows_exponentially() {
        let spec = DoubleBarrierSpec::rectangular(4.0, 0.0, 10.0, 0.0, 0.0);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let kappa = ((4.0 - 1.0) / kinetic_prefactor(1.0)).sqrt();
        let y0 = WaveState::new(Complex64::new(1.0, 0.0), Complex64::new(kappa, 0.0));
        let traj = integrate_rk4(&p, 1.0, 1.0, 3.0, y0, 1e-3).unwrap();
        let psi = traj.last().unwrap().1.phi1.re;
        assert!((psi / (2.0 * kappa).exp() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn overflow_is_reported() {
        let spec = DoubleBarrierSpec::rectangular(40.0, 0.0, 50.0, 0.0, 0.0);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let y0 = WaveState::new(Complex64::new(1.0, 0.0), Complex64::new(30.0, 0.0));
        let r = integrate_rk4(&p, 1.0, 0.0, 50.0, y0, 1e-2);
        assert!(matches!(r, Err(TunnelError::Overflow { .. })));
    }

    #[test]
    fn free_transmission_and_phase() {
        let spec = DoubleBarrierSpec::rectangular(0.0, 0.0, 1.0, 1.0, 1.0);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let pt = transmission_numeric(&p, 0.7, &SolverOptions::default()).unwrap();
        assert!((pt.transmission - 1.0).abs() < 1e-12);
        assert!(pt.flag.is_none());
    }

    #[test]
    fn matches_closed_form_on_rectangles() {
        let spec = DoubleBarrierSpec::rectangular(4.0, 4.0, 0.6, 0.6, 0.75);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let rp = RectDoubleParams::new(4.0, 4.0, 0.6, 0.6, 0.75);
        let solver = NumericSolver::new(&p, SolverOptions::default()).unwrap();
        for e in [0.3, 2.0, 3.5, 5.0, 7.9] {
            let t = solver.solve(e).unwrap().transmission;
            let exact = rect_double_transmission(&rp, e).unwrap();
            assert!(((t - exact) / exact).abs() < 1e-6, "E={e}: {t} vs {exact}");
        }
    }

    #[test]
    fn opaque_barrier_does_not_overflow() {
        let spec = DoubleBarrierSpec::rectangular(10.0, 10.0, 10.0, 10.0, 1.0);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let s = NumericSolver::new(&p, SolverOptions { step: 1e-3, ..Default::default() })
            .unwrap()
            .solve(1.0)
            .unwrap();
        assert!(s.ln_transmission < -200.0);
        assert!(s.ln_transmission.is_finite());
    }

    #[test]
    fn rejects_non_positive_energy() {
        let p = Potential::free(1.0);
        assert!(transmission_numeric(&p, 0.0, &SolverOptions::default()).is_err());
        assert!(transmission_numeric(&p, -1.0, &SolverOptions::default()).is_err());
    }
}
