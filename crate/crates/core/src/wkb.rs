//! Semiclassical (WKB) transmission through single and double barriers.
//!
//! For a double barrier with turning points `x1 < x2 ≤ x3 < x4` the three
//! factors are
//!
//! * `T1 = exp(−∫_{x3}^{x4} |p|/ħ dx)` (second barrier),
//! * `T2 = ∫_{x2}^{x3} p/ħ dx` (well phase),
//! * `T3 = exp(−∫_{x1}^{x2} |p|/ħ dx)` (first barrier),
//!
//! and the transmission is `|T3 (C4 − C3)/4 + (C3 + C4)/T3|⁻²` with
//! `C3 = (1/T1 − T1/4) e^{iT2}` and `C4 = (1/T1 + T1/4) e^{−iT2}`.
//!
//! Opaque barriers make `T1`, `T3` underflow long before the transmission
//! itself is unrepresentable, so the factors are kept as logarithms and the
//! amplitude is evaluated after multiplying through by `T1 T3`.

use num_complex::Complex64;

use crate::constants::kinetic_prefactor;
use crate::error::{Result, TunnelError};
use crate::potentials::{BarrierShape, Potential};
use crate::quadrature::simpson_sqrt_endpoints;

/// Number of scan intervals used to bracket turning points.
pub const SCAN_INTERVALS: usize = 4096;

/// Negative radicands down to this fraction of `v_max` are clamped to zero.
pub const RADICAND_TOLERANCE: f64 = 1e-2;

/// How turning points are located.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TurningPointMode {
    /// Closed form for well separated Gaussians, ignoring the partner tail.
    GaussianAnalytic,
    /// Scan for sign changes of `V − E` and bisect.
    Numeric,
    /// Closed form where it is valid, numeric otherwise.
    #[default]
    Auto,
}

impl TurningPointMode {
    pub fn name(&self) -> &'static str {
        match self {
            TurningPointMode::GaussianAnalytic => "gaussian-analytic",
            TurningPointMode::Numeric => "numeric",
            TurningPointMode::Auto => "auto",
        }
    }
}

impl std::str::FromStr for TurningPointMode {
    type Err = TunnelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian-analytic" | "analytic" => Ok(TurningPointMode::GaussianAnalytic),
            "numeric" => Ok(TurningPointMode::Numeric),
            "auto" => Ok(TurningPointMode::Auto),
            other => Err(TunnelError::invalid(format!("unknown turning-point mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbOptions {
    /// Simpson panels per integral (even).
    pub n_simpson: usize,
    pub mode: TurningPointMode,
}

impl Default for WkbOptions {
    fn default() -> Self {
        WkbOptions {
            n_simpson: 512,
            mode: TurningPointMode::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurningPoints {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
    pub x4: f64,
}

impl TurningPoints {
    pub fn as_array(&self) -> [f64; 4] {
        [self.x1, self.x2, self.x3, self.x4]
    }
}

/// All points in the scan window where `V − E` changes sign, ascending.
///
/// The window is the potential support padded by a quarter of its length
/// on both sides.
pub fn crossings(p: &Potential, energy: f64) -> Vec<f64> {
    let span = p.x_max() - p.x_min();
    if !(span > 0.0) {
        return Vec::new();
    }
    let lo = p.x_min() - 0.25 * span;
    let dx = 1.5 * span / SCAN_INTERVALS as f64;
    let g = |x: f64| p.eval(x) - energy;
    let mut out = Vec::new();
    let mut xa = lo;
    let mut ga = g(xa);
    for i in 1..=SCAN_INTERVALS {
        let xb = lo + i as f64 * dx;
        let gb = g(xb);
        if (ga > 0.0) != (gb > 0.0) {
            out.push(bisect(&g, xa, xb, ga));
        }
        xa = xb;
        ga = gb;
    }
    out
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut a: f64, mut b: f64, ga: f64) -> f64 {
    let a_pos = ga > 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if (g(m) > 0.0) == a_pos {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn analytic_points(p: &Potential, energy: f64) -> Result<TurningPoints> {
    let spec = p.spec();
    let (s1, s2) = match (spec.shape1, spec.shape2) {
        (BarrierShape::Gaussian { sigma: s1 }, BarrierShape::Gaussian { sigma: s2 }) => (s1, s2),
        _ => {
            return Err(TunnelError::NotApplicable {
                engine: "wkb".into(),
                reason: "closed-form turning points need Gaussian barriers".into(),
            })
        }
    };
    let margin = spec.separation - 3.0 * s1 - 3.0 * s2;
    if !(margin > 0.0) {
        return Err(TunnelError::AssumptionViolated { margin });
    }
    let [c1, c2] = p.anchors();
    let d1 = s1 * (2.0 * (spec.v1 / energy).ln()).sqrt();
    let d2 = s2 * (2.0 * (spec.v2 / energy).ln()).sqrt();
    Ok(TurningPoints {
        x1: c1 - d1,
        x2: c1 + d1,
        x3: c2 - d2,
        x4: c2 + d2,
    })
}

/// Classical turning points of a double barrier at `energy`.
pub fn turning_points(p: &Potential, energy: f64, mode: TurningPointMode) -> Result<TurningPoints> {
    if !(energy > 0.0) {
        return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
    }
    let spec = p.spec();
    if spec.barrier_count() < 2 || energy >= spec.v1.min(spec.v2) {
        return Err(TunnelError::TurningPoints {
            energy,
            expected: 4,
            found: crossings(p, energy).len(),
        });
    }
    let analytic_ok = spec.is_gaussian()
        && spec.separation - 3.0 * p.spec().shape1.width() - 3.0 * p.spec().shape2.width() > 0.0;
    match mode {
        TurningPointMode::GaussianAnalytic => analytic_points(p, energy),
        TurningPointMode::Auto if analytic_ok => analytic_points(p, energy),
        _ => {
            let xs = crossings(p, energy);
            if xs.len() != 4 {
                return Err(TunnelError::TurningPoints {
                    energy,
                    expected: 4,
                    found: xs.len(),
                });
            }
            Ok(TurningPoints {
                x1: xs[0],
                x2: xs[1],
                x3: xs[2],
                x4: xs[3],
            })
        }
    }
}

/// The two turning points of a single (or merged) barrier.
pub fn turning_points_single(p: &Potential, energy: f64) -> Result<(f64, f64)> {
    if !(energy > 0.0) {
        return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
    }
    let xs = crossings(p, energy);
    if xs.len() != 2 {
        return Err(TunnelError::TurningPoints {
            energy,
            expected: 2,
            found: xs.len(),
        });
    }
    Ok((xs[0], xs[1]))
}

/// `∫ √(±(V − E)/C) dx` over `[a, b]` with sign `s` (+1 under a barrier,
/// −1 in the well).
fn action(p: &Potential, energy: f64, a: f64, b: f64, s: f64, n: usize) -> Result<f64> {
    if b < a {
        return Err(TunnelError::invalid(format!("turning points out of order: {a} > {b}")));
    }
    let c = kinetic_prefactor(p.mass_factor());
    let tol = RADICAND_TOLERANCE * p.v_max().max(energy);
    if let Some((x, value)) = radicand_violation(p, energy, a, b, s, tol, n) {
        return Err(TunnelError::NegativeRadicand { x, value });
    }
    let val = simpson_sqrt_endpoints(|x| ((s * (p.eval(x) - energy)).max(0.0) / c).sqrt(), a, b, n)?;
    Ok(val)
}

fn radicand_violation(p: &Potential, energy: f64, a: f64, b: f64, s: f64, tol: f64, n: usize) -> Option<(f64, f64)> {
    let h = (b - a) / n as f64;
    (1..n)
        .map(|i| a + i as f64 * h)
        .map(|x| (x, s * (p.eval(x) - energy)))
        .filter(|&(_, r)| r < -tol)
        .min_by(|u, v| u.1.total_cmp(&v.1))
}

/// Barrier and well integrals, stored as `ln T1`, `T2`, `ln T3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbFactors {
    pub ln_t1: f64,
    pub t2: f64,
    pub ln_t3: f64,
}

impl WkbFactors {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Self {
        WkbFactors {
            ln_t1: t1.ln(),
            t2,
            ln_t3: t3.ln(),
        }
    }

    pub fn t1(&self) -> f64 {
        self.ln_t1.exp()
    }

    pub fn t3(&self) -> f64 {
        self.ln_t3.exp()
    }

    /// `C3`, `C4` (unscaled; may overflow for opaque barriers).
    pub fn coefficients(&self) -> WkbCoefficients {
        let t1 = self.t1();
        WkbCoefficients {
            c3: (1.0 / t1 - t1 / 4.0) * Complex64::from_polar(1.0, self.t2),
            c4: (1.0 / t1 + t1 / 4.0) * Complex64::from_polar(1.0, -self.t2),
        }
    }

    /// `T1 T3 [T3 (C4 − C3)/4 + (C3 + C4)/T3]`, finite for any factors.
    pub fn scaled_denominator(&self) -> Complex64 {
        let t1sq = (2.0 * self.ln_t1).exp();
        let t3sq = (2.0 * self.ln_t3).exp();
        let t1c3 = (1.0 - t1sq / 4.0) * Complex64::from_polar(1.0, self.t2);
        let t1c4 = (1.0 + t1sq / 4.0) * Complex64::from_polar(1.0, -self.t2);
        (t3sq / 4.0) * (t1c4 - t1c3) + (t1c3 + t1c4)
    }

    pub fn ln_transmission(&self) -> f64 {
        2.0 * self.ln_t1 + 2.0 * self.ln_t3 - self.scaled_denominator().norm_sqr().ln()
    }

    /// Phase of the transmitted amplitude, `−arg` of the denominator.
    pub fn phase(&self) -> f64 {
        -self.scaled_denominator().arg()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbCoefficients {
    pub c3: Complex64,
    pub c4: Complex64,
}

/// Evaluates the three factors with `n_simpson` panels per integral.
pub fn wkb_factors(p: &Potential, energy: f64, tp: &TurningPoints, n_simpson: usize) -> Result<WkbFactors> {
    if !(tp.x1 < tp.x2 && tp.x2 <= tp.x3 && tp.x3 < tp.x4) {
        return Err(TunnelError::invalid(format!("turning points out of order: {tp:?}")));
    }
    let ln_t3 = -action(p, energy, tp.x1, tp.x2, 1.0, n_simpson)?;
    let t2 = action(p, energy, tp.x2, tp.x3, -1.0, n_simpson)?;
    let ln_t1 = -action(p, energy, tp.x3, tp.x4, 1.0, n_simpson)?;
    Ok(WkbFactors { ln_t1, t2, ln_t3 })
}

/// Double-barrier WKB transmission from precomputed factors.
pub fn wkb_transmission(f: &WkbFactors) -> f64 {
    f.ln_transmission().exp()
}

/// Single-barrier WKB result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WkbSingle {
    /// `ln T`, the negative barrier action.
    pub ln_t: f64,
    /// `(1/T + T/4)⁻²`
    pub transmission: f64,
    /// `T²`, the opaque-barrier simplification.
    pub transmission_opaque: f64,
}

/// `(1/T + T/4)⁻²` for a barrier whose action gives `ln T`.
pub fn single_from_ln_t(ln_t: f64) -> WkbSingle {
    let tsq = (2.0 * ln_t).exp();
    WkbSingle {
        ln_t,
        transmission: (2.0 * ln_t - 2.0 * (1.0 + tsq / 4.0).ln()).exp(),
        transmission_opaque: tsq,
    }
}

/// WKB transmission of a potential with exactly two turning points.
pub fn wkb_single_transmission(p: &Potential, energy: f64, n_simpson: usize) -> Result<WkbSingle> {
    let (xa, xb) = turning_points_single(p, energy)?;
    let s = action(p, energy, xa, xb, 1.0, n_simpson)?;
    Ok(single_from_ln_t(-s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{DoubleBarrierSpec, DEFAULT_EPS_TAIL};
    use std::f64::consts::PI;

    fn gauss(a: f64) -> Potential {
        Potential::new(&DoubleBarrierSpec::gaussian(4.0, 4.0, 0.2, 0.2, a), DEFAULT_EPS_TAIL).unwrap()
    }

    #[test]
    fn analytic_points_closed_form() {
        let p = gauss(4.0);
        let e = 4.0 / std::f64::consts::E.powi(2);
        let tp = turning_points(&p, e, TurningPointMode::GaussianAnalytic).unwrap();
        assert!((tp.x2 - 0.4).abs() < 1e-12);
        assert!((tp.x1 + 0.4).abs() < 1e-12);
        assert!((tp.x3 - 3.6).abs() < 1e-12);
    }

    #[test]
    fn modes_agree_when_separated() {
        let p = gauss(4.0);
        let a = turning_points(&p, 2.0, TurningPointMode::GaussianAnalytic).unwrap();
        let n = turning_points(&p, 2.0, TurningPointMode::Numeric).unwrap();
        for (u, v) in a.as_array().iter().zip(n.as_array()) {
            assert!((u - v).abs() < 1e-3);
        }
    }

    #[test]
    fn errors() {
        let p = gauss(4.0);
        assert!(matches!(
            turning_points(&p, 4.0, TurningPointMode::Numeric),
            Err(TunnelError::TurningPoints { .. })
        ));
        assert!(matches!(
            turning_points(&gauss(1.0), 2.0, TurningPointMode::GaussianAnalytic),
            Err(TunnelError::AssumptionViolated { .. })
        ));
        // Merged hump: only two crossings.
        assert!(matches!(
            turning_points(&gauss(0.4), 2.0, TurningPointMode::Numeric),
            Err(TunnelError::TurningPoints { found: 2, .. })
        ));
    }

    #[test]
    fn barely_forbidden_factors_near_one() {
        let p = gauss(4.0);
        let tp = turning_points(&p, 3.9999, TurningPointMode::Auto).unwrap();
        let f = wkb_factors(&p, 3.9999, &tp, 512).unwrap();
        assert!(f.t1() > 0.99 && f.t1() <= 1.0);
        assert!(f.t3() > 0.99 && f.t3() <= 1.0);
    }

    #[test]
    fn rectangular_factors() {
        let spec = DoubleBarrierSpec::rectangular(4.0, 4.0, 0.6, 0.6, 0.75);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let tp = turning_points(&p, 2.0, TurningPointMode::Numeric).unwrap();
        let f = wkb_factors(&p, 2.0, &tp, 512).unwrap();
        let c = kinetic_prefactor(1.0);
        let kappa = (2.0 / c).sqrt();
        assert!((f.ln_t1 + kappa * 0.6).abs() < 1e-9);
        assert!((f.ln_t3 + kappa * 0.6).abs() < 1e-9);
        assert!((f.t2 - kappa * 0.75).abs() < 1e-9);
    }

    #[test]
    fn coefficient_identity() {
        let f = WkbFactors::new(0.3, 1.1, 0.7);
        let c = f.coefficients();
        let lhs = c.c3 * c.c4.conj() + c.c3.conj() * c.c4;
        let t1 = 0.3f64;
        let rhs = 2.0 * (1.0 / (t1 * t1) - t1 * t1 / 16.0) * (2.0 * 1.1f64).cos();
        assert!((lhs.re - rhs).abs() < 1e-12 && lhs.im.abs() < 1e-12);
    }

    #[test]
    fn scaled_form_matches_printed_expression() {
        for &(t1, t2, t3) in &[(0.3, 1.1, 0.7), (0.9, 0.2, 0.05), (0.01, 2.5, 0.02)] {
            let f = WkbFactors::new(t1, t2, t3);
            let c = f.coefficients();
            let d = t3 * (c.c4 - c.c3) / 4.0 + (c.c3 + c.c4) / t3;
            let printed = 1.0 / d.norm_sqr();
            assert!((wkb_transmission(&f) / printed - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn absent_well_and_transparent_second_barrier() {
        // T3 = 1, T2 = 0 gives (2/T1 + T1/8)⁻².
        for t1 in [0.1, 0.5, 1.0] {
            let f = WkbFactors::new(t1, 0.0, 1.0);
            let expect = (2.0 / t1 + t1 / 8.0).powi(-2);
            assert!((wkb_transmission(&f) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn period_pi_in_t2() {
        for t2 in [0.0, 0.4, 1.3, 2.9] {
            let a = wkb_transmission(&WkbFactors::new(0.2, t2, 0.4));
            let b = wkb_transmission(&WkbFactors::new(0.2, t2 + PI, 0.4));
            assert!((a / b - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn symmetric_resonance_reaches_one() {
        let f = WkbFactors::new(0.1, PI / 2.0, 0.1);
        assert!((wkb_transmission(&f) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn opaque_factors_stay_finite() {
        let f = WkbFactors {
            ln_t1: -400.0,
            t2: 0.3,
            ln_t3: -400.0,
        };
        let ln_t = f.ln_transmission();
        assert!(ln_t.is_finite() && ln_t < -1500.0);
    }

    #[test]
    fn single_barrier_rectangle() {
        let spec = DoubleBarrierSpec::rectangular(4.0, 0.0, 0.6, 0.0, 0.0);
        let p = Potential::new(&spec, DEFAULT_EPS_TAIL).unwrap();
        let s = wkb_single_transmission(&p, 2.0, 512).unwrap();
        let kappa = (2.0 / kinetic_prefactor(1.0)).sqrt();
        assert!((s.transmission_opaque - (-2.0 * kappa * 0.6).exp()).abs() < 1e-12);
        assert!(s.transmission_opaque > 1.5e-4 && s.transmission_opaque < 1.9e-4);
        let e_small = wkb_single_transmission(&p, 1e-6, 512).unwrap();
        assert!(e_small.transmission < s.transmission);
    }
}
