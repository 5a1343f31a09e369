//! Exact transmission for rectangular barriers.
//!
//! Two independent routes are provided: the closed-form double-barrier
//! amplitude and a general transfer matrix over piecewise-constant layers.
//! The closed form is written with complex wavenumbers (branch with
//! non-negative imaginary part), so the same expression covers energies
//! below and above either barrier.
//!
//! The amplitude uses the global plane-wave convention: incident `e^{ikx}`
//! with unit amplitude on the left, transmitted `T e^{ikx}` on the right.
//!
//! The cross-term phase of the double-barrier amplitude is
//! `e^{ik1(g+2a)} = e^{ik1(2b-g)}`; the closed form agrees with
//! [`transfer_matrix`] to rounding.

use num_complex::Complex64;

use crate::constants::kinetic_prefactor;
use crate::error::{Result, TunnelError};
use crate::potentials::{BarrierShape, DoubleBarrierSpec};

/// Energies closer than this to a barrier top are rejected by the closed forms.
pub const EPS_DEGENERATE: f64 = 1e-9;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Rectangular double barrier: first barrier on `[0, w1)`, well of width
/// `a`, second barrier on `[w1 + a, b)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectDoubleParams {
    pub v1: f64,
    pub v2: f64,
    pub w1: f64,
    pub w2: f64,
    pub a: f64,
    pub mass_factor: f64,
}

impl RectDoubleParams {
    pub fn new(v1: f64, v2: f64, w1: f64, w2: f64, a: f64) -> Self {
        Self {
            v1,
            v2,
            w1,
            w2,
            a,
            mass_factor: 1.0,
        }
    }

    pub fn with_mass_factor(mut self, m: f64) -> Self {
        self.mass_factor = m;
        self
    }

    pub fn from_spec(spec: &DoubleBarrierSpec) -> Result<Self> {
        match (spec.shape1, spec.shape2) {
            (BarrierShape::Rectangular { width: w1 }, BarrierShape::Rectangular { width: w2 }) => {
                let p = Self {
                    v1: spec.v1,
                    v2: spec.v2,
                    w1,
                    w2,
                    a: spec.separation,
                    mass_factor: spec.mass_factor,
                };
                p.validate()?;
                Ok(p)
            }
            _ => Err(TunnelError::NotApplicable {
                engine: "analytic".into(),
                reason: format!("closed form needs rectangular barriers, got {}", spec.family()),
            }),
        }
    }

    /// Total barrier thickness w1 + w2.
    pub fn g(&self) -> f64 {
        self.w1 + self.w2
    }

    /// Total structure length w1 + a + w2.
    pub fn b(&self) -> f64 {
        self.w1 + self.a + self.w2
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("v1", self.v1),
            ("v2", self.v2),
            ("w1", self.w1),
            ("w2", self.w2),
            ("a", self.a),
        ];
        for (name, v) in fields {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TunnelError::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.mass_factor > 0.0) {
            return Err(TunnelError::invalid("mass factor must be > 0"));
        }
        Ok(())
    }

    /// Piecewise-constant layers between the two semi-infinite leads.
    pub fn layers(&self) -> [Layer; 3] {
        [
            Layer::new(self.w1, self.v1),
            Layer::new(self.a, 0.0),
            Layer::new(self.w2, self.v2),
        ]
    }
}

/// Complex wavenumbers in the five regions (outer regions share `k1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveNumbers {
    pub k1: Complex64,
    pub k2: Complex64,
    pub k3: Complex64,
}

impl WaveNumbers {
    pub fn new(p: &RectDoubleParams, energy: f64) -> Self {
        let c = kinetic_prefactor(p.mass_factor);
        Self {
            k1: Complex64::new((energy / c).sqrt(), 0.0),
            k2: region_wavenumber(p.v1, energy, c),
            k3: region_wavenumber(p.v2, energy, c),
        }
    }
}

/// `√(2m(V − E))/ħ`, the decay constant, real below the barrier top and
/// `+i·|k|` above it.
#[inline]
fn region_wavenumber(v: f64, energy: f64, c: f64) -> Complex64 {
    Complex64::new((v - energy) / c, 0.0).sqrt()
}

/// `k_i/k_j − k_j/k_i` and `k_i/k_j + k_j/k_i`.
#[inline]
fn k_minus(ki: Complex64, kj: Complex64) -> Complex64 {
    ki / kj - kj / ki
}

#[inline]
fn k_plus(ki: Complex64, kj: Complex64) -> Complex64 {
    ki / kj + kj / ki
}

/// cosh and sinh of `z`, both multiplied by `e^{-|Re z|}` to stay finite.
#[inline]
fn scaled_cosh_sinh(z: Complex64) -> (Complex64, Complex64) {
    let s = z.re.abs();
    let ep = (z - s).exp();
    let em = (-z - s).exp();
    ((ep + em) * 0.5, (ep - em) * 0.5)
}

/// Barrier factor `2cosh(κw) − i k_{1−κ} sinh(κw)` and `sinh(κw)`, both
/// scaled by `e^{-|Re κw|}`; returns the scale exponent too.
fn barrier_factor(k1: Complex64, kappa: Complex64, w: f64, v: f64) -> (Complex64, Complex64, f64) {
    if w == 0.0 || v == 0.0 {
        // Absent barrier: D = 2 e^{-ik1 w} is what the expression reduces to
        // (κ = i k1), evaluated directly to avoid 0·∞ when κ → 0.
        let d = 2.0 * (-I * k1 * w).exp();
        return (d, Complex64::new(0.0, 0.0), 0.0);
    }
    let z = kappa * w;
    let (ch, sh) = scaled_cosh_sinh(z);
    (2.0 * ch - I * k_minus(k1, kappa) * sh, sh, z.re.abs())
}

fn check_degenerate(energy: f64, heights: &[(f64, f64)]) -> Result<()> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
    }
    for &(v, w) in heights {
        if v > 0.0 && w > 0.0 && (energy - v).abs() <= EPS_DEGENERATE {
            return Err(TunnelError::DegenerateEnergy { energy, height: v });
        }
    }
    Ok(())
}

/// Closed-form transmission amplitude `T = C/A` of the rectangular double
/// barrier.
pub fn rect_double_amplitude(p: &RectDoubleParams, energy: f64) -> Result<Complex64> {
    p.validate()?;
    check_degenerate(energy, &[(p.v1, p.w1), (p.v2, p.w2)])?;
    let k = WaveNumbers::new(p, energy);
    let (d1, sh1, s1) = barrier_factor(k.k1, k.k2, p.w1, p.v1);
    let (d2, sh2, s2) = barrier_factor(k.k1, k.k3, p.w2, p.v2);

    let direct = (I * k.k1 * p.g()).exp() * d2 * d1;
    let cross = if p.v1 > 0.0 && p.v2 > 0.0 {
        (I * k.k1 * (p.g() + 2.0 * p.a)).exp() * k_plus(k.k1, k.k3) * k_plus(k.k1, k.k2) * sh1 * sh2
    } else {
        Complex64::new(0.0, 0.0)
    };
    // Undo the e^{-(s1+s2)} scaling of the hyperbolic functions.
    Ok(4.0 * (-(s1 + s2)).exp() / (direct + cross))
}

/// 𝒯 = |T|² of the rectangular double barrier.
pub fn rect_double_transmission(p: &RectDoubleParams, energy: f64) -> Result<f64> {
    Ok(rect_double_amplitude(p, energy)?.norm_sqr())
}

/// Transmitted phase measured across the structure, `arg[T e^{ik1 b}]`,
/// principal value.
pub fn rect_double_phase(p: &RectDoubleParams, energy: f64) -> Result<f64> {
    let t = rect_double_amplitude(p, energy)?;
    let k1 = crate::constants::wavenumber(energy, p.mass_factor);
    Ok((t * (I * k1 * p.b()).exp()).arg())
}

/// A constant-potential slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub width: f64,
    pub height: f64,
}

impl Layer {
    pub fn new(width: f64, height: f64) -> Self {
        Self { width, height }
    }
}

/// Transmission and reflection amplitudes of a layer stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerAmplitudes {
    /// C/A, global plane-wave convention.
    pub t: Complex64,
    /// B/A.
    pub r: Complex64,
}

/// Transfer-matrix solution for piecewise-constant layers starting at x = 0,
/// with V = 0 leads on both sides.
///
/// Propagates (ψ, ψ') backward from a pure outgoing wave on the right using
/// the exact constant-potential propagator of each layer, then decomposes
/// into incident and reflected waves at x = 0.
pub fn transfer_matrix(layers: &[Layer], energy: f64, mass_factor: f64) -> Result<LayerAmplitudes> {
    let heights: Vec<(f64, f64)> = layers.iter().map(|l| (l.height, l.width)).collect();
    check_degenerate(energy, &heights)?;
    let c = kinetic_prefactor(mass_factor);
    let k = (energy / c).sqrt();
    let total: f64 = layers.iter().map(|l| l.width).sum();

    let mut psi = Complex64::from_polar(1.0, k * total);
    let mut dpsi = I * k * psi;
    for layer in layers.iter().rev() {
        if layer.width == 0.0 {
            continue;
        }
        // q² = 2m(E − V)/ħ²; the propagator below is even in q.
        let q = Complex64::new((energy - layer.height) / c, 0.0).sqrt();
        let ql = q * layer.width;
        let (cs, sn) = (ql.cos(), ql.sin());
        let new_psi = psi * cs - dpsi * sn / q;
        let new_dpsi = psi * q * sn + dpsi * cs;
        psi = new_psi;
        dpsi = new_dpsi;
    }
    let a = 0.5 * (psi + dpsi / (I * k));
    let b = 0.5 * (psi - dpsi / (I * k));
    Ok(LayerAmplitudes { t: 1.0 / a, r: b / a })
}

/// Single rectangular barrier of height `v0` on `[0, length)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingleBarrier {
    /// 𝒯
    pub transmission: f64,
    /// Transmitted phase α = arg(T e^{ikL}), rad.
    pub alpha: f64,
    /// R0 = 1 − 𝒯
    pub reflection: f64,
}

pub fn rect_single(v0: f64, length: f64, energy: f64, mass_factor: f64) -> Result<SingleBarrier> {
    if !(v0 >= 0.0) || !(length >= 0.0) {
        return Err(TunnelError::invalid("single barrier needs v0 >= 0 and length >= 0"));
    }
    check_degenerate(energy, &[(v0, length)])?;
    if length == 0.0 || v0 == 0.0 {
        return Ok(SingleBarrier {
            transmission: 1.0,
            alpha: 0.0,
            reflection: 0.0,
        });
    }
    let c = kinetic_prefactor(mass_factor);
    let k1 = Complex64::new(energy / c, 0.0).sqrt();
    let kappa = region_wavenumber(v0, energy, c);
    let (d, _, s) = barrier_factor(k1, kappa, length, v0);
    // T e^{ikL} = 2/D with D unscaled = d·e^{s}.
    let t_shifted = 2.0 * (-s).exp() / d;
    let transmission = t_shifted.norm_sqr();
    Ok(SingleBarrier {
        transmission,
        alpha: t_shifted.arg(),
        reflection: 1.0 - transmission,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn fig4a() -> RectDoubleParams {
        RectDoubleParams::new(4.0, 4.0, 0.6, 0.6, 0.75)
    }

    #[test]
    fn no_barrier_is_transparent() {
        let p = RectDoubleParams::new(4.0, 4.0, 0.0, 0.0, 1.0);
        for e in [0.1, 2.0, 5.0] {
            let t = rect_double_amplitude(&p, e).unwrap();
            assert_relative_eq!(t.re, 1.0, epsilon = 1e-14);
            assert_relative_eq!(t.im, 0.0, epsilon = 1e-14);
        }
        let p = RectDoubleParams::new(0.0, 0.0, 0.5, 0.5, 1.0);
        assert_relative_eq!(rect_double_transmission(&p, 1.3).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn closed_form_matches_transfer_matrix() {
        let p = RectDoubleParams::new(4.0, 3.0, 0.6, 0.4, 0.75);
        for e in [0.05, 0.5, 2.0, 3.5, 4.5, 7.9] {
            let t = rect_double_amplitude(&p, e).unwrap();
            let tm = transfer_matrix(&p.layers(), e, 1.0).unwrap();
            assert!((t - tm.t).norm() / tm.t.norm() < 1e-10, "E = {e}");
        }
    }

    #[test]
    fn off_resonance_is_opaque() {
        let t = rect_double_transmission(&fig4a(), 2.0).unwrap();
        let tm = transfer_matrix(&fig4a().layers(), 2.0, 1.0).unwrap();
        assert!(t < 1e-3);
        assert_relative_eq!(t, tm.t.norm_sqr(), max_relative = 1e-10);
    }

    #[test]
    fn sweep_reaches_unity_at_resonances() {
        let p = fig4a();
        let n = 20000;
        let ts: Vec<f64> = (1..n)
            .map(|i| 4.0 * i as f64 / n as f64)
            .map(|e| rect_double_transmission(&p, e).unwrap_or(0.0))
            .collect();
        let max = ts.iter().cloned().fold(0.0, f64::max);
        let min = ts.iter().cloned().fold(1.0, f64::min);
        assert!(max > 0.99, "max {max}");
        assert!(min < 1e-4);
    }

    #[test]
    fn degenerate_energy_is_rejected() {
        assert!(matches!(
            rect_double_amplitude(&fig4a(), 4.0),
            Err(TunnelError::DegenerateEnergy { .. })
        ));
        assert!(rect_single(4.0, 0.6, 4.0, 1.0).is_err());
        assert!(rect_double_amplitude(&fig4a(), 0.0).is_err());
    }

    #[test]
    fn continuity_across_barrier_top() {
        let p = fig4a();
        let below = rect_double_transmission(&p, 4.0 - 1e-4).unwrap();
        let above = rect_double_transmission(&p, 4.0 + 1e-4).unwrap();
        assert!((below - above).abs() / above < 1e-2);
    }

    #[test]
    fn single_barrier_value() {
        let s = rect_single(4.0, 0.6, 2.0, 1.0).unwrap();
        // Closed form 1/(1 + V0² sinh²(κL)/(4E(V0−E))).
        let kappa = (2.0f64 / kinetic_prefactor(1.0)).sqrt();
        assert_relative_eq!(kappa, 7.2453, epsilon = 1e-3);
        let expected = 1.0 / (1.0 + 16.0 * (kappa * 0.6).sinh().powi(2) / (4.0 * 2.0 * 2.0));
        assert_relative_eq!(s.transmission, expected, max_relative = 1e-12);
        assert!(s.transmission > 6.6e-4 && s.transmission < 6.8e-4);
        // Phase agrees with −arctan((κ²−k²) tanh(κL) / 2κk); here κ = k.
        assert_relative_eq!(s.alpha, 0.0, epsilon = 1e-12);
        let s = rect_single(4.0, 0.6, 1.0, 1.0).unwrap();
        let c = kinetic_prefactor(1.0);
        let (k, kap) = ((1.0 / c).sqrt(), (3.0f64 / c).sqrt());
        let alpha = -((kap * kap - k * k) * (kap * 0.6).tanh() / (2.0 * kap * k)).atan();
        assert_relative_eq!(s.alpha, alpha, max_relative = 1e-12);
    }

    #[test]
    fn single_barrier_limits() {
        let s = rect_single(4.0, 0.0, 1.0, 1.0).unwrap();
        assert_eq!((s.transmission, s.alpha, s.reflection), (1.0, 0.0, 0.0));
        let s = rect_single(4.0, 0.6, 1e-8, 1.0).unwrap();
        assert!(s.transmission < 1e-10);
    }

    #[test]
    fn single_barrier_unitarity_against_reflection_amplitude() {
        for e in [0.3, 1.7, 3.9, 5.0, 9.0] {
            let s = rect_single(4.0, 0.6, e, 1.0).unwrap();
            let tm = transfer_matrix(&[Layer::new(0.6, 4.0)], e, 1.0).unwrap();
            assert_relative_eq!(s.reflection, tm.r.norm_sqr(), epsilon = 1e-12);
            assert_relative_eq!(s.transmission + tm.r.norm_sqr(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn opaque_barriers_do_not_overflow() {
        let p = RectDoubleParams::new(4.0, 4.0, 200.0, 200.0, 1.0);
        let t = rect_double_transmission(&p, 2.0).unwrap();
        assert!(t.is_finite() && t >= 0.0);
    }
}
