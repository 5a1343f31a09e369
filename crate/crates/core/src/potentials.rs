//! Barrier shape families and the composed double-barrier potential.
//!
//! Placement conventions:
//!
//! * rectangular: the first barrier occupies `[offset, offset + w1)`, the
//!   second `[offset + w1 + a, offset + w1 + a + w2)`, so `a` is the width of
//!   the well between the inner edges;
//! * Gaussian and Lorentzian: the barriers are centred at `offset` and
//!   `offset + a`.
//!
//! Both barriers must come from the same family.

use crate::error::{Result, TunnelError};

/// Default cut-off below which the potential counts as zero, in eV.
pub const DEFAULT_EPS_TAIL: f64 = 1e-6;

const V_MAX_SCAN_POINTS: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BarrierShape {
    /// Constant height over `width` nm.
    Rectangular { width: f64 },
    /// `V exp(-x²/2σ²)`.
    Gaussian { sigma: f64 },
    /// `V / (1 + x²/γ²)`.
    Lorentzian { gamma: f64 },
}

impl BarrierShape {
    /// Width parameter of the shape (w, σ or γ), in nm.
    pub fn width(&self) -> f64 {
        match *self {
            BarrierShape::Rectangular { width } => width,
            BarrierShape::Gaussian { sigma } => sigma,
            BarrierShape::Lorentzian { gamma } => gamma,
        }
    }

    /// Same family, different width parameter.
    pub fn with_width(&self, w: f64) -> Self {
        match self {
            BarrierShape::Rectangular { .. } => BarrierShape::Rectangular { width: w },
            BarrierShape::Gaussian { .. } => BarrierShape::Gaussian { sigma: w },
            BarrierShape::Lorentzian { .. } => BarrierShape::Lorentzian { gamma: w },
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            BarrierShape::Rectangular { .. } => "rectangular",
            BarrierShape::Gaussian { .. } => "gaussian",
            BarrierShape::Lorentzian { .. } => "lorentzian",
        }
    }

    pub fn is_rectangular(&self) -> bool {
        matches!(self, BarrierShape::Rectangular { .. })
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, BarrierShape::Gaussian { .. })
    }

    fn validate(&self, which: &str) -> Result<()> {
        let w = self.width();
        let ok = match self {
            // Zero-width rectangles are the "no barrier" limit of the closed form.
            BarrierShape::Rectangular { .. } => w >= 0.0,
            _ => w > 0.0,
        };
        if !ok || !w.is_finite() {
            return Err(TunnelError::invalid(format!(
                "{which} {} width must be positive, got {w}",
                self.family()
            )));
        }
        Ok(())
    }
}

/// Parametric description of a two-barrier potential.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrierSpec {
    pub v1: f64,
    pub v2: f64,
    pub shape1: BarrierShape,
    pub shape2: BarrierShape,
    /// Well width (rectangular) or centre-to-centre distance (smooth shapes), nm.
    pub separation: f64,
    /// Effective mass in units of the free electron mass.
    pub mass_factor: f64,
    /// Position of the first barrier's left edge or centre, nm.
    pub offset: f64,
}

impl DoubleBarrierSpec {
    pub fn new(v1: f64, v2: f64, shape1: BarrierShape, shape2: BarrierShape, separation: f64) -> Self {
        Self {
            v1,
            v2,
            shape1,
            shape2,
            separation,
            mass_factor: 1.0,
            offset: 0.0,
        }
    }

    pub fn gaussian(v1: f64, v2: f64, sigma1: f64, sigma2: f64, separation: f64) -> Self {
        Self::new(
            v1,
            v2,
            BarrierShape::Gaussian { sigma: sigma1 },
            BarrierShape::Gaussian { sigma: sigma2 },
            separation,
        )
    }

    pub fn rectangular(v1: f64, v2: f64, w1: f64, w2: f64, separation: f64) -> Self {
        Self::new(
            v1,
            v2,
            BarrierShape::Rectangular { width: w1 },
            BarrierShape::Rectangular { width: w2 },
            separation,
        )
    }

    pub fn lorentzian(v1: f64, v2: f64, gamma1: f64, gamma2: f64, separation: f64) -> Self {
        Self::new(
            v1,
            v2,
            BarrierShape::Lorentzian { gamma: gamma1 },
            BarrierShape::Lorentzian { gamma: gamma2 },
            separation,
        )
    }

    pub fn with_mass_factor(mut self, mass_factor: f64) -> Self {
        self.mass_factor = mass_factor;
        self
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    /// Mirror image about the midpoint of the structure: barrier order swapped.
    pub fn mirrored(&self) -> Self {
        Self {
            v1: self.v2,
            v2: self.v1,
            shape1: self.shape2,
            shape2: self.shape1,
            ..*self
        }
    }

    pub fn family(&self) -> &'static str {
        self.shape1.family()
    }

    pub fn is_rectangular(&self) -> bool {
        self.shape1.is_rectangular()
    }

    pub fn is_gaussian(&self) -> bool {
        self.shape1.is_gaussian()
    }

    /// Smaller of the non-zero barrier heights (0 for the free particle).
    pub fn min_height(&self) -> f64 {
        match (self.v1 > 0.0, self.v2 > 0.0) {
            (true, true) => self.v1.min(self.v2),
            (true, false) => self.v1,
            (false, true) => self.v2,
            (false, false) => 0.0,
        }
    }

    /// Number of barriers with non-zero height.
    pub fn barrier_count(&self) -> usize {
        (self.v1 > 0.0) as usize + (self.v2 > 0.0) as usize
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v1", self.v1), ("v2", self.v2)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(TunnelError::invalid(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.shape1.validate("first barrier")?;
        self.shape2.validate("second barrier")?;
        if self.shape1.family() != self.shape2.family() {
            return Err(TunnelError::invalid(format!(
                "barrier families differ ({} vs {})",
                self.shape1.family(),
                self.shape2.family()
            )));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(TunnelError::invalid(format!(
                "separation must be >= 0, got {}",
                self.separation
            )));
        }
        if !(self.mass_factor > 0.0) || !self.mass_factor.is_finite() {
            return Err(TunnelError::invalid(format!(
                "mass factor must be > 0, got {}",
                self.mass_factor
            )));
        }
        if !self.offset.is_finite() {
            return Err(TunnelError::invalid("offset must be finite"));
        }
        Ok(())
    }
}

/// Centre-to-centre Gaussian separation equivalent to a rectangular pair
/// with widths `w1`, `w2` and well width `a_rect` (σ = w, 3σ flanks).
pub fn equivalent_gaussian_separation(w1: f64, w2: f64, a_rect: f64) -> f64 {
    3.0 * w1 + 3.0 * w2 + a_rect
}

/// Which side a one-sided limit is taken from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// x → x⁻
    Left,
    /// x → x⁺
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct PlacedBarrier {
    height: f64,
    shape: BarrierShape,
    /// Left edge (rectangular) or centre (smooth).
    anchor: f64,
}

impl PlacedBarrier {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        self.eval_side(x, Side::Right)
    }

    #[inline]
    fn eval_side(&self, x: f64, side: Side) -> f64 {
        if self.height == 0.0 {
            return 0.0;
        }
        match self.shape {
            BarrierShape::Rectangular { width } => {
                let (l, r) = (self.anchor, self.anchor + width);
                let inside = match side {
                    Side::Right => l <= x && x < r,
                    Side::Left => l < x && x <= r,
                };
                if inside {
                    self.height
                } else {
                    0.0
                }
            }
            BarrierShape::Gaussian { sigma } => {
                let u = (x - self.anchor) / sigma;
                self.height * (-0.5 * u * u).exp()
            }
            BarrierShape::Lorentzian { gamma } => {
                let u = (x - self.anchor) / gamma;
                self.height / (1.0 + u * u)
            }
        }
    }

    /// Interval outside of which this barrier alone stays below `level`.
    fn support(&self, level: f64) -> Option<(f64, f64)> {
        if self.height == 0.0 {
            return None;
        }
        match self.shape {
            BarrierShape::Rectangular { width } => {
                if width == 0.0 {
                    None
                } else {
                    Some((self.anchor, self.anchor + width))
                }
            }
            BarrierShape::Gaussian { sigma } => {
                let r = if self.height > level {
                    sigma * (2.0 * (self.height / level).ln()).sqrt()
                } else {
                    0.0
                };
                Some((self.anchor - r, self.anchor + r))
            }
            BarrierShape::Lorentzian { gamma } => {
                let r = if self.height > level {
                    gamma * (self.height / level - 1.0).sqrt()
                } else {
                    0.0
                };
                Some((self.anchor - r, self.anchor + r))
            }
        }
    }
}

/// An evaluable barrier potential with its tail support.
///
/// Immutable after construction; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    spec: DoubleBarrierSpec,
    barriers: [PlacedBarrier; 2],
    x_min: f64,
    x_max: f64,
    v_max: f64,
    eps_tail: f64,
}

/// Builds the shifted sum of the two barriers described by `spec`.
pub fn make_potential(spec: &DoubleBarrierSpec, eps_tail: f64) -> Result<Potential> {
    Potential::new(spec, eps_tail)
}

impl Potential {
    pub fn new(spec: &DoubleBarrierSpec, eps_tail: f64) -> Result<Self> {
        spec.validate()?;
        if !(eps_tail > 0.0) || !eps_tail.is_finite() {
            return Err(TunnelError::invalid(format!("eps_tail must be > 0, got {eps_tail}")));
        }
        let second_anchor = match spec.shape1 {
            BarrierShape::Rectangular { width } => spec.offset + width + spec.separation,
            _ => spec.offset + spec.separation,
        };
        let barriers = [
            PlacedBarrier {
                height: spec.v1,
                shape: spec.shape1,
                anchor: spec.offset,
            },
            PlacedBarrier {
                height: spec.v2,
                shape: spec.shape2,
                anchor: second_anchor,
            },
        ];

        // Each barrier is cut at eps/2 so that the sum of both tails stays
        // below eps outside [x_min, x_max].
        let supports: Vec<(f64, f64)> = barriers
            .iter()
            .filter_map(|b| b.support(0.5 * eps_tail))
            .collect();
        let (x_min, x_max) = if supports.is_empty() {
            (spec.offset, spec.offset)
        } else {
            (
                supports.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
                supports.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max),
            )
        };

        let mut pot = Potential {
            spec: *spec,
            barriers,
            x_min,
            x_max,
            v_max: 0.0,
            eps_tail,
        };
        pot.v_max = pot.scan_max();
        Ok(pot)
    }

    /// Free particle (V ≡ 0) of the given mass.
    pub fn free(mass_factor: f64) -> Self {
        let spec = DoubleBarrierSpec::rectangular(0.0, 0.0, 0.0, 0.0, 0.0).with_mass_factor(mass_factor);
        Potential::new(&spec, DEFAULT_EPS_TAIL).expect("free particle spec is valid")
    }

    fn scan_max(&self) -> f64 {
        let mut best = self
            .barriers
            .iter()
            .map(|b| self.eval(b.anchor).max(self.eval_side(b.anchor, Side::Right)))
            .fold(0.0, f64::max);
        if self.spec.is_rectangular() {
            return best.max(self.spec.v1).max(self.spec.v2);
        }
        let span = self.x_max - self.x_min;
        if span > 0.0 {
            let dx = span / V_MAX_SCAN_POINTS as f64;
            let mut i_best = 0usize;
            let mut scan_best = 0.0;
            for i in 0..=V_MAX_SCAN_POINTS {
                let v = self.eval(self.x_min + i as f64 * dx);
                if v > scan_best {
                    scan_best = v;
                    i_best = i;
                }
            }
            // Golden-section polish around the best grid point.
            let mut lo = self.x_min + (i_best as f64 - 1.0) * dx;
            let mut hi = self.x_min + (i_best as f64 + 1.0) * dx;
            let g = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..80 {
                let m1 = hi - g * (hi - lo);
                let m2 = lo + g * (hi - lo);
                if self.eval(m1) < self.eval(m2) {
                    lo = m1;
                } else {
                    hi = m2;
                }
            }
            best = best.max(scan_best).max(self.eval(0.5 * (lo + hi)));
        }
        best
    }

    /// V(x) in eV. Rectangular barriers are half-open, `[left, right)`.
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.barriers[0].eval(x) + self.barriers[1].eval(x)
    }

    /// One-sided limit of V at `x`. Differs from [`eval`](Self::eval) only
    /// on rectangular edges.
    #[inline]
    pub fn eval_side(&self, x: f64, side: Side) -> f64 {
        self.barriers[0].eval_side(x, side) + self.barriers[1].eval_side(x, side)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn mass_factor(&self) -> f64 {
        self.spec.mass_factor
    }

    pub fn eps_tail(&self) -> f64 {
        self.eps_tail
    }

    pub fn spec(&self) -> &DoubleBarrierSpec {
        &self.spec
    }

    /// Centre (smooth) or left edge (rectangular) of each barrier.
    pub fn anchors(&self) -> [f64; 2] {
        [self.barriers[0].anchor, self.barriers[1].anchor]
    }

    /// True when V vanishes identically.
    pub fn is_free(&self) -> bool {
        self.barriers.iter().all(|b| b.support(self.eps_tail).is_none()) || self.x_max <= self.x_min
    }

    /// Positions where V is discontinuous, sorted and de-duplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts: Vec<f64> = self
            .barriers
            .iter()
            .filter(|b| b.height > 0.0)
            .filter_map(|b| match b.shape {
                BarrierShape::Rectangular { width } if width > 0.0 => Some([b.anchor, b.anchor + width]),
                _ => None,
            })
            .flatten()
            .collect();
        pts.sort_by(|a, b| a.total_cmp(b));
        pts.dedup();
        pts
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gauss(a: f64) -> Potential {
        Potential::new(&DoubleBarrierSpec::gaussian(4.0, 4.0, 0.2, 0.2, a), DEFAULT_EPS_TAIL).unwrap()
    }

    #[test]
    fn free_particle_is_zero_with_empty_support() {
        let p = Potential::new(&DoubleBarrierSpec::gaussian(0.0, 0.0, 0.2, 0.2, 1.0), 1e-6).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(0.5), 0.0);
        assert_eq!((p.x_min(), p.x_max()), (0.0, 0.0));
        assert!(p.is_free());
        assert_eq!(p.v_max(), 0.0);
    }

    #[test]
    fn gaussian_centres_include_partner_tail() {
        let p = gauss(1.0);
        let expected = 4.0 + 4.0 * (-12.5f64).exp();
        assert_relative_eq!(p.eval(0.0), expected, max_relative = 1e-14);
        assert_relative_eq!(p.eval(1.0), expected, max_relative = 1e-14);
        assert_relative_eq!(p.eval(0.0), 4.000_014_9, epsilon = 1e-7);
    }

    #[test]
    fn single_gaussian_values() {
        let spec = DoubleBarrierSpec::gaussian(4.0, 0.0, 0.2, 0.2, 1.0);
        let p = Potential::new(&spec, 1e-6).unwrap();
        assert_eq!(p.eval(0.0), 4.0);
        assert_relative_eq!(p.eval(0.2), 4.0 * (-0.5f64).exp(), max_relative = 1e-15);
        assert_relative_eq!(p.eval(0.2), 2.4261, epsilon = 1e-4);
    }

    #[test]
    fn rectangular_inside_outside_and_edges() {
        let spec = DoubleBarrierSpec::rectangular(4.0, 0.0, 0.6, 0.6, 0.75);
        let p = Potential::new(&spec, 1e-6).unwrap();
        assert_eq!(p.eval(0.3), 4.0);
        assert_eq!(p.eval(0.7), 0.0);
        assert_eq!(p.eval(0.0), 4.0);
        assert_eq!(p.eval(0.6), 0.0);
        assert_eq!(p.eval_side(0.6, Side::Left), 4.0);
        assert_eq!(p.eval_side(0.0, Side::Left), 0.0);
    }

    #[test]
    fn rectangular_layout_uses_well_width() {
        let p = Potential::new(&DoubleBarrierSpec::rectangular(4.0, 3.0, 0.6, 0.4, 0.75), 1e-6).unwrap();
        assert_eq!(p.breakpoints(), vec![0.0, 0.6, 1.35, 1.75]);
        assert_eq!(p.x_min(), 0.0);
        assert_relative_eq!(p.x_max(), 1.75, max_relative = 1e-15);
        assert_eq!(p.eval(1.0), 0.0);
        assert_eq!(p.eval(1.5), 3.0);
        assert_eq!(p.v_max(), 4.0);
    }

    #[test]
    fn gaussian_support_brackets_cutoff() {
        let eps = 1e-6;
        let p = gauss(1.0);
        let r = 0.2 * (2.0 * (4.0f64 / eps).ln()).sqrt();
        assert!(p.x_min() <= -r);
        assert!(p.x_max() >= 1.0 + r);
        assert!(p.eval(p.x_min()) < eps);
        assert!(p.eval(p.x_max()) < eps);
        // ~5.5 sigma at V = 4 eV
        assert!(p.x_max() - 1.0 > 5.4 * 0.2);
    }

    #[test]
    fn lorentzian_support() {
        let spec = DoubleBarrierSpec::lorentzian(4.0, 4.0, 0.2, 0.2, 2.0);
        let p = Potential::new(&spec, 1e-3).unwrap();
        assert!(p.eval(p.x_min()) < 1e-3);
        assert!(p.eval(p.x_max()) < 1e-3);
        assert_relative_eq!(p.eval(0.2), 2.0 + 4.0 / (1.0 + 81.0), max_relative = 1e-14);
    }

    #[test]
    fn merged_gaussians_form_single_hump() {
        let p = gauss(0.4);
        // Count local maxima on a fine grid.
        let n = 4000;
        let xs: Vec<f64> = (0..=n)
            .map(|i| p.x_min() + (p.x_max() - p.x_min()) * i as f64 / n as f64)
            .collect();
        let vs: Vec<f64> = xs.iter().map(|&x| p.eval(x)).collect();
        let maxima = (1..n).filter(|&i| vs[i] > vs[i - 1] && vs[i] >= vs[i + 1]).count();
        assert_eq!(maxima, 1);
        assert!(p.v_max() > 4.8 && p.v_max() < 4.9);
        // Well separated barriers have two.
        let p = gauss(1.0);
        let vs: Vec<f64> = (0..=n)
            .map(|i| p.eval(p.x_min() + (p.x_max() - p.x_min()) * i as f64 / n as f64))
            .collect();
        let maxima = (1..n).filter(|&i| vs[i] > vs[i - 1] && vs[i] >= vs[i + 1]).count();
        assert_eq!(maxima, 2);
    }

    #[test]
    fn rejects_bad_parameters() {
        let bad = DoubleBarrierSpec::gaussian(4.0, 4.0, 0.0, 0.2, 1.0);
        assert!(Potential::new(&bad, 1e-6).is_err());
        let bad = DoubleBarrierSpec::gaussian(-1.0, 4.0, 0.2, 0.2, 1.0);
        assert!(Potential::new(&bad, 1e-6).is_err());
        let ok = DoubleBarrierSpec::gaussian(4.0, 4.0, 0.2, 0.2, 1.0);
        assert!(Potential::new(&ok, 0.0).is_err());
        let mixed = DoubleBarrierSpec::new(
            1.0,
            1.0,
            BarrierShape::Gaussian { sigma: 0.2 },
            BarrierShape::Rectangular { width: 0.2 },
            1.0,
        );
        assert!(Potential::new(&mixed, 1e-6).is_err());
        assert!(Potential::new(&ok.with_mass_factor(0.0), 1e-6).is_err());
    }

    #[test]
    fn equivalent_separation_rule() {
        assert_relative_eq!(equivalent_gaussian_separation(0.6, 0.6, 0.75), 4.35, epsilon = 1e-12);
        assert_eq!(equivalent_gaussian_separation(0.0, 0.0, 2.5), 2.5);
        assert_relative_eq!(equivalent_gaussian_separation(0.2, 0.1, 4.0), 4.9, epsilon = 1e-12);
    }
}
