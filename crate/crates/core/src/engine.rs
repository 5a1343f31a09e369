//! Engine selection and per-point transmission.

use std::fmt;

use crate::error::{Result, TunnelError};
use crate::numeric::{NumericSolver, SolverOptions};
use crate::potentials::{DoubleBarrierSpec, Potential};
use crate::rect::{rect_double_amplitude, RectDoubleParams};
use crate::wkb::{single_from_ln_t, turning_points, wkb_factors, wkb_single_transmission, WkbOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Closed form, rectangular barriers only.
    Analytic,
    /// RK4 integration.
    Numeric,
    /// Semiclassical connection formula.
    Wkb,
}

impl Engine {
    pub const ALL: [Engine; 3] = [Engine::Analytic, Engine::Numeric, Engine::Wkb];

    pub fn name(&self) -> &'static str {
        match self {
            Engine::Analytic => "analytic",
            Engine::Numeric => "numeric",
            Engine::Wkb => "wkb",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Engine {
    type Err = TunnelError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Engine::Analytic),
            "numeric" => Ok(Engine::Numeric),
            "wkb" => Ok(Engine::Wkb),
            other => Err(TunnelError::invalid(format!("unknown engine '{other}'"))),
        }
    }
}

/// Status attached to a point that is not a clean result.
#[derive(Debug, Clone, PartialEq)]
pub enum PointFlag {
    /// Numeric result whose relative flux error exceeds the tolerance.
    FluxViolation(f64),
    /// The barriers merge at this energy; the single-barrier WKB formula
    /// was used.
    WkbMerged,
    /// Energy at or above the lower barrier top; WKB does not apply.
    WkbInvalid,
    /// Energy on a rectangular barrier top.
    Degenerate,
    Failed(String),
}

impl PointFlag {
    /// Whether the point carries no usable value.
    pub fn is_failure(&self) -> bool {
        matches!(self, PointFlag::WkbInvalid | PointFlag::Degenerate | PointFlag::Failed(_))
    }
}

impl fmt::Display for PointFlag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PointFlag::FluxViolation(e) => write!(f, "flux-error:{e:.3e}"),
            PointFlag::WkbMerged => f.write_str("wkb-merged"),
            PointFlag::WkbInvalid => f.write_str("wkb-invalid"),
            PointFlag::Degenerate => f.write_str("degenerate"),
            PointFlag::Failed(msg) => write!(f, "failed:{}", msg.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionPoint {
    pub energy: f64,
    pub transmission: f64,
    /// Transmitted phase in rad (principal value for analytic and WKB).
    pub phase: f64,
    pub engine: Engine,
    pub flag: Option<PointFlag>,
}

impl TransmissionPoint {
    fn flagged(energy: f64, engine: Engine, flag: PointFlag) -> Self {
        TransmissionPoint {
            energy,
            transmission: f64::NAN,
            phase: f64::NAN,
            engine,
            flag: Some(flag),
        }
    }

    /// True when the value is usable.
    pub fn is_valid(&self) -> bool {
        !self.flag.as_ref().is_some_and(PointFlag::is_failure)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EngineOptions {
    pub solver: SolverOptions,
    pub wkb: WkbOptions,
}

/// Rejects engines that cannot handle `spec` at all.
pub fn check_applicable(spec: &DoubleBarrierSpec, engine: Engine) -> Result<()> {
    match engine {
        Engine::Analytic if !spec.is_rectangular() => Err(TunnelError::NotApplicable {
            engine: engine.name().into(),
            reason: format!("closed form needs rectangular barriers, got {}", spec.family()),
        }),
        _ => Ok(()),
    }
}

/// An engine bound to one potential, with any per-potential setup done.
#[derive(Debug, Clone)]
pub struct PreparedEngine {
    engine: Engine,
    potential: Potential,
    opts: EngineOptions,
    rect: Option<RectDoubleParams>,
    numeric: Option<NumericSolver>,
}

impl PreparedEngine {
    pub fn new(p: &Potential, engine: Engine, opts: EngineOptions) -> Result<Self> {
        check_applicable(p.spec(), engine)?;
        let rect = match engine {
            Engine::Analytic => Some(RectDoubleParams::from_spec(p.spec())?),
            _ => None,
        };
        let numeric = match engine {
            Engine::Numeric => Some(NumericSolver::new(p, opts.solver)?),
            _ => None,
        };
        if opts.wkb.n_simpson < 2 || opts.wkb.n_simpson % 2 != 0 {
            return Err(TunnelError::invalid("n_simpson must be even and >= 2"));
        }
        Ok(PreparedEngine {
            engine,
            potential: p.clone(),
            opts,
            rect,
            numeric,
        })
    }

    pub fn engine(&self) -> Engine {
        self.engine
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// Transmission at `energy`. Only a non-positive energy is an error;
    /// every other failure is reported through the point's flag.
    pub fn point(&self, energy: f64) -> Result<TransmissionPoint> {
        if !(energy > 0.0) || !energy.is_finite() {
            return Err(TunnelError::Domain(format!("energy must be > 0, got {energy}")));
        }
        let res = match self.engine {
            Engine::Analytic => self.analytic(energy),
            Engine::Numeric => self.numeric.as_ref().expect("numeric solver prepared").point(energy),
            Engine::Wkb => Ok(self.wkb(energy)),
        };
        Ok(res.unwrap_or_else(|e| {
            let flag = match e {
                TunnelError::DegenerateEnergy { .. } => PointFlag::Degenerate,
                other => PointFlag::Failed(other.to_string()),
            };
            TransmissionPoint::flagged(energy, self.engine, flag)
        }))
    }

    fn analytic(&self, energy: f64) -> Result<TransmissionPoint> {
        let rp = self.rect.as_ref().expect("rectangular parameters prepared");
        let t = rect_double_amplitude(rp, energy)?;
        let k1 = crate::constants::wavenumber(energy, rp.mass_factor);
        Ok(TransmissionPoint {
            energy,
            transmission: t.norm_sqr(),
            phase: (t * num_complex::Complex64::from_polar(1.0, k1 * rp.b())).arg(),
            engine: Engine::Analytic,
            flag: None,
        })
    }

    fn wkb(&self, energy: f64) -> TransmissionPoint {
        let p = &self.potential;
        let spec = p.spec();
        let ok = |transmission: f64, phase: f64, flag: Option<PointFlag>| TransmissionPoint {
            energy,
            transmission,
            phase,
            engine: Engine::Wkb,
            flag,
        };
        let n = self.opts.wkb.n_simpson;
        match spec.barrier_count() {
            0 => return ok(1.0, 0.0, None),
            1 => {
                if energy >= spec.v1.max(spec.v2) {
                    return TransmissionPoint::flagged(energy, Engine::Wkb, PointFlag::WkbInvalid);
                }
                return match wkb_single_transmission(p, energy, n) {
                    Ok(s) => ok(s.transmission, 0.0, None),
                    Err(e) => TransmissionPoint::flagged(energy, Engine::Wkb, PointFlag::Failed(e.to_string())),
                };
            }
            _ => {}
        }
        if energy >= spec.min_height() {
            return TransmissionPoint::flagged(energy, Engine::Wkb, PointFlag::WkbInvalid);
        }
        match turning_points(p, energy, self.opts.wkb.mode).and_then(|tp| wkb_factors(p, energy, &tp, n)) {
            Ok(f) => ok(f.ln_transmission().exp(), f.phase(), None),
            Err(TunnelError::TurningPoints { found: 2, .. }) => match wkb_single_transmission(p, energy, n) {
                Ok(s) => ok(single_from_ln_t(s.ln_t).transmission, 0.0, Some(PointFlag::WkbMerged)),
                Err(e) => TransmissionPoint::flagged(energy, Engine::Wkb, PointFlag::Failed(e.to_string())),
            },
            Err(e) => TransmissionPoint::flagged(energy, Engine::Wkb, PointFlag::Failed(e.to_string())),
        }
    }
}

/// One-shot transmission of `p` at `energy` with the given engine.
pub fn transmission(p: &Potential, energy: f64, engine: Engine, opts: &EngineOptions) -> Result<TransmissionPoint> {
    PreparedEngine::new(p, engine, *opts)?.point(energy)
}
