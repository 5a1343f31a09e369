//! Run configuration: TOML sections `[barrier] [grid] [solver] [delay]
//! [transport] [output]`.

use std::path::PathBuf;

use serde::Deserialize;
use tunnelkit::delay::{DelayMethod, DelayOptions};
use tunnelkit::numeric::SolverOptions;
use tunnelkit::potentials::{BarrierShape, DoubleBarrierSpec, Potential, DEFAULT_EPS_TAIL};
use tunnelkit::spectrum::{EnergyGrid, DEFAULT_GRID_POINTS, DEFAULT_PROMINENCE};
use tunnelkit::transport::DeviceConfig;
use tunnelkit::wkb::{TurningPointMode, WkbOptions};
use tunnelkit::{Engine, EngineOptions};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierSection {
    pub shape: String,
    pub v1: f64,
    pub v2: f64,
    pub width1: f64,
    pub width2: f64,
    pub separation: f64,
    #[serde(default = "one")]
    pub mass_factor: f64,
    #[serde(default)]
    pub offset: f64,
    #[serde(default = "default_eps_tail")]
    pub eps_tail: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub e_min: Option<f64>,
    pub e_max: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub engines: Vec<String>,
    pub step: f64,
    pub max_flux_error: f64,
    pub n_simpson: usize,
    pub turning_points: String,
    pub prominence: f64,
    pub refine_peaks: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverOptions::default();
        let w = WkbOptions::default();
        SolverSection {
            engines: vec!["numeric".into(), "wkb".into()],
            step: s.step,
            max_flux_error: s.max_flux_error,
            n_simpson: w.n_simpson,
            turning_points: w.mode.name().into(),
            prominence: DEFAULT_PROMINENCE,
            refine_peaks: true,
        }
    }
}

/// Sweep axis of the `time` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DelayAxis {
    Energy,
    Width,
    Separation,
}

impl std::str::FromStr for DelayAxis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "energy" => Ok(DelayAxis::Energy),
            "sigma" | "width" => Ok(DelayAxis::Width),
            "separation" => Ok(DelayAxis::Separation),
            other => Err(CliError::Validation(format!("unknown delay axis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DelaySection {
    pub axis: String,
    pub method: String,
    pub start: f64,
    pub stop: f64,
    pub n: usize,
    /// Fixed energy for the width and separation axes, eV.
    pub energy: Option<f64>,
    pub de_rel: f64,
    pub tolerance: f64,
}

impl Default for DelaySection {
    fn default() -> Self {
        let d = DelayOptions::default();
        DelaySection {
            axis: "energy".into(),
            method: "wkb".into(),
            start: 0.5,
            stop: 3.5,
            n: 61,
            energy: None,
            de_rel: d.de_rel,
            tolerance: d.tolerance,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransportSection {
    pub fermi_level: f64,
    pub temperature: f64,
    pub mass_factor: Option<f64>,
    pub bias_start: f64,
    pub bias_stop: f64,
    pub bias_n: usize,
    pub level_shift: f64,
    pub n_energy: usize,
    pub engine: String,
}

impl Default for TransportSection {
    fn default() -> Self {
        let d = DeviceConfig::default();
        TransportSection {
            fermi_level: d.fermi_level,
            temperature: d.temperature,
            mass_factor: None,
            bias_start: 0.0,
            bias_stop: 0.5,
            bias_n: 51,
            level_shift: d.level_shift,
            n_energy: d.n_energy,
            engine: "analytic".into(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub plot: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
            plot: false,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub barrier: BarrierSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub delay: DelaySection,
    #[serde(default)]
    pub transport: TransportSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn one() -> f64 {
    1.0
}

fn default_eps_tail() -> f64 {
    DEFAULT_EPS_TAIL
}

fn parse_engine(s: &str) -> Result<Engine, CliError> {
    s.parse::<Engine>().map_err(CliError::from)
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.potential()?;
        self.engine_options()?;
        for e in &self.solver.engines {
            parse_engine(e)?;
        }
        self.delay.axis.parse::<DelayAxis>()?;
        self.delay.method.parse::<DelayMethod>()?;
        parse_engine(&self.transport.engine)?;
        if !(self.solver.prominence >= 0.0) {
            return Err(CliError::Validation("prominence must be >= 0".into()));
        }
        Ok(())
    }

    pub fn spec(&self) -> Result<DoubleBarrierSpec, CliError> {
        let b = &self.barrier;
        let shape = |w: f64| match b.shape.as_str() {
            "gaussian" => Ok(BarrierShape::Gaussian { sigma: w }),
            "rectangular" => Ok(BarrierShape::Rectangular { width: w }),
            "lorentzian" => Ok(BarrierShape::Lorentzian { gamma: w }),
            other => Err(CliError::Validation(format!("unknown barrier shape '{other}'"))),
        };
        let spec = DoubleBarrierSpec::new(b.v1, b.v2, shape(b.width1)?, shape(b.width2)?, b.separation)
            .with_mass_factor(b.mass_factor)
            .with_offset(b.offset);
        spec.validate()?;
        Ok(spec)
    }

    pub fn potential(&self) -> Result<Potential, CliError> {
        Ok(Potential::new(&self.spec()?, self.barrier.eps_tail)?)
    }

    pub fn grid(&self, p: &Potential) -> Result<EnergyGrid, CliError> {
        let n = self.grid.n.unwrap_or(DEFAULT_GRID_POINTS);
        let default = EnergyGrid::default_for(p, n.max(2))?;
        let e_max = self.grid.e_max.unwrap_or(default.e_max);
        let e_min = self.grid.e_min.unwrap_or(e_max / n.max(1) as f64);
        Ok(EnergyGrid::new(e_min, e_max, n)?)
    }

    pub fn engine_options(&self) -> Result<EngineOptions, CliError> {
        let solver = SolverOptions {
            step: self.solver.step,
            max_flux_error: self.solver.max_flux_error,
        };
        solver.validate()?;
        if self.solver.n_simpson < 2 || self.solver.n_simpson % 2 != 0 {
            return Err(CliError::Validation("n_simpson must be even and >= 2".into()));
        }
        Ok(EngineOptions {
            solver,
            wkb: WkbOptions {
                n_simpson: self.solver.n_simpson,
                mode: self.solver.turning_points.parse::<TurningPointMode>()?,
            },
        })
    }

    /// Engines to run: the override if given, else the configured list.
    pub fn engines(&self, over: Option<Engine>) -> Result<Vec<Engine>, CliError> {
        match over {
            Some(e) => Ok(vec![e]),
            None => self.solver.engines.iter().map(|s| parse_engine(s)).collect(),
        }
    }

    pub fn delay_options(&self) -> Result<DelayOptions, CliError> {
        let opts = DelayOptions {
            de_rel: self.delay.de_rel,
            tolerance: self.delay.tolerance,
            wkb: self.engine_options()?.wkb,
            ..DelayOptions::default()
        };
        if !(opts.de_rel > 0.0 && opts.de_rel < 1.0) {
            return Err(CliError::Validation("de_rel must lie in (0, 1)".into()));
        }
        Ok(opts)
    }

    pub fn device(&self) -> DeviceConfig {
        let t = &self.transport;
        DeviceConfig {
            fermi_level: t.fermi_level,
            temperature: t.temperature,
            mass_factor: t.mass_factor.unwrap_or(self.barrier.mass_factor),
            bias: 0.0,
            level_shift: t.level_shift,
            n_energy: t.n_energy,
        }
    }

    pub fn biases(&self) -> Result<Vec<f64>, CliError> {
        let t = &self.transport;
        linspace(t.bias_start, t.bias_stop, t.bias_n, "bias")
    }
}

/// `n` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if n == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Validation(format!("{what} range is empty or not finite")));
    }
    if n == 1 {
        return Ok(vec![start]);
    }
    if !(stop > start) {
        return Err(CliError::Validation(format!("{what} range needs stop > start")));
    }
    let h = (stop - start) / (n - 1) as f64;
    Ok((0..n).map(|i| if i + 1 == n { stop } else { start + i as f64 * h }).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GAUSS: &str = r#"
[barrier]
shape = "gaussian"
v1 = 4.0
v2 = 4.0
width1 = 0.2
width2 = 0.2
separation = 1.0
"#;

    #[test]
    fn minimal_config_uses_defaults() {
        let c = RunConfig::parse(GAUSS).unwrap();
        let p = c.potential().unwrap();
        let g = c.grid(&p).unwrap();
        assert_eq!(g.n, 2000);
        assert!((g.e_max - 2.0 * p.v_max()).abs() < 1e-12);
        assert_eq!(c.engines(None).unwrap(), vec![Engine::Numeric, Engine::Wkb]);
        assert_eq!(c.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::parse("[barrier]\nshape = \"gaussian\"\n").is_err());
        let bad_shape = GAUSS.replace("gaussian", "triangle");
        assert!(RunConfig::parse(&bad_shape).is_err());
        let unknown = format!("{GAUSS}\n[grid]\nwidth = 3\n");
        assert!(RunConfig::parse(&unknown).is_err());
        let bad_engine = format!("{GAUSS}\n[solver]\nengines = [\"exact\"]\n");
        assert!(RunConfig::parse(&bad_engine).is_err());
    }

    #[test]
    fn linspace_endpoints() {
        assert_eq!(linspace(0.0, 1.0, 3, "x").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(linspace(0.2, 0.2, 1, "x").unwrap(), vec![0.2]);
        assert!(linspace(1.0, 0.0, 3, "x").is_err());
    }
}
