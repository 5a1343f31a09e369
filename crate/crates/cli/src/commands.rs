//! Subcommand implementations.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use tunnelkit::delay::{phase_time, DelayMethod, GroupDelay};
use tunnelkit::engine::{check_applicable, PreparedEngine};
use tunnelkit::spectrum::{compare, find_resonances, refine_resonances, sweep, ComparisonReport, TransmissionCurve};
use tunnelkit::transport::{tsu_esaki_current, DeviceConfig};
use tunnelkit::{Engine, PointFlag};

use crate::config::{linspace, DelayAxis, RunConfig};
use crate::error::CliError;
use crate::output::{num, plot_script, OutputDir, DELAY_HEADER, IV_HEADER, RESONANCE_HEADER, TRANSMISSION_HEADER};

/// Everything a subcommand needs besides its own arguments.
pub struct Context {
    pub config: RunConfig,
    pub engine: Option<Engine>,
    pub out: OutputDir,
    pub plot: bool,
}

impl Context {
    fn settings(&self) -> BTreeMap<&'static str, String> {
        let mut s = BTreeMap::new();
        if let Some(e) = self.engine {
            s.insert("engine_override", e.name().to_string());
        }
        s
    }
}

fn flag_text(flag: &Option<PointFlag>) -> String {
    flag.as_ref().map(|f| f.to_string()).unwrap_or_default()
}

fn curve_rows(curve: &TransmissionCurve) -> Vec<Vec<String>> {
    let phases = curve.unwrapped_phases();
    curve
        .points
        .iter()
        .zip(phases)
        .map(|(p, ph)| {
            vec![
                num(p.energy),
                num(p.transmission),
                num(ph),
                p.engine.name().to_string(),
                flag_text(&p.flag),
            ]
        })
        .collect()
}

fn run_sweep(ctx: &Context, engine: Engine) -> Result<TransmissionCurve, CliError> {
    let p = ctx.config.potential()?;
    let grid = ctx.config.grid(&p)?;
    Ok(sweep(&p, &grid, engine, &ctx.config.engine_options()?)?)
}

fn write_curve(ctx: &mut Context, curve: &TransmissionCurve) -> Result<String, CliError> {
    let name = format!("sweep_{}.csv", curve.engine.name());
    ctx.out.write_csv(&name, TRANSMISSION_HEADER, &curve_rows(curve))?;
    Ok(name)
}

pub fn transmit(ctx: &mut Context, energy: f64) -> Result<(), CliError> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(CliError::Validation(format!("energy must be > 0, got {energy}")));
    }
    let p = ctx.config.potential()?;
    let opts = ctx.config.engine_options()?;
    let engines: Vec<Engine> = match ctx.engine {
        Some(e) => vec![e],
        None => Engine::ALL
            .into_iter()
            .filter(|&e| check_applicable(p.spec(), e).is_ok())
            .collect(),
    };
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for e in engines {
        let pt = PreparedEngine::new(&p, e, opts)?.point(energy)?;
        if let Some(f) = pt.flag.as_ref().filter(|f| f.is_failure() && **f != PointFlag::WkbInvalid) {
            failures.push(format!("E = {energy} eV, engine {e}: {f}"));
        }
        rows.push(vec![
            num(pt.energy),
            num(pt.transmission),
            num(pt.phase),
            e.name().to_string(),
            flag_text(&pt.flag),
        ]);
        println!("{:<9} T = {}  phase = {}  {}", e.name(), num(pt.transmission), num(pt.phase), flag_text(&pt.flag));
    }
    ctx.out.write_csv("transmit.csv", TRANSMISSION_HEADER, &rows)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Numerical(failures.join("; ")))
    }
}

pub fn sweep_cmd(ctx: &mut Context) -> Result<(), CliError> {
    let mut series = Vec::new();
    for engine in ctx.config.engines(ctx.engine)? {
        let curve = run_sweep(ctx, engine)?;
        let name = write_curve(ctx, &curve)?;
        eprintln!(
            "{}: {} points, {} flagged unusable",
            engine,
            curve.len(),
            curve.failures()
        );
        series.push((name, 1, 2));
    }
    if ctx.plot {
        let script = plot_script("Transmission", "E (eV)", "T", true, &series);
        ctx.out.write("sweep.gp", &script)?;
    }
    Ok(())
}

pub fn resonances(ctx: &mut Context) -> Result<(), CliError> {
    let engine = ctx.config.engines(ctx.engine)?[0];
    let curve = run_sweep(ctx, engine)?;
    let mut peaks = find_resonances(&curve, ctx.config.solver.prominence);
    if ctx.config.solver.refine_peaks {
        let p = ctx.config.potential()?;
        let prepared = PreparedEngine::new(&p, engine, ctx.config.engine_options()?)?;
        peaks = refine_resonances(&prepared, &curve, &peaks);
    }
    let rows: Vec<Vec<String>> = peaks
        .iter()
        .map(|pk| vec![num(pk.e_peak), num(pk.t_peak), num(pk.fwhm), pk.censored.name().to_string()])
        .collect();
    ctx.out
        .write_csv(&format!("resonances_{}.csv", engine.name()), RESONANCE_HEADER, &rows)?;
    eprintln!("{engine}: {} resonance peaks", peaks.len());
    Ok(())
}

#[derive(Serialize)]
struct ReportJson {
    engine_a: String,
    engine_b: String,
    n_points: usize,
    n_compared: usize,
    ratio_min: f64,
    ratio_max: f64,
    max_abs_log10_ratio: f64,
    log10_limit_energy_ev: f64,
    peak_offsets_ev: Vec<[f64; 3]>,
    invalid_region_ev: Option<[f64; 2]>,
    invalid_region_note: &'static str,
}

impl From<&ComparisonReport> for ReportJson {
    fn from(r: &ComparisonReport) -> Self {
        ReportJson {
            engine_a: r.engine_a.name().into(),
            engine_b: r.engine_b.name().into(),
            n_points: r.n_points,
            n_compared: r.n_compared,
            ratio_min: r.ratio_min,
            ratio_max: r.ratio_max,
            max_abs_log10_ratio: r.max_abs_log10,
            log10_limit_energy_ev: r.limit_energy,
            peak_offsets_ev: r.peak_offsets.iter().map(|o| [o.e_a, o.e_b, o.offset()]).collect(),
            invalid_region_ev: r.invalid_region.map(|(a, b)| [a, b]),
            invalid_region_note: "E >= min(V1, V2): WKB does not apply",
        }
    }
}

pub fn compare_cmd(ctx: &mut Context, a: Engine, b: Engine) -> Result<(), CliError> {
    let ca = run_sweep(ctx, a)?;
    let cb = run_sweep(ctx, b)?;
    let na = write_curve(ctx, &ca)?;
    let nb = write_curve(ctx, &cb)?;
    let report = compare(&ca, &cb, ctx.config.solver.prominence)?;
    let json = serde_json::to_string_pretty(&ReportJson::from(&report)).map_err(|e| CliError::Numerical(e.to_string()))?;
    ctx.out.write(&format!("compare_{}_{}.json", a.name(), b.name()), &(json + "\n"))?;
    eprintln!(
        "max |log10(T_{b}/T_{a})| below {} eV: {:.3}",
        report.limit_energy, report.max_abs_log10
    );
    if ctx.plot {
        let script = plot_script("Transmission", "E (eV)", "T", true, &[(na, 1, 2), (nb, 1, 2)]);
        ctx.out.write("compare.gp", &script)?;
    }
    Ok(())
}

pub fn time(ctx: &mut Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let axis: DelayAxis = cfg.delay.axis.parse()?;
    let method: DelayMethod = cfg.delay.method.parse()?;
    let opts = cfg.delay_options()?;
    let base = cfg.spec()?;
    let eps = cfg.barrier.eps_tail;
    let xs = linspace(cfg.delay.start, cfg.delay.stop, cfg.delay.n, "delay")?;
    let fixed_energy = match axis {
        DelayAxis::Energy => None,
        _ => Some(
            cfg.delay
                .energy
                .ok_or_else(|| CliError::Validation("[delay] energy is required for this axis".into()))?,
        ),
    };
    let results: Vec<Result<GroupDelay, String>> = xs
        .par_iter()
        .map(|&x| {
            let mut spec = base;
            let energy = match axis {
                DelayAxis::Energy => x,
                DelayAxis::Width => {
                    spec.shape1 = spec.shape1.with_width(x);
                    spec.shape2 = spec.shape2.with_width(x);
                    fixed_energy.unwrap_or_default()
                }
                DelayAxis::Separation => {
                    spec.separation = x;
                    fixed_energy.unwrap_or_default()
                }
            };
            phase_time(&spec, eps, energy, method, &opts).map_err(|e| e.to_string())
        })
        .collect();
    let mut failed = 0;
    let rows: Vec<Vec<String>> = xs
        .iter()
        .zip(&results)
        .map(|(&x, r)| match r {
            Ok(g) => vec![
                num(x),
                num(g.tau),
                g.class.name().to_string(),
                if g.converged { String::new() } else { "unconverged".into() },
            ],
            Err(msg) => {
                failed += 1;
                eprintln!("delay failed at x = {x}: {msg}");
                vec![num(x), num(f64::NAN), "off".into(), PointFlag::Failed(msg.clone()).to_string()]
            }
        })
        .collect();
    ctx.out.write_csv("delay.csv", DELAY_HEADER, &rows)?;
    if ctx.plot {
        let xlabel = match axis {
            DelayAxis::Energy => "E (eV)",
            DelayAxis::Width => "barrier width (nm)",
            DelayAxis::Separation => "separation (nm)",
        };
        let script = plot_script("Group delay", xlabel, "tau (fs)", false, &[("delay.csv".into(), 1, 2)]);
        ctx.out.write("delay.gp", &script)?;
    }
    if failed == xs.len() {
        return Err(CliError::Numerical("every delay point failed".into()));
    }
    Ok(())
}

pub fn iv(ctx: &mut Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let engine = match ctx.engine {
        Some(e) => e,
        None => cfg.transport.engine.parse()?,
    };
    let mut spec = cfg.spec()?;
    let dev: DeviceConfig = cfg.device();
    spec.mass_factor = dev.mass_factor;
    let p = tunnelkit::Potential::new(&spec, cfg.barrier.eps_tail)?;
    let prepared = PreparedEngine::new(&p, engine, cfg.engine_options()?)?;
    dev.validate()?;
    let biases = cfg.biases()?;
    if biases.iter().any(|&b| b < 0.0) {
        return Err(CliError::Validation("biases must be >= 0".into()));
    }
    let results: Vec<_> = biases
        .iter()
        .map(|&bias| tsu_esaki_current(&DeviceConfig { bias, ..dev }, &prepared))
        .collect();
    let mut failed = 0;
    let rows: Vec<Vec<String>> = biases
        .iter()
        .zip(results)
        .map(|(&b, r)| match r {
            Ok(c) => vec![num(b), num(c.j), if c.tail_flag { "tail".into() } else { String::new() }],
            Err(e) => {
                failed += 1;
                eprintln!("current failed at bias = {b} V: {e}");
                vec![num(b), num(f64::NAN), PointFlag::Failed(e.to_string()).to_string()]
            }
        })
        .collect();
    ctx.out.write_csv("iv.csv", IV_HEADER, &rows)?;
    if ctx.plot {
        let script = plot_script("I-V", "bias (V)", "J (A/m^2)", false, &[("iv.csv".into(), 1, 2)]);
        ctx.out.write("iv.gp", &script)?;
    }
    if failed == biases.len() {
        return Err(CliError::Numerical("every bias point failed".into()));
    }
    Ok(())
}

pub fn finish(ctx: &mut Context, command: &str, config_text: &str) -> Result<(), CliError> {
    let settings = ctx.settings();
    crate::output::write_manifest(&mut ctx.out, command, config_text, settings)
}
