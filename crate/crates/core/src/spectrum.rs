//! Energy sweeps, resonance detection and engine comparison.

use rayon::prelude::*;

use crate::engine::{Engine, EngineOptions, PreparedEngine, TransmissionPoint};
use crate::error::{Result, TunnelError};
use crate::potentials::{DoubleBarrierSpec, Potential};

/// Default number of grid points.
pub const DEFAULT_GRID_POINTS: usize = 2000;

/// Default prominence floor for peaks.
pub const DEFAULT_PROMINENCE: f64 = 0.05;

/// Linear energy grid, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyGrid {
    pub e_min: f64,
    pub e_max: f64,
    pub n: usize,
}

impl EnergyGrid {
    pub fn new(e_min: f64, e_max: f64, n: usize) -> Result<Self> {
        let g = EnergyGrid { e_min, e_max, n };
        g.validate()?;
        Ok(g)
    }

    /// `n` points on `(0, 2 v_max]`, starting at `2 v_max / n`.
    pub fn default_for(p: &Potential, n: usize) -> Result<Self> {
        let e_max = if p.v_max() > 0.0 { 2.0 * p.v_max() } else { 1.0 };
        EnergyGrid::new(e_max / n as f64, e_max, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_min > 0.0 && self.e_min < self.e_max && self.e_max.is_finite()) {
            return Err(TunnelError::invalid(format!(
                "energy grid needs 0 < e_min < e_max, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if self.n < 2 {
            return Err(TunnelError::invalid("energy grid needs at least 2 points"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.e_max - self.e_min) / (self.n - 1) as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|i| if i + 1 == self.n { self.e_max } else { self.e_min + i as f64 * h })
            .collect()
    }
}

/// Transmission over an ascending list of energies, one engine.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionCurve {
    pub engine: Engine,
    pub spec: DoubleBarrierSpec,
    pub points: Vec<TransmissionPoint>,
}

impl TransmissionCurve {
    pub fn energies(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.energy).collect()
    }

    pub fn transmissions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.transmission).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points whose flag marks them unusable.
    pub fn failures(&self) -> usize {
        self.points.iter().filter(|p| !p.is_valid()).count()
    }

    /// Transmitted phases made continuous along the sweep.
    pub fn unwrapped_phases(&self) -> Vec<f64> {
        unwrap_phases(&self.points.iter().map(|p| p.phase).collect::<Vec<_>>())
    }
}

/// Removes 2π jumps between consecutive samples. NaN entries are kept and
/// skipped over.
pub fn unwrap_phases(phases: &[f64]) -> Vec<f64> {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut out = Vec::with_capacity(phases.len());
    let mut prev: Option<f64> = None;
    let mut shift = 0.0;
    for &ph in phases {
        if !ph.is_finite() {
            out.push(ph);
            continue;
        }
        let mut v = ph + shift;
        if let Some(p) = prev {
            let k = ((v - p) / two_pi).round();
            v -= k * two_pi;
            shift -= k * two_pi;
        }
        out.push(v);
        prev = Some(v);
    }
    out
}

/// Evaluates `p` at every grid energy, in parallel, keeping grid order.
pub fn sweep(p: &Potential, grid: &EnergyGrid, engine: Engine, opts: &EngineOptions) -> Result<TransmissionCurve> {
    grid.validate()?;
    sweep_energies(p, &grid.energies(), engine, opts)
}

pub fn sweep_energies(p: &Potential, energies: &[f64], engine: Engine, opts: &EngineOptions) -> Result<TransmissionCurve> {
    if energies.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(TunnelError::invalid("sweep energies must be strictly increasing"));
    }
    let prepared = PreparedEngine::new(p, engine, *opts)?;
    let points = energies
        .par_iter()
        .map(|&e| prepared.point(e))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransmissionCurve {
        engine,
        spec: *p.spec(),
        points,
    })
}

/// Which half-maximum crossings were not found.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Censoring {
    #[default]
    None,
    Left,
    Right,
    Both,
}

impl Censoring {
    fn from_sides(left: bool, right: bool) -> Self {
        match (left, right) {
            (false, false) => Censoring::None,
            (true, false) => Censoring::Left,
            (false, true) => Censoring::Right,
            (true, true) => Censoring::Both,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Censoring::None => "none",
            Censoring::Left => "left",
            Censoring::Right => "right",
            Censoring::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonancePeak {
    pub e_peak: f64,
    pub t_peak: f64,
    /// Full width at half maximum, eV. Measured to the curve edge (or the
    /// next higher point) on censored sides.
    pub fwhm: f64,
    pub censored: Censoring,
    /// Index of the grid point the peak was detected at.
    pub index: usize,
    pub prominence: f64,
}

fn prominence_at(t: &[f64], i: usize) -> f64 {
    let peak = t[i];
    let side_min = |it: &mut dyn Iterator<Item = usize>| {
        let mut m = peak;
        for j in it {
            let v = t[j];
            if v.is_nan() {
                continue;
            }
            if v > peak {
                break;
            }
            m = m.min(v);
        }
        m
    };
    let left = side_min(&mut (0..i).rev());
    let right = side_min(&mut (i + 1..t.len()));
    peak - left.max(right)
}

/// Half-maximum crossing on one side of `i`: `(energy, censored)`.
fn half_crossing(e: &[f64], t: &[f64], i: usize, dir: isize) -> (f64, bool) {
    let half = 0.5 * t[i];
    let mut j = i as isize;
    loop {
        let next = j + dir;
        if next < 0 || next >= t.len() as isize {
            return (e[j as usize], true);
        }
        let (tj, tn) = (t[j as usize], t[next as usize]);
        if tn.is_nan() || tn > t[i] {
            return (e[j as usize], true);
        }
        if tn < half {
            let (ej, en) = (e[j as usize], e[next as usize]);
            let f = (tj - half) / (tj - tn);
            return (ej + f * (en - ej), false);
        }
        j = next;
    }
}

/// Interior strict local maxima whose prominence reaches `prominence`.
pub fn find_resonances(curve: &TransmissionCurve, prominence: f64) -> Vec<ResonancePeak> {
    let e = curve.energies();
    let t = curve.transmissions();
    if t.len() < 3 {
        return Vec::new();
    }
    (1..t.len() - 1)
        .filter(|&i| t[i] > t[i - 1] && t[i] > t[i + 1])
        .filter_map(|i| {
            let prom = prominence_at(&t, i);
            if prom < prominence {
                return None;
            }
            let (lo, lc) = half_crossing(&e, &t, i, -1);
            let (hi, rc) = half_crossing(&e, &t, i, 1);
            Some(ResonancePeak {
                e_peak: e[i],
                t_peak: t[i],
                fwhm: hi - lo,
                censored: Censoring::from_sides(lc, rc),
                index: i,
                prominence: prom,
            })
        })
        .collect()
}

/// Zoom iterations used by [`refine_resonances`].
const REFINE_SAMPLES: usize = 21;
const REFINE_ITERATIONS: usize = 40;

fn eval_t(engine: &PreparedEngine, e: f64) -> f64 {
    engine.point(e).map(|p| p.transmission).unwrap_or(f64::NAN)
}

fn bisect_half(engine: &PreparedEngine, mut below: f64, mut above: f64, half: f64) -> f64 {
    for _ in 0..80 {
        let m = 0.5 * (below + above);
        if (above - below).abs() <= 1e-14 * m.abs() {
            break;
        }
        let v = eval_t(engine, m);
        if v.is_nan() {
            break;
        }
        if v < half {
            below = m;
        } else {
            above = m;
        }
    }
    0.5 * (below + above)
}

/// Relocates each peak with the engine itself: the maximum is found by
/// repeated zooming between the neighbouring grid points, and the half
/// maximum crossings by bisection.
pub fn refine_resonances(engine: &PreparedEngine, curve: &TransmissionCurve, peaks: &[ResonancePeak]) -> Vec<ResonancePeak> {
    let e = curve.energies();
    let t = curve.transmissions();
    peaks
        .iter()
        .map(|pk| {
            let i = pk.index;
            let (mut lo, mut hi) = (e[i - 1], e[i + 1]);
            let (mut e_best, mut t_best) = (e[i], t[i]);
            for _ in 0..REFINE_ITERATIONS {
                let h = (hi - lo) / (REFINE_SAMPLES - 1) as f64;
                let mut j_best = None;
                for j in 0..REFINE_SAMPLES {
                    let x = lo + j as f64 * h;
                    let v = eval_t(engine, x);
                    if v > t_best {
                        t_best = v;
                        e_best = x;
                        j_best = Some(j);
                    }
                }
                let centre = match j_best {
                    Some(j) => lo + j as f64 * h,
                    None => e_best,
                };
                lo = (centre - h).max(e[i - 1]);
                hi = (centre + h).min(e[i + 1]);
                if hi - lo <= 1e-13 * centre {
                    break;
                }
            }
            let half = 0.5 * t_best;
            let side = |dir: isize| -> (f64, bool) {
                let mut j = i as isize;
                loop {
                    j += dir;
                    if j < 0 || j >= t.len() as isize {
                        return (e[(j - dir) as usize], true);
                    }
                    let tj = t[j as usize];
                    if tj.is_nan() || tj > t_best {
                        return (e[(j - dir) as usize], true);
                    }
                    if tj < half {
                        return (bisect_half(engine, e[j as usize], e_best, half), false);
                    }
                }
            };
            let (l, lc) = side(-1);
            let (r, rc) = side(1);
            ResonancePeak {
                e_peak: e_best,
                t_peak: t_best,
                fwhm: r - l,
                censored: Censoring::from_sides(lc, rc),
                index: i,
                prominence: pk.prominence + (t_best - t[i]),
            }
        })
        .collect()
}

/// Peak-to-peak distance between two curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOffset {
    pub e_a: f64,
    pub e_b: f64,
}

impl PeakOffset {
    pub fn offset(&self) -> f64 {
        self.e_b - self.e_a
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub engine_a: Engine,
    pub engine_b: Engine,
    pub n_points: usize,
    /// Points where both curves carry usable values.
    pub n_compared: usize,
    /// Extremes of `𝒯_b / 𝒯_a` over compared points.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// Largest `|log10(𝒯_b/𝒯_a)|` for `E < limit_energy`.
    pub max_abs_log10: f64,
    pub limit_energy: f64,
    /// Each peak of curve a paired with the nearest peak of curve b.
    pub peak_offsets: Vec<PeakOffset>,
    /// Grid range with `E ≥ min(V1, V2)`, where WKB does not apply.
    pub invalid_region: Option<(f64, f64)>,
}

/// Compares two curves sampled on the same grid.
pub fn compare(a: &TransmissionCurve, b: &TransmissionCurve, prominence: f64) -> Result<ComparisonReport> {
    if a.len() != b.len() {
        return Err(TunnelError::GridMismatch(format!("{} vs {} points", a.len(), b.len())));
    }
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if (pa.energy - pb.energy).abs() > 1e-12 * pa.energy.abs().max(1.0) {
            return Err(TunnelError::GridMismatch(format!(
                "energy {} vs {}",
                pa.energy, pb.energy
            )));
        }
    }
    let v_min = a.spec.min_height();
    let limit_energy = 0.5 * v_min;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = f64::NEG_INFINITY;
    let mut max_abs_log10: f64 = 0.0;
    let mut n_compared = 0;
    for (pa, pb) in a.points.iter().zip(&b.points) {
        if !pa.is_valid() || !pb.is_valid() || !(pa.transmission > 0.0) || !(pb.transmission > 0.0) {
            continue;
        }
        n_compared += 1;
        let r = pb.transmission / pa.transmission;
        ratio_min = ratio_min.min(r);
        ratio_max = ratio_max.max(r);
        if pa.energy < limit_energy {
            max_abs_log10 = max_abs_log10.max(r.log10().abs());
        }
    }
    let peaks_a = find_resonances(a, prominence);
    let peaks_b = find_resonances(b, prominence);
    let peak_offsets = peaks_a
        .iter()
        .filter_map(|pa| {
            peaks_b
                .iter()
                .min_by(|x, y| (x.e_peak - pa.e_peak).abs().total_cmp(&(y.e_peak - pa.e_peak).abs()))
                .map(|pb| PeakOffset {
                    e_a: pa.e_peak,
                    e_b: pb.e_peak,
                })
        })
        .collect();
    let energies = a.energies();
    let invalid: Vec<f64> = energies.iter().copied().filter(|&e| v_min > 0.0 && e >= v_min).collect();
    let invalid_region = match (invalid.first(), invalid.last()) {
        (Some(&lo), Some(&hi)) => Some((lo, hi)),
        _ => None,
    };
    Ok(ComparisonReport {
        engine_a: a.engine,
        engine_b: b.engine,
        n_points: a.len(),
        n_compared,
        ratio_min,
        ratio_max,
        max_abs_log10,
        limit_energy,
        peak_offsets,
        invalid_region,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::DEFAULT_EPS_TAIL;

    fn curve(e: &[f64], t: &[f64]) -> TransmissionCurve {
        TransmissionCurve {
            engine: Engine::Numeric,
            spec: DoubleBarrierSpec::gaussian(4.0, 4.0, 0.2, 0.2, 1.0),
            points: e
                .iter()
                .zip(t)
                .map(|(&energy, &transmission)| TransmissionPoint {
                    energy,
                    transmission,
                    phase: 0.0,
                    engine: Engine::Numeric,
                    flag: None,
                })
                .collect(),
        }
    }

    #[test]
    fn grid_endpoints() {
        let g = EnergyGrid::new(0.5, 2.0, 4).unwrap();
        assert_eq!(g.energies(), vec![0.5, 1.0, 1.5, 2.0]);
        assert!(EnergyGrid::new(0.0, 1.0, 4).is_err());
        assert!(EnergyGrid::new(0.5, 1.0, 1).is_err());
    }

    #[test]
    fn two_point_free_sweep() {
        let p = Potential::free(1.0);
        let c = sweep(&p, &EnergyGrid::new(0.1, 1.0, 2).unwrap(), Engine::Numeric, &EngineOptions::default()).unwrap();
        assert_eq!(c.len(), 2);
        assert!(c.points.iter().all(|p| (p.transmission - 1.0).abs() < 1e-12));
    }

    #[test]
    fn monotone_has_no_peaks() {
        let e: Vec<f64> = (1..50).map(|i| i as f64 * 0.1).collect();
        let t: Vec<f64> = e.iter().map(|x| 1.0 - (-x).exp()).collect();
        assert!(find_resonances(&curve(&e, &t), 0.05).is_empty());
    }

    #[test]
    fn triangle_peak_fwhm() {
        let e: Vec<f64> = (0..21).map(|i| i as f64).collect();
        let t: Vec<f64> = e.iter().map(|x| (1.0 - (x - 10.0).abs() / 10.0).max(0.0) * 0.8 + 0.01).collect();
        let peaks = find_resonances(&curve(&e, &t), 0.05);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].e_peak, 10.0);
        // half max 0.405 → crossings at 10 ∓ 5.0625
        assert!((peaks[0].fwhm - 10.125).abs() < 1e-12);
        assert_eq!(peaks[0].censored, Censoring::None);
    }

    #[test]
    fn small_bumps_ignored_and_censoring() {
        let e: Vec<f64> = (0..7).map(|i| i as f64).collect();
        let t = [0.5, 0.52, 0.5, 0.6, 0.9, 0.7, 0.65];
        let peaks = find_resonances(&curve(&e, &t), 0.05);
        assert_eq!(peaks.len(), 1);
        assert_eq!(peaks[0].index, 4);
        assert_eq!(peaks[0].censored, Censoring::Both);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw = [3.0, -3.0, -2.5, 3.1, f64::NAN, -3.0];
        let u = unwrap_phases(&raw);
        for w in [u[0], u[1], u[2], u[3], u[5]].windows(2) {
            assert!((w[1] - w[0]).abs() < std::f64::consts::PI);
        }
        assert!(u[4].is_nan());
    }

    #[test]
    fn self_comparison() {
        let p = Potential::new(&DoubleBarrierSpec::gaussian(4.0, 4.0, 0.2, 0.2, 2.0), DEFAULT_EPS_TAIL).unwrap();
        let g = EnergyGrid::new(0.1, 6.0, 120).unwrap();
        let opts = EngineOptions {
            solver: crate::numeric::SolverOptions { step: 2e-3, ..Default::default() },
            ..Default::default()
        };
        let c = sweep(&p, &g, Engine::Numeric, &opts).unwrap();
        let r = compare(&c, &c, DEFAULT_PROMINENCE).unwrap();
        assert_eq!(r.ratio_min, 1.0);
        assert_eq!(r.ratio_max, 1.0);
        assert_eq!(r.max_abs_log10, 0.0);
        assert!(r.peak_offsets.iter().all(|o| o.offset() == 0.0));
        assert_eq!(r.invalid_region.unwrap().1, 6.0);
        let short = curve(&[1.0, 2.0], &[0.1, 0.2]);
        assert!(matches!(compare(&c, &short, 0.05), Err(TunnelError::GridMismatch(_))));
    }
}
