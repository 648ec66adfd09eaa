//! Dependence of the collective poles on the emitter separation.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::dynamics::TimeSeries;
use crate::error::{Error, Result};
use crate::greens::{self, ComplexEnergy};
use crate::output::fmt17;
use crate::params::{Channel, ModelParams, SymmetrySector};
use crate::quad::{self, QuadratureSpec};

/// Poles of both sectors at one separation; `None` where the solver failed.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRecord {
    pub x21: f64,
    pub z_s: Option<ComplexEnergy>,
    pub z_a: Option<ComplexEnergy>,
}

impl SweepRecord {
    pub fn pole(&self, sector: SymmetrySector) -> Option<&ComplexEnergy> {
        match sector {
            SymmetrySector::Symmetric => self.z_s.as_ref(),
            SymmetrySector::Antisymmetric => self.z_a.as_ref(),
        }
    }

    pub fn flags(&self) -> String {
        match (self.z_s.is_some(), self.z_a.is_some()) {
            (true, true) => "ok".into(),
            (false, true) => "s_failed".into(),
            (true, false) => "a_failed".into(),
            (false, false) => "s_failed|a_failed".into(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Sweep {
    pub records: Vec<SweepRecord>,
    pub warnings: Vec<String>,
}

/// Grid `start, start+step, …` up to and including `end` (within rounding).
pub fn uniform_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && end >= start && start.is_finite() && end.is_finite()) {
        return Err(Error::InvalidParams(format!("bad grid [{start}, {end}] step {step}")));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// Principal poles of both sectors along an increasing grid of separations.
///
/// Each point is solved from the previous root of the same sector, from that
/// root shifted by one lattice spacing `±2π/x₂₁`, and from `ω₁ − iγ_golden`;
/// the least damped certified root is kept.
pub fn sweep_poles(grid: &[f64], params: &ModelParams, quad: &QuadratureSpec) -> Result<Sweep> {
    let p = params.validate()?;
    if grid.iter().any(|x| !(*x > 0.0 && x.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("separation grid must be positive and strictly increasing".into()));
    }
    let mut warnings = Vec::new();
    let z1 = greens::principal_pole(Channel::OneAtom, 1.0, &p, quad)?;
    if let Some(&last) = grid.last() {
        if last * z1.gamma > 1.0 {
            warnings.push(format!(
                "separations beyond 1/γ₁ = {:.4} reach the regime where γ_j falls off like 1/x₂₁",
                1.0 / z1.gamma
            ));
        }
    }
    let fresh = C64::new(p.omega1, -greens::golden_rule_rate(&p));
    let mut seeds = [fresh, fresh];
    let mut records = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut poles = [None, None];
        for (i, sector) in SymmetrySector::BOTH.into_iter().enumerate() {
            // Past each zero-decay distance the continued root detunes into a
            // lattice pole and a neighbour takes over, so keep the least damped.
            let shift = C64::new(2.0 * PI / x, 0.0);
            let solved = [seeds[i], fresh, seeds[i] + shift, seeds[i] - shift]
                .into_iter()
                .filter_map(|seed| greens::find_pole(sector.into(), x, seed, &p, quad).ok())
                .min_by(|a, b| a.gamma.total_cmp(&b.gamma));
            seeds[i] = solved.map_or(fresh, |z| z.value);
            poles[i] = solved;
        }
        let [z_s, z_a] = poles;
        records.push(SweepRecord { x21: x, z_s, z_a });
    }
    Ok(Sweep { records, warnings })
}

/// `F_j = −dω̃_j/dx₂₁` aligned with `records`; `None` where the stencil is broken.
pub fn force_values(records: &[SweepRecord], sector: SymmetrySector) -> Vec<Option<f64>> {
    let n = records.len();
    let w = |i: usize| records[i].pole(sector).map(|z| z.omega_tilde);
    (0..n)
        .map(|i| {
            let here = w(i)?;
            let prev = if i > 0 { w(i - 1) } else { None };
            let next = if i + 1 < n { w(i + 1) } else { None };
            let x = |j: usize| records[j].x21;
            match (prev, next) {
                (Some(a), Some(b)) => Some(-(b - a) / (x(i + 1) - x(i - 1))),
                (None, Some(b)) => Some(-(b - here) / (x(i + 1) - x(i))),
                (Some(a), None) => Some(-(here - a) / (x(i) - x(i - 1))),
                (None, None) => None,
            }
        })
        .collect()
}

/// Heuristic force indicator over the converged points of a sweep.
pub fn force_indicator(records: &[SweepRecord], sector: SymmetrySector) -> Result<TimeSeries> {
    let run = records
        .iter()
        .fold((0usize, 0usize), |(best, cur), r| {
            let cur = if r.pole(sector).is_some() { cur + 1 } else { 0 };
            (best.max(cur), cur)
        })
        .0;
    if run < 3 {
        return Err(Error::TooFewPoints(format!(
            "sector {} has at most {run} consecutive converged points",
            sector.tag()
        )));
    }
    let (xs, fs): (Vec<f64>, Vec<f64>) = records
        .iter()
        .zip(force_values(records, sector))
        .filter_map(|(r, f)| f.map(|f| (r.x21, f)))
        .unzip();
    Ok(TimeSeries::new(&format!("F_{} (heuristic)", sector.tag()), xs, fs))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StablePoint {
    pub x21: f64,
    pub stable: bool,
}

/// Zero crossings of a force series; stable where `F` decreases through zero.
pub fn stable_points(force: &TimeSeries) -> Vec<StablePoint> {
    let (xs, fs) = (&force.times, &force.values);
    if fs.iter().all(|f| f.abs() < 1e-12) {
        return Vec::new();
    }
    let spacing = xs.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let mut out = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        let (x0, x1, f0, f1) = (xs[i], xs[i + 1], fs[i], fs[i + 1]);
        // Entries separated by a gap are not neighbours.
        if x1 - x0 > 1.5 * spacing || f0 == 0.0 || f0.signum() == f1.signum() {
            continue;
        }
        let slope = (f1 - f0) / (x1 - x0);
        out.push(StablePoint { x21: x0 - f0 / slope, stable: slope < 0.0 });
    }
    out
}

/// Real energy and separation at which `γ_j` vanishes.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct ZeroDecaySolution {
    pub sector: SymmetrySector,
    pub n: u32,
    pub omega_o: f64,
    pub x21_zero: f64,
    /// `|Re η⁺_j(ω̃°)|` at `x21_zero`.
    pub residual: f64,
    pub iterations: usize,
}

/// Multiple of `π` in `x₂₁ω̃°`: `2n+1` for the symmetric sector, `2n` for the antisymmetric one.
pub fn zero_decay_multiple(sector: SymmetrySector, n: u32) -> Result<u32> {
    match sector {
        SymmetrySector::Symmetric => Ok(2 * n + 1),
        SymmetrySector::Antisymmetric if n == 0 => {
            Err(Error::InvalidParams("antisymmetric zero-decay index must be at least 1".into()))
        }
        SymmetrySector::Antisymmetric => Ok(2 * n),
    }
}

/// Solves `ω̃° = ω₁ + 2 PV∫λ²v²(1+σ cos(mπk/ω̃°))/(ω̃°−k) dk` by damped fixed point.
pub fn zero_decay_solve(
    sector: SymmetrySector,
    n: u32,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<ZeroDecaySolution> {
    let p = params.validate()?;
    let m = zero_decay_multiple(sector, n)? as f64;
    let (damping, tol, max_iter) = (0.5, 1e-12, 200);
    let shift = |w: f64| -> Result<f64> {
        // Re η⁺_j(ω) = ω − ω₁ − PV∫…, so the map is ω − Re η⁺_j(ω).
        let x = m * PI / w;
        Ok(w - greens::eta_plus(C64::new(w, 0.0), sector.into(), x, &p, quad)?.re)
    };
    let mut w = p.omega1;
    for it in 0..max_iter {
        let g = shift(w)?;
        let next = w + damping * (g - w);
        if !(next > 0.0 && next < p.omega_m) {
            return Err(Error::FixedPoint(format!("iterate {next} left (0, ω_M)")));
        }
        if (next - w).abs() < tol * w.abs().max(1.0) {
            let x = m * PI / next;
            let residual = greens::eta_plus(C64::new(next, 0.0), sector.into(), x, &p, quad)?.re.abs();
            return Ok(ZeroDecaySolution { sector, n, omega_o: next, x21_zero: x, residual, iterations: it + 1 });
        }
        w = next;
    }
    Err(Error::FixedPoint(format!("no convergence after {max_iter} iterations (last {w})")))
}

/// Every zero-decay separation of `sector` inside `[x_min, x_max]`.
pub fn zero_decay_in_range(
    sector: SymmetrySector,
    x_min: f64,
    x_max: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<Vec<ZeroDecaySolution>> {
    let mut out = Vec::new();
    let first = match sector {
        SymmetrySector::Symmetric => 0,
        SymmetrySector::Antisymmetric => 1,
    };
    for n in first.. {
        // The root sits within a few per cent of mπ/ω₁.
        let estimate = zero_decay_multiple(sector, n)? as f64 * PI / params.omega1;
        if estimate > 1.2 * x_max {
            break;
        }
        let sol = zero_decay_solve(sector, n, params, quad)?;
        if sol.x21_zero > x_max {
            break;
        }
        if sol.x21_zero >= x_min {
            out.push(sol);
        }
    }
    Ok(out)
}

/// `γ_j` at the zero-decay separation from the pole finder, as a cross-check.
pub fn zero_decay_gamma(sol: &ZeroDecaySolution, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    let seed = C64::new(sol.omega_o, -1e-6);
    Ok(greens::find_pole(sol.sector.into(), sol.x21_zero, seed, params, quad)?.gamma)
}

#[derive(Clone, Debug, Serialize)]
pub struct ZeroDecayEntry {
    pub sector: SymmetrySector,
    pub n: u32,
    pub omega_o: f64,
    pub x21_zero: f64,
    pub gamma_check: Option<f64>,
}

pub fn zero_decay_report(
    solutions: &[ZeroDecaySolution],
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Vec<ZeroDecayEntry> {
    solutions
        .iter()
        .map(|s| ZeroDecayEntry {
            sector: s.sector,
            n: s.n,
            omega_o: s.omega_o,
            x21_zero: s.x21_zero,
            gamma_check: zero_decay_gamma(s, params, quad).ok(),
        })
        .collect()
}

/// Grid point with the smallest `γ_j` within `window` of `x`.
pub fn sweep_dip(records: &[SweepRecord], sector: SymmetrySector, x: f64, window: f64) -> Option<(f64, f64)> {
    records
        .iter()
        .filter(|r| (r.x21 - x).abs() <= window)
        .filter_map(|r| r.pole(sector).map(|z| (r.x21, z.gamma)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

#[derive(Clone, Debug, Serialize)]
pub struct PairReport {
    pub z1: C64,
    pub max_deviation: f64,
    pub at_x21: f64,
    /// `(x₂₁, |z₁ − (z_s+z_a)/2|)` for every record with both poles.
    pub deviations: Vec<(f64, f64)>,
}

/// `max |z₁ − (z_s+z_a)/2|` over a sweep.
pub fn pair_relation_check(records: &[SweepRecord], params: &ModelParams, quad: &QuadratureSpec) -> Result<PairReport> {
    let z1 = greens::principal_pole(Channel::OneAtom, 1.0, params, quad)?.value;
    let deviations: Vec<(f64, f64)> = records
        .iter()
        .filter_map(|r| Some((r.x21, (z1 - 0.5 * (r.z_s?.value + r.z_a?.value)).norm())))
        .collect();
    let (at_x21, max_deviation) = deviations.iter().copied().fold((f64::NAN, 0.0), |acc, d| if d.1 > acc.1 { d } else { acc });
    Ok(PairReport { z1, max_deviation, at_x21, deviations })
}

/// Writes `x21,re_zs,gamma_s,re_za,gamma_a,Fs,Fa,flags`; missing values are `nan`.
pub fn write_sweep_csv<W: Write>(mut w: W, records: &[SweepRecord]) -> io::Result<()> {
    let fs = force_values(records, SymmetrySector::Symmetric);
    let fa = force_values(records, SymmetrySector::Antisymmetric);
    let num = |v: Option<f64>| v.map_or("nan".to_string(), fmt17);
    writeln!(w, "x21,re_zs,gamma_s,re_za,gamma_a,Fs,Fa,flags")?;
    for (i, r) in records.iter().enumerate() {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            fmt17(r.x21),
            num(r.z_s.map(|z| z.omega_tilde)),
            num(r.z_s.map(|z| z.gamma)),
            num(r.z_a.map(|z| z.omega_tilde)),
            num(r.z_a.map(|z| z.gamma)),
            num(fs[i]),
            num(fa[i]),
            r.flags()
        )?;
    }
    Ok(())
}

/// Number of spatial dimensions for the angular criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Dimension {
    One,
    Two,
    Three,
}

impl Dimension {
    pub fn from_int(d: u32) -> Result<Self> {
        match d {
            1 => Ok(Self::One),
            2 => Ok(Self::Two),
            3 => Ok(Self::Three),
            _ => Err(Error::InvalidParams(format!("dimension must be 1, 2 or 3, got {d}"))),
        }
    }

    /// The two-dimensional weight is a guess and is reported as such.
    pub fn provisional(self) -> bool {
        self == Self::Two
    }
}

/// Angular interference factor at `u = ω̃x₂₁`; zero-decay needs it to vanish.
pub fn angular_factor(d: Dimension, sector: SymmetrySector, u: f64) -> f64 {
    let s = sector.sigma();
    match d {
        Dimension::One => 2.0 * (1.0 + s * u.cos()),
        Dimension::Three => {
            let sinc = if u.abs() < 1e-8 { 1.0 - u * u / 6.0 } else { u.sin() / u };
            2.0 * (1.0 + s * sinc)
        }
        Dimension::Two => {
            let (nodes, weights) = quad::gauss_legendre(64);
            // Panels of width at most π/2 in the phase u·cosθ keep the rule exact to rounding.
            let panels = ((u.abs() / 2.0).ceil() as usize).max(1);
            let h = PI / panels as f64;
            let mut total = 0.0;
            for j in 0..panels {
                let c = (j as f64 + 0.5) * h;
                for (x, w) in nodes.iter().zip(&weights) {
                    let th = c + 0.5 * h * x;
                    total += 0.5 * h * w * (1.0 + s * (u * th.cos()).cos());
                }
            }
            total
        }
    }
}

/// Zeros of the angular factor on `[u_min, u_max]`.
pub fn subradiance_roots(d: Dimension, sector: SymmetrySector, u_min: f64, u_max: f64) -> Result<Vec<f64>> {
    if !(u_min >= 0.0 && u_max >= u_min && u_max.is_finite()) {
        return Err(Error::InvalidParams(format!("bad u range [{u_min}, {u_max}]")));
    }
    if d == Dimension::One {
        // Double zeros at (2n+1)π or 2nπ, u = 0 excluded.
        let (offset, first) = match sector {
            SymmetrySector::Symmetric => (1.0, 0u32),
            SymmetrySector::Antisymmetric => (0.0, 1u32),
        };
        return Ok((first..)
            .map(|n| (2.0 * n as f64 + offset) * PI)
            .take_while(|&u| u <= u_max)
            .filter(|&u| u >= u_min)
            .collect());
    }
    let f = |u: f64| angular_factor(d, sector, u);
    let mut roots = Vec::new();
    if u_min == 0.0 && f(0.0).abs() < 1e-14 {
        roots.push(0.0);
    }
    let steps = ((u_max - u_min) / 0.01).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=steps).map(|i| u_min + (u_max - u_min) * i as f64 / steps as f64).collect();
    let values: Vec<f64> = grid.iter().map(|&u| f(u)).collect();
    for i in 0..steps {
        let (a, b, fa, fb) = (grid[i], grid[i + 1], values[i], values[i + 1]);
        if fa != 0.0 && fb != 0.0 && fa.signum() != fb.signum() {
            let (mut lo, mut hi, mut flo) = (a, b, fa);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * hi.max(1.0) {
                    break;
                }
            }
            roots.push(0.5 * (lo + hi));
        } else if i > 0 && values[i] < values[i - 1] && values[i] <= fb && values[i].abs() < 1e-10 {
            roots.push(a);
        }
    }
    Ok(roots)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bessel_j0(u: f64) -> f64 {
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..200 {
            term *= -(u * u) / (4.0 * (k * k) as f64);
            sum += term;
            if term.abs() < 1e-18 {
                break;
            }
        }
        sum
    }

    #[test]
    fn angular_factor_closed_forms() {
        use SymmetrySector::*;
        assert!(angular_factor(Dimension::Three, Antisymmetric, 0.0).abs() < 1e-15);
        assert!(angular_factor(Dimension::One, Symmetric, PI).abs() < 1e-15);
        for u in [0.0, 0.5, 3.0, 7.7, 10.0] {
            for s in SymmetrySector::BOTH {
                let expected = PI * (1.0 + s.sigma() * bessel_j0(u));
                assert!((angular_factor(Dimension::Two, s, u) - expected).abs() < 1e-12, "{u}");
            }
        }
        for i in 1..=5000 {
            let u = i as f64 * 0.01;
            assert!(angular_factor(Dimension::Three, Symmetric, u) > 0.0);
            if u > 1.0 {
                assert!(angular_factor(Dimension::Three, Symmetric, u) >= 2.0 * (1.0 - 1.0 / u));
            }
        }
    }

    #[test]
    fn root_lattices() {
        use SymmetrySector::*;
        let s = subradiance_roots(Dimension::One, Symmetric, 0.0, 20.0).unwrap();
        assert_eq!(s, vec![PI, 3.0 * PI, 5.0 * PI]);
        let a = subradiance_roots(Dimension::One, Antisymmetric, 0.0, 20.0).unwrap();
        assert_eq!(a, vec![2.0 * PI, 4.0 * PI, 6.0 * PI]);
        for u in s.iter().chain(&a) {
            let sector = if s.contains(u) { Symmetric } else { Antisymmetric };
            assert!(angular_factor(Dimension::One, sector, *u).abs() < 1e-14);
        }
        assert!(subradiance_roots(Dimension::Three, Symmetric, 0.0, 50.0).unwrap().is_empty());
        assert_eq!(subradiance_roots(Dimension::Three, Antisymmetric, 0.0, 50.0).unwrap(), vec![0.0]);
        assert!(subradiance_roots(Dimension::Two, Symmetric, 0.0, 30.0).unwrap().is_empty());
        assert_eq!(subradiance_roots(Dimension::Two, Antisymmetric, 0.0, 30.0).unwrap(), vec![0.0]);
    }

    fn synthetic(omega: impl Fn(f64) -> f64) -> Vec<SweepRecord> {
        uniform_grid(5.0, 15.0, 0.05)
            .unwrap()
            .into_iter()
            .map(|x| {
                let z = ComplexEnergy::new(C64::new(omega(x), -0.02), Channel::Symmetric, 0, C64::new(1.0, 0.0), 0.0);
                SweepRecord { x21: x, z_s: Some(z), z_a: None }
            })
            .collect()
    }

    #[test]
    fn force_of_a_sinusoid() {
        // ω̃ = 2 + 0.01 sin x gives F = −0.01 cos x, which vanishes at odd multiples of π/2.
        let recs = synthetic(|x| 2.0 + 0.01 * x.sin());
        let f = force_indicator(&recs, SymmetrySector::Symmetric).unwrap();
        for (x, v) in f.times.iter().zip(&f.values).skip(1).take(f.times.len() - 2) {
            assert!((v + 0.01 * x.cos()).abs() < 1e-5);
        }
        let pts = stable_points(&f);
        assert_eq!(pts.len(), 3);
        for w in pts.windows(2) {
            assert_ne!(w[0].stable, w[1].stable);
        }
        // F = −0.01 cos x falls through zero at 3π/2 + 2πk.
        let stable: Vec<_> = pts.iter().filter(|p| p.stable).collect();
        assert!(stable.iter().all(|p| {
            let r = (p.x21 - 1.5 * PI) / (2.0 * PI);
            (r - r.round()).abs() < 1e-3
        }));
        assert!(force_indicator(&recs, SymmetrySector::Antisymmetric).is_err());
    }

    #[test]
    fn constant_energy_has_no_force() {
        let recs = synthetic(|_| 2.0);
        let f = force_indicator(&recs, SymmetrySector::Symmetric).unwrap();
        assert!(f.values.iter().all(|v| *v == 0.0));
        assert!(stable_points(&f).is_empty());
    }

    #[test]
    fn gaps_break_stencils() {
        let mut recs = synthetic(|x| x);
        recs[10].z_s = None;
        let f = force_values(&recs, SymmetrySector::Symmetric);
        assert!(f[10].is_none());
        assert!((f[9].unwrap() + 1.0).abs() < 1e-12);
        assert!((f[11].unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_decay_antisymmetric_n4() {
        let p = ModelParams::default();
        let q = QuadratureSpec::default();
        let sol = zero_decay_solve(SymmetrySector::Antisymmetric, 4, &p, &q).unwrap();
        assert!((sol.omega_o - 1.985).abs() < 1e-2);
        assert!((sol.x21_zero - 12.66).abs() < 0.05);
        assert!((sol.x21_zero * sol.omega_o - 8.0 * PI).abs() < 1e-12);
        assert!(sol.residual < 1e-10);
        assert!(zero_decay_gamma(&sol, &p, &q).unwrap() < 1e-4);
        assert!(zero_decay_solve(SymmetrySector::Antisymmetric, 0, &p, &q).is_err());
    }

    #[test]
    fn csv_layout() {
        let recs = synthetic(|x| x);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &recs[..3]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "x21,re_zs,gamma_s,re_za,gamma_a,Fs,Fa,flags");
        let fields: Vec<_> = lines[1].split(',').collect();
        assert_eq!(fields.len(), 8);
        assert_eq!((fields[3], fields[4], fields[6], fields[7]), ("nan", "nan", "nan", "a_failed"));
    }
}
