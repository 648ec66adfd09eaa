//! Adaptive Gauss–Kronrod quadrature for complex-valued integrands on finite
//! intervals and on the half line.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerances and budget for every integral in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Finite part `[0, cutoff]` of half-line integrals; the remainder is
    /// mapped onto `(0, 1]` by `k = cutoff/u`.
    pub cutoff: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    /// Cutoff `200·ω_M` for the default `ω_M = 5`.
    fn default() -> Self {
        Self {
            cutoff: 1000.0,
            rel_tol: 1e-12,
            abs_tol: 1e-15,
            max_panels: 4000,
        }
    }
}

impl QuadratureSpec {
    /// Default tolerances with the cutoff scaled to `200·ω_M`.
    pub fn for_cutoff_scale(omega_m: f64) -> Self {
        Self { cutoff: 200.0 * omega_m, ..Self::default() }
    }

    /// Checks the tolerances and requires `cutoff ≥ 50·ω_M`.
    pub fn validate(&self, omega_m: f64) -> Result<()> {
        if !(self.cutoff >= 50.0 * omega_m) {
            return Err(Error::InvalidParams(format!(
                "quadrature cutoff {} is below 50·ω_M = {}",
                self.cutoff,
                50.0 * omega_m
            )));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol >= 0.0 && self.max_panels > 0) {
            return Err(Error::InvalidParams("quadrature tolerances must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Estimate {
    pub value: C64,
    pub error: f64,
    pub panels: usize,
}

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_478_464,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

fn gk21<F: Fn(f64) -> C64>(f: &F, a: f64, b: f64) -> (C64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = C64::new(0.0, 0.0);
    for j in 0..10 {
        let dx = half * XGK[j];
        let s = f(center - dx) + f(center + dx);
        kronrod += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let value = kronrod * half;
    let error = ((kronrod - gauss) * half).norm();
    (value, error)
}

struct Panel {
    a: f64,
    b: f64,
    value: C64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive integration over `[breaks[0], breaks[last]]`, starting
/// from the panels delimited by `breaks`.
pub fn integrate<F: Fn(f64) -> C64>(f: F, breaks: &[f64], spec: &QuadratureSpec) -> Result<Estimate> {
    assert!(breaks.len() >= 2, "need at least one interval");
    let mut heap = BinaryHeap::new();
    let mut value = C64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut panels = 0usize;
    for w in breaks.windows(2) {
        let (v, e) = gk21(&f, w[0], w[1]);
        value += v;
        error += e;
        panels += 1;
        heap.push(Panel { a: w[0], b: w[1], value: v, error: e });
    }
    // Panels too narrow to split further leave the heap but keep their share.
    let mut frozen_value = C64::new(0.0, 0.0);
    let mut frozen_error = 0.0;
    loop {
        let tol = spec.abs_tol.max(spec.rel_tol * value.norm());
        if error <= tol {
            break;
        }
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(mid > worst.a && mid < worst.b) || (worst.b - worst.a) <= 1e-13 * worst.a.abs().max(worst.b.abs()) {
            frozen_value += worst.value;
            frozen_error += worst.error;
            if heap.is_empty() {
                break;
            }
            continue;
        }
        if panels >= spec.max_panels {
            return Err(Error::Quadrature { error, panels });
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        value += v1 + v2 - worst.value;
        error += e1 + e2 - worst.error;
        panels += 1;
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
    }
    // Re-sum from the panels to shed accumulated rounding.
    let value = heap.iter().fold(frozen_value, |acc, p| acc + p.value);
    let error = heap.iter().fold(frozen_error, |acc, p| acc + p.error);
    Ok(Estimate { value, error, panels })
}

/// Nodes of the 21-point Kronrod rule on `[a, b]` as `(x, w_kronrod, w_gauss)`;
/// `w_gauss` is zero at the ten Kronrod-only nodes.
pub fn gk21_nodes(a: f64, b: f64) -> [(f64, f64, f64); 21] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut out = [(center, WGK[10] * half, 0.0); 21];
    for j in 0..10 {
        let dx = half * XGK[j];
        let wg = if j % 2 == 1 { WG[j / 2] * half } else { 0.0 };
        out[2 * j] = (center - dx, WGK[j] * half, wg);
        out[2 * j + 1] = (center + dx, WGK[j] * half, wg);
    }
    out
}

/// One 21-point Kronrod pass per panel, without error control.
pub fn fixed_rule<F: Fn(f64) -> C64>(f: F, breaks: &[f64]) -> C64 {
    breaks.windows(2).map(|w| gk21(&f, w[0], w[1]).0).sum()
}

/// Geometric breakpoints `0, s, 2s, 4s, …` up to `end`.
pub fn geometric_breaks(scale: f64, end: f64) -> Vec<f64> {
    let mut breaks = vec![0.0];
    let mut x = scale;
    while x < end {
        breaks.push(x);
        x *= 2.0;
    }
    breaks.push(end);
    breaks
}

/// `∫₀^∞ f(r) dr` with `[0, cutoff]` integrated directly and the tail mapped
/// through `r = cutoff/u`. `scale` sets the first geometric breakpoint.
pub fn integrate_halfline<F: Fn(f64) -> C64>(f: F, scale: f64, spec: &QuadratureSpec) -> Result<Estimate> {
    let breaks = geometric_breaks(scale.min(spec.cutoff / 2.0), spec.cutoff);
    let head = integrate(&f, &breaks, spec)?;
    let c = spec.cutoff;
    let tail_spec = QuadratureSpec {
        abs_tol: spec.abs_tol.max(spec.rel_tol * head.value.norm()),
        ..*spec
    };
    let tail = integrate(
        |u: f64| {
            if u <= 0.0 {
                C64::new(0.0, 0.0)
            } else {
                f(c / u) * (c / (u * u))
            }
        },
        &[0.0, 0.25, 0.5, 1.0],
        &tail_spec,
    )?;
    Ok(Estimate {
        value: head.value + tail.value,
        error: head.error + tail.error,
        panels: head.panels + tail.panels,
    })
}

/// Real-valued convenience wrapper around [`integrate_halfline`].
pub fn integrate_halfline_real<F: Fn(f64) -> f64>(f: F, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate_halfline(|x| C64::new(f(x), 0.0), 1.0, spec)?.value.re)
}

/// Real-valued `∫_a^b f`.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(integrate(|x| C64::new(f(x), 0.0), &[a, b], spec)?.value.re)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
