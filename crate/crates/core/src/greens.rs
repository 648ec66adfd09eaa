//! Inverse Green's functions `η⁺`, their continuation below the real axis,
//! and the resonance poles they define.
//!
//! Two independent evaluation routes are provided. The production route
//! rotates the momentum integral onto rays `k = r·e^{±iθ}` where oscillating
//! factors decay, adding the residue of the crossed pole when the rotation
//! sweeps over `z`. The reference route integrates along the real axis with
//! singularity subtraction and applies the `−2πi f(z)` rule explicitly.

use std::f64::consts::PI;
use std::io::{self, Write};
use std::ops::RangeInclusive;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::output::fmt17;
use crate::params::{Channel, ModelParams, SymmetrySector};
use crate::quad::{self, QuadratureSpec};

/// Largest admissible `|Im(a·z)|` in an exponential factor `e^{iaz}`.
pub const OVERFLOW_LIMIT: f64 = 650.0;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `v(z)²` without the pole-proximity check.
pub(crate) fn v2(z: C64, p: &ModelParams) -> C64 {
    let r = z / p.omega_m;
    z / (1.0 + r * r).powi(2 * p.n_ff as i32)
}

/// Rational continuation `v(z)² = z/(1+(z/ω_M)²)^{2n}` of the squared form factor.
pub fn form_factor_sq(z: C64, p: &ModelParams) -> Result<C64> {
    let pole = C64::new(0.0, p.omega_m);
    let distance = (z - pole).norm().min((z + pole).norm());
    if distance < 1e-8 * p.omega_m {
        return Err(Error::FormFactorPole { distance });
    }
    Ok(v2(z, p))
}

/// One term `weight·e^{i·phase·k}` multiplying a common analytic profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseTerm {
    pub weight: C64,
    pub phase: f64,
}

impl PhaseTerm {
    pub fn new(weight: f64, phase: f64) -> Self {
        Self { weight: C64::new(weight, 0.0), phase }
    }
}

// Treat a real argument as approached from above.
fn upper_limit(z: C64) -> C64 {
    if z.im == 0.0 {
        C64::new(z.re, 0.0)
    } else {
        z
    }
}

fn check_branch(z: C64) -> Result<()> {
    if z.im == 0.0 && z.re < -1e-12 * z.re.abs().max(1.0) {
        return Err(Error::BranchCut(z));
    }
    Ok(())
}

fn check_exponent(phase: f64, z: C64) -> Result<()> {
    let exponent = -phase * z.im;
    if exponent > OVERFLOW_LIMIT {
        return Err(Error::Overflow { exponent, limit: OVERFLOW_LIMIT });
    }
    Ok(())
}

/// Reference evaluation of the continued integral `∫₀^∞ f(k)/(z−k) dk`.
///
/// `f` must be analytic near the positive real axis and near `z`. The finite
/// part `[0, Λ]` is integrated after subtracting `f(z)/(z−k)`, whose integral
/// is `f(z)[Log z − Log(z−Λ)]`; below the axis `−2πi f(z)` is added, and a
/// real `z` yields the principal value minus `iπ f(z)`.
pub fn continued_halfline_integral<F: Fn(C64) -> C64>(f: F, z: C64, quad: &QuadratureSpec) -> Result<C64> {
    let z = upper_limit(z);
    check_branch(z)?;
    let lam = quad.cutoff;
    if z.re >= 0.5 * lam {
        return Err(Error::InvalidParams(format!("Re z = {} too close to the cutoff {lam}", z.re)));
    }
    let fz = f(z);
    let mut breaks = quad::geometric_breaks(0.25 * z.norm().clamp(1e-3, 1.0), lam);
    if z.re > 0.0 && !breaks.contains(&z.re) {
        breaks.push(z.re);
        breaks.sort_by(f64::total_cmp);
    }
    let head = quad::integrate(
        |k| {
            let d = z - k;
            if d == C64::new(0.0, 0.0) {
                C64::new(0.0, 0.0)
            } else {
                (f(C64::new(k, 0.0)) - fz) / d
            }
        },
        &breaks,
        quad,
    )?;
    let mut value = head.value;
    if fz != C64::new(0.0, 0.0) {
        value += fz * (z.ln() - (z - lam).ln());
    }

    let tail_f = |u: f64| {
        if u <= 0.0 {
            return C64::new(0.0, 0.0);
        }
        let k = lam / u;
        f(C64::new(k, 0.0)) / (z - k) * (lam / (u * u))
    };
    let tail_breaks = [0.0, 0.25, 0.5, 1.0];
    // Coarse magnitude of the tail; the integrand may oscillate without bound as u → 0.
    let coarse: Vec<f64> = std::iter::once(0.0).chain((0..=8).map(|i| 0.5f64.powi(8 - i))).collect();
    let envelope = quad::fixed_rule(|u| C64::new(tail_f(u).norm(), 0.0), &coarse).re;
    let tol = quad.abs_tol.max(quad.rel_tol * value.norm());
    if envelope > tol {
        let tail_spec = QuadratureSpec { abs_tol: tol, ..*quad };
        value += quad::integrate(tail_f, &tail_breaks, &tail_spec)?.value;
    }

    if z.im < 0.0 {
        value -= 2.0 * PI * I * fz;
    }
    Ok(value)
}

fn pick_ray_angle(arg: f64) -> f64 {
    let candidates = [PI / 4.0, PI / 6.0, PI / 3.0];
    let score = |t: f64| (arg - t).abs().min((arg + t).abs());
    for &t in &candidates {
        if score(t) >= PI / 12.0 {
            return t;
        }
    }
    candidates.into_iter().max_by(|a, b| score(*a).total_cmp(&score(*b))).unwrap()
}

fn ray_integral<G: Fn(C64) -> C64>(
    g: &G,
    terms: &[PhaseTerm],
    phi: f64,
    z: C64,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let dir = C64::from_polar(1.0, phi);
    let est = quad::integrate_halfline(
        |r| {
            let k = dir * r;
            let s: C64 = terms.iter().map(|t| t.weight * (I * t.phase * k).exp()).sum();
            g(k) * s / (z - k) * dir
        },
        0.25 * z.norm().clamp(1e-3, 1.0),
        quad,
    )?;
    Ok(est.value)
}

/// Continued integral `∫₀^∞ g(k)·Σ w_m e^{i a_m k}/(z−k) dk` by contour rotation.
///
/// `g` must be analytic in the sector `|arg k| ≤ π/3` and decay at least like
/// `|k|⁻²` there. Terms with `a > 0` are integrated along the ray at angle
/// `+θ`, the rest along `−θ`; whenever `arg z` lies below a ray the residue
/// `−2πi·g(z)w e^{iaz}` of the swept pole is added.
pub fn continued_phase_integral<G: Fn(C64) -> C64>(
    g: G,
    terms: &[PhaseTerm],
    z: C64,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let z = upper_limit(z);
    check_branch(z)?;
    let arg = z.arg();
    let theta = pick_ray_angle(arg);
    let (up, down): (Vec<PhaseTerm>, Vec<PhaseTerm>) = terms.iter().partition(|t| t.phase > 0.0);
    let mut total = C64::new(0.0, 0.0);
    for (group, phi) in [(down, -theta), (up, theta)] {
        if group.is_empty() {
            continue;
        }
        total += ray_integral(&g, &group, phi, z, quad)?;
        if arg < phi {
            let gz = g(z);
            for t in &group {
                check_exponent(t.phase, z)?;
                total -= 2.0 * PI * I * gz * t.weight * (I * t.phase * z).exp();
            }
        }
    }
    Ok(total)
}

/// `∫₀^∞ g(k)·Σ w_m e^{i a_m k}/(z−k) dk` for `Im z ≤ 0` without any
/// continuation term, a real `z` being approached from below. Every phase must
/// be positive so the contour can be lifted onto the ray at `+π/4`.
pub fn lower_phase_integral<G: Fn(C64) -> C64>(
    g: G,
    terms: &[PhaseTerm],
    z: C64,
    quad: &QuadratureSpec,
) -> Result<C64> {
    if z.im > 0.0 {
        return Err(Error::InvalidParams(format!("lower boundary value requested at {z}")));
    }
    if z.im == 0.0 && z.re < -1e-12 * z.re.abs().max(1.0) {
        return Err(Error::BranchCut(z));
    }
    if terms.iter().any(|t| t.phase <= 0.0) {
        return Err(Error::InvalidParams("lower boundary integral needs positive phases".into()));
    }
    ray_integral(&g, terms, PI / 4.0, z, quad)
}

fn sector_terms(channel: Channel, x21: f64, p: &ModelParams) -> Vec<PhaseTerm> {
    let l2 = p.lambda * p.lambda;
    match channel.sigma() {
        None => vec![PhaseTerm::new(2.0 * l2, 0.0)],
        Some(s) => vec![
            PhaseTerm::new(2.0 * l2, 0.0),
            PhaseTerm::new(l2 * s, x21),
            PhaseTerm::new(l2 * s, -x21),
        ],
    }
}

fn check_channel(channel: Channel, x21: f64, p: &ModelParams) -> Result<ModelParams> {
    let p = p.validate()?;
    if channel != Channel::OneAtom && !(x21 > 0.0 && x21.is_finite()) {
        return Err(Error::InvalidParams("coincident atoms".into()));
    }
    Ok(p)
}

/// `η⁺_j(z) = z − ω₁ − ∫₀^∞ 2λ²v_k²(1+σ_j cos kx₂₁)/(z−k)⁺ dk`.
///
/// The isolated emitter drops the cosine. Below the real axis the
/// continuation term `−2πi·2λ²v(z)²(1+σ_j cos zx₂₁)` is included; it grows
/// like `e^{γx₂₁}` and is refused once the exponent passes [`OVERFLOW_LIMIT`].
pub fn eta_plus(z: C64, channel: Channel, x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<C64> {
    let p = check_channel(channel, x21, params)?;
    form_factor_sq(z, &p)?;
    let terms = sector_terms(channel, x21, &p);
    let integral = continued_phase_integral(|k| v2(k, &p), &terms, z, quad)?;
    Ok(z - p.omega1 - integral)
}

/// [`eta_plus`] through the real-axis reference route.
pub fn eta_plus_reference(
    z: C64,
    channel: Channel,
    x21: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let p = check_channel(channel, x21, params)?;
    form_factor_sq(z, &p)?;
    let sigma = channel.sigma().unwrap_or(0.0);
    check_exponent(x21, z)?;
    let l2 = p.lambda * p.lambda;
    let f = |k: C64| 2.0 * l2 * v2(k, &p) * (1.0 + sigma * (k * x21).cos());
    Ok(z - p.omega1 - continued_halfline_integral(f, z, quad)?)
}

/// `η⁻(ω)`, the boundary value from below on the real axis.
///
/// Terms decaying upward are lifted onto the `+π/4` ray. The others go down
/// onto `−π/4`, which passes below the pole at `ω − i0`, so its residue
/// `+2πi·g(ω)w e^{iaω}` is added back.
pub fn eta_minus_real(omega: f64, channel: Channel, x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<C64> {
    let p = check_channel(channel, x21, params)?;
    let z = C64::new(omega, 0.0);
    check_branch(z)?;
    let g = |k: C64| v2(k, &p);
    let (up, down): (Vec<PhaseTerm>, Vec<PhaseTerm>) =
        sector_terms(channel, x21, &p).into_iter().partition(|t| t.phase > 0.0);
    let mut total = C64::new(0.0, 0.0);
    if !up.is_empty() {
        total += lower_phase_integral(g, &up, z, quad)?;
    }
    if !down.is_empty() {
        total += ray_integral(&g, &down, -PI / 4.0, z, quad)?;
        if omega > 0.0 {
            let gz = g(z);
            for t in &down {
                total += 2.0 * PI * I * gz * t.weight * (I * t.phase * z).exp();
            }
        }
    }
    Ok(z - p.omega1 - total)
}

/// A resonance pole `z = ω̃ − iγ` with its residue factor `N = 1/η⁺′(z)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexEnergy {
    pub value: C64,
    pub omega_tilde: f64,
    pub gamma: f64,
    pub channel: Channel,
    pub lattice_index: i32,
    pub normalization: C64,
    /// `|η⁺(z)|` at the returned point.
    pub residual: f64,
    /// `false` for approximate solutions that were never certified as roots.
    pub certified: bool,
}

impl ComplexEnergy {
    pub fn new(value: C64, channel: Channel, lattice_index: i32, normalization: C64, residual: f64) -> Self {
        Self {
            value,
            omega_tilde: value.re,
            gamma: -value.im,
            channel,
            lattice_index,
            normalization,
            residual,
            certified: true,
        }
    }
}

/// Damped fixed-point iteration `z ← z − α f(z)` finished by Newton steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleSolver {
    pub damping: f64,
    /// Newton takes over once `|f| <` this.
    pub newton_switch: f64,
    pub max_iter: usize,
    /// Certificate `|f(z)| < tol·max(1,|z|)`.
    pub tol: f64,
}

impl Default for PoleSolver {
    fn default() -> Self {
        Self { damping: 0.5, newton_switch: 1e-3, max_iter: 200, tol: 1e-10 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Root {
    pub z: C64,
    pub derivative: C64,
    pub residual: f64,
    pub iterations: usize,
}

/// Fourth-order central difference of an analytic function along the real direction.
pub fn derivative<F: Fn(C64) -> Result<C64>>(f: &F, z: C64, h: f64) -> Result<C64> {
    let f1 = f(z + h)?;
    let fm1 = f(z - h)?;
    let f2 = f(z + 2.0 * h)?;
    let fm2 = f(z - 2.0 * h)?;
    Ok((8.0 * (f1 - fm1) - (f2 - fm2)) / (12.0 * h))
}

/// Finds a zero of `f` from `seed`; `h` is the differentiation step.
pub fn solve_root<F: Fn(C64) -> Result<C64>>(f: F, seed: C64, solver: &PoleSolver, h: f64) -> Result<Root> {
    let mut z = seed;
    let mut fz = f(z)?;
    let mut newton = false;
    for it in 0..solver.max_iter {
        let r = fz.norm();
        if r < solver.tol * z.norm().max(1.0) {
            let d = derivative(&f, z, h)?;
            return Ok(Root { z, derivative: d, residual: r, iterations: it });
        }
        newton |= r < solver.newton_switch;
        let (zn, fzn) = if newton {
            let step = fz / derivative(&f, z, h)?;
            let mut alpha = 1.0;
            let mut best = None;
            for _ in 0..12 {
                let zt = z - alpha * step;
                if let Ok(ft) = f(zt) {
                    if ft.norm() < r {
                        best = Some((zt, ft));
                        break;
                    }
                    best.get_or_insert((zt, ft));
                }
                alpha *= 0.5;
            }
            best.ok_or(Error::NoConvergence { seed, residual: r, iterations: it })?
        } else {
            let zt = z - solver.damping * fz;
            let ft = f(zt)?;
            if ft.norm() >= r {
                newton = true;
            }
            (zt, ft)
        };
        if !(zn.re.is_finite() && zn.im.is_finite()) {
            break;
        }
        z = zn;
        fz = fzn;
    }
    Err(Error::NoConvergence { seed, residual: fz.norm(), iterations: solver.max_iter })
}

/// Differentiation step used for `η⁺′`; shrinks with the separation so the
/// `e^{±izx₂₁}` factors stay resolved.
pub fn derivative_step(x21: f64) -> f64 {
    1e-3 / x21.max(1.0)
}

/// Certifies `root` as a retarded-branch pole.
fn certify(root: Root, channel: Channel, index: i32, tol: f64) -> Result<ComplexEnergy> {
    if root.z.im > tol * root.z.norm().max(1.0) {
        return Err(Error::WrongBranch(root.z));
    }
    Ok(ComplexEnergy::new(root.z, channel, index, 1.0 / root.derivative, root.residual))
}

/// Pole of `1/η⁺_j` reached from `seed`.
pub fn find_pole(
    channel: Channel,
    x21: f64,
    seed: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<ComplexEnergy> {
    find_pole_with(channel, x21, seed, params, quad, &PoleSolver::default())
}

pub fn find_pole_with(
    channel: Channel,
    x21: f64,
    seed: C64,
    params: &ModelParams,
    quad: &QuadratureSpec,
    solver: &PoleSolver,
) -> Result<ComplexEnergy> {
    let p = check_channel(channel, x21, params)?;
    let root = solve_root(|z| eta_plus(z, channel, x21, &p, quad), seed, solver, derivative_step(x21))?;
    certify(root, channel, 0, solver.tol)
}

/// Golden-rule rate `2πλ²v(ω₁)²`, the default imaginary offset of seeds.
pub fn golden_rule_rate(p: &ModelParams) -> f64 {
    2.0 * PI * p.coupling_sq(p.omega1)
}

/// The principal pole `z_j` (lattice index 0), seeded at `ω₁ − iγ_golden`.
pub fn principal_pole(channel: Channel, x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<ComplexEnergy> {
    let seed = C64::new(params.omega1, -golden_rule_rate(params));
    find_pole(channel, x21, seed, params, quad)
}

/// Poles `z_{j,n}` for `n` in a range, with the indices that failed or
/// collapsed onto an already found root.
#[derive(Clone, Debug, Serialize)]
pub struct PoleScan {
    pub poles: Vec<ComplexEnergy>,
    pub gaps: Vec<i32>,
}

/// Seed for `z_{j,n}` from the principal pole.
pub fn lattice_seed(principal: C64, sector: SymmetrySector, n: i32, x21: f64) -> C64 {
    let s = sector.sigma() as i32;
    let shift = if n == 0 {
        0.0
    } else if s * n > 0 {
        2.0 * n as f64 * PI / x21
    } else {
        (2 * n + s) as f64 * PI / x21
    };
    principal + shift
}

/// Converges every `z_{j,n}`, `n ∈ n_range`, and returns them sorted by `Re z`.
pub fn pole_scan(
    sector: SymmetrySector,
    x21: f64,
    n_range: RangeInclusive<i32>,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<PoleScan> {
    let channel = Channel::from(sector);
    let principal = principal_pole(channel, x21, params, quad)?;
    let newton = PoleSolver { newton_switch: f64::INFINITY, ..PoleSolver::default() };
    let found: Vec<(i32, Option<ComplexEnergy>)> = n_range
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|n| {
            if n == 0 {
                return (0, Some(principal));
            }
            let mut seed = lattice_seed(principal.value, sector, n, x21);
            // Off-centre poles sit where |z − z_j| ≈ γ e^{γ_n x₂₁}.
            let shift = (seed.re - principal.value.re).abs();
            let depth = (shift / golden_rule_rate(params)).ln() / x21;
            seed.im = seed.im.min(-depth);
            let pole = find_pole_with(channel, x21, seed, params, quad, &newton).ok().map(|mut e| {
                e.lattice_index = n;
                e
            });
            (n, pole)
        })
        .collect();

    let radius = 1e-6 * params.omega1;
    let mut poles: Vec<ComplexEnergy> = Vec::new();
    let mut gaps = Vec::new();
    // Index 0 first so the principal pole survives deduplication.
    let mut ordered = found;
    ordered.sort_by_key(|(n, _)| (n.abs(), *n));
    for (n, pole) in ordered {
        match pole {
            Some(e) if poles.iter().all(|q| (q.value - e.value).norm() > radius) => poles.push(e),
            _ => gaps.push(n),
        }
    }
    poles.sort_by(|a, b| a.omega_tilde.total_cmp(&b.omega_tilde));
    gaps.sort();
    Ok(PoleScan { poles, gaps })
}

/// Pole-only estimate: damped fixed point of
/// `ω̃ = ω₁ + 2πλ²v(ω̃)²σ e^{γx} sin ω̃x`, `γ = 2πλ²v(ω̃)²(1 + σ e^{γx} cos ω̃x)`.
pub fn weak_coupling_estimate(channel: Channel, x21: f64, params: &ModelParams) -> Result<ComplexEnergy> {
    let p = check_channel(channel, x21, params)?;
    let sigma = channel.sigma().unwrap_or(0.0);
    let mut omega = p.omega1;
    let mut gamma = golden_rule_rate(&p);
    for _ in 0..5000 {
        let g = 2.0 * PI * p.coupling_sq(omega);
        if gamma * x21 > OVERFLOW_LIMIT {
            break;
        }
        let e = sigma * (gamma * x21).exp();
        let omega_new = p.omega1 + g * e * (omega * x21).sin();
        let gamma_new = g * (1.0 + e * (omega * x21).cos());
        let d_omega = omega_new - omega;
        let d_gamma = gamma_new - gamma;
        omega += 0.5 * d_omega;
        gamma += 0.5 * d_gamma;
        if !(omega.is_finite() && gamma.is_finite()) {
            break;
        }
        if d_omega.abs().max(d_gamma.abs()) < 1e-13 {
            let mut e = ComplexEnergy::new(C64::new(omega, -gamma), channel, 0, C64::new(1.0, 0.0), f64::NAN);
            e.certified = false;
            return Ok(e);
        }
    }
    Err(Error::FixedPoint(format!(
        "weak-coupling estimate did not settle (ω̃ = {omega}, γ = {gamma})"
    )))
}

/// Spectral density `2λ²v_k²(1+σ cos kx₂₁)/|η⁺(k)|²` on the real axis.
pub fn continuum_weight(k: f64, channel: Channel, x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    if !(k > 0.0) {
        return Err(Error::InvalidParams(format!("continuum weight needs k > 0, got {k}")));
    }
    let eta = eta_plus(C64::new(k, 0.0), channel, x21, params, quad)?;
    let sigma = channel.sigma().unwrap_or(0.0);
    Ok(2.0 * params.coupling_sq(k) * (1.0 + sigma * (k * x21).cos()) / eta.norm_sqr())
}

/// Rectangle in the complex energy plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

/// Value stored for cells where `η⁺` could not be evaluated.
pub const OVERFLOW_SENTINEL: f64 = -1e300;

/// `log(1/|η⁺(z)|)` on a regular grid, row-major with `im` as the slow index.
#[derive(Clone, Debug, Serialize)]
pub struct ContourMap {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: Vec<f64>,
    pub overflow_cells: usize,
}

impl ContourMap {
    pub fn at(&self, i_re: usize, i_im: usize) -> f64 {
        self.values[i_im * self.re.len() + i_re]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "re,im,log_inv_abs_eta")?;
        for (j, &im) in self.im.iter().enumerate() {
            for (i, &re) in self.re.iter().enumerate() {
                writeln!(w, "{},{},{}", fmt17(re), fmt17(im), fmt17(self.at(i, j)))?;
            }
        }
        Ok(())
    }

    /// Grid cells whose value exceeds all eight neighbours.
    pub fn local_maxima(&self) -> Vec<(usize, usize)> {
        let (nx, ny) = (self.re.len(), self.im.len());
        let mut out = Vec::new();
        for j in 1..ny.saturating_sub(1) {
            for i in 1..nx.saturating_sub(1) {
                let v = self.at(i, j);
                let mut peak = v > OVERFLOW_SENTINEL;
                for dj in [-1i64, 0, 1] {
                    for di in [-1i64, 0, 1] {
                        if (di, dj) != (0, 0) {
                            peak &= v > self.at((i as i64 + di) as usize, (j as i64 + dj) as usize);
                        }
                    }
                }
                if peak {
                    out.push((i, j));
                }
            }
        }
        out
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

pub fn contour_map(
    region: &Region,
    grid: (usize, usize),
    channel: Channel,
    x21: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<ContourMap> {
    let p = check_channel(channel, x21, params)?;
    let (nx, ny) = grid;
    if nx == 0 || ny == 0 || !(region.re_max > region.re_min && region.im_max > region.im_min) {
        return Err(Error::InvalidParams("empty contour region".into()));
    }
    let re = linspace(region.re_min, region.re_max, nx);
    let im = linspace(region.im_min, region.im_max, ny);
    let rows: Vec<Vec<Option<f64>>> = im
        .par_iter()
        .map(|&y| {
            re.iter()
                .map(|&x| {
                    eta_plus(C64::new(x, y), channel, x21, &p, quad)
                        .ok()
                        .map(|e| if e.norm() > 0.0 { -e.norm().ln() } else { f64::MAX })
                })
                .collect()
        })
        .collect();
    let overflow_cells = rows.iter().flatten().filter(|v| v.is_none()).count();
    let values = rows.into_iter().flatten().map(|v| v.unwrap_or(OVERFLOW_SENTINEL)).collect();
    Ok(ContourMap { re, im, values, overflow_cells })
}

/// Writes `sector,n,re,im,gamma,re_N,im_N`.
pub fn write_pole_csv<W: Write>(mut w: W, poles: &[ComplexEnergy]) -> io::Result<()> {
    writeln!(w, "sector,n,re,im,gamma,re_N,im_N")?;
    for e in poles {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            e.channel.tag(),
            e.lattice_index,
            fmt17(e.value.re),
            fmt17(e.value.im),
            fmt17(e.gamma),
            fmt17(e.normalization.re),
            fmt17(e.normalization.im)
        )?;
    }
    Ok(())
}

/// `ω₁ + Σ_k λV_k[e^{ikx₁}+σe^{ikx₂}]⟨k|φ_j⟩/√(2N_j)` assembled phase term by
/// phase term from the emitter positions, through the real-axis route.
/// At a pole this reproduces `z_j`.
pub fn collective_self_energy(
    z: C64,
    sector: SymmetrySector,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let p = params.validate_pair()?;
    let sigma = sector.sigma();
    let l2 = p.lambda * p.lambda;
    // |e^{ikx₁} + σe^{ikx₂}|² = 2 + σe^{ik(x₁−x₂)} + σe^{ik(x₂−x₁)}, identical for ±k.
    let pieces = [(2.0, 0.0), (sigma, p.x1 - p.x2), (sigma, p.x2 - p.x1)];
    let mut total = C64::new(p.omega1, 0.0);
    for (w, a) in pieces {
        check_exponent(a, z)?;
        total += continued_halfline_integral(|k| w * l2 * v2(k, &p) * (I * a * k).exp(), z, quad)?;
    }
    Ok(total)
}
