//! Two cavities on an electron waveguide.
//!
//! The trapped cavity mode `ξ⁰ = m₀² + n₀²/D²` plays the emitter level and
//! the lead channels `E_{k,l} = k²/π² + l²/W²` the field. With one open
//! channel the collective poles obey the two-emitter equation with the lead
//! dispersion in place of `|k|`, and a real pole appears when
//! `k₀(ξ̃)·x₂₁ = nπ`.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greens::{self, ComplexEnergy, PhaseTerm, PoleSolver};
use crate::params::{Channel, SymmetrySector};
use crate::quad::{self, QuadratureSpec};

/// `ξ^{m,n} = m² + n²/D²`.
pub fn cavity_energy(m: u32, n: u32, d: f64) -> f64 {
    let (m, n) = (m as f64, n as f64);
    m * m + n * n / (d * d)
}

/// `E_{k,l} = k²/π² + l²/W²`.
pub fn lead_energy(k: f64, l: u32, w: f64) -> f64 {
    let l = l as f64;
    k * k / (PI * PI) + l * l / (w * w)
}

/// `k₀(E) = π√(E − E_{0,l})` on the principal branch.
pub fn lead_momentum(e: C64, l: u32, w: f64) -> C64 {
    PI * (e - lead_energy(0.0, l, w)).sqrt()
}

/// Smooth single-peak coupling `|v⁰_{k,l}|² = g₀²·k²/(1+(k/k_c)²)²·r^{l−1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coupling {
    pub g0: f64,
    pub k_cut: f64,
    /// Relative weight of each further channel.
    pub channel_ratio: f64,
}

impl Default for Coupling {
    fn default() -> Self {
        Self { g0: 0.05, k_cut: 5.0, channel_ratio: 0.1 }
    }
}

impl Coupling {
    /// `|v⁰_{k,l}|²` continued analytically in `k`.
    pub fn strength_sq(&self, k: C64, l: u32) -> C64 {
        let r = k / self.k_cut;
        let d = 1.0 + r * r;
        self.g0 * self.g0 * k * k / (d * d) * self.channel_ratio.powi(l as i32 - 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveguideParams {
    /// Cavity vertical dimension `D`.
    pub d_cavity: f64,
    /// Lead vertical dimension `W`.
    pub w_lead: f64,
    pub m0: u32,
    pub n0: u32,
    pub x1: f64,
    pub x2: f64,
    pub l_max: u32,
    pub coupling: Coupling,
}

impl Default for WaveguideParams {
    fn default() -> Self {
        Self { d_cavity: 1.0, w_lead: 1.0, m0: 1, n0: 1, x1: 0.0, x2: 1.0, l_max: 10, coupling: Coupling::default() }
    }
}

impl WaveguideParams {
    pub fn xi0(&self) -> f64 {
        cavity_energy(self.m0, self.n0, self.d_cavity)
    }

    /// Open-channel threshold `E_{0,1}`.
    pub fn threshold(&self) -> f64 {
        lead_energy(0.0, 1, self.w_lead)
    }

    /// Second threshold `E_{0,2}`, the top of the single-channel window.
    pub fn closed_threshold(&self) -> f64 {
        lead_energy(0.0, 2, self.w_lead)
    }

    pub fn validate(self) -> Result<Self> {
        let finite = [self.d_cavity, self.w_lead, self.x1, self.x2, self.coupling.g0, self.coupling.k_cut]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.d_cavity <= 0.0 || self.w_lead <= 0.0 || self.coupling.k_cut <= 0.0 {
            return Err(Error::Waveguide("dimensions and cutoff must be finite and positive".into()));
        }
        if self.m0 == 0 || self.n0 == 0 {
            return Err(Error::Waveguide("cavity mode indices start at 1".into()));
        }
        if self.l_max < 2 {
            return Err(Error::Waveguide("at least one closed channel must be kept (l_max ≥ 2)".into()));
        }
        if !(0.0..1.0).contains(&self.coupling.channel_ratio) {
            return Err(Error::Waveguide("channel ratio must lie in [0, 1)".into()));
        }
        let xi0 = self.xi0();
        if !(self.threshold() < xi0 && xi0 < self.closed_threshold()) {
            return Err(Error::Waveguide(format!(
                "ξ⁰ = {xi0} is outside the single-channel window ({}, {})",
                self.threshold(),
                self.closed_threshold()
            )));
        }
        Ok(self)
    }
}

fn parity_ok(n: u32, sector: SymmetrySector) -> bool {
    match sector {
        SymmetrySector::Symmetric => n % 2 == 1,
        SymmetrySector::Antisymmetric => n % 2 == 0 && n > 0,
    }
}

/// `g(ξ) = n/√(ξ − E_{0,1})`, where `1 + σ cos(k₀(ξ)x₂₁) = 0`.
pub fn trap_distance(xi: f64, n: u32, sector: SymmetrySector, w: f64) -> Result<f64> {
    if !parity_ok(n, sector) {
        return Err(Error::Waveguide(format!(
            "n = {n} does not match the {} sector (odd for s, even and positive for a)",
            sector.tag()
        )));
    }
    let gap = xi - lead_energy(0.0, 1, w);
    if !(gap > 0.0) {
        return Err(Error::Waveguide(format!("energy {xi} is below the open-channel threshold")));
    }
    Ok(n as f64 / gap.sqrt())
}

/// `η_wg(z) = z − ξ⁰ − 2Σ_l ∫₀^∞ |v⁰_{k,l}|²(1+σcos kx₂₁)/(z−E_{k,l}) dk`,
/// continued through the open channel only.
pub fn eta_wg(z: C64, sector: SymmetrySector, x21: f64, wg: &WaveguideParams, quad: &QuadratureSpec) -> Result<C64> {
    let s = sector.sigma();
    let w = wg.w_lead;
    let c = wg.coupling;
    if z.re >= wg.closed_threshold() {
        return Err(Error::Waveguide(format!("Re z = {} reaches the second channel", z.re)));
    }
    // 1/(z−E_{k,l}) = π²/((k₀−k)(k₀+k)). The open channel keeps the branch
    // continued from above; closed ones take k₀ = iπ√(E_{0,l}−z), off every ray.
    let terms = [PhaseTerm::new(1.0, 0.0), PhaseTerm::new(0.5 * s, x21), PhaseTerm::new(0.5 * s, -x21)];
    let channel = |l: u32, k0: C64| {
        greens::continued_phase_integral(|k| c.strength_sq(k, l) * PI * PI / (k0 + k), &terms, k0, quad)
    };
    let open = channel(1, lead_momentum(z, 1, w))?;
    let mut closed = C64::new(0.0, 0.0);
    for l in 2..=wg.l_max {
        closed += channel(l, C64::i() * PI * (lead_energy(0.0, l, w) - z).sqrt())?;
    }
    Ok(z - wg.xi0() - 2.0 * (open + closed))
}

/// Collective pole of the double cavity at separation `x21`.
pub fn collective_pole_wg(
    wg: &WaveguideParams,
    sector: SymmetrySector,
    x21: f64,
    quad: &QuadratureSpec,
) -> Result<ComplexEnergy> {
    let wg = wg.validate()?;
    if !(x21 > 0.0 && x21.is_finite()) {
        return Err(Error::InvalidParams(format!("separation must be positive, got {x21}")));
    }
    let solver = PoleSolver::default();
    let root = greens::solve_root(
        |z| eta_wg(z, sector, x21, &wg, quad),
        C64::new(wg.xi0(), 0.0),
        &solver,
        greens::derivative_step(x21),
    )?;
    if root.z.im > solver.tol * root.z.norm().max(1.0) {
        return Err(Error::WrongBranch(root.z));
    }
    Ok(ComplexEnergy::new(root.z, Channel::from(sector), 0, 1.0 / root.derivative, root.residual))
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct Existence {
    pub margin: f64,
    pub holds: bool,
}

/// `ξ⁰ − E_{0,1} − 2∫Σ_l |v⁰_{k,l}|²/(E_{k,l} − E_{0,1}) dk`; positive margins guarantee a trap.
pub fn existence_check(wg: &WaveguideParams, quad: &QuadratureSpec) -> Result<Existence> {
    let wg = wg.validate()?;
    let e01 = wg.threshold();
    let mut integral = 0.0;
    for l in 1..=wg.l_max {
        integral += quad::integrate_halfline_real(
            |k| {
                if l == 1 {
                    // E_{k,1} − E_{0,1} = k²/π², cancelled analytically against the k² coupling.
                    let r = k / wg.coupling.k_cut;
                    let g = wg.coupling.g0;
                    g * g * PI * PI / ((1.0 + r * r) * (1.0 + r * r))
                } else {
                    wg.coupling.strength_sq(C64::new(k, 0.0), l).re / (lead_energy(k, l, wg.w_lead) - e01)
                }
            },
            quad,
        )?;
    }
    let margin = wg.xi0() - e01 - 2.0 * integral;
    Ok(Existence { margin, holds: margin > 0.0 })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrapSolution {
    pub sector: SymmetrySector,
    pub n: u32,
    pub xi0: f64,
    pub xi_tilde: f64,
    pub x21_trap: f64,
    /// `|Re η_wg(ξ̃)|` at the trap distance.
    pub residual: f64,
    pub iterations: usize,
}

/// Solves `ξ̃ = ξ⁰ + 2Σ_l PV∫|v⁰_{k,l}|²(1+σcos(k·g(ξ̃)))/(ξ̃−E_{k,l}) dk` by damped fixed point.
pub fn solve_trap(wg: &WaveguideParams, n: u32, sector: SymmetrySector, quad: &QuadratureSpec) -> Result<TrapSolution> {
    let wg = wg.validate()?;
    if !parity_ok(n, sector) {
        return Err(Error::Waveguide(format!("n = {n} has the wrong parity for the {} sector", sector.tag())));
    }
    let existence = existence_check(&wg, quad)?;
    if !existence.holds {
        return Err(Error::Waveguide(format!("existence margin {} is not positive", existence.margin)));
    }
    let (lo, hi) = (wg.threshold(), wg.closed_threshold());
    let (damping, tol, max_iter) = (0.5, 1e-13, 300);
    let mut xi = wg.xi0();
    for it in 0..max_iter {
        let x = trap_distance(xi, n, sector, wg.w_lead)?;
        let g = xi - eta_wg(C64::new(xi, 0.0), sector, x, &wg, quad)?.re;
        let next = xi + damping * (g - xi);
        if !(next > lo && next < hi) {
            return Err(Error::FixedPoint(format!("iterate {next} left the single-channel window ({lo}, {hi})")));
        }
        if (next - xi).abs() < tol * next.abs().max(1.0) {
            let x21_trap = trap_distance(next, n, sector, wg.w_lead)?;
            let residual = eta_wg(C64::new(next, 0.0), sector, x21_trap, &wg, quad)?.re.abs();
            return Ok(TrapSolution { sector, n, xi0: wg.xi0(), xi_tilde: next, x21_trap, residual, iterations: it + 1 });
        }
        xi = next;
    }
    Err(Error::FixedPoint(format!("no convergence after {max_iter} iterations")))
}

/// Summary of one trap solve with its closed-loop pole check.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct TrapReport {
    pub sector: SymmetrySector,
    pub n: u32,
    pub xi0: f64,
    pub xi_tilde: f64,
    pub x21_trap: f64,
    /// `γ` of the collective pole at `x21_trap`.
    pub gamma_residual: f64,
    pub margin: f64,
}

pub fn trap_report(wg: &WaveguideParams, n: u32, sector: SymmetrySector, quad: &QuadratureSpec) -> Result<TrapReport> {
    let trap = solve_trap(wg, n, sector, quad)?;
    let pole = collective_pole_wg(wg, sector, trap.x21_trap, quad)?;
    Ok(TrapReport {
        sector,
        n,
        xi0: trap.xi0,
        xi_tilde: trap.xi_tilde,
        x21_trap: trap.x21_trap,
        gamma_residual: pole.gamma,
        margin: existence_check(wg, quad)?.margin,
    })
}
