//! Bounce expansion of the symmetric-state survival amplitude.
//!
//! `η⁺_s = η⁺_{s1} − Δ` with `Δ(k) = −2πiλ²v(k)²e^{ikx₂₁}`. Expanding
//! `1/η⁺_s` in powers of `Δ/η⁺_{s1}` and taking residues at the zero `z_{s1}`
//! of `η⁺_{s1}` gives terms `f_n(t) = (1/n!)∂ⁿ[Δⁿe^{−ikt}]` that switch on at
//! `t = n·x₂₁`. Their untruncated sum is the Lagrange series of the root of
//! `k = z_{s1} + Δ(k)`, i.e. the collective pole contribution `N_s e^{−iz_s t}`.

use std::f64::consts::PI;
use std::io::{self, Write};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::greens::{self, ComplexEnergy, PhaseTerm, PoleSolver, OVERFLOW_LIMIT};
use crate::jet::Jet;
use crate::params::{Channel, ModelParams};
use crate::quad::{self, QuadratureSpec};

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn check_separation(x21: f64, params: &ModelParams) -> Result<ModelParams> {
    let p = params.validate()?;
    if !(x21 > 0.0 && x21.is_finite()) {
        return Err(Error::InvalidParams(format!("separation must be positive, got {x21}")));
    }
    Ok(p)
}

/// `η⁺_{s1}(k)`: the `+iε` pieces `2λ²v²(1+½e^{−ik′x₂₁})` are continued below
/// the axis, the `−iε` piece `λ²v²e^{ik′x₂₁}` is used as is.
pub fn eta_s1(k: C64, x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<C64> {
    let p = check_separation(x21, params)?;
    greens::form_factor_sq(k, &p)?;
    let l2 = p.lambda * p.lambda;
    let v2 = |q: C64| greens::v2(q, &p);
    let continued =
        greens::continued_phase_integral(v2, &[PhaseTerm::new(2.0 * l2, 0.0), PhaseTerm::new(l2, -x21)], k, quad)?;
    let lower = greens::lower_phase_integral(v2, &[PhaseTerm::new(l2, x21)], k, quad)?;
    Ok(k - p.omega1 - continued - lower)
}

/// `Δ(k) = −2πiλ²v(k)²e^{ikx₂₁}`.
pub fn delta_k(k: C64, x21: f64, params: &ModelParams) -> Result<C64> {
    let p = check_separation(x21, params)?;
    let exponent = -k.im * x21;
    if exponent > OVERFLOW_LIMIT {
        return Err(Error::Overflow { exponent, limit: OVERFLOW_LIMIT });
    }
    let v2 = greens::form_factor_sq(k, &p)?;
    Ok(-2.0 * PI * I * p.lambda * p.lambda * v2 * (I * k * x21).exp())
}

/// The zero of `η⁺_{s1}` below `ω₁`.
pub fn find_zs1(x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<ComplexEnergy> {
    let p = check_separation(x21, params)?;
    let seed = C64::new(p.omega1, -greens::golden_rule_rate(&p));
    let solver = PoleSolver::default();
    let root = greens::solve_root(|k| eta_s1(k, x21, &p, quad), seed, &solver, greens::derivative_step(x21))?;
    if root.z.im > solver.tol * root.z.norm().max(1.0) {
        return Err(Error::WrongBranch(root.z));
    }
    Ok(ComplexEnergy::new(root.z, Channel::Symmetric, 0, 1.0 / root.derivative, root.residual))
}

/// `z_{s1}` and everything needed to evaluate bounce terms.
#[derive(Clone, Debug, Serialize)]
pub struct BounceDecomposition {
    pub params: ModelParams,
    pub x21: f64,
    #[serde(skip)]
    pub quad: QuadratureSpec,
    pub z_s1: ComplexEnergy,
    /// `|z_{s1} − z₁| < λ²`.
    pub near_one_atom: bool,
    /// Largest term index tried by [`BounceDecomposition::resummed`].
    pub n_cap: usize,
    /// Relative size below which three consecutive terms end the resummation.
    pub tail_tol: f64,
}

/// Both sides of the resummation identity at one time.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Resummation {
    pub t: f64,
    pub series: C64,
    pub pole: C64,
    pub relative_discrepancy: f64,
    pub terms: usize,
}

impl BounceDecomposition {
    pub fn new(x21: f64, params: &ModelParams, quad: &QuadratureSpec) -> Result<Self> {
        let p = check_separation(x21, params)?;
        let z_s1 = find_zs1(x21, &p, quad)?;
        let z1 = greens::principal_pole(Channel::OneAtom, x21, &p, quad)?;
        Ok(Self {
            params: p,
            x21,
            quad: *quad,
            near_one_atom: (z_s1.value - z1.value).norm() < p.lambda * p.lambda,
            z_s1,
            n_cap: 64,
            tail_tol: 1e-15,
        })
    }

    /// Default jet order `⌊t/x₂₁⌋ + 12`.
    pub fn jet_order(&self, t: f64) -> usize {
        (t / self.x21).floor().max(0.0) as usize + 12
    }

    /// Jet of the rational factor `R(k) = Δ(k)e^{−ikx₂₁}` about `z_{s1}`.
    fn rational_jet(&self, order: usize) -> Result<Jet> {
        let p = &self.params;
        let c = self.z_s1.value;
        let k = Jet::variable(c, order);
        let r = k.scale(C64::new(1.0 / p.omega_m, 0.0));
        let denom = (&(&r * &r) + C64::new(1.0, 0.0)).powi(-2 * p.n_ff as i32)?;
        Ok((&k * &denom).scale(-2.0 * PI * I * p.lambda * p.lambda))
    }

    /// `f_n(t)` for `n = 0..count` with the jet order given.
    fn terms(&self, t: f64, count: usize, order: usize) -> Result<Vec<C64>> {
        if count > order + 1 {
            return Err(Error::JetOrder { order, requested: count - 1 });
        }
        let c = self.z_s1.value;
        let r = self.rational_jet(order)?;
        let mut power = Jet::constant(C64::new(1.0, 0.0), c, order);
        let mut out = Vec::with_capacity(count);
        for n in 0..count {
            // Δⁿe^{−ikt} = Rⁿ·e^{ik(n x₂₁ − t)}.
            let a = n as f64 * self.x21 - t;
            let exponent = a * c.im;
            if exponent > OVERFLOW_LIMIT {
                return Err(Error::Overflow { exponent, limit: OVERFLOW_LIMIT });
            }
            let e = Jet::exp_linear(I * a, c, n);
            out.push(power.product_coeff(&e, n)?);
            power = &power * &r;
        }
        Ok(out)
    }

    /// `f_n(t) = (1/n!)∂ⁿ[Δ(k)ⁿe^{−ikt}]` at `k = z_{s1}`.
    pub fn bounce_term(&self, n: usize, t: f64) -> Result<C64> {
        self.bounce_term_with_order(n, t, self.jet_order(t))
    }

    pub fn bounce_term_with_order(&self, n: usize, t: f64, order: usize) -> Result<C64> {
        Ok(self.terms(t, n + 1, order)?[n])
    }

    /// `I₀(t) = Σ_{n ≤ t/x₂₁} f_n(t)`.
    pub fn bounce_sum(&self, t: f64) -> Result<C64> {
        if t < 0.0 {
            return Err(Error::InvalidParams("negative time".into()));
        }
        let count = (t / self.x21).floor() as usize + 1;
        Ok(self.terms(t, count, self.jet_order(t))?.into_iter().sum())
    }

    /// Root of `k = z_{s1} + Δ(k)` nearest `z_{s1}` and `N_s = 1/(1 − Δ′)` there.
    pub fn collective_pole(&self) -> Result<(C64, C64)> {
        let (x, p) = (self.x21, &self.params);
        let f = |k: C64| Ok(k - self.z_s1.value - delta_k(k, x, p)?);
        let root = greens::solve_root(f, self.z_s1.value, &PoleSolver::default(), greens::derivative_step(x))?;
        Ok((root.z, 1.0 / root.derivative))
    }

    /// `Ĩ₀(t) = Σ_{n ≥ 0} f_n(t)` against `N_s e^{−iz_s t}`.
    pub fn resummed(&self, t: f64) -> Result<Resummation> {
        if t < 0.0 {
            return Err(Error::InvalidParams("negative time".into()));
        }
        let (zs, ns) = self.collective_pole()?;
        let terms = self.terms(t, self.n_cap + 1, self.n_cap + 4)?;
        let mut sum = C64::new(0.0, 0.0);
        let mut quiet = 0;
        let mut used = None;
        for (n, f) in terms.iter().enumerate() {
            sum += f;
            let small = f.norm() <= self.tail_tol * sum.norm();
            quiet = if small { quiet + 1 } else { 0 };
            if quiet == 3 {
                used = Some(n + 1);
                break;
            }
        }
        let Some(used) = used else {
            return Err(Error::SeriesTail { cap: self.n_cap, last: terms[self.n_cap].norm() });
        };
        let pole = ns * (-I * zs * t).exp();
        Ok(Resummation {
            t,
            series: sum,
            pole,
            relative_discrepancy: (sum - pole).norm() / pole.norm(),
            terms: used,
        })
    }

    /// Resummation check on a time grid; failures are recorded, not raised.
    pub fn resummation_report(&self, times: &[f64]) -> Result<ResummationReport> {
        let (zs, ns) = self.collective_pole()?;
        let exact = greens::principal_pole(Channel::Symmetric, self.x21, &self.params, &self.quad)?;
        let points: Vec<ResummationOutcome> = times
            .iter()
            .map(|&t| match self.resummed(t) {
                Ok(r) => ResummationOutcome { t, result: Some(r), error: None },
                Err(e) => ResummationOutcome { t, result: None, error: Some(e.to_string()) },
            })
            .collect();
        let max_discrepancy = points
            .iter()
            .map(|p| p.result.map_or(f64::INFINITY, |r| r.relative_discrepancy))
            .fold(0.0, f64::max);
        Ok(ResummationReport {
            x21: self.x21,
            z_s1: self.z_s1.value,
            z_s: zs,
            n_s: ns,
            z_s_exact: exact.value,
            n_s_exact: exact.normalization,
            lagrange_parameter: self.lagrange_parameter()?,
            max_discrepancy,
            points,
        })
    }

    /// `x₂₁·|Δ(z_{s1})|`: the series converges for values below `1/e`
    /// when `R` varies slowly.
    pub fn lagrange_parameter(&self) -> Result<f64> {
        Ok(self.x21 * delta_k(self.z_s1.value, self.x21, &self.params)?.norm())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ResummationOutcome {
    pub t: f64,
    pub result: Option<Resummation>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ResummationReport {
    pub x21: f64,
    pub z_s1: C64,
    pub z_s: C64,
    pub n_s: C64,
    pub z_s_exact: C64,
    pub n_s_exact: C64,
    pub lagrange_parameter: f64,
    pub max_discrepancy: f64,
    pub points: Vec<ResummationOutcome>,
}

/// Nodes and weights of `ρ(k) = −(1/π)Im(1/η⁺(k))` on `[0, cutoff]`, fine
/// enough to integrate `ρ(k)e^{−ikt}` for every `t ≤ t_max`.
#[derive(Clone, Debug)]
pub struct SpectralGrid {
    pub channel: Channel,
    pub x21: f64,
    pub t_max: f64,
    pub cutoff: f64,
    /// `(k, w·ρ(k))`.
    nodes: Vec<(f64, f64)>,
    pub panels: usize,
    /// Kronrod-minus-Gauss estimate for `∫ρ`.
    pub error: f64,
}

/// Upper end of the spectral integral in units of `ω_M`.
pub const SPECTRAL_CUTOFF: f64 = 12.0;
const DENSITY_TOL: f64 = 1e-10;
const MAX_SPECTRAL_PANELS: usize = 200_000;

fn spectral_density(k: f64, channel: Channel, x21: f64, p: &ModelParams, quad: &QuadratureSpec) -> Result<f64> {
    if k <= 0.0 {
        return Ok(0.0);
    }
    let eta = greens::eta_plus(C64::new(k, 0.0), channel, x21, p, quad)?;
    Ok(-(1.0 / eta).im / PI)
}

struct SpectralPanel {
    a: f64,
    b: f64,
    nodes: Vec<(f64, f64)>,
    error: f64,
}

fn spectral_panel(a: f64, b: f64, channel: Channel, x21: f64, p: &ModelParams, q: &QuadratureSpec) -> Result<SpectralPanel> {
    let rule = quad::gk21_nodes(a, b);
    let mut nodes = Vec::with_capacity(21);
    let (mut kron, mut gauss) = (0.0, 0.0);
    for (x, wk, wg) in rule {
        let rho = spectral_density(x, channel, x21, p, q)?;
        kron += wk * rho;
        gauss += wg * rho;
        nodes.push((x, wk * rho));
    }
    Ok(SpectralPanel { a, b, nodes, error: (kron - gauss).abs() })
}

/// Builds the spectral grid for channel `channel`.
pub fn spectral_grid(
    channel: Channel,
    x21: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
    t_max: f64,
) -> Result<SpectralGrid> {
    let p = params.validate()?;
    if channel != Channel::OneAtom {
        check_separation(x21, &p)?;
    }
    if !(t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParams(format!("t_max must be finite and non-negative, got {t_max}")));
    }
    let cutoff = (SPECTRAL_CUTOFF * p.omega_m).min(quad.cutoff);
    let width = (PI / (4.0 * t_max.max(1e-9))).min(0.05 * p.omega1);
    let count = (cutoff / width).ceil() as usize;
    let mut breaks: Vec<f64> = (0..=count).map(|i| cutoff * i as f64 / count as f64).collect();
    breaks.dedup();
    let mut todo: Vec<(f64, f64)> = breaks.windows(2).map(|w| (w[0], w[1])).collect();
    let mut done: Vec<SpectralPanel> = Vec::new();
    while !todo.is_empty() {
        if done.len() + todo.len() > MAX_SPECTRAL_PANELS {
            let error = done.iter().map(|p| p.error).sum();
            return Err(Error::Quadrature { error, panels: done.len() + todo.len() });
        }
        let evaluated = todo
            .par_iter()
            .map(|&(a, b)| spectral_panel(a, b, channel, x21, &p, quad))
            .collect::<Result<Vec<_>>>()?;
        todo.clear();
        for panel in evaluated {
            let mid = 0.5 * (panel.a + panel.b);
            let splittable = mid > panel.a && mid < panel.b && panel.b - panel.a > 1e-12;
            if panel.error > DENSITY_TOL * (panel.b - panel.a) && splittable {
                todo.push((panel.a, mid));
                todo.push((mid, panel.b));
            } else {
                done.push(panel);
            }
        }
    }
    done.sort_by(|x, y| x.a.total_cmp(&y.a));
    let error = done.iter().map(|p| p.error).sum();
    let panels = done.len();
    let nodes = done.into_iter().flat_map(|p| p.nodes).collect();
    Ok(SpectralGrid { channel, x21, t_max, cutoff, nodes, panels, error })
}

impl SpectralGrid {
    /// `I(t) = ∫ρ(k)e^{−ikt}dk`.
    pub fn amplitude(&self, t: f64) -> Result<C64> {
        if t < 0.0 || t > self.t_max * (1.0 + 1e-12) {
            return Err(Error::InvalidParams(format!("t = {t} outside the grid range [0, {}]", self.t_max)));
        }
        Ok(self.nodes.iter().map(|&(k, w)| C64::from_polar(w, -k * t)).sum())
    }

    pub fn amplitude_series(&self, times: &[f64]) -> Result<AmplitudeSeries> {
        let amplitudes = times.par_iter().map(|&t| self.amplitude(t)).collect::<Result<Vec<_>>>()?;
        Ok(AmplitudeSeries { times: times.to_vec(), amplitudes })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

/// `I(t) = −(1/π)∫₀^∞ Im(1/η⁺(k)) e^{−ikt} dk` for one time.
pub fn amplitude_quadrature(
    t: f64,
    channel: Channel,
    x21: f64,
    params: &ModelParams,
    quad: &QuadratureSpec,
) -> Result<C64> {
    spectral_grid(channel, x21, params, quad, t)?.amplitude(t)
}

/// Complex amplitudes on a time grid.
#[derive(Clone, Debug, Serialize)]
pub struct AmplitudeSeries {
    pub times: Vec<f64>,
    pub amplitudes: Vec<C64>,
}

impl AmplitudeSeries {
    /// `½|I(t)|²`, the one-atom survival for a symmetric or antisymmetric start.
    pub fn half_abs2(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| 0.5 * a.norm_sqr()).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        crate::output::write_float_csv(
            w,
            "t,re_I,im_I,abs2_half",
            self.times.iter().zip(&self.amplitudes).map(|(&t, a)| [t, a.re, a.im, 0.5 * a.norm_sqr()]),
        )
    }
}

/// `I₀(t)` and `|I₀|²/2` from the θ-truncated bounce sum.
pub fn bounce_series(decomposition: &BounceDecomposition, times: &[f64]) -> Result<AmplitudeSeries> {
    let amplitudes = times.par_iter().map(|&t| decomposition.bounce_sum(t)).collect::<Result<Vec<_>>>()?;
    Ok(AmplitudeSeries { times: times.to_vec(), amplitudes })
}
