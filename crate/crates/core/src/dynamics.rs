//! Finite-box discretisation of the two-emitter Hamiltonian and its exact
//! evolution by eigen-expansion.
//!
//! Modes are `k_m = 2πm/L`, `m = −M..M`, with couplings
//! `λ√(2π/L)·v(|k_m|)e^{±ik_m x_i}`. Each `±k` pair splits into a standing
//! wave even about the midpoint of the emitters, which couples only to `|s⟩`,
//! and an odd one, which couples only to `|a⟩`. The two parity blocks are
//! real symmetric and together represent the full Hamiltonian exactly.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::greens::{self, ComplexEnergy, PhaseTerm};
use crate::linalg::{self, Eigen};
use crate::output::write_float_csv;
use crate::params::{Channel, ModelParams, SymmetrySector};
use crate::quad::QuadratureSpec;

/// Largest block dimension accepted by [`build_lattice`].
pub const MAX_BLOCK_DIM: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSpec {
    pub box_length: f64,
    /// Odd number of modes `2M+1`.
    pub n_modes: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        Self { box_length: 500.0, n_modes: 2501 }
    }
}

impl LatticeSpec {
    pub fn half(&self) -> usize {
        (self.n_modes - 1) / 2
    }

    pub fn momentum(&self, m: i64) -> f64 {
        2.0 * PI * m as f64 / self.box_length
    }

    /// Evolution times beyond this see the periodic images.
    pub fn wrap_horizon(&self) -> f64 {
        0.5 * self.box_length
    }
}

/// Which representation of the Hamiltonian to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeBasis {
    /// One parity block only.
    Sector(SymmetrySector),
    /// Both parity blocks.
    Parity,
    /// The complex Hermitian matrix over `|1⟩, |2⟩, |k_m⟩`.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BlockKind {
    Sector(SymmetrySector),
    Full,
}

#[derive(Clone, Debug)]
pub struct Block {
    pub kind: BlockKind,
    pub dim: usize,
    /// Row-major Hermitian matrix.
    pub matrix: Vec<C64>,
    pub eigen: Option<Eigen<C64>>,
    /// Momentum of each row; `None` for emitter rows.
    momenta: Vec<Option<f64>>,
    /// `(row, ⟨1|row⟩, ⟨2|row⟩)` for the emitter rows.
    atom_rows: Vec<(usize, f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct LatticeModel {
    pub params: ModelParams,
    pub spec: LatticeSpec,
    pub basis: LatticeBasis,
    pub blocks: Vec<Block>,
}

fn coupling_amplitude(p: &ModelParams, spec: &LatticeSpec, k: f64) -> f64 {
    // λV_k with V_k = √(2π/L)·v(|k|).
    (2.0 * PI / spec.box_length).sqrt() * p.coupling_sq(k.abs()).sqrt()
}

fn sector_block(p: &ModelParams, spec: &LatticeSpec, sector: SymmetrySector) -> Block {
    let m = spec.half();
    let with_zero = sector == SymmetrySector::Symmetric;
    let dim = 1 + m + usize::from(with_zero);
    let d = p.x2 - p.x1;
    let mut matrix = vec![C64::new(0.0, 0.0); dim * dim];
    let mut momenta = vec![None; dim];
    matrix[0] = C64::new(p.omega1, 0.0);
    for r in 1..=m {
        let k = spec.momentum(r as i64);
        let g = 2.0
            * coupling_amplitude(p, spec, k)
            * match sector {
                SymmetrySector::Symmetric => (0.5 * k * d).cos(),
                SymmetrySector::Antisymmetric => (0.5 * k * d).sin(),
            };
        matrix[r * dim + r] = C64::new(k, 0.0);
        matrix[r] = C64::new(g, 0.0);
        matrix[r * dim] = C64::new(g, 0.0);
        momenta[r] = Some(k);
    }
    if with_zero {
        // The k = 0 mode: v(0) = 0, so it stays uncoupled at energy 0.
        momenta[dim - 1] = Some(0.0);
    }
    let atom_rows = vec![match sector {
        SymmetrySector::Symmetric => (0, FRAC_1_SQRT_2, FRAC_1_SQRT_2),
        SymmetrySector::Antisymmetric => (0, FRAC_1_SQRT_2, -FRAC_1_SQRT_2),
    }];
    Block { kind: BlockKind::Sector(sector), dim, matrix, eigen: None, momenta, atom_rows }
}

fn full_block(p: &ModelParams, spec: &LatticeSpec) -> Block {
    let m = spec.half() as i64;
    let dim = spec.n_modes + 2;
    let mut matrix = vec![C64::new(0.0, 0.0); dim * dim];
    let mut momenta = vec![None; dim];
    matrix[0] = C64::new(p.omega1, 0.0);
    matrix[dim + 1] = C64::new(p.omega1, 0.0);
    for (r, mi) in (2..dim).zip(-m..=m) {
        let k = spec.momentum(mi);
        let g = coupling_amplitude(p, spec, k);
        matrix[r * dim + r] = C64::new(k.abs(), 0.0);
        for (atom, x) in [(0usize, p.x1), (1usize, p.x2)] {
            let h = g * C64::new(0.0, k * x).exp();
            matrix[atom * dim + r] = h;
            matrix[r * dim + atom] = h.conj();
        }
        momenta[r] = Some(k);
    }
    let atom_rows = vec![(0, 1.0, 0.0), (1, 0.0, 1.0)];
    Block { kind: BlockKind::Full, dim, matrix, eigen: None, momenta, atom_rows }
}

/// Assembles the box Hamiltonian.
pub fn build_lattice(params: &ModelParams, spec: &LatticeSpec, basis: LatticeBasis) -> Result<LatticeModel> {
    let p = params.validate_pair()?;
    if spec.n_modes < 3 || spec.n_modes % 2 == 0 {
        return Err(Error::Lattice(format!("mode count must be odd and at least 3, got {}", spec.n_modes)));
    }
    if !(spec.box_length > 2.0 * p.x21()) {
        return Err(Error::Lattice(format!(
            "box length {} must exceed twice the separation {}",
            spec.box_length,
            p.x21()
        )));
    }
    let largest = match basis {
        LatticeBasis::Full => spec.n_modes + 2,
        _ => spec.half() + 2,
    };
    if largest > MAX_BLOCK_DIM {
        return Err(Error::Lattice(format!("block dimension {largest} exceeds the memory budget {MAX_BLOCK_DIM}")));
    }
    let blocks = match basis {
        LatticeBasis::Sector(s) => vec![sector_block(&p, spec, s)],
        LatticeBasis::Parity => SymmetrySector::BOTH.iter().map(|&s| sector_block(&p, spec, s)).collect(),
        LatticeBasis::Full => vec![full_block(&p, spec)],
    };
    Ok(LatticeModel { params: p, spec: *spec, basis, blocks })
}

fn diagonalize_block(b: &Block) -> Result<Eigen<C64>> {
    match b.kind {
        BlockKind::Sector(_) => {
            let real = b.matrix.iter().map(|z| z.re).collect();
            let e = linalg::symmetric_eigen(real, b.dim)?;
            Ok(Eigen { values: e.values, vectors: e.vectors.into_iter().map(|x| C64::new(x, 0.0)).collect(), n: e.n })
        }
        BlockKind::Full => linalg::hermitian_eigen(b.matrix.clone(), b.dim),
    }
}

/// Computes the spectral decomposition of every block.
pub fn diagonalize(mut model: LatticeModel) -> Result<LatticeModel> {
    let eig: Vec<Result<Eigen<C64>>> = model.blocks.par_iter().map(diagonalize_block).collect();
    for (b, e) in model.blocks.iter_mut().zip(eig) {
        b.eigen = Some(e?);
    }
    Ok(model)
}

/// Initial emitter amplitudes `c₁|1⟩ + c₂|2⟩`; the field starts empty.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicState {
    pub c1: C64,
    pub c2: C64,
}

impl AtomicState {
    pub fn atom1() -> Self {
        Self { c1: C64::new(1.0, 0.0), c2: C64::new(0.0, 0.0) }
    }

    pub fn atom2() -> Self {
        Self { c1: C64::new(0.0, 0.0), c2: C64::new(1.0, 0.0) }
    }

    pub fn sector(s: SymmetrySector) -> Self {
        let h = FRAC_1_SQRT_2;
        Self { c1: C64::new(h, 0.0), c2: C64::new(s.sigma() * h, 0.0) }
    }

    /// `"1"`, `"2"`, `"s"` or `"a"`.
    pub fn from_label(label: &str) -> Result<Self> {
        match label {
            "1" => Ok(Self::atom1()),
            "2" => Ok(Self::atom2()),
            "s" => Ok(Self::sector(SymmetrySector::Symmetric)),
            "a" => Ok(Self::sector(SymmetrySector::Antisymmetric)),
            other => Err(Error::InvalidParams(format!("unknown initial state {other:?}"))),
        }
    }
}

/// `e^{−iHt}` applied to an initial state, block by block.
#[derive(Clone, Debug)]
pub struct EvolvedState {
    pub t: f64,
    pub blocks: Vec<Vec<C64>>,
    /// Set when `t` is past the wrap horizon `L/2`.
    pub warning: Option<String>,
}

impl LatticeModel {
    fn eigen<'a>(&self, b: &'a Block) -> Result<&'a Eigen<C64>> {
        b.eigen.as_ref().ok_or_else(|| Error::Lattice("model has not been diagonalized".into()))
    }

    fn initial_rows(&self, b: &Block, init: &AtomicState) -> Vec<(usize, C64)> {
        b.atom_rows.iter().map(|&(r, p1, p2)| (r, p1 * init.c1 + p2 * init.c2)).collect()
    }

    fn check_initial(&self, init: &AtomicState) -> Result<()> {
        let norm = init.c1.norm_sqr() + init.c2.norm_sqr();
        let covered: f64 = self
            .blocks
            .iter()
            .flat_map(|b| self.initial_rows(b, init))
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if (covered - norm).abs() > 1e-12 * norm.max(1.0) {
            return Err(Error::Lattice("initial state has weight outside the assembled sector".into()));
        }
        Ok(())
    }

    /// Spectral weights `⟨u_j|ψ₀⟩` per block.
    fn coefficients(&self, init: &AtomicState) -> Result<Vec<Vec<C64>>> {
        self.check_initial(init)?;
        self.blocks
            .iter()
            .map(|b| {
                let e = self.eigen(b)?;
                let rows = self.initial_rows(b, init);
                Ok((0..e.n)
                    .map(|j| {
                        let v = e.vector(j);
                        rows.iter().map(|&(r, a)| v[r].conj() * a).sum()
                    })
                    .collect())
            })
            .collect()
    }

    fn wrap_warning(&self, t: f64) -> Option<String> {
        (t >= self.spec.wrap_horizon())
            .then(|| format!("t = {t} is beyond the wrap horizon L/2 = {}", self.spec.wrap_horizon()))
    }

    /// `e^{−iHt}|ψ₀⟩` with every component.
    pub fn evolve(&self, init: &AtomicState, t: f64) -> Result<EvolvedState> {
        let coeffs = self.coefficients(init)?;
        let mut out = Vec::with_capacity(self.blocks.len());
        for (b, c) in self.blocks.iter().zip(&coeffs) {
            let e = self.eigen(b)?;
            let mut psi = vec![C64::new(0.0, 0.0); e.n];
            for j in 0..e.n {
                let w = c[j] * C64::from_polar(1.0, -e.values[j] * t);
                if w == C64::new(0.0, 0.0) {
                    continue;
                }
                for (x, v) in psi.iter_mut().zip(e.vector(j)) {
                    *x += w * v;
                }
            }
            out.push(psi);
        }
        Ok(EvolvedState { t, blocks: out, warning: self.wrap_warning(t) })
    }

    /// `(⟨1|ψ⟩, ⟨2|ψ⟩)`.
    pub fn atom_amplitudes(&self, state: &EvolvedState) -> (C64, C64) {
        let mut a = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (b, psi) in self.blocks.iter().zip(&state.blocks) {
            for &(r, p1, p2) in &b.atom_rows {
                a.0 += p1 * psi[r];
                a.1 += p2 * psi[r];
            }
        }
        a
    }

    /// `Σ_k |⟨k|ψ⟩|²`.
    pub fn field_norm(&self, state: &EvolvedState) -> f64 {
        self.blocks
            .iter()
            .zip(&state.blocks)
            .map(|(b, psi)| {
                psi.iter().zip(&b.momenta).filter(|(_, k)| k.is_some()).map(|(a, _)| a.norm_sqr()).sum::<f64>()
            })
            .sum()
    }

    /// `⟨ψ(x)|state⟩` with `⟨ψ(x)| = Σ_{k≠0} (2|k|L)^{−1/2} e^{ikx}⟨k|`.
    pub fn field_amplitude(&self, state: &EvolvedState, x: f64) -> C64 {
        let l = self.spec.box_length;
        let xc = 0.5 * (self.params.x1 + self.params.x2);
        let mut total = C64::new(0.0, 0.0);
        for (b, psi) in self.blocks.iter().zip(&state.blocks) {
            for (a, k) in psi.iter().zip(&b.momenta) {
                let Some(k) = *k else { continue };
                if k == 0.0 {
                    continue;
                }
                let norm = (2.0 * k.abs() * l).sqrt().recip();
                let w = match b.kind {
                    BlockKind::Full => C64::from_polar(norm, k * x),
                    BlockKind::Sector(SymmetrySector::Symmetric) => {
                        C64::new(2f64.sqrt() * norm * (k * (x - xc)).cos(), 0.0)
                    }
                    BlockKind::Sector(SymmetrySector::Antisymmetric) => {
                        C64::new(-(2f64.sqrt()) * norm * (k * (x - xc)).sin(), 0.0)
                    }
                };
                total += w * a;
            }
        }
        total
    }

    /// Trace and Frobenius-norm reconstruction errors, relative to `‖H‖_F`.
    pub fn spectral_residuals(&self) -> Result<(f64, f64)> {
        let mut trace_err: f64 = 0.0;
        let mut frob_err: f64 = 0.0;
        for b in &self.blocks {
            let e = self.eigen(b)?;
            let n = b.dim;
            let norm = b.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let trace: f64 = (0..n).map(|i| b.matrix[i * n + i].re).sum();
            trace_err = trace_err.max((trace - e.values.iter().sum::<f64>()).abs() / norm);
            let lambda_sq: f64 = e.values.iter().map(|v| v * v).sum();
            frob_err = frob_err.max((norm - lambda_sq.sqrt()).abs() / norm);
        }
        Ok((trace_err, frob_err))
    }

    /// `max |⟨u_i|u_j⟩ − δ_ij|` over every block.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for b in &self.blocks {
            let e = self.eigen(b)?;
            let defect = (0..e.n)
                .into_par_iter()
                .map(|i| {
                    let vi = e.vector(i);
                    (0..e.n)
                        .map(|j| {
                            let dot: C64 = vi.iter().zip(e.vector(j)).map(|(a, b)| a.conj() * b).sum();
                            (dot - if i == j { 1.0 } else { 0.0 }).norm()
                        })
                        .fold(0.0, f64::max)
                })
                .reduce(|| 0.0, f64::max);
            worst = worst.max(defect);
        }
        Ok(worst)
    }

    /// `|⟨1|e^{−iHt}|ψ₀⟩|²` on a time grid, `O(n)` per time.
    pub fn survival_probability(&self, init: &AtomicState, times: &[f64]) -> Result<TimeSeries> {
        check_grid(times)?;
        let coeffs = self.coefficients(init)?;
        // ⟨1|u_j⟩⟨u_j|ψ₀⟩ per eigenpair.
        let mut weights: Vec<(f64, C64)> = Vec::new();
        for (b, c) in self.blocks.iter().zip(&coeffs) {
            let e = self.eigen(b)?;
            for j in 0..e.n {
                let v = e.vector(j);
                let proj: C64 = b.atom_rows.iter().map(|&(r, p1, _)| p1 * v[r]).sum();
                weights.push((e.values[j], proj * c[j]));
            }
        }
        let values = times
            .par_iter()
            .map(|&t| weights.iter().map(|&(w, c)| c * C64::from_polar(1.0, -w * t)).sum::<C64>().norm_sqr())
            .collect();
        let mut series = TimeSeries::new("P1", times.to_vec(), values);
        if let Some(w) = times.last().and_then(|&t| self.wrap_warning(t)) {
            series.warnings.push(w);
        }
        Ok(series)
    }

    /// `P(x,t) = |⟨ψ(x)|e^{−iHt}|ψ₀⟩|²`.
    pub fn field_intensity(&self, init: &AtomicState, xs: &[f64], t: f64) -> Result<FieldProfile> {
        let state = self.evolve(init, t)?;
        let intensity = xs.par_iter().map(|&x| self.field_amplitude(&state, x).norm_sqr()).collect();
        Ok(FieldProfile { t, positions: xs.to_vec(), intensity })
    }
}

/// Convenience wrapper: build and diagonalize.
pub fn diagonalized_lattice(params: &ModelParams, spec: &LatticeSpec, basis: LatticeBasis) -> Result<LatticeModel> {
    diagonalize(build_lattice(params, spec, basis)?)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::InvalidParams("empty time grid".into()));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParams("time grid must be finite and strictly increasing".into()));
    }
    Ok(())
}

/// Real-valued series on a strictly increasing time grid.
#[derive(Clone, Debug, Serialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub warnings: Vec<String>,
}

impl TimeSeries {
    pub fn new(label: &str, times: Vec<f64>, values: Vec<f64>) -> Self {
        Self { label: label.to_string(), times, values, warnings: Vec::new() }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_float_csv(w, "t,value", self.times.iter().zip(&self.values).map(|(&t, &v)| [t, v]))
    }

    /// Least-squares slope of `ln value` against `t` for `t ∈ (t0, t1)`.
    pub fn log_slope(&self, t0: f64, t1: f64) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(&t, &v)| t > t0 && t < t1 && v > 0.0)
            .map(|(&t, &v)| (t, v.ln()))
            .collect();
        if pts.len() < 2 {
            return None;
        }
        let n = pts.len() as f64;
        let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
        Some(sxy / sxx)
    }

    /// Linear interpolation; `None` outside the grid.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 || i > self.times.len() {
            return None;
        }
        if i == self.times.len() {
            return (self.times[i - 1] == t).then(|| self.values[i - 1]);
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let f = (t - t0) / (t1 - t0);
        Some(self.values[i - 1] * (1.0 - f) + self.values[i] * f)
    }
}

/// Field intensity on a grid of positions at one time.
#[derive(Clone, Debug, Serialize)]
pub struct FieldProfile {
    pub t: f64,
    pub positions: Vec<f64>,
    pub intensity: Vec<f64>,
}

impl FieldProfile {
    pub fn write_csv<W: Write>(&self, w: W) -> io::Result<()> {
        write_float_csv(w, "x,intensity", self.positions.iter().zip(&self.intensity).map(|(&x, &v)| [x, v]))
    }
}

/// Pole-only survival `(|N_j|²/2)·e^{−2γ_j t}` of the collective state.
pub fn collective_survival(
    params: &ModelParams,
    sector: SymmetrySector,
    times: &[f64],
    quad: &QuadratureSpec,
) -> Result<(TimeSeries, ComplexEnergy)> {
    check_grid(times)?;
    let p = params.validate_pair()?;
    let pole = greens::principal_pole(Channel::from(sector), p.x21(), &p, quad)?;
    let n2 = pole.normalization.norm_sqr();
    let values = times.iter().map(|&t| 0.5 * n2 * (-2.0 * pole.gamma * t).exp()).collect();
    Ok((TimeSeries::new(&format!("P1_z{}", sector.tag()), times.to_vec(), values), pole))
}

/// `u(k) = (1+(k/ω_M)²)^{−n}`, so that `v(k)² = k·u(k)²`.
fn profile_u(k: C64, p: &ModelParams) -> C64 {
    let r = k / p.omega_m;
    (1.0 + r * r).powi(-(p.n_ff as i32))
}

/// `⟨ψ(x)|φ_j⟩` of the collective state with pole `pole`, from the four
/// continued integrals `∫₀^∞ u(k)e^{±ik(x−x_i)}/(z_j−k)`.
pub fn collective_field_amplitude(
    params: &ModelParams,
    pole: &ComplexEnergy,
    x: f64,
    quad: &QuadratureSpec,
) -> Result<C64> {
    let sigma = pole
        .channel
        .sigma()
        .ok_or_else(|| Error::InvalidParams("collective field needs a two-emitter sector".into()))?;
    let mut terms = Vec::with_capacity(4);
    for (w, xi) in [(1.0, params.x1), (sigma, params.x2)] {
        terms.push(PhaseTerm::new(w, x - xi));
        terms.push(PhaseTerm::new(w, xi - x));
    }
    let integral = greens::continued_phase_integral(|k| profile_u(k, params), &terms, pole.value, quad)?;
    Ok(pole.normalization.sqrt() * params.lambda / (8.0 * PI).sqrt() * integral)
}

/// `P_{zj}(x,t) = |⟨ψ(x)|φ_j⟩|²·|N_j|·e^{−2γ_j t}` without light-cone truncation.
pub fn collective_field(
    params: &ModelParams,
    pole: &ComplexEnergy,
    xs: &[f64],
    t: f64,
    quad: &QuadratureSpec,
) -> Result<FieldProfile> {
    let p = params.validate_pair()?;
    let decay = pole.normalization.norm() * (-2.0 * pole.gamma * t).exp();
    let intensity = xs
        .par_iter()
        .map(|&x| Ok(collective_field_amplitude(&p, pole, x, quad)?.norm_sqr() * decay))
        .collect::<Result<Vec<f64>>>()?;
    Ok(FieldProfile { t, positions: xs.to_vec(), intensity })
}

/// On-disk store of eigensystems keyed by a SHA-256 of the model definition.
#[derive(Clone, Debug)]
pub struct EigenCache {
    dir: PathBuf,
}

const CACHE_MAGIC: &[u8; 8] = b"CEIGSYS1";

impl EigenCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn key(params: &ModelParams, spec: &LatticeSpec, basis: LatticeBasis) -> String {
        let text = serde_json::to_string(&(params, spec, basis)).expect("plain data serializes");
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.eig"))
    }

    /// Returns the diagonalized model, reading or filling the cache.
    pub fn diagonalize(&self, params: &ModelParams, spec: &LatticeSpec, basis: LatticeBasis) -> Result<LatticeModel> {
        let mut model = build_lattice(params, spec, basis)?;
        let path = self.path(&Self::key(&model.params, spec, basis));
        if let Ok(eigs) = read_eigen(&path) {
            if eigs.len() == model.blocks.len() && eigs.iter().zip(&model.blocks).all(|(e, b)| e.n == b.dim) {
                for (b, e) in model.blocks.iter_mut().zip(eigs) {
                    b.eigen = Some(e);
                }
                return Ok(model);
            }
        }
        let model = diagonalize(model)?;
        std::fs::create_dir_all(&self.dir)?;
        let eigs: Vec<&Eigen<C64>> = model.blocks.iter().filter_map(|b| b.eigen.as_ref()).collect();
        write_eigen(&path, &eigs)?;
        Ok(model)
    }
}

fn write_eigen(path: &Path, eigs: &[&Eigen<C64>]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let mut w = io::BufWriter::new(std::fs::File::create(&tmp)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&(eigs.len() as u64).to_le_bytes())?;
    for e in eigs {
        w.write_all(&(e.n as u64).to_le_bytes())?;
        for v in &e.values {
            w.write_all(&v.to_le_bytes())?;
        }
        for z in &e.vectors {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    w.flush()?;
    drop(w);
    std::fs::rename(tmp, path)?;
    Ok(())
}

fn read_eigen(path: &Path) -> Result<Vec<Eigen<C64>>> {
    let mut r = io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CACHE_MAGIC {
        return Err(Error::Lattice("bad eigensystem cache header".into()));
    }
    let mut buf = [0u8; 8];
    let mut next = |r: &mut io::BufReader<std::fs::File>| -> Result<[u8; 8]> {
        r.read_exact(&mut buf)?;
        Ok(buf)
    };
    let blocks = u64::from_le_bytes(next(&mut r)?) as usize;
    let mut out = Vec::with_capacity(blocks);
    for _ in 0..blocks {
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        if n > MAX_BLOCK_DIM {
            return Err(Error::Lattice("corrupt eigensystem cache".into()));
        }
        let values = (0..n).map(|_| Ok(f64::from_le_bytes(next(&mut r)?))).collect::<Result<Vec<_>>>()?;
        let vectors = (0..n * n)
            .map(|_| {
                let re = f64::from_le_bytes(next(&mut r)?);
                let im = f64::from_le_bytes(next(&mut r)?);
                Ok(C64::new(re, im))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(Eigen { values, vectors, n });
    }
    Ok(out)
}
