//! Physical parameters of the two-emitter system and the symmetry sectors
//! of the single-excitation subspace.
//!
//! Units are fixed to `c = ħ = 1`: energies and momenta share one unit and
//! lengths are measured in its inverse.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, QuadratureSpec};

/// Constants of the emitter–field model.
///
/// The form factor is `v(ω)² = ω / (1 + (ω/ω_M)²)^(2n)`; both emitters share
/// `omega1` and `lambda`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Bare excited-level energy ω₁.
    pub omega1: f64,
    /// Dimensionless coupling λ.
    pub lambda: f64,
    /// Form-factor cutoff ω_M.
    #[serde(rename = "omegaM")]
    pub omega_m: f64,
    /// Form-factor exponent n.
    #[serde(default = "default_nff")]
    pub n_ff: u32,
    #[serde(default)]
    pub x1: f64,
    #[serde(default = "default_x2")]
    pub x2: f64,
}

fn default_nff() -> u32 {
    1
}

fn default_x2() -> f64 {
    1.0
}

impl Default for ModelParams {
    /// ω₁ = 2, λ = 0.05, ω_M = 5, n = 1, emitters at 0 and 1.
    fn default() -> Self {
        Self {
            omega1: 2.0,
            lambda: 0.05,
            omega_m: 5.0,
            n_ff: 1,
            x1: 0.0,
            x2: 1.0,
        }
    }
}

impl ModelParams {
    /// Distance between the two emitters.
    pub fn x21(&self) -> f64 {
        (self.x2 - self.x1).abs()
    }

    /// Copy with the emitters placed at `0` and `x21`.
    pub fn with_separation(mut self, x21: f64) -> Self {
        self.x1 = 0.0;
        self.x2 = x21;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    /// Checks every single-emitter invariant; returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        let finite = [self.omega1, self.lambda, self.omega_m, self.x1, self.x2]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidParams("coupling must be positive".into()));
        }
        if !(self.omega_m > 0.0) {
            return Err(Error::InvalidParams("form-factor cutoff must be positive".into()));
        }
        if !(self.omega1 > 0.0) {
            return Err(Error::InvalidParams("excited-level energy must be positive".into()));
        }
        if self.n_ff < 1 {
            return Err(Error::InvalidParams("form-factor exponent must be at least 1".into()));
        }
        Ok(self)
    }

    /// [`validate`](Self::validate) plus the two-emitter geometry check.
    pub fn validate_pair(self) -> Result<Self> {
        let p = self.validate()?;
        if !(p.x21() > 0.0) {
            return Err(Error::InvalidParams("coincident atoms".into()));
        }
        Ok(p)
    }

    /// Reads a flat JSON document with keys `omega1, lambda, omegaM, n_ff, x1, x2`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let p: ModelParams = serde_json::from_str(s)?;
        p.validate()
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// `λ²v(ω)²` on the real axis.
    pub fn coupling_sq(&self, omega: f64) -> f64 {
        let r = omega / self.omega_m;
        self.lambda * self.lambda * omega / (1.0 + r * r).powi(2 * self.n_ff as i32)
    }
}

/// Parity of the single-excitation emitter state under exchange.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetrySector {
    Symmetric,
    Antisymmetric,
}

impl SymmetrySector {
    pub const BOTH: [SymmetrySector; 2] = [SymmetrySector::Symmetric, SymmetrySector::Antisymmetric];

    /// `+1` for the symmetric state, `−1` for the antisymmetric one.
    pub fn sigma(self) -> f64 {
        match self {
            SymmetrySector::Symmetric => 1.0,
            SymmetrySector::Antisymmetric => -1.0,
        }
    }

    pub fn from_sigma(sigma: i32) -> Option<Self> {
        match sigma {
            1 => Some(SymmetrySector::Symmetric),
            -1 => Some(SymmetrySector::Antisymmetric),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            SymmetrySector::Symmetric => "s",
            SymmetrySector::Antisymmetric => "a",
        }
    }
}

impl fmt::Display for SymmetrySector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Which inverse Green's function is meant: the isolated emitter or one of
/// the two collective sectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    OneAtom,
    Symmetric,
    Antisymmetric,
}

impl Channel {
    pub fn sector(self) -> Option<SymmetrySector> {
        match self {
            Channel::OneAtom => None,
            Channel::Symmetric => Some(SymmetrySector::Symmetric),
            Channel::Antisymmetric => Some(SymmetrySector::Antisymmetric),
        }
    }

    /// Interference weight σ, or `None` for the isolated emitter.
    pub fn sigma(self) -> Option<f64> {
        self.sector().map(SymmetrySector::sigma)
    }

    pub fn tag(self) -> &'static str {
        match self {
            Channel::OneAtom => "1",
            Channel::Symmetric => "s",
            Channel::Antisymmetric => "a",
        }
    }
}

impl From<SymmetrySector> for Channel {
    fn from(s: SymmetrySector) -> Self {
        match s {
            SymmetrySector::Symmetric => Channel::Symmetric,
            SymmetrySector::Antisymmetric => Channel::Antisymmetric,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// Sign classification of [`instability_margin`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stability {
    /// The excited level decays; the regime assumed by every pole solver.
    Unstable,
    Marginal,
    Stable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InstabilityMargin {
    pub margin: f64,
    pub stability: Stability,
}

/// `ω₁ − 2∫₀^∞ dk λ²v_k²/k`. Positive means the bare excited level is
/// unstable and a resonance pole exists below the real axis.
pub fn instability_margin(params: &ModelParams, quad: &QuadratureSpec) -> Result<InstabilityMargin> {
    let p = params.validate()?;
    let integral = quad::integrate_halfline_real(|k| p.coupling_sq(k) / k, quad)?;
    let margin = p.omega1 - 2.0 * integral;
    let scale = p.omega1.abs().max(1.0);
    let stability = if margin.abs() <= 1e-12 * scale {
        Stability::Marginal
    } else if margin > 0.0 {
        Stability::Unstable
    } else {
        Stability::Stable
    };
    Ok(InstabilityMargin { margin, stability })
}
