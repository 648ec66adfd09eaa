use thiserror::Error;

use num_complex::Complex64;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("quadrature did not converge: estimated error {error:.3e} after {panels} panels")]
    Quadrature { error: f64, panels: usize },

    #[error("point {0} lies on the branch cut along the negative real axis")]
    BranchCut(Complex64),

    #[error("form factor pole: |z ∓ iω_M| = {distance:.3e}")]
    FormFactorPole { distance: f64 },

    #[error("exponent overflow: |Im z|·x = {exponent:.1} exceeds {limit}")]
    Overflow { exponent: f64, limit: f64 },

    #[error("pole search did not converge from seed {seed} (|η| = {residual:.3e} after {iterations} iterations)")]
    NoConvergence {
        seed: Complex64,
        residual: f64,
        iterations: usize,
    },

    #[error("root {0} lies above the real axis (wrong branch)")]
    WrongBranch(Complex64),

    #[error("eigensolver did not converge on eigenvalue {index}")]
    Eigen { index: usize },

    #[error("lattice: {0}")]
    Lattice(String),

    #[error("jet order {order} is too small for derivative {requested}")]
    JetOrder { order: usize, requested: usize },

    #[error("series tail bound not reached within {cap} terms (last term {last:.3e})")]
    SeriesTail { cap: usize, last: f64 },

    #[error("fixed point iteration diverged: {0}")]
    FixedPoint(String),

    #[error("waveguide: {0}")]
    Waveguide(String),

    #[error("too few converged points: {0}")]
    TooFewPoints(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
