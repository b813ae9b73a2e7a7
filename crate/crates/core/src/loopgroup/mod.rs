//! Extended flat frames, simple factors and the dressing action.
//!
//! A Christoffel pair `(f, f^c)` has the extended frame `Φ(λ)` with
//! `Φ^{-1} dΦ = λ (0, df; df^c, 0)`, based at `o` (`Φ(o) = 1`). A simple
//! factor `p_{α,L}` acts on it by dressing, `p#Φ = p Φ p̂^{-1}`, and the Sym
//! formula of the dressed frame is the Darboux transform `D_{α²}` with the
//! factor's seed point, translated to pass through the origin at `o`. All
//! frames are compared in this based normalisation.
//!
//! Factors are held in the vector representation of `O(n+2, C)` with
//! light-cone coordinates `(x, a0, a∞)`; their action on frames uses the
//! spin lift to Vahlen matrices, which is fixed up to a sign that cancels.

mod dressing;
mod factor;
mod frame;

use num_complex::Complex64;
use thiserror::Error;

use crate::clifford::CliffordError;
use crate::surface::SurfaceError;
use crate::transform::TransformError;

pub use dressing::{dress, dress_pair_direct, DirectDressing};
pub use factor::{evaluate_factor, make_simple_factor, permutability_factors, SimpleFactor};
pub use frame::{default_lambdas, extended_frame, ExtendedFrameField, SpectralSample, SYM_EPSILON};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoopGroupError {
    #[error("α = {0} must be nonzero, finite and have α² real")]
    InvalidAlpha(Complex64),
    #[error("seed point coincides with the surface at the base node")]
    NullSeed,
    #[error("dimension mismatch")]
    DimensionMismatch,
    #[error("factor evaluated at its pole λ = {0}")]
    PoleEvaluation(Complex64),
    #[error("degenerate null line: {0}")]
    DegenerateLine(String),
    #[error("permutability needs α₁² ≠ α₂²")]
    EqualParameters,
    #[error("invalid λ samples: {0}")]
    InvalidSamples(String),
    #[error("no frame sample at λ = {0}")]
    MissingSample(Complex64),
    #[error("dressing needs the frame sample at λ = α = {0}")]
    MissingAlphaSample(Complex64),
    #[error("the dressed line leaves the chart at every node")]
    AllOutOfChart,
    #[error(transparent)]
    Transform(#[from] TransformError),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}
