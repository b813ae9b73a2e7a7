//! Clifford algebras `Cl(p,q)`, Vahlen matrices and the conformal group.
//!
//! Conventions: generators satisfy `vw + wv = −2(v,w)`, so unit vectors of
//! `R^n = R^{n,0}` square to `−1`. The three involutions are the order
//! involution `ã`, the transpose `a^t` and the conjugate `ā = (ã)^t`.

mod conformal;
pub mod lightcone;
mod multivector;
mod signature;
mod vahlen;

use thiserror::Error;

pub use conformal::{cross_ratio, ConformalPoint};
pub use lightcone::{lightcone_embed, stereo_project};
pub use multivector::{
    clifford_norm, geometric_product, involution, invert, twisted_adjoint, Involution, Multivector,
};
pub use signature::Signature;
pub use vahlen::{is_vahlen, mobius_apply, VahlenMatrix, VahlenReport};

/// Relative tolerance deciding whether off-grade coefficients vanish.
pub const SCALAR_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliffordError {
    #[error("signature mismatch: {0} vs {1}")]
    SignatureMismatch(Signature, Signature),
    #[error("signature ({p},{q}) exceeds the dense bound of 12 generators")]
    SignatureTooLarge { p: usize, q: usize },
    #[error("coefficient array has length {got}, expected {expected}")]
    BadLength { got: usize, expected: usize },
    #[error("Clifford norm has a non-scalar part of size {0:e}")]
    NonScalarNorm(f64),
    #[error("element is singular (norm {0:e})")]
    SingularElement(f64),
    #[error("matrix fails the Vahlen conditions: {0}")]
    InvalidVahlen(String),
    #[error("point lies at infinity")]
    PointAtInfinity,
    #[error("cross-ratio needs distinct points")]
    CoincidentPoints,
    #[error("expected a grade-1 element")]
    NotAVector,
}
