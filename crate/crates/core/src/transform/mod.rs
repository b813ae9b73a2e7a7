//! Darboux, T- and Bianchi transforms of Christoffel pairs.
//!
//! Frames are Vahlen matrices integrated along the spanning tree of the
//! lattice; Riccati solutions are integrated with classical RK4 along the
//! same tree. Nodes where a transform runs into a singularity are masked and
//! excluded from every comparison.

mod bianchi;
mod darboux;
mod frame;
mod hsurface;
mod sym;
mod ttransform;

use thiserror::Error;

use crate::clifford::CliffordError;
use crate::surface::SurfaceError;

pub use bianchi::{bianchi_cube, bianchi_fourth, bianchi_fourth_pair, quad_cross_ratio_deviation, BianchiCube, CubeFace};
pub use darboux::{darboux, DarbouxResult, G_MAX, G_MIN};
pub(crate) use frame::pair_generator;
pub use frame::{integrate_frames, spectral_frame, FrameField};
pub use hsurface::h_surface_invariant;
pub use sym::{sym_formula, PFlatMap};
pub use ttransform::{t_transform, swap_gauge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransformError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial value coincides with the surface at the base node")]
    SeedSingular,
    #[error("every node is singular")]
    AllSingular,
    #[error("frame integration diverged at node {node:?}")]
    IntegrationDiverged { node: (usize, usize) },
    #[error("Bianchi denominator degenerates at every node")]
    DegenerateDenominator,
    #[error("normal field is not unit length (defect {0:e})")]
    NotUnitNormal(f64),
    #[error("insufficient λ samples: {0}")]
    InsufficientSamples(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}
