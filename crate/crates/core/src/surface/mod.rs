//! Surfaces sampled on conformal curvature-line grids.
//!
//! A [`SurfaceGrid`] stores one vector of `R^n` per lattice node. Derivatives
//! are finite differences along grid lines; integrals of closed forms follow
//! a fixed row-then-column [`SpanningTree`] from the base node, and the
//! failure of path independence is measured rather than assumed.

mod calapso;
mod christoffel;
mod envelope;
mod forms;
mod grid;
mod seeds;
pub mod stencil;
mod tree;

use thiserror::Error;

use crate::clifford::CliffordError;

pub use calapso::{
    calapso_residual, conformal_frame, conformal_frame_with, frame_from_calapso,
    frame_from_calapso_with, CalapsoData, CalapsoOptions,
};
pub use christoffel::{
    christoffel_transform, christoffel_transform_with, ChristoffelOptions, ChristoffelPair,
    ChristoffelReport, UMBILIC_TOL,
};
pub use envelope::{envelope_residual, COINCIDENCE_TOL};
pub use forms::{d_form, d_form_with, isothermic_residual, wedge, Accuracy, GridOneForm, NodeResidual};
pub use grid::{Axis, GridSpec, SurfaceGrid};
pub use seeds::{seed_normal, seed_surface, Profile, Seed};
pub use tree::{SpanningTree, TreeEdge};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurfaceError {
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("grids are not congruent")]
    GridMismatch,
    #[error("surface is not conformal (relative defect {0:e})")]
    NotConformal(f64),
    #[error("Christoffel form is not closed (cell curl {0:e})")]
    NotClosed(f64),
    #[error("metric vanishes at base node {node:?}")]
    UmbilicZero { node: (usize, usize) },
    #[error("surfaces coincide at node {node:?}")]
    CoincidentSurfaces { node: (usize, usize) },
    #[error("coordinates are not conformal curvature-line coordinates (defect {0:e})")]
    NotCcl(f64),
    #[error("normal bundle is not flat (defect {0:e})")]
    NonFlatNormalBundle(f64),
    #[error("Calapso data fail the integrability condition (defect {0:e})")]
    InconsistentData(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}
