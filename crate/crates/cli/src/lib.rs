//! Batch front-end for isothermic surface pipelines.
//!
//! A job is one JSON file: a seed surface on a grid, an ordered list of
//! transforms, residual checks on the result and output targets. Running it
//! produces a report with the maximum residual, masked fraction and verdict
//! of each check.

pub mod error;
pub mod mesh;
pub mod pipeline;
pub mod spec;

pub use error::CliError;
pub use mesh::{export_mesh, render_mesh, MeshFormat};
pub use pipeline::{run_job, CheckReport, Report};
pub use spec::{CheckSpec, JobSpec, TransformStep};
