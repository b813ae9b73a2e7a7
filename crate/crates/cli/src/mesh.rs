//! Quad-mesh export of a grid through three chosen ambient coordinates.

use std::fmt::Write as _;
use std::path::Path;

use isothermic::surface::SurfaceGrid;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl MeshFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Obj => "obj",
            Self::Ply => "ply",
        }
    }
}

/// Vertices are all `nx·ny` nodes (non-finite coordinates written as 0);
/// faces are the lattice cells whose four corners are unmasked, oriented
/// counter-clockwise in `(x, y)`.
fn mesh_parts(grid: &SurfaceGrid, axes: [usize; 3]) -> Result<(Vec<[f64; 3]>, Vec<[usize; 4]>), CliError> {
    if axes.iter().any(|a| *a >= grid.dim()) {
        return Err(CliError::BadAxes { axes, dim: grid.dim() });
    }
    let vertices = (0..grid.node_count())
        .map(|k| {
            let v = grid.node(k);
            axes.map(|a| if v[a].is_finite() { v[a] } else { 0.0 })
        })
        .collect();
    let mut faces = Vec::new();
    for j in 0..grid.ny() - 1 {
        for i in 0..grid.nx() - 1 {
            let quad = [grid.index(i, j), grid.index(i + 1, j), grid.index(i + 1, j + 1), grid.index(i, j + 1)];
            if quad.iter().all(|k| !grid.is_masked(*k)) {
                faces.push(quad);
            }
        }
    }
    Ok((vertices, faces))
}

/// Renders the mesh; the output is a pure function of the grid.
pub fn render_mesh(grid: &SurfaceGrid, format: MeshFormat, axes: [usize; 3]) -> Result<String, CliError> {
    let (vertices, faces) = mesh_parts(grid, axes)?;
    let mut out = String::new();
    match format {
        MeshFormat::Obj => {
            let _ = writeln!(out, "# isothermic grid {}x{}", grid.nx(), grid.ny());
            for [x, y, z] in &vertices {
                let _ = writeln!(out, "v {x} {y} {z}");
            }
            for q in &faces {
                let _ = writeln!(out, "f {} {} {} {}", q[0] + 1, q[1] + 1, q[2] + 1, q[3] + 1);
            }
        }
        MeshFormat::Ply => {
            let _ = write!(
                out,
                "ply\nformat ascii 1.0\ncomment isothermic grid {}x{}\nelement vertex {}\n\
                 property double x\nproperty double y\nproperty double z\nelement face {}\n\
                 property list uchar int vertex_indices\nend_header\n",
                grid.nx(),
                grid.ny(),
                vertices.len(),
                faces.len()
            );
            for [x, y, z] in &vertices {
                let _ = writeln!(out, "{x} {y} {z}");
            }
            for q in &faces {
                let _ = writeln!(out, "4 {} {} {} {}", q[0], q[1], q[2], q[3]);
            }
        }
    }
    Ok(out)
}

pub fn export_mesh(grid: &SurfaceGrid, path: &Path, format: MeshFormat, axes: [usize; 3]) -> Result<(), CliError> {
    let text = render_mesh(grid, format, axes)?;
    std::fs::write(path, text).map_err(CliError::io(path))
}
