use nalgebra::{DMatrix, SymmetricEigen};

use super::forms::{Accuracy, NodeResidual};
use super::grid::{Axis, SurfaceGrid};
use super::SurfaceError;
use crate::vecops::{conjugate_by, norm, sub};

/// Surfaces closer than this are considered coincident.
pub const COINCIDENCE_TOL: f64 = 1e-10;

/// Orthonormal basis of `span(a, b)` as matrix columns, or `None` if the
/// vectors are dependent.
fn orthonormal_pair(a: &[f64], b: &[f64]) -> Option<DMatrix<f64>> {
    let mut m = DMatrix::from_column_slice(a.len(), 2, &[a, b].concat());
    let qr = m.clone().qr();
    let r = qr.r();
    let scale = norm(a).max(norm(b));
    if r[(1, 1)].abs() <= 1e-12 * scale || r[(0, 0)].abs() <= 1e-12 * scale {
        return None;
    }
    m = qr.q();
    Some(m)
}

/// Sine of the largest principal angle between two 2-planes.
pub(crate) fn plane_defect(p: &DMatrix<f64>, q: &DMatrix<f64>) -> f64 {
    let residual = p - q * (q.transpose() * p);
    let gram = residual.transpose() * &residual;
    let eig = SymmetricEigen::new(gram).eigenvalues;
    eig.iter().fold(0.0f64, |m, v| m.max(*v)).max(0.0).sqrt()
}

/// Principal-angle defect between `span(df̂)` and `span(g df g⁻¹)`, with
/// `g = f̂ − f`, per node. Darboux pairs envelope a common sphere
/// congruence exactly when the defect vanishes.
pub fn envelope_residual(f: &SurfaceGrid, fhat: &SurfaceGrid) -> Result<NodeResidual, SurfaceError> {
    f.check_congruent(fhat)?;
    if f.dim() != fhat.dim() {
        return Err(SurfaceError::GridMismatch);
    }
    let mask = f.combined_mask(fhat.mask());
    let masked = |k: usize| mask.as_ref().is_some_and(|m| m[k]);
    for k in 0..f.node_count() {
        if !masked(k) && norm(&sub(fhat.node(k), f.node(k))) < COINCIDENCE_TOL {
            return Err(SurfaceError::CoincidentSurfaces {
                node: f.ij(k),
            });
        }
    }
    let dim = f.dim();
    let fx = f.partial(Axis::X, 1, Accuracy::Sixth);
    let fy = f.partial(Axis::Y, 1, Accuracy::Sixth);
    let hx = fhat.partial(Axis::X, 1, Accuracy::Sixth);
    let hy = fhat.partial(Axis::Y, 1, Accuracy::Sixth);
    let slice = |v: &'_ [f64], k: usize| v[k * dim..(k + 1) * dim].to_vec();
    Ok(NodeResidual::evaluate(
        f.node_count(),
        |k| !masked(k),
        |k| {
            let g = sub(fhat.node(k), f.node(k));
            let target = orthonormal_pair(&slice(&hx, k), &slice(&hy, k));
            let source = orthonormal_pair(
                &conjugate_by(&g, &slice(&fx, k)),
                &conjugate_by(&g, &slice(&fy, k)),
            );
            match (target, source) {
                (Some(p), Some(q)) => plane_defect(&p, &q),
                _ => 1.0,
            }
        },
    ))
}
