use rayon::prelude::*;

use super::grid::{Axis, SurfaceGrid};
use super::stencil;
use super::SurfaceError;
use crate::clifford::{Multivector, Signature};

/// Formal accuracy of finite-difference stencils.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Accuracy {
    Second,
    Fourth,
    Sixth,
}

impl Accuracy {
    pub fn order(self) -> usize {
        match self {
            Accuracy::Second => 2,
            Accuracy::Fourth => 4,
            Accuracy::Sixth => 6,
        }
    }
}

impl SurfaceGrid {
    /// Nodewise `deriv`-th partial derivative along `axis`, flat layout.
    pub fn partial(&self, axis: Axis, deriv: usize, acc: Accuracy) -> Vec<f64> {
        stencil::partial(
            self.values(),
            self.dim(),
            self.nx(),
            self.ny(),
            self.spacing(axis),
            axis,
            deriv,
            acc.order(),
        )
    }

    /// Mixed derivative `∂x∂y`.
    pub fn partial_xy(&self, acc: Accuracy) -> Vec<f64> {
        let fx = self.partial(Axis::X, 1, acc);
        stencil::partial(
            &fx,
            self.dim(),
            self.nx(),
            self.ny(),
            self.hy(),
            Axis::Y,
            1,
            acc.order(),
        )
    }
}

/// A Clifford-vector valued one-form `α = ax dx + ay dy` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridOneForm {
    nx: usize,
    ny: usize,
    dim: usize,
    dx: Vec<f64>,
    dy: Vec<f64>,
}

impl GridOneForm {
    pub fn new(
        nx: usize,
        ny: usize,
        dim: usize,
        dx: Vec<f64>,
        dy: Vec<f64>,
    ) -> Result<Self, SurfaceError> {
        if dx.len() != nx * ny * dim || dy.len() != dx.len() {
            return Err(SurfaceError::GridMismatch);
        }
        Ok(Self { nx, ny, dim, dx, dy })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Coefficient of `dx` at node `k`.
    pub fn dx_at(&self, k: usize) -> &[f64] {
        &self.dx[k * self.dim..(k + 1) * self.dim]
    }

    /// Coefficient of `dy` at node `k`.
    pub fn dy_at(&self, k: usize) -> &[f64] {
        &self.dy[k * self.dim..(k + 1) * self.dim]
    }

    pub fn component(&self, axis: Axis) -> &[f64] {
        match axis {
            Axis::X => &self.dx,
            Axis::Y => &self.dy,
        }
    }

    fn congruent(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.dim == other.dim
    }
}

/// Exterior derivative by second-order differences (central inside,
/// one-sided at the boundary).
pub fn d_form(f: &SurfaceGrid) -> GridOneForm {
    d_form_with(f, Accuracy::Second)
}

/// Exterior derivative with a chosen stencil accuracy.
pub fn d_form_with(f: &SurfaceGrid, acc: Accuracy) -> GridOneForm {
    GridOneForm {
        nx: f.nx(),
        ny: f.ny(),
        dim: f.dim(),
        dx: f.partial(Axis::X, 1, acc),
        dy: f.partial(Axis::Y, 1, acc),
    }
}

/// Coefficient of `dx ∧ dy` in `α ∧ β`, i.e. `ax·by − ay·bx` with the
/// Clifford product, per node.
pub fn wedge(alpha: &GridOneForm, beta: &GridOneForm) -> Result<Vec<Multivector>, SurfaceError> {
    if !alpha.congruent(beta) {
        return Err(SurfaceError::GridMismatch);
    }
    let sig = Signature::euclidean(alpha.dim);
    Ok((0..alpha.node_count())
        .into_par_iter()
        .map(|k| {
            let ax = Multivector::vector(sig, alpha.dx_at(k));
            let ay = Multivector::vector(sig, alpha.dy_at(k));
            let bx = Multivector::vector(sig, beta.dx_at(k));
            let by = Multivector::vector(sig, beta.dy_at(k));
            &(&ax * &by) - &(&ay * &bx)
        })
        .collect())
}

/// A nodewise residual with the nodes that were left out of the maximum.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeResidual {
    pub per_node: Vec<f64>,
    /// `true` where the node was excluded (boundary, masked or singular).
    pub excluded: Vec<bool>,
    pub max: f64,
}

impl NodeResidual {
    /// Evaluates `value` on every node, in parallel, and reduces in index
    /// order over nodes where `include` holds.
    pub fn evaluate(
        count: usize,
        include: impl Fn(usize) -> bool + Sync,
        value: impl Fn(usize) -> f64 + Sync,
    ) -> Self {
        let excluded: Vec<bool> = (0..count).map(|k| !include(k)).collect();
        let per_node: Vec<f64> = (0..count)
            .into_par_iter()
            .map(|k| if excluded[k] { 0.0 } else { value(k) })
            .collect();
        let max = per_node
            .iter()
            .zip(&excluded)
            .filter(|(_, e)| !**e)
            .fold(0.0f64, |m, (v, _)| if v.is_nan() { f64::NAN } else { m.max(*v) });
        Self {
            per_node,
            excluded,
            max,
        }
    }

    pub fn included_count(&self) -> usize {
        self.excluded.iter().filter(|e| !**e).count()
    }

    pub fn excluded_fraction(&self) -> f64 {
        1.0 - self.included_count() as f64 / self.excluded.len() as f64
    }
}

/// Frobenius norm of `df ∧ df^c` per node; the maximum runs over interior
/// unmasked nodes.
pub fn isothermic_residual(f: &SurfaceGrid, fc: &SurfaceGrid) -> Result<NodeResidual, SurfaceError> {
    f.check_congruent(fc)?;
    if f.dim() != fc.dim() {
        return Err(SurfaceError::GridMismatch);
    }
    let w = wedge(&d_form(f), &d_form(fc))?;
    Ok(NodeResidual::evaluate(
        f.node_count(),
        |k| f.is_interior(k) && !f.is_masked(k) && !fc.is_masked(k),
        |k| w[k].coeff_norm(),
    ))
}
