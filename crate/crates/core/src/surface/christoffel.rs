use super::forms::{d_form, d_form_with, Accuracy, GridOneForm, NodeResidual};
use super::grid::SurfaceGrid;
use super::stencil::line_integral;
use super::tree::SpanningTree;
use super::SurfaceError;
use crate::vecops::{dot, norm};

/// Denominators `(df, df)` below this are treated as zeros of the metric.
pub const UMBILIC_TOL: f64 = 1e-10;

/// Thresholds used when building a Christoffel transform.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChristoffelOptions {
    /// Largest accepted relative conformality defect of `f`.
    pub conformal_tol: f64,
    /// Largest accepted cell curl of `η`, relative to `max ‖η‖`.
    pub closed_tol: f64,
}

impl Default for ChristoffelOptions {
    fn default() -> Self {
        Self {
            conformal_tol: 1e-3,
            closed_tol: 5e-2,
        }
    }
}

/// Diagnostics of a Christoffel transform.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelReport {
    /// Largest cell circulation of `η` per unit area.
    pub closedness: f64,
    /// Largest relative conformality defect of `f`.
    pub conformality: f64,
    pub masked_nodes: usize,
}

/// A dual pair `(f, f^c)` with polarisation `q`: `df ∧ df^c = 0` and
/// `½[(f_x, f^c_x) − (f_y, f^c_y)] = q`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChristoffelPair {
    pub f: SurfaceGrid,
    pub fc: SurfaceGrid,
    pub q: f64,
}

impl ChristoffelPair {
    pub fn new(f: SurfaceGrid, fc: SurfaceGrid, q: f64) -> Result<Self, SurfaceError> {
        f.check_congruent(&fc)?;
        if f.dim() != fc.dim() {
            return Err(SurfaceError::GridMismatch);
        }
        Ok(Self { f, fc, q })
    }

    pub fn dim(&self) -> usize {
        self.f.dim()
    }

    /// The pair read the other way round; duality is symmetric with the same
    /// polarisation.
    pub fn swapped(&self) -> Self {
        Self {
            f: self.fc.clone(),
            fc: self.f.clone(),
            q: self.q,
        }
    }

    /// Union of the masks of both surfaces.
    pub fn mask(&self) -> Option<Vec<bool>> {
        self.f.combined_mask(self.fc.mask())
    }

    /// Deviation of `(df, df^c)^{2,0}` from `q dz²`: per node the modulus of
    /// `½[(f_x,f^c_x) − (f_y,f^c_y)] − q − i·½[(f_x,f^c_y) + (f_y,f^c_x)]`,
    /// over interior unmasked nodes.
    pub fn polarisation_residual(&self) -> NodeResidual {
        let df = d_form(&self.f);
        let dfc = d_form(&self.fc);
        let mask = self.mask();
        NodeResidual::evaluate(
            self.f.node_count(),
            |k| self.f.is_interior(k) && !mask.as_ref().is_some_and(|m| m[k]),
            |k| {
                let re = 0.5 * (dot(df.dx_at(k), dfc.dx_at(k)) - dot(df.dy_at(k), dfc.dy_at(k)))
                    - self.q;
                let im = 0.5 * (dot(df.dx_at(k), dfc.dy_at(k)) + dot(df.dy_at(k), dfc.dx_at(k)));
                re.hypot(im)
            },
        )
    }
}

impl GridOneForm {
    /// Integrates the form along the spanning tree of `lattice`, starting
    /// from zero at its base node. Each edge uses Gauss quadrature on a
    /// five-point interpolant of the relevant component.
    pub fn integrate(&self, lattice: &SurfaceGrid) -> SurfaceGrid {
        let dim = self.dim();
        let tree = SpanningTree::new(lattice.nx(), lattice.ny(), lattice.base_index());
        let mut values = vec![0.0; lattice.node_count() * dim];
        for e in tree.edges() {
            let comp = self.component(e.line.axis);
            let acc = 5.min(e.line.len());
            let inc = line_integral(
                comp,
                dim,
                &e.line,
                e.pos,
                e.step,
                acc,
                lattice.spacing(e.line.axis),
            );
            for c in 0..dim {
                values[e.to * dim + c] = values[e.from * dim + c] + inc[c];
            }
        }
        lattice
            .with_values(dim, values)
            .expect("integrated values match the lattice")
    }

    /// Norm of the circulation around each lattice cell divided by its area
    /// (trapezoidal edges). Indexed by the lower-left node; the last row and
    /// column are zero.
    pub fn cell_curl(&self, lattice: &SurfaceGrid) -> Vec<f64> {
        let (nx, ny, dim) = (lattice.nx(), lattice.ny(), self.dim());
        let (hx, hy) = (lattice.hx(), lattice.hy());
        let mut out = vec![0.0; nx * ny];
        for j in 0..ny - 1 {
            for i in 0..nx - 1 {
                let k00 = lattice.index(i, j);
                let k10 = lattice.index(i + 1, j);
                let k01 = lattice.index(i, j + 1);
                let k11 = lattice.index(i + 1, j + 1);
                let mut acc = 0.0;
                for c in 0..dim {
                    let bottom = 0.5 * hx * (self.dx_at(k00)[c] + self.dx_at(k10)[c]);
                    let right = 0.5 * hy * (self.dy_at(k10)[c] + self.dy_at(k11)[c]);
                    let top = 0.5 * hx * (self.dx_at(k01)[c] + self.dx_at(k11)[c]);
                    let left = 0.5 * hy * (self.dy_at(k00)[c] + self.dy_at(k01)[c]);
                    let circ = bottom + right - top - left;
                    acc += circ * circ;
                }
                out[k00] = acc.sqrt() / (hx * hy);
            }
        }
        out
    }
}

/// Christoffel transform with default thresholds.
pub fn christoffel_transform(f: &SurfaceGrid, q: f64) -> Result<ChristoffelPair, SurfaceError> {
    christoffel_transform_with(f, q, ChristoffelOptions::default()).map(|(pair, _)| pair)
}

/// Builds `η = q (f_x dx − f_y dy) / e^{2u}` with `e^{2u} = ½(df, df)`,
/// checks conformality and closedness, and integrates `η` from zero at the
/// base node.
pub fn christoffel_transform_with(
    f: &SurfaceGrid,
    q: f64,
    opts: ChristoffelOptions,
) -> Result<(ChristoffelPair, ChristoffelReport), SurfaceError> {
    if q == 0.0 || !q.is_finite() {
        return Err(SurfaceError::InvalidParams(
            "polarisation q = 0 gives a constant dual".into(),
        ));
    }
    let dim = f.dim();
    let df = d_form_with(f, Accuracy::Fourth);
    let n = f.node_count();
    let mut mask: Vec<bool> = (0..n).map(|k| f.is_masked(k)).collect();
    let mut conformality = 0.0f64;
    let mut ex = vec![0.0; n * dim];
    let mut ey = vec![0.0; n * dim];
    for k in 0..n {
        let (fx, fy) = (df.dx_at(k), df.dy_at(k));
        let (xx, yy, xy) = (dot(fx, fx), dot(fy, fy), dot(fx, fy));
        let e2u = 0.5 * (xx + yy);
        if e2u < UMBILIC_TOL {
            mask[k] = true;
            continue;
        }
        if mask[k] {
            continue;
        }
        conformality = conformality.max(((xx - yy).abs() + 2.0 * xy.abs()) / (2.0 * e2u));
        let s = q / e2u;
        for c in 0..dim {
            ex[k * dim + c] = s * fx[c];
            ey[k * dim + c] = -s * fy[c];
        }
    }
    if mask[f.base_node()] {
        return Err(SurfaceError::UmbilicZero {
            node: f.base_index(),
        });
    }
    if conformality > opts.conformal_tol {
        return Err(SurfaceError::NotConformal(conformality));
    }
    let eta = GridOneForm::new(f.nx(), f.ny(), dim, ex, ey)?;

    let curl = eta.cell_curl(f);
    let mut closedness = 0.0f64;
    for j in 0..f.ny() - 1 {
        for i in 0..f.nx() - 1 {
            let corners = [
                f.index(i, j),
                f.index(i + 1, j),
                f.index(i, j + 1),
                f.index(i + 1, j + 1),
            ];
            if corners.iter().any(|&k| mask[k]) {
                continue;
            }
            closedness = closedness.max(curl[corners[0]]);
        }
    }
    let eta_scale = (0..n)
        .filter(|&k| !mask[k])
        .map(|k| norm(eta.dx_at(k)).max(norm(eta.dy_at(k))))
        .fold(0.0f64, f64::max);
    if closedness > opts.closed_tol * eta_scale.max(f64::MIN_POSITIVE) {
        return Err(SurfaceError::NotClosed(closedness));
    }

    let mut fc = eta.integrate(f);
    let tree = SpanningTree::new(f.nx(), f.ny(), f.base_index());
    tree.propagate_mask(&mut mask);
    let masked_nodes = mask.iter().filter(|m| **m).count();
    let mask = (masked_nodes > 0).then_some(mask);
    fc.set_mask(mask);
    let report = ChristoffelReport {
        closedness,
        conformality,
        masked_nodes,
    };
    Ok((ChristoffelPair::new(f.clone(), fc, q)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{isothermic_residual, GridSpec};

    #[test]
    fn plane_dual_is_reflected_plane() {
        let spec = GridSpec::new(21, 21, (-1.0, 1.0), (-1.0, 1.0));
        let f = SurfaceGrid::sample(&spec, 3, |x, y| vec![x, y, 0.0]).unwrap();
        let pair = christoffel_transform(&f, 1.0).unwrap();
        let expected = SurfaceGrid::sample(&spec, 3, |x, y| vec![x, -y, 0.0]).unwrap();
        assert!(pair.fc.max_difference(&expected).unwrap() < 1e-13);
        assert!(pair.polarisation_residual().max < 1e-12);
    }

    #[test]
    fn dual_of_dual_recovers_surface() {
        let spec = GridSpec::new(41, 41, (0.0, 1.0), (-0.5, 0.5)).with_base(0, 20);
        let f = SurfaceGrid::sample(&spec, 3, |x, y| {
            vec![x.cosh() * y.cos(), x.cosh() * y.sin(), x]
        })
        .unwrap();
        let pair = christoffel_transform(&f, 1.0).unwrap();
        let back = christoffel_transform(&pair.fc, 1.0).unwrap();
        let f0 = f.at(0, 20).to_vec();
        let shifted = f.translated(&f0.iter().map(|v| -v).collect::<Vec<_>>());
        assert!(back.fc.max_difference(&shifted).unwrap() < 1e-5);
        assert!(isothermic_residual(&pair.f, &pair.fc).unwrap().max < 1e-2);
    }

    #[test]
    fn zero_polarisation_is_rejected() {
        let spec = GridSpec::new(5, 5, (0.0, 1.0), (0.0, 1.0));
        let f = SurfaceGrid::sample(&spec, 3, |x, y| vec![x, y, 0.0]).unwrap();
        assert!(matches!(
            christoffel_transform(&f, 0.0),
            Err(SurfaceError::InvalidParams(_))
        ));
    }

    #[test]
    fn non_conformal_input_is_rejected() {
        let spec = GridSpec::new(9, 9, (0.0, 1.0), (0.0, 1.0));
        let f = SurfaceGrid::sample(&spec, 3, |x, y| vec![2.0 * x, y, 0.0]).unwrap();
        assert!(matches!(
            christoffel_transform(&f, 1.0),
            Err(SurfaceError::NotConformal(_))
        ));
    }
}
