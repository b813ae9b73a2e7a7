use num_complex::Complex64;

use super::TransformError;
use crate::clifford::{ConformalPoint, Multivector, Signature, VahlenMatrix};
use crate::magnus;
use crate::surface::stencil::Line;
use crate::surface::{ChristoffelPair, SpanningTree, SurfaceGrid};

/// Vahlen frames `F` at every node of a lattice, with `F^{-1} dF` known
/// along lattice lines.
///
/// Frames produced by [`super::t_transform`] remember the pair and spectral
/// parameter they were integrated from, so further T-transforms reuse the
/// same based integration.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameField {
    lattice: SurfaceGrid,
    frames: Vec<VahlenMatrix>,
    pub(crate) source: Option<(ChristoffelPair, f64)>,
}

impl FrameField {
    /// Wraps per-node frames; `lattice` supplies the grid geometry and mask.
    pub fn from_frames(lattice: &SurfaceGrid, frames: Vec<VahlenMatrix>) -> Result<Self, TransformError> {
        if frames.len() != lattice.node_count() {
            return Err(TransformError::InvalidParameter(format!(
                "{} frames for {} nodes",
                frames.len(),
                lattice.node_count()
            )));
        }
        Ok(Self {
            lattice: lattice.clone(),
            frames,
            source: None,
        })
    }

    pub fn lattice(&self) -> &SurfaceGrid {
        &self.lattice
    }

    pub fn frames(&self) -> &[VahlenMatrix] {
        &self.frames
    }

    pub fn at(&self, k: usize) -> &VahlenMatrix {
        &self.frames[k]
    }

    /// Frame at the base node `o`.
    pub fn base(&self) -> &VahlenMatrix {
        &self.frames[self.lattice.base_node()]
    }

    pub fn n(&self) -> usize {
        self.base().n()
    }

    /// Largest deviation of the pseudo-determinant from one.
    pub fn vahlen_defect(&self) -> f64 {
        let one = Multivector::one(self.base().signature());
        self.frames
            .iter()
            .map(|m| (&m.pseudo_determinant() - &one).max_norm())
            .fold(0.0, f64::max)
    }

    /// `F · p` at every node (real parts). Nodes sent to infinity are masked.
    pub fn orbit(&self, p: &ConformalPoint) -> Result<SurfaceGrid, TransformError> {
        let n = self.n();
        let mut values = Vec::with_capacity(self.frames.len() * n);
        let mut mask: Vec<bool> = (0..self.frames.len()).map(|k| self.lattice.is_masked(k)).collect();
        for (k, m) in self.frames.iter().enumerate() {
            match m.apply_unchecked(p)? {
                ConformalPoint::Finite(x) => values.extend(x.real_vector_part()),
                ConformalPoint::Infinity => {
                    mask[k] = true;
                    values.extend(std::iter::repeat(0.0).take(n));
                }
            }
        }
        let any = mask.iter().any(|m| *m);
        Ok(self
            .lattice
            .with_values(n, values)?
            .with_mask(any.then_some(mask)))
    }

    /// `F · 0`, the surface framed by `F`.
    pub fn points_at_zero(&self) -> Result<SurfaceGrid, TransformError> {
        self.orbit(&ConformalPoint::Finite(Multivector::zero(self.base().signature())))
    }

    /// `F · ∞`, the second surface of the framed pair.
    pub fn points_at_infinity(&self) -> Result<SurfaceGrid, TransformError> {
        self.orbit(&ConformalPoint::Infinity)
    }

    /// Left translation by a constant group element: frames `g · F`.
    pub fn left_multiplied(&self, g: &VahlenMatrix) -> Self {
        Self {
            lattice: self.lattice.clone(),
            frames: self.frames.iter().map(|m| g * m).collect(),
            source: None,
        }
    }

    /// Right multiplication by a constant group element: frames `F · g`.
    pub fn right_multiplied(&self, g: &VahlenMatrix) -> Self {
        Self {
            lattice: self.lattice.clone(),
            frames: self.frames.iter().map(|m| m * g).collect(),
            source: None,
        }
    }

    /// T-transform of the framed surface by `s`, integrated from the based
    /// Maurer–Cartan form `B_{r+s}` of the pair this frame came from. Only
    /// frames produced by [`super::t_transform`] carry that information.
    pub fn t_transform(&self, s: f64) -> Result<(ChristoffelPair, FrameField), TransformError> {
        let (pair, r) = self.source.as_ref().ok_or_else(|| {
            TransformError::InvalidParameter("frame does not come from a T-transform".into())
        })?;
        super::t_transform(pair, r + s)
    }
}

/// Tangent `∂f` along `line` at fractional position `pos`, from the
/// five-point interpolant.
pub(crate) fn tangent_at(f: &SurfaceGrid, line: &Line, pos: f64) -> Vec<f64> {
    let acc = 4.min(line.len() - 1);
    line.sample(f.values(), f.dim(), pos, 1, acc, f.spacing(line.axis))
}

/// `(0, a ∂f; b ∂f^c, 0)` along a lattice line.
pub(crate) fn pair_generator(
    pair: &ChristoffelPair,
    upper: Complex64,
    lower: Complex64,
) -> impl Fn(&Line, f64) -> VahlenMatrix + '_ {
    let sig = Signature::euclidean(pair.dim());
    move |line, pos| {
        let df = Multivector::vector(sig, &tangent_at(&pair.f, line, pos));
        let dfc = Multivector::vector(sig, &tangent_at(&pair.fc, line, pos));
        VahlenMatrix::off_diagonal(df.scale(upper), dfc.scale(lower))
    }
}

/// Integrates `F^{-1} dF = B` from `F(o) = start` along the spanning tree of
/// `lattice`. `generator(line, pos)` returns the coefficient of `B` along
/// `line` at fractional position `pos`. Each edge takes one fourth-order
/// Magnus step, after which the frame is rescaled to unit
/// pseudo-determinant.
pub fn integrate_frames(
    lattice: &SurfaceGrid,
    start: VahlenMatrix,
    generator: impl Fn(&Line, f64) -> VahlenMatrix,
) -> Result<Vec<VahlenMatrix>, TransformError> {
    let tree = SpanningTree::new(lattice.nx(), lattice.ny(), lattice.base_index());
    let mut frames: Vec<Option<VahlenMatrix>> = vec![None; lattice.node_count()];
    frames[tree.root()] = Some(start.normalized()?);
    for e in tree.edges() {
        let h = lattice.spacing(e.line.axis) * e.step as f64;
        let [x1, x2] =
            magnus::NODES.map(|c| generator(&e.line, e.pos as f64 + c * e.step as f64).scale(h));
        let omega = &(&x1 + &x2).scale(0.5) + &x1.commutator(&x2).scale(magnus::COMMUTATOR);
        let from = frames[e.from].as_ref().expect("tree visits parents first");
        let diverged = || TransformError::IntegrationDiverged {
            node: lattice.ij(e.to),
        };
        let next = (from * &omega.exp()).normalized().map_err(|_| diverged())?;
        if !next.max_norm().is_finite() {
            return Err(diverged());
        }
        frames[e.to] = Some(next);
    }
    Ok(frames.into_iter().map(|f| f.expect("tree spans the lattice")).collect())
}

/// Based frame with Maurer–Cartan form `λ (0, df; df^c, 0)`, the `λ`-slice
/// of the extended flat frame of `pair`.
pub fn spectral_frame(pair: &ChristoffelPair, lambda: Complex64) -> Result<FrameField, TransformError> {
    let frames = integrate_frames(
        &pair.f,
        VahlenMatrix::identity(pair.dim()),
        pair_generator(pair, lambda, lambda),
    )?;
    FrameField::from_frames(&pair.f, frames)
}
