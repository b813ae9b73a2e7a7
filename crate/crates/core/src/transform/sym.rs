use num_complex::Complex64;

use super::frame::FrameField;
use super::TransformError;
use crate::clifford::VahlenMatrix;
use crate::surface::{isothermic_residual, ChristoffelPair, NodeResidual, SurfaceGrid};

/// A `p`-flat map `ψ = (0, f0; f0^c, 0)`, which is a Christoffel pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PFlatMap {
    pub f0: SurfaceGrid,
    pub f0c: SurfaceGrid,
}

impl PFlatMap {
    /// Defect of `df0 ∧ df0^c = 0`.
    pub fn isothermic_residual(&self) -> Result<NodeResidual, TransformError> {
        Ok(isothermic_residual(&self.f0, &self.f0c)?)
    }

    /// The map as a Christoffel pair with polarisation `q`.
    pub fn pair(&self, q: f64) -> Result<ChristoffelPair, TransformError> {
        Ok(ChristoffelPair::new(self.f0.clone(), self.f0c.clone(), q)?)
    }
}

fn find<'a>(frames: &'a [(Complex64, FrameField)], lambda: Complex64, tol: f64) -> Option<&'a FrameField> {
    frames
        .iter()
        .find(|(l, _)| (l - lambda).norm() <= tol)
        .map(|(_, f)| f)
}

/// Sym formula: the `λ`-derivative of a based extended frame at `λ = 0`,
/// whose off-diagonal entries are the Christoffel pair it was built from
/// (translated so that both vanish at the base node).
///
/// Needs samples at `0, ±ε, ±2ε` for some real `ε > 0`; the smallest such
/// `ε` is used with the five-point central difference, accurate to `O(ε⁴)`.
pub fn sym_formula(frames: &[(Complex64, FrameField)]) -> Result<PFlatMap, TransformError> {
    let tol = |x: f64| 1e-12 * (1.0 + x.abs());
    if find(frames, Complex64::new(0.0, 0.0), tol(0.0)).is_none() {
        return Err(TransformError::InsufficientSamples("λ = 0 is missing".into()));
    }
    let mut candidates: Vec<f64> = frames
        .iter()
        .filter(|(l, _)| l.im == 0.0 && l.re > 0.0)
        .map(|(l, _)| l.re)
        .collect();
    candidates.sort_by(f64::total_cmp);
    let stencil = candidates.into_iter().find_map(|eps| {
        let at = |m: f64| find(frames, Complex64::new(m * eps, 0.0), tol(m * eps));
        Some((eps, [at(2.0)?, at(1.0)?, at(-1.0)?, at(-2.0)?]))
    });
    let (eps, [p2, p1, m1, m2]) = stencil.ok_or_else(|| {
        TransformError::InsufficientSamples("need λ = ±ε and ±2ε for some ε > 0".into())
    })?;
    let lattice = p1.lattice();
    let n = p1.n();
    let count = lattice.node_count();
    let (mut f0, mut f0c) = (Vec::with_capacity(count * n), Vec::with_capacity(count * n));
    for k in 0..count {
        let diff = |a: &FrameField, b: &FrameField| -> VahlenMatrix { a.at(k) - b.at(k) };
        let deriv = (&diff(p1, m1).scale(8.0) - &diff(p2, m2)).scale(1.0 / (12.0 * eps));
        f0.extend(deriv.b.real_vector_part());
        f0c.extend(deriv.c.real_vector_part());
    }
    Ok(PFlatMap {
        f0: lattice.with_values(n, f0)?,
        f0c: lattice.with_values(n, f0c)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{seed_surface, GridSpec, Seed};
    use crate::transform::spectral_frame;

    fn samples(pair: &ChristoffelPair, eps: f64) -> Vec<(Complex64, FrameField)> {
        [0.0, eps, -eps, 2.0 * eps, -2.0 * eps]
            .into_iter()
            .map(|l| {
                let l = Complex64::new(l, 0.0);
                (l, spectral_frame(pair, l).unwrap())
            })
            .collect()
    }

    #[test]
    fn plane_frame_recovers_the_plane_pair() {
        let spec = GridSpec::new(21, 21, (-1.0, 1.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        let psi = sym_formula(&samples(&pair, 1e-3)).unwrap();
        assert!(psi.f0.max_difference(&pair.f).unwrap() < 1e-9);
        assert!(psi.f0c.max_difference(&pair.fc).unwrap() < 1e-9);
        assert!(psi.isothermic_residual().unwrap().max < 1e-9);
    }

    #[test]
    fn constant_frame_gives_zero_map() {
        let spec = GridSpec::new(5, 5, (0.0, 1.0), (0.0, 1.0));
        let lattice = SurfaceGrid::sample(&spec, 3, |_, _| vec![0.0; 3]).unwrap();
        let one = FrameField::from_frames(&lattice, vec![VahlenMatrix::identity(3); 25]).unwrap();
        let frames: Vec<_> = [0.0, 0.1, -0.1, 0.2, -0.2]
            .into_iter()
            .map(|l| (Complex64::new(l, 0.0), one.clone()))
            .collect();
        let psi = sym_formula(&frames).unwrap();
        assert!(psi.f0.values().iter().chain(psi.f0c.values()).all(|v| *v == 0.0));
    }

    #[test]
    fn missing_samples_are_reported() {
        let spec = GridSpec::new(5, 5, (0.0, 1.0), (0.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        let mut s = samples(&pair, 0.01);
        s.pop();
        assert!(matches!(sym_formula(&s), Err(TransformError::InsufficientSamples(_))));
    }
}
