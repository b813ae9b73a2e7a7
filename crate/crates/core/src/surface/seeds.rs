use serde::{Deserialize, Serialize};

use super::christoffel::{christoffel_transform, ChristoffelPair};
use super::grid::{GridSpec, SurfaceGrid};
use super::SurfaceError;

/// Profile curves of surfaces of revolution, all in isothermic
/// parametrization `(r(x) cos y, r(x) sin y, z(x))` with `r'² + z'² = r²`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `r = cosh x`, `z = x`.
    Catenoid,
    /// Mercator sphere: `r = sech x`, `z = tanh x`.
    Sphere,
}

/// Built-in seed surfaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Seed {
    /// `f = x e1 + y e2`, `f^c = x e1 − y e2`, `q = 1`.
    Plane,
    /// `f = ½ sin 2x e1 + ½(1 − cos 2x) e2 + y e3` with dual
    /// `−½ sin 2x e1 − ½(1 − cos 2x) e2 + y e3`, `q = −1`.
    Cylinder,
    /// Surface of revolution with numerically integrated dual, `q = 1`.
    Revolution { profile: Profile },
}

fn padded(mut v: Vec<f64>, dim: usize) -> Vec<f64> {
    v.resize(dim, 0.0);
    v
}

/// Samples a seed pair on `spec` in `R^dim` (extra coordinates are zero).
pub fn seed_surface(seed: Seed, spec: &GridSpec, dim: usize) -> Result<ChristoffelPair, SurfaceError> {
    let min_dim = if seed == Seed::Plane { 2 } else { 3 };
    if dim < min_dim || dim > crate::clifford::Signature::MAX_DIM - 2 {
        return Err(SurfaceError::InvalidParams(format!(
            "ambient dimension {dim} outside {min_dim}..={}",
            crate::clifford::Signature::MAX_DIM - 2
        )));
    }
    spec.validate()
        .map_err(|e| SurfaceError::InvalidParams(e.to_string()))?;
    match seed {
        Seed::Plane => {
            let f = SurfaceGrid::sample(spec, dim, |x, y| padded(vec![x, y], dim))?;
            let fc = SurfaceGrid::sample(spec, dim, |x, y| padded(vec![x, -y], dim))?;
            ChristoffelPair::new(f, fc, 1.0)
        }
        Seed::Cylinder => {
            let f = SurfaceGrid::sample(spec, dim, |x, y| {
                let (s, c) = (2.0 * x).sin_cos();
                padded(vec![0.5 * s, 0.5 * (1.0 - c), y], dim)
            })?;
            let fc = SurfaceGrid::sample(spec, dim, |x, y| {
                let (s, c) = (2.0 * x).sin_cos();
                padded(vec![-0.5 * s, -0.5 * (1.0 - c), y], dim)
            })?;
            ChristoffelPair::new(f, fc, -1.0)
        }
        Seed::Revolution { profile } => {
            let f = SurfaceGrid::sample(spec, dim, |x, y| {
                let (r, z) = match profile {
                    Profile::Catenoid => (x.cosh(), x),
                    Profile::Sphere => (1.0 / x.cosh(), x.tanh()),
                };
                padded(vec![r * y.cos(), r * y.sin(), z], dim)
            })?;
            christoffel_transform(&f, 1.0)
        }
    }
}

/// Unit normal field of a seed in its first three coordinates: `e3` for
/// the plane, the inward normal `(−sin 2x, cos 2x, 0)` for the cylinder (so
/// that `H = 1` and `f^c + e2 = f + N`), the outward radial direction for
/// the sphere. Catenoids have no built-in normal.
pub fn seed_normal(seed: Seed, spec: &GridSpec, dim: usize) -> Option<SurfaceGrid> {
    let n: Box<dyn Fn(f64, f64) -> Vec<f64>> = match seed {
        Seed::Plane => Box::new(|_, _| vec![0.0, 0.0, 1.0]),
        Seed::Cylinder => Box::new(|x, _| {
            let (s, c) = (2.0 * x).sin_cos();
            vec![-s, c, 0.0]
        }),
        Seed::Revolution {
            profile: Profile::Sphere,
        } => Box::new(|x, y| {
            let r = 1.0 / x.cosh();
            vec![r * y.cos(), r * y.sin(), x.tanh()]
        }),
        Seed::Revolution {
            profile: Profile::Catenoid,
        } => return None,
    };
    if dim < 3 {
        return None;
    }
    SurfaceGrid::sample(spec, dim, |x, y| padded(n(x, y), dim)).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{christoffel_transform_with, isothermic_residual, ChristoffelOptions};

    #[test]
    fn plane_seed_is_isothermic() {
        let spec = GridSpec::new(101, 101, (-1.0, 1.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        assert!(isothermic_residual(&pair.f, &pair.fc).unwrap().max <= 1e-12);
        assert!(pair.polarisation_residual().max < 1e-12);
    }

    #[test]
    fn cylinder_seed_has_consistent_polarisation() {
        let spec = GridSpec::new(51, 21, (0.0, std::f64::consts::PI), (-1.0, 1.0));
        let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        assert!(isothermic_residual(&pair.f, &pair.fc).unwrap().max < 1e-12);
        assert!(pair.polarisation_residual().max < 1e-2);
        // the numerical dual converges to the closed form up to translation
        let dual_error = |spec: &GridSpec| {
            let pair = seed_surface(Seed::Cylinder, spec, 3).unwrap();
            let num = christoffel_transform(&pair.f, pair.q).unwrap();
            let o = pair.fc.at(spec.nx / 2, spec.ny / 2).to_vec();
            let shifted = pair.fc.translated(&o.iter().map(|v| -v).collect::<Vec<_>>());
            num.fc.max_difference(&shifted).unwrap()
        };
        let (coarse, fine) = (dual_error(&spec), dual_error(&spec.refined()));
        assert!(coarse < 1e-4 && coarse / fine > 10.0, "{coarse:e} → {fine:e}");
    }

    #[test]
    fn cylinder_normal_gives_parallel_dual() {
        let spec = GridSpec::new(11, 5, (0.0, 3.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        let n = seed_normal(Seed::Cylinder, &spec, 3).unwrap();
        let lhs = pair.fc.translated(&[0.0, 1.0, 0.0]);
        let rhs = pair.f.plus(&n).unwrap();
        assert!(lhs.max_difference(&rhs).unwrap() < 1e-15);
    }

    #[test]
    fn catenoid_closedness_converges() {
        let spec = GridSpec::new(21, 21, (-0.5, 0.5), (-1.0, 1.0));
        let f = |s: &GridSpec| {
            SurfaceGrid::sample(s, 3, |x, y| vec![x.cosh() * y.cos(), x.cosh() * y.sin(), x]).unwrap()
        };
        let (_, coarse) = christoffel_transform_with(&f(&spec), 1.0, ChristoffelOptions::default()).unwrap();
        let (_, fine) =
            christoffel_transform_with(&f(&spec.refined()), 1.0, ChristoffelOptions::default()).unwrap();
        let ratio = coarse.closedness / fine.closedness;
        assert!(ratio > 3.5, "closedness ratio {ratio}");
    }

    #[test]
    fn rejects_bad_dimension() {
        let spec = GridSpec::new(5, 5, (0.0, 1.0), (0.0, 1.0));
        assert!(matches!(
            seed_surface(Seed::Cylinder, &spec, 2),
            Err(SurfaceError::InvalidParams(_))
        ));
    }
}
