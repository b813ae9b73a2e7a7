use super::darboux::DarbouxResult;
use super::TransformError;
use crate::surface::{ChristoffelPair, NodeResidual, SurfaceGrid};
use crate::vecops::dot;

/// Tolerance on `|N| = 1`.
const UNIT_TOL: f64 = 1e-8;

/// Conserved quantity of the Riccati equation over a generalised H-surface
/// with `f^c = H f + N`:
/// `I = r H g² − r {g, N} − 1 = −r H |g|² + 2 r (g, N) − 1`.
///
/// Returns `|I|` on the unmasked nodes of `result`. When `I(o) = 0` it
/// vanishes identically.
pub fn h_surface_invariant(
    pair: &ChristoffelPair,
    result: &DarbouxResult,
    normal: &SurfaceGrid,
    h: f64,
) -> Result<NodeResidual, TransformError> {
    if !normal.congruent(&pair.f) || !result.g.congruent(&pair.f) {
        return Err(crate::surface::SurfaceError::GridMismatch.into());
    }
    let defect = (0..normal.node_count())
        .map(|k| (dot(normal.node(k), normal.node(k)).sqrt() - 1.0).abs())
        .fold(0.0, f64::max);
    if defect > UNIT_TOL {
        return Err(TransformError::NotUnitNormal(defect));
    }
    let r = result.r;
    Ok(NodeResidual::evaluate(
        pair.f.node_count(),
        |k| !result.singular_mask[k],
        |k| {
            let g = result.g.node(k);
            (-r * h * dot(g, g) + 2.0 * r * dot(g, normal.node(k)) - 1.0).abs()
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{seed_normal, seed_surface, GridSpec, Seed};
    use crate::transform::darboux;
    use crate::vecops::{conjugate_by, norm};

    /// Cylinder with `f^c = f + N` exactly (the seed dual shifted by `e2`).
    fn cylinder() -> (ChristoffelPair, SurfaceGrid) {
        let spec = GridSpec::new(51, 51, (0.0, 1.0), (-0.5, 0.5));
        let seed = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        let normal = seed_normal(Seed::Cylinder, &spec, 3).unwrap();
        let fc = seed.f.plus(&normal).unwrap();
        (ChristoffelPair::new(seed.f, fc, seed.q).unwrap(), normal)
    }

    /// `g(o) = N(o) + w` with `w ⊥ N(o)` and `|w|² = ½`, so `I(o) = 0` for
    /// `r = 2`, `H = 1`.
    fn admissible(pair: &ChristoffelPair, normal: &SurfaceGrid, shift: f64) -> Vec<f64> {
        let o = pair.f.base_node();
        let nrm = normal.node(o);
        let w = [0.0, 0.0, 0.5f64.sqrt()];
        assert!(dot(nrm, &w).abs() < 1e-15);
        (0..3).map(|c| pair.f.node(o)[c] + nrm[c] * (1.0 + shift) + w[c]).collect()
    }

    #[test]
    fn invariant_is_conserved() {
        let (pair, normal) = cylinder();
        let v = admissible(&pair, &normal, 0.0);
        let d = darboux(&pair, 2.0, &v).unwrap();
        let drift = h_surface_invariant(&pair, &d, &normal, 1.0).unwrap();
        assert!(drift.max <= 1e-7, "{:e}", drift.max);
    }

    #[test]
    fn inadmissible_start_keeps_its_value() {
        let (pair, normal) = cylinder();
        // g(o) = (1 + s) N + w gives I(o) = −2 s²
        let v = admissible(&pair, &normal, 0.5);
        let d = darboux(&pair, 2.0, &v).unwrap();
        let drift = h_surface_invariant(&pair, &d, &normal, 1.0).unwrap();
        let base = drift.per_node[pair.f.base_node()];
        assert!((base - 0.5).abs() < 1e-12);
        assert!(drift.max > 1e-7);
    }

    #[test]
    fn parallel_dual_is_reflected_normal() {
        let (pair, normal) = cylinder();
        let d = darboux(&pair, 2.0, &admissible(&pair, &normal, 0.0)).unwrap();
        let mut worst = 0.0f64;
        for k in (0..pair.f.node_count()).filter(|k| !d.singular_mask[*k]) {
            let g = d.g.node(k);
            let n_hat: Vec<f64> = conjugate_by(g, normal.node(k)).iter().map(|x| -x).collect();
            let rhs: Vec<f64> = (0..3).map(|c| d.fhat.node(k)[c] + n_hat[c]).collect();
            let diff: Vec<f64> = (0..3).map(|c| d.fhat_c.node(k)[c] - rhs[c]).collect();
            worst = worst.max(norm(&diff));
        }
        assert!(worst <= 1e-6, "{worst:e}");
    }

    #[test]
    fn rejects_non_unit_normal() {
        let (pair, normal) = cylinder();
        let d = darboux(&pair, 2.0, &admissible(&pair, &normal, 0.0)).unwrap();
        let long = normal.map(3, |_, v| v.iter().map(|x| 2.0 * x).collect());
        assert!(matches!(
            h_surface_invariant(&pair, &d, &long, 1.0),
            Err(TransformError::NotUnitNormal(_))
        ));
    }
}
