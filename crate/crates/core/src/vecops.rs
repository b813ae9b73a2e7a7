//! Small helpers for vectors of `R^n` stored as slices, with the Clifford
//! identities for products of vectors written out explicitly.

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub(crate) fn scale(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|x| x * s).collect()
}

/// `g w g` for vectors, which is again a vector: `(g,g) w − 2 (g,w) g`.
pub(crate) fn sandwich(g: &[f64], w: &[f64]) -> Vec<f64> {
    let gg = dot(g, g);
    let gw = dot(g, w);
    g.iter().zip(w).map(|(gi, wi)| gg * wi - 2.0 * gw * gi).collect()
}

/// Clifford inverse of a vector, `g⁻¹ = −g / (g,g)`.
pub(crate) fn vinv(g: &[f64]) -> Vec<f64> {
    scale(g, -1.0 / dot(g, g))
}

/// `g w g⁻¹` for vectors.
pub(crate) fn conjugate_by(g: &[f64], w: &[f64]) -> Vec<f64> {
    scale(&sandwich(g, w), -1.0 / dot(g, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::{Multivector, Signature};

    #[test]
    fn sandwich_matches_clifford_product() {
        let s = Signature::euclidean(4);
        let g = [0.3, -1.1, 0.7, 2.0];
        let w = [1.5, 0.2, -0.4, 0.9];
        let mg = Multivector::vector(s, &g);
        let mw = Multivector::vector(s, &w);
        let prod = &(&mg * &mw) * &mg;
        let expected = Multivector::vector(s, &sandwich(&g, &w));
        assert!((&prod - &expected).max_norm() < 1e-14);
        let inv = mg.inverse().unwrap();
        assert!((&inv - &Multivector::vector(s, &vinv(&g))).max_norm() < 1e-15);
        let conj = &(&mg * &mw) * &inv;
        assert!((&conj - &Multivector::vector(s, &conjugate_by(&g, &w))).max_norm() < 1e-14);
    }
}
