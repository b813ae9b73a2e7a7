use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CliffordError, Multivector, Signature};

/// A point of the conformal sphere `R^n ∪ {∞}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConformalPoint {
    /// Finite point, always a grade-1 element of `Cl(n,0)`.
    Finite(Multivector),
    Infinity,
}

impl ConformalPoint {
    /// Finite point from a grade-1 multivector; the grade is checked and
    /// negligible off-grade coefficients are dropped.
    pub fn finite(x: Multivector) -> Result<Self, CliffordError> {
        if !x.is_vector() {
            return Err(CliffordError::NotAVector);
        }
        Ok(ConformalPoint::Finite(x.grade(1)))
    }

    pub fn from_real(x: &[f64]) -> Self {
        ConformalPoint::Finite(Multivector::vector(Signature::euclidean(x.len()), x))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, ConformalPoint::Infinity)
    }

    /// Components of a finite point.
    pub fn components(&self) -> Option<Vec<Complex64>> {
        match self {
            ConformalPoint::Finite(x) => Some(x.vector_part()),
            ConformalPoint::Infinity => None,
        }
    }

    /// Max-norm distance between finite points; `0` for two infinities and
    /// `+∞` otherwise.
    pub fn distance(&self, other: &Self) -> f64 {
        match (self, other) {
            (ConformalPoint::Finite(a), ConformalPoint::Finite(b)) => (a - b).max_norm(),
            (ConformalPoint::Infinity, ConformalPoint::Infinity) => 0.0,
            _ => f64::INFINITY,
        }
    }
}

/// Clifford cross-ratio `(v1−v0)(v2−v1)⁻¹(v2−v3)(v3−v0)⁻¹` and whether it is
/// real (a scalar), which happens exactly for concircular points.
pub fn cross_ratio(
    v0: &Multivector,
    v1: &Multivector,
    v2: &Multivector,
    v3: &Multivector,
) -> Result<(Multivector, bool), CliffordError> {
    let pts = [v0, v1, v2, v3];
    let scale = pts.iter().fold(0.0f64, |acc, p| acc.max(p.max_norm()));
    for i in 0..4 {
        for j in i + 1..4 {
            // v0 = v2 is allowed: it gives the degenerate value 1.
            if (i, j) == (0, 2) {
                continue;
            }
            if (pts[i] - pts[j]).max_norm() <= 1e-13 * (1.0 + scale) {
                return Err(CliffordError::CoincidentPoints);
            }
        }
    }
    let cr = &(&(v1 - v0) * &(v2 - v1).inverse()?) * &(&(v2 - v3) * &(v3 - v0).inverse()?);
    let real = cr.is_scalar();
    Ok((cr, real))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: &[f64]) -> Multivector {
        Multivector::vector(Signature::euclidean(3), x)
    }

    #[test]
    fn collinear_cross_ratio_matches_complex_oracle() {
        let (cr, real) = cross_ratio(
            &pt(&[0.0, 0.0, 0.0]),
            &pt(&[1.0, 0.0, 0.0]),
            &pt(&[2.0, 0.0, 0.0]),
            &pt(&[3.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!(real);
        // complex oracle: (z1−z0)/(z2−z1) · (z2−z3)/(z3−z0)
        let oracle = (1.0 / 1.0) * (-1.0 / 3.0);
        assert!((cr.scalar_part().re - oracle).abs() < 1e-15);
    }

    #[test]
    fn repeated_point_gives_one() {
        let f = pt(&[0.3, 0.1, -0.2]);
        let (cr, real) =
            cross_ratio(&f, &pt(&[1.0, 2.0, 0.0]), &f, &pt(&[-1.0, 0.5, 0.5])).unwrap();
        assert!(real);
        assert!((cr.scalar_part().re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn non_concircular_points_are_not_real() {
        let (_, real) = cross_ratio(
            &pt(&[0.0, 0.0, 0.0]),
            &pt(&[1.0, 0.0, 0.0]),
            &pt(&[0.0, 1.0, 0.0]),
            &pt(&[0.0, 0.0, 1.0]),
        )
        .unwrap();
        assert!(!real);
    }

    #[test]
    fn coincident_points_are_rejected() {
        let p = pt(&[1.0, 0.0, 0.0]);
        assert!(matches!(
            cross_ratio(&p, &p, &pt(&[0.0, 1.0, 0.0]), &pt(&[0.0, 0.0, 1.0])),
            Err(CliffordError::CoincidentPoints)
        ));
    }
}
