//! The light-cone model of the conformal sphere.
//!
//! Vectors of `R^{n+1,1}` are realized inside `Cl_n(2)` as matrices
//! `(x, λ; μ, −x)`, whose square is `−(v,v)` times the identity. Coordinates
//! used throughout the crate are `(x_1, …, x_n, a0, a∞)` for
//! `x + a0·v0 + a∞·v∞`, where `v0 = (0,0;1,0)` and `v∞ = (0,1;0,0)` are null
//! with `(v0, v∞) = −½`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{CliffordError, ConformalPoint, Multivector, Signature, VahlenMatrix, SCALAR_TOL};

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// The null vector `v0 = (0, 0; 1, 0)`, image of the origin.
pub fn v0(n: usize) -> VahlenMatrix {
    let s = Signature::euclidean(n);
    VahlenMatrix::new(
        Multivector::zero(s),
        Multivector::zero(s),
        Multivector::one(s),
        Multivector::zero(s),
    )
}

/// The null vector `v∞ = (0, 1; 0, 0)`, image of the point at infinity.
pub fn v_inf(n: usize) -> VahlenMatrix {
    let s = Signature::euclidean(n);
    VahlenMatrix::new(
        Multivector::zero(s),
        Multivector::one(s),
        Multivector::zero(s),
        Multivector::zero(s),
    )
}

/// Element of `V ⊂ Cl_n(2)` with the given coordinates.
pub fn point_from_coords(n: usize, coords: &[Complex64]) -> VahlenMatrix {
    assert_eq!(coords.len(), n + 2, "coordinate vector has length n + 2");
    let s = Signature::euclidean(n);
    let x = Multivector::complex_vector(s, &coords[..n]);
    VahlenMatrix::new(
        x.clone(),
        Multivector::scalar(s, coords[n + 1]),
        Multivector::scalar(s, coords[n]),
        -x,
    )
}

/// Coordinates `(x, a0, a∞)` of an element of `V`.
pub fn coords_of(v: &VahlenMatrix) -> Vec<Complex64> {
    let mut out = v.a.vector_part();
    out.push(v.c.scalar_part());
    out.push(v.b.scalar_part());
    out
}

/// Complex bilinear (not Hermitian) inner product of `R^{n+1,1}`.
pub fn minkowski_inner(u: &[Complex64], w: &[Complex64]) -> Complex64 {
    let n = u.len() - 2;
    let mut acc: Complex64 = u[..n].iter().zip(&w[..n]).map(|(a, b)| a * b).sum();
    acc -= 0.5 * (u[n] * w[n + 1] + u[n + 1] * w[n]);
    acc
}

/// Gram matrix of the coordinate basis.
pub fn minkowski_gram(n: usize) -> DMatrix<f64> {
    let mut g = DMatrix::identity(n + 2, n + 2);
    g[(n, n)] = 0.0;
    g[(n + 1, n + 1)] = 0.0;
    g[(n, n + 1)] = -0.5;
    g[(n + 1, n)] = -0.5;
    g
}

/// The reflection `ρ` negating the `R^n` block.
pub fn rho(coords: &[Complex64]) -> Vec<Complex64> {
    let n = coords.len() - 2;
    coords
        .iter()
        .enumerate()
        .map(|(i, &x)| if i < n { -x } else { x })
        .collect()
}

/// Inner product of two elements of `V` read off from the Clifford product,
/// `(v, w) = −½ (vw + wv)`.
pub fn vahlen_inner(v: &VahlenMatrix, w: &VahlenMatrix) -> Complex64 {
    let s = &(v * w) + &(w * v);
    -0.5 * s.a.scalar_part()
}

/// Light-cone coordinates of `x`: `x + v0 + (x,x) v∞`.
pub fn lightcone_embed_coords(x: &[Complex64]) -> Vec<Complex64> {
    let xx: Complex64 = x.iter().map(|a| a * a).sum();
    let mut out = x.to_vec();
    out.push(c(1.0));
    out.push(xx);
    out
}

/// Light-cone embedding `x ↦ (x, −x²; 1, −x)`.
pub fn lightcone_embed(x: &Multivector) -> Result<VahlenMatrix, CliffordError> {
    if !x.is_vector() {
        return Err(CliffordError::NotAVector);
    }
    let n = x.signature().dim();
    Ok(point_from_coords(n, &lightcone_embed_coords(&x.vector_part())))
}

/// Stereographic projection of a null vector back to `R^n`: the upper-left
/// entry divided by the lower-left entry.
pub fn stereo_project(v: &VahlenMatrix) -> Result<ConformalPoint, CliffordError> {
    let coords = coords_of(v);
    let n = v.n();
    let scale = coords.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
    let a0 = coords[n];
    if a0.norm() <= SCALAR_TOL * scale || scale == 0.0 {
        return Err(CliffordError::PointAtInfinity);
    }
    let x: Vec<Complex64> = coords[..n].iter().map(|z| z / a0).collect();
    Ok(ConformalPoint::Finite(Multivector::complex_vector(
        Signature::euclidean(n),
        &x,
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_examples() {
        let s = Signature::euclidean(3);
        assert_eq!(lightcone_embed(&Multivector::zero(s)).unwrap(), v0(3));
        let e1 = Multivector::basis_vector(s, 0);
        let emb = lightcone_embed(&e1).unwrap();
        // scalar block −x² = (x,x) = 1
        assert_eq!(emb.b, Multivector::one(s));
        assert_eq!(emb.d, -e1.clone());
        let x = Multivector::vector(s, &[0.5, -2.0, 1.0]);
        let twice = lightcone_embed(&x).unwrap().scale(2.0);
        assert_eq!(stereo_project(&twice).unwrap(), ConformalPoint::Finite(x));
        assert!(matches!(
            stereo_project(&v_inf(3)),
            Err(CliffordError::PointAtInfinity)
        ));
    }

    #[test]
    fn embedded_points_are_null() {
        let s = Signature::euclidean(4);
        let x = Multivector::vector(s, &[0.3, -1.2, 2.0, 0.7]);
        let p = lightcone_embed(&x).unwrap();
        assert!(vahlen_inner(&p, &p).norm() < 1e-14);
        let coords = coords_of(&p);
        assert!(minkowski_inner(&coords, &coords).norm() < 1e-14);
        // the matrix square is −(v,v) times the identity
        let sq = &p * &p;
        assert!(sq.max_norm() < 1e-14);
    }

    #[test]
    fn inner_products_agree() {
        let n = 3;
        let u: Vec<Complex64> = [0.2, -1.0, 0.5, 1.5, -0.7].iter().map(|&x| c(x)).collect();
        let w: Vec<Complex64> = [1.0, 0.3, -0.2, 0.4, 2.0].iter().map(|&x| c(x)).collect();
        let a = minkowski_inner(&u, &w);
        let b = vahlen_inner(&point_from_coords(n, &u), &point_from_coords(n, &w));
        assert!((a - b).norm() < 1e-14);
        assert!((vahlen_inner(&v0(n), &v_inf(n)) - c(-0.5)).norm() < 1e-15);
    }
}
