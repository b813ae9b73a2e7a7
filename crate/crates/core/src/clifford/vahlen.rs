use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::lightcone::{coords_of, point_from_coords};
use super::{CliffordError, ConformalPoint, Multivector, Signature, SCALAR_TOL};

/// 2×2 matrix over `Cl(n,0)`, the model `Cl_n(2) ≅ Cl(n+1,1)`.
///
/// Group elements satisfy the Vahlen conditions and act on `R^n ∪ {∞}` by
/// linear fractional transformations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VahlenMatrix {
    pub a: Multivector,
    pub b: Multivector,
    pub c: Multivector,
    pub d: Multivector,
}

/// Outcome of [`is_vahlen`]: overall verdict plus one line per failed
/// condition.
#[derive(Clone, Debug, PartialEq)]
pub struct VahlenReport {
    pub ok: bool,
    pub failures: Vec<String>,
    pub pseudo_determinant: Complex64,
}

impl VahlenMatrix {
    /// # Panics
    /// If the four entries do not share a signature.
    pub fn new(a: Multivector, b: Multivector, c: Multivector, d: Multivector) -> Self {
        let s = a.signature();
        assert!(
            b.signature() == s && c.signature() == s && d.signature() == s,
            "Vahlen entries share one signature"
        );
        Self { a, b, c, d }
    }

    pub fn identity(n: usize) -> Self {
        let s = Signature::euclidean(n);
        Self::new(
            Multivector::one(s),
            Multivector::zero(s),
            Multivector::zero(s),
            Multivector::one(s),
        )
    }

    pub fn zero(n: usize) -> Self {
        let s = Signature::euclidean(n);
        Self::new(
            Multivector::zero(s),
            Multivector::zero(s),
            Multivector::zero(s),
            Multivector::zero(s),
        )
    }

    /// Scalar multiple of the identity.
    pub fn scalar(n: usize, s: impl Into<Complex64>) -> Self {
        Self::identity(n).scale(s)
    }

    /// Translation `x ↦ x + t` as `(1, t; 0, 1)`.
    pub fn translation(t: &Multivector) -> Self {
        let s = t.signature();
        Self::new(Multivector::one(s), t.clone(), Multivector::zero(s), Multivector::one(s))
    }

    /// Inversion in the unit sphere, `(0, -1; 1, 0)`.
    pub fn inversion(n: usize) -> Self {
        let s = Signature::euclidean(n);
        Self::new(
            Multivector::zero(s),
            Multivector::scalar(s, -1.0),
            Multivector::one(s),
            Multivector::zero(s),
        )
    }

    /// Block-diagonal matrix `diag(a, d)`.
    pub fn diagonal(a: Multivector, d: Multivector) -> Self {
        let s = a.signature();
        Self::new(a, Multivector::zero(s), Multivector::zero(s), d)
    }

    /// Off-diagonal matrix `(0, b; c, 0)`.
    pub fn off_diagonal(b: Multivector, c: Multivector) -> Self {
        let s = b.signature();
        Self::new(Multivector::zero(s), b, c, Multivector::zero(s))
    }

    /// Dimension `n` of the underlying `R^n`.
    pub fn n(&self) -> usize {
        self.a.signature().dim()
    }

    pub fn signature(&self) -> Signature {
        self.a.signature()
    }

    pub fn entries(&self) -> [&Multivector; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    fn map(&self, f: impl Fn(&Multivector) -> Multivector) -> Self {
        Self {
            a: f(&self.a),
            b: f(&self.b),
            c: f(&self.c),
            d: f(&self.d),
        }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        self.map(|m| m.scale(s))
    }

    pub fn complex_conj(&self) -> Self {
        self.map(Multivector::complex_conj)
    }

    pub fn max_norm(&self) -> f64 {
        self.entries().iter().fold(0.0, |acc, m| acc.max(m.max_norm()))
    }

    pub fn is_real(&self) -> bool {
        self.entries().iter().all(|m| m.is_real())
    }

    /// Pseudo-determinant `a d^t − b c^t`.
    pub fn pseudo_determinant(&self) -> Multivector {
        &(&self.a * &self.d.transpose()) - &(&self.b * &self.c.transpose())
    }

    /// Conjugate `(d^t, −b^t; −c^t, a^t)`.
    pub fn conjugate(&self) -> Self {
        Self {
            a: self.d.transpose(),
            b: -self.b.transpose(),
            c: -self.c.transpose(),
            d: self.a.transpose(),
        }
    }

    /// Transpose `(d̄, b̄; c̄, ā)`.
    pub fn transpose(&self) -> Self {
        Self {
            a: self.d.conjugate(),
            b: self.b.conjugate(),
            c: self.c.conjugate(),
            d: self.a.conjugate(),
        }
    }

    /// Order involution `(ã, −b̃; −c̃, d̃)`.
    pub fn grade_involution(&self) -> Self {
        Self {
            a: self.a.grade_involution(),
            b: -self.b.grade_involution(),
            c: -self.c.grade_involution(),
            d: self.d.grade_involution(),
        }
    }

    /// Scalar pseudo-determinant, or an error if it is not a nonzero scalar.
    pub fn scalar_determinant(&self) -> Result<Complex64, CliffordError> {
        let pd = self.pseudo_determinant();
        if !pd.is_scalar() {
            return Err(CliffordError::InvalidVahlen(
                "pseudo-determinant is not a scalar".into(),
            ));
        }
        let det = pd.scalar_part();
        if det.norm() <= SCALAR_TOL * self.max_norm().powi(2).max(f64::MIN_POSITIVE) {
            return Err(CliffordError::SingularElement(det.norm()));
        }
        Ok(det)
    }

    /// Group inverse `conj(M) / (ad^t − bc^t)`.
    pub fn inverse(&self) -> Result<Self, CliffordError> {
        let det = self.scalar_determinant()?;
        Ok(self.conjugate().scale(det.inv()))
    }

    /// Rescales so that the pseudo-determinant is one. The square-root branch
    /// is the principal one.
    pub fn normalized(&self) -> Result<Self, CliffordError> {
        let det = self.scalar_determinant()?;
        Ok(self.scale(det.sqrt().inv()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    /// Twisted adjoint action on an element of the vector space `V`
    /// (see [`super::lightcone`]): `v ↦ g v g^t / det g`.
    pub fn act_on_vector(&self, v: &Self) -> Result<Self, CliffordError> {
        let det = self.scalar_determinant()?;
        Ok((&(self * v) * &self.transpose()).scale(det.inv()))
    }

    /// Same as [`Self::act_on_vector`] for a group element already known to
    /// have unit pseudo-determinant.
    pub fn act_on_vector_unit(&self, v: &Self) -> Self {
        &(self * v) * &self.transpose()
    }

    /// Orthogonal matrix of the twisted adjoint action on `R^{n+1,1}` in the
    /// coordinates `(x_1..x_n, v0, v∞)`.
    pub fn vector_representation(&self) -> Result<DMatrix<Complex64>, CliffordError> {
        let n = self.n();
        let det_inv = self.scalar_determinant()?.inv();
        let gt = self.transpose();
        let mut m = DMatrix::zeros(n + 2, n + 2);
        for j in 0..n + 2 {
            let mut e = vec![Complex64::new(0.0, 0.0); n + 2];
            e[j] = Complex64::new(1.0, 0.0);
            let image = &(self * &point_from_coords(n, &e)) * &gt;
            for (i, c) in coords_of(&image).into_iter().enumerate() {
                m[(i, j)] = c * det_inv;
            }
        }
        Ok(m)
    }

    /// Matrix exponential by scaling and squaring of the Taylor series.
    pub fn exp(&self) -> Self {
        let n = self.n();
        let l1 = |m: &Multivector| m.coeffs().iter().map(|c| c.norm()).sum::<f64>();
        let bound = (l1(&self.a) + l1(&self.b)).max(l1(&self.c) + l1(&self.d));
        let mut squarings = 0;
        let mut scaled = bound;
        while scaled > 0.25 {
            scaled *= 0.5;
            squarings += 1;
        }
        let x = self.scale(0.5f64.powi(squarings));
        let mut sum = Self::identity(n);
        let mut term = Self::identity(n);
        for k in 1..=30 {
            term = (&term * &x).scale(1.0 / k as f64);
            sum = &sum + &term;
            if term.max_norm() <= 1e-18 * sum.max_norm() {
                break;
            }
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        sum
    }

    /// Linear fractional action without the Vahlen check.
    pub fn apply_unchecked(&self, x: &ConformalPoint) -> Result<ConformalPoint, CliffordError> {
        let zero_tol = |scale: f64| 1e-12 * (1.0 + scale);
        match x {
            ConformalPoint::Infinity => {
                if self.c.max_norm() <= zero_tol(self.a.max_norm()) {
                    Ok(ConformalPoint::Infinity)
                } else {
                    ConformalPoint::finite(&self.a * &self.c.inverse()?)
                }
            }
            ConformalPoint::Finite(p) => {
                let num = &(&self.a * p) + &self.b;
                let den = &(&self.c * p) + &self.d;
                if den.max_norm() <= zero_tol(self.c.max_norm() * p.max_norm() + self.d.max_norm()) {
                    Ok(ConformalPoint::Infinity)
                } else {
                    ConformalPoint::finite(&num * &den.inverse()?)
                }
            }
        }
    }
}

/// Checks the Vahlen conditions entry by entry.
pub fn is_vahlen(m: &VahlenMatrix) -> (bool, VahlenReport) {
    let mut failures = Vec::new();
    let scale = m.max_norm().max(f64::MIN_POSITIVE);
    for (name, entry) in ["a", "b", "c", "d"].iter().zip(m.entries()) {
        if entry.max_norm() <= SCALAR_TOL * scale {
            continue;
        }
        let norm = entry * &entry.conjugate();
        if !norm.is_scalar() {
            failures.push(format!("entry {name} has a non-scalar Clifford norm"));
        }
    }
    let pd = m.pseudo_determinant();
    let det = pd.scalar_part();
    if !pd.is_scalar() {
        failures.push("pseudo-determinant is not a scalar".into());
    } else if det.norm() <= SCALAR_TOL * scale * scale {
        failures.push("pseudo-determinant vanishes".into());
    }
    let products = [
        ("a c^t", &m.a * &m.c.transpose()),
        ("b d^t", &m.b * &m.d.transpose()),
        ("a^t b", &m.a.transpose() * &m.b),
        ("c^t d", &m.c.transpose() * &m.d),
    ];
    for (name, p) in products {
        if !p.is_vector() {
            failures.push(format!("{name} is not a vector"));
        }
    }
    let ok = failures.is_empty();
    (
        ok,
        VahlenReport {
            ok,
            failures,
            pseudo_determinant: det,
        },
    )
}

/// Möbius action `x ↦ (ax+b)(cx+d)⁻¹`, with `∞ ↦ ac⁻¹`.
pub fn mobius_apply(m: &VahlenMatrix, x: &ConformalPoint) -> Result<ConformalPoint, CliffordError> {
    let (ok, report) = is_vahlen(m);
    if !ok {
        return Err(CliffordError::InvalidVahlen(report.failures.join("; ")));
    }
    m.apply_unchecked(x)
}

impl<'a> Mul<&'a VahlenMatrix> for &'a VahlenMatrix {
    type Output = VahlenMatrix;

    fn mul(self, r: &'a VahlenMatrix) -> VahlenMatrix {
        VahlenMatrix {
            a: &(&self.a * &r.a) + &(&self.b * &r.c),
            b: &(&self.a * &r.b) + &(&self.b * &r.d),
            c: &(&self.c * &r.a) + &(&self.d * &r.c),
            d: &(&self.c * &r.b) + &(&self.d * &r.d),
        }
    }
}

impl Mul for VahlenMatrix {
    type Output = VahlenMatrix;

    fn mul(self, r: VahlenMatrix) -> VahlenMatrix {
        &self * &r
    }
}

impl<'a> Add<&'a VahlenMatrix> for &'a VahlenMatrix {
    type Output = VahlenMatrix;

    fn add(self, r: &'a VahlenMatrix) -> VahlenMatrix {
        VahlenMatrix {
            a: &self.a + &r.a,
            b: &self.b + &r.b,
            c: &self.c + &r.c,
            d: &self.d + &r.d,
        }
    }
}

impl<'a> Sub<&'a VahlenMatrix> for &'a VahlenMatrix {
    type Output = VahlenMatrix;

    fn sub(self, r: &'a VahlenMatrix) -> VahlenMatrix {
        VahlenMatrix {
            a: &self.a - &r.a,
            b: &self.b - &r.b,
            c: &self.c - &r.c,
            d: &self.d - &r.d,
        }
    }
}

impl Neg for &VahlenMatrix {
    type Output = VahlenMatrix;

    fn neg(self) -> VahlenMatrix {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::lightcone::{v0, v_inf};

    fn vec3(x: [f64; 3]) -> Multivector {
        Multivector::vector(Signature::euclidean(3), &x)
    }

    #[test]
    fn null_basis_anticommutator() {
        let s = &(&v0(3) * &v_inf(3)) + &(&v_inf(3) * &v0(3));
        assert_eq!(s, VahlenMatrix::identity(3));
    }

    #[test]
    fn vahlen_examples() {
        assert!(is_vahlen(&VahlenMatrix::identity(3)).0);
        assert!(is_vahlen(&VahlenMatrix::inversion(3)).0);
        let s = Signature::euclidean(3);
        let bad = VahlenMatrix::new(
            Multivector::basis_vector(s, 0),
            Multivector::one(s),
            Multivector::zero(s),
            Multivector::zero(s),
        );
        let (ok, report) = is_vahlen(&bad);
        assert!(!ok);
        assert!(report.failures.iter().any(|f| f.contains("vanishes")));
    }

    #[test]
    fn mobius_examples() {
        let x = ConformalPoint::from_real(&[1.0, 2.0, -0.5]);
        assert_eq!(mobius_apply(&VahlenMatrix::identity(3), &x).unwrap(), x);
        let inv = mobius_apply(&VahlenMatrix::inversion(3), &x).unwrap();
        let r2 = 1.0 + 4.0 + 0.25;
        let expected = ConformalPoint::from_real(&[1.0 / r2, 2.0 / r2, -0.5 / r2]);
        assert!(inv.distance(&expected) < 1e-15);
        let shifted = mobius_apply(&VahlenMatrix::translation(&vec3([1.0, 0.0, 3.0])), &x).unwrap();
        assert!(shifted.distance(&ConformalPoint::from_real(&[2.0, 2.0, 2.5])) < 1e-15);
        let origin = ConformalPoint::from_real(&[0.0, 0.0, 0.0]);
        assert_eq!(
            mobius_apply(&VahlenMatrix::inversion(3), &origin).unwrap(),
            ConformalPoint::Infinity
        );
        assert_eq!(
            mobius_apply(&VahlenMatrix::inversion(3), &ConformalPoint::Infinity).unwrap(),
            ConformalPoint::from_real(&[0.0, 0.0, 0.0])
        );
    }

    #[test]
    fn exponential_of_nilpotent_is_translation() {
        let t = vec3([0.3, -1.0, 2.0]);
        let x = VahlenMatrix::off_diagonal(t.clone(), Multivector::zero(t.signature()));
        let e = x.exp();
        assert!((&e - &VahlenMatrix::translation(&t)).max_norm() < 1e-15);
    }

    #[test]
    fn vector_representation_of_inversion_swaps_null_vectors() {
        let m = VahlenMatrix::inversion(2).vector_representation().unwrap();
        // inversion fixes R^n pointwise up to sign and swaps v0, v∞ up to sign
        assert!((m[(2, 3)].norm() - 1.0).abs() < 1e-15);
        assert!((m[(3, 2)].norm() - 1.0).abs() < 1e-15);
        assert!(m[(2, 2)].norm() < 1e-15);
    }
}
