use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{CliffordError, Signature, SCALAR_TOL};

/// The three involutions of a Clifford algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Involution {
    /// Order involution: automorphism with `v ↦ -v` on vectors.
    Grade,
    /// Anti-automorphism fixing vectors (reversion).
    Transpose,
    /// Anti-automorphism with `v ↦ -v` on vectors.
    Conjugate,
}

impl Involution {
    /// Sign picked up by a basis blade of grade `k`.
    fn sign(self, k: u32) -> f64 {
        let flips = match self {
            Involution::Grade => k,
            Involution::Transpose => k * k.saturating_sub(1) / 2,
            Involution::Conjugate => k * (k + 1) / 2,
        };
        if flips & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

/// Dense element of `Cl(p,q)` with complex coefficients indexed by blade
/// bitmask. Real elements simply carry zero imaginary parts.
#[derive(Clone, Debug, PartialEq)]
pub struct Multivector {
    sig: Signature,
    coeffs: Vec<Complex64>,
}

impl Multivector {
    pub fn zero(sig: Signature) -> Self {
        Self {
            sig,
            coeffs: vec![Complex64::new(0.0, 0.0); sig.blade_count()],
        }
    }

    pub fn scalar(sig: Signature, s: impl Into<Complex64>) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[0] = s.into();
        m
    }

    pub fn one(sig: Signature) -> Self {
        Self::scalar(sig, 1.0)
    }

    /// Single basis blade `coeff * e_mask`.
    pub fn blade(sig: Signature, mask: usize, coeff: impl Into<Complex64>) -> Self {
        let mut m = Self::zero(sig);
        m.coeffs[mask] = coeff.into();
        m
    }

    /// Generator `e_{i+1}` (zero-based index).
    pub fn basis_vector(sig: Signature, i: usize) -> Self {
        Self::blade(sig, 1 << i, 1.0)
    }

    pub fn from_coeffs(sig: Signature, coeffs: Vec<Complex64>) -> Result<Self, CliffordError> {
        if coeffs.len() != sig.blade_count() {
            return Err(CliffordError::BadLength {
                got: coeffs.len(),
                expected: sig.blade_count(),
            });
        }
        Ok(Self { sig, coeffs })
    }

    /// Grade-1 element from real components.
    ///
    /// # Panics
    /// If `v` has more components than generators.
    pub fn vector(sig: Signature, v: &[f64]) -> Self {
        assert!(v.len() <= sig.dim(), "vector longer than signature");
        let mut m = Self::zero(sig);
        for (i, &x) in v.iter().enumerate() {
            m.coeffs[1 << i] = Complex64::new(x, 0.0);
        }
        m
    }

    /// Grade-1 element from complex components.
    ///
    /// # Panics
    /// If `v` has more components than generators.
    pub fn complex_vector(sig: Signature, v: &[Complex64]) -> Self {
        assert!(v.len() <= sig.dim(), "vector longer than signature");
        let mut m = Self::zero(sig);
        for (i, &x) in v.iter().enumerate() {
            m.coeffs[1 << i] = x;
        }
        m
    }

    pub fn signature(&self) -> Signature {
        self.sig
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, mask: usize) -> Complex64 {
        self.coeffs[mask]
    }

    pub fn set_coeff(&mut self, mask: usize, value: impl Into<Complex64>) {
        self.coeffs[mask] = value.into();
    }

    pub fn scalar_part(&self) -> Complex64 {
        self.coeffs[0]
    }

    /// Grade-1 components.
    pub fn vector_part(&self) -> Vec<Complex64> {
        (0..self.sig.dim()).map(|i| self.coeffs[1 << i]).collect()
    }

    /// Real parts of the grade-1 components.
    pub fn real_vector_part(&self) -> Vec<f64> {
        (0..self.sig.dim()).map(|i| self.coeffs[1 << i].re).collect()
    }

    /// Projection onto grade `k`.
    pub fn grade(&self, k: u32) -> Self {
        let mut m = Self::zero(self.sig);
        for (mask, c) in self.coeffs.iter().enumerate() {
            if mask.count_ones() == k {
                m.coeffs[mask] = *c;
            }
        }
        m
    }

    /// Largest coefficient modulus.
    pub fn max_norm(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |acc, c| acc.max(c.norm()))
    }

    /// Euclidean norm of the coefficient array.
    pub fn coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest modulus among coefficients outside grade `k`.
    fn off_grade_norm(&self, k: u32) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(mask, _)| mask.count_ones() != k)
            .fold(0.0, |acc, (_, c)| acc.max(c.norm()))
    }

    /// True when non-scalar coefficients are negligible relative to the whole.
    pub fn is_scalar(&self) -> bool {
        self.off_grade_norm(0) <= SCALAR_TOL * (1.0 + self.max_norm())
    }

    /// True when coefficients outside grade 1 are negligible.
    pub fn is_vector(&self) -> bool {
        self.off_grade_norm(1) <= SCALAR_TOL * (1.0 + self.max_norm())
    }

    pub fn is_zero(&self, tol: f64) -> bool {
        self.max_norm() <= tol
    }

    /// True when every imaginary part is zero.
    pub fn is_real(&self) -> bool {
        self.coeffs.iter().all(|c| c.im == 0.0)
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        let s = s.into();
        Self {
            sig: self.sig,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    /// Complex conjugation of the coefficients (not a Clifford involution).
    pub fn complex_conj(&self) -> Self {
        Self {
            sig: self.sig,
            coeffs: self.coeffs.iter().map(|c| c.conj()).collect(),
        }
    }

    pub fn involution(&self, kind: Involution) -> Self {
        Self {
            sig: self.sig,
            coeffs: self
                .coeffs
                .iter()
                .enumerate()
                .map(|(mask, c)| c * kind.sign(mask.count_ones()))
                .collect(),
        }
    }

    /// Order involution `ã`.
    pub fn grade_involution(&self) -> Self {
        self.involution(Involution::Grade)
    }

    /// Transpose `a^t`.
    pub fn transpose(&self) -> Self {
        self.involution(Involution::Transpose)
    }

    /// Conjugate `ā`.
    pub fn conjugate(&self) -> Self {
        self.involution(Involution::Conjugate)
    }

    /// Geometric product, checking signatures.
    pub fn try_mul(&self, other: &Self) -> Result<Self, CliffordError> {
        if self.sig != other.sig {
            return Err(CliffordError::SignatureMismatch(self.sig, other.sig));
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.coeffs.len()];
        for (i, x) in self.coeffs.iter().enumerate() {
            if x.re == 0.0 && x.im == 0.0 {
                continue;
            }
            for (j, y) in other.coeffs.iter().enumerate() {
                if y.re == 0.0 && y.im == 0.0 {
                    continue;
                }
                out[i ^ j] += x * y * self.sig.blade_sign(i, j);
            }
        }
        Ok(Self {
            sig: self.sig,
            coeffs: out,
        })
    }

    /// Clifford norm `N(g) = g ḡ`, required to be a scalar.
    pub fn clifford_norm(&self) -> Result<Complex64, CliffordError> {
        let n = self * &self.conjugate();
        if !n.is_scalar() {
            return Err(CliffordError::NonScalarNorm(n.off_grade_norm(0)));
        }
        Ok(n.scalar_part())
    }

    /// Inverse `ḡ / N(g)`.
    pub fn inverse(&self) -> Result<Self, CliffordError> {
        let n = self.clifford_norm()?;
        let scale = self.max_norm().powi(2).max(f64::MIN_POSITIVE);
        if n.norm() <= SCALAR_TOL * scale || n.norm() == 0.0 {
            return Err(CliffordError::SingularElement(n.norm()));
        }
        Ok(self.conjugate().scale(n.inv()))
    }

    /// Symmetric bilinear form on grade-1 parts: `(v,w) = -½(vw + wv)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..self.sig.dim() {
            acc += self.coeffs[1 << i] * other.coeffs[1 << i] * self.sig.metric(i);
        }
        acc
    }

    /// Commutator `ab - ba`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }
}

/// Geometric product with signature check.
pub fn geometric_product(a: &Multivector, b: &Multivector) -> Result<Multivector, CliffordError> {
    a.try_mul(b)
}

/// Applies one of the three involutions.
pub fn involution(a: &Multivector, kind: Involution) -> Multivector {
    a.involution(kind)
}

/// Clifford norm `N(g) = g ḡ`.
pub fn clifford_norm(g: &Multivector) -> Result<Complex64, CliffordError> {
    g.clifford_norm()
}

/// Inverse through the Clifford norm.
pub fn invert(g: &Multivector) -> Result<Multivector, CliffordError> {
    g.inverse()
}

/// Twisted adjoint action `tAd(g) v = g v g̃⁻¹`.
///
/// For a vector `g` this is the reflection of `v` in the hyperplane
/// orthogonal to `g`, with the sign fixed literally by the formula.
pub fn twisted_adjoint(g: &Multivector, v: &Multivector) -> Result<Multivector, CliffordError> {
    if g.sig != v.sig {
        return Err(CliffordError::SignatureMismatch(g.sig, v.sig));
    }
    if !v.is_vector() {
        return Err(CliffordError::NotAVector);
    }
    let inv = g.grade_involution().inverse()?;
    Ok(&(g * v) * &inv)
}

impl<'a> Mul<&'a Multivector> for &'a Multivector {
    type Output = Multivector;

    /// # Panics
    /// On signature mismatch; use [`Multivector::try_mul`] to handle it.
    fn mul(self, rhs: &'a Multivector) -> Multivector {
        self.try_mul(rhs).expect("multivector signatures agree")
    }
}

impl Mul for Multivector {
    type Output = Multivector;

    fn mul(self, rhs: Multivector) -> Multivector {
        &self * &rhs
    }
}

impl Mul<Complex64> for &Multivector {
    type Output = Multivector;

    fn mul(self, rhs: Complex64) -> Multivector {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Multivector {
    type Output = Multivector;

    fn mul(self, rhs: f64) -> Multivector {
        self.scale(rhs)
    }
}

impl<'a> Add<&'a Multivector> for &'a Multivector {
    type Output = Multivector;

    fn add(self, rhs: &'a Multivector) -> Multivector {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for Multivector {
    type Output = Multivector;

    fn add(mut self, rhs: Multivector) -> Multivector {
        self += &rhs;
        self
    }
}

impl<'a> Sub<&'a Multivector> for &'a Multivector {
    type Output = Multivector;

    fn sub(self, rhs: &'a Multivector) -> Multivector {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Sub for Multivector {
    type Output = Multivector;

    fn sub(mut self, rhs: Multivector) -> Multivector {
        self -= &rhs;
        self
    }
}

impl AddAssign<&Multivector> for Multivector {
    fn add_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.sig, rhs.sig, "multivector signatures agree");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a += b;
        }
    }
}

impl SubAssign<&Multivector> for Multivector {
    fn sub_assign(&mut self, rhs: &Multivector) {
        assert_eq!(self.sig, rhs.sig, "multivector signatures agree");
        for (a, b) in self.coeffs.iter_mut().zip(&rhs.coeffs) {
            *a -= b;
        }
    }
}

impl Neg for &Multivector {
    type Output = Multivector;

    fn neg(self) -> Multivector {
        self.scale(-1.0)
    }
}

impl Neg for Multivector {
    type Output = Multivector;

    fn neg(self) -> Multivector {
        -&self
    }
}

#[derive(Serialize, Deserialize)]
struct MultivectorRepr {
    signature: Signature,
    complex: bool,
    coeffs: Vec<serde_json::Value>,
}

impl Serialize for Multivector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let complex = !self.is_real();
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                if complex {
                    serde_json::json!([c.re, c.im])
                } else {
                    serde_json::json!(c.re)
                }
            })
            .collect();
        MultivectorRepr {
            signature: self.sig,
            complex,
            coeffs,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Multivector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = MultivectorRepr::deserialize(deserializer)?;
        let coeffs = repr
            .coeffs
            .iter()
            .map(|v| {
                if repr.complex {
                    let pair: [f64; 2] = serde_json::from_value(v.clone()).map_err(D::Error::custom)?;
                    Ok(Complex64::new(pair[0], pair[1]))
                } else {
                    let re: f64 = serde_json::from_value(v.clone()).map_err(D::Error::custom)?;
                    Ok(Complex64::new(re, 0.0))
                }
            })
            .collect::<Result<Vec<_>, D::Error>>()?;
        Multivector::from_coeffs(repr.signature, coeffs).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(sig: Signature, mask: usize) -> Multivector {
        Multivector::blade(sig, mask, 1.0)
    }

    #[test]
    fn generators_square_to_minus_their_norm() {
        let s = Signature::euclidean(3);
        assert_eq!(&e(s, 1) * &e(s, 1), Multivector::scalar(s, -1.0));
        let m = Signature::new(2, 1).unwrap();
        assert_eq!(&e(m, 4) * &e(m, 4), Multivector::scalar(m, 1.0));
    }

    #[test]
    fn bivector_squares_to_minus_one() {
        let s = Signature::euclidean(3);
        let e12 = e(s, 0b011);
        assert_eq!(&e12 * &e12, Multivector::scalar(s, -1.0));
    }

    #[test]
    fn involution_examples() {
        let s = Signature::euclidean(3);
        assert_eq!(e(s, 0b011).grade_involution(), e(s, 0b011));
        assert_eq!(e(s, 0b001).conjugate(), -e(s, 0b001));
        // e3 e2 e1 written back in canonical order
        let reversed = &(&e(s, 0b100) * &e(s, 0b010)) * &e(s, 0b001);
        assert_eq!(e(s, 0b111).transpose(), reversed);
        assert_eq!(reversed, -e(s, 0b111));
    }

    #[test]
    fn norm_examples() {
        let s = Signature::euclidean(3);
        assert_eq!(e(s, 1).clifford_norm().unwrap(), Complex64::new(1.0, 0.0));
        assert_eq!(e(s, 0b011).clifford_norm().unwrap(), Complex64::new(1.0, 0.0));
        let v = Multivector::vector(s, &[1.0, 1.0, 0.0]);
        assert_eq!(v.clifford_norm().unwrap(), Complex64::new(2.0, 0.0));
        let mixed = &Multivector::one(s) + &e(s, 0b111);
        assert!(matches!(mixed.clifford_norm(), Err(CliffordError::NonScalarNorm(_))));
    }

    #[test]
    fn inverse_examples() {
        let s = Signature::euclidean(3);
        assert_eq!(e(s, 1).inverse().unwrap(), -e(s, 1));
        assert_eq!(e(s, 1).scale(3.0).inverse().unwrap(), e(s, 1).scale(-1.0 / 3.0));
        assert_eq!(e(s, 0b011).inverse().unwrap(), -e(s, 0b011));
        assert!(matches!(
            Multivector::zero(s).inverse(),
            Err(CliffordError::SingularElement(_))
        ));
    }

    #[test]
    fn twisted_adjoint_reflects() {
        let s = Signature::euclidean(3);
        assert_eq!(twisted_adjoint(&e(s, 1), &e(s, 1)).unwrap(), -e(s, 1));
        assert_eq!(twisted_adjoint(&e(s, 1), &e(s, 2)).unwrap(), e(s, 2));
        // reflection in the hyperplane orthogonal to e1 + e2 swaps e1 and -e2
        let g = Multivector::vector(s, &[1.0, 1.0, 0.0]);
        let r = twisted_adjoint(&g, &e(s, 1)).unwrap();
        let expected = Multivector::vector(s, &[0.0, -1.0, 0.0]);
        assert!((&r - &expected).max_norm() < 1e-15);
    }

    #[test]
    fn json_roundtrip_keeps_complex_tag() {
        let s = Signature::euclidean(2);
        let real = Multivector::vector(s, &[1.5, -2.0]);
        let text = serde_json::to_string(&real).unwrap();
        assert!(text.contains("\"complex\":false"));
        assert_eq!(serde_json::from_str::<Multivector>(&text).unwrap(), real);
        let cplx = real.scale(Complex64::new(0.0, 1.0));
        let text = serde_json::to_string(&cplx).unwrap();
        assert!(text.contains("\"complex\":true"));
        assert_eq!(serde_json::from_str::<Multivector>(&text).unwrap(), cplx);
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let a = Multivector::one(Signature::euclidean(2));
        let b = Multivector::one(Signature::euclidean(3));
        assert!(matches!(a.try_mul(&b), Err(CliffordError::SignatureMismatch(..))));
    }
}
