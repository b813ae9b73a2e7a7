use std::fmt;

use serde::{Deserialize, Serialize};

use super::CliffordError;

/// Metric signature of a real quadratic space R^{p,q}.
///
/// The first `p` generators have `(e_i, e_i) = +1` and therefore square to
/// `-1` in the algebra; the remaining `q` generators square to `+1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[usize; 2]", into = "[usize; 2]")]
pub struct Signature {
    p: usize,
    q: usize,
}

impl Signature {
    /// Largest number of generators supported by the dense representation.
    pub const MAX_DIM: usize = 12;

    pub fn new(p: usize, q: usize) -> Result<Self, CliffordError> {
        if p + q > Self::MAX_DIM {
            return Err(CliffordError::SignatureTooLarge { p, q });
        }
        Ok(Self { p, q })
    }

    /// Positive definite signature `(n, 0)`.
    ///
    /// # Panics
    /// If `n` exceeds [`Signature::MAX_DIM`].
    pub fn euclidean(n: usize) -> Self {
        Self::new(n, 0).expect("euclidean dimension within dense bound")
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Number of generators.
    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// Number of basis blades, `2^(p+q)`.
    pub fn blade_count(&self) -> usize {
        1 << self.dim()
    }

    /// Value of `(e_i, e_i)`.
    pub fn metric(&self, i: usize) -> f64 {
        if i < self.p {
            1.0
        } else {
            -1.0
        }
    }

    /// Sign of the product of basis blades `a` and `b` (bitmasks), so that
    /// `e_a e_b = sign * e_{a ^ b}`.
    #[inline]
    pub(crate) fn blade_sign(&self, a: usize, b: usize) -> f64 {
        let mut swaps = 0u32;
        let mut rest = a >> 1;
        while rest != 0 {
            swaps += (rest & b).count_ones();
            rest >>= 1;
        }
        // Each shared generator with (e,e) = +1 contributes e^2 = -1.
        let positive_mask = (1usize << self.p) - 1;
        swaps += (a & b & positive_mask).count_ones();
        if swaps & 1 == 1 {
            -1.0
        } else {
            1.0
        }
    }
}

impl TryFrom<[usize; 2]> for Signature {
    type Error = CliffordError;

    fn try_from(pq: [usize; 2]) -> Result<Self, Self::Error> {
        Signature::new(pq[0], pq[1])
    }
}

impl From<Signature> for [usize; 2] {
    fn from(s: Signature) -> Self {
        [s.p, s.q]
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Cl({},{})", self.p, self.q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_oversized_signatures() {
        assert!(Signature::new(12, 0).is_ok());
        assert!(matches!(
            Signature::new(10, 3),
            Err(CliffordError::SignatureTooLarge { p: 10, q: 3 })
        ));
    }

    #[test]
    fn blade_signs_match_hand_computation() {
        let s = Signature::euclidean(3);
        // e1 e1 = -1
        assert_eq!(s.blade_sign(0b001, 0b001), -1.0);
        // e2 e1 = -e1 e2
        assert_eq!(s.blade_sign(0b010, 0b001), -1.0);
        assert_eq!(s.blade_sign(0b001, 0b010), 1.0);
        // (e1 e2)(e1 e2) = -1
        assert_eq!(s.blade_sign(0b011, 0b011), -1.0);
        let m = Signature::new(1, 1).unwrap();
        // the negative-norm generator squares to +1
        assert_eq!(m.blade_sign(0b10, 0b10), 1.0);
    }
}
