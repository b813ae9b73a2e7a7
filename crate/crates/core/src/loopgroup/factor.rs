use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::LoopGroupError;
use crate::clifford::lightcone::{lightcone_embed_coords, minkowski_gram, point_from_coords, rho};
use crate::clifford::VahlenMatrix;

/// Relative tolerance for `α² ∈ R` and for pole proximity.
const ALPHA_TOL: f64 = 1e-12;
/// Relative size below which a seed offset or a line coordinate vanishes.
const DEGENERATE_TOL: f64 = 1e-10;

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Simple factor `p_{α,L}(λ) = ((α−λ)/(α+λ)) π₊ + π₀ + ((α+λ)/(α−λ)) π₋`
/// with `im π₊ = L`, `im π₋ = ρL` and `im π₀ = (L ⊕ ρL)^⊥`.
///
/// `L` is the complexified null line of `α (seed_v − f_o)`. The factor is
/// stored by `(α, seed_v, f_o)`; projections are rebuilt on demand in the
/// vector representation of `O(n+2, C)` with coordinates `(x, a0, a∞)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FactorRecord", into = "FactorRecord")]
pub struct SimpleFactor {
    alpha: Complex64,
    seed_v: Vec<f64>,
    f_o: Vec<f64>,
    line: Vec<Complex64>,
}

#[derive(Serialize, Deserialize)]
struct FactorRecord {
    alpha: [f64; 2],
    seed_v: Vec<f64>,
    f_o: Vec<f64>,
}

impl TryFrom<FactorRecord> for SimpleFactor {
    type Error = LoopGroupError;

    fn try_from(r: FactorRecord) -> Result<Self, Self::Error> {
        make_simple_factor(Complex64::new(r.alpha[0], r.alpha[1]), &r.seed_v, &r.f_o)
    }
}

impl From<SimpleFactor> for FactorRecord {
    fn from(p: SimpleFactor) -> Self {
        Self {
            alpha: [p.alpha.re, p.alpha.im],
            seed_v: p.seed_v,
            f_o: p.f_o,
        }
    }
}

fn check_alpha(alpha: Complex64) -> Result<(), LoopGroupError> {
    let sq = alpha * alpha;
    if alpha.norm() == 0.0 || !alpha.norm().is_finite() || sq.im.abs() > ALPHA_TOL * sq.norm() {
        return Err(LoopGroupError::InvalidAlpha(alpha));
    }
    Ok(())
}

/// Simple factor whose dressing action is the Darboux transform with
/// parameter `α²` and initial value `v` at a base point where the surface
/// passes through `f_o`.
pub fn make_simple_factor(alpha: Complex64, v: &[f64], f_o: &[f64]) -> Result<SimpleFactor, LoopGroupError> {
    check_alpha(alpha)?;
    if v.len() != f_o.len() || v.is_empty() {
        return Err(LoopGroupError::DimensionMismatch);
    }
    let offset: Vec<f64> = v.iter().zip(f_o).map(|(a, b)| a - b).collect();
    let size = offset.iter().map(|x| x * x).sum::<f64>().sqrt();
    let scale = 1.0 + f_o.iter().chain(v).fold(0.0f64, |m, x| m.max(x.abs()));
    if size <= DEGENERATE_TOL * scale {
        return Err(LoopGroupError::NullSeed);
    }
    let x: Vec<Complex64> = offset.iter().map(|o| alpha * o).collect();
    Ok(SimpleFactor {
        alpha,
        seed_v: v.to_vec(),
        f_o: f_o.to_vec(),
        line: lightcone_embed_coords(&x),
    })
}

impl SimpleFactor {
    /// Factor with the given null line, represented through `f_o`.
    ///
    /// Fails with `DegenerateLine` when the line is `⟨v∞⟩`, is not null, or
    /// violates the reality condition for the sign of `α²`.
    pub fn from_line(alpha: Complex64, line: &[Complex64], f_o: &[f64]) -> Result<Self, LoopGroupError> {
        check_alpha(alpha)?;
        let n = f_o.len();
        if line.len() != n + 2 {
            return Err(LoopGroupError::DimensionMismatch);
        }
        let size = line.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let a0 = line[n];
        if a0.norm() <= DEGENERATE_TOL * size {
            return Err(LoopGroupError::DegenerateLine("line is the point at infinity".into()));
        }
        let x: Vec<Complex64> = line[..n].iter().map(|z| z / a0).collect();
        let null = x.iter().map(|z| z * z).sum::<Complex64>() - line[n + 1] / a0;
        let offset: Vec<Complex64> = x.iter().map(|z| z / alpha).collect();
        let scale = 1.0 + offset.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        if null.norm() > 1e-8 * scale * scale {
            return Err(LoopGroupError::DegenerateLine(format!("line is not null ({:e})", null.norm())));
        }
        let imag = offset.iter().fold(0.0f64, |m, z| m.max(z.im.abs()));
        if imag > 1e-8 * scale {
            return Err(LoopGroupError::DegenerateLine(format!(
                "line violates the reality condition ({imag:e})"
            )));
        }
        let v: Vec<f64> = offset.iter().zip(f_o).map(|(z, f)| z.re + f).collect();
        make_simple_factor(alpha, &v, f_o)
    }

    pub fn alpha(&self) -> Complex64 {
        self.alpha
    }

    pub fn seed_v(&self) -> &[f64] {
        &self.seed_v
    }

    pub fn f_o(&self) -> &[f64] {
        &self.f_o
    }

    /// Darboux parameter `r = α²`.
    pub fn r(&self) -> f64 {
        (self.alpha * self.alpha).re
    }

    pub fn n(&self) -> usize {
        self.f_o.len()
    }

    /// Null generator of `L` in coordinates `(x, a0, a∞)`.
    pub fn line(&self) -> &[Complex64] {
        &self.line
    }

    /// `(π₊, π₀, π₋)` in the vector representation.
    pub fn projections(&self) -> [DMatrix<Complex64>; 3] {
        projections(&self.line)
    }

    fn ratio(&self, lambda: Complex64) -> Result<Complex64, LoopGroupError> {
        let a = self.alpha;
        if (lambda - a).norm() <= ALPHA_TOL * a.norm() || (lambda + a).norm() <= ALPHA_TOL * a.norm() {
            return Err(LoopGroupError::PoleEvaluation(lambda));
        }
        Ok((a - lambda) / (a + lambda))
    }

    /// `√((α−λ)/(α+λ))`, the boost parameter of the spin lift.
    pub(crate) fn half_ratio(&self, lambda: Complex64) -> Result<Complex64, LoopGroupError> {
        Ok(self.ratio(lambda)?.sqrt())
    }

    /// `p_{α,L}(λ)` in the vector representation.
    pub fn evaluate(&self, lambda: Complex64) -> Result<DMatrix<Complex64>, LoopGroupError> {
        let k = self.ratio(lambda)?;
        let [plus, zero, minus] = self.projections();
        Ok(plus * k + zero + minus * k.inv())
    }

    /// `p_{α,L}(λ)` lifted to a Vahlen matrix with unit pseudo-determinant.
    /// The lift is fixed up to sign; the sign cancels in every dressing.
    pub fn vahlen(&self, lambda: Complex64) -> Result<VahlenMatrix, LoopGroupError> {
        let k = self.ratio(lambda)?;
        let n = self.n();
        Ok(BoostLift::new(&point_from_coords(n, &self.line)).at(k.sqrt()))
    }
}

/// `p_{α,L}(λ)` in the vector representation.
pub fn evaluate_factor(p: &SimpleFactor, lambda: Complex64) -> Result<DMatrix<Complex64>, LoopGroupError> {
    p.evaluate(lambda)
}

fn projections(line: &[Complex64]) -> [DMatrix<Complex64>; 3] {
    let m = line.len();
    let gram = minkowski_gram(m - 2).map(re);
    let l = DMatrix::from_column_slice(m, 1, line);
    let ls = DMatrix::from_column_slice(m, 1, &rho(line));
    let pairing = (ls.transpose() * &gram * &l)[(0, 0)];
    let plus = &l * (ls.transpose() * &gram) / pairing;
    let minus = &ls * (l.transpose() * &gram) / pairing;
    let zero = DMatrix::identity(m, m) - &plus - &minus;
    [plus, zero, minus]
}

/// Spin lift of the boost scaling a null line `⟨l⟩` by `k²` and `⟨ρl⟩` by
/// `k⁻²`: `k · l ρl / N + k⁻¹ · ρl l / N` with `N = l ρl + ρl l`.
#[derive(Clone, Debug)]
pub(crate) struct BoostLift {
    /// `l ρl / N` and `ρl l / N`, complementary idempotents.
    pub(crate) upper: VahlenMatrix,
    pub(crate) lower: VahlenMatrix,
}

impl BoostLift {
    pub(crate) fn new(l: &VahlenMatrix) -> Self {
        let (upper, lower, norm) = Self::parts(l);
        let inv = norm.inv();
        Self {
            upper: upper.scale(inv),
            lower: lower.scale(inv),
        }
    }

    /// `(l ρl, ρl l, N)`.
    fn parts(l: &VahlenMatrix) -> (VahlenMatrix, VahlenMatrix, Complex64) {
        let ls = rho_vahlen(l);
        let upper = l * &ls;
        let lower = &ls * l;
        let norm = (&upper + &lower).a.scalar_part();
        (upper, lower, norm)
    }

    /// `N = l ρl + ρl l`, a scalar; zero exactly when the boost is undefined.
    pub(crate) fn pairing(l: &VahlenMatrix) -> Complex64 {
        Self::parts(l).2
    }

    /// Derivative of the idempotents along `dl`.
    pub(crate) fn derivative(l: &VahlenMatrix, dl: &VahlenMatrix) -> Self {
        let (upper, lower, norm) = Self::parts(l);
        let dls = rho_vahlen(dl);
        let ls = rho_vahlen(l);
        let dupper = &(dl * &ls) + &(l * &dls);
        let dlower = &(&dls * l) + &(&ls * dl);
        let dnorm = (&dupper + &dlower).a.scalar_part();
        let inv = norm.inv();
        let correction = -dnorm * inv * inv;
        Self {
            upper: &dupper.scale(inv) + &upper.scale(correction),
            lower: &dlower.scale(inv) + &lower.scale(correction),
        }
    }

    pub(crate) fn at(&self, k: Complex64) -> VahlenMatrix {
        &self.upper.scale(k) + &self.lower.scale(k.inv())
    }
}

/// `ρ` on an element of `V`: negates the `R^n` block.
pub(crate) fn rho_vahlen(v: &VahlenMatrix) -> VahlenMatrix {
    VahlenMatrix::new(-&v.a, v.b.clone(), v.c.clone(), -&v.d)
}

/// Factors `p₁' = p_{α₁, p₂(α₁) L₁}` and `p₂' = p_{α₂, p₁(α₂) L₂}` with
/// `p₁' p₂ = p₂' p₁`, and the largest entry of `p₁'p₂ − p₂'p₁` over 64
/// samples on the circle `|λ| = ½ min |α_i|`.
pub fn permutability_factors(
    p1: &SimpleFactor,
    p2: &SimpleFactor,
) -> Result<(SimpleFactor, SimpleFactor, f64), LoopGroupError> {
    let (a1, a2) = (p1.alpha, p2.alpha);
    let (r1, r2) = (p1.r(), p2.r());
    if (r1 - r2).abs() <= ALPHA_TOL * r1.abs().max(r2.abs()) {
        return Err(LoopGroupError::EqualParameters);
    }
    if p1.n() != p2.n() {
        return Err(LoopGroupError::DimensionMismatch);
    }
    let moved = |p: &SimpleFactor, at: Complex64, line: &[Complex64]| -> Result<Vec<Complex64>, LoopGroupError> {
        let m = p.evaluate(at)?;
        Ok((m * DMatrix::from_column_slice(line.len(), 1, line)).iter().copied().collect())
    };
    let p1_new = SimpleFactor::from_line(a1, &moved(p2, a1, &p1.line)?, &p1.f_o)?;
    let p2_new = SimpleFactor::from_line(a2, &moved(p1, a2, &p2.line)?, &p2.f_o)?;
    let radius = 0.5 * a1.norm().min(a2.norm());
    let mut residual = 0.0f64;
    for k in 0..64 {
        let lambda = Complex64::from_polar(radius, (k as f64 + 0.5) * std::f64::consts::TAU / 64.0);
        let lhs = p1_new.evaluate(lambda)? * p2.evaluate(lambda)?;
        let rhs = p2_new.evaluate(lambda)? * p1.evaluate(lambda)?;
        residual = residual.max((lhs - rhs).iter().fold(0.0f64, |m, z| m.max(z.norm())));
    }
    Ok((p1_new, p2_new, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clifford::lightcone::minkowski_inner;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_entry(m: &DMatrix<Complex64>) -> f64 {
        m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
    }

    fn factor(alpha: Complex64) -> SimpleFactor {
        make_simple_factor(alpha, &[0.7, -0.2, 0.4], &[0.1, 0.3, -0.5]).unwrap()
    }

    #[test]
    fn real_alpha_gives_real_factor() {
        let p = make_simple_factor(c(1.0, 0.0), &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        assert!(p.line().iter().all(|z| z.im == 0.0));
        for l in [0.3, -0.7, 2.5] {
            let m = p.evaluate(c(l, 0.0)).unwrap();
            assert!(m.iter().all(|z| z.im.abs() < 1e-15));
        }
    }

    #[test]
    fn imaginary_alpha_line_is_conjugate_to_its_reflection() {
        let p = make_simple_factor(c(0.0, 1.0), &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        let line = p.line();
        let conj: Vec<Complex64> = line.iter().map(|z| z.conj()).collect();
        let reflected = rho(line);
        // ⟨conj L⟩ = ⟨ρL⟩: proportional null vectors
        let k = reflected[3] / conj[3];
        let err = conj.iter().zip(&reflected).fold(0.0f64, |m, (a, b)| m.max((a * k - b).norm()));
        assert!(err <= 1e-12);
    }

    #[test]
    fn rejects_non_real_square_and_null_seed() {
        assert!(matches!(
            make_simple_factor(c(1.0, 1.0), &[1.0, 0.0], &[0.0, 0.0]),
            Err(LoopGroupError::InvalidAlpha(_))
        ));
        assert!(matches!(
            make_simple_factor(c(1.0, 0.0), &[0.2, 0.3], &[0.2, 0.3]),
            Err(LoopGroupError::NullSeed)
        ));
    }

    #[test]
    fn projections_split_the_space() {
        let p = factor(c(0.8, 0.0));
        let [plus, zero, minus] = p.projections();
        let id = DMatrix::<Complex64>::identity(5, 5);
        assert!(max_entry(&(&plus + &zero + &minus - &id)) < 1e-13);
        assert!(max_entry(&(&plus * &plus - &plus)) < 1e-13);
        assert!(max_entry(&(&plus * &minus)) < 1e-13);
        assert!(max_entry(&(&zero * &zero - &zero)) < 1e-13);
        let l = DMatrix::from_column_slice(5, 1, p.line());
        assert!(max_entry(&(&plus * &l - &l)) < 1e-13);
    }

    #[test]
    fn factor_is_orthogonal_real_and_twisted() {
        let gram = minkowski_gram(3).map(re);
        let rho_m = DMatrix::from_fn(5, 5, |i, j| re(if i != j { 0.0 } else if i < 3 { -1.0 } else { 1.0 }));
        for alpha in [c(0.8, 0.0), c(0.0, 1.3)] {
            let p = factor(alpha);
            assert!(max_entry(&(p.evaluate(c(0.0, 0.0)).unwrap() - DMatrix::identity(5, 5))) < 1e-14);
            for lambda in [c(0.3, 0.1), c(-1.7, 0.4), c(0.2, -2.2)] {
                let m = p.evaluate(lambda).unwrap();
                assert!(max_entry(&(m.transpose() * &gram * &m - &gram)) < 1e-12);
                let conj = p.evaluate(lambda.conj()).unwrap();
                assert!(max_entry(&(conj - m.map(|z| z.conj()))) < 1e-12);
                let twisted = p.evaluate(-lambda).unwrap();
                assert!(max_entry(&(twisted - &rho_m * &m * &rho_m)) < 1e-12);
            }
        }
    }

    #[test]
    fn simple_pole_at_alpha() {
        let p = factor(c(0.8, 0.0));
        assert!(matches!(p.evaluate(c(0.8, 0.0)), Err(LoopGroupError::PoleEvaluation(_))));
        assert!(matches!(p.evaluate(c(-0.8, 0.0)), Err(LoopGroupError::PoleEvaluation(_))));
        let size = |d: f64| max_entry(&p.evaluate(c(0.8 + d, 0.0)).unwrap()) * d;
        let (a, b) = (size(1e-4), size(1e-6));
        assert!((a / b - 1.0).abs() < 1e-3, "{a} vs {b}");
    }

    #[test]
    fn vahlen_lift_represents_the_factor() {
        for alpha in [c(0.8, 0.0), c(0.0, 1.3)] {
            let p = factor(alpha);
            for lambda in [c(0.0, 0.0), c(0.3, 0.1), c(-1.7, 0.4), c(2.0, 0.0)] {
                let lift = p.vahlen(lambda).unwrap();
                let rep = lift.vector_representation().unwrap();
                assert!(max_entry(&(rep - p.evaluate(lambda).unwrap())) < 1e-12);
                let det = lift.scalar_determinant().unwrap();
                assert!((det - 1.0).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn line_is_null_and_generic() {
        let p = factor(c(0.0, 0.9));
        assert!(minkowski_inner(p.line(), p.line()).norm() < 1e-14);
        assert!(minkowski_inner(p.line(), &rho(p.line())).norm() > 1e-3);
    }

    #[test]
    fn factors_permute() {
        for (a1, a2) in [(c(0.8, 0.0), c(1.7, 0.0)), (c(1.0, 0.0), c(0.0, 1.0)), (c(0.0, 0.6), c(0.0, 1.4))] {
            let p1 = make_simple_factor(a1, &[0.7, -0.2, 0.4], &[0.1, 0.3, -0.5]).unwrap();
            let p2 = make_simple_factor(a2, &[-0.3, 0.5, 0.9], &[0.1, 0.3, -0.5]).unwrap();
            let (_, _, residual) = permutability_factors(&p1, &p2).unwrap();
            assert!(residual <= 1e-10, "{a1} {a2}: {residual:e}");
        }
    }

    #[test]
    fn equal_parameters_are_rejected() {
        let p1 = factor(c(0.8, 0.0));
        let p2 = make_simple_factor(c(-0.8, 0.0), &[0.0, 1.0, 0.0], &[0.0; 3]).unwrap();
        assert!(matches!(permutability_factors(&p1, &p2), Err(LoopGroupError::EqualParameters)));
    }

    #[test]
    fn serde_roundtrip() {
        let p = factor(c(0.0, 1.3));
        let json = serde_json::to_string(&p).unwrap();
        assert!(json.contains("\"alpha\":[0.0,1.3]"));
        let back: SimpleFactor = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
        let bad = r#"{"alpha":[1.0,1.0],"seed_v":[1,0,0],"f_o":[0,0,0]}"#;
        assert!(serde_json::from_str::<SimpleFactor>(bad).is_err());
    }
}
