use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::LoopGroupError;
use crate::clifford::lightcone::minkowski_gram;
use crate::clifford::{Multivector, Signature, VahlenMatrix};
use crate::surface::{Accuracy, Axis, ChristoffelPair, SurfaceGrid};
use crate::transform::{spectral_frame, FrameField};

/// Step used for the `λ`-derivative samples `±ε, ±2ε`.
pub const SYM_EPSILON: f64 = 1e-3;

pub(crate) fn same_lambda(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() <= 1e-12 * (1.0 + a.norm())
}

/// One spectral sample: frames `Φ(λ)` and the Maurer–Cartan components
/// `Φ^{-1} ∂_x Φ`, `Φ^{-1} ∂_y Φ` at every node.
#[derive(Clone, Debug)]
pub struct SpectralSample {
    pub lambda: Complex64,
    pub frames: Vec<VahlenMatrix>,
    pub mc: Vec<[VahlenMatrix; 2]>,
}

/// Based extended flat frame sampled at finitely many `λ`.
///
/// Every sample is the identity at the base node `o`; frames are compared
/// only in this normalisation. The Maurer–Cartan form is carried along
/// analytically (from the tangents of the seed pair and the dressing
/// formula), so its `λ`-dependence can be checked at rounding level.
/// Nodes where a dressing left its chart are masked.
#[derive(Clone, Debug)]
pub struct ExtendedFrameField {
    lattice: SurfaceGrid,
    samples: Vec<SpectralSample>,
    mask: Vec<bool>,
}

/// Default sample set: `0, ±ε, ±2ε` and `±α, ±α/2, ±2α` for each `α`, closed
/// under conjugation.
pub fn default_lambdas(alphas: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0)];
    let mut push = |l: Complex64| {
        for z in [l, -l, l.conj(), -l.conj()] {
            if !out.iter().any(|w| same_lambda(*w, z)) {
                out.push(z);
            }
        }
    };
    push(Complex64::new(SYM_EPSILON, 0.0));
    push(Complex64::new(2.0 * SYM_EPSILON, 0.0));
    for a in alphas {
        for s in [1.0, 0.5, 2.0] {
            push(a * s);
        }
    }
    out
}

/// Extended frame of `pair` with `Φ^{-1} dΦ = λ (0, df; df^c, 0)` and
/// `Φ(o) = 1`, at every `λ` in `lambdas`.
///
/// The sample set must contain `0` and be closed under negation and
/// conjugation.
pub fn extended_frame(pair: &ChristoffelPair, lambdas: &[Complex64]) -> Result<ExtendedFrameField, LoopGroupError> {
    let has = |z: Complex64| lambdas.iter().any(|w| same_lambda(*w, z));
    if !has(Complex64::new(0.0, 0.0)) {
        return Err(LoopGroupError::InvalidSamples("λ = 0 is missing".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !has(-**l) || !has(l.conj())) {
        return Err(LoopGroupError::InvalidSamples(format!(
            "sample set is not closed under negation and conjugation at {l}"
        )));
    }
    let n = pair.dim();
    let sig = Signature::euclidean(n);
    let partials = |grid: &SurfaceGrid| [Axis::X, Axis::Y].map(|a| grid.partial(a, 1, Accuracy::Sixth));
    let (df, dfc) = (partials(&pair.f), partials(&pair.fc));
    let count = pair.f.node_count();
    let generator: Vec<[VahlenMatrix; 2]> = (0..count)
        .map(|k| {
            [0, 1].map(|a| {
                let v = |w: &[f64]| Multivector::vector(sig, &w[k * n..(k + 1) * n]);
                VahlenMatrix::off_diagonal(v(&df[a]), v(&dfc[a]))
            })
        })
        .collect();
    let samples = lambdas
        .par_iter()
        .map(|&lambda| {
            let field = spectral_frame(pair, lambda)?;
            let mc = generator.iter().map(|g| g.clone().map(|m| m.scale(lambda))).collect();
            Ok(SpectralSample {
                lambda,
                frames: field.frames().to_vec(),
                mc,
            })
        })
        .collect::<Result<Vec<_>, LoopGroupError>>()?;
    Ok(ExtendedFrameField {
        lattice: pair.f.clone(),
        samples,
        mask: (0..count).map(|k| pair.f.is_masked(k)).collect(),
    })
}

impl ExtendedFrameField {
    pub(crate) fn from_parts(lattice: SurfaceGrid, samples: Vec<SpectralSample>, mask: Vec<bool>) -> Self {
        Self { lattice, samples, mask }
    }

    pub fn lattice(&self) -> &SurfaceGrid {
        &self.lattice
    }

    pub fn samples(&self) -> &[SpectralSample] {
        &self.samples
    }

    pub fn lambdas(&self) -> Vec<Complex64> {
        self.samples.iter().map(|s| s.lambda).collect()
    }

    pub fn sample(&self, lambda: Complex64) -> Option<&SpectralSample> {
        self.samples.iter().find(|s| same_lambda(s.lambda, lambda))
    }

    /// Nodes excluded from every comparison.
    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|m| **m).count()
    }

    pub fn n(&self) -> usize {
        self.lattice.dim()
    }

    fn unmasked(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.mask.len()).filter(|k| !self.mask[*k])
    }

    fn masked_lattice(&self) -> SurfaceGrid {
        let mask = self.lattice.combined_mask(Some(&self.mask));
        self.lattice.clone().with_mask(mask)
    }

    /// The sample at `λ` as a frame field; masked nodes are masked on its
    /// lattice.
    pub fn frame_field(&self, lambda: Complex64) -> Result<FrameField, LoopGroupError> {
        let s = self.sample(lambda).ok_or(LoopGroupError::MissingSample(lambda))?;
        Ok(FrameField::from_frames(&self.masked_lattice(), s.frames.clone())?)
    }

    /// All samples as `(λ, frame field)` pairs, the input of the Sym formula.
    pub fn frame_fields(&self) -> Result<Vec<(Complex64, FrameField)>, LoopGroupError> {
        self.samples.iter().map(|s| Ok((s.lambda, self.frame_field(s.lambda)?))).collect()
    }

    /// Largest deviation of `Φ(0)` and of `Φ(o)` from the identity.
    pub fn identity_defect(&self) -> f64 {
        let one = VahlenMatrix::identity(self.n());
        let o = self.lattice.base_node();
        let mut worst = 0.0f64;
        for s in &self.samples {
            worst = worst.max((&s.frames[o] - &one).max_norm());
            if same_lambda(s.lambda, Complex64::new(0.0, 0.0)) {
                for k in self.unmasked() {
                    worst = worst.max((&s.frames[k] - &one).max_norm());
                }
            }
        }
        worst
    }

    fn representations(&self) -> Result<Vec<Vec<DMatrix<Complex64>>>, LoopGroupError> {
        self.samples
            .par_iter()
            .map(|s| {
                self.unmasked()
                    .map(|k| Ok(s.frames[k].vector_representation()?))
                    .collect::<Result<Vec<_>, LoopGroupError>>()
            })
            .collect()
    }

    /// `max ‖Φ(λ̄) − conj Φ(λ)‖` over sampled conjugate pairs, in the vector
    /// representation.
    pub fn reality_defect(&self) -> Result<f64, LoopGroupError> {
        self.pair_defect(|l| l.conj(), |m| m.map(|z| z.conj()))
    }

    /// `max ‖Φ(−λ) − ρ Φ(λ) ρ‖` over sampled `±λ` pairs, in the vector
    /// representation.
    pub fn twisting_defect(&self) -> Result<f64, LoopGroupError> {
        let n = self.n();
        let rho = DMatrix::from_fn(n + 2, n + 2, |i, j| {
            Complex64::new(if i != j { 0.0 } else if i < n { -1.0 } else { 1.0 }, 0.0)
        });
        self.pair_defect(|l| -l, |m| &rho * m * &rho)
    }

    fn pair_defect(
        &self,
        partner: impl Fn(Complex64) -> Complex64,
        action: impl Fn(&DMatrix<Complex64>) -> DMatrix<Complex64>,
    ) -> Result<f64, LoopGroupError> {
        let reps = self.representations()?;
        let mut worst = 0.0f64;
        for (i, s) in self.samples.iter().enumerate() {
            let Some(j) = self.samples.iter().position(|t| same_lambda(t.lambda, partner(s.lambda))) else {
                continue;
            };
            for (a, b) in reps[i].iter().zip(&reps[j]) {
                worst = worst.max(max_entry(&(b - action(a))));
            }
        }
        Ok(worst)
    }

    /// `max ‖Φᵗ G Φ − G‖` in the vector representation, `G` the Gram matrix
    /// of `R^{n+1,1}`.
    pub fn orthogonality_defect(&self) -> Result<f64, LoopGroupError> {
        let gram = minkowski_gram(self.n()).map(|x| Complex64::new(x, 0.0));
        let reps = self.representations()?;
        Ok(reps
            .iter()
            .flatten()
            .map(|m| max_entry(&(m.transpose() * &gram * m - &gram)))
            .fold(0.0, f64::max))
    }

    /// Residual of a degree-one fit in `λ` of the Maurer–Cartan form along
    /// every line through `0` that carries at least five samples (counting
    /// `λ = 0` when present).
    pub fn flatness_residual(&self) -> Result<f64, LoopGroupError> {
        let mut worst = None::<f64>;
        for line in self.collinear_groups() {
            let r = self.fit_residual(&line);
            worst = Some(worst.map_or(r, |w| w.max(r)));
        }
        worst.ok_or_else(|| LoopGroupError::InvalidSamples("no line through 0 carries five samples".into()))
    }

    /// Index groups of samples `λ = t u` sharing a direction `u`.
    fn collinear_groups(&self) -> Vec<Vec<(usize, f64)>> {
        let zero = self.samples.iter().position(|s| s.lambda.norm() <= 1e-15);
        let mut groups: Vec<(Complex64, Vec<(usize, f64)>)> = Vec::new();
        for (i, s) in self.samples.iter().enumerate() {
            if Some(i) == zero {
                continue;
            }
            let mut u = s.lambda / s.lambda.norm();
            if u.re < -1e-14 || (u.re.abs() <= 1e-14 && u.im < 0.0) {
                u = -u;
            }
            let t = (s.lambda / u).re;
            match groups.iter_mut().find(|(d, _)| (*d - u).norm() <= 1e-12) {
                Some((_, members)) => members.push((i, t)),
                None => groups.push((u, vec![(i, t)])),
            }
        }
        groups
            .into_iter()
            .map(|(_, mut members)| {
                members.extend(zero.map(|z| (z, 0.0)));
                members
            })
            .filter(|m| m.len() >= 5)
            .collect()
    }

    fn fit_residual(&self, line: &[(usize, f64)]) -> f64 {
        let m = line.len() as f64;
        let mean_t = line.iter().map(|(_, t)| t).sum::<f64>() / m;
        let var_t: f64 = line.iter().map(|(_, t)| (t - mean_t).powi(2)).sum();
        let coeffs = |k: usize, axis: usize, i: usize| -> Vec<Complex64> {
            self.samples[i].mc[k][axis]
                .entries()
                .iter()
                .flat_map(|e| e.coeffs().to_vec())
                .collect()
        };
        self.unmasked()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|&k| {
                let mut worst = 0.0f64;
                for axis in 0..2 {
                    let values: Vec<Vec<Complex64>> = line.iter().map(|(i, _)| coeffs(k, axis, *i)).collect();
                    for c in 0..values[0].len() {
                        let mean = values.iter().map(|v| v[c]).sum::<Complex64>() / m;
                        let slope = line
                            .iter()
                            .zip(&values)
                            .map(|((_, t), v)| (v[c] - mean) * (t - mean_t))
                            .sum::<Complex64>()
                            / var_t;
                        for ((_, t), v) in line.iter().zip(&values) {
                            let fit = mean + slope * (t - mean_t);
                            worst = worst.max((v[c] - fit).norm());
                        }
                    }
                }
                worst
            })
            .reduce(|| 0.0, f64::max)
    }
}

fn max_entry(m: &DMatrix<Complex64>) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}
