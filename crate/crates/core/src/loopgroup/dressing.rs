use num_complex::Complex64;
use rayon::prelude::*;

use super::factor::{BoostLift, SimpleFactor};
use super::frame::{same_lambda, ExtendedFrameField, SpectralSample};
use super::LoopGroupError;
use crate::clifford::lightcone::{coords_of, point_from_coords};
use crate::clifford::VahlenMatrix;
use crate::magnus;
use crate::surface::{ChristoffelPair, SpanningTree};
use crate::transform::pair_generator;
use crate::vecops::{scale, vinv};

/// Relative size of `(ω, ρω)` below which a node leaves the chart of the
/// dressing action (`Φ(α)^{-1} L` is `⟨v0⟩` or `⟨v∞⟩`).
const CHART_TOL: f64 = 1e-15;
/// Relative size of `t` or `v` in `ω = (v, s; t, −v)` below which the
/// direct construction degenerates.
const OMEGA_TOL: f64 = 1e-8;

fn coord_scale(coords: &[Complex64]) -> f64 {
    coords.iter().map(|z| z.norm_sqr()).sum::<f64>()
}

/// Per-node data of `L̂ = Φ(α)^{-1} L`: the lift of the boost along `L̂`
/// and its derivatives along `x` and `y`.
struct NodeLine {
    lift: BoostLift,
    derivative: [BoostLift; 2],
}

/// Dressing `p#Φ = p_{α,L} Φ p_{α,L̂}^{-1}` with `L̂ = Φ(α)^{-1} L` per node.
///
/// Every sample of `phi` except `±α` (poles of the two factors) is dressed;
/// the Maurer–Cartan form transforms as
/// `p̂ (Φ^{-1} dΦ) p̂^{-1} + p̂ d(p̂^{-1})`, with `dL̂` from
/// `d ω = −[Φ_α^{-1} dΦ_α, ω]`. Nodes where `L̂` leaves the chart are
/// masked.
pub fn dress(p: &SimpleFactor, phi: &ExtendedFrameField) -> Result<ExtendedFrameField, LoopGroupError> {
    let alpha = p.alpha();
    let n = phi.n();
    if p.n() != n {
        return Err(LoopGroupError::DimensionMismatch);
    }
    let at_alpha = phi.sample(alpha).ok_or(LoopGroupError::MissingAlphaSample(alpha))?;
    let line = point_from_coords(n, p.line());
    let count = phi.lattice().node_count();

    let nodes: Vec<Option<NodeLine>> = (0..count)
        .into_par_iter()
        .map(|k| {
            if phi.mask()[k] {
                return Ok(None);
            }
            let inv = at_alpha.frames[k].inverse()?;
            let omega = inv.act_on_vector_unit(&line);
            let size = coord_scale(&coords_of(&omega));
            if BoostLift::pairing(&omega).norm() <= CHART_TOL * size {
                return Ok(None);
            }
            let derivative = [0, 1].map(|a| {
                let m = &at_alpha.mc[k][a];
                let d_omega = -&m.commutator(&omega);
                BoostLift::derivative(&omega, &d_omega)
            });
            Ok(Some(NodeLine {
                lift: BoostLift::new(&omega),
                derivative,
            }))
        })
        .collect::<Result<_, LoopGroupError>>()?;
    let mask: Vec<bool> = nodes.iter().map(Option::is_none).collect();
    if mask.iter().all(|m| *m) {
        return Err(LoopGroupError::AllOutOfChart);
    }

    let outer = BoostLift::new(&line);
    let samples = phi
        .samples()
        .par_iter()
        .filter(|s| !same_lambda(s.lambda, alpha) && !same_lambda(s.lambda, -alpha))
        .map(|s| {
            let k = p.half_ratio(s.lambda)?;
            let left = outer.at(k);
            let mut frames = Vec::with_capacity(count);
            let mut mc = Vec::with_capacity(count);
            for (node, line) in nodes.iter().enumerate() {
                let Some(line) = line else {
                    frames.push(s.frames[node].clone());
                    mc.push(s.mc[node].clone());
                    continue;
                };
                let right = line.lift.at(k);
                let right_inv = line.lift.at(k.inv());
                frames.push(&(&left * &s.frames[node]) * &right_inv);
                mc.push([0, 1].map(|a| {
                    let conj = &(&right * &s.mc[node][a]) * &right_inv;
                    &conj + &(&right * &line.derivative[a].at(k.inv()))
                }));
            }
            Ok(SpectralSample {
                lambda: s.lambda,
                frames,
                mc,
            })
        })
        .collect::<Result<Vec<_>, LoopGroupError>>()?;
    Ok(ExtendedFrameField::from_parts(phi.lattice().clone(), samples, mask))
}

/// Darboux pair obtained from the light-cone solution `ω` at `λ = α`.
#[derive(Clone, Debug)]
pub struct DirectDressing {
    /// `(f + g, f^c + (α² g)^{-1})` with `g = v/(tα)`.
    pub pair: ChristoffelPair,
    /// Nodes where `t` or `v` degenerates; values there are the seed's.
    pub mask: Vec<bool>,
    /// `max |(ω, ω)| / |ω|²` over the lattice.
    pub cone_drift: f64,
    /// Largest imaginary part of `g` relative to `|g|`, discarded when
    /// taking the real transform.
    pub imaginary_part: f64,
}

/// Dressing of a Christoffel pair through the linear system
/// `dω + [α (0, df; df^c, 0), ω] = 0`, `ω(o) ∈ L`, integrated with
/// fourth-order Magnus steps along the spanning tree. Reading
/// `ω = (v, s; t, −v)` gives `g = v/(tα)` and the transform
/// `(f + g, f^c + (α² g)^{-1})`, which is `D_{α²}` with the factor's seed.
pub fn dress_pair_direct(p: &SimpleFactor, pair: &ChristoffelPair) -> Result<DirectDressing, LoopGroupError> {
    let n = pair.dim();
    if p.n() != n {
        return Err(LoopGroupError::DimensionMismatch);
    }
    let alpha = p.alpha();
    let lattice = &pair.f;
    let count = lattice.node_count();
    let generator = pair_generator(pair, alpha, alpha);
    let tree = SpanningTree::new(lattice.nx(), lattice.ny(), lattice.base_index());
    let mut omega: Vec<Option<VahlenMatrix>> = vec![None; count];
    omega[tree.root()] = Some(point_from_coords(n, p.line()));
    for e in tree.edges() {
        let h = lattice.spacing(e.line.axis) * e.step as f64;
        let [x1, x2] = magnus::NODES.map(|c| generator(&e.line, e.pos as f64 + c * e.step as f64).scale(h));
        let step = &(&x1 + &x2).scale(0.5) + &x1.commutator(&x2).scale(magnus::COMMUTATOR);
        let back = step.scale(-1.0).exp();
        let from = omega[e.from].as_ref().expect("tree visits parents first");
        omega[e.to] = Some(back.act_on_vector(from)?);
    }

    let r = (alpha * alpha).re;
    let mut mask = vec![false; count];
    let (mut fhat, mut fhat_c) = (Vec::with_capacity(count * n), Vec::with_capacity(count * n));
    let (mut cone_drift, mut imaginary_part) = (0.0f64, 0.0f64);
    for (k, w) in omega.iter().enumerate() {
        let coords = coords_of(w.as_ref().expect("tree spans the lattice"));
        let size = coord_scale(&coords);
        let inner = coords[..n].iter().map(|z| z * z).sum::<Complex64>() - coords[n] * coords[n + 1];
        cone_drift = cone_drift.max(inner.norm() / size);
        let v_size = coords[..n].iter().map(|z| z.norm_sqr()).sum::<f64>();
        let t = coords[n];
        let (f, fc) = (lattice.node(k), pair.fc.node(k));
        if lattice.is_masked(k) || t.norm_sqr() <= OMEGA_TOL * OMEGA_TOL * size || v_size <= OMEGA_TOL * OMEGA_TOL * size {
            mask[k] = true;
            fhat.extend_from_slice(f);
            fhat_c.extend_from_slice(fc);
            continue;
        }
        let g: Vec<Complex64> = coords[..n].iter().map(|z| z / (t * alpha)).collect();
        let g_norm = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        imaginary_part = imaginary_part.max(g.iter().fold(0.0f64, |m, z| m.max(z.im.abs())) / g_norm);
        let g: Vec<f64> = g.iter().map(|z| z.re).collect();
        fhat.extend(f.iter().zip(&g).map(|(a, b)| a + b));
        fhat_c.extend(fc.iter().zip(scale(&vinv(&g), 1.0 / r)).map(|(a, b)| a + b));
    }
    let grid_mask = lattice.combined_mask(mask.iter().any(|m| *m).then_some(&mask[..]));
    let with = |values: Vec<f64>| -> Result<_, LoopGroupError> {
        Ok(lattice.with_values(n, values)?.with_mask(grid_mask.clone()))
    };
    Ok(DirectDressing {
        pair: ChristoffelPair::new(with(fhat)?, with(fhat_c)?, pair.q)?,
        mask,
        cone_drift,
        imaginary_part,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loopgroup::{default_lambdas, extended_frame, make_simple_factor, permutability_factors};
    use crate::surface::{seed_surface, GridSpec, Seed};
    use crate::transform::{darboux, sym_formula};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn seed(kind: Seed, nx: usize) -> ChristoffelPair {
        let spec = match kind {
            Seed::Cylinder => GridSpec::new(nx, nx, (0.0, 1.0), (-0.5, 0.5)),
            _ => GridSpec::new(nx, nx, (-0.5, 0.5), (-0.5, 0.5)),
        };
        seed_surface(kind, &spec, 3).unwrap()
    }

    fn offset(pair: &ChristoffelPair, d: [f64; 3]) -> Vec<f64> {
        pair.f.node(pair.f.base_node()).iter().zip(d).map(|(a, b)| a + b).collect()
    }

    #[test]
    fn direct_dressing_is_the_darboux_transform() {
        let pair = seed(Seed::Plane, 51);
        let v = offset(&pair, [0.3, -0.2, 0.7]);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        for alpha in [c(1.0, 0.0), c(0.0, 1.0)] {
            let p = make_simple_factor(alpha, &v, &f_o).unwrap();
            let direct = dress_pair_direct(&p, &pair).unwrap();
            let riccati = darboux(&pair, p.r(), &v).unwrap();
            let err = direct.pair.f.max_difference(&riccati.fhat).unwrap();
            let err_c = direct.pair.fc.max_difference(&riccati.fhat_c).unwrap();
            assert!(err <= 1e-6 && err_c <= 1e-6, "α = {alpha}: {err:e} {err_c:e}");
            assert!(direct.cone_drift <= 1e-9, "{:e}", direct.cone_drift);
            assert!(direct.imaginary_part <= 1e-9, "{:e}", direct.imaginary_part);
        }
    }

    #[test]
    fn direct_dressing_on_the_cylinder() {
        let pair = seed(Seed::Cylinder, 51);
        let v = offset(&pair, [0.3, -0.2, 0.7]);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        for alpha in [c(0.8, 0.0), c(0.0, 0.9)] {
            let p = make_simple_factor(alpha, &v, &f_o).unwrap();
            let direct = dress_pair_direct(&p, &pair).unwrap();
            let riccati = darboux(&pair, p.r(), &v).unwrap();
            let err = direct.pair.f.max_difference(&riccati.fhat).unwrap();
            assert!(err <= 1e-6, "α = {alpha}: {err:e}");
        }
    }

    #[test]
    fn dressed_frame_keeps_the_loop_invariants() {
        let pair = seed(Seed::Cylinder, 21);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        for alpha in [c(0.9, 0.0), c(0.0, 0.9)] {
            let p = make_simple_factor(alpha, &offset(&pair, [0.3, -0.2, 0.7]), &f_o).unwrap();
            let phi = extended_frame(&pair, &default_lambdas(&[alpha])).unwrap();
            let dressed = dress(&p, &phi).unwrap();
            assert_eq!(dressed.samples().len(), phi.samples().len() - 2);
            assert!(dressed.identity_defect() < 1e-12);
            assert!(dressed.reality_defect().unwrap() < 1e-10);
            assert!(dressed.twisting_defect().unwrap() < 1e-10);
            assert!(dressed.orthogonality_defect().unwrap() < 1e-8);
            let flat = dressed.flatness_residual().unwrap();
            assert!(flat <= 1e-8, "α = {alpha}: {flat:e}");
        }
    }

    #[test]
    fn dressing_then_sym_is_the_darboux_transform() {
        let pair = seed(Seed::Plane, 41);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        let v = offset(&pair, [0.3, -0.2, 0.7]);
        for alpha in [c(1.0, 0.0), c(0.0, 1.0)] {
            let p = make_simple_factor(alpha, &v, &f_o).unwrap();
            let phi = extended_frame(&pair, &default_lambdas(&[alpha])).unwrap();
            let psi = sym_formula(&dress(&p, &phi).unwrap().frame_fields().unwrap()).unwrap();
            let d = darboux(&pair, p.r(), &v).unwrap();
            let o = pair.f.base_node();
            let based = |g: &crate::surface::SurfaceGrid| {
                g.translated(&g.node(o).iter().map(|x| -x).collect::<Vec<_>>())
            };
            let err = psi.f0.max_difference(&based(&d.fhat)).unwrap();
            let err_c = psi.f0c.max_difference(&based(&d.fhat_c)).unwrap();
            assert!(err <= 1e-5 && err_c <= 1e-5, "α = {alpha}: {err:e} {err_c:e}");
        }
    }

    #[test]
    fn dressing_fixes_the_base_and_zero() {
        let pair = seed(Seed::Plane, 11);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        let p = make_simple_factor(c(0.7, 0.0), &offset(&pair, [0.0, 0.4, 0.3]), &f_o).unwrap();
        let phi = extended_frame(&pair, &default_lambdas(&[c(0.7, 0.0)])).unwrap();
        assert!(dress(&p, &phi).unwrap().identity_defect() < 1e-13);
    }

    #[test]
    fn missing_alpha_sample_is_reported() {
        let pair = seed(Seed::Plane, 11);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        let p = make_simple_factor(c(0.7, 0.0), &offset(&pair, [0.0, 0.4, 0.3]), &f_o).unwrap();
        let phi = extended_frame(&pair, &default_lambdas(&[])).unwrap();
        assert!(matches!(dress(&p, &phi), Err(LoopGroupError::MissingAlphaSample(_))));
    }

    #[test]
    fn sequential_dressings_permute() {
        let pair = seed(Seed::Plane, 21);
        let f_o = pair.f.node(pair.f.base_node()).to_vec();
        let (a1, a2) = (c(0.8, 0.0), c(0.0, 1.1));
        let p1 = make_simple_factor(a1, &offset(&pair, [0.3, -0.2, 0.7]), &f_o).unwrap();
        let p2 = make_simple_factor(a2, &offset(&pair, [-0.4, 0.5, 0.2]), &f_o).unwrap();
        let (p1_new, p2_new, _) = permutability_factors(&p1, &p2).unwrap();
        let phi = extended_frame(&pair, &default_lambdas(&[a1, a2])).unwrap();
        let one = dress(&p1_new, &dress(&p2, &phi).unwrap()).unwrap();
        let two = dress(&p2_new, &dress(&p1, &phi).unwrap()).unwrap();
        let mut worst = 0.0f64;
        for s in one.samples() {
            let t = two.sample(s.lambda).expect("same surviving samples");
            for k in (0..s.frames.len()).filter(|k| !one.mask()[*k] && !two.mask()[*k]) {
                worst = worst.max((&s.frames[k] - &t.frames[k]).max_norm());
            }
        }
        assert!(worst <= 1e-6, "{worst:e}");
        assert!(one.flatness_residual().unwrap() <= 1e-8);
    }
}
