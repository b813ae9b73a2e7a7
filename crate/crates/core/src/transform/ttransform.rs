use num_complex::Complex64;

use super::frame::{integrate_frames, pair_generator, FrameField};
use super::TransformError;
use crate::clifford::{Multivector, Signature, VahlenMatrix};
use crate::surface::{Accuracy, Axis, ChristoffelPair, GridOneForm};

/// T-transform `T_r f` with its based frame.
///
/// `F_r^{-1} dF_r = (0, df; r df^c, 0)` is integrated from
/// `F_r(o) = (1, f(o); 0, 1)`, so `T_0 f = f` and `T_r f(o) = f(o)`. The
/// returned pair is `(F_r · 0, f_r^c)` where `df_r^c = d df^c d^t` with `d`
/// the lower right entry of `F_r`; it keeps the polarisation `q` of `pair`.
/// `F_r · ∞` is the Darboux partner `D_{−r} T_r f`.
pub fn t_transform(pair: &ChristoffelPair, r: f64) -> Result<(ChristoffelPair, FrameField), TransformError> {
    if !r.is_finite() {
        return Err(TransformError::InvalidParameter(format!("r = {r}")));
    }
    let n = pair.dim();
    let sig = Signature::euclidean(n);
    let base = pair.f.base_node();
    if r == 0.0 {
        let frames = (0..pair.f.node_count())
            .map(|k| VahlenMatrix::translation(&Multivector::vector(sig, pair.f.node(k))))
            .collect();
        let mut field = FrameField::from_frames(&pair.f, frames)?;
        field.source = Some((pair.clone(), 0.0));
        return Ok((pair.clone(), field));
    }
    let start = VahlenMatrix::translation(&Multivector::vector(sig, pair.f.node(base)));
    let frames = integrate_frames(
        &pair.f,
        start,
        pair_generator(pair, Complex64::new(1.0, 0.0), Complex64::new(r, 0.0)),
    )?;
    let mut field = FrameField::from_frames(&pair.f, frames)?;
    let fr = field.points_at_zero()?;

    let fcx = pair.fc.partial(Axis::X, 1, Accuracy::Fourth);
    let fcy = pair.fc.partial(Axis::Y, 1, Accuracy::Fourth);
    let count = pair.f.node_count();
    let (mut dx, mut dy) = (Vec::with_capacity(count * n), Vec::with_capacity(count * n));
    for k in 0..count {
        let d = &field.at(k).d;
        let dt = d.transpose();
        let rotate = |w: &[f64]| (&(d * &Multivector::vector(sig, w)) * &dt).real_vector_part();
        dx.extend(rotate(&fcx[k * n..(k + 1) * n]));
        dy.extend(rotate(&fcy[k * n..(k + 1) * n]));
    }
    let dual_form = GridOneForm::new(pair.f.nx(), pair.f.ny(), n, dx, dy)?;
    let frc = dual_form
        .integrate(&pair.f)
        .translated(pair.fc.node(base))
        .with_mask(fr.mask().map(<[bool]>::to_vec));
    let new_pair = ChristoffelPair::new(fr, frc, pair.q)?;
    field.source = Some((pair.clone(), r));
    Ok((new_pair, field))
}

/// `R_r = (0, sign(r)/√|r|; √|r|, 0)`, which swaps `0` and `∞` and carries
/// the frame of `T_r f` to a frame of `T_r f^c`: right multiplication by
/// `R_r` turns `(0, df; r df^c, 0)` into `(0, df^c; r df, 0)`.
pub fn swap_gauge(n: usize, r: f64) -> Result<VahlenMatrix, TransformError> {
    if r == 0.0 || !r.is_finite() {
        return Err(TransformError::InvalidParameter(format!("r = {r}")));
    }
    let sig = Signature::euclidean(n);
    let s = r.abs().sqrt();
    Ok(VahlenMatrix::off_diagonal(
        Multivector::scalar(sig, r.signum() / s),
        Multivector::scalar(sig, s),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{christoffel_transform, envelope_residual, seed_surface, GridSpec, Seed, SurfaceGrid};

    /// The plane's T-transform from its extended frame, rescaled by `1/√r`
    /// to the frame based at the identity.
    fn plane_closed_form(spec: &GridSpec, r: f64) -> SurfaceGrid {
        let s = r.sqrt();
        SurfaceGrid::sample(spec, 3, |x, y| {
            let den = 2.0 * ((s * x).cos().powi(2) + (s * y).sinh().powi(2));
            vec![(2.0 * s * x).sin() / den / s, (2.0 * s * y).sinh() / den / s, 0.0]
        })
        .unwrap()
    }

    #[test]
    fn plane_matches_closed_form() {
        let spec = GridSpec::new(101, 101, (-1.0, 1.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        for r in [1.0, 0.5, 2.0] {
            let (tp, frame) = t_transform(&pair, r).unwrap();
            let err = tp.f.max_difference(&plane_closed_form(&spec, r)).unwrap();
            assert!(err <= 1e-10, "r = {r}: {err:e}");
            assert!(frame.vahlen_defect() < 1e-12);
        }
    }

    #[test]
    fn zero_parameter_is_exact_identity() {
        let spec = GridSpec::new(21, 11, (0.0, 1.0), (-0.5, 0.5));
        let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        let (tp, _) = t_transform(&pair, 0.0).unwrap();
        assert_eq!(tp, pair);
    }

    #[test]
    fn composition_of_based_frames_is_exact() {
        let spec = GridSpec::new(31, 31, (-1.0, 1.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        let (_, fr) = t_transform(&pair, 0.4).unwrap();
        let (composed, _) = fr.t_transform(0.3).unwrap();
        let (direct, _) = t_transform(&pair, 0.7).unwrap();
        assert!(composed.f.max_difference(&direct.f).unwrap() <= 1e-8);
    }

    #[test]
    fn transformed_dual_matches_numerical_christoffel_transform() {
        let err = |spec: &GridSpec| {
            let pair = seed_surface(Seed::Cylinder, spec, 3).unwrap();
            let (tp, _) = t_transform(&pair, 0.8).unwrap();
            let num = christoffel_transform(&tp.f, tp.q).unwrap();
            let o = spec.base.unwrap_or((spec.nx / 2, spec.ny / 2));
            let shift: Vec<f64> = tp.fc.at(o.0, o.1).iter().map(|v| -v).collect();
            num.fc.max_difference(&tp.fc.translated(&shift)).unwrap()
        };
        let spec = GridSpec::new(31, 21, (0.0, 1.0), (-0.5, 0.5));
        let (coarse, fine) = (err(&spec), err(&spec.refined()));
        assert!(coarse < 1e-4 && coarse / fine > 10.0, "{coarse:e} → {fine:e}");
    }

    #[test]
    fn dual_pair_transforms_into_the_darboux_partner() {
        let spec = GridSpec::new(41, 41, (0.0, 1.0), (-0.5, 0.5));
        let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        let r = -0.6;
        let (_, fr) = t_transform(&pair, r).unwrap();
        let (_, gr) = t_transform(&pair.swapped(), r).unwrap();
        let gauge = swap_gauge(3, r).unwrap();
        let c = &(gr.base() * &gauge.inverse().unwrap()) * &fr.base().inverse().unwrap();
        let partner = fr.left_multiplied(&c).right_multiplied(&gauge);
        let lhs = gr.points_at_zero().unwrap();
        let rhs = partner.points_at_zero().unwrap();
        assert!(lhs.max_difference(&rhs).unwrap() <= 1e-6);
    }

    #[test]
    fn frame_pair_envelopes_a_sphere_congruence() {
        let residual = |spec: &GridSpec| {
            let pair = seed_surface(Seed::Cylinder, spec, 3).unwrap();
            let (_, fr) = t_transform(&pair, 0.5).unwrap();
            // move F·∞ off infinity at the base node
            let sig = Signature::euclidean(3);
            let shift = VahlenMatrix::translation(&Multivector::vector(sig, &[0.2, -3.0, 0.1]));
            let moved = fr.left_multiplied(&(&VahlenMatrix::inversion(3) * &shift));
            let f = moved.points_at_zero().unwrap();
            let fhat = moved.points_at_infinity().unwrap();
            envelope_residual(&f, &fhat).unwrap().max
        };
        let spec = GridSpec::new(41, 41, (0.0, 1.0), (-0.5, 0.5));
        let (coarse, fine) = (residual(&spec), residual(&spec.refined()));
        assert!(fine < 1e-6 && coarse / fine > 16.0, "{coarse:e} → {fine:e}");
    }
}
