use nalgebra::DMatrix;
use rayon::prelude::*;

use super::darboux::{darboux, DarbouxResult, G_MIN};
use super::TransformError;
use crate::clifford::{cross_ratio, CliffordError, Multivector, Signature};
use crate::surface::{ChristoffelPair, NodeResidual, SurfaceGrid};
use crate::vecops::{dot, norm, scale, sub, vinv};

/// Fourth surface of a Bianchi quadrilateral,
/// `f̂ = (r2 f1 g1⁻¹ − r1 f2 g2⁻¹)(r2 g1⁻¹ − r1 g2⁻¹)⁻¹` with `g_i = f_i − f`,
/// evaluated nodewise in `Cl(n,0)`.
///
/// Nodes where some `g_i` or the denominator nearly vanishes are masked, as
/// are nodes masked in any input.
pub fn bianchi_fourth(
    f: &SurfaceGrid,
    f1: &SurfaceGrid,
    f2: &SurfaceGrid,
    r1: f64,
    r2: f64,
) -> Result<SurfaceGrid, TransformError> {
    if r1 == 0.0 || r2 == 0.0 || r1 == r2 {
        return Err(TransformError::InvalidParameter(format!(
            "need distinct nonzero parameters, got {r1} and {r2}"
        )));
    }
    if !f.congruent(f1) || !f.congruent(f2) {
        return Err(crate::surface::SurfaceError::GridMismatch.into());
    }
    let n = f.dim();
    let sig = Signature::euclidean(n);
    let count = f.node_count();
    let mut values = Vec::with_capacity(count * n);
    let mut mask = vec![false; count];
    for k in 0..count {
        let (p, p1, p2) = (f.node(k), f1.node(k), f2.node(k));
        let (g1, g2) = (sub(p1, p), sub(p2, p));
        let scale_ref = 1.0 + norm(p);
        let skip = f.is_masked(k)
            || f1.is_masked(k)
            || f2.is_masked(k)
            || norm(&g1) < G_MIN * scale_ref
            || norm(&g2) < G_MIN * scale_ref;
        let fourth = if skip {
            None
        } else {
            let (i1, i2) = (vinv(&g1), vinv(&g2));
            let den: Vec<f64> = i1.iter().zip(&i2).map(|(a, b)| r2 * a - r1 * b).collect();
            let size = r2.abs() * norm(&i1) + r1.abs() * norm(&i2);
            if norm(&den) <= 1e-12 * size {
                None
            } else {
                let v = |x: &[f64]| Multivector::vector(sig, x);
                let num = &(&v(p1) * &v(&i1)).scale(r2) - &(&v(p2) * &v(&i2)).scale(r1);
                Some((&num * &v(&vinv(&den))).real_vector_part())
            }
        };
        match fourth {
            Some(x) => values.extend(x),
            None => {
                mask[k] = true;
                values.extend_from_slice(p);
            }
        }
    }
    if mask.iter().all(|m| *m) {
        return Err(TransformError::DegenerateDenominator);
    }
    let any = mask.iter().any(|m| *m);
    Ok(f.with_values(n, values)?.with_mask(any.then_some(mask)))
}

/// Fourth pair of a Bianchi quadrilateral built from two Darboux transforms
/// of `pair`: `f̂` from [`bianchi_fourth`] and `f̂^c = f1^c + (r2 g12)⁻¹`
/// with `g12 = f̂ − f1`, which makes the duals a Bianchi quadrilateral too.
pub fn bianchi_fourth_pair(
    pair: &ChristoffelPair,
    first: &DarbouxResult,
    second: &DarbouxResult,
) -> Result<ChristoffelPair, TransformError> {
    let (r1, r2) = (first.r, second.r);
    let fhat = bianchi_fourth(&pair.f, &first.fhat, &second.fhat, r1, r2)?;
    let n = pair.dim();
    let mut dual = Vec::with_capacity(fhat.node_count() * n);
    let mut mask: Vec<bool> = (0..fhat.node_count()).map(|k| fhat.is_masked(k)).collect();
    for (k, masked) in mask.iter_mut().enumerate() {
        let g12 = sub(fhat.node(k), first.fhat.node(k));
        let fc1 = first.fhat_c.node(k);
        if *masked || first.fhat_c.is_masked(k) || norm(&g12) < G_MIN * (1.0 + norm(fc1)) {
            *masked = true;
            dual.extend_from_slice(fc1);
            continue;
        }
        let inv = scale(&vinv(&g12), 1.0 / r2);
        dual.extend(fc1.iter().zip(&inv).map(|(a, b)| a + b));
    }
    let any = mask.iter().any(|m| *m);
    let mask = any.then_some(mask);
    let fc = fhat.with_values(n, dual)?.with_mask(mask.clone());
    Ok(ChristoffelPair::new(fhat.with_mask(mask), fc, pair.q)?)
}

/// One face of a Bianchi cube: four corner labels and the largest nodewise
/// deviation of their Clifford cross-ratio from `ratio`.
#[derive(Clone, Debug, PartialEq)]
pub struct CubeFace {
    pub corners: [&'static str; 4],
    pub ratio: f64,
    pub deviation: f64,
}

/// Eight surfaces `f, f1, f2, f3, f12, f13, f23, f123` with `f_i = D_{r_i} f`
/// and every face a Bianchi quadrilateral.
#[derive(Clone, Debug, PartialEq)]
pub struct BianchiCube {
    pub labels: [&'static str; 8],
    pub surfaces: Vec<SurfaceGrid>,
    pub faces: Vec<CubeFace>,
    /// Largest ratio `σ5/σ1` of singular values of the eight light-cone
    /// lifts at one node; zero when the eight points lie on a 2-sphere.
    pub sphere_defect: f64,
    pub masked_nodes: usize,
}

impl BianchiCube {
    pub fn surface(&self, label: &str) -> Option<&SurfaceGrid> {
        self.labels.iter().position(|l| *l == label).map(|i| &self.surfaces[i])
    }

    pub fn max_face_deviation(&self) -> f64 {
        self.faces.iter().map(|f| f.deviation).fold(0.0, f64::max)
    }
}

/// Nodewise deviation `|C(a, b, c, d) − ratio|` of the Clifford cross-ratio
/// of four congruent surfaces, over nodes unmasked in every corner and in
/// `mask`.
pub fn quad_cross_ratio_deviation(
    corners: [&SurfaceGrid; 4],
    ratio: f64,
    mask: Option<&[bool]>,
) -> Result<NodeResidual, TransformError> {
    let [a, ..] = corners;
    if corners.iter().any(|s| !a.congruent(s)) {
        return Err(crate::surface::SurfaceError::GridMismatch.into());
    }
    let sig = Signature::euclidean(a.dim());
    let count = a.node_count();
    let include = |k: usize| !corners.iter().any(|s| s.is_masked(k)) && !mask.is_some_and(|m| m[k]);
    let per_node = (0..count)
        .into_par_iter()
        .map(|k| {
            if !include(k) {
                return Ok(0.0);
            }
            let p = corners.map(|s| Multivector::vector(sig, s.node(k)));
            let (cr, _) = cross_ratio(&p[0], &p[1], &p[2], &p[3])?;
            Ok((&cr - &Multivector::scalar(sig, ratio)).max_norm())
        })
        .collect::<Result<Vec<f64>, CliffordError>>()?;
    Ok(NodeResidual::evaluate(count, include, |k| per_node[k]))
}

/// Builds the Bianchi cube over `pair` from three Darboux transforms with
/// parameters `r` and initial values `v`, then reports every face
/// cross-ratio and the concircularity of the eight corners.
pub fn bianchi_cube(
    pair: &ChristoffelPair,
    r: [f64; 3],
    v: [&[f64]; 3],
) -> Result<BianchiCube, TransformError> {
    for i in 0..3 {
        if r[i] == 0.0 {
            return Err(TransformError::InvalidParameter("parameters must be nonzero".into()));
        }
        for j in i + 1..3 {
            if r[i] == r[j] {
                return Err(TransformError::InvalidParameter(format!(
                    "parameters must be distinct, got r{} = r{} = {}",
                    i + 1,
                    j + 1,
                    r[i]
                )));
            }
            if norm(&sub(v[i], v[j])) < G_MIN {
                return Err(TransformError::InvalidParameter("initial values must be distinct".into()));
            }
        }
    }
    let singles: Vec<DarbouxResult> = (0..3)
        .into_par_iter()
        .map(|i| darboux(pair, r[i], v[i]))
        .collect::<Result<_, _>>()?;
    let f = &pair.f;
    let [f1, f2, f3] = [0, 1, 2].map(|i| &singles[i].fhat);
    let f12 = bianchi_fourth(f, f1, f2, r[0], r[1])?;
    let f13 = bianchi_fourth(f, f1, f3, r[0], r[2])?;
    let f23 = bianchi_fourth(f, f2, f3, r[1], r[2])?;
    let f123 = bianchi_fourth(f1, &f12, &f13, r[1], r[2])?;
    let labels = ["f", "f1", "f2", "f3", "f12", "f13", "f23", "f123"];
    let surfaces = vec![f.clone(), f1.clone(), f2.clone(), f3.clone(), f12, f13, f23, f123];

    let count = f.node_count();
    let mask: Vec<bool> = (0..count)
        .map(|k| surfaces.iter().any(|s| s.is_masked(k)))
        .collect();
    let pick = |name: &str| labels.iter().position(|l| *l == name).expect("known label");
    let face_specs: [([&'static str; 4], f64); 6] = [
        (["f", "f1", "f12", "f2"], r[1] / r[0]),
        (["f3", "f13", "f123", "f23"], r[1] / r[0]),
        (["f", "f3", "f13", "f1"], r[0] / r[2]),
        (["f2", "f23", "f123", "f12"], r[0] / r[2]),
        (["f", "f3", "f23", "f2"], r[1] / r[2]),
        (["f1", "f13", "f123", "f12"], r[1] / r[2]),
    ];
    let n = f.dim();
    let mut faces = Vec::with_capacity(6);
    for (corners, ratio) in face_specs {
        let idx = corners.map(pick);
        let quad = idx.map(|i| &surfaces[i]);
        let deviation = quad_cross_ratio_deviation(quad, ratio, Some(&mask))?.max;
        faces.push(CubeFace { corners, ratio, deviation });
    }

    let mut sphere_defect = 0.0f64;
    for k in (0..count).filter(|k| !mask[*k]) {
        let mut lifts = DMatrix::zeros(8, n + 2);
        for (row, s) in surfaces.iter().enumerate() {
            let x = s.node(k);
            let len = norm(x).max(1.0);
            // light-cone lift (x, 1, |x|²) scaled to comparable size
            for (c, xc) in x.iter().enumerate() {
                lifts[(row, c)] = xc / len;
            }
            lifts[(row, n)] = 1.0 / len;
            lifts[(row, n + 1)] = dot(x, x) / len;
        }
        let sv = lifts.singular_values();
        let mut sorted: Vec<f64> = sv.iter().copied().collect();
        sorted.sort_by(|a, b| b.total_cmp(a));
        if sorted.len() > 4 {
            sphere_defect = sphere_defect.max(sorted[4] / sorted[0]);
        }
    }
    Ok(BianchiCube {
        labels,
        surfaces,
        faces,
        sphere_defect,
        masked_nodes: mask.iter().filter(|m| **m).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{seed_surface, GridSpec, Seed};

    fn plane() -> ChristoffelPair {
        let spec = GridSpec::new(51, 51, (-0.5, 0.5), (-0.5, 0.5));
        seed_surface(Seed::Plane, &spec, 3).unwrap()
    }

    fn quad_ratio_deviation(a: &SurfaceGrid, b: &SurfaceGrid, c: &SurfaceGrid, d: &SurfaceGrid, ratio: f64) -> f64 {
        quad_cross_ratio_deviation([a, b, c, d], ratio, None).unwrap().max
    }

    #[test]
    fn fourth_surface_matches_riccati_oracle() {
        let pair = plane();
        let (r1, r2) = (0.5, -1.0);
        let d1 = darboux(&pair, r1, &[0.3, 0.2, 0.8]).unwrap();
        let d2 = darboux(&pair, r2, &[-0.4, 0.1, 0.5]).unwrap();
        let quad = bianchi_fourth_pair(&pair, &d1, &d2).unwrap();
        let fhat = &quad.f;
        assert!(quad_ratio_deviation(&pair.f, &d1.fhat, fhat, &d2.fhat, r2 / r1) <= 1e-8);
        let o = fhat.base_node();
        let oracle = darboux(&d1.pair().unwrap(), r2, fhat.node(o)).unwrap();
        assert!(oracle.fhat.max_difference(fhat).unwrap() <= 1e-6);
        // the duals form a Bianchi quadrilateral as well
        assert!(quad_ratio_deviation(&pair.fc, &d1.fhat_c, &quad.fc, &d2.fhat_c, r2 / r1) <= 1e-8);
        assert!(oracle.fhat_c.max_difference(&quad.fc).unwrap() <= 1e-6);
    }

    #[test]
    fn repeated_surface_gives_unit_ratio() {
        let pair = plane();
        let d1 = darboux(&pair, 0.5, &[0.3, 0.2, 0.8]).unwrap();
        let fhat = bianchi_fourth(&pair.f, &d1.fhat, &d1.fhat, 0.5, 0.7);
        // equal g1 = g2 makes f̂ = f1 for any ratio
        let fhat = fhat.unwrap();
        assert!(fhat.max_difference(&d1.fhat).unwrap() < 1e-12);
    }

    #[test]
    fn cube_faces_are_bianchi_quadrilaterals() {
        let pair = plane();
        let cube = bianchi_cube(
            &pair,
            [0.5, -1.0, 2.0],
            [&[0.3, 0.2, 0.8], &[-0.4, 0.1, 0.5], &[0.2, -0.6, -0.4]],
        )
        .unwrap();
        assert_eq!(cube.faces.len(), 6);
        assert!(cube.max_face_deviation() <= 1e-6, "{:?}", cube.faces);
        assert!(cube.sphere_defect <= 1e-6, "{:e}", cube.sphere_defect);
        // the top corner is symmetric in the three directions
        let f2 = cube.surface("f2").unwrap();
        let alt = bianchi_fourth(
            f2,
            cube.surface("f12").unwrap(),
            cube.surface("f23").unwrap(),
            0.5,
            2.0,
        )
        .unwrap();
        assert!(alt.max_difference(cube.surface("f123").unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn cube_rejects_repeated_parameters() {
        let pair = plane();
        let v: [&[f64]; 3] = [&[0.3, 0.2, 0.8], &[-0.4, 0.1, 0.5], &[0.2, -0.6, -0.4]];
        assert!(matches!(
            bianchi_cube(&pair, [0.5, -1.0, 0.5], v),
            Err(TransformError::InvalidParameter(_))
        ));
    }
}
