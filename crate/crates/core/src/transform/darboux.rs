use super::TransformError;
use crate::surface::stencil::Line;
use crate::surface::{Accuracy, Axis, ChristoffelPair, SpanningTree, SurfaceGrid};
use crate::vecops::{norm, sandwich, scale, sub, vinv};

/// Smallest `‖g‖` accepted before a node is masked as singular.
pub const G_MIN: f64 = 1e-8;
/// Largest `‖g‖` accepted before a node is masked as singular.
pub const G_MAX: f64 = 1e8;
/// Classical RK4 steps per lattice edge.
const RK4_SUBSTEPS: usize = 3;


/// A Darboux transform `D_r^v f` together with the Riccati solution.
#[derive(Clone, Debug, PartialEq)]
pub struct DarbouxResult {
    /// `f̂ = f + g`.
    pub fhat: SurfaceGrid,
    /// `f̂^c = f^c + (r g)^{-1}`.
    pub fhat_c: SurfaceGrid,
    /// Solution of `dg = r g df^c g − df` with `g(o) = v − f(o)`.
    pub g: SurfaceGrid,
    /// Nodes where `‖g‖` left `[G_MIN, G_MAX]`, and their descendants in
    /// the spanning tree. Values there are unspecified.
    pub singular_mask: Vec<bool>,
    pub r: f64,
    pub v: Vec<f64>,
    /// Polarisation of the seed pair, shared by the transform.
    pub q: f64,
}

impl DarbouxResult {
    /// `(f̂, f̂^c)` as a Christoffel pair with the seed's polarisation.
    pub fn pair(&self) -> Result<ChristoffelPair, TransformError> {
        Ok(ChristoffelPair::new(self.fhat.clone(), self.fhat_c.clone(), self.q)?)
    }

    pub fn unmasked_fraction(&self) -> f64 {
        let masked = self.singular_mask.iter().filter(|m| **m).count();
        1.0 - masked as f64 / self.singular_mask.len() as f64
    }
}

/// Riccati right-hand side `r g ∂f^c g − ∂f` along one lattice direction.
fn riccati(r: f64, g: &[f64], df: &[f64], dfc: &[f64]) -> Vec<f64> {
    sub(&scale(&sandwich(g, dfc), r), df)
}

fn axpy(g: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    g.iter().zip(k).map(|(x, y)| x + a * y).collect()
}

/// Darboux transform `D_r^v f` of a Christoffel pair.
///
/// The Riccati equation is integrated with classical RK4 along the
/// row-then-column spanning tree, in three equal steps per lattice edge.
/// Tangents at the nodes come from sixth-order differences and in between
/// from the seven-point interpolant.
pub fn darboux(pair: &ChristoffelPair, r: f64, v: &[f64]) -> Result<DarbouxResult, TransformError> {
    if r == 0.0 || !r.is_finite() {
        return Err(TransformError::InvalidParameter(format!("r = {r}")));
    }
    let n = pair.dim();
    if v.len() != n {
        return Err(TransformError::InvalidParameter(format!(
            "initial value has {} components, expected {n}",
            v.len()
        )));
    }
    let f = &pair.f;
    let base = f.base_node();
    let g0 = sub(v, f.node(base));
    if norm(&g0) < G_MIN * (1.0 + norm(v)) {
        return Err(TransformError::SeedSingular);
    }
    let count = f.node_count();
    let partials = |grid: &SurfaceGrid| {
        [
            grid.partial(Axis::X, 1, Accuracy::Sixth),
            grid.partial(Axis::Y, 1, Accuracy::Sixth),
        ]
    };
    let (df, dfc) = (partials(f), partials(&pair.fc));
    let nodal = |k: usize, a: usize| (df[a][k * n..(k + 1) * n].to_vec(), dfc[a][k * n..(k + 1) * n].to_vec());
    let axis_index = |line: &Line| match line.axis {
        Axis::X => 0,
        Axis::Y => 1,
    };
    let between = |grid: &SurfaceGrid, line: &Line, pos: f64| {
        let acc = Accuracy::Sixth.order().min(line.len() - 1);
        line.sample(grid.values(), n, pos, 1, acc, grid.spacing(line.axis))
    };

    let mut g = vec![0.0; count * n];
    let mut mask = vec![false; count];
    g[base * n..(base + 1) * n].copy_from_slice(&g0);
    let tree = SpanningTree::new(f.nx(), f.ny(), f.base_index());
    for e in tree.edges() {
        if mask[e.from] {
            mask[e.to] = true;
            continue;
        }
        let a = axis_index(&e.line);
        let h = f.spacing(e.line.axis) * e.step as f64 / RK4_SUBSTEPS as f64;
        // tangents at the 2m + 1 half-substep positions along the edge
        let tangents: Vec<(Vec<f64>, Vec<f64>)> = (0..=2 * RK4_SUBSTEPS)
            .map(|i| match i {
                0 => nodal(e.from, a),
                i if i == 2 * RK4_SUBSTEPS => nodal(e.to, a),
                i => {
                    let pos = e.pos as f64 + e.step as f64 * i as f64 / (2 * RK4_SUBSTEPS) as f64;
                    (between(f, &e.line, pos), between(&pair.fc, &e.line, pos))
                }
            })
            .collect();
        let mut y = g[e.from * n..(e.from + 1) * n].to_vec();
        for s in 0..RK4_SUBSTEPS {
            let [(df0, dfc0), (dfm, dfcm), (df1, dfc1)] = [0, 1, 2].map(|j| &tangents[2 * s + j]);
            let k1 = riccati(r, &y, df0, dfc0);
            let k2 = riccati(r, &axpy(&y, 0.5 * h, &k1), dfm, dfcm);
            let k3 = riccati(r, &axpy(&y, 0.5 * h, &k2), dfm, dfcm);
            let k4 = riccati(r, &axpy(&y, h, &k3), df1, dfc1);
            for c in 0..n {
                y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
            }
        }
        let next = y;
        let size = norm(&next);
        if !(G_MIN..=G_MAX).contains(&size) || !size.is_finite() {
            mask[e.to] = true;
            continue;
        }
        g[e.to * n..(e.to + 1) * n].copy_from_slice(&next);
    }
    if mask.iter().all(|m| *m) {
        return Err(TransformError::AllSingular);
    }

    let mut fhat = Vec::with_capacity(count * n);
    let mut fhat_c = Vec::with_capacity(count * n);
    for k in 0..count {
        let gk = &g[k * n..(k + 1) * n];
        let fk = f.node(k);
        let fck = pair.fc.node(k);
        if mask[k] {
            fhat.extend_from_slice(fk);
            fhat_c.extend_from_slice(fck);
            continue;
        }
        let inv = scale(&vinv(gk), 1.0 / r);
        fhat.extend(fk.iter().zip(gk).map(|(a, b)| a + b));
        fhat_c.extend(fck.iter().zip(&inv).map(|(a, b)| a + b));
    }
    let grid_mask = f.combined_mask(mask.iter().any(|m| *m).then_some(&mask[..]));
    let with = |values: Vec<f64>| -> Result<SurfaceGrid, TransformError> {
        Ok(f.with_values(n, values)?.with_mask(grid_mask.clone()))
    };
    Ok(DarbouxResult {
        fhat: with(fhat)?,
        fhat_c: with(fhat_c)?,
        g: with(g)?,
        singular_mask: mask,
        r,
        v: v.to_vec(),
        q: pair.q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{
        christoffel_transform, envelope_residual, isothermic_residual, seed_surface, GridSpec, Seed,
    };

    fn seed(kind: Seed, nx: usize, ny: usize) -> ChristoffelPair {
        let spec = GridSpec::new(nx, ny, (-0.5, 0.5), (-0.5, 0.5));
        seed_surface(kind, &spec, 3).unwrap()
    }

    #[test]
    fn involution_recovers_the_seed() {
        for kind in [Seed::Plane, Seed::Cylinder] {
            let pair = seed(kind, 51, 51);
            let o = pair.f.node(pair.f.base_node()).to_vec();
            let v: Vec<f64> = o.iter().zip([0.3, -0.2, 0.7]).map(|(a, b)| a + b).collect();
            for r in [0.5, 1.0, -1.0] {
                let d = darboux(&pair, r, &v).unwrap();
                assert!(d.unmasked_fraction() >= 0.95);
                let back = darboux(&d.pair().unwrap(), r, &o).unwrap();
                let err = back.fhat.max_difference(&pair.f).unwrap();
                assert!(err <= 1e-6, "{kind:?} r = {r}: {err:e}");
            }
        }
    }

    #[test]
    fn darboux_pair_envelopes_a_sphere_congruence() {
        let pair = seed(Seed::Cylinder, 51, 51);
        let d = darboux(&pair, 0.5, &[0.4, 0.3, -0.6]).unwrap();
        assert!(envelope_residual(&pair.f, &d.fhat).unwrap().max <= 1e-6);
    }

    #[test]
    fn rk4_step_halving_is_fourth_order() {
        let solve = |nx: usize| {
            let pair = seed(Seed::Cylinder, nx, nx);
            darboux(&pair, 0.8, &[0.4, 0.3, -0.6]).unwrap().fhat
        };
        let (a, b, c) = (solve(26), solve(51), solve(101));
        let coarse_diff = |fine: &SurfaceGrid, coarse: &SurfaceGrid, stride: usize| {
            let mut m = 0.0f64;
            for j in 0..coarse.ny() {
                for i in 0..coarse.nx() {
                    for (x, y) in coarse.at(i, j).iter().zip(fine.at(stride * i, stride * j)) {
                        m = m.max((x - y).abs());
                    }
                }
            }
            m
        };
        let (d1, d2) = (coarse_diff(&b, &a, 2), coarse_diff(&c, &b, 2));
        assert!(d1 / d2 > 12.0, "{d1:e} → {d2:e}");
    }

    #[test]
    fn transform_is_isothermic_and_commutes_with_christoffel() {
        let solve = |nx: usize| {
            let pair = seed(Seed::Cylinder, nx, nx);
            let o = pair.f.node(pair.f.base_node());
            let v: Vec<f64> = o.iter().zip([0.3, -0.2, 0.7]).map(|(a, b)| a + b).collect();
            let d = darboux(&pair, -1.0, &v).unwrap();
            (pair, d)
        };
        // the residual's own differences are second order
        let iso = |d: &DarbouxResult| isothermic_residual(&d.fhat, &d.fhat_c).unwrap().max;
        let (pair, d) = solve(51);
        let (coarse, fine) = (iso(&d), iso(&solve(101).1));
        assert!(coarse / fine > 3.5, "{coarse:e} → {fine:e}");

        let dual = christoffel_transform(&d.fhat, pair.q).unwrap();
        let o = d.fhat_c.node(d.fhat_c.base_node()).to_vec();
        let shifted = d.fhat_c.translated(&o.iter().map(|v| -v).collect::<Vec<_>>());
        let err = dual.fc.max_difference(&shifted).unwrap();
        assert!(err < 1e-4, "{err:e}");
    }

    #[test]
    fn rejects_degenerate_parameters() {
        let pair = seed(Seed::Plane, 11, 11);
        assert!(matches!(darboux(&pair, 0.0, &[1.0, 0.0, 0.0]), Err(TransformError::InvalidParameter(_))));
        assert!(matches!(darboux(&pair, 1.0, &[0.0, 0.0, 0.0]), Err(TransformError::SeedSingular)));
    }
}
