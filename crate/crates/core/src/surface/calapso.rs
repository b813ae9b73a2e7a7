//! The Möbius-invariant frame of an isothermic surface and its Calapso data.
//!
//! Frames live in `O(n+1,1)` acting on `R^{n+1,1}` in the light-cone
//! coordinates `(x_1..x_n, a0, a∞)` of [`crate::clifford::lightcone`]. The
//! abstract frame basis is `(f, X, Y, N_1..N_{n−2}, f̂)` with `f, f̂` null,
//! `(f, f̂) = −½`, and `X = f_x`, `Y = f_y` orthonormal.
//!
//! With `dF = F B`, the columns of `B` are:
//!
//! * `df = X dx + Y dy`
//! * `dX = χ1 f + Σ κ_i dx N_i + 2 dx f̂`
//! * `dY = χ2 f − Σ κ_i dy N_i + 2 dy f̂`
//! * `dN_i = τ_i f − κ_i dx X + κ_i dy Y`
//! * `df̂ = ½ χ1 X + ½ χ2 Y + ½ Σ τ_i N_i`
//!
//! where `χ1 = χ11 dx + ψ dy`, `χ2 = ψ dx + χ22 dy`,
//! `χ11 = ½(u − |κ|²)`, `χ22 = ½(−u − |κ|²)` and `τ = κ_x dx − κ_y dy`.
//! The factor 2 in `dX`, `dY` is forced by `(f, f̂) = −½`.

use nalgebra::{DMatrix, SymmetricEigen};

use super::forms::{Accuracy, GridOneForm, NodeResidual};
use super::grid::{Axis, SurfaceGrid};
use super::stencil::{Line, LineStencil};
use super::tree::SpanningTree;
use super::SurfaceError;
use crate::magnus;
use crate::vecops::dot;

/// Thresholds for the Calapso constructions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalapsoOptions {
    /// Largest accepted relative conformality or curvature-line defect.
    pub ccl_tol: f64,
    /// Largest accepted curvature of the normal connection.
    pub flatness_tol: f64,
    /// Largest accepted relative integrability defect of the data.
    pub consistency_tol: f64,
}

impl Default for CalapsoOptions {
    fn default() -> Self {
        Self {
            ccl_tol: 1e-3,
            flatness_tol: 1e-3,
            consistency_tol: 5e-2,
        }
    }
}

/// Calapso data of an isothermic surface in a fixed CCL chart.
#[derive(Clone, Debug, PartialEq)]
pub struct CalapsoData {
    /// Conformal Hopf differential components, `R^{n−2}` per node.
    pub kappa: SurfaceGrid,
    /// Calapso potential `ψ = χ12 = χ21`.
    pub psi: SurfaceGrid,
    /// `u = χ11 − χ22`.
    pub u: SurfaceGrid,
    /// `τ_i`, the `f`-component of `dN_i`.
    pub tau: GridOneForm,
    /// `χ1 = χ11 dx + χ12 dy`.
    pub chi1: GridOneForm,
    /// `χ2 = χ21 dx + χ22 dy`.
    pub chi2: GridOneForm,
}

impl CalapsoData {
    /// `‖κ‖` per node, independent of the normal frame.
    pub fn kappa_norm(&self) -> Vec<f64> {
        (0..self.kappa.node_count())
            .map(|k| dot(self.kappa.node(k), self.kappa.node(k)).sqrt())
            .collect()
    }

    /// Defect of `χ11 + χ22 = −(κ,κ)`.
    pub fn trace_residual(&self) -> NodeResidual {
        NodeResidual::evaluate(
            self.kappa.node_count(),
            |k| !self.kappa.is_masked(k),
            |k| {
                let kk = dot(self.kappa.node(k), self.kappa.node(k));
                (self.chi1.dx_at(k)[0] + self.chi2.dy_at(k)[0] + kk).abs()
            },
        )
    }

    /// Defect of `τ = κ_x dx − κ_y dy` on interior nodes.
    pub fn tau_residual(&self) -> NodeResidual {
        let m = self.kappa.dim();
        let kx = self.kappa.partial(Axis::X, 1, Accuracy::Second);
        let ky = self.kappa.partial(Axis::Y, 1, Accuracy::Second);
        NodeResidual::evaluate(
            self.kappa.node_count(),
            |k| self.kappa.is_interior(k) && !self.kappa.is_masked(k),
            |k| {
                let mut acc = 0.0f64;
                for i in 0..m {
                    acc = acc.max((self.tau.dx_at(k)[i] - kx[k * m + i]).abs());
                    acc = acc.max((self.tau.dy_at(k)[i] + ky[k * m + i]).abs());
                }
                acc
            },
        )
    }
}

/// Bilinear form of `R^{n+1,1}` in light-cone coordinates.
fn mink(u: &[f64], w: &[f64]) -> f64 {
    let n = u.len() - 2;
    dot(&u[..n], &w[..n]) - 0.5 * (u[n] * w[n + 1] + u[n + 1] * w[n])
}

fn slice(v: &[f64], k: usize, d: usize) -> &[f64] {
    &v[k * d..(k + 1) * d]
}

/// Projection onto the orthogonal complement of `span(Y, X, Yy, f̂)`.
fn project_normal(w: &[f64], y: &[f64], x: &[f64], yy: &[f64], fhat: &[f64]) -> Vec<f64> {
    let (cx, cy, cf, cyl) = (mink(w, x), mink(w, yy), mink(w, fhat), mink(w, y));
    (0..w.len())
        .map(|i| w[i] - cx * x[i] - cy * yy[i] + 2.0 * cf * y[i] + 2.0 * cyl * fhat[i])
        .collect()
}

/// Symmetric (Löwdin) orthonormalization of spacelike vectors.
fn lowdin(vs: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let m = vs.len();
    let gram = DMatrix::from_fn(m, m, |i, j| mink(&vs[i], &vs[j]));
    let eig = SymmetricEigen::new(gram);
    if eig.eigenvalues.iter().any(|l| *l <= 1e-14) {
        return None;
    }
    let inv_sqrt = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
        * eig.eigenvectors.transpose();
    Some(
        (0..m)
            .map(|j| {
                let mut out = vec![0.0; vs[0].len()];
                for (i, v) in vs.iter().enumerate() {
                    for (o, x) in out.iter_mut().zip(v) {
                        *o += inv_sqrt[(i, j)] * x;
                    }
                }
                out
            })
            .collect(),
    )
}

/// Isometric light-cone lift `Y = e^{−u}(f, 1, |f|²)` and its derivatives
/// up to second order, assembled from fourth-order derivatives of `f` up to
/// third order. Differencing `Y` itself would amplify the error of the
/// boundary stencils in `e^{−u}`.
struct IsometricLift {
    y: Vec<f64>,
    yx: Vec<f64>,
    yy: Vec<f64>,
    yxx: Vec<f64>,
    yyy: Vec<f64>,
    yxy: Vec<f64>,
}

impl IsometricLift {
    fn new(f: &SurfaceGrid) -> Result<Self, SurfaceError> {
        let n = f.dim();
        let d = n + 2;
        let acc = Accuracy::Fourth;
        let again = |v: &[f64], axis: Axis| {
            super::stencil::partial(v, n, f.nx(), f.ny(), f.spacing(axis), axis, 1, acc.order())
        };
        let fx = f.partial(Axis::X, 1, acc);
        let fy = f.partial(Axis::Y, 1, acc);
        let fxx = f.partial(Axis::X, 2, acc);
        let fyy = f.partial(Axis::Y, 2, acc);
        let fxy = f.partial_xy(acc);
        let fxxx = f.partial(Axis::X, 3, acc);
        let fyyy = f.partial(Axis::Y, 3, acc);
        let fxxy = again(&fxx, Axis::Y);
        let fxyy = again(&fyy, Axis::X);

        let count = f.node_count();
        let mut out = Self {
            y: Vec::with_capacity(count * d),
            yx: Vec::with_capacity(count * d),
            yy: Vec::with_capacity(count * d),
            yxx: Vec::with_capacity(count * d),
            yyy: Vec::with_capacity(count * d),
            yxy: Vec::with_capacity(count * d),
        };
        for k in 0..count {
            let p = f.node(k);
            let [a, b, aa, bb, ab, aaa, bbb, aab, abb] =
                [&fx, &fy, &fxx, &fyy, &fxy, &fxxx, &fyyy, &fxxy, &fxyy].map(|v| slice(v, k, n));
            // w = e^{2u} = ½(|f_x|² + |f_y|²) and its derivatives
            let w = 0.5 * (dot(a, a) + dot(b, b));
            if w < super::UMBILIC_TOL {
                return Err(SurfaceError::NotCcl(f64::INFINITY));
            }
            let wx = dot(a, aa) + dot(b, ab);
            let wy = dot(a, ab) + dot(b, bb);
            let wxx = dot(aa, aa) + dot(a, aaa) + dot(ab, ab) + dot(b, aab);
            let wyy = dot(ab, ab) + dot(a, abb) + dot(bb, bb) + dot(b, bbb);
            let wxy = dot(ab, aa) + dot(a, aab) + dot(bb, ab) + dot(b, abb);
            // s = w^{−1/2}
            let s = w.sqrt().recip();
            let s3 = s * s * s;
            let s5 = s3 * s * s;
            let sx = -0.5 * s3 * wx;
            let sy = -0.5 * s3 * wy;
            let sxx = 0.75 * s5 * wx * wx - 0.5 * s3 * wxx;
            let syy = 0.75 * s5 * wy * wy - 0.5 * s3 * wyy;
            let sxy = 0.75 * s5 * wx * wy - 0.5 * s3 * wxy;
            // Euclidean lift E = (f, 1, |f|²) and its derivatives
            let lift = |x: &[f64], a0: f64, ainf: f64| {
                let mut v = x.to_vec();
                v.push(a0);
                v.push(ainf);
                v
            };
            let e = lift(p, 1.0, dot(p, p));
            let ex = lift(a, 0.0, 2.0 * dot(p, a));
            let ey = lift(b, 0.0, 2.0 * dot(p, b));
            let exx = lift(aa, 0.0, 2.0 * dot(a, a) + 2.0 * dot(p, aa));
            let eyy = lift(bb, 0.0, 2.0 * dot(b, b) + 2.0 * dot(p, bb));
            let exy = lift(ab, 0.0, 2.0 * dot(a, b) + 2.0 * dot(p, ab));
            for i in 0..d {
                out.y.push(s * e[i]);
                out.yx.push(sx * e[i] + s * ex[i]);
                out.yy.push(sy * e[i] + s * ey[i]);
                out.yxx.push(sxx * e[i] + 2.0 * sx * ex[i] + s * exx[i]);
                out.yyy.push(syy * e[i] + 2.0 * sy * ey[i] + s * eyy[i]);
                out.yxy.push(sxy * e[i] + sx * ey[i] + sy * ex[i] + s * exy[i]);
            }
        }
        Ok(out)
    }
}

/// Calapso data with default thresholds.
pub fn conformal_frame(f: &SurfaceGrid) -> Result<CalapsoData, SurfaceError> {
    conformal_frame_with(f, CalapsoOptions::default())
}

/// Builds the isometric light-cone lift `Y = e^{−u}(f + v0 + |f|² v∞)`, its
/// dual null vector `f̂ = ¼(ΔY + ¼(ΔY,ΔY) Y)`, a parallel orthonormal frame
/// of the conformal Gauss map transported along the spanning tree, and
/// reads off `κ, ψ, u, τ, χ1, χ2`.
pub fn conformal_frame_with(
    f: &SurfaceGrid,
    opts: CalapsoOptions,
) -> Result<CalapsoData, SurfaceError> {
    let n = f.dim();
    if n < 3 {
        return Err(SurfaceError::InvalidParams(
            "Calapso data need ambient dimension at least 3".into(),
        ));
    }
    let m = n - 2;
    let d = n + 2;
    let count = f.node_count();
    let fx = f.partial(Axis::X, 1, Accuracy::Fourth);
    let fy = f.partial(Axis::Y, 1, Accuracy::Fourth);
    let conformality = (0..count)
        .filter(|&k| !f.is_masked(k))
        .map(|k| {
            let (a, b) = (slice(&fx, k, n), slice(&fy, k, n));
            let (aa, bb, ab) = (dot(a, a), dot(b, b), dot(a, b));
            ((aa - bb).abs() + 2.0 * ab.abs()) / (aa + bb)
        })
        .fold(0.0f64, f64::max);
    if conformality > opts.ccl_tol {
        return Err(SurfaceError::NotCcl(conformality));
    }
    let lift = IsometricLift::new(f)?;
    let (ylift, yx, yy, yxx, yyy, yxy) = (
        &lift.y, &lift.yx, &lift.yy, &lift.yxx, &lift.yyy, &lift.yxy,
    );

    let mut fhat = vec![0.0; count * d];
    for k in 0..count {
        let lap: Vec<f64> = (0..d).map(|i| yxx[k * d + i] + yyy[k * d + i]).collect();
        let ll = mink(&lap, &lap);
        for i in 0..d {
            fhat[k * d + i] = 0.25 * (lap[i] + 0.25 * ll * ylift[k * d + i]);
        }
    }
    let normal_proj = |k: usize, w: &[f64]| {
        project_normal(
            w,
            slice(ylift, k, d),
            slice(yx, k, d),
            slice(yy, k, d),
            slice(&fhat, k, d),
        )
    };

    // curvature lines: the normal part of Y_xy vanishes
    let mut ccl_defect = 0.0f64;
    for k in 0..count {
        if f.is_masked(k) {
            continue;
        }
        let pn = normal_proj(k, slice(yxy, k, d));
        let scale = 1.0 + mink(slice(yxx, k, d), slice(yxx, k, d)).abs().sqrt();
        ccl_defect = ccl_defect.max(mink(&pn, &pn).max(0.0).sqrt() / scale);
    }
    if ccl_defect > opts.ccl_tol {
        return Err(SurfaceError::NotCcl(ccl_defect));
    }

    // parallel normal frame, gauge fixed by Gram–Schmidt order at the base
    let base = f.base_node();
    let mut frame: Vec<Option<Vec<Vec<f64>>>> = vec![None; count];
    let mut start: Vec<Vec<f64>> = Vec::with_capacity(m);
    for c in 0..d {
        if start.len() == m {
            break;
        }
        let mut e = vec![0.0; d];
        e[c] = 1.0;
        let mut w = normal_proj(base, &e);
        for s in &start {
            let proj = mink(&w, s);
            for (wi, si) in w.iter_mut().zip(s) {
                *wi -= proj * si;
            }
        }
        let nn = mink(&w, &w);
        if nn > 1e-6 {
            let s = nn.sqrt().recip();
            start.push(w.into_iter().map(|v| v * s).collect());
        }
    }
    if start.len() < m {
        return Err(SurfaceError::NonFlatNormalBundle(f64::INFINITY));
    }
    frame[base] = Some(start);
    let tree = SpanningTree::new(f.nx(), f.ny(), f.base_index());
    for e in tree.edges() {
        let prev = frame[e.from].as_ref().expect("tree order");
        let projected: Vec<Vec<f64>> = prev.iter().map(|v| normal_proj(e.to, v)).collect();
        let next = lowdin(&projected).ok_or(SurfaceError::NonFlatNormalBundle(f64::INFINITY))?;
        frame[e.to] = Some(next);
    }
    let frame: Vec<Vec<Vec<f64>>> = frame.into_iter().map(|f| f.expect("spanning")).collect();

    // derivatives of the frame field, flattened as m vectors of length d
    let flat: Vec<f64> = frame.iter().flat_map(|vs| vs.iter().flatten().copied()).collect();
    let nfield = f.with_values(m * d, flat)?;
    let nx_ = nfield.partial(Axis::X, 1, Accuracy::Fourth);
    let ny_ = nfield.partial(Axis::Y, 1, Accuracy::Fourth);

    // normal bundle curvature from the connection forms (N_i', N_j)
    if m > 1 {
        let conn = |der: &[f64], k: usize| {
            DMatrix::from_fn(m, m, |i, j| {
                mink(&der[(k * m + i) * d..(k * m + i + 1) * d], &frame[k][j])
            })
        };
        let wx: Vec<f64> = (0..count).flat_map(|k| conn(&nx_, k).as_slice().to_vec()).collect();
        let wy: Vec<f64> = (0..count).flat_map(|k| conn(&ny_, k).as_slice().to_vec()).collect();
        let wxg = f.with_values(m * m, wx.clone())?;
        let wyg = f.with_values(m * m, wy.clone())?;
        let dy_wx = wxg.partial(Axis::Y, 1, Accuracy::Second);
        let dx_wy = wyg.partial(Axis::X, 1, Accuracy::Second);
        let mut worst = 0.0f64;
        for k in 0..count {
            if !f.is_interior(k) || f.is_masked(k) {
                continue;
            }
            let ax = DMatrix::from_column_slice(m, m, slice(&wx, k, m * m));
            let ay = DMatrix::from_column_slice(m, m, slice(&wy, k, m * m));
            let curv = DMatrix::from_column_slice(m, m, slice(&dx_wy, k, m * m))
                - DMatrix::from_column_slice(m, m, slice(&dy_wx, k, m * m))
                + (&ax * &ay - &ay * &ax);
            worst = worst.max(curv.amax());
        }
        if worst > opts.flatness_tol {
            return Err(SurfaceError::NonFlatNormalBundle(worst));
        }
    }

    let mut kappa = Vec::with_capacity(count * m);
    let mut psi = Vec::with_capacity(count);
    let mut u = Vec::with_capacity(count);
    let mut tau_x = Vec::with_capacity(count * m);
    let mut tau_y = Vec::with_capacity(count * m);
    let mut chi1x = Vec::with_capacity(count);
    let mut chi1y = Vec::with_capacity(count);
    let mut chi2x = Vec::with_capacity(count);
    let mut chi2y = Vec::with_capacity(count);
    for k in 0..count {
        let fh = slice(&fhat, k, d);
        let kap: Vec<f64> = frame[k].iter().map(|nv| mink(nv, slice(yxx, k, d))).collect();
        let kk = dot(&kap, &kap);
        let p = -2.0 * mink(slice(yxy, k, d), fh);
        let c11 = -2.0 * mink(slice(yxx, k, d), fh);
        let c22 = -2.0 * mink(slice(yyy, k, d), fh);
        let uk = c11 - c22;
        for i in 0..m {
            tau_x.push(-2.0 * mink(&nx_[(k * m + i) * d..(k * m + i + 1) * d], fh));
            tau_y.push(-2.0 * mink(&ny_[(k * m + i) * d..(k * m + i + 1) * d], fh));
        }
        kappa.extend(kap);
        psi.push(p);
        u.push(uk);
        chi1x.push(0.5 * (uk - kk));
        chi1y.push(p);
        chi2x.push(p);
        chi2y.push(0.5 * (-uk - kk));
    }
    let (nx, ny) = (f.nx(), f.ny());
    Ok(CalapsoData {
        kappa: f.with_values(m, kappa)?,
        psi: f.with_values(1, psi)?,
        u: f.with_values(1, u)?,
        tau: GridOneForm::new(nx, ny, m, tau_x, tau_y)?,
        chi1: GridOneForm::new(nx, ny, 1, chi1x, chi1y)?,
        chi2: GridOneForm::new(nx, ny, 1, chi2x, chi2y)?,
    })
}

/// Residuals of the vector Calapso equation on interior nodes:
/// `r1 = max ‖κ_xy − ψκ‖` and `r2 = max |Δψ + 2(κ,κ)_xy|`, with second-order
/// differences.
pub fn calapso_residual(data: &CalapsoData) -> (f64, f64) {
    let kappa = &data.kappa;
    let m = kappa.dim();
    let kxy = kappa.partial_xy(Accuracy::Second);
    let psi = data.psi.values();
    let lap: Vec<f64> = {
        let a = data.psi.partial(Axis::X, 2, Accuracy::Second);
        let b = data.psi.partial(Axis::Y, 2, Accuracy::Second);
        a.iter().zip(&b).map(|(x, y)| x + y).collect()
    };
    let kk = kappa.map(1, |_, v| vec![dot(v, v)]);
    let kk_xy = kk.partial_xy(Accuracy::Second);
    let include = |k: usize| kappa.is_interior(k) && !kappa.is_masked(k);
    let r1 = NodeResidual::evaluate(kappa.node_count(), include, |k| {
        let v: Vec<f64> = (0..m)
            .map(|i| kxy[k * m + i] - psi[k] * kappa.node(k)[i])
            .collect();
        dot(&v, &v).sqrt()
    });
    let r2 = NodeResidual::evaluate(kappa.node_count(), include, |k| {
        (lap[k] + 2.0 * kk_xy[k]).abs()
    });
    (r1.max, r2.max)
}

/// `B_x` and `B_y` (coefficients of `dx`, `dy` in `B`) from the data at one
/// node.
fn mc_blocks(
    kappa: &[f64],
    kx: &[f64],
    ky: &[f64],
    psi: f64,
    u: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let m = kappa.len();
    let d = m + 4;
    let last = d - 1;
    let kk = dot(kappa, kappa);
    let c11 = 0.5 * (u - kk);
    let c22 = 0.5 * (-u - kk);
    let mut bx = DMatrix::zeros(d, d);
    let mut by = DMatrix::zeros(d, d);
    // df
    bx[(1, 0)] = 1.0;
    by[(2, 0)] = 1.0;
    // dX
    bx[(0, 1)] = c11;
    by[(0, 1)] = psi;
    bx[(last, 1)] = 2.0;
    // dY
    bx[(0, 2)] = psi;
    by[(0, 2)] = c22;
    by[(last, 2)] = 2.0;
    for i in 0..m {
        let ni = 3 + i;
        bx[(ni, 1)] = kappa[i];
        by[(ni, 2)] = -kappa[i];
        // dN_i
        bx[(0, ni)] = kx[i];
        by[(0, ni)] = -ky[i];
        bx[(1, ni)] = -kappa[i];
        by[(2, ni)] = kappa[i];
        // df̂
        bx[(ni, last)] = 0.5 * kx[i];
        by[(ni, last)] = -0.5 * ky[i];
    }
    bx[(1, last)] = 0.5 * c11;
    bx[(2, last)] = 0.5 * psi;
    by[(1, last)] = 0.5 * psi;
    by[(2, last)] = 0.5 * c22;
    (bx, by)
}

/// Interpolates a per-node matrix field at a fractional line position.
fn interpolate_matrix(field: &[DMatrix<f64>], line: &Line, pos: f64) -> DMatrix<f64> {
    let st = LineStencil::new(line.len(), pos, 0, 5.min(line.len()));
    let mut out = DMatrix::zeros(field[0].nrows(), field[0].ncols());
    for (j, w) in st.weights.iter().enumerate() {
        out += &field[line.node(st.start + j)] * *w;
    }
    out
}

/// Reconstructs a surface from Calapso data `(κ, ψ)`: integrates `u` (zero
/// at the base node, then shifted by `r`), assembles `B` and integrates
/// `dF = F B` with fourth-order Magnus steps along the spanning tree from
/// the frame that sends `f ↦ v0`, `X, Y, N ↦ e_1..e_n`, `f̂ ↦ v∞`. Returns
/// the stereographic projection of `F e_0`.
pub fn frame_from_calapso(
    kappa: &SurfaceGrid,
    psi: &SurfaceGrid,
    r: f64,
) -> Result<SurfaceGrid, SurfaceError> {
    frame_from_calapso_with(kappa, psi, r, CalapsoOptions::default())
}

/// [`frame_from_calapso`] with explicit thresholds.
pub fn frame_from_calapso_with(
    kappa: &SurfaceGrid,
    psi: &SurfaceGrid,
    r: f64,
    opts: CalapsoOptions,
) -> Result<SurfaceGrid, SurfaceError> {
    kappa.check_congruent(psi)?;
    if psi.dim() != 1 {
        return Err(SurfaceError::InvalidParams("ψ must be scalar".into()));
    }
    let m = kappa.dim();
    let n = m + 2;
    let d = n + 2;
    let count = kappa.node_count();
    let kx = kappa.partial(Axis::X, 1, Accuracy::Fourth);
    let ky = kappa.partial(Axis::Y, 1, Accuracy::Fourth);
    let kk = kappa.map(1, |_, v| vec![dot(v, v)]);
    let kkx = kk.partial(Axis::X, 1, Accuracy::Fourth);
    let kky = kk.partial(Axis::Y, 1, Accuracy::Fourth);
    let px = psi.partial(Axis::X, 1, Accuracy::Fourth);
    let py = psi.partial(Axis::Y, 1, Accuracy::Fourth);

    // ½u_y = ψ_x + (κ,κ)_y and ½u_x = −ψ_y − (κ,κ)_x
    let du_x: Vec<f64> = (0..count).map(|k| -2.0 * (py[k] + kkx[k])).collect();
    let du_y: Vec<f64> = (0..count).map(|k| 2.0 * (px[k] + kky[k])).collect();
    let du = GridOneForm::new(kappa.nx(), kappa.ny(), 1, du_x, du_y)?;
    let curl = du.cell_curl(kappa).into_iter().fold(0.0f64, f64::max);
    let du_scale = (0..count)
        .map(|k| du.dx_at(k)[0].abs().max(du.dy_at(k)[0].abs()))
        .fold(0.0f64, f64::max);
    if curl > opts.consistency_tol * (1.0 + du_scale) {
        return Err(SurfaceError::InconsistentData(curl));
    }
    // κ_xy = ψ κ, relative to the size of κ
    let kxy = kappa.partial_xy(Accuracy::Fourth);
    let kscale = kappa.values().iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut defect = 0.0f64;
    for k in 0..count {
        if kappa.is_interior(k) {
            for i in 0..m {
                defect = defect.max((kxy[k * m + i] - psi.node(k)[0] * kappa.node(k)[i]).abs());
            }
        }
    }
    if defect > opts.consistency_tol * (1.0 + kscale) {
        return Err(SurfaceError::InconsistentData(defect));
    }
    let u = du.integrate(kappa);

    let mut bx = Vec::with_capacity(count);
    let mut by = Vec::with_capacity(count);
    for k in 0..count {
        let (a, b) = mc_blocks(
            kappa.node(k),
            slice(&kx, k, m),
            slice(&ky, k, m),
            psi.node(k)[0],
            u.node(k)[0] + r,
        );
        bx.push(a);
        by.push(b);
    }

    // abstract basis (f, X, Y, N.., f̂) → coordinates (x.., a0, a∞)
    let mut f0 = DMatrix::zeros(d, d);
    f0[(n, 0)] = 1.0;
    for k in 1..=n {
        f0[(k - 1, k)] = 1.0;
    }
    f0[(n + 1, n + 1)] = 1.0;
    let mut frames: Vec<Option<DMatrix<f64>>> = vec![None; count];
    frames[kappa.base_node()] = Some(f0);
    let tree = SpanningTree::new(kappa.nx(), kappa.ny(), kappa.base_index());
    for e in tree.edges() {
        let field = match e.line.axis {
            Axis::X => &bx,
            Axis::Y => &by,
        };
        let h = kappa.spacing(e.line.axis) * e.step as f64;
        let xs: Vec<DMatrix<f64>> = magnus::NODES
            .iter()
            .map(|s| interpolate_matrix(field, &e.line, e.pos as f64 + s * e.step as f64) * h)
            .collect();
        let comm = &xs[0] * &xs[1] - &xs[1] * &xs[0];
        let omega = (&xs[0] + &xs[1]) * 0.5 + comm * magnus::COMMUTATOR;
        let next = frames[e.from].as_ref().expect("tree order") * omega.exp();
        frames[e.to] = Some(next);
    }
    let mut values = Vec::with_capacity(count * n);
    for fr in frames {
        let fr = fr.expect("spanning");
        let col = fr.column(0);
        if col[n].abs() < 1e-12 * col.amax() {
            return Err(SurfaceError::InvalidParams(
                "reconstructed surface passes through infinity".into(),
            ));
        }
        values.extend((0..n).map(|i| col[i] / col[n]));
    }
    kappa.with_values(n, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{seed_surface, GridSpec, Seed};

    #[test]
    fn plane_has_vanishing_data() {
        let spec = GridSpec::new(21, 21, (-1.0, 1.0), (-1.0, 1.0));
        let pair = seed_surface(Seed::Plane, &spec, 3).unwrap();
        let data = conformal_frame(&pair.f).unwrap();
        assert!(data.kappa.values().iter().all(|v| v.abs() < 1e-12));
        assert!(data.psi.values().iter().all(|v| v.abs() < 1e-12));
        assert_eq!(calapso_residual(&data), (0.0, 0.0));
    }

    #[test]
    fn cylinder_has_unit_hopf_differential() {
        let worst = |nx: usize, ny: usize| {
            let spec = GridSpec::new(nx, ny, (0.0, std::f64::consts::PI), (-1.0, 1.0));
            let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
            let data = conformal_frame(&pair.f).unwrap();
            assert!(data.trace_residual().max < 1e-12);
            let mut err = 0.0f64;
            for (k, v) in data.kappa_norm().into_iter().enumerate() {
                err = err.max((v - 1.0).abs());
                err = err.max(data.psi.node(k)[0].abs());
                err = err.max((data.u.node(k)[0] + 2.0).abs());
            }
            err.max(data.tau_residual().max)
        };
        let (coarse, fine) = (worst(41, 21), worst(81, 41));
        assert!(coarse < 1e-3 && fine < 1e-4, "{coarse:e} → {fine:e}");
        // τ differentiates the transported frame and loses one order
        assert!(coarse / fine > 6.0, "{coarse:e} → {fine:e}");
    }

    #[test]
    fn cylinder_data_roundtrip_on_gauge_invariants() {
        let spec = GridSpec::new(76, 51, (0.0, 1.5), (-0.5, 0.5));
        let pair = seed_surface(Seed::Cylinder, &spec, 3).unwrap();
        let data = conformal_frame(&pair.f).unwrap();
        let rebuilt = frame_from_calapso(&data.kappa, &data.psi, 0.0).unwrap();
        let again = conformal_frame(&rebuilt).unwrap();
        let (a, b) = (data.kappa_norm(), again.kappa_norm());
        let mut err = 0.0f64;
        for k in 0..a.len() {
            err = err.max((a[k] - b[k]).abs());
            err = err.max((data.psi.node(k)[0] - again.psi.node(k)[0]).abs());
        }
        assert!(err <= 1e-4, "{err:e}");
    }

    #[test]
    fn catenoid_satisfies_calapso_equations() {
        let residual = |nx: usize| {
            let spec = GridSpec::new(nx, nx, (-0.5, 0.5), (-1.0, 1.0));
            let f = SurfaceGrid::sample(&spec, 3, |x, y| {
                vec![x.cosh() * y.cos(), x.cosh() * y.sin(), x]
            })
            .unwrap();
            let data = conformal_frame(&f).unwrap();
            let (r1, r2) = calapso_residual(&data);
            r1.max(r2)
        };
        let (coarse, fine) = (residual(21), residual(41));
        assert!(coarse / fine > 3.5, "{coarse:e} → {fine:e}");
    }

    #[test]
    fn flat_data_rebuild_the_plane() {
        let spec = GridSpec::new(11, 11, (-1.0, 1.0), (-1.0, 1.0)).with_base(5, 5);
        let zero = SurfaceGrid::sample(&spec, 1, |_, _| vec![0.0]).unwrap();
        let f = frame_from_calapso(&zero, &zero, 0.0).unwrap();
        let plane = SurfaceGrid::sample(&spec, 3, |x, y| vec![x, y, 0.0]).unwrap();
        assert!(f.max_difference(&plane).unwrap() < 1e-12);
    }

    #[test]
    fn inconsistent_data_are_rejected() {
        let spec = GridSpec::new(11, 11, (-1.0, 1.0), (-1.0, 1.0));
        let kappa = SurfaceGrid::sample(&spec, 1, |x, y| vec![1.0 + x * y]).unwrap();
        let psi = SurfaceGrid::sample(&spec, 1, |x, _| vec![x * x * x]).unwrap();
        assert!(matches!(
            frame_from_calapso(&kappa, &psi, 0.0),
            Err(SurfaceError::InconsistentData(_))
        ));
    }
}
