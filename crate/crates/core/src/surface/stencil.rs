//! Finite-difference and interpolation weights along grid lines.
//!
//! Weights come from Fornberg's recursion, so any derivative order, accuracy
//! and (possibly fractional) evaluation position share one code path.

use super::grid::Axis;

/// Weights `c[m][j]` of node `x[j]` for the `m`-th derivative at `z`,
/// `m = 0..=max_deriv`.
pub fn fornberg_weights(z: f64, x: &[f64], max_deriv: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_deriv + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_deriv);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Weights for one evaluation point on a line of `len` nodes with unit
/// spacing; divide by `h^deriv` for physical spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct LineStencil {
    pub start: usize,
    pub weights: Vec<f64>,
}

impl LineStencil {
    /// Builds the stencil of the `deriv`-th derivative at index position
    /// `pos` (fractional allowed) with formal accuracy order `acc`.
    ///
    /// Nodes use the symmetric window when it fits; shifted or fractional
    /// windows take `deriv + acc` points so the order is kept at the ends.
    /// Lines shorter than the window use all their nodes, at lower order.
    ///
    /// # Panics
    /// If the line has no more than `deriv` nodes.
    pub fn new(len: usize, pos: f64, deriv: usize, acc: usize) -> Self {
        let at_node = (pos - pos.round()).abs() < 1e-12;
        let sym = 2 * ((deriv + acc - 1) / 2) + 1;
        let mut size = if at_node { sym } else { deriv + acc };
        let half = (size as f64 - 1.0) / 2.0;
        let mut start = (pos - half).round();
        if at_node && (start < 0.0 || start as usize + size > len) {
            size = sym.max(deriv + acc);
            start = (pos - (size as f64 - 1.0) / 2.0).round();
        }
        assert!(len > deriv, "line of {len} nodes too short for derivative {deriv}");
        let size = size.min(len);
        let start = start.clamp(0.0, (len - size) as f64) as usize;
        let x: Vec<f64> = (0..size).map(|j| (start + j) as f64).collect();
        let weights = fornberg_weights(pos, &x, deriv).swap_remove(deriv);
        Self { start, weights }
    }

    /// Like [`Self::apply`], but components whose magnitude is within the
    /// rounding bound `64 ε Σ|w_j v_j|` are set to exactly zero.
    pub fn apply_flushed<'a>(&self, dim: usize, sample: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        let mut bound = vec![0.0; dim];
        for (j, w) in self.weights.iter().enumerate() {
            for ((o, b), v) in out.iter_mut().zip(bound.iter_mut()).zip(sample(self.start + j)) {
                *o += w * v;
                *b += (w * v).abs();
            }
        }
        for (o, b) in out.iter_mut().zip(bound) {
            if o.abs() <= 64.0 * f64::EPSILON * b {
                *o = 0.0;
            }
        }
        out
    }

    /// Applies the stencil to a vector-valued sequence accessed by position.
    pub fn apply<'a>(&self, dim: usize, sample: impl Fn(usize) -> &'a [f64]) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (j, w) in self.weights.iter().enumerate() {
            for (o, v) in out.iter_mut().zip(sample(self.start + j)) {
                *o += w * v;
            }
        }
        out
    }
}

/// A lattice line: the nodes along `axis` with the other index fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Line {
    pub axis: Axis,
    pub fixed: usize,
    pub nx: usize,
    pub ny: usize,
}

impl Line {
    pub fn len(&self) -> usize {
        match self.axis {
            Axis::X => self.nx,
            Axis::Y => self.ny,
        }
    }

    /// Flat node index of position `t` on the line.
    pub fn node(&self, t: usize) -> usize {
        match self.axis {
            Axis::X => self.fixed * self.nx + t,
            Axis::Y => t * self.nx + self.fixed,
        }
    }

    /// Evaluates a stencil on a flat field with `dim` components per node.
    pub fn eval(&self, values: &[f64], dim: usize, stencil: &LineStencil) -> Vec<f64> {
        stencil.apply(dim, |t| {
            let k = self.node(t);
            &values[k * dim..(k + 1) * dim]
        })
    }

    /// `deriv`-th derivative (or value, for `deriv = 0`) at fractional
    /// position `pos`, with physical spacing `h`.
    pub fn sample(
        &self,
        values: &[f64],
        dim: usize,
        pos: f64,
        deriv: usize,
        acc: usize,
        h: f64,
    ) -> Vec<f64> {
        let st = LineStencil::new(self.len(), pos, deriv, acc);
        let scale = h.powi(-(deriv as i32));
        self.eval(values, dim, &st).into_iter().map(|v| v * scale).collect()
    }
}

/// Nodewise partial derivative of a flat field along `axis`. Results below
/// the rounding level of the stencil are flushed to zero.
#[allow(clippy::too_many_arguments)]
pub fn partial(
    values: &[f64],
    dim: usize,
    nx: usize,
    ny: usize,
    h: f64,
    axis: Axis,
    deriv: usize,
    acc: usize,
) -> Vec<f64> {
    let (len, lines) = match axis {
        Axis::X => (nx, ny),
        Axis::Y => (ny, nx),
    };
    let stencils: Vec<LineStencil> = (0..len)
        .map(|t| LineStencil::new(len, t as f64, deriv, acc))
        .collect();
    let scale = h.powi(-(deriv as i32));
    let mut out = vec![0.0; values.len()];
    for fixed in 0..lines {
        let line = Line { axis, fixed, nx, ny };
        for (t, st) in stencils.iter().enumerate() {
            let k = line.node(t);
            let v = st.apply_flushed(dim, |p| {
                let q = line.node(p);
                &values[q * dim..(q + 1) * dim]
            });
            for (o, x) in out[k * dim..(k + 1) * dim].iter_mut().zip(v) {
                *o = x * scale;
            }
        }
    }
    out
}

/// Integral of the interpolant of a line field from position `from` to
/// `from + step` (`step = ±1`), by three-point Gauss–Legendre quadrature on
/// the `acc`-point Lagrange interpolant.
pub fn line_integral(
    values: &[f64],
    dim: usize,
    line: &Line,
    from: usize,
    step: isize,
    acc: usize,
    h: f64,
) -> Vec<f64> {
    const NODES: [f64; 3] = [0.112_701_665_379_258_3, 0.5, 0.887_298_334_620_741_7];
    const WEIGHTS: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    let mut out = vec![0.0; dim];
    for (s, w) in NODES.iter().zip(WEIGHTS) {
        let pos = from as f64 + s * step as f64;
        let v = line.sample(values, dim, pos, 0, acc, 1.0);
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    }
    let signed_h = h * step as f64;
    out.into_iter().map(|v| v * signed_h).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_second_order_weights() {
        let w = fornberg_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn boundary_second_order_one_sided() {
        let st = LineStencil::new(10, 0.0, 1, 2);
        assert_eq!(st.start, 0);
        let expected = [-1.5, 2.0, -0.5];
        for (a, b) in st.weights.iter().zip(expected) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn stencils_reproduce_polynomials() {
        // derivatives of degree-acc polynomials are exact at every position
        let p = |x: f64| 1.0 - 2.0 * x + 0.5 * x.powi(2) - 0.1 * x.powi(3) + 0.02 * x.powi(4);
        let dp = |x: f64| -2.0 + x - 0.3 * x.powi(2) + 0.08 * x.powi(3);
        let vals: Vec<f64> = (0..9).map(|i| p(i as f64)).collect();
        for pos in [0.0, 0.5, 3.0, 4.3, 7.9, 8.0] {
            let st = LineStencil::new(9, pos, 1, 4);
            let d: f64 = st
                .weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * vals[st.start + j])
                .sum();
            assert!((d - dp(pos)).abs() < 1e-10, "pos {pos}: {d} vs {}", dp(pos));
        }
    }

    #[test]
    fn line_integral_is_exact_on_quartics() {
        let p = |x: f64| x.powi(4) - x;
        let ip = |x: f64| x.powi(5) / 5.0 - x * x / 2.0;
        let h = 0.1;
        let vals: Vec<f64> = (0..7).map(|i| p(i as f64 * h)).collect();
        let line = Line { axis: Axis::X, fixed: 0, nx: 7, ny: 1 };
        let fwd = line_integral(&vals, 1, &line, 2, 1, 5, h)[0];
        assert!((fwd - (ip(0.3) - ip(0.2))).abs() < 1e-15);
        let back = line_integral(&vals, 1, &line, 6, -1, 5, h)[0];
        assert!((back - (ip(0.5) - ip(0.6))).abs() < 1e-15);
    }
}
