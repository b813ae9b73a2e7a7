use super::SurfaceError;

/// Lattice direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

/// Rectangular parameter domain with sample counts and base node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
    /// Base node `o`; defaults to the node nearest the domain centre.
    pub base: Option<(usize, usize)>,
}

impl GridSpec {
    pub fn new(nx: usize, ny: usize, x_range: (f64, f64), y_range: (f64, f64)) -> Self {
        Self {
            nx,
            ny,
            x_range,
            y_range,
            base: None,
        }
    }

    pub fn with_base(mut self, i: usize, j: usize) -> Self {
        self.base = Some((i, j));
        self
    }

    pub fn hx(&self) -> f64 {
        (self.x_range.1 - self.x_range.0) / (self.nx as f64 - 1.0)
    }

    pub fn hy(&self) -> f64 {
        (self.y_range.1 - self.y_range.0) / (self.ny as f64 - 1.0)
    }

    /// Same domain with spacing halved in both directions.
    pub fn refined(&self) -> Self {
        let base = self.base.map(|(i, j)| (2 * i, 2 * j));
        Self {
            nx: 2 * self.nx - 1,
            ny: 2 * self.ny - 1,
            base,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<(), SurfaceError> {
        if self.nx < 3 || self.ny < 3 {
            return Err(SurfaceError::DegenerateGrid(format!(
                "need at least 3×3 samples, got {}×{}",
                self.nx, self.ny
            )));
        }
        if !(self.x_range.1 > self.x_range.0 && self.y_range.1 > self.y_range.0) {
            return Err(SurfaceError::DegenerateGrid("empty parameter box".into()));
        }
        if let Some((i, j)) = self.base {
            if i >= self.nx || j >= self.ny {
                return Err(SurfaceError::DegenerateGrid("base node outside grid".into()));
            }
        }
        Ok(())
    }

    fn base_or_centre(&self) -> (usize, usize) {
        self.base.unwrap_or((self.nx / 2, self.ny / 2))
    }
}

/// A map from a rectangular curvature-line lattice into `R^n`, one vector per
/// node, stored row-major with `x` varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceGrid {
    nx: usize,
    ny: usize,
    hx: f64,
    hy: f64,
    origin: (f64, f64),
    dim: usize,
    base: (usize, usize),
    values: Vec<f64>,
    mask: Option<Vec<bool>>,
}

impl SurfaceGrid {
    /// Builds a grid from raw parts, validating shapes.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        nx: usize,
        ny: usize,
        hx: f64,
        hy: f64,
        origin: (f64, f64),
        dim: usize,
        base: (usize, usize),
        values: Vec<f64>,
    ) -> Result<Self, SurfaceError> {
        if nx < 3 || ny < 3 {
            return Err(SurfaceError::DegenerateGrid(format!(
                "need at least 3×3 samples, got {nx}×{ny}"
            )));
        }
        if !(hx > 0.0 && hy > 0.0) {
            return Err(SurfaceError::DegenerateGrid("spacings must be positive".into()));
        }
        if base.0 >= nx || base.1 >= ny {
            return Err(SurfaceError::DegenerateGrid("base node outside grid".into()));
        }
        if dim == 0 || values.len() != nx * ny * dim {
            return Err(SurfaceError::DegenerateGrid(format!(
                "expected {} values, got {}",
                nx * ny * dim,
                values.len()
            )));
        }
        Ok(Self {
            nx,
            ny,
            hx,
            hy,
            origin,
            dim,
            base,
            values,
            mask: None,
        })
    }

    /// Samples `f(x, y)` on the lattice described by `spec`.
    pub fn sample(
        spec: &GridSpec,
        dim: usize,
        f: impl Fn(f64, f64) -> Vec<f64>,
    ) -> Result<Self, SurfaceError> {
        spec.validate()?;
        let (hx, hy) = (spec.hx(), spec.hy());
        let mut values = Vec::with_capacity(spec.nx * spec.ny * dim);
        for j in 0..spec.ny {
            for i in 0..spec.nx {
                let v = f(spec.x_range.0 + i as f64 * hx, spec.y_range.0 + j as f64 * hy);
                if v.len() != dim {
                    return Err(SurfaceError::InvalidParams(format!(
                        "sample has {} components, expected {dim}",
                        v.len()
                    )));
                }
                values.extend(v);
            }
        }
        Self::from_parts(
            spec.nx,
            spec.ny,
            hx,
            hy,
            (spec.x_range.0, spec.y_range.0),
            dim,
            spec.base_or_centre(),
            values,
        )
    }

    /// Grid with the same lattice and new per-node values.
    pub fn with_values(&self, dim: usize, values: Vec<f64>) -> Result<Self, SurfaceError> {
        let mut g = Self::from_parts(
            self.nx, self.ny, self.hx, self.hy, self.origin, dim, self.base, values,
        )?;
        g.mask = self.mask.clone();
        Ok(g)
    }

    /// Nodewise map preserving the lattice.
    pub fn map(&self, dim: usize, f: impl Fn(usize, &[f64]) -> Vec<f64>) -> Self {
        let mut values = Vec::with_capacity(self.node_count() * dim);
        for k in 0..self.node_count() {
            let v = f(k, self.node(k));
            debug_assert_eq!(v.len(), dim);
            values.extend(v);
        }
        let mut g = self.clone();
        g.dim = dim;
        g.values = values;
        g
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        self.hx
    }

    pub fn hy(&self) -> f64 {
        self.hy
    }

    pub fn spacing(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.hx,
            Axis::Y => self.hy,
        }
    }

    pub fn origin(&self) -> (f64, f64) {
        self.origin
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base_index(&self) -> (usize, usize) {
        self.base
    }

    pub fn base_node(&self) -> usize {
        self.index(self.base.0, self.base.1)
    }

    pub fn node_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    /// Parameter coordinates of node `(i, j)`.
    pub fn coords(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.origin.0 + i as f64 * self.hx,
            self.origin.1 + j as f64 * self.hy,
        )
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn at(&self, i: usize, j: usize) -> &[f64] {
        self.node(self.index(i, j))
    }

    pub fn node_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn is_interior(&self, k: usize) -> bool {
        let (i, j) = self.ij(k);
        i > 0 && j > 0 && i + 1 < self.nx && j + 1 < self.ny
    }

    /// Optional per-node mask; `true` marks an excluded node.
    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    pub fn is_masked(&self, k: usize) -> bool {
        self.mask.as_ref().is_some_and(|m| m[k])
    }

    pub fn set_mask(&mut self, mask: Option<Vec<bool>>) {
        if let Some(m) = &mask {
            assert_eq!(m.len(), self.node_count(), "mask matches node count");
        }
        self.mask = mask;
    }

    pub fn with_mask(mut self, mask: Option<Vec<bool>>) -> Self {
        self.set_mask(mask);
        self
    }

    /// Union of this grid's mask with another mask.
    pub fn combined_mask(&self, other: Option<&[bool]>) -> Option<Vec<bool>> {
        match (self.mask.as_deref(), other) {
            (None, None) => None,
            (Some(a), None) | (None, Some(a)) => Some(a.to_vec()),
            (Some(a), Some(b)) => Some(a.iter().zip(b).map(|(x, y)| *x || *y).collect()),
        }
    }

    pub fn masked_fraction(&self) -> f64 {
        match &self.mask {
            None => 0.0,
            Some(m) => m.iter().filter(|x| **x).count() as f64 / m.len() as f64,
        }
    }

    /// Same lattice (counts, spacings, origin, base).
    pub fn congruent(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.base == other.base
            && (self.hx - other.hx).abs() <= 1e-14 * self.hx
            && (self.hy - other.hy).abs() <= 1e-14 * self.hy
            && (self.origin.0 - other.origin.0).abs() <= 1e-12
            && (self.origin.1 - other.origin.1).abs() <= 1e-12
    }

    pub(crate) fn check_congruent(&self, other: &Self) -> Result<(), SurfaceError> {
        if self.congruent(other) {
            Ok(())
        } else {
            Err(SurfaceError::GridMismatch)
        }
    }

    /// Largest nodewise max-norm difference over nodes unmasked in both.
    pub fn max_difference(&self, other: &Self) -> Result<f64, SurfaceError> {
        self.check_congruent(other)?;
        if self.dim != other.dim {
            return Err(SurfaceError::GridMismatch);
        }
        let mut worst = 0.0f64;
        for k in 0..self.node_count() {
            if self.is_masked(k) || other.is_masked(k) {
                continue;
            }
            for (a, b) in self.node(k).iter().zip(other.node(k)) {
                worst = worst.max((a - b).abs());
            }
        }
        Ok(worst)
    }

    /// Adds a constant vector to every node.
    pub fn translated(&self, t: &[f64]) -> Self {
        self.map(self.dim, |_, v| v.iter().zip(t).map(|(a, b)| a + b).collect())
    }

    /// Sum `self + other` nodewise.
    pub fn plus(&self, other: &Self) -> Result<Self, SurfaceError> {
        self.check_congruent(other)?;
        Ok(self.map(self.dim, |k, v| {
            v.iter().zip(other.node(k)).map(|(a, b)| a + b).collect()
        }))
    }

    /// Difference `self − other` nodewise.
    pub fn minus(&self, other: &Self) -> Result<Self, SurfaceError> {
        self.check_congruent(other)?;
        Ok(self.map(self.dim, |k, v| {
            v.iter().zip(other.node(k)).map(|(a, b)| a - b).collect()
        }))
    }

    /// Zero-pads or truncates every vector to `dim` components.
    pub fn with_dim(&self, dim: usize) -> Self {
        self.map(dim, |_, v| {
            let mut out = v.to_vec();
            out.resize(dim, 0.0);
            out
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_layout() {
        let spec = GridSpec::new(3, 4, (0.0, 1.0), (-1.0, 2.0));
        let g = SurfaceGrid::sample(&spec, 2, |x, y| vec![x, y]).unwrap();
        assert_eq!(g.node_count(), 12);
        assert_eq!(g.at(2, 3), &[1.0, 2.0]);
        assert_eq!(g.base_index(), (1, 2));
        assert_eq!(g.ij(g.index(1, 3)), (1, 3));
        assert!(g.is_interior(g.index(1, 1)));
        assert!(!g.is_interior(g.index(0, 1)));
    }

    #[test]
    fn rejects_small_grids() {
        let spec = GridSpec::new(2, 4, (0.0, 1.0), (0.0, 1.0));
        assert!(matches!(
            SurfaceGrid::sample(&spec, 1, |_, _| vec![0.0]),
            Err(SurfaceError::DegenerateGrid(_))
        ));
    }

    #[test]
    fn refinement_keeps_base_point() {
        let spec = GridSpec::new(5, 5, (-1.0, 1.0), (-1.0, 1.0)).with_base(2, 2);
        let fine = spec.refined();
        assert_eq!(fine.nx, 9);
        assert_eq!(fine.base, Some((4, 4)));
        assert!((fine.hx() - spec.hx() / 2.0).abs() < 1e-15);
    }
}
