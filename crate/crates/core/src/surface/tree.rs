use super::grid::Axis;
use super::stencil::Line;

/// One step of the spanning tree, from an already visited node to a new one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TreeEdge {
    pub from: usize,
    pub to: usize,
    pub line: Line,
    /// Position of `from` on `line`.
    pub pos: usize,
    /// `+1` or `−1` along the line.
    pub step: isize,
}

/// Row-then-column spanning tree rooted at the base node: first the base
/// row in both directions, then every column outward from that row.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanningTree {
    root: usize,
    edges: Vec<TreeEdge>,
}

impl SpanningTree {
    pub fn new(nx: usize, ny: usize, base: (usize, usize)) -> Self {
        let (i0, j0) = base;
        let mut edges = Vec::with_capacity(nx * ny - 1);
        let row = Line { axis: Axis::X, fixed: j0, nx, ny };
        for i in i0..nx - 1 {
            edges.push(TreeEdge { from: row.node(i), to: row.node(i + 1), line: row, pos: i, step: 1 });
        }
        for i in (1..=i0).rev() {
            edges.push(TreeEdge { from: row.node(i), to: row.node(i - 1), line: row, pos: i, step: -1 });
        }
        for i in 0..nx {
            let col = Line { axis: Axis::Y, fixed: i, nx, ny };
            for j in j0..ny - 1 {
                edges.push(TreeEdge { from: col.node(j), to: col.node(j + 1), line: col, pos: j, step: 1 });
            }
            for j in (1..=j0).rev() {
                edges.push(TreeEdge { from: col.node(j), to: col.node(j - 1), line: col, pos: j, step: -1 });
            }
        }
        Self { root: j0 * nx + i0, edges }
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Edges in visiting order; every `from` is the root or an earlier `to`.
    pub fn edges(&self) -> &[TreeEdge] {
        &self.edges
    }

    /// Marks every descendant of a masked node as masked.
    pub fn propagate_mask(&self, mask: &mut [bool]) {
        for e in &self.edges {
            if mask[e.from] {
                mask[e.to] = true;
            }
        }
    }
}
