//! Grid serialization: a JSON header describing the lattice plus a CSV node
//! table `x, y, v_1..v_n` stored next to it, and per-λ CSV dumps of
//! extended frames for debugging.
//!
//! Floats are written in Rust's shortest round-trip form, so a grid written
//! and read back is bitwise identical and repeated writes are byte
//! identical.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clifford::CliffordError;
use crate::loopgroup::ExtendedFrameField;
use crate::surface::{SurfaceError, SurfaceGrid};

const FORMAT: &str = "isothermic-grid";
const VERSION: u32 = 1;
/// Allowed drift of the stored `x, y` columns from the lattice coordinates,
/// relative to the spacing.
const COORD_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed header: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed node table: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid grid file: {0}")]
    Format(String),
    #[error(transparent)]
    Surface(#[from] SurfaceError),
    #[error(transparent)]
    Clifford(#[from] CliffordError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// JSON header of a serialized grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub format: String,
    pub version: u32,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub origin: [f64; 2],
    pub dim: usize,
    pub base: [usize; 2],
    /// Node table path, relative to the header's directory.
    pub nodes: String,
    /// Indices of masked nodes, row-major with `x` fastest.
    #[serde(default)]
    pub masked: Vec<usize>,
}

impl GridHeader {
    pub fn of(grid: &SurfaceGrid, nodes: impl Into<String>) -> Self {
        let masked = (0..grid.node_count()).filter(|k| grid.is_masked(*k)).collect();
        let (i, j) = grid.base_index();
        Self {
            format: FORMAT.into(),
            version: VERSION,
            nx: grid.nx(),
            ny: grid.ny(),
            hx: grid.hx(),
            hy: grid.hy(),
            origin: [grid.origin().0, grid.origin().1],
            dim: grid.dim(),
            base: [i, j],
            nodes: nodes.into(),
            masked,
        }
    }

    fn check(&self) -> Result<(), IoError> {
        if self.format != FORMAT {
            return Err(IoError::Format(format!("unknown format {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(IoError::Format(format!("unsupported version {}", self.version)));
        }
        if let Some(k) = self.masked.iter().find(|k| **k >= self.nx * self.ny) {
            return Err(IoError::Format(format!("masked node {k} outside the grid")));
        }
        Ok(())
    }
}

/// Writes the node table `x, y, v_1..v_n` of `grid` as CSV.
pub fn write_node_table<W: Write>(grid: &SurfaceGrid, out: W) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["x".to_string(), "y".to_string()];
    header.extend((1..=grid.dim()).map(|c| format!("v_{c}")));
    w.write_record(&header)?;
    for k in 0..grid.node_count() {
        let (i, j) = grid.ij(k);
        let (x, y) = grid.coords(i, j);
        let row = [x, y].into_iter().chain(grid.node(k).iter().copied());
        w.write_record(row.map(|v| v.to_string()))?;
    }
    w.flush().map_err(io_err(Path::new("<node table>")))?;
    Ok(())
}

/// Reads a node table written by [`write_node_table`] against its header.
pub fn read_node_table<R: Read>(header: &GridHeader, input: R) -> Result<SurfaceGrid, IoError> {
    header.check()?;
    let mut r = csv::Reader::from_reader(input);
    let columns = r.headers()?.len();
    if columns != header.dim + 2 {
        return Err(IoError::Format(format!(
            "node table has {columns} columns, expected {}",
            header.dim + 2
        )));
    }
    let mut coords = Vec::with_capacity(header.nx * header.ny);
    let mut values = Vec::with_capacity(header.nx * header.ny * header.dim);
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| IoError::Format(format!("row {}: {e}", coords.len() + 1)))?;
        coords.push((row[0], row[1]));
        values.extend_from_slice(&row[2..]);
    }
    let grid = SurfaceGrid::from_parts(
        header.nx,
        header.ny,
        header.hx,
        header.hy,
        (header.origin[0], header.origin[1]),
        header.dim,
        (header.base[0], header.base[1]),
        values,
    )?;
    let tol = COORD_TOL * header.hx.max(header.hy);
    for (k, (x, y)) in coords.iter().enumerate() {
        let (i, j) = grid.ij(k);
        let (ex, ey) = grid.coords(i, j);
        if (x - ex).abs() > tol || (y - ey).abs() > tol {
            return Err(IoError::Format(format!(
                "row {} at ({x}, {y}) does not match lattice node ({ex}, {ey})",
                k + 1
            )));
        }
    }
    let mask = (!header.masked.is_empty()).then(|| {
        let mut m = vec![false; grid.node_count()];
        header.masked.iter().for_each(|k| m[*k] = true);
        m
    });
    Ok(grid.with_mask(mask))
}

/// Writes `grid` as a JSON header at `path` and a CSV node table beside it
/// (same stem, extension `csv`).
pub fn write_grid(grid: &SurfaceGrid, path: &Path) -> Result<(), IoError> {
    let table = path.with_extension("csv");
    let name = table
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| IoError::Format(format!("bad grid path {}", path.display())))?;
    let header = GridHeader::of(grid, name);
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &header)?;
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))?;
    let nodes = File::create(&table).map_err(io_err(&table))?;
    write_node_table(grid, BufWriter::new(nodes))
}

/// Reads a grid written by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<SurfaceGrid, IoError> {
    let file = File::open(path).map_err(io_err(path))?;
    let header: GridHeader = serde_json::from_reader(BufReader::new(file))?;
    header.check()?;
    let table = path.parent().unwrap_or(Path::new(".")).join(&header.nodes);
    let nodes = File::open(&table).map_err(io_err(&table))?;
    read_node_table(&header, BufReader::new(nodes))
}

/// Dumps every λ-sample of `field` as `frame_<k>.csv` in `dir`: one row per
/// unmasked node with `i, j` and the real and imaginary parts of the vector
/// representation, row-major. `frames.csv` lists `k, re λ, im λ`.
pub fn write_frame_samples(field: &ExtendedFrameField, dir: &Path) -> Result<Vec<PathBuf>, IoError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let index_path = dir.join("frames.csv");
    let mut index = csv::Writer::from_path(&index_path)?;
    index.write_record(["k", "lambda_re", "lambda_im"])?;
    let mut written = vec![index_path];
    let lattice = field.lattice();
    for (s_idx, sample) in field.samples().iter().enumerate() {
        index.write_record([s_idx.to_string(), sample.lambda.re.to_string(), sample.lambda.im.to_string()])?;
        let path = dir.join(format!("frame_{s_idx}.csv"));
        let mut w = csv::Writer::from_path(&path)?;
        let m = field.n() + 2;
        let mut header = vec!["i".to_string(), "j".to_string()];
        for r in 0..m {
            for c in 0..m {
                header.push(format!("m{r}_{c}_re"));
                header.push(format!("m{r}_{c}_im"));
            }
        }
        w.write_record(&header)?;
        for (k, frame) in sample.frames.iter().enumerate().filter(|(k, _)| !field.mask()[*k]) {
            let (i, j) = lattice.ij(k);
            let rep = frame.vector_representation()?;
            let mut row = vec![i.to_string(), j.to_string()];
            for r in 0..m {
                for c in 0..m {
                    row.push(rep[(r, c)].re.to_string());
                    row.push(rep[(r, c)].im.to_string());
                }
            }
            w.write_record(&row)?;
        }
        w.flush().map_err(io_err(&path))?;
        written.push(path);
    }
    index.flush().map_err(io_err(&written[0]))?;
    Ok(written)
}
