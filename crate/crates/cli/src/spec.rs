//! Job descriptions: a seed on a grid, a transform pipeline, residual checks
//! and output targets, read from one JSON file.

use std::collections::BTreeMap;
use std::path::Path;

use isothermic::surface::{GridSpec, Seed};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::mesh::MeshFormat;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    #[serde(default)]
    pub name: Option<String>,
    pub seed: SeedSpec,
    pub grid: GridDomain,
    #[serde(default)]
    pub transforms: Vec<TransformStep>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
    #[serde(default)]
    pub outputs: Outputs,
    /// Overrides of the default tolerance per check name.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    #[serde(flatten)]
    pub seed: Seed,
    #[serde(default = "default_dim")]
    pub dim: usize,
}

fn default_dim() -> usize {
    3
}

/// Parameter box and resolution; `base` defaults to the centre node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDomain {
    pub nx: usize,
    pub ny: usize,
    pub x: [f64; 2],
    pub y: [f64; 2],
    #[serde(default)]
    pub base: Option<[usize; 2]>,
}

impl GridDomain {
    pub fn grid_spec(&self) -> GridSpec {
        let spec = GridSpec::new(self.nx, self.ny, (self.x[0], self.x[1]), (self.y[0], self.y[1]));
        match self.base {
            Some([i, j]) => spec.with_base(i, j),
            None => spec,
        }
    }
}

/// Initial value of a Riccati solution at the base node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialValue {
    /// The point `v` itself.
    Point(Vec<f64>),
    /// `v = f(o) + offset`.
    Offset { offset: Vec<f64> },
    /// `v = f(o) + s N(o) + w` with `w` the part of `tangent` orthogonal to
    /// the seed normal and `s` chosen so the H-surface invariant vanishes.
    Admissible { admissible: Admissible },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Admissible {
    pub h: f64,
    #[serde(default)]
    pub tangent: Option<Vec<f64>>,
}

/// One stage of the pipeline; each acts on the current Christoffel pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum TransformStep {
    /// Swap `f` and `f^c`.
    Christoffel,
    Darboux {
        r: f64,
        v: InitialValue,
    },
    TTransform {
        r: f64,
    },
    /// Dressing by the simple factor `p_{α,L}` through its light-cone
    /// solution; `α = [re, im]`.
    Dress {
        alpha: [f64; 2],
        v: InitialValue,
    },
    /// Fourth surface of the Bianchi quadrilateral over two Darboux
    /// transforms.
    Bianchi {
        r1: f64,
        v1: InitialValue,
        r2: f64,
        v2: InitialValue,
    },
}

impl TransformStep {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Christoffel => "christoffel",
            Self::Darboux { .. } => "darboux",
            Self::TTransform { .. } => "t_transform",
            Self::Dress { .. } => "dress",
            Self::Bianchi { .. } => "bianchi",
        }
    }
}

/// Residual checks on the final stage. Checks tied to an operation refer to
/// the last transform.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// `df ∧ df^c` over interior nodes.
    Isothermic,
    /// `(df, df^c)^{2,0} = q dz²`.
    Polarisation,
    /// Last step a `t_transform` of the plane seed, against its closed form.
    TClosedForm,
    /// Last step a `darboux` of the seed; conserved quantity with mean
    /// curvature `h`.
    HSurfaceInvariant {
        #[serde(default = "unit")]
        h: f64,
    },
    /// Last step a `darboux`; transforming back recovers the previous surface.
    DarbouxRoundtrip,
    /// Last step a `darboux`, `dress` or `bianchi`; the pair envelopes a
    /// sphere congruence.
    Envelope,
    /// Last step a `bianchi`; quadrilateral cross-ratio against `r2/r1`.
    CrossRatio,
    /// Extended frame of the final pair is λ-linear in its Maurer–Cartan form.
    Flatness,
}

fn unit() -> f64 {
    1.0
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Isothermic => "isothermic",
            Self::Polarisation => "polarisation",
            Self::TClosedForm => "t_closed_form",
            Self::HSurfaceInvariant { .. } => "h_surface_invariant",
            Self::DarbouxRoundtrip => "darboux_roundtrip",
            Self::Envelope => "envelope",
            Self::CrossRatio => "cross_ratio",
            Self::Flatness => "flatness",
        }
    }

    pub fn default_tolerance(&self) -> f64 {
        match self {
            Self::Isothermic => 1e-3,
            Self::Polarisation => 1e-4,
            Self::TClosedForm => 1e-5,
            Self::HSurfaceInvariant { .. } => 1e-7,
            Self::DarbouxRoundtrip | Self::Envelope => 1e-6,
            Self::CrossRatio | Self::Flatness => 1e-8,
        }
    }

    pub const NAMES: [&'static str; 8] = [
        "isothermic",
        "polarisation",
        "t_closed_form",
        "h_surface_invariant",
        "darboux_roundtrip",
        "envelope",
        "cross_ratio",
        "flatness",
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outputs {
    /// Final surface as a grid header; the node table goes beside it.
    #[serde(default = "default_grid")]
    pub grid: Option<String>,
    #[serde(default)]
    pub mesh: Option<MeshOutput>,
    #[serde(default = "default_report")]
    pub report: String,
}

impl Default for Outputs {
    fn default() -> Self {
        Self {
            grid: default_grid(),
            mesh: None,
            report: default_report(),
        }
    }
}

fn default_grid() -> Option<String> {
    Some("surface.json".into())
}

fn default_report() -> String {
    "report.json".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshOutput {
    pub path: String,
    pub format: MeshFormat,
    #[serde(default = "default_axes")]
    pub axes: [usize; 3],
}

fn default_axes() -> [usize; 3] {
    [0, 1, 2]
}

impl JobSpec {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let spec: Self = serde_json::from_str(text).map_err(|e| CliError::SpecInvalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn tolerance(&self, check: &CheckSpec) -> f64 {
        self.tolerances
            .get(check.name())
            .copied()
            .unwrap_or_else(|| check.default_tolerance())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: String| Err(CliError::SpecInvalid(m));
        if self.grid.nx < 3 || self.grid.ny < 3 {
            return invalid(format!(
                "resolution must be at least 3×3, got {}×{}",
                self.grid.nx, self.grid.ny
            ));
        }
        self.grid
            .grid_spec()
            .validate()
            .map_err(|e| CliError::SpecInvalid(e.to_string()))?;
        for (name, tol) in &self.tolerances {
            if !CheckSpec::NAMES.contains(&name.as_str()) {
                return invalid(format!("tolerance for unknown check {name:?}"));
            }
            if !(*tol > 0.0 && tol.is_finite()) {
                return invalid(format!("tolerance for {name} must be positive, got {tol}"));
            }
        }
        if let Some(mesh) = &self.outputs.mesh {
            if let Some(a) = mesh.axes.iter().find(|a| **a >= self.seed.dim) {
                return invalid(format!("mesh axis {a} outside dimension {}", self.seed.dim));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const CYLINDER: &str = r#"{
        "seed": {"kind": "cylinder"},
        "grid": {"nx": 11, "ny": 11, "x": [0, 1], "y": [-0.5, 0.5]},
        "transforms": [{"op": "darboux", "r": 1, "v": {"admissible": {"h": 1}}}],
        "checks": [{"check": "h_surface_invariant"}, {"check": "envelope"}],
        "tolerances": {"envelope": 1e-5}
    }"#;

    #[test]
    fn parses_a_job() {
        let spec = JobSpec::from_json(CYLINDER).unwrap();
        assert_eq!(spec.seed.seed, Seed::Cylinder);
        assert_eq!(spec.seed.dim, 3);
        assert_eq!(spec.transforms.len(), 1);
        assert_eq!(spec.tolerance(&spec.checks[0]), 1e-7);
        assert_eq!(spec.tolerance(&spec.checks[1]), 1e-5);
        assert_eq!(spec.outputs, Outputs::default());
    }

    #[test]
    fn initial_values_take_three_forms() {
        let parse = |s: &str| serde_json::from_str::<InitialValue>(s).unwrap();
        assert_eq!(parse("[1, 2, 3]"), InitialValue::Point(vec![1.0, 2.0, 3.0]));
        assert_eq!(parse(r#"{"offset": [0, 1]}"#), InitialValue::Offset { offset: vec![0.0, 1.0] });
        assert!(matches!(parse(r#"{"admissible": {"h": 2}}"#), InitialValue::Admissible { .. }));
    }

    #[test]
    fn rejects_malformed_jobs() {
        let bad = [
            CYLINDER.replace("\"darboux\"", "\"unknown\""),
            CYLINDER.replace("\"envelope\"}", "\"nonsense\"}"),
            CYLINDER.replace("\"nx\": 11", "\"nx\": 2"),
            CYLINDER.replace("1e-5", "-1"),
            CYLINDER.replace("\"envelope\": 1e-5", "\"other\": 1e-5"),
            CYLINDER.replace("\"tolerances\"", "\"extra\": 1, \"tolerances\""),
        ];
        for text in bad {
            assert!(matches!(JobSpec::from_json(&text), Err(CliError::SpecInvalid(_))), "{text}");
        }
    }
}
