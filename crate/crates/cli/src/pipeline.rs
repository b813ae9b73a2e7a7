//! Executes a job: seed, transforms in order, then checks on the final stage.

use std::collections::BTreeMap;
use std::path::Path;

use isothermic::io::write_grid;
use isothermic::loopgroup::{default_lambdas, dress_pair_direct, extended_frame, make_simple_factor};
use isothermic::surface::{
    envelope_residual, isothermic_residual, seed_normal, seed_surface, ChristoffelPair, GridSpec, NodeResidual,
    Seed, SurfaceGrid,
};
use isothermic::transform::{
    bianchi_fourth_pair, darboux, h_surface_invariant, quad_cross_ratio_deviation, t_transform, DarbouxResult,
};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::mesh::export_mesh;
use crate::spec::{CheckSpec, InitialValue, JobSpec, TransformStep};

/// Outcome of one check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub max_residual: f64,
    pub masked_fraction: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub op: String,
    pub masked_fraction: f64,
}

/// First hard error; the pipeline stops there.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepError {
    pub stage: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: Option<String>,
    pub steps: Vec<StepReport>,
    /// Keyed by check name; repeated checks get `#2`, `#3`, ….
    pub checks: BTreeMap<String, CheckReport>,
    pub error: Option<StepError>,
    pub pass: bool,
}

impl Report {
    /// 0 when every check passes, 1 on a failed check, 2 on a hard error.
    pub fn exit_code(&self) -> u8 {
        match (&self.error, self.pass) {
            (Some(_), _) => 2,
            (None, true) => 0,
            (None, false) => 1,
        }
    }
}

enum Detail {
    Seed,
    Christoffel,
    Darboux(Box<DarbouxResult>),
    TTransform { r: f64 },
    Dress,
    Bianchi { f1: SurfaceGrid, f2: SurfaceGrid, r1: f64, r2: f64 },
}

struct Stage {
    op: &'static str,
    pair: ChristoffelPair,
    detail: Detail,
}

/// Pipeline state after the transforms ran.
pub struct Pipeline {
    seed: Seed,
    domain: GridSpec,
    dim: usize,
    stages: Vec<Stage>,
}

impl Pipeline {
    pub fn seed(spec: &JobSpec) -> Result<Self, CliError> {
        let domain = spec.grid.grid_spec();
        let pair = seed_surface(spec.seed.seed, &domain, spec.seed.dim)?;
        Ok(Self {
            seed: spec.seed.seed,
            domain,
            dim: spec.seed.dim,
            stages: vec![Stage {
                op: "seed",
                pair,
                detail: Detail::Seed,
            }],
        })
    }

    pub fn current(&self) -> &ChristoffelPair {
        &self.current_stage().pair
    }

    fn current_stage(&self) -> &Stage {
        self.stages.last().expect("the seed stage is always present")
    }

    /// Stage before the last one, the input of the last transform.
    fn previous(&self) -> Option<&Stage> {
        self.stages.len().checked_sub(2).map(|i| &self.stages[i])
    }

    fn initial_value(&self, v: &InitialValue) -> Result<Vec<f64>, CliError> {
        let pair = self.current();
        let f_o = pair.f.node(pair.f.base_node());
        let point = match v {
            InitialValue::Point(p) => p.clone(),
            InitialValue::Offset { offset } => {
                check_len(offset, self.dim)?;
                f_o.iter().zip(offset).map(|(a, b)| a + b).collect()
            }
            InitialValue::Admissible { admissible } => {
                return Err(CliError::SpecInvalid(format!(
                    "admissible initial value (h = {}) needs the darboux parameter",
                    admissible.h
                )))
            }
        };
        check_len(&point, self.dim)?;
        Ok(point)
    }

    /// `v = f(o) + s N(o) + w` with `r H (s² + |w|²) − 2 r s + 1 = 0`.
    fn admissible_value(&self, r: f64, h: f64, tangent: Option<&[f64]>) -> Result<Vec<f64>, CliError> {
        if self.stages.len() != 1 {
            return Err(CliError::SpecInvalid(
                "admissible initial values need the seed's normal; use them on the first transform".into(),
            ));
        }
        let normal = seed_normal(self.seed, &self.domain, self.dim)
            .ok_or_else(|| CliError::SpecInvalid("this seed has no built-in normal".into()))?;
        let o = self.current().f.base_node();
        let nrm = normal.node(o);
        let mut w = tangent.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; self.dim]);
        check_len(&w, self.dim)?;
        let along = dot(&w, nrm);
        w.iter_mut().zip(nrm).for_each(|(a, b)| *a -= along * b);
        let ww = dot(&w, &w);
        let s = if h == 0.0 {
            1.0 / (2.0 * r)
        } else {
            let disc = r * r - r * h * (1.0 + r * h * ww);
            if disc < 0.0 {
                return Err(CliError::SpecInvalid(format!(
                    "no admissible initial value for r = {r}, h = {h} with this tangent"
                )));
            }
            (r + disc.sqrt()) / (r * h)
        };
        let f_o = self.current().f.node(o);
        Ok((0..self.dim).map(|c| f_o[c] + s * nrm[c] + w[c]).collect())
    }

    fn riccati_value(&self, r: f64, v: &InitialValue) -> Result<Vec<f64>, CliError> {
        match v {
            InitialValue::Admissible { admissible } => {
                self.admissible_value(r, admissible.h, admissible.tangent.as_deref())
            }
            other => self.initial_value(other),
        }
    }

    pub fn apply(&mut self, step: &TransformStep) -> Result<(), CliError> {
        let pair = self.current().clone();
        let (pair, detail) = match step {
            TransformStep::Christoffel => (pair.swapped(), Detail::Christoffel),
            TransformStep::Darboux { r, v } => {
                let v = self.riccati_value(*r, v)?;
                let d = darboux(&pair, *r, &v)?;
                (d.pair()?, Detail::Darboux(Box::new(d)))
            }
            TransformStep::TTransform { r } => (t_transform(&pair, *r)?.0, Detail::TTransform { r: *r }),
            TransformStep::Dress { alpha, v } => {
                let alpha = Complex64::new(alpha[0], alpha[1]);
                let r = (alpha * alpha).re;
                let v = self.riccati_value(r, v)?;
                let f_o = pair.f.node(pair.f.base_node()).to_vec();
                let p = make_simple_factor(alpha, &v, &f_o)?;
                (dress_pair_direct(&p, &pair)?.pair, Detail::Dress)
            }
            TransformStep::Bianchi { r1, v1, r2, v2 } => {
                let d1 = darboux(&pair, *r1, &self.riccati_value(*r1, v1)?)?;
                let d2 = darboux(&pair, *r2, &self.riccati_value(*r2, v2)?)?;
                let fourth = bianchi_fourth_pair(&pair, &d1, &d2)?;
                let detail = Detail::Bianchi {
                    f1: d1.fhat,
                    f2: d2.fhat,
                    r1: *r1,
                    r2: *r2,
                };
                (fourth, detail)
            }
        };
        self.stages.push(Stage {
            op: step.name(),
            pair,
            detail,
        });
        Ok(())
    }

    fn last_op(&self, wanted: &[&str], check: &str) -> Result<(&Stage, &Stage), CliError> {
        let last = self.current_stage();
        match self.previous() {
            Some(prev) if wanted.contains(&last.op) => Ok((prev, last)),
            _ => Err(CliError::SpecInvalid(format!(
                "check {check} needs the last transform to be one of {wanted:?}, found {}",
                last.op
            ))),
        }
    }

    /// Maximum residual and excluded fraction of one check.
    pub fn evaluate(&self, check: &CheckSpec) -> Result<(f64, f64), CliError> {
        let name = check.name();
        let pair = self.current();
        let residual = match check {
            CheckSpec::Isothermic => isothermic_residual(&pair.f, &pair.fc)?,
            CheckSpec::Polarisation => pair.polarisation_residual(),
            CheckSpec::TClosedForm => {
                let (prev, last) = self.last_op(&["t_transform"], name)?;
                let Detail::TTransform { r } = last.detail else { unreachable!() };
                if self.seed != Seed::Plane || !matches!(prev.detail, Detail::Seed) {
                    return Err(CliError::SpecInvalid(format!("{name} applies to a t_transform of the plane seed")));
                }
                let closed = plane_t_closed_form(&self.domain, self.dim, r)?;
                let diff = pair.f.minus(&closed)?;
                max_norm_residual(&diff)
            }
            CheckSpec::HSurfaceInvariant { h } => {
                let (prev, last) = self.last_op(&["darboux"], name)?;
                let Detail::Darboux(d) = &last.detail else { unreachable!() };
                if !matches!(prev.detail, Detail::Seed) {
                    return Err(CliError::SpecInvalid(format!("{name} applies to a darboux of the seed")));
                }
                let normal = seed_normal(self.seed, &self.domain, self.dim)
                    .ok_or_else(|| CliError::SpecInvalid("this seed has no built-in normal".into()))?;
                h_surface_invariant(&prev.pair, d, &normal, *h)?
            }
            CheckSpec::DarbouxRoundtrip => {
                let (prev, last) = self.last_op(&["darboux"], name)?;
                let Detail::Darboux(d) = &last.detail else { unreachable!() };
                let back_to = prev.pair.f.node(prev.pair.f.base_node()).to_vec();
                let back = darboux(&last.pair, d.r, &back_to)?;
                let mask = last.pair.f.combined_mask(Some(&back.singular_mask));
                let diff = back.fhat.minus(&prev.pair.f)?.with_mask(mask);
                max_norm_residual(&diff)
            }
            CheckSpec::Envelope => {
                let (prev, _) = self.last_op(&["darboux", "dress", "bianchi"], name)?;
                envelope_residual(&prev.pair.f, &pair.f)?
            }
            CheckSpec::CrossRatio => {
                let (prev, last) = self.last_op(&["bianchi"], name)?;
                let Detail::Bianchi { f1, f2, r1, r2 } = &last.detail else { unreachable!() };
                quad_cross_ratio_deviation([&prev.pair.f, f1, &pair.f, f2], r2 / r1, None)?
            }
            CheckSpec::Flatness => {
                let field = extended_frame(pair, &default_lambdas(&[]))?;
                let masked = field.masked_count() as f64 / pair.f.node_count() as f64;
                return Ok((field.flatness_residual()?, masked));
            }
        };
        Ok((residual.max, residual.excluded_fraction()))
    }

    pub fn write_stage_grid(&self, path: &Path) -> Result<(), CliError> {
        Ok(write_grid(&self.current().f, path)?)
    }
}

fn check_len(v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(CliError::SpecInvalid(format!("vector of length {} in dimension {dim}", v.len())));
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean length per unmasked node.
fn max_norm_residual(diff: &SurfaceGrid) -> NodeResidual {
    NodeResidual::evaluate(
        diff.node_count(),
        |k| !diff.is_masked(k),
        |k| dot(diff.node(k), diff.node(k)).sqrt(),
    )
}

/// T-transform of the plane from its extended frame based at the
/// parameter origin, scaled by `1/√r`:
/// `(sin 2sx, sinh 2sy) / (2 s (cos² sx + sinh² sy))`, `s = √r`.
fn plane_t_closed_form(domain: &GridSpec, dim: usize, r: f64) -> Result<SurfaceGrid, CliError> {
    if r <= 0.0 {
        return Err(CliError::SpecInvalid(format!("t_closed_form needs r > 0, got {r}")));
    }
    let (i, j) = domain.base.unwrap_or((domain.nx / 2, domain.ny / 2));
    let (x0, y0) = (
        domain.x_range.0 + i as f64 * domain.hx(),
        domain.y_range.0 + j as f64 * domain.hy(),
    );
    if x0.abs() > 1e-12 || y0.abs() > 1e-12 {
        return Err(CliError::SpecInvalid(
            "t_closed_form needs the base node at the parameter origin".into(),
        ));
    }
    let s = r.sqrt();
    Ok(SurfaceGrid::sample(domain, dim, |x, y| {
        let den = 2.0 * s * ((s * x).cos().powi(2) + (s * y).sinh().powi(2));
        let mut v = vec![0.0; dim];
        v[0] = (2.0 * s * x).sin() / den;
        v[1] = (2.0 * s * y).sinh() / den;
        v
    })?)
}

/// Runs `spec`; artifacts go to `out` when given. Hard errors end the
/// pipeline and are recorded in the report.
pub fn run_job(spec: &JobSpec, out: Option<&Path>, verbose: bool) -> Result<Report, CliError> {
    let mut report = Report {
        name: spec.name.clone(),
        steps: Vec::new(),
        checks: BTreeMap::new(),
        error: None,
        pass: false,
    };
    let fail = |report: &mut Report, stage: String, e: CliError| {
        if verbose {
            eprintln!("{stage}: {e}");
        }
        report.error = Some(StepError {
            stage,
            message: e.to_string(),
        });
    };
    let mut pipeline = match Pipeline::seed(spec) {
        Ok(p) => p,
        Err(e) => {
            fail(&mut report, "seed".into(), e);
            return Ok(report);
        }
    };
    for (i, step) in spec.transforms.iter().enumerate() {
        if verbose {
            eprintln!("step {}: {}", i + 1, step.name());
        }
        if let Err(e) = pipeline.apply(step) {
            fail(&mut report, format!("step {}: {}", i + 1, step.name()), e);
            return Ok(report);
        }
        report.steps.push(StepReport {
            op: step.name().into(),
            masked_fraction: pipeline.current().f.masked_fraction(),
        });
    }
    for check in &spec.checks {
        let (max_residual, masked_fraction) = match pipeline.evaluate(check) {
            Ok(v) => v,
            Err(e) => {
                fail(&mut report, format!("check {}", check.name()), e);
                return Ok(report);
            }
        };
        let tolerance = spec.tolerance(check);
        let entry = CheckReport {
            max_residual,
            masked_fraction,
            tolerance,
            pass: max_residual <= tolerance,
        };
        if verbose {
            eprintln!(
                "check {}: {:e} (tolerance {:e}) {}",
                check.name(),
                max_residual,
                tolerance,
                if entry.pass { "pass" } else { "FAIL" }
            );
        }
        let mut key = check.name().to_string();
        let mut copy = 1;
        while report.checks.contains_key(&key) {
            copy += 1;
            key = format!("{}#{copy}", check.name());
        }
        report.checks.insert(key, entry);
    }
    report.pass = report.checks.values().all(|c| c.pass);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        if let Some(grid) = &spec.outputs.grid {
            pipeline.write_stage_grid(&dir.join(grid))?;
        }
        if let Some(mesh) = &spec.outputs.mesh {
            export_mesh(&pipeline.current().f, &dir.join(&mesh.path), mesh.format, mesh.axes)?;
        }
    }
    Ok(report)
}
