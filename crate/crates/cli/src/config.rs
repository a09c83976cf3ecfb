//! Per-command run configurations, read from JSON. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use levi_core::diagnostics::DiagnosticTolerances;
use levi_core::dynamics::OrbitSettings;
use levi_core::levi::{PotentialSpec, ProfileSpec};
use levi_core::{FlowConfig, FourierSupport, MarkerCurve, Vec2};
use serde::Deserialize;

use crate::CliError;

pub fn load<C: for<'de> Deserialize<'de> + Default>(path: Option<&Path>) -> Result<C, CliError> {
    let Some(path) = path else {
        return Ok(C::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Initial curve of a flow run.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveInput {
    Circle {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
        markers: usize,
    },
    /// Closed convex curve of a support function, sampled at uniform normal angles.
    Support {
        z0: f64,
        #[serde(default)]
        modes: Vec<[f64; 2]>,
        markers: usize,
    },
    /// `y = x² / 2` on `|x| ≤ half_width`.
    Parabola { half_width: f64, markers: usize },
    /// CSV with header `x,y`.
    Points { path: PathBuf, closed: bool },
}

impl CurveInput {
    pub fn support(&self) -> Option<FourierSupport<f64>> {
        match self {
            CurveInput::Support { z0, modes, .. } => Some(FourierSupport {
                z0: *z0,
                modes: modes.clone(),
            }),
            CurveInput::Circle { center, radius, .. } => Some(FourierSupport::disk(
                Vec2::new(center[0], center[1]),
                *radius,
            )),
            _ => None,
        }
    }

    pub fn curve(&self) -> Result<MarkerCurve<f64>, CliError> {
        let curve = match self {
            CurveInput::Circle {
                center,
                radius,
                markers,
            } => MarkerCurve::circle(Vec2::new(center[0], center[1]), *radius, *markers),
            CurveInput::Support { markers, .. } => {
                let h = self.support().expect("support input");
                h.validate().and_then(|_| h.curve(*markers))
            }
            CurveInput::Parabola {
                half_width,
                markers,
            } => MarkerCurve::parabola(*half_width, *markers),
            CurveInput::Points { path, closed } => MarkerCurve::new(read_points(path)?, *closed),
        };
        curve.map_err(CliError::from)
    }
}

/// Reads a CSV with header `x,y`.
pub fn read_points(path: &Path) -> Result<Vec<Vec2<f64>>, CliError> {
    #[derive(Deserialize)]
    struct Row {
        x: f64,
        y: f64,
    }
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    reader
        .deserialize::<Row>()
        .map(|r| {
            r.map(|r| Vec2::new(r.x, r.y))
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
        })
        .collect()
}

fn default_t_end() -> f64 {
    2f64.ln()
}

fn default_window() -> f64 {
    50.0
}

fn default_bound_tol() -> f64 {
    0.05
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRun {
    pub input: CurveInput,
    #[serde(default = "default_t_end")]
    pub t_end: f64,
    #[serde(default)]
    pub settings: FlowConfig<f64>,
    /// For support inputs: Hausdorff distance of each snapshot to the spectral solution.
    #[serde(default)]
    pub compare_spectral: bool,
    /// Fail when the closed-curve functionals or the open-curve bound are violated.
    #[serde(default)]
    pub check_diagnostics: bool,
    /// Arclength half-width for open curves.
    #[serde(default = "default_window")]
    pub window: f64,
    #[serde(default = "default_bound_tol")]
    pub bound_tol: f64,
}

impl Default for FlowRun {
    fn default() -> Self {
        FlowRun {
            input: CurveInput::Circle {
                center: [0.0, 0.0],
                radius: 1.0,
                markers: 256,
            },
            t_end: default_t_end(),
            settings: FlowConfig::default(),
            compare_spectral: false,
            check_diagnostics: false,
            window: default_window(),
            bound_tol: default_bound_tol(),
        }
    }
}

/// Sampling box for field output. Missing fields are fitted to the generators.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: Option<[f64; 2]>,
    pub hi: Option<[f64; 2]>,
    #[serde(default = "default_grid_n")]
    pub nx: usize,
    #[serde(default = "default_grid_n")]
    pub ny: usize,
}

fn default_grid_n() -> usize {
    64
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            lo: None,
            hi: None,
            nx: default_grid_n(),
            ny: default_grid_n(),
        }
    }
}

fn default_levels() -> Vec<f64> {
    vec![0.25, 0.5, 1.0, 1.5]
}

fn square() -> Vec<[f64; 2]> {
    vec![[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]]
}

/// Where a potential comes from: inline generators, a generator CSV, or a potential JSON.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSource {
    pub generators: Option<Vec<[f64; 2]>>,
    pub generators_file: Option<PathBuf>,
    /// A `potential.json` written by `construct`.
    pub spec_file: Option<PathBuf>,
    pub profile: Option<ProfileSpec>,
    #[serde(rename = "J")]
    pub order: Option<usize>,
    pub tau_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub fejer: Option<bool>,
}

impl Default for PotentialSource {
    fn default() -> Self {
        PotentialSource {
            generators: Some(square()),
            generators_file: None,
            spec_file: None,
            profile: None,
            order: None,
            tau_tol: None,
            t_max: None,
            fejer: None,
        }
    }
}

impl PotentialSource {
    pub fn spec(&self) -> Result<PotentialSpec, CliError> {
        let sources = [
            self.generators.is_some(),
            self.generators_file.is_some(),
            self.spec_file.is_some(),
        ];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(CliError::Input(
                "give exactly one of generators, generators_file, spec_file".into(),
            ));
        }
        let mut spec: PotentialSpec = if let Some(path) = &self.spec_file {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        } else {
            let generators = match (&self.generators, &self.generators_file) {
                (Some(g), _) => g.clone(),
                (_, Some(path)) => read_points(path)?.iter().map(|p| [p.x, p.y]).collect(),
                _ => unreachable!(),
            };
            serde_json::from_value(serde_json::json!({ "generators": generators }))
                .expect("minimal spec")
        };
        if let Some(p) = &self.profile {
            spec.profile = p.clone();
        }
        if let Some(j) = self.order {
            spec.order = j;
            spec.samples = spec.samples.max(4 * j);
        }
        if let Some(t) = self.tau_tol {
            spec.tau_tol = t;
        }
        if let Some(t) = self.t_max {
            spec.t_max = t;
        }
        if let Some(f) = self.fejer {
            spec.fejer = f;
        }
        Ok(spec)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConstructRun {
    pub potential: PotentialSource,
    pub grid: GridSpec,
    pub levels: Option<Vec<f64>>,
}

impl ConstructRun {
    pub fn levels(&self) -> Vec<f64> {
        self.levels.clone().unwrap_or_else(default_levels)
    }
}

/// Random exterior seeds: uniform in a box, kept when `τ` falls in `tau_range`.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomSeeds {
    pub count: usize,
    #[serde(default = "default_box")]
    pub lo: [f64; 2],
    #[serde(default = "default_box_hi")]
    pub hi: [f64; 2],
    #[serde(default = "default_tau_range")]
    pub tau_range: [f64; 2],
}

fn default_box() -> [f64; 2] {
    [-6.0, -6.0]
}
fn default_box_hi() -> [f64; 2] {
    [6.0, 6.0]
}
fn default_tau_range() -> [f64; 2] {
    [0.25, 1.5]
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrbitRun {
    pub potential: PotentialSource,
    pub seeds: Vec<[f64; 2]>,
    pub random: Option<RandomSeeds>,
    pub settings: OrbitSettings<f64>,
    /// Trajectory CSVs are written for at most this many orbits.
    pub max_trajectory_files: usize,
}

impl Default for OrbitRun {
    fn default() -> Self {
        OrbitRun {
            potential: PotentialSource {
                generators: Some(vec![[0.0, 0.0]]),
                ..PotentialSource::default()
            },
            seeds: vec![[1.0, 0.0]],
            random: None,
            settings: OrbitSettings::default(),
            max_trajectory_files: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiagnoseRun {
    /// Snapshot CSV written by `flow`.
    pub trajectory: Option<PathBuf>,
    pub closed: bool,
    /// Apply `e^{-t}` before computing functionals; off for already rescaled input.
    pub rescale: bool,
    pub window: f64,
    pub bound_tol: f64,
    pub c0_tol: f64,
    pub b_dot_tol: f64,
    pub b_second_tol: f64,
}

impl Default for DiagnoseRun {
    fn default() -> Self {
        let tol = DiagnosticTolerances::<f64>::default();
        DiagnoseRun {
            trajectory: None,
            closed: true,
            rescale: true,
            window: default_window(),
            bound_tol: default_bound_tol(),
            c0_tol: tol.c0,
            b_dot_tol: tol.b_dot,
            b_second_tol: tol.b_second,
        }
    }
}

impl DiagnoseRun {
    pub fn tolerances(&self) -> DiagnosticTolerances<f64> {
        DiagnosticTolerances {
            c0: self.c0_tol,
            b_dot: self.b_dot_tol,
            b_second: self.b_second_tol,
            ..DiagnosticTolerances::default()
        }
    }
}
