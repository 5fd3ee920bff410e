//! JSON problem description.

use std::path::{Path, PathBuf};

use fracmax_core::maxwell::{snap_box_length, FracParams, IncidentSpec, PermittivityModel};
use fracmax_core::solver::{Preconditioner, ScatterProblem, SolveControls};
use fracmax_core::spectral::Grid3;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermittivityKind {
    GaussianBump,
}

/// Omitted geometry defaults to a bump at the box center with width `L/10`
/// and cutoff radius `L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PermittivityConfig {
    pub kind: PermittivityKind,
    pub amplitude: f64,
    #[serde(default)]
    pub center: Option<[f64; 3]>,
    #[serde(default)]
    pub width: Option<f64>,
    #[serde(default)]
    pub cutoff_radius: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncidentConfig {
    pub p: [f64; 3],
    pub d: [f64; 3],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecondConfig {
    None,
    ShiftedFraclap,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    #[serde(default = "default_restart")]
    pub restart: usize,
    #[serde(default = "default_precond")]
    pub precond: PrecondConfig,
}

fn default_tol() -> f64 {
    SolveControls::default().tol
}

fn default_max_iter() -> usize {
    SolveControls::default().max_iter
}

fn default_restart() -> usize {
    SolveControls::default().restart
}

fn default_precond() -> PrecondConfig {
    PrecondConfig::ShiftedFraclap
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: default_tol(),
            max_iter: default_max_iter(),
            restart: default_restart(),
            precond: default_precond(),
        }
    }
}

fn default_delta() -> f64 {
    1.0
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub s: f64,
    pub k: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub grid: GridConfig,
    pub permittivity: PermittivityConfig,
    pub incident: IncidentConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Snap `d` to a coordinate axis and `L` so that `k^{1/s}` is a lattice frequency.
    #[serde(default = "default_true")]
    pub snap: bool,
    #[serde(default)]
    pub seed: u64,
    /// Also solve a manufactured problem and report the recovery error.
    #[serde(default)]
    pub manufactured: bool,
    #[serde(default)]
    pub check_uniqueness: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// What snapping changed.
#[derive(Clone, Debug, PartialEq)]
pub struct SnapRecord {
    pub l_requested: f64,
    pub l_used: f64,
    pub d_requested: [f64; 3],
    pub d_used: [f64; 3],
    /// Lattice index of `κ` along the snapped axis.
    pub mode: i64,
}

#[derive(Clone, Debug)]
pub struct Resolved {
    pub problem: ScatterProblem,
    pub snap: Option<SnapRecord>,
}

impl ScatterConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn controls(&self) -> SolveControls {
        SolveControls {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
            restart: self.solver.restart,
            precond: match self.solver.precond {
                PrecondConfig::None => Preconditioner::None,
                PrecondConfig::ShiftedFraclap => Preconditioner::ShiftedFracLap,
            },
        }
    }

    /// Validates every field and applies frequency snapping.
    pub fn resolve(&self) -> CliResult<Resolved> {
        let fp = FracParams::new(self.s, self.k, self.delta)?;
        let controls = self.controls();
        controls.validate()?;
        let (l, d, snap) = if self.snap {
            let d_used = snap_direction(self.incident.d)?;
            let (l_used, mode) = snap_box_length(self.k, self.s, self.grid.l);
            let rec = SnapRecord {
                l_requested: self.grid.l,
                l_used,
                d_requested: self.incident.d,
                d_used,
                mode,
            };
            (l_used, d_used, Some(rec))
        } else {
            (self.grid.l, self.incident.d, None)
        };
        let grid = Grid3::new(self.grid.n, l)?;
        let incident = IncidentSpec::new(self.incident.p, d)?;
        let pm = &self.permittivity;
        let base = PermittivityModel::centered_bump(&grid, pm.amplitude);
        let permittivity = PermittivityModel {
            amplitude: pm.amplitude,
            center: pm.center.unwrap_or(base.center),
            width: pm.width.unwrap_or(base.width),
            cutoff_radius: pm.cutoff_radius.unwrap_or(base.cutoff_radius),
        };
        permittivity.validate()?;
        Ok(Resolved {
            problem: ScatterProblem {
                grid,
                fp,
                permittivity,
                incident,
                controls,
                seed: self.seed,
                check_uniqueness: self.check_uniqueness,
            },
            snap,
        })
    }
}

/// Nearest signed coordinate axis.
fn snap_direction(d: [f64; 3]) -> CliResult<[f64; 3]> {
    if d.iter().all(|c| *c == 0.0) || d.iter().any(|c| !c.is_finite()) {
        return Err(CliError::Config("incident.d must be a nonzero finite vector".into()));
    }
    let axis = (0..3)
        .max_by(|&a, &b| d[a].abs().total_cmp(&d[b].abs()))
        .expect("three axes");
    let mut out = [0.0; 3];
    out[axis] = d[axis].signum();
    Ok(out)
}
