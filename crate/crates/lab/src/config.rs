//! Experiment configuration, read from a single TOML file.
//!
//! ```toml
//! [group]
//! preset = "heisenberg1"          # or m, n, triplets = [[i, j, l, γ]] (1-based), gauge_c
//!
//! [grid]
//! lo = [-1.0, -1.0, -1.0]
//! hi = [1.0, 1.0, 1.0]
//! intervals = 32                  # or one entry per axis
//!
//! [instance]
//! name = "halfspace"
//!
//! [solver]
//! method = "no_sign"              # or "classical"
//!
//! [output]
//! dir = "out"
//!
//! [[diagnostics]]
//! kind = "growth"
//! x0 = [0.0, 0.0, 0.0]
//! radii = [0.5, 0.25]
//! sigma = 0.75
//! ```

use std::path::{Path, PathBuf};

use carnot_core::krylov::KrylovMethod;
use carnot_core::{GridSpec, GroupSpec, KrylovSettings, ObstacleSettings, Seed};
use serde::Deserialize;

use crate::LabError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub group: GroupConfig,
    pub grid: GridConfig,
    pub instance: InstanceConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub diagnostics: Vec<Diagnostic>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub preset: Option<String>,
    pub m: Option<usize>,
    pub n: Option<usize>,
    /// `(i, j, l, γ_ij^l)` with 1-based indices; antisymmetric partners are implied.
    pub triplets: Option<Vec<(usize, usize, usize, f64)>>,
    pub gauge_c: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Intervals {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub intervals: Intervals,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    /// One of the manufactured instances.
    pub name: String,
    pub zero_tol: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    NoSign,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedChoice {
    AllActive,
    Classical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KrylovChoice {
    #[default]
    Bicgstab,
    Gmres,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    /// Defaults to the seed under which the instance's reference is selected.
    pub seed: Option<SeedChoice>,
    pub tol: f64,
    pub max_iters: usize,
    pub max_outer: usize,
    pub krylov: KrylovChoice,
    pub restart: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let k = KrylovSettings::default();
        SolverConfig {
            method: Method::NoSign,
            seed: None,
            tol: k.tol,
            max_iters: k.max_iters,
            max_outer: ObstacleSettings::default().max_iters,
            krylov: KrylovChoice::Bicgstab,
            restart: k.restart,
        }
    }
}

impl SolverConfig {
    pub fn krylov_settings(&self) -> KrylovSettings {
        KrylovSettings {
            tol: self.tol,
            max_iters: self.max_iters,
            restart: self.restart,
            method: match self.krylov {
                KrylovChoice::Bicgstab => KrylovMethod::BiCgStab,
                KrylovChoice::Gmres => KrylovMethod::Gmres,
            },
            ..KrylovSettings::default()
        }
    }

    pub fn obstacle_settings(&self, default_seed: Seed) -> ObstacleSettings {
        let seed = match self.seed {
            None => default_seed,
            Some(SeedChoice::AllActive) => Seed::AllActive,
            Some(SeedChoice::Classical) => Seed::Classical,
        };
        ObstacleSettings { max_iters: self.max_outer, krylov: self.krylov_settings(), seed }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
    /// Also write the solution as a raw binary dump.
    pub binary: bool,
}

/// A diagnostic request. Radii are in group units; every ball radius must
/// be at least eight first-layer grid spacings.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Diagnostic {
    Growth {
        x0: Vec<f64>,
        radii: Vec<f64>,
        #[serde(default = "default_sigma")]
        sigma: f64,
    },
    Decay {
        x0: Vec<f64>,
        /// Explicit dyadic radii; when absent the family starts at `r0`.
        radii: Option<Vec<f64>>,
        r0: Option<f64>,
        zero_tol: Option<f64>,
    },
    Coincidence {
        x0: Vec<f64>,
        r: f64,
        zero_tol: Option<f64>,
    },
    Scaling {
        x0: Vec<f64>,
        r1: f64,
        r2: f64,
    },
    Polynomial {
        x0: Vec<f64>,
        r: f64,
    },
    C11 {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    ThirdDifference {
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default)]
        direction: usize,
    },
    Blowup {
        x0: Vec<f64>,
        r: f64,
        #[serde(default = "default_blowup_sigma")]
        sigma: f64,
        #[serde(default = "default_blowup_intervals")]
        intervals: usize,
    },
}

fn default_sigma() -> f64 {
    0.75
}

fn default_blowup_sigma() -> f64 {
    0.5
}

fn default_blowup_intervals() -> usize {
    32
}

impl Diagnostic {
    /// Short name used for file names and summaries.
    pub fn kind(&self) -> &'static str {
        match self {
            Diagnostic::Growth { .. } => "growth",
            Diagnostic::Decay { .. } => "decay",
            Diagnostic::Coincidence { .. } => "coincidence",
            Diagnostic::Scaling { .. } => "scaling",
            Diagnostic::Polynomial { .. } => "polynomial",
            Diagnostic::C11 { .. } => "c11",
            Diagnostic::ThirdDifference { .. } => "third_difference",
            Diagnostic::Blowup { .. } => "blowup",
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn group(&self) -> Result<GroupSpec, LabError> {
        let gc = &self.group;
        let g = match (&gc.preset, gc.m, gc.n, &gc.triplets) {
            (Some(name), None, None, None) => GroupSpec::preset(name)?,
            (None, Some(m), Some(n), Some(trip)) => {
                let mut zero_based = Vec::with_capacity(trip.len());
                for &(i, j, l, v) in trip {
                    if i == 0 || j == 0 || l == 0 {
                        return Err(LabError::Config("structure triplets are 1-based".into()));
                    }
                    zero_based.push((i - 1, j - 1, l - 1, v));
                }
                let c = gc.gauge_c.unwrap_or(carnot_core::group::DEFAULT_GAUGE_C);
                return Ok(GroupSpec::new(m, n, &zero_based, c)?);
            }
            _ => return Err(LabError::Config("group needs either `preset` or all of `m`, `n`, `triplets`".into())),
        };
        match gc.gauge_c {
            Some(c) => Ok(g.with_gauge_c(c)?),
            None => Ok(g),
        }
    }

    pub fn grid(&self, n: usize) -> Result<GridSpec, LabError> {
        let gc = &self.grid;
        if gc.lo.len() != n || gc.hi.len() != n {
            return Err(LabError::Config(format!("grid bounds need {n} entries")));
        }
        let intervals = match &gc.intervals {
            Intervals::Uniform(k) => vec![*k; n],
            Intervals::PerAxis(v) if v.len() == n => v.clone(),
            Intervals::PerAxis(v) => return Err(LabError::Config(format!("grid intervals need {n} entries, got {}", v.len()))),
        };
        let bounds: Vec<(f64, f64)> = gc.lo.iter().copied().zip(gc.hi.iter().copied()).collect();
        Ok(GridSpec::with_intervals(&bounds, &intervals)?)
    }
}
