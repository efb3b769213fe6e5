//! Run configuration: a single versioned JSON document with one
//! experiment per invocation. Unknown fields are rejected so typos in
//! experiment definitions fail loudly instead of being ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use balayage_core::{
    assemble_with, mask_from_predicate, DiagRule, DiscreteMeasure64, DiscreteSpace64,
    EnergyForm64, KernelFamily, KernelSpec64, RegionMask, SolveMethod, SolveOptions64,
};

use crate::AppError;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub space: Option<SpaceConfig>,
    #[serde(default)]
    pub kernel: Option<KernelFamily<f64>>,
    #[serde(default)]
    pub diag_rule: Option<DiagRule<f64>>,
    #[serde(default)]
    pub measures: BTreeMap<String, MeasureConfig>,
    #[serde(default)]
    pub masks: BTreeMap<String, MaskConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    Grid {
        #[serde(rename = "box")]
        bounds: Vec<[f64; 2]>,
        resolution: Resolution,
    },
    Sphere {
        center: Vec<f64>,
        radius: f64,
        count: usize,
    },
    Points {
        points: Vec<Vec<f64>>,
        cell_weights: Vec<f64>,
    },
    File(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum Resolution {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureConfig {
    /// Raw weights; negative entries are legal only for signed sweeps.
    Weights(Vec<f64>),
    PointMass { index: usize, mass: f64 },
    Uniform {
        mask: String,
        #[serde(default = "default_mass")]
        total_mass: f64,
    },
    File(PathBuf),
}

fn default_mass() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskConfig {
    All,
    Indices(Vec<usize>),
    #[serde(rename = "box")]
    BoxRegion(Vec<[f64; 2]>),
    Ball { center: Vec<f64>, radius: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: Option<usize>,
    pub method: SolveMethod,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tolerance: 1e-10,
            max_iterations: None,
            method: SolveMethod::ActiveSet,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentConfig {
    Sweep {
        measure: String,
        mask: String,
        #[serde(default)]
        signed: bool,
        #[serde(default)]
        outer: bool,
    },
    Capacity {
        mask: String,
    },
    Exhaust {
        measure: String,
        mask: String,
        #[serde(default)]
        stages: Option<usize>,
        #[serde(default)]
        masks: Option<Vec<String>>,
    },
    Verify {
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default = "default_min_points")]
        min_points: usize,
        #[serde(default = "default_max_points")]
        max_points: usize,
        #[serde(default = "default_seed")]
        seed: u64,
    },
    Oracle(OracleConfig),
}

fn default_trials() -> usize {
    100
}
fn default_min_points() -> usize {
    2
}
fn default_max_points() -> usize {
    12
}
fn default_seed() -> u64 {
    42
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum OracleConfig {
    SphereMass {
        radius: f64,
        source_distance: f64,
        counts: Vec<usize>,
    },
    Brute { measure: String, mask: String },
}

impl RunConfig {
    /// Parses and validates the version field; serde errors carry the
    /// offending field path.
    pub fn from_str(text: &str) -> Result<Self, AppError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de)
            .map_err(|e| AppError::config(format!("config: {e}")))?;
        if config.version != CONFIG_VERSION {
            return Err(AppError::config(format!(
                "config version {} is not supported (expected {CONFIG_VERSION})",
                config.version
            )));
        }
        Ok(config)
    }
}

/// The configured space with its assembled energy form and resolved
/// measures and masks.
pub struct Workspace {
    pub space: DiscreteSpace64,
    pub form: EnergyForm64,
    pub measures: BTreeMap<String, Vec<f64>>,
    pub masks: BTreeMap<String, RegionMask>,
    pub opts: SolveOptions64,
}

impl Workspace {
    pub fn build(config: &RunConfig, config_dir: &Path) -> Result<Workspace, AppError> {
        let space = build_space(config, config_dir)?;
        let family = config
            .kernel
            .clone()
            .ok_or_else(|| AppError::config("experiment needs a kernel, none configured"))?;
        let spec = KernelSpec64::new(family, space.dim())?;
        let diag = config.diag_rule.clone().unwrap_or_default();
        let form = assemble_with(&spec, &space, diag)?;

        let mut masks = BTreeMap::new();
        for (name, def) in &config.masks {
            masks.insert(name.clone(), build_mask(def, &space)?);
        }
        let mut measures = BTreeMap::new();
        for (name, def) in &config.measures {
            measures.insert(name.clone(), build_measure(def, &space, &masks, config_dir)?);
        }

        let opts = SolveOptions64 {
            tolerance: config.solver.tolerance,
            max_iterations: config.solver.max_iterations,
            method: config.solver.method,
        };
        Ok(Workspace {
            space,
            form,
            measures,
            masks,
            opts,
        })
    }

    pub fn mask(&self, name: &str) -> Result<&RegionMask, AppError> {
        self.masks
            .get(name)
            .ok_or_else(|| AppError::config(format!("mask '{name}' is not defined")))
    }

    pub fn raw_measure(&self, name: &str) -> Result<&[f64], AppError> {
        self.measures
            .get(name)
            .map(|w| w.as_slice())
            .ok_or_else(|| AppError::config(format!("measure '{name}' is not defined")))
    }

    /// Resolves a named measure as a nonnegative measure.
    pub fn positive_measure(&self, name: &str) -> Result<DiscreteMeasure64, AppError> {
        let raw = self.raw_measure(name)?;
        if raw.iter().any(|&w| w < 0.0) {
            return Err(AppError::config(format!(
                "measure '{name}' has negative weights; use a signed sweep"
            )));
        }
        Ok(DiscreteMeasure64::new(&self.space, raw.to_vec())?)
    }
}

fn build_space(config: &RunConfig, config_dir: &Path) -> Result<DiscreteSpace64, AppError> {
    let def = config
        .space
        .as_ref()
        .ok_or_else(|| AppError::config("experiment needs a space, none configured"))?;
    match def {
        SpaceConfig::Grid { bounds, resolution } => {
            let b: Vec<(f64, f64)> = bounds.iter().map(|&[lo, hi]| (lo, hi)).collect();
            let res = match resolution {
                Resolution::Uniform(r) => vec![*r; bounds.len()],
                Resolution::PerAxis(v) => v.clone(),
            };
            Ok(balayage_core::build_grid(&b, &res)?)
        }
        SpaceConfig::Sphere {
            center,
            radius,
            count,
        } => Ok(balayage_core::build_sphere(center, *radius, *count)?),
        SpaceConfig::Points {
            points,
            cell_weights,
        } => Ok(DiscreteSpace64::new(points.clone(), cell_weights.clone())?),
        SpaceConfig::File(path) => {
            let resolved = config_dir.join(path);
            let text = std::fs::read_to_string(&resolved).map_err(|e| {
                AppError::config(format!("cannot read space file {}: {e}", resolved.display()))
            })?;
            Ok(DiscreteSpace64::from_json(&text)?)
        }
    }
}

fn build_mask(def: &MaskConfig, space: &DiscreteSpace64) -> Result<RegionMask, AppError> {
    match def {
        MaskConfig::All => Ok(RegionMask::full(space)),
        MaskConfig::Indices(indices) => {
            Ok(RegionMask::from_indices(space, indices.clone())?)
        }
        MaskConfig::BoxRegion(bounds) => {
            if bounds.len() != space.dim() {
                return Err(AppError::config(format!(
                    "box mask has {} axes, space has {}",
                    bounds.len(),
                    space.dim()
                )));
            }
            Ok(mask_from_predicate(space, |p| {
                p.iter()
                    .zip(bounds)
                    .all(|(&c, &[lo, hi])| c >= lo && c <= hi)
            }))
        }
        MaskConfig::Ball { center, radius } => {
            if center.len() != space.dim() {
                return Err(AppError::config(format!(
                    "ball mask center has {} axes, space has {}",
                    center.len(),
                    space.dim()
                )));
            }
            Ok(mask_from_predicate(space, |p| {
                let d2: f64 = p
                    .iter()
                    .zip(center)
                    .map(|(&c, &m)| (c - m) * (c - m))
                    .sum();
                d2.sqrt() <= *radius
            }))
        }
    }
}

fn build_measure(
    def: &MeasureConfig,
    space: &DiscreteSpace64,
    masks: &BTreeMap<String, RegionMask>,
    config_dir: &Path,
) -> Result<Vec<f64>, AppError> {
    match def {
        MeasureConfig::Weights(w) => {
            if w.len() != space.len() {
                return Err(AppError::config(format!(
                    "measure has {} weights, space has {} points",
                    w.len(),
                    space.len()
                )));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(AppError::config("measure has non-finite weights"));
            }
            Ok(w.clone())
        }
        MeasureConfig::PointMass { index, mass } => {
            Ok(DiscreteMeasure64::point_mass(space, *index, *mass)?
                .weights()
                .to_vec())
        }
        MeasureConfig::Uniform { mask, total_mass } => {
            let m = masks
                .get(mask)
                .ok_or_else(|| AppError::config(format!("measure refers to unknown mask '{mask}'")))?;
            if m.is_empty() {
                return Err(AppError::config(format!(
                    "uniform measure on empty mask '{mask}'"
                )));
            }
            let per = total_mass / m.len() as f64;
            let mut w = vec![0.0; space.len()];
            for &i in m.indices() {
                w[i] = per;
            }
            Ok(w)
        }
        MeasureConfig::File(path) => {
            let resolved = config_dir.join(path);
            let text = std::fs::read_to_string(&resolved).map_err(|e| {
                AppError::config(format!(
                    "cannot read measure file {}: {e}",
                    resolved.display()
                ))
            })?;
            Ok(DiscreteMeasure64::from_json(space, &text)?
                .weights()
                .to_vec())
        }
    }
}
