//! Config files. Both kinds are JSON objects; every field except the
//! surface selection has a default, printable with `dcs print-default-config`.

use std::path::{Path, PathBuf};

use dcs_core::dcs::DcsParams;
use dcs_core::noise::{NoiseKind, NoiseSpec};
use dcs_core::surfaces::SurfaceKind;
use dcs_core::sweep::{HyperGrid, SelectMode, SurfaceSource, SweepConfig};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

/// Side of the synthetic surfaces in the default sweep config.
pub const DEFAULT_SWEEP_SIDE: usize = 32;
/// Side of the synthetic surface in the default reconstruct config.
pub const DEFAULT_RECONSTRUCT_SIDE: usize = 64;

/// `dcs sweep` config: one grid search per (surface, noise) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub surfaces: Vec<SurfaceSource>,
    #[serde(default = "default_noises")]
    pub noises: Vec<NoiseSpec>,
    #[serde(default)]
    pub grid: HyperGrid,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_m_ratio")]
    pub m_ratio: f64,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default)]
    pub dcs: DcsParams,
    #[serde(default)]
    pub select_mode: SelectMode,
    #[serde(default)]
    pub fix_sensing: bool,
}

fn default_noises() -> Vec<NoiseSpec> {
    [NoiseKind::Gaussian, NoiseKind::Laplace, NoiseKind::SaltPepper]
        .into_iter()
        .map(NoiseSpec::default_for)
        .collect()
}

fn default_trials() -> usize {
    10
}

fn default_m_ratio() -> f64 {
    0.5
}

fn synthetic(kind: SurfaceKind, side: usize) -> SurfaceSource {
    SurfaceSource::Synthetic {
        synthetic: kind,
        rows: side,
        cols: side,
    }
}

impl Default for SweepFile {
    fn default() -> Self {
        SweepFile {
            surfaces: SurfaceKind::ALL
                .into_iter()
                .map(|k| synthetic(k, DEFAULT_SWEEP_SIDE))
                .collect(),
            noises: default_noises(),
            grid: HyperGrid::default(),
            trials: default_trials(),
            m_ratio: default_m_ratio(),
            base_seed: 0,
            dcs: DcsParams::default(),
            select_mode: SelectMode::default(),
            fix_sensing: false,
        }
    }
}

impl SweepFile {
    pub fn validate(&self) -> Result<()> {
        if self.surfaces.is_empty() {
            return Err(CliError::Config("config field `surfaces` must list at least one surface".into()));
        }
        if self.noises.is_empty() {
            return Err(CliError::Config("config field `noises` must list at least one noise model".into()));
        }
        for noise in &self.noises {
            self.sweep_config(*noise).validate()?;
        }
        Ok(())
    }

    /// Library sweep config for one noise model.
    pub fn sweep_config(&self, noise: NoiseSpec) -> SweepConfig {
        SweepConfig {
            surfaces: self.surfaces.clone(),
            noise,
            grid: self.grid.clone(),
            trials: self.trials,
            m_ratio: self.m_ratio,
            base_seed: self.base_seed,
            dcs: self.dcs,
            select_mode: self.select_mode,
            fix_sensing: self.fix_sensing,
        }
    }
}

/// `dcs reconstruct` config: one surface, one `(λ, δ)`, one noise draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructFile {
    pub surface: SurfaceSource,
    pub lambda: f64,
    pub delta: f64,
    #[serde(default = "default_reconstruct_noise")]
    pub noise: NoiseSpec,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_m_ratio")]
    pub m_ratio: f64,
    /// Solver template; its `lambda` and `delta` are replaced by the fields above.
    #[serde(default)]
    pub dcs: DcsParams,
}

fn default_reconstruct_noise() -> NoiseSpec {
    NoiseSpec::default_for(NoiseKind::Gaussian)
}

impl Default for ReconstructFile {
    fn default() -> Self {
        let dcs = DcsParams::default();
        ReconstructFile {
            surface: synthetic(SurfaceKind::Sphere, DEFAULT_RECONSTRUCT_SIDE),
            lambda: 1e-2,
            delta: dcs.delta,
            noise: default_reconstruct_noise(),
            seed: 0,
            m_ratio: default_m_ratio(),
            dcs,
        }
    }
}

impl ReconstructFile {
    pub fn params(&self) -> DcsParams {
        self.dcs.with_hyper(self.lambda, self.delta)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(CliError::Config(format!("config field `lambda` must be >= 0, got {}", self.lambda)));
        }
        if !(self.m_ratio > 0.0 && self.m_ratio <= 1.0) {
            return Err(CliError::Config(format!(
                "config field `m_ratio` must lie in (0, 1], got {}",
                self.m_ratio
            )));
        }
        self.noise.validate()?;
        self.params().validate()?;
        Ok(())
    }
}

/// A parsed config together with the identity of its source bytes.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: T,
    /// `None` when the built-in default was used.
    pub path: Option<PathBuf>,
    pub hash: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads and parses `path`, or falls back to `T::default()` (hashed over its
/// pretty JSON form) when no path is given.
pub fn load<T>(path: Option<&Path>) -> Result<Loaded<T>>
where
    T: DeserializeOwned + Serialize + Default + WithBaseDir,
{
    let Some(path) = path else {
        let value = T::default();
        let text = to_pretty_json(&value);
        return Ok(Loaded {
            value,
            path: None,
            hash: sha256_hex(text.as_bytes()),
        });
    };
    let bytes = std::fs::read(path).map_err(|source| CliError::ReadInput {
        path: path.to_path_buf(),
        source,
    })?;
    let mut value: T = serde_json::from_slice(&bytes).map_err(|e| {
        CliError::Config(format!(
            "{}: line {}, column {}: {e}",
            path.display(),
            e.line(),
            e.column()
        ))
    })?;
    if let Some(dir) = path.parent() {
        value.resolve_relative_to(dir);
    }
    Ok(Loaded {
        value,
        path: Some(path.to_path_buf()),
        hash: sha256_hex(&bytes),
    })
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("config serializes");
    text.push('\n');
    text
}

/// File surfaces named with relative paths are resolved against the
/// directory of the config file, not the working directory.
pub trait WithBaseDir {
    fn resolve_relative_to(&mut self, dir: &Path);
}

fn resolve(source: &mut SurfaceSource, dir: &Path) {
    if let SurfaceSource::File { file, .. } = source {
        if file.is_relative() {
            *file = dir.join(&*file);
        }
    }
}

impl WithBaseDir for SweepFile {
    fn resolve_relative_to(&mut self, dir: &Path) {
        self.surfaces.iter_mut().for_each(|s| resolve(s, dir));
    }
}

impl WithBaseDir for ReconstructFile {
    fn resolve_relative_to(&mut self, dir: &Path) {
        resolve(&mut self.surface, dir);
    }
}
