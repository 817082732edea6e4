//! Run configuration: a TOML file whose keys mirror [`RunConfig`], with
//! command-line flags applied on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{EvolveConfig, Scheme};
use crate::numgrid::{ModelParams, RadialGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub mu: f64,
    pub eps: f64,
    pub k: f64,
    pub s: f64,
    pub lambda: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::default();
        Self { mu: p.mu, eps: p.eps, k: p.k, s: p.s, lambda: p.lambda }
    }
}

impl ModelSection {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.mu, self.eps, self.k, self.s, self.lambda)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    /// Half width `L` of the periodic box; `16 / sqrt(mu)` when absent.
    pub half_width: Option<f64>,
    pub n: usize,
    pub radial_cells: usize,
    /// Radial extent; the `theta = 0.9` decay radius when absent.
    pub radial_r_max: Option<f64>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self { half_width: None, n: 128, radial_cells: 4000, radial_r_max: None }
    }
}

impl GridSection {
    pub fn half_width(&self, p: &ModelParams) -> f64 {
        self.half_width.unwrap_or_else(|| p.default_box_half_width())
    }

    pub fn radial_grid(&self, p: &ModelParams) -> Result<RadialGrid> {
        let r = self.radial_r_max.unwrap_or_else(|| RadialGrid::decay_radius(p.mu, 0.9));
        RadialGrid::new(r, self.radial_cells)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProfileSection {
    /// Sandwich exponent.
    pub alpha: f64,
    /// Gaussian weight exponent of the uniform bounds.
    pub theta: f64,
    /// Also compare against the small-`eps` limit profile.
    pub sandwich: bool,
}

impl Default for ProfileSection {
    fn default() -> Self {
        Self { alpha: 0.95, theta: 0.9, sandwich: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    pub modes: Vec<usize>,
    pub cells: usize,
    /// Mode domain radius; `10 / sqrt(mu)` when absent.
    pub r_max: Option<f64>,
    /// Also solve at half resolution and report the eigenvalue shift.
    pub refine: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { modes: vec![0, 1, 2, 3], cells: 1500, r_max: None, refine: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Initial `X` norm of the seeded data.
    pub amplitude: f64,
    pub t_end: f64,
    /// Largest step the guard allows when absent.
    pub dt: Option<f64>,
    pub scheme: Scheme,
    pub record_every: Option<usize>,
    pub dealias: bool,
    pub linear_only: bool,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            t_end: 10.0,
            dt: None,
            scheme: Scheme::ImexEuler,
            record_every: None,
            dealias: true,
            linear_only: false,
        }
    }
}

impl EvolveSection {
    pub fn config(&self, p: &ModelParams) -> EvolveConfig {
        let dt = self.dt.unwrap_or_else(|| EvolveConfig::max_dt(p));
        EvolveConfig {
            dt,
            t_end: self.t_end,
            scheme: self.scheme,
            dealias: self.dealias,
            linear_only: self.linear_only,
            g_only: false,
            record_every: self.record_every.unwrap_or(((0.05 / dt).round() as usize).max(1)),
            override_dt_guard: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct CheckSection {
    /// Criterion ids such as `"6"` or `"5b"`; empty runs all of them.
    pub criteria: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub mu: Vec<f64>,
    pub eps: Vec<f64>,
    pub k: Vec<f64>,
    pub s: Vec<f64>,
    pub modes: Vec<usize>,
    pub mode_cells: usize,
    /// Run the small-data nonlinear evolution at each point.
    pub evolve: bool,
    /// Largest grid spacing of the evolution; `n` is the next power of two.
    pub evolve_max_dx: f64,
    pub evolve_t_end: f64,
}

impl SweepSection {
    /// Grid size of the sweep evolution on a box of half width `l`.
    pub fn evolve_n(&self, l: f64) -> usize {
        ((2.0 * l / self.evolve_max_dx).ceil() as usize).next_power_of_two().max(32)
    }
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            mu: vec![0.5, 1.0, 2.0],
            eps: vec![0.005, 0.01, 0.02],
            k: vec![4.0],
            s: vec![0.5],
            modes: vec![0, 1, 2],
            mode_cells: 400,
            evolve: true,
            evolve_max_dx: 0.375,
            evolve_t_end: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub model: ModelSection,
    pub grid: GridSection,
    pub profile: ProfileSection,
    pub spectrum: SpectrumSection,
    pub evolve: EvolveSection,
    pub check: CheckSection,
    pub sweep: SweepSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            seed: 1,
            model: ModelSection::default(),
            grid: GridSection::default(),
            profile: ProfileSection::default(),
            spectrum: SpectrumSection::default(),
            evolve: EvolveSection::default(),
            check: CheckSection::default(),
            sweep: SweepSection::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("config schema error: {}", e.message())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("config cannot be written as TOML: {e}")))
    }

    /// Rejects values the TOML form cannot hold, so every run can be replayed
    /// from its manifest.
    pub fn validate(&self) -> Result<()> {
        if self.seed > i64::MAX as u64 {
            return Err(Error::Config(format!("seed {} exceeds {}", self.seed, i64::MAX)));
        }
        self.params().map(|_| ())
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run config serializes");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn params(&self) -> Result<ModelParams> {
        self.model.params()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_defaults() {
        let c = RunConfig::from_toml("seed = 7\n[model]\nmu = 2.0\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.model.mu, 2.0);
        assert_eq!(c.model.eps, 0.02);
        assert_eq!(RunConfig::from_toml(&c.to_toml().unwrap()).unwrap(), c);
        let huge = RunConfig { seed: u64::MAX, ..c.clone() };
        assert!(huge.to_toml().is_err() && huge.validate().is_err());
        assert_eq!(c.hash(), c.clone().hash());
        assert_ne!(c.hash(), RunConfig::default().hash());
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(RunConfig::from_toml("[model]\nmu = \"one\"\n"), Err(Error::Config(_))));
        assert!(matches!(RunConfig::from_toml("bogus = 1\n"), Err(Error::Config(_))));
        let c = RunConfig::from_toml("[model]\nk = 2.0\n").unwrap();
        assert!(c.params().is_err());
    }

    #[test]
    fn evolve_defaults_follow_guard() {
        let c = RunConfig::default();
        let e = c.evolve.config(&c.params().unwrap());
        assert_eq!(e.dt, 2e-3);
        assert_eq!(e.record_every, 25);
        assert!(e.validate(&c.params().unwrap()).is_ok());
    }
}
