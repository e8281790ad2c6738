//! TOML run configuration.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slabww_core::{
    BoundaryKind, CrossSections, Material, Mesh1D, PopulationTarget, ProblemSpec, RunMode, SourceSpec, TimeGrid,
    WindowParams,
};

/// Name accepted in place of a config path.
pub const PRESET_AZURV1: &str = "azurv1_impulse";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("invalid config: {0}")]
    Core(#[from] slabww_core::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mesh: MeshConfig,
    pub material: MaterialConfig,
    pub time: TimeConfig,
    pub source: SourceConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    pub run: RunConfig,
    #[serde(default)]
    pub weight_windows: WindowConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub cells: usize,
}

/// Homogeneous, static cross sections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub sigma_t: f64,
    pub sigma_s: f64,
    pub sigma_f: f64,
    pub nu_f: f64,
}

impl MaterialConfig {
    pub fn cross_sections(&self) -> CrossSections {
        CrossSections { sigma_t: self.sigma_t, sigma_s: self.sigma_s, sigma_f: self.sigma_f, nu_f: self.nu_f }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(default)]
    pub t_start: f64,
    pub t_end: f64,
    pub steps: usize,
    #[serde(default = "one")]
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub position: f64,
    #[serde(default = "one")]
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryConfig {
    pub left: BoundarySide,
    pub right: BoundarySide,
}

impl Default for BoundaryConfig {
    fn default() -> Self {
        let r = BoundarySide::Name("reflective".into());
        Self { left: r.clone(), right: r }
    }
}

/// `"reflective"`, `"vacuum"` or `{ kind = "incident", current = .., p = .. }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySide {
    Name(String),
    Table {
        kind: String,
        #[serde(default)]
        current: f64,
        #[serde(default)]
        p: f64,
    },
}

impl BoundarySide {
    fn resolve(&self) -> Result<BoundaryKind, ConfigError> {
        let (kind, current, p) = match self {
            BoundarySide::Name(n) => (n.as_str(), 0.0, 0.0),
            BoundarySide::Table { kind, current, p } => (kind.as_str(), *current, *p),
        };
        match kind {
            "reflective" => Ok(BoundaryKind::Reflective),
            "vacuum" => Ok(BoundaryKind::Vacuum),
            "incident" => Ok(BoundaryKind::Incident { current, p }),
            other => Err(ConfigError::Invalid(format!("unknown boundary kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: String,
    pub histories: usize,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Census count to comb back to: an integer or `"none"`. Defaults to
    /// the history count.
    #[serde(default)]
    pub population_target: Option<TargetConfig>,
    #[serde(default = "default_filter_k")]
    pub filter_k: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetConfig {
    Count(usize),
    Word(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WindowConfig {
    pub rho: f64,
    pub eps_min: f64,
    pub front_eps: f64,
    pub front_wmin: f64,
    pub front_mod_enabled: bool,
    pub split_cap: u32,
}

impl Default for WindowConfig {
    fn default() -> Self {
        let d = WindowParams::default();
        Self {
            rho: d.rho,
            eps_min: d.eps_min,
            front_eps: d.front_eps,
            front_wmin: d.front_wmin,
            front_mod_enabled: d.front_mod_enabled,
            split_cap: d.split_cap,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn one_u64() -> u64 {
    1
}

fn default_batches() -> usize {
    20
}

fn default_filter_k() -> usize {
    2
}

/// Command-line overrides applied on top of a config.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<RunMode>,
    pub seed: Option<u64>,
    pub histories: Option<usize>,
    pub filter_k: Option<usize>,
    pub rho: Option<f64>,
}

impl Config {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    /// Reads `path`, or the built-in preset when `path` is its name (with or
    /// without `.cfg`) and no such file exists.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let name = path.to_string_lossy();
        if !path.exists() && name.strip_suffix(".cfg").unwrap_or(&name) == PRESET_AZURV1 {
            return Ok(Self::azurv1_impulse());
        }
        let text =
            fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn azurv1_impulse() -> Self {
        Self::parse(AZURV1_TOML).expect("built-in preset parses")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(m) = o.mode {
            self.run.mode = m.name().to_string();
        }
        if let Some(s) = o.seed {
            self.run.seed = s;
        }
        if let Some(n) = o.histories {
            self.run.histories = n;
        }
        if let Some(k) = o.filter_k {
            self.run.filter_k = k;
        }
        if let Some(r) = o.rho {
            self.weight_windows.rho = r;
        }
    }

    pub fn mode(&self) -> Result<RunMode, ConfigError> {
        Ok(self.run.mode.parse::<RunMode>()?)
    }

    /// Builds and validates the problem.
    pub fn to_spec(&self) -> Result<ProblemSpec, ConfigError> {
        let mesh = Mesh1D::uniform(self.mesh.x_min, self.mesh.x_max, self.mesh.cells)?;
        let xs = self.material.cross_sections();
        let time = TimeGrid::uniform(self.time.t_start, self.time.t_end, self.time.steps)?;
        let material = Material::uniform(xs, self.mesh.cells, self.time.steps + 1)?;
        let population_target = match &self.run.population_target {
            None => PopulationTarget::Count(self.run.histories),
            Some(TargetConfig::Count(n)) => PopulationTarget::Count(*n),
            Some(TargetConfig::Word(w)) if w == "none" => PopulationTarget::None,
            Some(TargetConfig::Word(w)) => {
                return Err(ConfigError::Invalid(format!(
                    "population_target must be an integer or \"none\", got `{w}`"
                )))
            }
        };
        let w = &self.weight_windows;
        let spec = ProblemSpec {
            mesh,
            material,
            time,
            speed: self.time.speed,
            source: SourceSpec { position: self.source.position, time: self.time.t_start, weight: self.source.weight },
            left: self.boundary.left.resolve()?,
            right: self.boundary.right.resolve()?,
            mode: self.mode()?,
            windows: WindowParams {
                rho: w.rho,
                eps_min: w.eps_min,
                front_eps: w.front_eps,
                front_wmin: w.front_wmin,
                front_mod_enabled: w.front_mod_enabled,
                split_cap: w.split_cap,
            },
            filter_k: self.run.filter_k,
            n_histories: self.run.histories,
            n_batches: self.run.batches,
            seed: self.run.seed,
            population_target,
        };
        spec.validate()?;
        Ok(spec)
    }
}

pub const AZURV1_TOML: &str = include_str!("../../../configs/azurv1_impulse.cfg");

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_matches_core_constructor() {
        let spec = Config::azurv1_impulse().to_spec().unwrap();
        let core = ProblemSpec::azurv1_impulse(spec.mode, spec.n_histories, spec.seed).unwrap();
        assert_eq!(spec, core);
    }

    #[test]
    fn roundtrip_through_toml() {
        let c = Config::azurv1_impulse();
        assert_eq!(Config::parse(&c.to_toml()).unwrap(), c);
    }
}
